#pragma once

// CSV and text formats. All output is locale-independent: '.' decimal
// separator, LF line endings, doubles printed through std::to_chars.

#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <span>
#include <string>
#include <string_view>
#include <system_error>
#include <utility>
#include <vector>

#include "llprobe/attack_full.hpp"
#include "llprobe/attack_subset.hpp"
#include "llprobe/core.hpp"
#include "llprobe/probe.hpp"

namespace llprobe::io {

/// 17 significant digits: parses back to the same double.
inline std::string format_g17(double v) {
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::general, 17);
    return {buf, res.ptr};
}

/// Shortest text that parses back to the same double.
inline std::string format_shortest(double v) {
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof buf, v);
    return {buf, res.ptr};
}

/// Fixed notation with `digits` places, e.g. a reply at p = 5 as "0.00000".
inline std::string format_fixed(double v, int digits) {
    char buf[128];
    auto res = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::fixed, digits);
    return {buf, res.ptr};
}

inline double parse_double(std::string_view text) {
    while (!text.empty() && (text.front() == ' ' || text.front() == '\t')) text.remove_prefix(1);
    while (!text.empty() && (text.back() == ' ' || text.back() == '\t')) text.remove_suffix(1);
    double v = 0.0;
    auto res = std::from_chars(text.data(), text.data() + text.size(), v);
    if (res.ec != std::errc{} || res.ptr != text.data() + text.size() || !std::isfinite(v))
        throw parse_error("not a finite number: '" + std::string(text) + "'");
    return v;
}

inline std::size_t parse_index(std::string_view text) {
    while (!text.empty() && (text.front() == ' ' || text.front() == '\t')) text.remove_prefix(1);
    while (!text.empty() && (text.back() == ' ' || text.back() == '\t')) text.remove_suffix(1);
    std::size_t v = 0;
    auto res = std::from_chars(text.data(), text.data() + text.size(), v);
    if (res.ec != std::errc{} || res.ptr != text.data() + text.size() || text.empty())
        throw parse_error("not a non-negative integer: '" + std::string(text) + "'");
    return v;
}

inline std::vector<std::string_view> split_fields(std::string_view line, char sep = ',') {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    for (;;) {
        const std::size_t pos = line.find(sep, start);
        if (pos == std::string_view::npos) {
            out.push_back(line.substr(start));
            return out;
        }
        out.push_back(line.substr(start, pos - start));
        start = pos + 1;
    }
}

/// Reads data lines, dropping a trailing '\r' and skipping blank lines.
inline std::vector<std::string> read_lines(std::istream& in) {
    std::vector<std::string> lines;
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (!line.empty()) lines.push_back(std::move(line));
    }
    return lines;
}

inline std::ifstream open_input(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw parse_error("cannot open '" + path + "'");
    return in;
}

inline std::ofstream open_output(const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw parse_error("cannot write '" + path + "'");
    return out;
}

// ---- probe CSV: m rows, c columns, no header ----

/// Rows must sum to 1 within 1e-6 (published matrices carry ~9 digits).
/// Rows further than 1e-9 from 1 are re-normalized; otherwise the file is
/// taken verbatim, so a written probe reads back bit for bit.
inline ProbeMatrix read_probe_csv(std::istream& in, double floor = default_gamma) {
    std::vector<double> entries;
    std::size_t classes = 0;
    bool exact = true;
    for (const auto& line : read_lines(in)) {
        const auto fields = split_fields(line);
        if (classes == 0) classes = fields.size();
        if (fields.size() != classes) throw parse_error("probe CSV rows differ in width");
        double sum = 0.0;
        for (auto f : fields) {
            entries.push_back(parse_double(f));
            sum += entries.back();
        }
        if (std::abs(sum - 1.0) > 1e-6) throw parse_error("probe CSV row does not sum to 1");
        exact = exact && std::abs(sum - 1.0) <= probe_row_sum_tolerance;
    }
    if (entries.empty()) throw parse_error("probe CSV is empty");
    if (exact) return ProbeMatrix(classes, std::move(entries), floor);
    return ProbeMatrix::normalized(classes, std::move(entries), floor);
}

inline ProbeMatrix read_probe_csv(const std::string& path, double floor = default_gamma) {
    auto in = open_input(path);
    return read_probe_csv(in, floor);
}

inline void write_probe_csv(std::ostream& out, const ProbeMatrix& g) {
    for (std::size_t i = 0; i < g.rows(); ++i) {
        for (std::size_t j = 0; j < g.classes(); ++j) {
            if (j) out << ',';
            out << format_g17(g(i, j));
        }
        out << '\n';
    }
}

// ---- truth CSV: header "id,label" ----

struct LabeledSet {
    std::vector<std::string> ids;
    LabelMatrix labels;
};

inline LabeledSet read_truth_csv(std::istream& in, std::size_t classes) {
    const auto lines = read_lines(in);
    if (lines.empty()) throw parse_error("truth CSV is empty");
    const auto header = split_fields(lines.front());
    if (header.size() != 2 || header[0] != "id" || header[1] != "label")
        throw parse_error("truth CSV header must be 'id,label'");
    std::vector<std::string> ids;
    std::vector<std::size_t> labels;
    for (std::size_t r = 1; r < lines.size(); ++r) {
        const auto fields = split_fields(lines[r]);
        if (fields.size() != 2)
            throw parse_error("truth CSV line " + std::to_string(r + 1) + " has " +
                              std::to_string(fields.size()) + " columns, expected 2");
        ids.emplace_back(fields[0]);
        labels.push_back(parse_index(fields[1]));
        if (labels.back() >= classes)
            throw parse_error("truth label out of range on line " + std::to_string(r + 1));
    }
    if (labels.empty()) throw parse_error("truth CSV has no rows");
    return {std::move(ids), LabelMatrix(classes, std::move(labels))};
}

inline LabeledSet read_truth_csv(const std::string& path, std::size_t classes) {
    auto in = open_input(path);
    return read_truth_csv(in, classes);
}

inline void write_labels_csv(std::ostream& out, std::span<const std::string> ids,
                             std::span<const std::size_t> labels) {
    out << "id,label\n";
    for (std::size_t i = 0; i < labels.size(); ++i) out << ids[i] << ',' << labels[i] << '\n';
}

inline std::vector<std::string> index_ids(std::size_t n) {
    std::vector<std::string> ids(n);
    for (std::size_t i = 0; i < n; ++i) ids[i] = std::to_string(i);
    return ids;
}

// ---- submission CSV: header "id,class_0,...,class_{c-1}" ----

struct Submission {
    std::vector<std::string> ids;
    GuessMatrix guesses;
};

inline Submission read_submission_csv(std::istream& in) {
    const auto lines = read_lines(in);
    if (lines.empty()) throw parse_error("submission is empty");
    const auto header = split_fields(lines.front());
    if (header.size() < 3 || header[0] != "id")
        throw parse_error("submission header must be 'id,class_0,...'");
    const std::size_t classes = header.size() - 1;
    for (std::size_t j = 0; j < classes; ++j)
        if (header[j + 1] != "class_" + std::to_string(j))
            throw parse_error("submission header column " + std::to_string(j + 1) +
                              " must be class_" + std::to_string(j));
    const std::size_t n = lines.size() - 1;
    if (n == 0) throw parse_error("submission has no rows");
    std::vector<std::string> ids;
    std::vector<double> data;
    data.reserve(n * classes);
    for (std::size_t r = 1; r < lines.size(); ++r) {
        const auto fields = split_fields(lines[r]);
        if (fields.size() != classes + 1)
            throw parse_error("submission line " + std::to_string(r + 1) + " has " +
                              std::to_string(fields.size()) + " columns");
        ids.emplace_back(fields[0]);
        for (std::size_t j = 0; j < classes; ++j) {
            const double v = parse_double(fields[j + 1]);
            if (v < 0.0 || v > 1.0)
                throw parse_error("submission probability outside [0,1] on line " +
                                  std::to_string(r + 1));
            data.push_back(v);
        }
    }
    return {std::move(ids), GuessMatrix(n, classes, std::move(data))};
}

inline Submission read_submission_csv(const std::string& path) {
    auto in = open_input(path);
    return read_submission_csv(in);
}

inline void write_submission_csv(std::ostream& out, std::span<const std::string> ids,
                                 const GuessMatrix& guesses) {
    out << "id";
    for (std::size_t j = 0; j < guesses.classes(); ++j) out << ",class_" << j;
    out << '\n';
    for (std::size_t i = 0; i < guesses.rows(); ++i) {
        out << ids[i];
        for (double v : guesses.row(i)) out << ',' << format_g17(v);
        out << '\n';
    }
}

// ---- attack telemetry ----

inline void write_rounds_csv(std::ostream& out, std::span<const RoundLog> rounds) {
    out << "round,k,m,reported_loss,batch_loss,epsilon,margin,labels\n";
    for (const auto& r : rounds) {
        out << r.round << ',' << r.k << ',' << r.m_effective << ','
            << format_shortest(r.reported_loss) << ',' << format_shortest(r.batch_loss) << ','
            << format_shortest(r.epsilon) << ',' << format_shortest(r.margin) << ',';
        for (std::size_t i = 0; i < r.decoded_labels.size(); ++i) {
            if (i) out << ';';
            // unclaimed rows of a subset round stay empty
            if (r.mask.empty() || r.mask[i]) out << r.decoded_labels[i];
        }
        out << '\n';
    }
}

/// query_index,reported_loss: the loss-progression series.
inline void write_progression_csv(std::ostream& out, std::span<const double> losses) {
    out << "query_index,reported_loss\n";
    for (std::size_t i = 0; i < losses.size(); ++i)
        out << i + 1 << ',' << format_shortest(losses[i]) << '\n';
}

inline void write_claims_csv(std::ostream& out, std::span<const std::string> ids,
                             const ClaimedLabels& claims) {
    out << "id,claimed_member,claimed_label\n";
    for (std::size_t i = 0; i < claims.size(); ++i) {
        out << ids[i] << ',' << (claims[i].member ? 1 : 0) << ',';
        if (claims[i].label) out << *claims[i].label;
        out << '\n';
    }
}

inline ClaimedLabels read_claims_csv(std::istream& in) {
    const auto lines = read_lines(in);
    if (lines.empty() || lines.front() != "id,claimed_member,claimed_label")
        throw parse_error("claims header must be 'id,claimed_member,claimed_label'");
    ClaimedLabels claims;
    for (std::size_t r = 1; r < lines.size(); ++r) {
        const auto fields = split_fields(lines[r]);
        if (fields.size() != 3) throw parse_error("claims line " + std::to_string(r + 1));
        Claim claim;
        claim.member = parse_index(fields[1]) != 0;
        if (!fields[2].empty()) claim.label = parse_index(fields[2]);
        if (claim.member != claim.label.has_value())
            throw parse_error("claims line " + std::to_string(r + 1) +
                              ": a label must be present exactly when claimed_member is 1");
        claims.push_back(claim);
    }
    return claims;
}

/// Flat "key = value" record, one pair per line.
inline void write_metrics(std::ostream& out, const InferenceMetrics& m) {
    auto opt = [](const std::optional<double>& v) { return v ? format_shortest(*v) : "NA"; };
    out << "claims = " << m.claims << '\n'
        << "correct = " << m.correct << '\n'
        << "claimed_members = " << m.claimed_members << '\n'
        << "evaluated = " << m.evaluated << '\n'
        << "accuracy = " << opt(m.accuracy) << '\n'
        << "membership_precision = " << opt(m.membership_precision) << '\n'
        << "membership_recall = " << format_shortest(m.membership_recall) << '\n'
        << "coverage = " << format_shortest(m.coverage) << '\n';
}

} // namespace llprobe::io
