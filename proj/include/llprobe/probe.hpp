#pragma once

// Probe-matrix construction and analysis.
//
// A probe matrix G (m x c) is the block of crafted guesses placed over the
// examples under attack. Each of the c^m possible labelings of those rows
// induces a mean log-loss; this "loss spectrum" is the codebook the attacker
// decodes against, and its smallest gap (the quality) bounds how coarse the
// oracle's reply may be before two labelings become indistinguishable.
//
// Labelings are encoded as base-c integers with row 0 as the most
// significant digit, so numeric order is lexicographic labeling order.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "llprobe/core.hpp"
#include "llprobe/random.hpp"

namespace llprobe {

inline constexpr std::uint64_t default_enumeration_cap = 10'000'000;
inline constexpr double probe_row_sum_tolerance = 1e-9;

using Labeling = std::vector<std::size_t>;

/// m x c block of guesses with stochastic rows bounded away from 0 and 1.
class ProbeMatrix {
public:
    /// `floor` is the construction-time minimum entry; it should be at least
    /// the target oracle's clamp gamma so the scorer never alters the block.
    ProbeMatrix(std::size_t classes, std::vector<double> entries, double floor = default_gamma)
        : classes_(classes), floor_(floor), entries_(std::move(entries)) {
        if (classes_ < 2) throw dimension_error("probe matrix needs at least 2 classes");
        if (entries_.empty() || entries_.size() % classes_ != 0)
            throw dimension_error("probe entries do not form whole rows of " +
                                  std::to_string(classes_));
        if (!(floor_ > 0.0 && floor_ < 1.0 / static_cast<double>(classes_)))
            throw domain_error("probe floor must lie in (0, 1/c)");
        rows_ = entries_.size() / classes_;
        for (std::size_t i = 0; i < rows_; ++i) {
            double sum = 0.0;
            for (std::size_t j = 0; j < classes_; ++j) {
                const double v = (*this)(i, j);
                if (!(v >= floor_ && v <= 1.0 - floor_))
                    throw domain_error("probe entry (" + std::to_string(i) + "," +
                                       std::to_string(j) + ") outside [floor, 1 - floor]");
                sum += v;
            }
            if (std::abs(sum - 1.0) > probe_row_sum_tolerance)
                throw domain_error("probe row " + std::to_string(i) + " does not sum to 1");
        }
    }

    /// Divides each row by its sum before validating.
    static ProbeMatrix normalized(std::size_t classes, std::vector<double> entries,
                                  double floor = default_gamma) {
        if (classes == 0 || entries.size() % classes != 0)
            throw dimension_error("probe entries do not form whole rows");
        for (std::size_t start = 0; start < entries.size(); start += classes) {
            double sum = 0.0;
            for (std::size_t j = 0; j < classes; ++j) sum += entries[start + j];
            if (!(sum > 0.0)) throw domain_error("probe row has non-positive sum");
            for (std::size_t j = 0; j < classes; ++j) entries[start + j] /= sum;
        }
        return ProbeMatrix(classes, std::move(entries), floor);
    }

    std::size_t rows() const noexcept { return rows_; }
    std::size_t classes() const noexcept { return classes_; }
    double floor() const noexcept { return floor_; }

    double operator()(std::size_t i, std::size_t j) const { return entries_[i * classes_ + j]; }
    std::span<const double> row(std::size_t i) const {
        return {entries_.data() + i * classes_, classes_};
    }
    std::span<const double> entries() const noexcept { return entries_; }

    /// The first `count` rows, used when the final batch is short.
    ProbeMatrix leading_rows(std::size_t count) const {
        if (count < 1 || count > rows_) throw dimension_error("leading_rows count out of range");
        return ProbeMatrix(classes_,
                           std::vector<double>(entries_.begin(),
                                               entries_.begin() + static_cast<std::ptrdiff_t>(
                                                                      count * classes_)),
                           floor_);
    }

    friend bool operator==(const ProbeMatrix&, const ProbeMatrix&) = default;

private:
    std::size_t classes_;
    std::size_t rows_ = 0;
    double floor_;
    std::vector<double> entries_;
};

/// c^m, or throws enumeration_too_large when it exceeds `cap`.
inline std::uint64_t labeling_count(std::size_t m, std::size_t classes,
                                    std::uint64_t cap = default_enumeration_cap) {
    std::uint64_t count = 1;
    for (std::size_t i = 0; i < m; ++i) {
        if (count > cap / classes)
            throw enumeration_too_large(std::to_string(classes) + "^" + std::to_string(m) +
                                        " labelings exceed the enumeration cap of " +
                                        std::to_string(cap));
        count *= classes;
    }
    return count;
}

inline Labeling decode_labeling(std::uint64_t code, std::size_t m, std::size_t classes) {
    Labeling out(m);
    for (std::size_t i = m; i-- > 0;) {
        out[i] = static_cast<std::size_t>(code % classes);
        code /= classes;
    }
    return out;
}

inline std::uint64_t encode_labeling(std::span<const std::size_t> labels, std::size_t classes) {
    std::uint64_t code = 0;
    for (std::size_t label : labels) code = code * classes + label;
    return code;
}

struct SpectrumEntry {
    std::uint64_t code;
    double loss;
};

namespace detail {

inline std::vector<double> negative_logs(const ProbeMatrix& g) {
    std::vector<double> out(g.entries().size());
    std::transform(g.entries().begin(), g.entries().end(), out.begin(),
                   [](double v) { return -std::log(v); });
    return out;
}

// Visits every base-c digit vector of length `width` in lexicographic order.
template <class Visit>
void for_each_digits(std::size_t width, std::size_t classes, Visit&& visit) {
    std::vector<std::size_t> digits(width, 0);
    for (;;) {
        visit(std::span<const std::size_t>(digits));
        std::size_t pos = width;
        while (pos > 0) {
            --pos;
            if (++digits[pos] < classes) break;
            digits[pos] = 0;
            if (pos == 0) return;
        }
        if (width == 0) return;
    }
}

} // namespace detail

/// Mean loss of every labeling of the probed rows, in labeling (code) order.
///
/// Summation matches log_loss() term for term, so an entry equals
/// log_loss(labeling, probe rows) exactly.
inline std::vector<SpectrumEntry> loss_table(const ProbeMatrix& g,
                                             std::uint64_t cap = default_enumeration_cap) {
    const std::size_t m = g.rows();
    const std::size_t c = g.classes();
    const std::uint64_t count = labeling_count(m, c, cap);
    const std::vector<double> neg_log = detail::negative_logs(g);
    std::vector<SpectrumEntry> table;
    table.reserve(count);
    std::uint64_t code = 0;
    detail::for_each_digits(m, c, [&](std::span<const std::size_t> digits) {
        detail::CompensatedSum sum;
        for (std::size_t i = 0; i < m; ++i) sum.add(neg_log[i * c + digits[i]]);
        table.push_back({code++, sum.value() / static_cast<double>(m)});
    });
    return table;
}

/// loss_table() sorted by loss; equal losses stay in labeling order.
inline std::vector<SpectrumEntry> loss_spectrum(const ProbeMatrix& g,
                                                std::uint64_t cap = default_enumeration_cap) {
    std::vector<SpectrumEntry> spectrum = loss_table(g, cap);
    std::stable_sort(spectrum.begin(), spectrum.end(),
                     [](const SpectrumEntry& a, const SpectrumEntry& b) { return a.loss < b.loss; });
    return spectrum;
}

struct QualityReport {
    double quality = 0.0;
    std::uint64_t spectrum_size = 0; // hypotheses enumerated
    Labeling first;                  // the closest pair of labelings
    Labeling second;
    std::vector<std::uint8_t> mask;  // selecting mask (Q~ only)
};

/// Smallest gap between the losses of two distinct labelings.
inline QualityReport quality_Q(const ProbeMatrix& g, std::uint64_t cap = default_enumeration_cap) {
    const auto spectrum = loss_spectrum(g, cap);
    QualityReport report;
    report.spectrum_size = spectrum.size();
    report.quality = std::numeric_limits<double>::infinity();
    std::size_t at = 0;
    for (std::size_t i = 1; i < spectrum.size(); ++i) {
        const double gap = spectrum[i].loss - spectrum[i - 1].loss;
        if (gap < report.quality) {
            report.quality = gap;
            at = i;
        }
    }
    report.first = decode_labeling(spectrum[at - 1].code, g.rows(), g.classes());
    report.second = decode_labeling(spectrum[at].code, g.rows(), g.classes());
    return report;
}

namespace detail {

// (c+1)^m effective subset hypotheses: a mask plus labels of the selected rows.
inline std::uint64_t subset_hypothesis_count(std::size_t m, std::size_t classes,
                                             std::uint64_t cap) {
    std::uint64_t count = 1;
    for (std::size_t i = 0; i < m; ++i) {
        if (count > cap / (classes + 1))
            throw enumeration_too_large("subset hypotheses exceed the enumeration cap");
        count *= classes + 1;
    }
    return count;
}

// Mask bits are stored row 0 first; mask_code has row 0 as its most
// significant bit so that numeric order is lexicographic mask order.
inline std::vector<std::uint8_t> mask_bits(std::uint64_t mask_code, std::size_t m) {
    std::vector<std::uint8_t> bits(m);
    for (std::size_t i = 0; i < m; ++i) bits[i] = (mask_code >> (m - 1 - i)) & 1U;
    return bits;
}

} // namespace detail

/// Subset-attack quality: the smallest gap of
///   f~(z, Y) = -(1/m) sum_i z_i ln g[i][y_i]
/// between labelings Y != Y' under the same non-zero mask z, counting only
/// pairs that differ on a selected row. Pairs differing only on masked-out
/// rows (and z = 0) always tie and are excluded.
inline QualityReport quality_Qtilde(const ProbeMatrix& g,
                                    std::uint64_t cap = default_enumeration_cap) {
    const std::size_t m = g.rows();
    const std::size_t c = g.classes();
    if (m >= 63) throw enumeration_too_large("too many probe rows for mask enumeration");
    QualityReport report;
    report.spectrum_size = detail::subset_hypothesis_count(m, c, cap) - 1;
    report.quality = std::numeric_limits<double>::infinity();
    const std::vector<double> neg_log = detail::negative_logs(g);

    std::vector<std::size_t> selected;
    std::vector<SpectrumEntry> values;
    for (std::uint64_t mask = 1; mask < (std::uint64_t{1} << m); ++mask) {
        const auto bits = detail::mask_bits(mask, m);
        selected.clear();
        for (std::size_t i = 0; i < m; ++i)
            if (bits[i]) selected.push_back(i);
        values.clear();
        std::uint64_t code = 0;
        detail::for_each_digits(selected.size(), c, [&](std::span<const std::size_t> digits) {
            detail::CompensatedSum sum;
            for (std::size_t r = 0; r < selected.size(); ++r)
                sum.add(neg_log[selected[r] * c + digits[r]]);
            values.push_back({code++, sum.value() / static_cast<double>(m)});
        });
        std::stable_sort(values.begin(), values.end(),
                         [](const SpectrumEntry& a, const SpectrumEntry& b) { return a.loss < b.loss; });
        for (std::size_t i = 1; i < values.size(); ++i) {
            const double gap = values[i].loss - values[i - 1].loss;
            if (gap < report.quality) {
                report.quality = gap;
                report.mask = bits;
                auto expand = [&](std::uint64_t sub_code) {
                    Labeling full(m, 0);
                    const Labeling sub = decode_labeling(sub_code, selected.size(), c);
                    for (std::size_t r = 0; r < selected.size(); ++r) full[selected[r]] = sub[r];
                    return full;
                };
                report.first = expand(values[i - 1].code);
                report.second = expand(values[i].code);
            }
        }
    }
    return report;
}

/// Alternative readings of the subset-attack quality, all normalized by 1/m.
struct QtildeCandidates {
    double same_mask;       // quality_Qtilde: same z on both sides
    double cross_mask;      // f~ over all distinct (z, Y restricted to z), z = 0 included
    double decoding_margin; // as cross_mask, on f~ - (|z|/m) ln c: the decoder's own objective
};

inline QtildeCandidates qtilde_candidates(const ProbeMatrix& g,
                                          std::uint64_t cap = default_enumeration_cap) {
    const std::size_t m = g.rows();
    const std::size_t c = g.classes();
    const std::uint64_t count = detail::subset_hypothesis_count(m, c, cap);
    const std::vector<double> neg_log = detail::negative_logs(g);
    const double ln_c = uniform_row_loss(c);

    std::vector<double> plain;
    std::vector<double> offset;
    plain.reserve(count);
    offset.reserve(count);
    std::vector<std::size_t> selected;
    for (std::uint64_t mask = 0; mask < (std::uint64_t{1} << m); ++mask) {
        const auto bits = detail::mask_bits(mask, m);
        selected.clear();
        for (std::size_t i = 0; i < m; ++i)
            if (bits[i]) selected.push_back(i);
        detail::for_each_digits(selected.size(), c, [&](std::span<const std::size_t> digits) {
            detail::CompensatedSum sum;
            for (std::size_t r = 0; r < selected.size(); ++r)
                sum.add(neg_log[selected[r] * c + digits[r]]);
            const double s = sum.value();
            plain.push_back(s / static_cast<double>(m));
            offset.push_back((s - static_cast<double>(selected.size()) * ln_c) /
                             static_cast<double>(m));
        });
    }
    auto min_gap = [](std::vector<double>& v) {
        std::sort(v.begin(), v.end());
        double best = std::numeric_limits<double>::infinity();
        for (std::size_t i = 1; i < v.size(); ++i) best = std::min(best, v[i] - v[i - 1]);
        return best;
    };
    return {quality_Qtilde(g, cap).quality, min_gap(plain), min_gap(offset)};
}

/// Upper bound on the quality of any m x c probe whose entries are >= gamma:
/// (ln(1 - (c-1) gamma) - ln gamma) / (c^m - 1).
inline double delta_bound(std::size_t m, std::size_t classes, double gamma) {
    if (classes < 2 || m < 1) throw dimension_error("delta_bound needs m >= 1 and c >= 2");
    if (!(gamma > 0.0 && gamma < 1.0 / static_cast<double>(classes)))
        throw domain_error("gamma must lie in (0, 1/c)");
    const double spread = std::log1p(-static_cast<double>(classes - 1) * gamma) - std::log(gamma);
    return spread / (std::pow(static_cast<double>(classes), static_cast<double>(m)) - 1.0);
}

inline constexpr int max_row_resamples = 1000;

/// Random probe by the log-scale heuristic: entry j < c-1 of each row is
/// a * 10^b with a ~ U[0,1), b ~ U{-14..0}; the last entry is a ~ U[0,1);
/// the row is then normalized. Rows with an entry outside
/// [floor, 1 - floor] after normalization are redrawn.
inline ProbeMatrix sample_probe_heuristic(std::size_t m, std::size_t classes, std::uint64_t seed,
                                          double floor = default_gamma) {
    if (m < 1 || classes < 2) throw dimension_error("probe needs m >= 1 and c >= 2");
    Rng rng(seed);
    std::vector<double> entries(m * classes);
    for (std::size_t i = 0; i < m; ++i) {
        std::span<double> row(entries.data() + i * classes, classes);
        bool accepted = false;
        for (int attempt = 0; attempt < max_row_resamples && !accepted; ++attempt) {
            double sum = 0.0;
            for (std::size_t j = 0; j < classes; ++j) {
                const double a = rng.uniform01();
                const int b = j + 1 < classes ? static_cast<int>(rng.uniform_int(-14, 0)) : 0;
                // a * 10^b, divided by the exact power so b = 0 leaves a untouched
                row[j] = a / detail::powers_of_ten[static_cast<std::size_t>(-b)];
                sum += row[j];
            }
            if (!(sum > 0.0)) continue;
            accepted = true;
            for (double& v : row) {
                v /= sum;
                if (!(v >= floor && v <= 1.0 - floor)) accepted = false;
            }
        }
        if (!accepted)
            throw domain_error("could not sample a probe row above the floor in " +
                               std::to_string(max_row_resamples) + " attempts");
    }
    return ProbeMatrix(classes, std::move(entries), floor);
}

enum class ProbeObjective { Q, Qtilde };

inline QualityReport evaluate_quality(const ProbeMatrix& g, ProbeObjective objective,
                                      std::uint64_t cap = default_enumeration_cap) {
    return objective == ProbeObjective::Q ? quality_Q(g, cap) : quality_Qtilde(g, cap);
}

/// Seed of trial `index` in a Monte-Carlo search.
inline std::uint64_t trial_seed(std::uint64_t seed, std::uint64_t index) {
    return derive_seed(seed, index);
}

struct SearchResult {
    ProbeMatrix probe;
    QualityReport report;
    std::size_t best_trial = 0;
};

/// Best of `trials` heuristic samples under `objective`; earliest trial
/// wins ties.
inline SearchResult monte_carlo_search(std::size_t m, std::size_t classes, std::size_t trials,
                                       std::uint64_t seed,
                                       ProbeObjective objective = ProbeObjective::Q,
                                       double floor = default_gamma,
                                       std::uint64_t cap = default_enumeration_cap) {
    if (trials < 1) throw domain_error("monte_carlo_search needs at least one trial");
    std::optional<SearchResult> best;
    for (std::size_t t = 0; t < trials; ++t) {
        ProbeMatrix candidate = sample_probe_heuristic(m, classes, trial_seed(seed, t), floor);
        QualityReport report = evaluate_quality(candidate, objective, cap);
        if (!best || report.quality > best->report.quality)
            best = SearchResult{std::move(candidate), std::move(report), t};
    }
    return std::move(*best);
}

} // namespace llprobe
