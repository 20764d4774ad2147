#pragma once

// Label inference against an oracle that scores only a fixed hidden subset
// of s rows.
//
// 1. Find one scored row: probe single rows (all others uniform) until the
//    reply moves away from the all-uniform loss.
// 2. From that reply, solve for s (and the row's label) by exhaustive scan.
// 3. Sweep the test set in batches of m probed rows, everything else
//    uniform, decoding each reply jointly over labelings and membership
//    masks z. Labels are claimed only for rows decoded as scored (z_i = 1).

#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <span>
#include <vector>

#include "llprobe/attack_full.hpp"
#include "llprobe/core.hpp"
#include "llprobe/oracle.hpp"
#include "llprobe/probe.hpp"
#include "llprobe/random.hpp"

namespace llprobe {

struct MembershipMask {
    std::vector<std::uint8_t> bits;

    std::size_t count() const noexcept {
        std::size_t total = 0;
        for (auto b : bits) total += b;
        return total;
    }
    friend bool operator==(const MembershipMask&, const MembershipMask&) = default;
};

struct SubsetInference {
    std::size_t member_index = 0;
    std::size_t s_estimate = 0;
    std::size_t member_label_estimate = 0;
    std::size_t queries_spent = 0; // spent locating the member
};

struct Claim {
    std::optional<std::size_t> label; // present iff member
    bool member = false;
};

using ClaimedLabels = std::vector<Claim>;

/// Default single-row membership probe: c-1 entries at the clamp floor and
/// the remaining mass on the last class. Replies from scored rows labelled
/// with a floor class land above the uniform loss, by the largest margin
/// any guess allows; a last-class row lands below it.
inline std::vector<double> default_membership_row(std::size_t classes, double gamma) {
    std::vector<double> row(classes, gamma);
    row.back() = 1.0 - static_cast<double>(classes - 1) * gamma;
    return row;
}

struct MemberHit {
    std::size_t index = 0;
    OracleReply reply;
    std::size_t queries = 0;
};

/// Probes candidate rows in a seeded random order until a reply differs from
/// the all-uniform loss. Throws budget_exhausted, or resolution_failure when
/// no row moves the rounded reply.
inline MemberHit find_member(ScoringOracle& oracle, std::span<const double> probe_row,
                             std::uint64_t order_seed) {
    const std::size_t n = oracle.rows();
    const std::size_t c = oracle.classes();
    if (probe_row.size() != c) throw dimension_error("membership probe row has wrong length");
    for (double v : probe_row)
        if (!(v > 0.0 && v < 1.0) || v == 1.0 / static_cast<double>(c))
            throw domain_error("membership probe entries must lie in (0,1) and differ from 1/c");

    const double baseline = round_loss(uniform_row_loss(c), oracle.precision());
    GuessMatrix submission = GuessMatrix::uniform(n, c);
    const double uniform = 1.0 / static_cast<double>(c);
    Rng rng(order_seed);
    std::size_t queries = 0;
    for (std::size_t candidate : rng.permutation(n)) {
        auto row = submission.row(candidate);
        std::copy(probe_row.begin(), probe_row.end(), row.begin());
        const OracleReply reply = oracle.query(submission);
        ++queries;
        if (reply.loss != baseline) return {candidate, reply, queries};
        std::fill(row.begin(), row.end(), uniform);
    }
    throw resolution_failure("no row moved the oracle's rounded reply away from ln c");
}

/// Solves the single-member reply for the subset size: scans s = 1..n and
/// the member's label y, minimizing |((s-1) ln c - ln row[y]) / s - reply|.
/// Ties go to the smallest s, then the smallest y.
inline SubsetInference infer_s(double reply_loss, std::span<const double> probe_row,
                               std::size_t n, std::size_t classes) {
    if (probe_row.size() != classes) throw dimension_error("probe row has wrong length");
    if (n < 1) throw dimension_error("n must be >= 1");
    const double u = uniform_row_loss(classes);
    SubsetInference out;
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t s = 1; s <= n; ++s) {
        const double others = static_cast<double>(s - 1) * u;
        for (std::size_t y = 0; y < classes; ++y) {
            const double model = (others - std::log(probe_row[y])) / static_cast<double>(s);
            const double residual = std::abs(model - reply_loss);
            if (residual < best) {
                best = residual;
                out.s_estimate = s;
                out.member_label_estimate = y;
            }
        }
    }
    return out;
}

struct SubsetDecode {
    Labeling labels; // 0 on rows outside the mask
    MembershipMask mask;
    double residual = 0.0;
    double margin = 0.0;
};

/// Codebook of every distinct (mask, labels-on-masked-rows) hypothesis for
/// one probe: (c+1)^m entries, in lexicographic (mask, labeling) order.
class SubsetDecoder {
public:
    explicit SubsetDecoder(const ProbeMatrix& probe, std::uint64_t cap = default_enumeration_cap)
        : rows_(probe.rows()), classes_(probe.classes()), u_(uniform_row_loss(probe.classes())) {
        const std::size_t m = rows_;
        const std::size_t c = classes_;
        if (m >= 63) throw enumeration_too_large("too many probe rows for mask enumeration");
        hypotheses_.reserve(detail::subset_hypothesis_count(m, c, cap));
        std::vector<double> neg_log(probe.entries().size());
        for (std::size_t i = 0; i < neg_log.size(); ++i) neg_log[i] = -std::log(probe.entries()[i]);

        std::vector<std::size_t> selected;
        for (std::uint64_t mask = 0; mask < (std::uint64_t{1} << m); ++mask) {
            const auto bits = detail::mask_bits(mask, m);
            selected.clear();
            for (std::size_t i = 0; i < m; ++i)
                if (bits[i]) selected.push_back(i);
            detail::for_each_digits(selected.size(), c, [&](std::span<const std::size_t> digits) {
                Hypothesis h;
                h.mask = mask;
                h.members = selected.size();
                h.labels.assign(m, 0);
                detail::CompensatedSum sum;
                for (std::size_t r = 0; r < selected.size(); ++r) {
                    h.labels[selected[r]] = digits[r];
                    sum.add(neg_log[selected[r] * c + digits[r]]);
                }
                h.member_loss = sum.value();
                hypotheses_.push_back(std::move(h));
            });
        }
    }

    /// Hypothesis whose predicted reply is nearest `reply_loss` given s
    /// scored rows. Hypotheses with more members than s are skipped.
    SubsetDecode decode(double reply_loss, std::size_t s) const {
        if (s < 1) throw domain_error("subset size must be >= 1");
        const double s_real = static_cast<double>(s);
        double best = std::numeric_limits<double>::infinity();
        double runner_up = std::numeric_limits<double>::infinity();
        const Hypothesis* winner = nullptr;
        for (const auto& h : hypotheses_) {
            if (h.members > s) continue;
            const double model =
                (h.member_loss + static_cast<double>(s - h.members) * u_) / s_real;
            const double residual = std::abs(model - reply_loss);
            if (residual < best) {
                runner_up = best;
                best = residual;
                winner = &h;
            } else if (residual < runner_up) {
                runner_up = residual;
            }
        }
        SubsetDecode out;
        out.labels = winner->labels;
        out.mask.bits = detail::mask_bits(winner->mask, rows_);
        out.residual = best;
        out.margin = runner_up - best;
        return out;
    }

    std::size_t rows() const noexcept { return rows_; }
    std::size_t size() const noexcept { return hypotheses_.size(); }

private:
    struct Hypothesis {
        std::uint64_t mask = 0;
        std::size_t members = 0;
        Labeling labels;
        double member_loss = 0.0; // -sum over masked rows of ln g[i][y_i]
    };

    std::size_t rows_;
    std::size_t classes_;
    double u_;
    std::vector<Hypothesis> hypotheses_;
};

inline SubsetDecode decode_subset_batch(double reply_loss, const ProbeMatrix& probe,
                                        std::size_t s,
                                        std::uint64_t cap = default_enumeration_cap) {
    return SubsetDecoder(probe, cap).decode(reply_loss, s);
}

struct SubsetAttackOptions {
    std::optional<std::vector<double>> membership_row; // default_membership_row() when empty
};

struct SubsetAttackResult {
    ClaimedLabels claims;
    std::optional<SubsetInference> inference; // empty if no member was found
    std::vector<RoundLog> rounds;
    std::size_t queries_used = 0;
    StopReason stop = StopReason::Complete;
    bool resolution_failed = false;
};

/// Full subset attack: locate a member, infer s, then sweep all n rows in
/// batches of probe.rows(). Stops early (partial claims) when the budget
/// runs out.
inline SubsetAttackResult run_subset_attack(ScoringOracle& oracle, const ProbeMatrix& probe,
                                            std::uint64_t order_seed,
                                            const SubsetAttackOptions& options = {}) {
    const std::size_t n = oracle.rows();
    const std::size_t c = oracle.classes();
    if (probe.classes() != c) throw dimension_error("probe class count mismatch");

    SubsetAttackResult result;
    result.claims.assign(n, Claim{});
    const std::size_t queries_before = oracle.queries_used();
    auto finish = [&](StopReason why) {
        result.stop = why;
        result.queries_used = oracle.queries_used() - queries_before;
        return result;
    };

    const std::vector<double> row = options.membership_row
                                        ? *options.membership_row
                                        : default_membership_row(c, oracle.clamp_policy().gamma);
    MemberHit hit;
    try {
        hit = find_member(oracle, row, order_seed);
    } catch (const budget_exhausted&) {
        return finish(StopReason::BudgetExhausted);
    } catch (const resolution_failure&) {
        result.resolution_failed = true;
        return finish(StopReason::Complete);
    }
    SubsetInference inference = infer_s(hit.reply.loss, row, n, c);
    inference.member_index = hit.index;
    inference.queries_spent = hit.queries;
    result.inference = inference;

    const std::size_t m = probe.rows();
    std::map<std::size_t, SubsetDecoder> decoders;
    GuessMatrix submission = GuessMatrix::uniform(n, c);
    const double uniform = 1.0 / static_cast<double>(c);
    for (std::size_t start = 0; start < n; start += m) {
        const std::size_t m_eff = std::min(m, n - start);
        auto it = decoders.find(m_eff);
        if (it == decoders.end())
            it = decoders
                     .emplace(m_eff, SubsetDecoder(m_eff == m ? probe : probe.leading_rows(m_eff)))
                     .first;
        for (std::size_t i = 0; i < m_eff; ++i) {
            auto src = probe.row(i);
            std::copy(src.begin(), src.end(), submission.row(start + i).begin());
        }
        OracleReply reply;
        try {
            reply = oracle.query(submission);
        } catch (const budget_exhausted&) {
            return finish(StopReason::BudgetExhausted);
        }
        for (std::size_t i = 0; i < m_eff; ++i) {
            auto dst = submission.row(start + i);
            std::fill(dst.begin(), dst.end(), uniform);
        }

        const SubsetDecode decoded = it->second.decode(reply.loss, inference.s_estimate);
        RoundLog log;
        log.round = result.rounds.size() + 1;
        log.k = start;
        log.m_effective = m_eff;
        log.reported_loss = reply.loss;
        log.batch_loss = reply.loss;
        log.decoded_labels = decoded.labels;
        log.mask = decoded.mask.bits;
        log.epsilon = decoded.residual;
        log.margin = decoded.margin;
        result.rounds.push_back(std::move(log));
        for (std::size_t i = 0; i < m_eff; ++i) {
            if (decoded.mask.bits[i]) result.claims[start + i] = Claim{decoded.labels[i], true};
        }
    }
    return finish(StopReason::Complete);
}

struct InferenceMetrics {
    std::size_t claims = 0;
    std::size_t correct = 0;
    std::size_t claimed_members = 0; // claims that are truly scored rows
    std::size_t evaluated = 0;       // s
    std::optional<double> accuracy;  // correct / claims
    std::optional<double> membership_precision;
    double membership_recall = 0.0;  // claimed_members / s
    double coverage = 0.0;           // claims / s
};

inline InferenceMetrics score_inference(const ClaimedLabels& claims, const LabelMatrix& truth,
                                        std::span<const std::size_t> evaluated_set) {
    if (claims.size() != truth.rows()) throw dimension_error("claims and truth differ in length");
    std::vector<std::uint8_t> scored(truth.rows(), 0);
    for (std::size_t i : evaluated_set) {
        if (i >= truth.rows()) throw dimension_error("evaluated index out of range");
        scored[i] = 1;
    }
    InferenceMetrics out;
    out.evaluated = evaluated_set.size();
    for (std::size_t i = 0; i < claims.size(); ++i) {
        if (!claims[i].member || !claims[i].label) continue;
        ++out.claims;
        if (*claims[i].label == truth.label(i)) ++out.correct;
        if (scored[i]) ++out.claimed_members;
    }
    if (out.claims > 0) {
        out.accuracy = static_cast<double>(out.correct) / static_cast<double>(out.claims);
        out.membership_precision =
            static_cast<double>(out.claimed_members) / static_cast<double>(out.claims);
    }
    if (out.evaluated > 0) {
        out.membership_recall =
            static_cast<double>(out.claimed_members) / static_cast<double>(out.evaluated);
        out.coverage = static_cast<double>(out.claims) / static_cast<double>(out.evaluated);
    }
    return out;
}

} // namespace llprobe
