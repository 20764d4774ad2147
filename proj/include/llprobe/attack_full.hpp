#pragma once

// Batch label inference against an oracle that scores the whole test set.
//
// Each round submits: rows already inferred as their one-hot labels, the
// next m rows as the probe matrix, every other row as 1/c. The reply fixes
// the mean loss of the m probed rows, which is decoded by exhaustive search
// over the c^m labelings.

#include <map>
#include <optional>
#include <span>
#include <vector>

#include "llprobe/core.hpp"
#include "llprobe/oracle.hpp"
#include "llprobe/probe.hpp"

namespace llprobe {

struct SchedulePhase {
    ProbeMatrix probe;
    std::optional<std::size_t> rounds; // empty: until every row is inferred
};

struct AttackSchedule {
    std::vector<SchedulePhase> phases;

    void validate(std::size_t classes) const {
        if (phases.empty()) throw domain_error("attack schedule has no phases");
        for (const auto& phase : phases) {
            if (phase.probe.classes() != classes)
                throw dimension_error("schedule probe has " +
                                      std::to_string(phase.probe.classes()) +
                                      " classes, oracle has " + std::to_string(classes));
            if (phase.rounds && *phase.rounds < 1)
                throw domain_error("schedule phase round count must be >= 1");
        }
    }
};

/// Telemetry for one oracle query of an attack.
struct RoundLog {
    std::size_t round = 0;       // 1-based
    std::size_t k = 0;           // rows before the probed batch
    std::size_t m_effective = 0; // probed rows this round
    double reported_loss = 0.0;
    double batch_loss = 0.0;     // loss attributed to the probed rows
    std::vector<std::size_t> decoded_labels;
    std::vector<std::uint8_t> mask; // subset attack only: 1 where the row is claimed
    double epsilon = 0.0;        // |batch_loss - loss of the decoded hypothesis|
    double margin = 0.0;         // runner-up epsilon minus epsilon

    bool ambiguous() const noexcept { return margin == 0.0; }
};

enum class StopReason { Complete, BudgetExhausted, Ambiguity, ScheduleExhausted };

struct InferenceResult {
    std::vector<std::size_t> labels; // rows 0..labels.size()-1 are inferred
    std::vector<RoundLog> rounds;
    std::size_t queries_used = 0;
    bool complete = false;
    StopReason stop = StopReason::ScheduleExhausted;
    std::size_t ambiguous_rounds = 0;
};

struct FullAttackOptions {
    bool strict = false; // abort on the first ambiguous decode
};

/// Submission with `inferred` one-hot rows first, then `probe`, then
/// uniform rows up to n.
inline GuessMatrix assemble_submission(std::size_t n, std::size_t classes,
                                       std::span<const std::size_t> inferred,
                                       const ProbeMatrix& probe) {
    const std::size_t k = inferred.size();
    const std::size_t m = probe.rows();
    if (probe.classes() != classes) throw dimension_error("probe class count mismatch");
    if (k + m > n) throw dimension_error("inferred rows plus probe rows exceed n");
    GuessMatrix out = GuessMatrix::uniform(n, classes);
    for (std::size_t i = 0; i < k; ++i) {
        if (inferred[i] >= classes) throw dimension_error("inferred label out of range");
        auto row = out.row(i);
        std::fill(row.begin(), row.end(), 0.0);
        row[inferred[i]] = 1.0;
    }
    for (std::size_t i = 0; i < m; ++i) {
        auto dst = out.row(k + i);
        auto src = probe.row(i);
        std::copy(src.begin(), src.end(), dst.begin());
    }
    return out;
}

/// Submission without a probed batch: one-hot inferred rows, uniform rest.
inline GuessMatrix assemble_submission(std::size_t n, std::size_t classes,
                                       std::span<const std::size_t> inferred) {
    if (inferred.size() > n) throw dimension_error("more inferred rows than n");
    GuessMatrix out = GuessMatrix::uniform(n, classes);
    for (std::size_t i = 0; i < inferred.size(); ++i) {
        if (inferred[i] >= classes) throw dimension_error("inferred label out of range");
        auto row = out.row(i);
        std::fill(row.begin(), row.end(), 0.0);
        row[inferred[i]] = 1.0;
    }
    return out;
}

struct BatchDecode {
    Labeling labels;
    double epsilon = 0.0;
    double margin = 0.0;
};

/// Precomputed codebook for one probe matrix.
class BatchDecoder {
public:
    explicit BatchDecoder(const ProbeMatrix& probe, std::uint64_t cap = default_enumeration_cap)
        : rows_(probe.rows()), classes_(probe.classes()), table_(loss_table(probe, cap)) {}

    /// Labeling whose loss is nearest `batch_loss`; lexicographically
    /// smallest on ties, which then show as margin 0.
    BatchDecode decode(double batch_loss) const {
        double best = std::numeric_limits<double>::infinity();
        double runner_up = std::numeric_limits<double>::infinity();
        std::uint64_t best_code = 0;
        for (const auto& entry : table_) {
            const double eps = std::abs(batch_loss - entry.loss);
            if (eps < best) {
                runner_up = best;
                best = eps;
                best_code = entry.code;
            } else if (eps < runner_up) {
                runner_up = eps;
            }
        }
        return {decode_labeling(best_code, rows_, classes_), best, runner_up - best};
    }

    std::size_t rows() const noexcept { return rows_; }

private:
    std::size_t rows_;
    std::size_t classes_;
    std::vector<SpectrumEntry> table_;
};

inline BatchDecode decode_batch(double batch_loss, const ProbeMatrix& probe,
                                std::uint64_t cap = default_enumeration_cap) {
    return BatchDecoder(probe, cap).decode(batch_loss);
}

/// Runs the schedule against `oracle` until every row is inferred, the
/// schedule ends, the budget runs out, or (strict mode) a decode is ambiguous.
/// A short final batch uses the leading rows of the phase's probe.
inline InferenceResult run_full_attack(ScoringOracle& oracle, const AttackSchedule& schedule,
                                       FullAttackOptions options = {}) {
    const std::size_t n = oracle.rows();
    const std::size_t c = oracle.classes();
    schedule.validate(c);

    InferenceResult result;
    const std::size_t queries_before = oracle.queries_used();
    auto finish = [&](StopReason why) {
        result.stop = why;
        result.complete = result.labels.size() == n;
        result.queries_used = oracle.queries_used() - queries_before;
        return result;
    };

    for (const auto& phase : schedule.phases) {
        std::map<std::size_t, BatchDecoder> decoders; // by batch size
        std::size_t phase_rounds = 0;
        while (result.labels.size() < n && (!phase.rounds || phase_rounds < *phase.rounds)) {
            const std::size_t k = result.labels.size();
            const std::size_t m = std::min(phase.probe.rows(), n - k);
            const ProbeMatrix probe = m == phase.probe.rows() ? phase.probe
                                                              : phase.probe.leading_rows(m);
            auto it = decoders.find(m);
            if (it == decoders.end()) it = decoders.emplace(m, BatchDecoder(probe)).first;

            OracleReply reply;
            try {
                reply = oracle.query(assemble_submission(n, c, result.labels, probe));
            } catch (const budget_exhausted&) {
                return finish(StopReason::BudgetExhausted);
            }
            ++phase_rounds;

            RoundLog log;
            log.round = result.rounds.size() + 1;
            log.k = k;
            log.m_effective = m;
            log.reported_loss = reply.loss;
            log.batch_loss = batch_loss(reply.loss, n, m, k, c);
            BatchDecode decoded = it->second.decode(log.batch_loss);
            log.epsilon = decoded.epsilon;
            log.margin = decoded.margin;
            log.decoded_labels = decoded.labels;
            result.labels.insert(result.labels.end(), decoded.labels.begin(), decoded.labels.end());
            result.rounds.push_back(std::move(log));
            if (result.rounds.back().ambiguous()) {
                ++result.ambiguous_rounds;
                if (options.strict) return finish(StopReason::Ambiguity);
            }
        }
        if (result.labels.size() == n) break;
    }
    return finish(result.labels.size() == n ? StopReason::Complete : StopReason::ScheduleExhausted);
}

/// Worst-case estimation error of a round: reply rounding amplified by n/m,
/// plus the clamp cost of the k one-hot rows.
inline double max_estimation_error(std::size_t n, std::size_t m, std::size_t k,
                                   std::size_t classes, Precision precision, double gamma) {
    return static_cast<double>(n) / (2.0 * static_cast<double>(m)) * precision.step() +
           static_cast<double>(k) / static_cast<double>(m) * inferred_row_cost(classes, gamma);
}

/// Submits every inferred label as a one-hot row ("cash-in").
inline OracleReply submit_inferred(ScoringOracle& oracle, std::span<const std::size_t> labels) {
    if (labels.size() != oracle.rows()) throw dimension_error("cash-in needs a label for every row");
    return oracle.query(assemble_submission(oracle.rows(), oracle.classes(), labels));
}

} // namespace llprobe
