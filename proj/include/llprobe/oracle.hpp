#pragma once

// Simulated competition scorer.

#include <algorithm>
#include <cstdint>
#include <optional>
#include <variant>
#include <vector>

#include "llprobe/core.hpp"
#include "llprobe/random.hpp"

namespace llprobe {

struct FullMode {
    friend bool operator==(FullMode, FullMode) = default;
};

/// Only a fixed hidden subset of `size` rows is scored.
struct SubsetMode {
    std::size_t size = 0;
    friend bool operator==(SubsetMode, SubsetMode) = default;
};

using OracleMode = std::variant<FullMode, SubsetMode>;

struct OracleSpec {
    std::size_t n = 0;
    std::size_t classes = 0;
    Precision precision{5};
    ClampPolicy clamp{};
    OracleMode mode = FullMode{};
    std::optional<std::size_t> budget; // unlimited when empty
    std::uint64_t seed = 0;            // drives the subset draw only

    bool is_subset() const noexcept { return std::holds_alternative<SubsetMode>(mode); }

    /// Number of rows the scorer averages over.
    std::size_t evaluated_count() const noexcept {
        if (const auto* sub = std::get_if<SubsetMode>(&mode)) return sub->size;
        return n;
    }

    void validate() const {
        if (n < 1) throw dimension_error("oracle needs n >= 1");
        if (classes < 2) throw dimension_error("oracle needs c >= 2");
        clamp.validate(classes);
        if (const auto* sub = std::get_if<SubsetMode>(&mode))
            if (sub->size < 1 || sub->size > n)
                throw dimension_error("subset size must satisfy 1 <= s <= n");
        if (budget && *budget < 1) throw domain_error("budget, when set, must be >= 1");
    }
};

struct OracleReply {
    double loss = 0.0;           // already rounded to the oracle's precision
    std::size_t query_index = 0; // 1-based position of this query
};

/// What a contestant can see of a scorer: the public competition rules and
/// a query capability. The attacks are written against this interface only.
class ScoringOracle {
public:
    virtual ~ScoringOracle() = default;

    virtual OracleReply query(const GuessMatrix& submission) = 0;

    virtual std::size_t rows() const = 0;
    virtual std::size_t classes() const = 0;
    virtual Precision precision() const = 0;
    virtual ClampPolicy clamp_policy() const = 0;
    virtual std::size_t queries_used() const = 0;
};

/// Holds the hidden truth (and, in subset mode, the hidden evaluated set)
/// and answers submissions with a clamped, rounded mean log-loss.
///
/// Not thread-safe: queries must be serialized by the caller.
class SimulatedOracle final : public ScoringOracle {
public:
    SimulatedOracle(OracleSpec spec, LabelMatrix truth)
        : spec_(std::move(spec)), truth_(std::move(truth)) {
        spec_.validate();
        if (truth_.rows() != spec_.n || truth_.classes() != spec_.classes)
            throw dimension_error("truth shape does not match the oracle spec");
        if (const auto* sub = std::get_if<SubsetMode>(&spec_.mode)) {
            Rng rng(spec_.seed);
            evaluated_ = rng.sample_without_replacement(spec_.n, sub->size);
            std::sort(evaluated_.begin(), evaluated_.end());
        } else {
            evaluated_.resize(spec_.n);
            for (std::size_t i = 0; i < spec_.n; ++i) evaluated_[i] = i;
        }
    }

    OracleReply query(const GuessMatrix& submission) override {
        if (submission.rows() != spec_.n || submission.classes() != spec_.classes)
            throw dimension_error("submission shape does not match the oracle");
        if (spec_.budget && queries_used_ >= *spec_.budget) throw budget_exhausted(queries_used_);
        const double raw = log_loss(truth_, clamp(submission, spec_.clamp), evaluated_);
        ++queries_used_;
        return {round_loss(raw, spec_.precision), queries_used_};
    }

    std::size_t rows() const override { return spec_.n; }
    std::size_t classes() const override { return spec_.classes; }
    Precision precision() const override { return spec_.precision; }
    ClampPolicy clamp_policy() const override { return spec_.clamp; }
    std::size_t queries_used() const override { return queries_used_; }

    // Scorer-side inspection, for the harness and tests. Attacks never get
    // a SimulatedOracle, only a ScoringOracle&.
    const OracleSpec& spec() const noexcept { return spec_; }
    const LabelMatrix& truth() const noexcept { return truth_; }
    /// Sorted 0-based indices of the scored rows (all rows in full mode).
    const std::vector<std::size_t>& evaluated_set() const noexcept { return evaluated_; }

private:
    OracleSpec spec_;
    LabelMatrix truth_;
    std::vector<std::size_t> evaluated_;
    std::size_t queries_used_ = 0;
};

} // namespace llprobe
