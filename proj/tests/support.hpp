#pragma once

#include <cstdint>
#include <vector>

#include "llprobe/llprobe.hpp"

namespace testing_support {

using namespace llprobe;

inline LabelMatrix random_truth(std::size_t n, std::size_t c, std::uint64_t seed) {
    return harness::generate_truth(n, c, seed);
}

inline OracleSpec full_spec(std::size_t n, std::size_t c, int p,
                            std::optional<std::size_t> budget = std::nullopt) {
    OracleSpec spec;
    spec.n = n;
    spec.classes = c;
    spec.precision = Precision(p);
    spec.budget = budget;
    return spec;
}

inline OracleSpec subset_spec(std::size_t n, std::size_t c, std::size_t s, int p,
                              std::uint64_t seed,
                              std::optional<std::size_t> budget = std::nullopt) {
    OracleSpec spec = full_spec(n, c, p, budget);
    spec.mode = SubsetMode{s};
    spec.seed = seed;
    return spec;
}

// Forwards to another oracle and keeps every submission it saw. Only the
// public ScoringOracle surface is reachable through it.
class RecordingOracle final : public ScoringOracle {
public:
    explicit RecordingOracle(ScoringOracle& inner) : inner_(inner) {}

    OracleReply query(const GuessMatrix& submission) override {
        OracleReply reply = inner_.query(submission);
        seen_.push_back(submission);
        return reply;
    }
    std::size_t rows() const override { return inner_.rows(); }
    std::size_t classes() const override { return inner_.classes(); }
    Precision precision() const override { return inner_.precision(); }
    ClampPolicy clamp_policy() const override { return inner_.clamp_policy(); }
    std::size_t queries_used() const override { return inner_.queries_used(); }

    const std::vector<GuessMatrix>& seen() const { return seen_; }

private:
    ScoringOracle& inner_;
    std::vector<GuessMatrix> seen_;
};

inline AttackSchedule single_phase(ProbeMatrix probe) {
    AttackSchedule schedule;
    schedule.phases.push_back({std::move(probe), std::nullopt});
    return schedule;
}

// m = 1 twice, then G4 for 30 rounds, then G6 to the end.
inline AttackSchedule heist_schedule(std::uint64_t seed = 0) {
    return harness::parse_schedule("1x2,4x30:g4,6:g6", 3, default_gamma, seed);
}

} // namespace testing_support
