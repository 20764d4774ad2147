#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>

#include "support.hpp"

using namespace llprobe;
using namespace testing_support;

TEST(Oracle, UniformSubmissionReportsRoundedLnC) {
    for (int p : {0, 1, 3, 5, 9}) {
        SimulatedOracle oracle(full_spec(64, 3, p), random_truth(64, 3, 1));
        const auto reply = oracle.query(GuessMatrix::uniform(64, 3));
        EXPECT_EQ(reply.loss, round_loss(std::log(3.0), Precision(p)));
        EXPECT_EQ(reply.query_index, 1u);
    }
}

TEST(Oracle, TruthAsSubmissionScoresZeroAtFiveDigits) {
    const auto truth = random_truth(512, 3, 2);
    SimulatedOracle oracle(full_spec(512, 3, 5), truth);
    EXPECT_EQ(oracle.query(GuessMatrix::one_hot(truth)).loss, 0.0);
}

TEST(Oracle, ReplyIsRoundedClampedLogLoss) {
    Rng rng(9);
    for (int t = 0; t < 50; ++t) {
        const std::size_t n = 1 + rng.uniform_index(40), c = 2 + rng.uniform_index(3);
        const int p = static_cast<int>(rng.uniform_int(0, 9));
        const auto truth = random_truth(n, c, t);
        GuessMatrix g(n, c);
        for (auto& v : g.data()) v = rng.uniform01() < 0.2 ? 0.0 : rng.uniform01();
        OracleSpec spec = full_spec(n, c, p);
        spec.clamp.gamma = 1e-9;
        SimulatedOracle oracle(spec, truth);
        EXPECT_EQ(oracle.query(g).loss, round_loss(log_loss(truth, clamp(g, {1e-9})), Precision(p)));
    }
}

TEST(Oracle, BudgetRefusesWithoutCounting) {
    SimulatedOracle oracle(full_spec(8, 2, 5, 3), random_truth(8, 2, 0));
    for (int i = 0; i < 3; ++i) oracle.query(GuessMatrix::uniform(8, 2));
    try {
        oracle.query(GuessMatrix::uniform(8, 2));
        FAIL() << "fourth query accepted";
    } catch (const budget_exhausted& e) {
        EXPECT_EQ(e.queries_used(), 3u);
    }
    EXPECT_EQ(oracle.queries_used(), 3u);
}

TEST(Oracle, WrongShapeRejectedBeforeBudget) {
    SimulatedOracle oracle(full_spec(8, 3, 5, 1), random_truth(8, 3, 0));
    EXPECT_THROW(oracle.query(GuessMatrix::uniform(7, 3)), dimension_error);
    EXPECT_THROW(oracle.query(GuessMatrix::uniform(8, 2)), dimension_error);
    EXPECT_EQ(oracle.queries_used(), 0u);
    EXPECT_NO_THROW(oracle.query(GuessMatrix::uniform(8, 3)));
}

TEST(Oracle, SpecValidation) {
    const auto truth = random_truth(10, 3, 0);
    EXPECT_THROW(SimulatedOracle(subset_spec(10, 3, 0, 5, 0), truth), dimension_error);
    EXPECT_THROW(SimulatedOracle(subset_spec(10, 3, 11, 5, 0), truth), dimension_error);
    EXPECT_THROW(SimulatedOracle(full_spec(10, 3, 5, 0), truth), domain_error);
    EXPECT_THROW(SimulatedOracle(full_spec(11, 3, 5), truth), dimension_error);
    OracleSpec bad = full_spec(10, 3, 5);
    bad.clamp.gamma = 0.5;
    EXPECT_THROW(SimulatedOracle(bad, truth), domain_error);
}

TEST(Oracle, SubsetIsSortedDistinctAndSeeded) {
    const auto truth = random_truth(200, 3, 0);
    SimulatedOracle a(subset_spec(200, 3, 50, 5, 7), truth);
    SimulatedOracle b(subset_spec(200, 3, 50, 5, 7), truth);
    SimulatedOracle c(subset_spec(200, 3, 50, 5, 8), truth);
    const auto& s = a.evaluated_set();
    ASSERT_EQ(s.size(), 50u);
    EXPECT_TRUE(std::is_sorted(s.begin(), s.end()));
    EXPECT_EQ(std::adjacent_find(s.begin(), s.end()), s.end());
    EXPECT_EQ(s, b.evaluated_set());
    EXPECT_NE(s, c.evaluated_set());
}

TEST(Oracle, SubsetReplyIgnoresUnscoredRows) {
    const std::size_t n = 60;
    const auto truth = random_truth(n, 3, 4);
    SimulatedOracle oracle(subset_spec(n, 3, 20, 9, 5), truth);
    std::vector<std::uint8_t> scored(n, 0);
    for (auto i : oracle.evaluated_set()) scored[i] = 1;

    Rng rng(6);
    GuessMatrix g = GuessMatrix::uniform(n, 3);
    const double base = oracle.query(g).loss;
    for (std::size_t i = 0; i < n; ++i) {
        if (scored[i]) continue;
        g(i, 0) = rng.uniform01();
        g(i, 1) = 0.0;
        g(i, 2) = 1.0 - g(i, 0);
    }
    EXPECT_EQ(oracle.query(g).loss, base);
    EXPECT_EQ(base, round_loss(std::log(3.0), Precision(9)));
}

TEST(Oracle, QueryIndexCounts) {
    SimulatedOracle oracle(full_spec(4, 2, 3), random_truth(4, 2, 0));
    for (std::size_t i = 1; i <= 5; ++i) EXPECT_EQ(oracle.query(GuessMatrix::uniform(4, 2)).query_index, i);
}
