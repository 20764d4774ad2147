#pragma once

// Log-loss arithmetic shared by the oracle and the attacks: the label and
// guess matrices, the scorer's clamp and decimal rounding, and the
// conversion from a whole-test-set loss to the loss of one probed batch.

#include <array>
#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "llprobe/errors.hpp"

namespace llprobe {

inline constexpr double default_gamma = 1e-15;

/// One-hot ground truth, stored as one class index per row.
class LabelMatrix {
public:
    LabelMatrix(std::size_t classes, std::vector<std::size_t> labels)
        : classes_(classes), labels_(std::move(labels)) {
        if (classes_ < 2) throw dimension_error("label matrix needs at least 2 classes");
        if (labels_.empty()) throw dimension_error("label matrix needs at least 1 row");
        for (std::size_t label : labels_)
            if (label >= classes_)
                throw dimension_error("label " + std::to_string(label) + " out of range for " +
                                      std::to_string(classes_) + " classes");
    }

    std::size_t rows() const noexcept { return labels_.size(); }
    std::size_t classes() const noexcept { return classes_; }
    std::size_t label(std::size_t i) const { return labels_.at(i); }
    std::span<const std::size_t> labels() const noexcept { return labels_; }

    /// Entry y_ij of the one-hot matrix.
    int operator()(std::size_t i, std::size_t j) const { return labels_[i] == j ? 1 : 0; }

    friend bool operator==(const LabelMatrix&, const LabelMatrix&) = default;

private:
    std::size_t classes_;
    std::vector<std::size_t> labels_;
};

/// Dense row-major n x c matrix of submitted probabilities.
///
/// The type itself only enforces the shape. Contestant submissions are
/// expected to satisfy is_row_stochastic(); a submission that still holds
/// exact 0/1 entries (inferred rows before the scorer's clamp) is legal to
/// build and score.
class GuessMatrix {
public:
    GuessMatrix(std::size_t rows, std::size_t classes, double fill = 0.0)
        : rows_(rows), classes_(classes), data_(rows * classes, fill) {
        check_shape();
    }

    GuessMatrix(std::size_t rows, std::size_t classes, std::vector<double> data)
        : rows_(rows), classes_(classes), data_(std::move(data)) {
        check_shape();
        if (data_.size() != rows_ * classes_)
            throw dimension_error("guess data holds " + std::to_string(data_.size()) +
                                  " entries, expected " + std::to_string(rows_ * classes_));
    }

    static GuessMatrix uniform(std::size_t rows, std::size_t classes) {
        return GuessMatrix(rows, classes, 1.0 / static_cast<double>(classes));
    }

    /// Truth expressed as guesses: exact one-hot rows.
    static GuessMatrix one_hot(const LabelMatrix& truth) {
        GuessMatrix g(truth.rows(), truth.classes(), 0.0);
        for (std::size_t i = 0; i < truth.rows(); ++i) g(i, truth.label(i)) = 1.0;
        return g;
    }

    std::size_t rows() const noexcept { return rows_; }
    std::size_t classes() const noexcept { return classes_; }

    double& operator()(std::size_t i, std::size_t j) { return data_[i * classes_ + j]; }
    double operator()(std::size_t i, std::size_t j) const { return data_[i * classes_ + j]; }

    std::span<double> row(std::size_t i) { return {data_.data() + i * classes_, classes_}; }
    std::span<const double> row(std::size_t i) const {
        return {data_.data() + i * classes_, classes_};
    }

    std::span<const double> data() const noexcept { return data_; }
    std::span<double> data() noexcept { return data_; }

    friend bool operator==(const GuessMatrix&, const GuessMatrix&) = default;

private:
    void check_shape() const {
        if (rows_ < 1) throw dimension_error("guess matrix needs at least 1 row");
        if (classes_ < 2) throw dimension_error("guess matrix needs at least 2 classes");
    }

    std::size_t rows_;
    std::size_t classes_;
    std::vector<double> data_;
};

/// True when every entry lies in the open interval (0,1) and every row sums
/// to 1 within `tolerance`.
inline bool is_row_stochastic(const GuessMatrix& g, double tolerance = 1e-9) {
    for (std::size_t i = 0; i < g.rows(); ++i) {
        double sum = 0.0;
        for (double v : g.row(i)) {
            if (!(v > 0.0 && v < 1.0)) return false;
            sum += v;
        }
        if (std::abs(sum - 1.0) > tolerance) return false;
    }
    return true;
}

/// The scorer's floor/ceiling on submitted probabilities: [gamma, 1 - gamma].
struct ClampPolicy {
    double gamma = default_gamma;

    /// Throws unless 0 < gamma < 1/c.
    void validate(std::size_t classes) const {
        if (!(gamma > 0.0 && gamma < 1.0 / static_cast<double>(classes)))
            throw domain_error("clamp gamma must lie in (0, 1/c); got " + std::to_string(gamma));
    }
};

/// Decimal digits kept after the point in an oracle reply.
class Precision {
public:
    static constexpr int max_digits = 17;

    constexpr explicit Precision(int digits) : digits_(digits) {
        if (digits < 0 || digits > max_digits)
            throw domain_error("precision must be in [0, 17]");
    }

    constexpr int digits() const noexcept { return digits_; }

    /// 10^-p, the spacing of representable replies.
    double step() const noexcept { return std::pow(10.0, -digits_); }

    friend constexpr bool operator==(Precision, Precision) = default;

private:
    int digits_;
};

namespace detail {

// Neumaier-compensated running sum. Used by every loss evaluation so that
// the oracle and the attacker's codebooks agree to the last bit.
class CompensatedSum {
public:
    void add(double x) noexcept {
        const double t = sum_ + x;
        if (!std::isfinite(t)) { // the carry would turn inf into nan
            sum_ = t;
            return;
        }
        if (std::abs(sum_) >= std::abs(x))
            carry_ += (sum_ - t) + x;
        else
            carry_ += (x - t) + sum_;
        sum_ = t;
    }
    double value() const noexcept { return std::isfinite(sum_) ? sum_ + carry_ : sum_; }

private:
    double sum_ = 0.0;
    double carry_ = 0.0;
};

inline constexpr std::array<double, 18> powers_of_ten = {
    1e0, 1e1, 1e2,  1e3,  1e4,  1e5,  1e6,  1e7,  1e8,
    1e9, 1e10, 1e11, 1e12, 1e13, 1e14, 1e15, 1e16, 1e17};

} // namespace detail

/// Loss contributed by a row guessed uniformly: -ln(1/c).
///
/// Written as the scorer evaluates it (log of the submitted 1/c), not as
/// log(c); the two can differ in the last bit.
inline double uniform_row_loss(std::size_t classes) {
    return -std::log(1.0 / static_cast<double>(classes));
}

/// Mean log-loss -(1/|rows|) sum_i ln(guess[i][label_i]) over the listed rows.
inline double log_loss(const LabelMatrix& truth, const GuessMatrix& guesses,
                       std::span<const std::size_t> rows) {
    if (truth.rows() != guesses.rows() || truth.classes() != guesses.classes())
        throw dimension_error("truth is " + std::to_string(truth.rows()) + "x" +
                              std::to_string(truth.classes()) + " but guesses are " +
                              std::to_string(guesses.rows()) + "x" +
                              std::to_string(guesses.classes()));
    if (rows.empty()) throw dimension_error("log-loss over an empty row set");
    detail::CompensatedSum total;
    for (std::size_t i : rows) {
        if (i >= truth.rows()) throw dimension_error("row index out of range");
        total.add(-std::log(guesses(i, truth.label(i))));
    }
    return total.value() / static_cast<double>(rows.size());
}

/// Mean log-loss over the whole matrix (natural log).
inline double log_loss(const LabelMatrix& truth, const GuessMatrix& guesses) {
    if (truth.rows() != guesses.rows() || truth.classes() != guesses.classes())
        throw dimension_error("truth and guesses differ in shape");
    detail::CompensatedSum total;
    for (std::size_t i = 0; i < truth.rows(); ++i)
        total.add(-std::log(guesses(i, truth.label(i))));
    return total.value() / static_cast<double>(truth.rows());
}

/// Element-wise clamp to [gamma, 1 - gamma]. Rows are not re-normalized.
inline GuessMatrix clamp(GuessMatrix guesses, const ClampPolicy& policy) {
    const double lo = policy.gamma;
    const double hi = 1.0 - policy.gamma;
    for (double& v : guesses.data()) v = v < lo ? lo : (v > hi ? hi : v);
    return guesses;
}

/// Rounds to `precision` decimal digits, ties to even.
///
/// The loss is scaled by 10^p in binary floating point first, so a value
/// printed as an exact decimal tie (0.05 at p = 1) is treated as a tie.
inline double round_loss(double loss, Precision precision) {
    const double scale = detail::powers_of_ten[static_cast<std::size_t>(precision.digits())];
    const double scaled = loss * scale;
    const double floor = std::floor(scaled);
    const double frac = scaled - floor;
    double rounded = floor;
    if (frac > 0.5 || (frac == 0.5 && std::fmod(floor, 2.0) != 0.0)) rounded = floor + 1.0;
    return rounded / scale;
}

/// Loss of the m probed rows recovered from a whole-set reply `ell_n`,
/// given k inferred rows (contributing ~0) and n - m - k uniform rows.
inline double batch_loss(double ell_n, std::size_t n, std::size_t m, std::size_t k,
                         std::size_t classes) {
    if (m < 1 || k + m > n)
        throw dimension_error("batch needs m >= 1 and k + m <= n (n=" + std::to_string(n) +
                              ", m=" + std::to_string(m) + ", k=" + std::to_string(k) + ")");
    const double uniform_rows = static_cast<double>(n - m - k);
    return (static_cast<double>(n) * ell_n - uniform_rows * uniform_row_loss(classes)) /
           static_cast<double>(m);
}

/// Per-row loss of a correctly inferred row after the scorer's clamp,
/// -ln(1 - (c-1) gamma); an upper bound on what a one-hot row costs.
inline double inferred_row_cost(std::size_t classes, double gamma) {
    return -std::log1p(-static_cast<double>(classes - 1) * gamma);
}

} // namespace llprobe
