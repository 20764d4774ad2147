#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace llprobe {

/// Base class of every error thrown by the library.
class error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Matrix shapes or row/count arguments do not line up.
class dimension_error : public error {
public:
    using error::error;
};

/// A scalar parameter lies outside its documented domain (gamma, precision, ...).
class domain_error : public error {
public:
    using error::error;
};

/// The oracle refused a submission because its query budget is spent.
class budget_exhausted : public error {
public:
    explicit budget_exhausted(std::size_t used)
        : error("oracle query budget exhausted after " + std::to_string(used) + " queries"),
          queries_used_(used) {}

    std::size_t queries_used() const noexcept { return queries_used_; }

private:
    std::size_t queries_used_;
};

/// An exhaustive enumeration would exceed the configured cap.
class enumeration_too_large : public error {
public:
    using error::error;
};

/// The oracle's reply resolution is too coarse to observe a probe.
class resolution_failure : public error {
public:
    using error::error;
};

/// Malformed input file or configuration.
class parse_error : public error {
public:
    using error::error;
};

} // namespace llprobe
