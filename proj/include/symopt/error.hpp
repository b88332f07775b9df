#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <string_view>
#include <variant>

namespace symopt {

/// Base class for all contract violations raised by this library.
/// These indicate misuse (bad arguments, broken invariants) and are
/// thrown as exceptions; conditions a caller is expected to handle in
/// the normal flow of ray tracing (missed surface, total internal
/// reflection, ...) are reported through `Expected` instead.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& what) : std::runtime_error(what) {}
};

/// Direction vector too short to normalize (|v| <= 1e-12).
class ZeroDirectionError : public Error {
public:
    using Error::Error;
};

/// A tangent vector whose direction part is not orthogonal to the line
/// direction (u.du != 0 beyond tolerance).
class InvalidTangentError : public Error {
public:
    using Error::Error;
};

/// A line outside the validity region of an orthographic chart.
class OutOfChartError : public Error {
public:
    using Error::Error;
};

/// Surface gradient vanished where a normal vector was required.
class DegenerateGradientError : public Error {
public:
    using Error::Error;
};

/// Finite-difference stencil would leave the parameter domain of a
/// family that cannot be evaluated outside it.
class BoundaryMarginError : public Error {
public:
    using Error::Error;
};

/// A family handed to a routine that requires a normal congruence
/// failed the normality precondition.
class NotNormalError : public Error {
public:
    using Error::Error;
};

/// Expected failure modes of ray-level operations.
enum class RayError {
    kMiss,                     ///< line does not meet the surface in the search window
    kGrazing,                  ///< intersection is tangential, map ill-defined
    kTotalInternalReflection,  ///< refraction has no transmitted branch
    kDifferentialUndefined,    ///< finite-difference probe left the map's domain
};

inline std::string_view to_string(RayError e) {
    switch (e) {
        case RayError::kMiss: return "miss";
        case RayError::kGrazing: return "grazing";
        case RayError::kTotalInternalReflection: return "total_internal_reflection";
        case RayError::kDifferentialUndefined: return "differential_undefined";
    }
    return "unknown";
}

/// Thrown when `Expected::value()` is called on an error state.
class BadExpectedAccess : public Error {
public:
    using Error::Error;
};

/// Minimal result-or-error type for operations with expected failure
/// modes. Deliberately small: implicit construction from either
/// alternative, `value()` that throws on error, and nothing else.
template <typename T, typename E = RayError>
class Expected {
public:
    Expected(T value) : v_(std::move(value)) {}
    Expected(E error) : v_(std::move(error)) {}

    bool has_value() const { return std::holds_alternative<T>(v_); }
    explicit operator bool() const { return has_value(); }

    const T& value() const& {
        if (!has_value()) throw BadExpectedAccess("Expected: value() on error state");
        return std::get<T>(v_);
    }
    T& value() & {
        if (!has_value()) throw BadExpectedAccess("Expected: value() on error state");
        return std::get<T>(v_);
    }
    T&& value() && {
        if (!has_value()) throw BadExpectedAccess("Expected: value() on error state");
        return std::get<T>(std::move(v_));
    }

    const E& error() const {
        if (has_value()) throw BadExpectedAccess("Expected: error() on value state");
        return std::get<E>(v_);
    }

    const T* operator->() const { return &value(); }
    const T& operator*() const { return value(); }

private:
    std::variant<T, E> v_;
};

/// Failure of a multi-interface trace: which expected ray error occurred
/// and at which interface (0-based index into the system).
struct TraceFailure {
    RayError code;
    std::size_t interface_index;
};

/// Exception wrapper used where a total function is required (family
/// transforms must evaluate at every parameter value or give up loudly).
class TraceError : public Error {
public:
    TraceError(TraceFailure failure, double k1, double k2, const std::string& what)
        : Error(what), failure_(failure), k1_(k1), k2_(k2) {}

    TraceFailure failure() const { return failure_; }
    double k1() const { return k1_; }
    double k2() const { return k2_; }

private:
    TraceFailure failure_;
    double k1_, k2_;
};

} // namespace symopt
