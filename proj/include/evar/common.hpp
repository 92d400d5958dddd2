#pragma once

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace evar {

// Default tolerance for feasibility comparisons (dense-LP residual scale).
inline constexpr double kDefaultTol = 1e-9;

// Stand-in for +inf function values; never expected to bind in practice.
inline constexpr double kValueCap = 1e300;

// Thrown when vectors that must share a grid have mismatched sizes.
struct AlignmentError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

// Thrown on malformed user input (configs, CSV, parameters out of range).
struct InputError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

// Thrown when an algorithm cannot certify its result (stalled LP,
// failed construction search, residuals out of contract).
struct NumericalError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Fixed 17-significant-digit formatting; reports must be byte-stable.
inline std::string format_double(double v) {
    if (v == 0.0) return "0";  // collapse signed zero
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return std::string(buf);
}

inline std::uint64_t fnv1a64(std::string_view s) {
    std::uint64_t h = 1469598103934665603ull;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

inline std::string hex64(std::uint64_t v) {
    char buf[20];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
    return std::string(buf);
}

inline double dot(const std::vector<double>& a, const std::vector<double>& b) {
    if (a.size() != b.size())
        throw AlignmentError("dot: size mismatch (" + std::to_string(a.size()) + " vs " +
                             std::to_string(b.size()) + ")");
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

}  // namespace evar
