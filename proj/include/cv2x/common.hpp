#ifndef CV2X_COMMON_HPP
#define CV2X_COMMON_HPP

#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <random>
#include <stdexcept>
#include <string>

namespace cv2x
{

/// Absolute TTI count since simulation start (1 subframe = 1 ms).
using Subframe = std::int64_t;

using Rng = std::mt19937_64;

// Error kinds. All derive from std::runtime_error / std::invalid_argument so
// callers that do not care about the kind can catch the standard base.

class InvalidArgument : public std::invalid_argument
{
public:
    using std::invalid_argument::invalid_argument;
};

class ConfigError : public std::invalid_argument
{
public:
    using std::invalid_argument::invalid_argument;
};

class SequenceError : public std::logic_error
{
public:
    using std::logic_error::logic_error;
};

class LifecycleError : public std::logic_error
{
public:
    using std::logic_error::logic_error;
};

class NoResourceError : public std::runtime_error
{
public:
    using std::runtime_error::runtime_error;
};

class IoError : public std::runtime_error
{
public:
    using std::runtime_error::runtime_error;
};

inline double dbm_to_mw(double dbm)
{
    return std::exp(dbm * (std::numbers::ln10 / 10.0));
}

inline double mw_to_dbm(double mw)
{
    if (mw <= 0.0)
        return -std::numeric_limits<double>::infinity();
    return 10.0 * std::log10(mw);
}

/// SplitMix64 finalizer; used to derive independent stream seeds.
constexpr std::uint64_t mix64(std::uint64_t x)
{
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

constexpr std::uint64_t combine_seed(std::uint64_t seed, std::uint64_t salt)
{
    return mix64(seed ^ mix64(salt));
}

/// ceil(fraction * n) robust to binary rounding (0.2 * 65 must give 13).
inline std::size_t ceil_fraction(double fraction, std::size_t n)
{
    const double x = fraction * static_cast<double>(n);
    const double r = std::round(x);
    if (std::abs(x - r) <= 1e-9 * (1.0 + std::abs(x)))
        return static_cast<std::size_t>(r);
    return static_cast<std::size_t>(std::ceil(x));
}

}  // namespace cv2x

#endif
