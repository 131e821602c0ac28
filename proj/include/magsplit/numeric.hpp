#pragma once

#include <cmath>
#include <complex>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

namespace magsplit {

using Cplx = std::complex<double>;

inline constexpr double PI = 3.14159265358979323846264338327950288;

// Numerical failure (quadrature non-convergence, Newton divergence, ...).
// The CLI maps this to exit code 2.
struct NumericalError : std::runtime_error {
    explicit NumericalError(const std::string& what) : std::runtime_error(what) {}
};

// A computed quantity violated one of the model invariants (cross-check
// mismatch, residual above tolerance, ...). CLI exit code 1.
struct InvariantViolation : std::runtime_error {
    explicit InvariantViolation(const std::string& what) : std::runtime_error(what) {}
};

// Bad or inconsistent configuration. CLI exit code 3.
struct ConfigError : std::runtime_error {
    explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

inline double sqr(double x) { return x * x; }
inline Cplx sqr(Cplx x) { return x * x; }

inline bool close_rel(double a, double b, double rel, double abs_floor = 0.0) {
    return std::abs(a - b) <= rel * std::max({std::abs(a), std::abs(b), abs_floor});
}

// Deterministic xorshift64* generator. Used wherever sampled points are
// needed so that runs are reproducible given the seed.
class Rng {
  public:
    explicit Rng(std::uint64_t seed = 0x9e3779b97f4a7c15ull) : state_(seed ? seed : 1) {}

    std::uint64_t next_u64() {
        std::uint64_t x = state_;
        x ^= x >> 12;
        x ^= x << 25;
        x ^= x >> 27;
        state_ = x;
        return x * 0x2545f4914f6cdd1dull;
    }

    // uniform in [0,1)
    double uniform() {
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  private:
    std::uint64_t state_;
};

} // namespace magsplit
