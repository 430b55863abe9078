#pragma once

// Shared vocabulary: error types, the uniformly sampled TimeSeries, seeded
// random streams and a small deterministic parallel-for.

#include <Eigen/Dense>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <complex>
#include <cstddef>
#include <cstdint>
#include <exception>
#include <limits>
#include <mutex>
#include <random>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

namespace tipping {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using Complex = std::complex<double>;
using ComplexVector = Eigen::VectorXcd;
using ComplexMatrix = Eigen::MatrixXcd;

// -----------------------------------------------------------------------------
// Errors
// -----------------------------------------------------------------------------

/// Error categories double as CLI exit codes.
enum class ErrorKind : int { config = 1, numeric = 2, io = 3 };

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
    [[nodiscard]] ErrorKind kind() const noexcept { return kind_; }
    [[nodiscard]] int exit_code() const noexcept { return static_cast<int>(kind_); }

private:
    ErrorKind kind_;
};

class ConfigError : public Error {
public:
    explicit ConfigError(const std::string& what) : Error(ErrorKind::config, what) {}
};

class IoError : public Error {
public:
    explicit IoError(const std::string& what) : Error(ErrorKind::io, what) {}
};

/// Numerical failure. `index` locates the offending sample or step when known.
class NumericError : public Error {
public:
    static constexpr std::size_t npos = std::numeric_limits<std::size_t>::max();

    explicit NumericError(const std::string& what, std::size_t index = npos)
        : Error(ErrorKind::numeric, index == npos ? what : what + " (at index " + std::to_string(index) + ")"),
          index_(index) {}
    [[nodiscard]] std::size_t index() const noexcept { return index_; }

private:
    std::size_t index_;
};

// -----------------------------------------------------------------------------
// TimeSeries
// -----------------------------------------------------------------------------

/// Uniformly sampled multivariate observations. Row i of `values` is the
/// state at time t0 + i*dt. Maps use dt = 1 so the time is the sample index.
struct TimeSeries {
    Matrix values;      // samples x dimension
    double t0 = 0.0;
    double dt = 1.0;
    bool discrete = false;

    TimeSeries() = default;
    TimeSeries(Matrix v, double start, double step, bool is_discrete)
        : values(std::move(v)), t0(start), dt(step), discrete(is_discrete) {}

    [[nodiscard]] std::size_t size() const noexcept { return static_cast<std::size_t>(values.rows()); }
    [[nodiscard]] std::size_t dimension() const noexcept { return static_cast<std::size_t>(values.cols()); }
    [[nodiscard]] double time(std::size_t i) const noexcept { return t0 + static_cast<double>(i) * dt; }

    /// Contiguous sub-range [first, first + count) keeping the time axis.
    [[nodiscard]] TimeSeries slice(std::size_t first, std::size_t count) const {
        if (first + count > size()) throw ConfigError("TimeSeries::slice: range exceeds series length");
        return {values.middleRows(static_cast<Eigen::Index>(first), static_cast<Eigen::Index>(count)), time(first),
                dt, discrete};
    }

    [[nodiscard]] Vector column(std::size_t c) const { return values.col(static_cast<Eigen::Index>(c)); }
};

// -----------------------------------------------------------------------------
// Random streams
// -----------------------------------------------------------------------------

/// SplitMix64 finalizer; derives independent sub-seeds from one user seed.
[[nodiscard]] constexpr std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream) noexcept {
    std::uint64_t z = seed + 0x9E3779B97F4A7C15ull * (stream + 1);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
}

using Rng = std::mt19937_64;

/// Uniform draw in [-half_width, half_width].
inline double uniform_symmetric(Rng& rng, double half_width) {
    return std::uniform_real_distribution<double>(-half_width, half_width)(rng);
}

// -----------------------------------------------------------------------------
// Parallelism
// -----------------------------------------------------------------------------

/// Runs body(i) for i in [0, count) on up to `threads` workers. Results must
/// be written to per-index slots so the outcome does not depend on the
/// schedule. The first exception thrown by any task is rethrown.
template <typename Body>
void parallel_for(std::size_t count, unsigned threads, Body&& body) {
    if (threads <= 1 || count <= 1) {
        for (std::size_t i = 0; i < count; ++i) body(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    auto worker = [&] {
        for (std::size_t i = next++; i < count; i = next++) {
            try {
                body(i);
            } catch (...) {
                std::lock_guard lock(failure_mutex);
                if (!failure) failure = std::current_exception();
            }
        }
    };
    std::vector<std::thread> pool;
    const auto workers = std::min<std::size_t>(threads, count);
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
    if (failure) std::rethrow_exception(failure);
}

[[nodiscard]] inline bool all_finite(const Eigen::Ref<const Matrix>& m) { return m.allFinite(); }

}  // namespace tipping
