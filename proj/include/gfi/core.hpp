// Core aliases, error types and small numeric helpers shared by every module.
#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <string>
#include <vector>

namespace gfi {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

inline constexpr double kHalfPi = std::numbers::pi / 2.0;

// =============================================================================
// Errors
// =============================================================================

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class InvalidArgument : public Error {
public:
    using Error::Error;
};

class NumericalDomainError : public Error {
public:
    using Error::Error;
};

class NotFiniteRelativeDegree : public Error {
public:
    NotFiniteRelativeDegree(int output, int max_order)
        : Error("output " + std::to_string(output) + " has no relative degree <= " +
                std::to_string(max_order)),
          output_index(output) {}
    int output_index;
};

class IsolabilityViolation : public Error {
public:
    using Error::Error;
};

class ObserverDiverged : public Error {
public:
    ObserverDiverged(double t, const std::string& what)
        : Error(what + " (t=" + std::to_string(t) + " s)"), time(t) {}
    double time;
};

class DesignInfeasible : public Error {
public:
    using Error::Error;
};

class MetricVerificationError : public Error {
public:
    MetricVerificationError(const std::string& what, std::vector<Vec> states)
        : Error(what), violating_states(std::move(states)) {}
    std::vector<Vec> violating_states;
};

class TrainingDiverged : public Error {
public:
    using Error::Error;
};

class GenerationFailure : public Error {
public:
    using Error::Error;
};

class ConfigError : public Error {
public:
    using Error::Error;
};

class IncomparableTraces : public Error {
public:
    using Error::Error;
};

class FileNotFound : public Error {
public:
    explicit FileNotFound(const std::string& path) : Error("file not found: " + path), path_(path) {}
    const std::string& path() const { return path_; }

private:
    std::string path_;
};

// =============================================================================
// Helpers
// =============================================================================

inline void require(bool ok, const std::string& what) {
    if (!ok) throw InvalidArgument(what);
}

template <typename Derived>
bool all_finite(const Eigen::MatrixBase<Derived>& m) {
    return m.allFinite();
}

inline std::string dims(const Mat& m) {
    return std::to_string(m.rows()) + "x" + std::to_string(m.cols());
}

// Deterministic generator with platform-independent uniform/normal draws
// (the standard distributions are implementation-defined).
class Rng {
public:
    explicit Rng(std::uint64_t seed) : state_(seed ? seed : 0x9E3779B97F4A7C15ull) {}

    std::uint64_t next_u64() {
        // splitmix64
        std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ull);
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
        return z ^ (z >> 31);
    }

    double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    double normal() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        double u1 = uniform();
        while (u1 <= 0.0) u1 = uniform();
        const double u2 = uniform();
        const double rad = std::sqrt(-2.0 * std::log(u1));
        spare_ = rad * std::sin(2.0 * std::numbers::pi * u2);
        has_spare_ = true;
        return rad * std::cos(2.0 * std::numbers::pi * u2);
    }

    std::size_t index(std::size_t n) { return static_cast<std::size_t>(uniform() * n) % n; }

    Vec normal_vec(Eigen::Index n) {
        Vec v(n);
        for (Eigen::Index i = 0; i < n; ++i) v(i) = normal();
        return v;
    }

    Mat normal_mat(Eigen::Index r, Eigen::Index c) {
        Mat m(r, c);
        for (Eigen::Index j = 0; j < c; ++j)
            for (Eigen::Index i = 0; i < r; ++i) m(i, j) = normal();
        return m;
    }

private:
    std::uint64_t state_;
    bool has_spare_ = false;
    double spare_ = 0.0;
};

// FNV-1a, used for config/scenario provenance hashes.
inline std::uint64_t fnv1a(const std::string& s) {
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ull;
    }
    return h;
}

inline std::string hex64(std::uint64_t v) {
    static const char* digits = "0123456789abcdef";
    std::string out(16, '0');
    for (int i = 15; i >= 0; --i) {
        out[static_cast<std::size_t>(i)] = digits[v & 0xF];
        v >>= 4;
    }
    return out;
}

}  // namespace gfi
