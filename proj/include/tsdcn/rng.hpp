#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <random>

namespace tsdcn {

/// SplitMix64 finalizer. Fully specified, so seed chains derived with it
/// reproduce bit-identically on every platform.
inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

/// Stable 64-bit seed derivation: fold each index into the running hash.
/// derive_seed(master, i) and derive_seed(master, i, j) give the per-dataset
/// and per-initialization streams of an experiment grid.
inline std::uint64_t derive_seed(std::uint64_t master, std::initializer_list<std::uint64_t> idx) {
    std::uint64_t h = splitmix64(master);
    for (std::uint64_t v : idx) h = splitmix64(h ^ (v + 0x9E3779B97F4A7C15ULL));
    return h;
}

inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t i) {
    return derive_seed(master, {i});
}

inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t i, std::uint64_t j) {
    return derive_seed(master, {i, j});
}

/// Deterministic random stream. Wraps std::mt19937_64 (whose output sequence
/// the standard pins down) with hand-rolled distributions, because the
/// std::*_distribution implementations are not portable across libraries.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : gen_(seed) {}

    /// Uniform on [0, 1), 53-bit resolution.
    double uniform() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    /// Standard normal via Box-Muller; draws two uniforms per pair.
    double normal() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        double u1 = 0.0;
        do {
            u1 = uniform();
        } while (u1 <= 0.0);
        const double u2 = uniform();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double theta = 2.0 * M_PI * u2;
        spare_ = r * std::sin(theta);
        have_spare_ = true;
        return r * std::cos(theta);
    }

    Eigen::VectorXd normal_vector(Eigen::Index n) {
        Eigen::VectorXd v(n);
        for (Eigen::Index i = 0; i < n; ++i) v[i] = normal();
        return v;
    }

    /// Row-major fill so the draw order is part of the format.
    Eigen::MatrixXd normal_matrix(Eigen::Index rows, Eigen::Index cols) {
        Eigen::MatrixXd m(rows, cols);
        for (Eigen::Index i = 0; i < rows; ++i)
            for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = normal();
        return m;
    }

    Eigen::VectorXd uniform_vector(Eigen::Index n, double lo, double hi) {
        Eigen::VectorXd v(n);
        for (Eigen::Index i = 0; i < n; ++i) v[i] = uniform(lo, hi);
        return v;
    }

    Eigen::MatrixXd uniform_matrix(Eigen::Index rows, Eigen::Index cols, double lo, double hi) {
        Eigen::MatrixXd m(rows, cols);
        for (Eigen::Index i = 0; i < rows; ++i)
            for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = uniform(lo, hi);
        return m;
    }

    /// Index draw from an unnormalized nonnegative weight vector.
    int categorical(const Eigen::VectorXd& weights) {
        const double total = weights.sum();
        double u = uniform() * total;
        for (Eigen::Index i = 0; i < weights.size(); ++i) {
            u -= weights[i];
            if (u < 0.0) return static_cast<int>(i);
        }
        return static_cast<int>(weights.size() - 1);
    }

private:
    std::mt19937_64 gen_;
    double spare_ = 0.0;
    bool have_spare_ = false;
};

}  // namespace tsdcn
