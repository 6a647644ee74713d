#pragma once

#include <Eigen/Cholesky>
#include <Eigen/Dense>
#include <cmath>
#include <cstdint>
#include <vector>

#include "tsdcn/data.hpp"
#include "tsdcn/errors.hpp"
#include "tsdcn/rng.hpp"

namespace tsdcn {

/// Generative hidden-Markov spec for one class of synthetic data, in the
/// full D-dimensional space.
struct HmmClassSpec {
    Eigen::VectorXd init;                            // K, sums to 1
    Eigen::MatrixXd trans;                           // K x K, rows sum to 1
    std::vector<Eigen::VectorXd> mix;                // per state: M weights
    std::vector<std::vector<Eigen::VectorXd>> mean;  // [k][m], length D
    std::vector<std::vector<Eigen::MatrixXd>> cov;   // [k][m], D x D SPD
};

struct HmmSpec {
    int D = 0;
    std::vector<HmmClassSpec> classes;
};

namespace detail {

inline HmmSpec sample_hmm_spec_stream(int C, int K, int M, int D, Rng& rng) {
    if (C < 2 || K < 1 || M < 1 || D < 1) throw InvalidParams("sample_hmm_spec: bad sizes");
    HmmSpec spec;
    spec.D = D;
    spec.classes.resize(C);
    for (int c = 0; c < C; ++c) {
        HmmClassSpec& cls = spec.classes[c];
        Eigen::VectorXd init = rng.uniform_vector(K, 0.0, 1.0);
        cls.init = init / init.sum();
        cls.trans = rng.uniform_matrix(K, K, 0.0, 1.0);
        for (int k = 0; k < K; ++k) cls.trans.row(k) /= cls.trans.row(k).sum();
        cls.mix.resize(K);
        cls.mean.assign(K, std::vector<Eigen::VectorXd>(M));
        cls.cov.assign(K, std::vector<Eigen::MatrixXd>(M));
        for (int k = 0; k < K; ++k) {
            Eigen::VectorXd mix = rng.uniform_vector(M, 0.0, 1.0);
            cls.mix[k] = mix / mix.sum();
            for (int m = 0; m < M; ++m) {
                cls.mean[k][m] = rng.uniform_vector(D, -1.0, 1.0);
                const Eigen::MatrixXd B = rng.uniform_matrix(D, D, -1.0, 1.0);
                cls.cov[k][m] = B * B.transpose() / D +
                                0.1 * Eigen::MatrixXd::Identity(D, D);
            }
        }
    }
    return spec;
}

}  // namespace detail

/// Random fully connected HMM spec with two states and two components per
/// state.  Per class, in draw order: initial weights (K uniforms), transition
/// rows (K*K uniforms), then per state the mixture weights (M uniforms) and
/// per component a mean (D uniforms on [-1,1]) and a D x D uniform factor B
/// giving covariance B B^T / D + 0.1 I.
inline HmmSpec sample_hmm_spec(int C, int D, std::uint64_t seed) {
    Rng rng(seed);
    return detail::sample_hmm_spec_stream(C, 2, 2, D, rng);
}

/// Sample n_per_class labeled series of length T from each class of the
/// spec.  Per series: initial state, then per step a mixture component, D
/// standard normals through the covariance factor, and (except after the
/// last step) a transition draw.
inline Dataset sample_hmm_dataset(const HmmSpec& spec, int n_per_class, int T,
                                  std::uint64_t seed) {
    if (n_per_class < 1 || T < 1) throw InvalidParams("sample_hmm_dataset: bad sizes");
    Rng rng(seed);
    const int D = spec.D;
    const int C = static_cast<int>(spec.classes.size());

    // Cholesky factors once per component.
    std::vector<std::vector<std::vector<Eigen::MatrixXd>>> chol(C);
    for (int c = 0; c < C; ++c) {
        const auto& cls = spec.classes[c];
        const int K = static_cast<int>(cls.mix.size());
        chol[c].resize(K);
        for (int k = 0; k < K; ++k)
            for (const auto& S : cls.cov[k]) {
                Eigen::LLT<Eigen::MatrixXd> llt(S);
                if (llt.info() != Eigen::Success)
                    throw InvalidParams("sample_hmm_dataset: covariance not positive definite");
                chol[c][k].push_back(llt.matrixL());
            }
    }

    Dataset ds;
    ds.meta.problem = "hmm";
    ds.meta.seed = seed;
    ds.meta.params = {{"C", C}, {"D", D}, {"T", T}, {"n_per_class", n_per_class}};
    ds.samples.reserve(static_cast<std::size_t>(C) * n_per_class);
    for (int c = 0; c < C; ++c) {
        const auto& cls = spec.classes[c];
        for (int i = 0; i < n_per_class; ++i) {
            TimeSeriesSample s;
            s.label = c + 1;
            s.series.resize(T, D);
            int k = rng.categorical(cls.init);
            for (int t = 0; t < T; ++t) {
                const int m = rng.categorical(cls.mix[k]);
                const Eigen::VectorXd z = rng.normal_vector(D);
                s.series.row(t) = (cls.mean[k][m] + chol[c][k][m] * z).transpose();
                if (t + 1 < T) k = rng.categorical(cls.trans.row(k).transpose());
            }
            ds.samples.push_back(std::move(s));
        }
    }
    return ds;
}

/// Two-dimensional problem where principal components point the wrong way:
/// class 1 carries the signal +0.5 sin(2 pi t / 100) and class 2 its
/// negation, both along (1,1), while stronger noise 0.5 z(t) rides the
/// orthogonal (1,-1) (z standard normal, fresh per step), i.e. the noise
/// covariance is exactly [[1,-1],[-1,1]] scaled by 0.25.  The top principal
/// component therefore captures noise, not class information.
inline Dataset gen_pca_problem(int n_per_class, int T, std::uint64_t seed) {
    if (n_per_class < 1 || T < 1) throw InvalidParams("gen_pca_problem: bad sizes");
    Rng rng(seed);
    Dataset ds;
    ds.meta.problem = "pca";
    ds.meta.seed = seed;
    ds.meta.params = {{"T", T}, {"n_per_class", n_per_class}};
    for (int c = 0; c < 2; ++c) {
        const double sign = (c == 0) ? 1.0 : -1.0;
        for (int i = 0; i < n_per_class; ++i) {
            TimeSeriesSample s;
            s.label = c + 1;
            s.series.resize(T, 2);
            for (int t = 0; t < T; ++t) {
                const double sig = sign * 0.5 * std::sin(2.0 * M_PI * (t + 1) / 100.0);
                const double eta = rng.normal();
                s.series(t, 0) = sig + 0.5 * eta;
                s.series(t, 1) = sig - 0.5 * eta;
            }
            ds.samples.push_back(std::move(s));
        }
    }
    return ds;
}

/// Interleaved-triangles problem whose class means coincide, modeled on the
/// XOR problem.  Each series is T independent points: pick one of the class's
/// two triangles with probability 1/2, then rejection-sample a uniform point
/// of [-1,1]^2 until it lands inside that triangle.
///   class 1: {y1>0, y2>0, y1+y2<1} u {y1<0, y2<0, y1+y2>-1}
///   class 2: {y1<0, y2>0, y2-y1<1} u {y1>0, y2<0, y1-y2<1}
inline Dataset gen_xor_problem(int n_per_class, int T, std::uint64_t seed) {
    if (n_per_class < 1 || T < 1) throw InvalidParams("gen_xor_problem: bad sizes");
    Rng rng(seed);
    const auto in_triangle = [](int c, int tri, double y1, double y2) {
        if (c == 0)
            return tri == 0 ? (y1 > 0 && y2 > 0 && y1 + y2 < 1)
                            : (y1 < 0 && y2 < 0 && y1 + y2 > -1);
        return tri == 0 ? (y1 < 0 && y2 > 0 && y2 - y1 < 1)
                        : (y1 > 0 && y2 < 0 && y1 - y2 < 1);
    };
    Dataset ds;
    ds.meta.problem = "xor";
    ds.meta.seed = seed;
    ds.meta.params = {{"T", T}, {"n_per_class", n_per_class}};
    for (int c = 0; c < 2; ++c)
        for (int i = 0; i < n_per_class; ++i) {
            TimeSeriesSample s;
            s.label = c + 1;
            s.series.resize(T, 2);
            for (int t = 0; t < T; ++t) {
                const int tri = rng.uniform() < 0.5 ? 0 : 1;
                double y1 = 0.0, y2 = 0.0;
                do {
                    y1 = rng.uniform(-1.0, 1.0);
                    y2 = rng.uniform(-1.0, 1.0);
                } while (!in_triangle(c, tri, y1, y2));
                s.series(t, 0) = y1;
                s.series(t, 1) = y2;
            }
            ds.samples.push_back(std::move(s));
        }
    return ds;
}

/// Blend each series toward white noise: y = (1-a) x + a eta with eta drawn
/// standard normal per entry.  a=0 returns the data unchanged, a=1 pure
/// noise.  Labels are kept.
inline Dataset mix_noise(const Dataset& ds, double a, std::uint64_t seed) {
    if (a < 0.0 || a > 1.0) throw InvalidParams("mix_noise: blend factor must be in [0,1]");
    Rng rng(seed);
    Dataset out = ds;
    out.meta.problem = ds.meta.problem.empty() ? "noisy" : ds.meta.problem + "+noise";
    out.meta.params["noise_ratio"] = a;
    out.meta.params["noise_seed"] = seed;
    for (auto& s : out.samples)
        for (int t = 0; t < s.length(); ++t)
            for (int d = 0; d < s.dim(); ++d)
                s.series(t, d) = (1.0 - a) * s.series(t, d) + a * rng.normal();
    return out;
}

}  // namespace tsdcn
