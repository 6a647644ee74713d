#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

#include "tsdcn/data.hpp"
#include "tsdcn/gradients.hpp"
#include "tsdcn/rng.hpp"
#include "tsdcn/topology.hpp"
#include "tsdcn/trainer.hpp"
#include "tsdcn/tsdca.hpp"
#include "tsdcn/weights.hpp"

namespace testsup {

using namespace tsdcn;

/// Ragged topology within the given caps; C >= 2, Dp <= min(dp_max, D).
inline ModelTopology random_small_topo(Rng& rng, int c_max = 3, int d_max = 4, int dp_max = 2,
                                       int k_max = 2, int m_max = 2) {
    const int C = 2 + static_cast<int>(rng.uniform() * (c_max - 1));
    const int D = 1 + static_cast<int>(rng.uniform() * d_max);
    const int Dp = 1 + static_cast<int>(rng.uniform() * std::min(dp_max, D));
    std::vector<int> K(C);
    std::vector<std::vector<int>> M(C);
    for (int c = 0; c < C; ++c) {
        K[c] = 1 + static_cast<int>(rng.uniform() * k_max);
        M[c].resize(K[c]);
        for (int k = 0; k < K[c]; ++k) M[c][k] = 1 + static_cast<int>(rng.uniform() * m_max);
    }
    ModelTopology topo{C, std::move(K), std::move(M), D, Dp};
    topo.validate();
    return topo;
}

inline Dataset random_dataset(const ModelTopology& topo, int n_samples, int T, Rng& rng) {
    Dataset ds;
    ds.meta.problem = "test";
    for (int i = 0; i < n_samples; ++i) {
        TimeSeriesSample s;
        s.label = 1 + static_cast<int>(rng.uniform() * topo.C);
        s.series = rng.normal_matrix(T, topo.D);
        ds.samples.push_back(std::move(s));
    }
    return ds;
}

inline Dataset dataset_from_series(const std::vector<std::pair<int, Eigen::MatrixXd>>& rows) {
    Dataset ds;
    ds.meta.problem = "test";
    for (const auto& [label, series] : rows) ds.samples.push_back({label, series});
    return ds;
}

/// Two scalar unit-variance Gaussian classes with means m1 and m2; K=M=1.
inline TsdcaParams two_scalar_gaussians(double m1, double m2) {
    TsdcaParams p;
    p.topo = ModelTopology::uniform(2, 1, 1, 1, 1);
    for (double m : {m1, m2}) {
        TsdcaComponent c;
        c.V = Eigen::MatrixXd::Ones(1, 1);
        c.mu = Eigen::VectorXd::Constant(1, m);
        c.Sigma = Eigen::MatrixXd::Identity(1, 1);
        p.comps.push_back(std::move(c));
        p.r.push_back(Eigen::VectorXd::Ones(1));
        p.gamma.push_back(Eigen::MatrixXd::Ones(1, 1));
    }
    p.validate();
    return p;
}

/// Central finite differences of the dataset NLL over every weight entry.
inline Gradients fd_gradients(const NetworkWeights& w0, const Dataset& ds, double step = 1e-6) {
    Gradients g = Gradients::zeros(w0.topo);
    NetworkWeights w = w0;
    const auto diff = [&](double& coord, double& out) {
        const double saved = coord;
        coord = saved + step;
        const double jp = negative_log_likelihood(w, ds);
        coord = saved - step;
        const double jm = negative_log_likelihood(w, ds);
        coord = saved;
        out = (jp - jm) / (2.0 * step);
    };
    for (int ci = 0; ci < w.topo.total_components(); ++ci)
        for (int b = 0; b < w.W[ci].cols(); ++b)
            for (int a = 0; a < w.W[ci].rows(); ++a) diff(w.W[ci](a, b), g.W[ci](a, b));
    for (std::size_t si = 0; si < w.Wp.size(); ++si)
        for (int b = 0; b < w.Wp[si].cols(); ++b)
            for (int a = 0; a < w.Wp[si].rows(); ++a) diff(w.Wp[si](a, b), g.Wp[si](a, b));
    return g;
}

struct GradCompare {
    double worst_rel = 0.0;       // over coordinates with magnitude >= near_zero
    double worst_abs_small = 0.0; // over coordinates with magnitude < near_zero
};

inline GradCompare compare_gradients(const Gradients& a, const Gradients& b,
                                     double near_zero = 1e-4) {
    GradCompare res;
    const auto scan = [&](const Eigen::MatrixXd& x, const Eigen::MatrixXd& y) {
        for (int j = 0; j < x.cols(); ++j)
            for (int i = 0; i < x.rows(); ++i) {
                const double m = std::max(std::abs(x(i, j)), std::abs(y(i, j)));
                const double d = std::abs(x(i, j) - y(i, j));
                if (m < near_zero)
                    res.worst_abs_small = std::max(res.worst_abs_small, d);
                else
                    res.worst_rel = std::max(res.worst_rel, d / m);
            }
    };
    for (std::size_t i = 0; i < a.W.size(); ++i) scan(a.W[i], b.W[i]);
    for (std::size_t i = 0; i < a.Wp.size(); ++i) scan(a.Wp[i], b.Wp[i]);
    return res;
}

/// Weights at a generic position: initialized, then jittered so the bias row
/// and projections are all non-trivial.  Not orthonormal; fine for gradient
/// and forward checks that do not require feasibility.
inline NetworkWeights jittered_weights(const ModelTopology& topo, std::uint64_t seed,
                                       double scale = 0.2) {
    NetworkWeights w = init_weights(topo, seed);
    Rng rng(derive_seed(seed, 99));
    for (auto& m : w.W) m += scale * rng.normal_matrix(m.rows(), m.cols());
    for (auto& m : w.Wp) m += scale * rng.normal_matrix(m.rows(), m.cols());
    return w;
}

inline double max_abs_diff(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
    return (a - b).cwiseAbs().maxCoeff();
}

inline double max_rel_diff(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
    double worst = 0.0;
    for (int i = 0; i < a.size(); ++i) {
        const double m = std::max({std::abs(a[i]), std::abs(b[i]), 1e-300});
        worst = std::max(worst, std::abs(a[i] - b[i]) / m);
    }
    return worst;
}

}  // namespace testsup
