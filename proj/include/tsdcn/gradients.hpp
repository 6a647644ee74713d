#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <vector>

#include "tsdcn/data.hpp"
#include "tsdcn/errors.hpp"
#include "tsdcn/forward.hpp"
#include "tsdcn/weights.hpp"

namespace tsdcn {

/// Posterior probabilities are floored at this value inside the log loss so
/// a collapsed posterior yields a large finite loss instead of infinity.
inline constexpr double kPosteriorFloor = 1e-300;

/// Loss gradients, shaped exactly like the weights they differentiate.
struct Gradients {
    std::vector<Eigen::MatrixXd> W;
    std::vector<Eigen::MatrixXd> Wp;

    static Gradients zeros(const ModelTopology& topo) {
        const NetworkWeights z = NetworkWeights::zeros(topo);
        return Gradients{z.W, z.Wp};
    }

    void set_zero() {
        for (auto& m : W) m.setZero();
        for (auto& m : Wp) m.setZero();
    }

    double max_abs() const {
        double v = 0.0;
        for (const auto& m : W) if (m.size()) v = std::max(v, m.cwiseAbs().maxCoeff());
        for (const auto& m : Wp) if (m.size()) v = std::max(v, m.cwiseAbs().maxCoeff());
        return v;
    }
};

namespace detail {

/// Backpropagate one sample's trace, adding into grad.  The per-step shift
/// applied before exponentiation is treated as a constant: the layer-6
/// normalization makes the outputs exactly shift-invariant, so the extra
/// term sums to zero and dropping it is exact, not an approximation.
inline void backprop_sample(const NetworkWeights& w, const ForwardTrace& trace, int label,
                            Gradients& grad) {
    const ModelTopology& topo = w.topo;
    const int T = static_cast<int>(trace.steps.size());
    const int n_state = topo.total_states();

    Eigen::VectorXd dO6 = Eigen::VectorXd::Zero(n_state);
    const StepTrace& last = trace.steps[T - 1];
    const double post = std::max(last.O7[label - 1], kPosteriorFloor);
    for (int k = 0; k < topo.K[label - 1]; ++k)
        dO6[topo.state_index(label - 1, k)] = -1.0 / post;

    Eigen::VectorXd dO6prev(n_state);
    Eigen::VectorXd dA, dXq, dxp;
    for (int t = T - 1; t >= 0; --t) {
        const StepTrace& st = trace.steps[t];
        const double S = dO6.dot(st.O6);
        dO6prev.setZero();
        for (int c = 0; c < topo.C; ++c) {
            for (int k = 0; k < topo.K[c]; ++k) {
                const int si = topo.state_index(c, k);
                const double dG = (dO6[si] - S) / st.Z;
                if (dG == 0.0) continue;
                for (int kp = 0; kp < topo.K[c]; ++kp)
                    dO6prev[topo.state_index(c, kp)] += dG * st.B[si][kp];
                for (int m = 0; m < topo.M[c][k]; ++m) {
                    const int ci = topo.component_index(c, k, m);
                    // dB/dA through E = exp(A - s): elementwise E, and each
                    // previous state k' weighs in with its recurrent output.
                    dA = dG * st.O6prev.segment(topo.state_index(c, 0), topo.K[c])
                             .cwiseProduct(st.E[ci]);
                    grad.Wp[ci].noalias() += dA * st.Xq[ci].transpose();
                    dXq.noalias() = w.Wp[ci].transpose() * dA;
                    dxp = Eigen::VectorXd::Zero(topo.Dp);
                    quadratic_backward(st.xp[ci], dXq, dxp);
                    grad.W[ci].noalias() += st.X * dxp.transpose();
                }
            }
        }
        dO6.swap(dO6prev);
    }
}

}  // namespace detail

/// J(w) = -sum_n log P(label_n | series_n).
inline double negative_log_likelihood(const NetworkWeights& w, const Dataset& ds) {
    ds.validate();
    if (ds.n_classes() > w.topo.C)
        throw InvalidParams("negative_log_likelihood: label exceeds class count");
    double J = 0.0;
    ForwardTrace trace;
    for (const auto& s : ds.samples) {
        forward_posterior(w, s.series, trace);
        J -= std::log(std::max(trace.posterior()[s.label - 1], kPosteriorFloor));
    }
    return J;
}

/// Loss and its gradient in one pass (the forward traces are needed for
/// backpropagation anyway).  grad is overwritten.
inline double nll_and_grad(const NetworkWeights& w, const Dataset& ds, Gradients& grad) {
    ds.validate();
    if (ds.n_classes() > w.topo.C)
        throw InvalidParams("nll_and_grad: label exceeds class count");
    if (grad.W.size() != w.W.size() || grad.Wp.size() != w.Wp.size())
        grad = Gradients::zeros(w.topo);
    else
        grad.set_zero();

    double J = 0.0;
    ForwardTrace trace;
    for (const auto& s : ds.samples) {
        forward_posterior(w, s.series, trace);
        J -= std::log(std::max(trace.posterior()[s.label - 1], kPosteriorFloor));
        detail::backprop_sample(w, trace, s.label, grad);
    }
    return J;
}

inline Gradients grad_weights(const NetworkWeights& w, const Dataset& ds) {
    Gradients g;
    nll_and_grad(w, ds, g);
    return g;
}

}  // namespace tsdcn
