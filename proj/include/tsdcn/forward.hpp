#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "tsdcn/errors.hpp"
#include "tsdcn/quadratic.hpp"
#include "tsdcn/weights.hpp"

namespace tsdcn {

/// Intermediates of one time step, kept for backpropagation.
/// Per-component vectors are indexed by ModelTopology::component_index;
/// per-state vectors by ModelTopology::state_index.  Vectors over the
/// previous state k' have length K[c] of the owning class.
struct StepTrace {
    Eigen::VectorXd X;                // augmented input [1; x], length D+1
    std::vector<Eigen::VectorXd> xp;  // layer 2, per component, length Dp
    std::vector<Eigen::VectorXd> Xq;  // layer 3, per component, length H
    std::vector<Eigen::VectorXd> E;   // layer 4, per component, over k'
    std::vector<Eigen::VectorXd> B;   // layer 5 partial, per state, over k'
    Eigen::VectorXd O6prev;           // recurrent input, flat over states
    Eigen::VectorXd G;                // layer 6 numerator, flat over states
    double Z = 0.0;                   // layer 6 normalizer
    Eigen::VectorXd O6;               // layer 6 output, flat over states
    Eigen::VectorXd O7;               // layer 7 output, per class
};

struct ForwardTrace {
    std::vector<StepTrace> steps;

    const Eigen::VectorXd& posterior() const { return steps.back().O7; }
};

/// One pass through layers 1-7 for input x given the previous layer-6
/// output.  At t=1 pass O6prev identically 1.  Activations are shifted by
/// the global max before exponentiation; the shift cancels in the layer-6
/// normalization, so the outputs are exactly those of the unshifted network.
inline void forward_step(const NetworkWeights& w, const Eigen::VectorXd& O6prev,
                         const Eigen::VectorXd& x, StepTrace& out) {
    const ModelTopology& topo = w.topo;
    if (x.size() != topo.D) throw InvalidParams("forward_step: input has wrong dimension");
    if (O6prev.size() != topo.total_states())
        throw InvalidParams("forward_step: recurrent state has wrong size");

    const int n_comp = topo.total_components();
    const int n_state = topo.total_states();
    out.X.resize(topo.D + 1);
    out.X[0] = 1.0;
    out.X.tail(topo.D) = x;
    out.xp.resize(n_comp);
    out.Xq.resize(n_comp);
    out.E.resize(n_comp);
    out.B.resize(n_state);
    out.O6prev = O6prev;
    out.G.resize(n_state);
    out.O6.resize(n_state);
    out.O7.resize(topo.C);

    // Layers 2-4 up to the exponential: store raw activations in E, find the
    // global max for the shift.
    double shift = -std::numeric_limits<double>::infinity();
    for (int c = 0; c < topo.C; ++c)
        for (int k = 0; k < topo.K[c]; ++k)
            for (int m = 0; m < topo.M[c][k]; ++m) {
                const int ci = topo.component_index(c, k, m);
                out.xp[ci].noalias() = w.W[ci].transpose() * out.X;
                quadratic_expand(out.xp[ci], out.Xq[ci]);
                out.E[ci].noalias() = w.Wp[ci] * out.Xq[ci];
                const double local = out.E[ci].maxCoeff();
                if (local > shift) shift = local;
            }
    if (!std::isfinite(shift)) throw NumericalError("forward_step: non-finite activation");

    // Layers 4-7.
    double Z = 0.0;
    for (int c = 0; c < topo.C; ++c) {
        for (int k = 0; k < topo.K[c]; ++k) {
            const int si = topo.state_index(c, k);
            Eigen::VectorXd& B = out.B[si];
            B = Eigen::VectorXd::Zero(topo.K[c]);
            for (int m = 0; m < topo.M[c][k]; ++m) {
                const int ci = topo.component_index(c, k, m);
                out.E[ci] = (out.E[ci].array() - shift).exp();
                B += out.E[ci];
            }
            double G = 0.0;
            for (int kp = 0; kp < topo.K[c]; ++kp)
                G += O6prev[topo.state_index(c, kp)] * B[kp];
            out.G[si] = G;
            Z += G;
        }
    }
    if (!std::isfinite(Z) || Z <= 0.0)
        throw NumericalError("forward_step: layer-6 normalizer is zero or non-finite");
    out.Z = Z;
    out.O6 = out.G / Z;
    for (int c = 0; c < topo.C; ++c) {
        double s = 0.0;
        for (int k = 0; k < topo.K[c]; ++k) s += out.O6[topo.state_index(c, k)];
        out.O7[c] = s;
    }
}

/// Run the full series through the network, keeping every step for
/// backpropagation.  The posterior over classes is steps.back().O7.
inline void forward_posterior(const NetworkWeights& w, const Eigen::MatrixXd& series,
                              ForwardTrace& trace) {
    const int T = static_cast<int>(series.rows());
    if (T < 1) throw InvalidParams("forward_posterior: empty series");
    trace.steps.resize(T);
    Eigen::VectorXd O6prev = Eigen::VectorXd::Ones(w.topo.total_states());
    for (int t = 0; t < T; ++t) {
        try {
            forward_step(w, O6prev, series.row(t).transpose(), trace.steps[t]);
        } catch (const NumericalError& e) {
            throw NumericalError("t=" + std::to_string(t + 1) + ": " + e.what());
        }
        O6prev = trace.steps[t].O6;
    }
}

inline Eigen::VectorXd forward_posterior(const NetworkWeights& w, const Eigen::MatrixXd& series) {
    ForwardTrace trace;
    forward_posterior(w, series, trace);
    return trace.posterior();
}

/// Most probable class, 1-based.  Ties go to the lowest class index.
inline int classify(const NetworkWeights& w, const Eigen::MatrixXd& series) {
    const Eigen::VectorXd post = forward_posterior(w, series);
    int best = 0;
    for (int c = 1; c < post.size(); ++c)
        if (post[c] > post[best]) best = c;
    return best + 1;
}

}  // namespace tsdcn
