#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <string>
#include <vector>

#include "tsdcn/constraints.hpp"
#include "tsdcn/data.hpp"
#include "tsdcn/errors.hpp"
#include "tsdcn/gradients.hpp"
#include "tsdcn/io.hpp"
#include "tsdcn/rng.hpp"
#include "tsdcn/weights.hpp"

namespace tsdcn {

struct TrainingConfig {
    double learning_rate = 0.01;  // base step size gamma
    int max_iter = 200;
    double loss_tol = 1e-6;  // stop when |J_prev - J| drops below this
    double orth_tol = 1e-8;  // re-orthonormalize V when drift exceeds this
    bool backtrack = true;   // halve gamma on loss increase, up to 30 times
    bool terminal_attractor = false;  // scale gamma by sqrt(J), capped at 1e3
    bool train_projection = true;     // false: freeze the V rows of W
    std::uint64_t seed = 0;           // initialization seed

    void validate() const {
        if (learning_rate <= 0.0) throw InvalidParams("training: learning_rate must be > 0");
        if (max_iter < 1) throw InvalidParams("training: max_iter must be >= 1");
        if (loss_tol <= 0.0) throw InvalidParams("training: loss_tol must be > 0");
        if (orth_tol <= 0.0) throw InvalidParams("training: orth_tol must be > 0");
    }
};

/// Halvings of gamma attempted before a step is declared failed.
inline constexpr int kMaxBacktracks = 30;

/// One accepted training step.  J and h_inf describe the weights after the
/// step; gamma is the accepted step size and backtracks how many halvings
/// it took to find it.
struct TrainRecord {
    int iter = 0;
    double J = 0.0;
    double h_inf = 0.0;
    double gamma = 0.0;
    int backtracks = 0;
};

struct TrainResult {
    std::vector<TrainRecord> history;  // row 0 is the initial state
    bool converged = false;
    int iterations = 0;
};

/// Fresh weights for a topology: every V is a random orthonormal frame (QR
/// of a Gaussian matrix, column signs fixed by the R diagonal), the
/// projected-mean row is zero, and Wp encodes unit covariance with uniform
/// transitions and mixtures plus a small bias jitter to break symmetry.
/// Draw order is fixed: per component in flat order, the D*Dp Gaussian
/// entries row-major, then one jitter draw per previous state.
inline NetworkWeights init_weights(const ModelTopology& topo, std::uint64_t seed) {
    topo.validate();
    NetworkWeights w = NetworkWeights::zeros(topo);
    Rng rng(seed);
    const double norm_const = -0.5 * topo.Dp * std::log(2.0 * M_PI);

    for (int c = 0; c < topo.C; ++c)
        for (int k = 0; k < topo.K[c]; ++k)
            for (int m = 0; m < topo.M[c][k]; ++m) {
                const int ci = topo.component_index(c, k, m);
                const Eigen::MatrixXd A = rng.normal_matrix(topo.D, topo.Dp);
                Eigen::HouseholderQR<Eigen::MatrixXd> qr(A);
                Eigen::MatrixXd V =
                    qr.householderQ() * Eigen::MatrixXd::Identity(topo.D, topo.Dp);
                const Eigen::MatrixXd R = qr.matrixQR().topRows(topo.Dp);
                for (int j = 0; j < topo.Dp; ++j)
                    if (R(j, j) < 0.0) V.col(j) = -V.col(j);
                w.W[ci].row(0).setZero();
                w.W[ci].bottomRows(topo.D) = V;

                const double bias = -std::log(static_cast<double>(topo.K[c])) -
                                    std::log(static_cast<double>(topo.M[c][k])) + norm_const;
                for (int kp = 0; kp < topo.K[c]; ++kp) {
                    w.Wp[ci](kp, 0) = bias + 0.01 * rng.normal();
                    for (int j = 0; j < topo.Dp; ++j)
                        w.Wp[ci](kp, quad_index(topo.Dp, j, j)) = -0.5;
                }
            }
    return w;
}

/// One constrained descent step.
///
/// The loss gradient is evaluated once at the entry weights.  For each
/// component the V update direction comes from the first-order KKT system
/// (descend while staying first-order tangent to the orthonormality
/// constraints, plus a restoring term for accumulated drift); Wp and the
/// projected-mean row descend along the plain gradient.  The step size
/// starts at the configured gamma and is halved until the post-step loss
/// (after pulling V back onto the constraint set) does not increase beyond
/// roundoff.  Throws StepFailure when max_backtracks halvings still fail.
inline TrainRecord update_step(NetworkWeights& w, const Dataset& ds,
                               const TrainingConfig& cfg) {
    const ModelTopology& topo = w.topo;
    const int n_comp = topo.total_components();
    const int n_vars = (topo.D + 1) * topo.Dp;

    Gradients grad;
    double J_entry = nll_and_grad(w, ds, grad);

    std::vector<Eigen::VectorXd> dirs(n_comp);
    if (cfg.train_projection) {
        for (int attempt = 0;; ++attempt) {
            try {
                for (int ci = 0; ci < n_comp; ++ci) {
                    const Eigen::MatrixXd V = w.W[ci].bottomRows(topo.D);
                    const Eigen::Map<const Eigen::VectorXd> g(grad.W[ci].data(), n_vars);
                    dirs[ci] = solve_kkt(g, constraint_jacobian(V), constraint_values(V)).d;
                }
                break;
            } catch (const RankDeficient&) {
                // A drifted V can make the constraint gradients dependent;
                // snap back to the manifold and rebuild the system once.
                if (attempt > 0) throw;
                restore_orthogonality(w, 1e-15);
                J_entry = nll_and_grad(w, ds, grad);
            }
        }
    } else {
        for (int ci = 0; ci < n_comp; ++ci) {
            Eigen::MatrixXd d = -grad.W[ci];
            d.bottomRows(topo.D).setZero();
            dirs[ci] = Eigen::Map<const Eigen::VectorXd>(d.data(), n_vars);
        }
    }

    double gamma = cfg.learning_rate;
    if (cfg.terminal_attractor)
        gamma *= std::min(std::sqrt(std::max(J_entry, 0.0)), 1e3);

    const double slack = 1e-12 * std::max(1.0, std::abs(J_entry));
    const int tries = cfg.backtrack ? kMaxBacktracks + 1 : 1;
    NetworkWeights cand = w;
    for (int bt = 0; bt < tries; ++bt, gamma *= 0.5) {
        for (int ci = 0; ci < n_comp; ++ci) {
            cand.W[ci] = w.W[ci] +
                gamma * Eigen::Map<const Eigen::MatrixXd>(dirs[ci].data(), topo.D + 1, topo.Dp);
            cand.Wp[ci] = w.Wp[ci] - gamma * grad.Wp[ci];
        }
        if (cfg.train_projection) restore_orthogonality(cand, cfg.orth_tol);

        double J_new;
        try {
            J_new = negative_log_likelihood(cand, ds);
        } catch (const NumericalError&) {
            if (!cfg.backtrack) throw;
            continue;  // overflowed step; halve and retry
        }
        if (!cfg.backtrack || J_new <= J_entry + slack) {
            w = cand;
            TrainRecord rec;
            rec.J = J_new;
            rec.h_inf = orthonormality_error(w);
            rec.gamma = gamma;
            rec.backtracks = bt;
            return rec;
        }
    }
    throw StepFailure("update_step: no acceptable step after " +
                      std::to_string(kMaxBacktracks) + " halvings");
}

/// Iterate update_step until the loss decrease falls below loss_tol or
/// max_iter is reached.  Starts by pulling the weights onto the constraint
/// set if they drifted.  history[0] records the initial state.
inline TrainResult train(NetworkWeights& w, const Dataset& ds, const TrainingConfig& cfg) {
    cfg.validate();
    if (cfg.train_projection) restore_orthogonality(w, cfg.orth_tol);

    TrainResult res;
    TrainRecord init;
    init.iter = 0;
    init.J = negative_log_likelihood(w, ds);
    init.h_inf = orthonormality_error(w);
    res.history.push_back(init);

    double J_prev = init.J;
    for (int iter = 1; iter <= cfg.max_iter; ++iter) {
        TrainRecord rec;
        try {
            rec = update_step(w, ds, cfg);
        } catch (const StepFailure& e) {
            throw StepFailure("iteration " + std::to_string(iter) + ": " + e.what());
        }
        rec.iter = iter;
        res.history.push_back(rec);
        res.iterations = iter;
        if (std::abs(J_prev - rec.J) < cfg.loss_tol) {
            res.converged = true;
            break;
        }
        J_prev = rec.J;
    }
    return res;
}

/// Training log as CSV, one row per iteration.  The iteration-0 record that
/// train() keeps for the initial state is not part of the log.
inline void write_training_log(const std::string& path, const std::vector<TrainRecord>& hist) {
    std::string out = "iter,J,h_inf,gamma,backtracks\n";
    char buf[160];
    for (const auto& r : hist) {
        if (r.iter == 0) continue;
        std::snprintf(buf, sizeof(buf), "%d,%.17g,%.17g,%.17g,%d\n", r.iter, r.J, r.h_inf,
                      r.gamma, r.backtracks);
        out += buf;
    }
    write_text_file(path, out);
}

}  // namespace tsdcn
