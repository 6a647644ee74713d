#pragma once

#include <Eigen/Cholesky>
#include <Eigen/Dense>
#include <cmath>
#include <vector>

#include "tsdcn/errors.hpp"
#include "tsdcn/quadratic.hpp"
#include "tsdcn/rng.hpp"
#include "tsdcn/weights.hpp"

namespace tsdcn {

/// Probability parameters are floored at this value before taking logs, so
/// zero transition or mixture entries encode to a large negative bias rather
/// than -inf.
inline constexpr double kLogFloor = 1e-12;

/// Per-component generative parameters: projection, full-space mean, and
/// covariance of the projected variable.
struct TsdcaComponent {
    Eigen::MatrixXd V;      // D x Dp, orthonormal columns
    Eigen::VectorXd mu;     // length D
    Eigen::MatrixXd Sigma;  // Dp x Dp, SPD
};

/// Full generative view of the model: Gaussian components per (c,k,m),
/// mixture weights r[state] over m, and per-class transition matrices
/// gamma[c] with gamma[c](k',k) the probability of moving from k' to k
/// (rows sum to 1).  The prior of state k is the column sum of gamma[c],
/// matching the network's all-ones recurrent state at t=1.
struct TsdcaParams {
    ModelTopology topo;
    std::vector<TsdcaComponent> comps;   // per component index
    std::vector<Eigen::VectorXd> r;      // per state index, length M[c][k]
    std::vector<Eigen::MatrixXd> gamma;  // per class, K[c] x K[c]

    void validate() const {
        topo.validate();
        if (static_cast<int>(comps.size()) != topo.total_components())
            throw InvalidParams("tsdca params: wrong component count");
        if (static_cast<int>(r.size()) != topo.total_states())
            throw InvalidParams("tsdca params: wrong state count");
        if (static_cast<int>(gamma.size()) != topo.C)
            throw InvalidParams("tsdca params: wrong class count");
        for (int c = 0; c < topo.C; ++c) {
            const auto& g = gamma[c];
            if (g.rows() != topo.K[c] || g.cols() != topo.K[c])
                throw InvalidParams("tsdca params: gamma has wrong shape");
            if ((g.array() < 0.0).any())
                throw InvalidParams("tsdca params: negative transition probability");
            for (int kp = 0; kp < topo.K[c]; ++kp)
                if (std::abs(g.row(kp).sum() - 1.0) > 1e-6)
                    throw InvalidParams("tsdca params: transition rows must sum to 1");
            for (int k = 0; k < topo.K[c]; ++k) {
                const int si = topo.state_index(c, k);
                if (r[si].size() != topo.M[c][k])
                    throw InvalidParams("tsdca params: mixture weights have wrong size");
                if ((r[si].array() < 0.0).any())
                    throw InvalidParams("tsdca params: negative mixture weight");
                if (std::abs(r[si].sum() - 1.0) > 1e-6)
                    throw InvalidParams("tsdca params: mixture weights must sum to 1");
                for (int m = 0; m < topo.M[c][k]; ++m) {
                    const auto& comp = comps[topo.component_index(c, k, m)];
                    if (comp.V.rows() != topo.D || comp.V.cols() != topo.Dp)
                        throw InvalidParams("tsdca params: V has wrong shape");
                    if (comp.mu.size() != topo.D)
                        throw InvalidParams("tsdca params: mu has wrong size");
                    if (comp.Sigma.rows() != topo.Dp || comp.Sigma.cols() != topo.Dp)
                        throw InvalidParams("tsdca params: Sigma has wrong shape");
                }
            }
        }
    }
};

namespace detail {

/// Cholesky of an SPD matrix, or InvalidParams.
inline Eigen::LLT<Eigen::MatrixXd> spd_cholesky(const Eigen::MatrixXd& S, const char* what) {
    Eigen::LLT<Eigen::MatrixXd> llt(S);
    if (llt.info() != Eigen::Success)
        throw InvalidParams(std::string(what) + ": covariance is not positive definite");
    return llt;
}

inline double logdet_from_llt(const Eigen::LLT<Eigen::MatrixXd>& llt) {
    return 2.0 * llt.matrixL().toDenseMatrix().diagonal().array().log().sum();
}

inline double logsumexp(const Eigen::VectorXd& v) {
    const double m = v.maxCoeff();
    if (!std::isfinite(m)) return m;
    return m + std::log((v.array() - m).exp().sum());
}

}  // namespace detail

/// Rewrite the generative parameters as network weights.
///
/// W[ci]: row 0 = -(V^T mu)^T, rows 1..D = V.
/// Wp[ci] row k': bias column packs log gamma(k',k) + log r_m minus the
/// Gaussian normalizer; the remaining columns hold -1/2 (2 - delta_jj')
/// S'_jj' over the upper triangle of S' = Sigma^{-1}, aligned with the
/// quadratic feature layout.
inline NetworkWeights encode_tsdca_params(const TsdcaParams& p) {
    p.validate();
    const ModelTopology& topo = p.topo;
    NetworkWeights w = NetworkWeights::zeros(topo);
    const double norm_const = -0.5 * topo.Dp * std::log(2.0 * M_PI);

    for (int c = 0; c < topo.C; ++c) {
        for (int k = 0; k < topo.K[c]; ++k) {
            const int si = topo.state_index(c, k);
            for (int m = 0; m < topo.M[c][k]; ++m) {
                const int ci = topo.component_index(c, k, m);
                const TsdcaComponent& comp = p.comps[ci];

                w.W[ci].row(0) = -(comp.V.transpose() * comp.mu).transpose();
                w.W[ci].bottomRows(topo.D) = comp.V;

                const auto llt = detail::spd_cholesky(comp.Sigma, "encode_tsdca_params");
                const double logdet = detail::logdet_from_llt(llt);
                const Eigen::MatrixXd Sinv =
                    llt.solve(Eigen::MatrixXd::Identity(topo.Dp, topo.Dp));
                const double log_r = std::log(std::max(p.r[si][m], kLogFloor));

                for (int kp = 0; kp < topo.K[c]; ++kp) {
                    const double log_gamma =
                        std::log(std::max(p.gamma[c](kp, k), kLogFloor));
                    w.Wp[ci](kp, 0) = log_gamma + log_r + norm_const - 0.5 * logdet;
                    for (int j = 0; j < topo.Dp; ++j)
                        for (int jp = j; jp < topo.Dp; ++jp) {
                            const double scale = (j == jp) ? 1.0 : 2.0;
                            w.Wp[ci](kp, quad_index(topo.Dp, j, jp)) =
                                -0.5 * scale * Sinv(j, jp);
                        }
                }
            }
        }
    }
    return w;
}

/// Class posterior computed straight from the generative parameters with a
/// log-space forward recursion, for an explicit per-(c,k) prior pi (only an
/// overall positive scale of pi cancels).  Shares no code with the layered
/// network; the two must agree to tight tolerance on any valid input when
/// pi is the column-sum prior (see column_sum_prior).
inline Eigen::VectorXd tsdca_direct_posterior(const TsdcaParams& p,
                                              const Eigen::MatrixXd& series,
                                              const std::vector<Eigen::VectorXd>& pi) {
    p.validate();
    if (static_cast<int>(pi.size()) != p.topo.C)
        throw InvalidParams("tsdca_direct_posterior: pi must have one vector per class");
    for (int c = 0; c < p.topo.C; ++c) {
        if (pi[c].size() != p.topo.K[c])
            throw InvalidParams("tsdca_direct_posterior: pi[c] must have K[c] entries");
        if ((pi[c].array() < 0.0).any() || !(pi[c].sum() > 0.0))
            throw InvalidParams("tsdca_direct_posterior: pi must be nonnegative with positive sum");
    }
    const ModelTopology& topo = p.topo;
    const int T = static_cast<int>(series.rows());
    if (T < 1) throw InvalidParams("tsdca_direct_posterior: empty series");
    if (series.cols() != topo.D)
        throw InvalidParams("tsdca_direct_posterior: series has wrong dimension");

    // Per-component Gaussian constants.
    const int n_comp = topo.total_components();
    std::vector<Eigen::MatrixXd> Sinv(n_comp);
    std::vector<double> log_norm(n_comp);
    for (int ci = 0; ci < n_comp; ++ci) {
        const auto llt = detail::spd_cholesky(p.comps[ci].Sigma, "tsdca_direct_posterior");
        Sinv[ci] = llt.solve(Eigen::MatrixXd::Identity(topo.Dp, topo.Dp));
        log_norm[ci] =
            -0.5 * topo.Dp * std::log(2.0 * M_PI) - 0.5 * detail::logdet_from_llt(llt);
    }

    const auto log_b = [&](int c, int k, const Eigen::VectorXd& x) {
        const int si = topo.state_index(c, k);
        Eigen::VectorXd terms(topo.M[c][k]);
        for (int m = 0; m < topo.M[c][k]; ++m) {
            const int ci = topo.component_index(c, k, m);
            const Eigen::VectorXd xp = p.comps[ci].V.transpose() * (x - p.comps[ci].mu);
            const double psi = -0.5 * xp.dot(Sinv[ci] * xp);
            terms[m] = std::log(std::max(p.r[si][m], kLogFloor)) + log_norm[ci] + psi;
        }
        return detail::logsumexp(terms);
    };

    // log alpha over all states, normalized each step to keep magnitudes sane;
    // the common offset cancels in the final posterior.
    Eigen::VectorXd log_alpha(topo.total_states());
    for (int c = 0; c < topo.C; ++c)
        for (int k = 0; k < topo.K[c]; ++k)
            log_alpha[topo.state_index(c, k)] =
                std::log(std::max(pi[c][k], kLogFloor)) +
                log_b(c, k, series.row(0).transpose());
    for (int t = 1; t < T; ++t) {
        log_alpha.array() -= log_alpha.maxCoeff();
        Eigen::VectorXd next(topo.total_states());
        for (int c = 0; c < topo.C; ++c)
            for (int k = 0; k < topo.K[c]; ++k) {
                Eigen::VectorXd terms(topo.K[c]);
                for (int kp = 0; kp < topo.K[c]; ++kp)
                    terms[kp] = log_alpha[topo.state_index(c, kp)] +
                                std::log(std::max(p.gamma[c](kp, k), kLogFloor));
                next[topo.state_index(c, k)] =
                    detail::logsumexp(terms) + log_b(c, k, series.row(t).transpose());
            }
        log_alpha = next;
    }

    Eigen::VectorXd posterior(topo.C);
    const double offset = log_alpha.maxCoeff();
    double total = 0.0;
    for (int c = 0; c < topo.C; ++c) {
        double s = 0.0;
        for (int k = 0; k < topo.K[c]; ++k)
            s += std::exp(log_alpha[topo.state_index(c, k)] - offset);
        posterior[c] = s;
        total += s;
    }
    if (!(total > 0.0) || !std::isfinite(total))
        throw NumericalError("tsdca_direct_posterior: posterior mass vanished");
    return posterior / total;
}

/// The prior the layered network implies by starting its recurrence at 1.0:
/// pi_k^c = sum over k' of gamma^c(k',k).
inline std::vector<Eigen::VectorXd> column_sum_prior(const TsdcaParams& p) {
    std::vector<Eigen::VectorXd> pi(p.topo.C);
    for (int c = 0; c < p.topo.C; ++c) pi[c] = p.gamma[c].colwise().sum().transpose();
    return pi;
}

inline Eigen::VectorXd tsdca_direct_posterior(const TsdcaParams& p,
                                              const Eigen::MatrixXd& series) {
    return tsdca_direct_posterior(p, series, column_sum_prior(p));
}

/// Bayes posterior of a plain Gaussian-mixture classifier: the K=1, T=1
/// special case, computed without any recursion.
inline Eigen::VectorXd gmm_posterior(const TsdcaParams& p, const Eigen::VectorXd& x) {
    p.validate();
    const ModelTopology& topo = p.topo;
    for (int c = 0; c < topo.C; ++c)
        if (topo.K[c] != 1) throw InvalidParams("gmm_posterior: requires K = 1");

    Eigen::VectorXd log_post(topo.C);
    for (int c = 0; c < topo.C; ++c) {
        const int si = topo.state_index(c, 0);
        Eigen::VectorXd terms(topo.M[c][0]);
        for (int m = 0; m < topo.M[c][0]; ++m) {
            const int ci = topo.component_index(c, 0, m);
            const auto llt = detail::spd_cholesky(p.comps[ci].Sigma, "gmm_posterior");
            const Eigen::VectorXd xp = p.comps[ci].V.transpose() * (x - p.comps[ci].mu);
            const double psi = -0.5 * xp.dot(llt.solve(xp));
            terms[m] = std::log(std::max(p.r[si][m], kLogFloor)) -
                       0.5 * topo.Dp * std::log(2.0 * M_PI) -
                       0.5 * detail::logdet_from_llt(llt) + psi;
        }
        log_post[c] = detail::logsumexp(terms);
    }
    log_post.array() -= log_post.maxCoeff();
    Eigen::VectorXd post = log_post.array().exp();
    return post / post.sum();
}

/// Random valid parameters for oracle and round-trip tests: orthonormal V
/// from a QR factorization, standard-normal means, well-conditioned SPD
/// covariances, and normalized uniform mixture and transition weights.
inline TsdcaParams sample_tsdca_params(const ModelTopology& topo, Rng& rng) {
    topo.validate();
    TsdcaParams p;
    p.topo = topo;
    p.comps.resize(topo.total_components());
    p.r.resize(topo.total_states());
    p.gamma.resize(topo.C);

    for (int c = 0; c < topo.C; ++c) {
        for (int k = 0; k < topo.K[c]; ++k) {
            const int si = topo.state_index(c, k);
            for (int m = 0; m < topo.M[c][k]; ++m) {
                TsdcaComponent& comp = p.comps[topo.component_index(c, k, m)];
                const Eigen::MatrixXd A = rng.normal_matrix(topo.D, topo.Dp);
                Eigen::HouseholderQR<Eigen::MatrixXd> qr(A);
                comp.V = qr.householderQ() * Eigen::MatrixXd::Identity(topo.D, topo.Dp);
                const Eigen::MatrixXd R = qr.matrixQR().topRows(topo.Dp);
                for (int j = 0; j < topo.Dp; ++j)
                    if (R(j, j) < 0.0) comp.V.col(j) = -comp.V.col(j);
                comp.mu = rng.normal_vector(topo.D);
                const Eigen::MatrixXd B = rng.normal_matrix(topo.Dp, topo.Dp);
                comp.Sigma = B * B.transpose() / topo.Dp +
                             0.5 * Eigen::MatrixXd::Identity(topo.Dp, topo.Dp);
            }
            Eigen::VectorXd rw = rng.uniform_vector(topo.M[c][k], 0.1, 1.0);
            p.r[si] = rw / rw.sum();
        }
        Eigen::MatrixXd g = rng.uniform_matrix(topo.K[c], topo.K[c], 0.1, 1.0);
        for (int kp = 0; kp < topo.K[c]; ++kp) g.row(kp) /= g.row(kp).sum();
        p.gamma[c] = g;
    }
    return p;
}

}  // namespace tsdcn
