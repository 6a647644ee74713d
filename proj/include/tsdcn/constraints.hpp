#pragma once

#include <Eigen/Dense>
#include <cmath>

#include "tsdcn/errors.hpp"
#include "tsdcn/weights.hpp"

namespace tsdcn {

/// Number of orthonormality constraints on a D x Dp projection.
inline int n_constraints(int Dp) { return Dp * (Dp + 1) / 2; }

/// 0-based slot of the constraint v_j . v_l - delta_jl for 0 <= j <= l < Dp.
/// Constraints are ordered (0,0),(0,1),(1,1),(0,2),(1,2),(2,2),...
inline int constraint_index(int Dp, int j, int l) {
    if (j < 0 || l < j || l >= Dp)
        throw InvalidParams("constraint_index: need 0 <= j <= l < Dp");
    return l * (l + 1) / 2 + j;
}

/// h(V): pairwise column dot products against the identity target.
inline Eigen::VectorXd constraint_values(const Eigen::MatrixXd& V) {
    const int Dp = static_cast<int>(V.cols());
    Eigen::VectorXd h(n_constraints(Dp));
    for (int l = 0; l < Dp; ++l)
        for (int j = 0; j <= l; ++j)
            h[constraint_index(Dp, j, l)] = V.col(j).dot(V.col(l)) - (j == l ? 1.0 : 0.0);
    return h;
}

/// dh/dvec(W) for one component block W of shape (D+1) x Dp, flattened
/// column-major (Eigen's default), so entry W(a,b) sits at column b*(D+1)+a.
/// Row 0 of W holds the projected mean, which no constraint touches, so
/// those columns stay zero.  For constraint (j,l): the v_j slots get v_l,
/// the v_l slots get v_j, and the diagonal constraint doubles up.
inline Eigen::MatrixXd constraint_jacobian(const Eigen::MatrixXd& V) {
    const int D = static_cast<int>(V.rows());
    const int Dp = static_cast<int>(V.cols());
    Eigen::MatrixXd jac = Eigen::MatrixXd::Zero(n_constraints(Dp), (D + 1) * Dp);
    for (int l = 0; l < Dp; ++l)
        for (int j = 0; j <= l; ++j) {
            const int row = constraint_index(Dp, j, l);
            jac.row(row).segment(j * (D + 1) + 1, D) += V.col(l).transpose();
            jac.row(row).segment(l * (D + 1) + 1, D) += V.col(j).transpose();
        }
    return jac;
}

struct KktSolution {
    Eigen::VectorXd d;       // step direction over vec(W)
    Eigen::VectorXd lambda;  // multipliers, one per constraint
};

/// Solve
///   [ I    Jh^T ] [ d      ]   [ -gradJ ]
///   [ Jh   0    ] [ lambda ] = [ -h     ]
/// via the Schur complement (Jh Jh^T) lambda = h - Jh gradJ, then
/// d = -gradJ - Jh^T lambda.  The Gram matrix goes singular exactly when
/// the constraint gradients are linearly dependent (e.g. duplicated
/// projection columns); that surfaces as RankDeficient.
inline KktSolution solve_kkt(const Eigen::VectorXd& grad, const Eigen::MatrixXd& jac,
                             const Eigen::VectorXd& h) {
    if (jac.cols() != grad.size() || jac.rows() != h.size())
        throw InvalidParams("solve_kkt: shape mismatch");

    const Eigen::MatrixXd gram = jac * jac.transpose();
    Eigen::PartialPivLU<Eigen::MatrixXd> lu(gram);
    const Eigen::VectorXd udiag = lu.matrixLU().diagonal().cwiseAbs();
    if (udiag.minCoeff() <= 1e-12 * std::max(1.0, udiag.maxCoeff()))
        throw RankDeficient("solve_kkt: constraint gradients are linearly dependent");

    KktSolution sol;
    sol.lambda = lu.solve(h - jac * grad);
    sol.d = -grad - jac.transpose() * sol.lambda;

    const double scale = 1.0 + grad.cwiseAbs().maxCoeff();
    if ((jac * sol.d + h).cwiseAbs().maxCoeff() > 1e-9 * scale)
        throw NumericalError("solve_kkt: solution fails the constraint equations");
    return sol;
}

/// Nearest matrix with orthonormal columns: the polar factor
/// V (V^T V)^{-1/2}, through the eigendecomposition of V^T V.
/// Near-singular V^T V means (numerically) dependent columns, for which no
/// meaningful nearest frame exists.
inline Eigen::MatrixXd polar_orthonormalize(const Eigen::MatrixXd& V) {
    const int Dp = static_cast<int>(V.cols());
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(V.transpose() * V);
    if (es.info() != Eigen::Success)
        throw NumericalError("polar_orthonormalize: eigensolver failed");
    if (es.eigenvalues().minCoeff() < 1e-12)
        throw DegenerateMatrix("polar_orthonormalize: columns are numerically dependent");
    const Eigen::MatrixXd inv_sqrt =
        es.eigenvectors() *
        es.eigenvalues().cwiseSqrt().cwiseInverse().asDiagonal() *
        es.eigenvectors().transpose();
    return V * inv_sqrt;
}

/// Pull one component block back onto the constraint set.  W is the full
/// (D+1) x Dp block; the projected-mean row is untouched.  If V is already
/// within orth_tol of orthonormal the block is returned unchanged; otherwise
/// V is replaced by its polar factor (the nearest orthonormal frame), at
/// working precision 1e-12, with a second pass if one was not enough.
inline Eigen::MatrixXd restore_orthogonality(const Eigen::MatrixXd& W, double orth_tol) {
    const int D = static_cast<int>(W.rows()) - 1;
    const int Dp = static_cast<int>(W.cols());
    const Eigen::MatrixXd I = Eigen::MatrixXd::Identity(Dp, Dp);

    Eigen::MatrixXd V = W.bottomRows(D);
    double err = (V.transpose() * V - I).cwiseAbs().maxCoeff();
    if (err <= orth_tol) return W;
    for (int pass = 0; pass < 2 && err > 1e-12; ++pass) {
        V = polar_orthonormalize(V);
        err = (V.transpose() * V - I).cwiseAbs().maxCoeff();
    }
    if (err > 1e-12)
        throw NumericalError("restore_orthogonality: could not reach working precision");
    Eigen::MatrixXd out = W;
    out.bottomRows(D) = V;
    return out;
}

/// Same restoration applied to every component block of the weights.
inline void restore_orthogonality(NetworkWeights& w, double orth_tol) {
    for (auto& W : w.W) W = restore_orthogonality(W, orth_tol);
}

}  // namespace tsdcn
