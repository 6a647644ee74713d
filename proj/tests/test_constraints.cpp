#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "support.hpp"
#include "tsdcn/constraints.hpp"

using namespace tsdcn;

namespace {

Eigen::MatrixXd orthonormal_cols(int d, int dp, std::uint64_t seed) {
    Rng rng(seed);
    const Eigen::MatrixXd g = rng.normal_matrix(d, dp);
    const Eigen::HouseholderQR<Eigen::MatrixXd> qr(g);
    return qr.householderQ() * Eigen::MatrixXd::Identity(d, dp);
}

}  // namespace

TEST_CASE("constraint values vanish on identity columns and index as specified") {
    const Eigen::MatrixXd v = Eigen::MatrixXd::Identity(5, 3);
    REQUIRE(constraint_values(v).cwiseAbs().maxCoeff() == 0.0);

    // (j,l) -> i for Dp=2: (1,1)->1, (1,2)->2, (2,2)->3 in 1-based terms
    REQUIRE(constraint_index(2, 0, 0) == 0);
    REQUIRE(constraint_index(2, 0, 1) == 1);
    REQUIRE(constraint_index(2, 1, 1) == 2);
    REQUIRE_THROWS_AS(constraint_index(2, 1, 0), InvalidParams);

    Eigen::MatrixXd dup(4, 2);
    dup.col(0) = Eigen::VectorXd::Unit(4, 1);
    dup.col(1) = dup.col(0);
    const Eigen::VectorXd h = constraint_values(dup);
    REQUIRE(h.size() == 3);
    REQUIRE(h[0] == 0.0);
    REQUIRE(h[1] == 1.0);
    REQUIRE(h[2] == 0.0);
}

TEST_CASE("constraint jacobian matches the column formulas and finite differences") {
    const int d = 4, dp = 2;
    Rng rng(101);
    Eigen::MatrixXd w = rng.normal_matrix(d + 1, dp);
    const Eigen::MatrixXd v = w.bottomRows(d);
    const Eigen::MatrixXd jac = constraint_jacobian(v);
    REQUIRE(jac.rows() == 3);
    REQUIRE(jac.cols() == (d + 1) * dp);

    // mu' row columns are exactly zero
    for (int b = 0; b < dp; ++b)
        REQUIRE(jac.col(b * (d + 1)).cwiseAbs().maxCoeff() == 0.0);

    // diagonal constraint gradient is 2 v_j
    const Eigen::VectorXd g00 = jac.row(constraint_index(dp, 0, 0));
    for (int a = 0; a < d; ++a) REQUIRE(g00[1 + a] == 2.0 * v(a, 0));

    // finite differences of constraint_values over every V entry
    const double h = 1e-7;
    for (int b = 0; b < dp; ++b)
        for (int a = 0; a < d; ++a) {
            Eigen::MatrixXd vp = v, vm = v;
            vp(a, b) += h;
            vm(a, b) -= h;
            const Eigen::VectorXd fd = (constraint_values(vp) - constraint_values(vm)) / (2 * h);
            const int col = b * (d + 1) + 1 + a;
            REQUIRE((jac.col(col) - fd).cwiseAbs().maxCoeff() < 1e-7);
        }
}

TEST_CASE("kkt solve reproduces the scalar closed form") {
    const int d = 3;
    Rng rng(103);
    const Eigen::MatrixXd w = rng.normal_matrix(d + 1, 1);
    const Eigen::MatrixXd v = w.bottomRows(d);
    const Eigen::MatrixXd jac = constraint_jacobian(v);
    const Eigen::VectorXd h = constraint_values(v);
    const Eigen::VectorXd grad = rng.normal_vector(d + 1);
    const KktSolution sol = solve_kkt(grad, jac, h);

    const double jj = jac.row(0).squaredNorm();
    const double lambda = (h[0] - jac.row(0).dot(grad)) / jj;
    REQUIRE(sol.lambda[0] == Catch::Approx(lambda).epsilon(1e-10));
    const Eigen::VectorXd d_expect = -grad - jac.transpose() * sol.lambda;
    REQUIRE((sol.d - d_expect).cwiseAbs().maxCoeff() < 1e-12);

    // block-system residual
    REQUIRE((jac * sol.d + h).cwiseAbs().maxCoeff() <= 1e-9 * (1.0 + grad.cwiseAbs().maxCoeff()));
}

TEST_CASE("feasible point with tangent gradient gives zero multipliers") {
    const int d = 4, dp = 2;
    const Eigen::MatrixXd v = orthonormal_cols(d, dp, 7);
    const Eigen::MatrixXd jac = constraint_jacobian(v);
    const Eigen::VectorXd h = constraint_values(v);
    REQUIRE(h.cwiseAbs().maxCoeff() < 1e-14);

    // project a random gradient onto the null space of jac
    Rng rng(107);
    Eigen::VectorXd g = rng.normal_vector((d + 1) * dp);
    const Eigen::MatrixXd jjt = jac * jac.transpose();
    g -= jac.transpose() * jjt.ldlt().solve(jac * g);
    const KktSolution sol = solve_kkt(g, jac, h);
    REQUIRE(sol.lambda.cwiseAbs().maxCoeff() < 1e-9);
    REQUIRE((sol.d + g).cwiseAbs().maxCoeff() < 1e-9);
}

TEST_CASE("duplicate columns make the kkt system rank deficient") {
    const int d = 4;
    Rng rng(109);
    Eigen::MatrixXd v(d, 2);
    v.col(0) = rng.normal_vector(d);
    v.col(1) = v.col(0);
    const Eigen::MatrixXd jac = constraint_jacobian(v);
    const Eigen::VectorXd h = constraint_values(v);
    const Eigen::VectorXd grad = rng.normal_vector((d + 1) * 2);
    REQUIRE_THROWS_AS(solve_kkt(grad, jac, h), RankDeficient);
}

TEST_CASE("restoration is a fixed point on orthonormal input") {
    const Eigen::MatrixXd q = orthonormal_cols(5, 2, 11);
    Eigen::MatrixXd w(6, 2);
    w.row(0) << 0.3, -0.7;
    w.bottomRows(5) = q;
    const Eigen::MatrixXd r = restore_orthogonality(w, 1e-8);
    REQUIRE((r - w).cwiseAbs().maxCoeff() < 1e-14);
}

TEST_CASE("restoration recovers the polar factor of a scaled orthonormal matrix") {
    const Eigen::MatrixXd q = orthonormal_cols(6, 3, 13);
    Eigen::MatrixXd w(7, 3);
    w.row(0).setZero();
    w.bottomRows(6) = 1.01 * q;
    const Eigen::MatrixXd r = restore_orthogonality(w, 1e-8);
    REQUIRE((r.bottomRows(6) - q).cwiseAbs().maxCoeff() < 1e-12);
    const Eigen::MatrixXd v = r.bottomRows(6);
    REQUIRE((v.transpose() * v - Eigen::MatrixXd::Identity(3, 3)).cwiseAbs().maxCoeff() <=
            1e-12);
}

TEST_CASE("restoration rejects rank-deficient projections") {
    Eigen::MatrixXd w(5, 2);
    Rng rng(117);
    w.row(0).setZero();
    w.bottomRows(4).col(0) = rng.normal_vector(4);
    w.bottomRows(4).col(1) = 2.0 * w.bottomRows(4).col(0);
    REQUIRE_THROWS_AS(restore_orthogonality(w, 1e-8), DegenerateMatrix);
}

TEST_CASE("restoration is idempotent and leaves the mean row alone") {
    Rng rng(119);
    Eigen::MatrixXd w = rng.normal_matrix(7, 3);
    w.bottomRows(6) += 3.0 * Eigen::MatrixXd::Identity(6, 3);  // keep it well-conditioned
    const Eigen::VectorXd row0 = w.row(0);
    const Eigen::MatrixXd once = restore_orthogonality(w, 1e-8);
    const Eigen::MatrixXd twice = restore_orthogonality(once, 1e-8);
    REQUIRE((twice - once).cwiseAbs().maxCoeff() < 1e-13);
    REQUIRE((once.row(0).transpose() - row0).cwiseAbs().maxCoeff() == 0.0);
    const Eigen::MatrixXd v = once.bottomRows(6);
    REQUIRE((v.transpose() * v - Eigen::MatrixXd::Identity(3, 3)).cwiseAbs().maxCoeff() <=
            1e-12);
}
