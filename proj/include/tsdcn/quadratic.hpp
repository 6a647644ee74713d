#pragma once

#include <Eigen/Dense>

#include "tsdcn/errors.hpp"

namespace tsdcn {

/// Length of the quadratic feature vector for reduced dimension Dp:
/// one bias slot plus the upper triangle of the outer product.
inline int quad_size(int Dp) { return 1 + Dp * (Dp + 1) / 2; }

/// 0-based slot of the pair product x'_j * x'_jp inside the feature vector,
/// for 0-based j <= jp < Dp.  Slot 0 is the bias; pairs follow in row order
/// (0,0),(0,1),...,(0,Dp-1),(1,1),...,(Dp-1,Dp-1).
inline int quad_index(int Dp, int j, int jp) {
    if (j < 0 || jp < j || jp >= Dp) throw InvalidParams("quad_index: need 0 <= j <= jp < Dp");
    // Offset of row j's first slot: pairs in rows 0..j-1 sum to j*Dp - j(j-1)/2.
    return 1 + j * Dp - j * (j - 1) / 2 + (jp - j);
}

/// Layer-3 expansion: xp (length Dp) -> [1, xp_0^2, xp_0 xp_1, ..., xp_{Dp-1}^2].
inline void quadratic_expand(const Eigen::VectorXd& xp, Eigen::VectorXd& out) {
    const int Dp = static_cast<int>(xp.size());
    out.resize(quad_size(Dp));
    out[0] = 1.0;
    int h = 1;
    for (int j = 0; j < Dp; ++j)
        for (int jp = j; jp < Dp; ++jp) out[h++] = xp[j] * xp[jp];
}

inline Eigen::VectorXd quadratic_expand(const Eigen::VectorXd& xp) {
    Eigen::VectorXd out;
    quadratic_expand(xp, out);
    return out;
}

/// Accumulate d(out)/d(xp) pullback: given the expansion point xp and the
/// upstream gradient dXq over the feature vector, add the chain-rule
/// contribution to dxp.  The bias slot has zero derivative.
inline void quadratic_backward(const Eigen::VectorXd& xp, const Eigen::VectorXd& dXq,
                               Eigen::VectorXd& dxp) {
    const int Dp = static_cast<int>(xp.size());
    int h = 1;
    for (int j = 0; j < Dp; ++j) {
        for (int jp = j; jp < Dp; ++jp) {
            const double g = dXq[h++];
            dxp[j] += g * xp[jp];
            dxp[jp] += g * xp[j];
        }
    }
}

}  // namespace tsdcn
