#pragma once

#include <vector>

#include "tsdcn/errors.hpp"

namespace tsdcn {

/// Network shape: C classes, K[c] hidden states per class, M[c][k] Gaussian
/// components per state, input dimension D, reduced dimension Dp.
///
/// Index conventions used throughout:
///   component (c,k,m) -> flat index via component_index()
///   state     (c,k)   -> flat index via state_index()
/// Flat orders iterate m fastest, then k, then c.
struct ModelTopology {
    int C = 0;
    std::vector<int> K;               // K[c], size C
    std::vector<std::vector<int>> M;  // M[c][k]
    int D = 0;
    int Dp = 0;

    void validate() const {
        if (C < 2) throw InvalidParams("topology: C must be >= 2");
        if (D < 1) throw InvalidParams("topology: D must be >= 1");
        if (Dp < 1 || Dp > D) throw InvalidParams("topology: need 1 <= Dp <= D");
        if (static_cast<int>(K.size()) != C) throw InvalidParams("topology: K must have C entries");
        if (static_cast<int>(M.size()) != C) throw InvalidParams("topology: M must have C entries");
        for (int c = 0; c < C; ++c) {
            if (K[c] < 1) throw InvalidParams("topology: K[c] must be >= 1");
            if (static_cast<int>(M[c].size()) != K[c])
                throw InvalidParams("topology: M[c] must have K[c] entries");
            for (int k = 0; k < K[c]; ++k)
                if (M[c][k] < 1) throw InvalidParams("topology: M[c][k] must be >= 1");
        }
    }

    /// All states share the same K and M.
    static ModelTopology uniform(int C, int K, int M, int D, int Dp) {
        ModelTopology t;
        t.C = C;
        t.K.assign(C, K);
        t.M.assign(C, std::vector<int>(K, M));
        t.D = D;
        t.Dp = Dp;
        t.validate();
        return t;
    }

    int total_states() const {
        int n = 0;
        for (int c = 0; c < C; ++c) n += K[c];
        return n;
    }

    int total_components() const {
        int n = 0;
        for (int c = 0; c < C; ++c)
            for (int k = 0; k < K[c]; ++k) n += M[c][k];
        return n;
    }

    int state_index(int c, int k) const {
        int idx = 0;
        for (int cc = 0; cc < c; ++cc) idx += K[cc];
        return idx + k;
    }

    int component_index(int c, int k, int m) const {
        int idx = 0;
        for (int cc = 0; cc < c; ++cc)
            for (int kk = 0; kk < K[cc]; ++kk) idx += M[cc][kk];
        for (int kk = 0; kk < k; ++kk) idx += M[c][kk];
        return idx + m;
    }

    /// Size of the expanded quadratic feature vector: bias + upper triangle.
    int quad_feature_size() const { return 1 + Dp * (Dp + 1) / 2; }

    /// Number of orthonormality constraints on V.
    int n_constraints() const { return Dp * (Dp + 1) / 2; }

    bool operator==(const ModelTopology& o) const {
        return C == o.C && K == o.K && M == o.M && D == o.D && Dp == o.Dp;
    }
};

}  // namespace tsdcn
