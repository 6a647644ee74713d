#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "tsdcn/errors.hpp"
#include "tsdcn/io.hpp"
#include "tsdcn/quadratic.hpp"
#include "tsdcn/topology.hpp"

namespace tsdcn {

/// Trainable parameters.
///
/// W[ci]  is (D+1) x Dp for component ci = (c,k,m): row 0 holds -mu'^T
///        (the projected mean, negated), rows 1..D hold the projection V.
/// Wp[ci] is K[c] x H for the same component: row k' holds the
///        log-linearized coefficients used when arriving from state k'.
///        Column 0 is the bias (log-transition + log-mixture + Gaussian
///        normalizer), columns 1..H-1 multiply the quadratic features.
struct NetworkWeights {
    ModelTopology topo;
    std::vector<Eigen::MatrixXd> W;
    std::vector<Eigen::MatrixXd> Wp;

    static NetworkWeights zeros(const ModelTopology& topo) {
        topo.validate();
        NetworkWeights w;
        w.topo = topo;
        const int H = topo.quad_feature_size();
        w.W.reserve(topo.total_components());
        w.Wp.reserve(topo.total_components());
        for (int c = 0; c < topo.C; ++c)
            for (int k = 0; k < topo.K[c]; ++k)
                for (int m = 0; m < topo.M[c][k]; ++m) {
                    w.W.push_back(Eigen::MatrixXd::Zero(topo.D + 1, topo.Dp));
                    w.Wp.push_back(Eigen::MatrixXd::Zero(topo.K[c], H));
                }
        return w;
    }

    Eigen::Block<Eigen::MatrixXd> V(int ci) { return W[ci].bottomRows(topo.D); }
    Eigen::Block<const Eigen::MatrixXd> V(int ci) const {
        return W[ci].bottomRows(topo.D);
    }

    void validate() const {
        topo.validate();
        const int n = topo.total_components();
        if (static_cast<int>(W.size()) != n || static_cast<int>(Wp.size()) != n)
            throw InvalidParams("weights: wrong number of component matrices");
        const int H = topo.quad_feature_size();
        for (int c = 0; c < topo.C; ++c)
            for (int k = 0; k < topo.K[c]; ++k)
                for (int m = 0; m < topo.M[c][k]; ++m) {
                    const int ci = topo.component_index(c, k, m);
                    if (W[ci].rows() != topo.D + 1 || W[ci].cols() != topo.Dp)
                        throw InvalidParams("weights: W block has wrong shape");
                    if (Wp[ci].rows() != topo.K[c] || Wp[ci].cols() != H)
                        throw InvalidParams("weights: Wp block has wrong shape");
                }
    }
};

/// Worst deviation of any V block from column orthonormality,
/// measured as the max-abs entry of V^T V - I.
inline double orthonormality_error(const NetworkWeights& w) {
    double err = 0.0;
    const Eigen::MatrixXd I = Eigen::MatrixXd::Identity(w.topo.Dp, w.topo.Dp);
    for (std::size_t ci = 0; ci < w.W.size(); ++ci) {
        const Eigen::MatrixXd V = w.W[ci].bottomRows(w.topo.D);
        err = std::max(err, (V.transpose() * V - I).cwiseAbs().maxCoeff());
    }
    return err;
}

namespace detail {

inline json matrix_to_json(const Eigen::MatrixXd& m) {
    json rows = json::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        json row = json::array();
        for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
        rows.push_back(std::move(row));
    }
    return rows;
}

inline Eigen::MatrixXd matrix_from_json(const json& j, Eigen::Index rows, Eigen::Index cols,
                                        const char* what) {
    if (!j.is_array() || static_cast<Eigen::Index>(j.size()) != rows)
        throw IoError(std::string("model file: bad row count in ") + what);
    Eigen::MatrixXd m(rows, cols);
    for (Eigen::Index i = 0; i < rows; ++i) {
        if (!j[i].is_array() || static_cast<Eigen::Index>(j[i].size()) != cols)
            throw IoError(std::string("model file: bad column count in ") + what);
        for (Eigen::Index jj = 0; jj < cols; ++jj) m(i, jj) = j[i][jj].get<double>();
    }
    return m;
}

}  // namespace detail

inline json weights_to_json(const NetworkWeights& w) {
    w.validate();
    json j;
    j["format_version"] = 1;
    j["topology"] = {{"C", w.topo.C}, {"K", w.topo.K}, {"M", w.topo.M},
                     {"D", w.topo.D}, {"Dp", w.topo.Dp}};
    json W = json::array();
    json Wp = json::array();
    for (std::size_t ci = 0; ci < w.W.size(); ++ci) {
        W.push_back(detail::matrix_to_json(w.W[ci]));
        Wp.push_back(detail::matrix_to_json(w.Wp[ci]));
    }
    j["W"] = std::move(W);
    j["Wp"] = std::move(Wp);
    return j;
}

inline NetworkWeights weights_from_json(const json& j) {
    if (!j.contains("format_version") || j["format_version"].get<int>() != 1)
        throw IoError("model file: missing or unsupported format_version");
    if (!j.contains("topology") || !j.contains("W") || !j.contains("Wp"))
        throw IoError("model file: missing topology/W/Wp");
    const auto& tj = j["topology"];
    ModelTopology topo;
    topo.C = tj.at("C").get<int>();
    topo.K = tj.at("K").get<std::vector<int>>();
    topo.M = tj.at("M").get<std::vector<std::vector<int>>>();
    topo.D = tj.at("D").get<int>();
    topo.Dp = tj.at("Dp").get<int>();
    topo.validate();

    NetworkWeights w = NetworkWeights::zeros(topo);
    const int n = topo.total_components();
    if (static_cast<int>(j["W"].size()) != n || static_cast<int>(j["Wp"].size()) != n)
        throw IoError("model file: W/Wp component count does not match topology");
    const int H = topo.quad_feature_size();
    for (int c = 0; c < topo.C; ++c)
        for (int k = 0; k < topo.K[c]; ++k)
            for (int m = 0; m < topo.M[c][k]; ++m) {
                const int ci = topo.component_index(c, k, m);
                w.W[ci] = detail::matrix_from_json(j["W"][ci], topo.D + 1, topo.Dp, "W");
                w.Wp[ci] = detail::matrix_from_json(j["Wp"][ci], topo.K[c], H, "Wp");
            }
    return w;
}

inline void save_weights(const std::string& path, const NetworkWeights& w) {
    write_json_file(path, weights_to_json(w));
}

inline NetworkWeights load_weights(const std::string& path) {
    return weights_from_json(read_json_file(path));
}

}  // namespace tsdcn
