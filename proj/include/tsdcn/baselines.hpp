#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "tsdcn/data.hpp"
#include "tsdcn/errors.hpp"
#include "tsdcn/io.hpp"
#include "tsdcn/metrics.hpp"
#include "tsdcn/trainer.hpp"

namespace tsdcn {

enum class ReducerKind { PCA, LDA };

/// Fitted linear dimensionality reducer: x -> projection^T (x - center).
struct LinearReducer {
    ReducerKind kind = ReducerKind::PCA;
    Eigen::MatrixXd projection;  // D x Dp, unit-norm columns
    Eigen::VectorXd center;      // length D
};

namespace detail {

/// Pool every time step of every sample into one row-per-point matrix.
inline Eigen::MatrixXd pool_points(const Dataset& ds) {
    ds.validate();
    long total = 0;
    for (const auto& s : ds.samples) total += s.length();
    Eigen::MatrixXd X(total, ds.dim());
    long row = 0;
    for (const auto& s : ds.samples) {
        X.middleRows(row, s.length()) = s.series;
        row += s.length();
    }
    return X;
}

/// Make each column's largest-magnitude entry positive, for reproducibility.
inline void fix_column_signs(Eigen::MatrixXd& P) {
    for (Eigen::Index j = 0; j < P.cols(); ++j) {
        Eigen::Index argmax = 0;
        P.col(j).cwiseAbs().maxCoeff(&argmax);
        if (P(argmax, j) < 0.0) P.col(j) = -P.col(j);
    }
}

}  // namespace detail

/// Principal components of the pooled time points: center at the pooled
/// mean, project onto the top-Dp covariance eigenvectors in eigenvalue-
/// descending order.
inline LinearReducer pca_fit(const Dataset& ds, int Dp) {
    const Eigen::MatrixXd X = detail::pool_points(ds);
    const int D = static_cast<int>(X.cols());
    if (Dp < 1 || Dp > D) throw InvalidParams("pca_fit: need 1 <= Dp <= D");
    if (X.rows() < 2) throw DegenerateData("pca_fit: need at least two points");

    LinearReducer red;
    red.kind = ReducerKind::PCA;
    red.center = X.colwise().mean().transpose();
    const Eigen::MatrixXd centered = X.rowwise() - red.center.transpose();
    const Eigen::MatrixXd cov =
        centered.transpose() * centered / static_cast<double>(X.rows() - 1);

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(cov);
    if (es.info() != Eigen::Success) throw NumericalError("pca_fit: eigensolver failed");
    const Eigen::VectorXd evals = es.eigenvalues();  // ascending
    const double tol = 1e-12 * std::max(1.0, std::abs(evals[D - 1]));
    int positive = 0;
    for (int i = 0; i < D; ++i)
        if (evals[i] > tol) ++positive;
    if (positive < Dp)
        throw DegenerateData("pca_fit: fewer positive-variance directions than Dp");

    red.projection.resize(D, Dp);
    for (int j = 0; j < Dp; ++j) red.projection.col(j) = es.eigenvectors().col(D - 1 - j);
    detail::fix_column_signs(red.projection);
    return red;
}

/// Fisher discriminant directions of the pooled, class-labeled time points:
/// top-Dp generalized eigenvectors of between-class vs within-class scatter
/// (ridge 1e-8 I on the within-class side), unit-normalized.  The between-
/// class scatter has rank at most C-1, so more directions than that do not
/// exist.
inline LinearReducer lda_fit(const Dataset& ds, int Dp) {
    ds.validate();
    const int C = ds.n_classes();
    const int D = ds.dim();
    if (Dp < 1 || Dp > D) throw InvalidParams("lda_fit: need 1 <= Dp <= D");
    if (C < 2) throw InvalidParams("lda_fit: need at least two classes");
    if (Dp > C - 1) throw DegenerateData("lda_fit: Dp exceeds the between-class rank C-1");

    std::vector<Eigen::VectorXd> class_sum(C, Eigen::VectorXd::Zero(D));
    std::vector<long> class_n(C, 0);
    long total_n = 0;
    for (const auto& s : ds.samples) {
        class_sum[s.label - 1] += s.series.colwise().sum().transpose();
        class_n[s.label - 1] += s.length();
        total_n += s.length();
    }
    Eigen::VectorXd grand_mean = Eigen::VectorXd::Zero(D);
    for (int c = 0; c < C; ++c) grand_mean += class_sum[c];
    grand_mean /= static_cast<double>(total_n);

    Eigen::MatrixXd Sw = Eigen::MatrixXd::Zero(D, D);
    Eigen::MatrixXd Sb = Eigen::MatrixXd::Zero(D, D);
    std::vector<Eigen::VectorXd> class_mean(C);
    for (int c = 0; c < C; ++c) {
        if (class_n[c] == 0) throw DegenerateData("lda_fit: a class has no points");
        class_mean[c] = class_sum[c] / static_cast<double>(class_n[c]);
        const Eigen::VectorXd d = class_mean[c] - grand_mean;
        Sb += static_cast<double>(class_n[c]) * d * d.transpose();
    }
    for (const auto& s : ds.samples) {
        const Eigen::MatrixXd centered =
            s.series.rowwise() - class_mean[s.label - 1].transpose();
        Sw += centered.transpose() * centered;
    }
    Sw += 1e-8 * Eigen::MatrixXd::Identity(D, D);

    Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> es(Sb, Sw);
    if (es.info() != Eigen::Success) throw DegenerateData("lda_fit: scatter solve failed");

    LinearReducer red;
    red.kind = ReducerKind::LDA;
    red.center = grand_mean;
    red.projection.resize(D, Dp);
    for (int j = 0; j < Dp; ++j) {
        Eigen::VectorXd v = es.eigenvectors().col(D - 1 - j);  // eigenvalues ascend
        const double norm = v.norm();
        if (!(norm > 0.0)) throw DegenerateData("lda_fit: zero discriminant direction");
        red.projection.col(j) = v / norm;
    }
    detail::fix_column_signs(red.projection);
    return red;
}

inline Eigen::MatrixXd reduce(const LinearReducer& red, const Eigen::MatrixXd& series) {
    if (series.cols() != red.projection.rows())
        throw InvalidParams("reduce: series dimension does not match the reducer");
    return (series.rowwise() - red.center.transpose()) * red.projection;
}

/// Apply the reducer to every series; labels and length are preserved.
inline Dataset reduce(const LinearReducer& red, const Dataset& ds) {
    ds.validate();
    Dataset out;
    out.meta = ds.meta;
    out.meta.params["reduced_by"] = red.kind == ReducerKind::PCA ? "pca" : "lda";
    out.samples.reserve(ds.samples.size());
    for (const auto& s : ds.samples) {
        TimeSeriesSample r;
        r.label = s.label;
        r.series = reduce(red, s.series);
        out.samples.push_back(std::move(r));
    }
    return out;
}

/// Topology and training setup of the classifier run on reduced signals.
struct ReducedClassifierConfig {
    int K = 2;
    int M = 2;
    TrainingConfig training;
};

/// Classification accuracy of the reduce-then-classify pipeline.  The
/// classifier is a network with its reduction stage frozen to the identity
/// (D = Dp = reduced dimension, V = I, projections excluded from training),
/// i.e. the reduction-free special case acting directly on the reduced
/// series.  The reducer must have been fitted on training data only.
inline double classify_reduced(const LinearReducer& red, const Dataset& train_set,
                               const Dataset& test_set, const ReducedClassifierConfig& cfg) {
    const Dataset train_r = reduce(red, train_set);
    const Dataset test_r = reduce(red, test_set);
    const int dim = train_r.dim();
    const int C = train_r.n_classes();

    const ModelTopology topo = ModelTopology::uniform(C, cfg.K, cfg.M, dim, dim);
    NetworkWeights w = init_weights(topo, cfg.training.seed);
    for (auto& W : w.W) {
        W.row(0).setZero();
        W.bottomRows(dim) = Eigen::MatrixXd::Identity(dim, dim);
    }
    TrainingConfig tc = cfg.training;
    tc.train_projection = false;
    train(w, train_r, tc);
    return accuracy(predict_labels(w, test_r), true_labels(test_r));
}

inline json reducer_to_json(const LinearReducer& red) {
    json j;
    j["kind"] = red.kind == ReducerKind::PCA ? "pca" : "lda";
    json center = json::array();
    for (Eigen::Index i = 0; i < red.center.size(); ++i) center.push_back(red.center[i]);
    j["center"] = std::move(center);
    json proj = json::array();
    for (Eigen::Index i = 0; i < red.projection.rows(); ++i) {
        json row = json::array();
        for (Eigen::Index jj = 0; jj < red.projection.cols(); ++jj)
            row.push_back(red.projection(i, jj));
        proj.push_back(std::move(row));
    }
    j["projection"] = std::move(proj);
    return j;
}

inline LinearReducer reducer_from_json(const json& j) {
    LinearReducer red;
    const std::string kind = j.at("kind").get<std::string>();
    if (kind == "pca")
        red.kind = ReducerKind::PCA;
    else if (kind == "lda")
        red.kind = ReducerKind::LDA;
    else
        throw IoError("reducer file: unknown kind " + kind);
    const auto& center = j.at("center");
    red.center.resize(center.size());
    for (std::size_t i = 0; i < center.size(); ++i) red.center[i] = center[i].get<double>();
    const auto& proj = j.at("projection");
    if (proj.empty()) throw IoError("reducer file: empty projection");
    red.projection.resize(proj.size(), proj[0].size());
    for (std::size_t i = 0; i < proj.size(); ++i)
        for (std::size_t jj = 0; jj < proj[i].size(); ++jj)
            red.projection(i, jj) = proj[i][jj].get<double>();
    return red;
}

}  // namespace tsdcn
