#pragma once

#include <vector>

#include "tsdcn/data.hpp"
#include "tsdcn/errors.hpp"
#include "tsdcn/forward.hpp"

namespace tsdcn {

/// Percent of predictions matching the reference labels.
inline double accuracy(const std::vector<int>& predictions, const std::vector<int>& labels) {
    if (predictions.empty() || labels.empty()) throw EmptyInput("accuracy: empty input");
    if (predictions.size() != labels.size())
        throw InvalidParams("accuracy: prediction/label length mismatch");
    int correct = 0;
    for (std::size_t i = 0; i < labels.size(); ++i)
        if (predictions[i] == labels[i]) ++correct;
    return 100.0 * correct / static_cast<double>(labels.size());
}

inline std::vector<int> predict_labels(const NetworkWeights& w, const Dataset& ds) {
    std::vector<int> pred;
    pred.reserve(ds.samples.size());
    for (const auto& s : ds.samples) pred.push_back(classify(w, s.series));
    return pred;
}

inline std::vector<int> true_labels(const Dataset& ds) {
    std::vector<int> labels;
    labels.reserve(ds.samples.size());
    for (const auto& s : ds.samples) labels.push_back(s.label);
    return labels;
}

}  // namespace tsdcn
