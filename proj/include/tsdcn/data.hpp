#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

#include "tsdcn/errors.hpp"
#include "tsdcn/io.hpp"

namespace tsdcn {

/// One labeled time series.  series is T x D (rows are time steps);
/// label is 1-based, 0 means unlabeled.
struct TimeSeriesSample {
    int label = 0;
    Eigen::MatrixXd series;

    int length() const { return static_cast<int>(series.rows()); }
    int dim() const { return static_cast<int>(series.cols()); }
};

/// Where a dataset came from: problem name, generation seed, and the
/// generator parameters, kept for the sidecar manifest.
struct DatasetMeta {
    std::string problem;
    std::uint64_t seed = 0;
    json params = json::object();
};

struct Dataset {
    std::vector<TimeSeriesSample> samples;
    DatasetMeta meta;

    int size() const { return static_cast<int>(samples.size()); }

    int n_classes() const {
        int c = 0;
        for (const auto& s : samples) c = std::max(c, s.label);
        return c;
    }

    int dim() const { return samples.empty() ? 0 : samples.front().dim(); }
    int length() const { return samples.empty() ? 0 : samples.front().length(); }

    /// Every sample must carry a valid label and share D and T.
    void validate() const {
        if (samples.empty()) throw EmptyInput("dataset has no samples");
        const int D = samples.front().dim();
        const int T = samples.front().length();
        for (const auto& s : samples) {
            if (s.label < 1) throw InvalidParams("dataset: sample without 1-based label");
            if (s.dim() != D) throw InvalidParams("dataset: inconsistent input dimension");
            if (s.length() != T) throw InvalidParams("dataset: inconsistent series length");
        }
    }
};

/// One sample per line: {"label": int, "series": [[x_1..x_D], ... T rows]}.
inline void save_dataset_jsonl(const std::string& path, const Dataset& ds) {
    std::string out;
    for (const auto& s : ds.samples) {
        json row;
        row["label"] = s.label;
        json series = json::array();
        for (int t = 0; t < s.length(); ++t) {
            json step = json::array();
            for (int d = 0; d < s.dim(); ++d) step.push_back(s.series(t, d));
            series.push_back(std::move(step));
        }
        row["series"] = std::move(series);
        out += row.dump();
        out += '\n';
    }
    write_text_file(path, out);
}

inline Dataset load_dataset_jsonl(const std::string& path) {
    const std::string text = read_text_file(path);
    Dataset ds;
    std::size_t pos = 0;
    int lineno = 0;
    while (pos < text.size()) {
        std::size_t end = text.find('\n', pos);
        if (end == std::string::npos) end = text.size();
        ++lineno;
        const std::string line = text.substr(pos, end - pos);
        pos = end + 1;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        json row = json::parse(line, nullptr, false);
        if (row.is_discarded() || !row.contains("label") || !row.contains("series"))
            throw IoError(path + ":" + std::to_string(lineno) + ": bad dataset line");
        TimeSeriesSample s;
        s.label = row["label"].get<int>();
        const auto& series = row["series"];
        if (!series.is_array() || series.empty())
            throw IoError(path + ":" + std::to_string(lineno) + ": series must be a nonempty array");
        const int T = static_cast<int>(series.size());
        const int D = static_cast<int>(series[0].size());
        s.series.resize(T, D);
        for (int t = 0; t < T; ++t) {
            if (static_cast<int>(series[t].size()) != D)
                throw IoError(path + ":" + std::to_string(lineno) + ": ragged series");
            for (int d = 0; d < D; ++d) s.series(t, d) = series[t][d].get<double>();
        }
        ds.samples.push_back(std::move(s));
    }
    return ds;
}

/// Sidecar manifest describing how a dataset pair was generated.
inline void write_manifest(const std::string& path, const DatasetMeta& meta) {
    json j;
    j["problem"] = meta.problem;
    j["seed"] = meta.seed;
    j["params"] = meta.params;
    write_json_file(path, j);
}

}  // namespace tsdcn
