#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <string>
#include <vector>

#include "tsdcn/baselines.hpp"
#include "tsdcn/data.hpp"
#include "tsdcn/datagen.hpp"
#include "tsdcn/errors.hpp"
#include "tsdcn/io.hpp"
#include "tsdcn/metrics.hpp"
#include "tsdcn/trainer.hpp"

namespace tsdcn {

/// One experiment suite at desk scale.  The repeat protocol regenerates the
/// data n_datasets times and re-initializes the weights n_inits times per
/// data set; all cell seeds derive from the master seed.
struct ExperimentConfig {
    std::string id = "A";  // A | B-proxy | C-pca | C-lda | C-noisy | D-convergence
    int C = 3, D = 30, Dp = 1, K = 2, M = 2, T = 50;
    int n_train = 5, n_test = 50;
    int n_datasets = 3, n_inits = 3;
    double noise_ratio = 0.8;  // C-noisy only
    TrainingConfig training;
    std::uint64_t seed = 1;

    void validate() const {
        static const char* ids[] = {"A", "B-proxy", "C-pca", "C-lda", "C-noisy",
                                    "D-convergence"};
        bool known = false;
        for (const char* i : ids) known = known || id == i;
        if (!known) throw InvalidParams("experiment: unknown id " + id);
        if (n_datasets < 1 || n_inits < 1)
            throw InvalidParams("experiment: repeat counts must be >= 1");
        if (n_train < 1 || n_test < 1) throw InvalidParams("experiment: dataset sizes must be >= 1");
        if (T < 1) throw InvalidParams("experiment: T must be >= 1");
        if (noise_ratio < 0.0 || noise_ratio > 1.0)
            throw InvalidParams("experiment: noise_ratio must be in [0,1]");
        ModelTopology::uniform(C, K, M, D, Dp);  // validates topology numbers
        training.validate();
    }
};

inline json experiment_config_to_json(const ExperimentConfig& c) {
    return json{{"id", c.id},
                {"C", c.C},
                {"D", c.D},
                {"Dp", c.Dp},
                {"K", c.K},
                {"M", c.M},
                {"T", c.T},
                {"n_train", c.n_train},
                {"n_test", c.n_test},
                {"n_datasets", c.n_datasets},
                {"n_inits", c.n_inits},
                {"noise_ratio", c.noise_ratio},
                {"seed", c.seed},
                {"training",
                 {{"learning_rate", c.training.learning_rate},
                  {"max_iter", c.training.max_iter},
                  {"loss_tol", c.training.loss_tol},
                  {"orth_tol", c.training.orth_tol},
                  {"backtrack", c.training.backtrack},
                  {"terminal_attractor", c.training.terminal_attractor},
                  {"train_projection", c.training.train_projection},
                  {"seed", c.training.seed}}}};
}

inline ExperimentConfig experiment_config_from_json(const json& j) {
    ExperimentConfig c;
    c.id = j.value("id", c.id);
    c.C = j.value("C", c.C);
    c.D = j.value("D", c.D);
    c.Dp = j.value("Dp", c.Dp);
    c.K = j.value("K", c.K);
    c.M = j.value("M", c.M);
    c.T = j.value("T", c.T);
    c.n_train = j.value("n_train", c.n_train);
    c.n_test = j.value("n_test", c.n_test);
    c.n_datasets = j.value("n_datasets", c.n_datasets);
    c.n_inits = j.value("n_inits", c.n_inits);
    c.noise_ratio = j.value("noise_ratio", c.noise_ratio);
    c.seed = j.value("seed", c.seed);
    if (j.contains("training")) {
        const auto& t = j["training"];
        c.training.learning_rate = t.value("learning_rate", c.training.learning_rate);
        c.training.max_iter = t.value("max_iter", c.training.max_iter);
        c.training.loss_tol = t.value("loss_tol", c.training.loss_tol);
        c.training.orth_tol = t.value("orth_tol", c.training.orth_tol);
        c.training.backtrack = t.value("backtrack", c.training.backtrack);
        c.training.terminal_attractor =
            t.value("terminal_attractor", c.training.terminal_attractor);
        c.training.train_projection = t.value("train_projection", c.training.train_projection);
        c.training.seed = t.value("seed", c.training.seed);
    }
    return c;
}

/// One (dataset, init, method) cell outcome.
struct ResultRow {
    std::string id;
    std::string condition;  // space-separated "C=.. D=.. Dp=.. T=.."
    std::string method;     // tsdcn | pca | lda
    int dataset_idx = 0, init_idx = 0;
    std::uint64_t seed_dataset = 0, seed_init = 0;
    double accuracy = 0.0;  // percent
    double J_final = 0.0;
    int iterations = 0;
    double wall_s = 0.0;
    bool failed = false;
    // Reduced-signal spread per class through the trained class-1 projection;
    // filled only for C-lda tsdcn rows.
    double std_class1 = 0.0, std_class2 = 0.0;
};

struct SummaryRow {
    std::string id, condition, method;
    int n_cells = 0, n_failed = 0;
    double mean_accuracy = 0.0, std_accuracy = 0.0;  // over non-failed cells
};

struct ScalingRow {
    int D = 0, Dp = 0;
    double step_time_s = 0.0;      // median wall time of one update_step
    double lagrange_time_s = 0.0;  // median wall time of the per-step KKT part
    int iters = 0;
};

struct ScalingResult {
    std::vector<ScalingRow> d_rows;   // D grid at fixed Dp
    std::vector<ScalingRow> dp_rows;  // Dp grid at fixed D
    double slope_d = 0.0;             // log-log slope of step time vs D
    double slope_dp_lagrange = 0.0;   // log-log slope of KKT-part time vs Dp
};

struct ExperimentResult {
    ExperimentConfig config;
    std::vector<ResultRow> rows;
    std::vector<SummaryRow> summaries;
    std::vector<TrainRecord> j_trace;  // D-convergence: full history of cell (0,0)
    ScalingResult scaling;             // B-proxy only
};

namespace detail {

inline double now_seconds() {
    return std::chrono::duration<double>(
               std::chrono::steady_clock::now().time_since_epoch())
        .count();
}

inline double median(std::vector<double> v) {
    if (v.empty()) return 0.0;
    std::sort(v.begin(), v.end());
    const std::size_t n = v.size();
    return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

/// Least-squares slope of log(y) against log(x).
inline double loglog_slope(const std::vector<double>& x, const std::vector<double>& y) {
    const std::size_t n = x.size();
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < n; ++i) {
        const double lx = std::log(x[i]);
        const double ly = std::log(std::max(y[i], 1e-300));
        sx += lx;
        sy += ly;
        sxx += lx * lx;
        sxy += lx * ly;
    }
    const double denom = n * sxx - sx * sx;
    if (denom == 0.0) return 0.0;
    return (n * sxy - sx * sy) / denom;
}

inline std::string condition_label(int C, int D, int Dp, int T) {
    char buf[80];
    std::snprintf(buf, sizeof(buf), "C=%d D=%d Dp=%d T=%d", C, D, Dp, T);
    return buf;
}

/// Train/test pair for one dataset cell of the given experiment.
inline void make_cell_data(const ExperimentConfig& cfg, std::uint64_t seed_dataset,
                           Dataset& train_set, Dataset& test_set, int& C_out, int& D_out) {
    if (cfg.id == "C-pca") {
        train_set = gen_pca_problem(cfg.n_train, cfg.T, derive_seed(seed_dataset, 2));
        test_set = gen_pca_problem(cfg.n_test, cfg.T, derive_seed(seed_dataset, 3));
        C_out = 2;
        D_out = 2;
        return;
    }
    if (cfg.id == "C-lda") {
        train_set = gen_xor_problem(cfg.n_train, cfg.T, derive_seed(seed_dataset, 2));
        test_set = gen_xor_problem(cfg.n_test, cfg.T, derive_seed(seed_dataset, 3));
        C_out = 2;
        D_out = 2;
        return;
    }
    const HmmSpec spec = sample_hmm_spec(cfg.C, cfg.D, derive_seed(seed_dataset, 1));
    train_set = sample_hmm_dataset(spec, cfg.n_train, cfg.T, derive_seed(seed_dataset, 2));
    test_set = sample_hmm_dataset(spec, cfg.n_test, cfg.T, derive_seed(seed_dataset, 3));
    if (cfg.id == "C-noisy") {
        train_set = mix_noise(train_set, cfg.noise_ratio, derive_seed(seed_dataset, 4));
        test_set = mix_noise(test_set, cfg.noise_ratio, derive_seed(seed_dataset, 5));
    }
    C_out = cfg.C;
    D_out = cfg.D;
}

/// Spread of the reduced signal per class, pooled over all time steps of all
/// samples and over every class-2 component projection (first reduced
/// coordinate each).  Training concentrates a class under its own
/// projections, so the spread gap shows through the counterpart's: class 1
/// stays wide exactly where class 2 has been narrowed.
inline void reduced_class_stds(const NetworkWeights& w, const Dataset& ds, double& std1,
                               double& std2) {
    if (w.topo.C < 2) throw InvalidParams("reduced_class_stds: needs at least two classes");
    std::vector<double> sum(2, 0.0), sumsq(2, 0.0);
    std::vector<long> n(2, 0);
    const int c_ref = 1;
    for (int k = 0; k < w.topo.K[c_ref]; ++k)
        for (int m = 0; m < w.topo.M[c_ref][k]; ++m) {
            const Eigen::VectorXd v =
                w.W[w.topo.component_index(c_ref, k, m)].bottomRows(w.topo.D).col(0);
            for (const auto& s : ds.samples) {
                if (s.label < 1 || s.label > 2) continue;
                const Eigen::VectorXd z = s.series * v;
                sum[s.label - 1] += z.sum();
                sumsq[s.label - 1] += z.squaredNorm();
                n[s.label - 1] += z.size();
            }
        }
    const auto sd = [](double s, double sq, long cnt) {
        if (cnt < 2) return 0.0;
        const double mean = s / cnt;
        return std::sqrt(std::max(0.0, (sq - cnt * mean * mean) / (cnt - 1)));
    };
    std1 = sd(sum[0], sumsq[0], n[0]);
    std2 = sd(sum[1], sumsq[1], n[1]);
}

inline void append_summaries(const std::string& id, std::vector<ResultRow>& rows,
                             std::vector<SummaryRow>& summaries) {
    // Group rows by (condition, method), preserving first-appearance order.
    std::vector<std::pair<std::string, std::string>> keys;
    for (const auto& r : rows) {
        const auto key = std::make_pair(r.condition, r.method);
        if (std::find(keys.begin(), keys.end(), key) == keys.end()) keys.push_back(key);
    }
    for (const auto& key : keys) {
        SummaryRow s;
        s.id = id;
        s.condition = key.first;
        s.method = key.second;
        double sum = 0.0, sumsq = 0.0;
        int n = 0;
        for (const auto& r : rows) {
            if (r.condition != key.first || r.method != key.second) continue;
            ++s.n_cells;
            if (r.failed) {
                ++s.n_failed;
                continue;
            }
            sum += r.accuracy;
            sumsq += r.accuracy * r.accuracy;
            ++n;
        }
        if (n > 0) {
            s.mean_accuracy = sum / n;
            if (n > 1)
                s.std_accuracy =
                    std::sqrt(std::max(0.0, (sumsq - n * s.mean_accuracy * s.mean_accuracy) /
                                                (n - 1)));
        }
        summaries.push_back(std::move(s));
    }
}

}  // namespace detail

/// Median per-iteration training cost across model sizes: a D grid at fixed
/// Dp and a Dp grid at fixed D.  Each cell trains a fresh model on data of
/// matching dimension for at least min_iters steps, timing every step, and
/// separately times the per-step Lagrange part (constraint values, Jacobian,
/// KKT solve for every component).  Slopes are least-squares fits on the
/// log-log points.
inline ScalingResult scaling_probe(const std::vector<int>& d_grid, int dp_for_d,
                                   const std::vector<int>& dp_grid, int d_for_dp,
                                   const ExperimentConfig& cfg, int min_iters = 20) {
    if (d_grid.empty() || dp_grid.empty()) throw InvalidParams("scaling_probe: empty grid");

    const auto probe_cell = [&](int D, int Dp) {
        ScalingRow row;
        row.D = D;
        row.Dp = Dp;
        const std::uint64_t cell_seed = derive_seed(cfg.seed, 7, D * 1000 + Dp);
        const HmmSpec spec = sample_hmm_spec(cfg.C, D, derive_seed(cell_seed, 1));
        const Dataset train_set =
            sample_hmm_dataset(spec, cfg.n_train, cfg.T, derive_seed(cell_seed, 2));
        const ModelTopology topo = ModelTopology::uniform(cfg.C, cfg.K, cfg.M, D, Dp);
        NetworkWeights w = init_weights(topo, derive_seed(cell_seed, 3));
        TrainingConfig tc = cfg.training;
        tc.max_iter = min_iters;

        std::vector<double> step_times;
        step_times.reserve(min_iters);
        for (int it = 0; it < min_iters; ++it) {
            const double t0 = detail::now_seconds();
            try {
                update_step(w, train_set, tc);
            } catch (const StepFailure&) {
                break;  // converged to the floor; keep the timings we have
            }
            step_times.push_back(detail::now_seconds() - t0);
        }
        row.iters = static_cast<int>(step_times.size());
        row.step_time_s = detail::median(step_times);

        // The Lagrange part in isolation, against the current gradient.
        Gradients grad;
        nll_and_grad(w, train_set, grad);
        const int n_vars = (D + 1) * Dp;
        std::vector<double> kkt_times;
        kkt_times.reserve(min_iters);
        for (int rep = 0; rep < min_iters; ++rep) {
            const double t0 = detail::now_seconds();
            for (int ci = 0; ci < topo.total_components(); ++ci) {
                const Eigen::MatrixXd V = w.W[ci].bottomRows(D);
                const Eigen::Map<const Eigen::VectorXd> g(grad.W[ci].data(), n_vars);
                solve_kkt(g, constraint_jacobian(V), constraint_values(V));
            }
            kkt_times.push_back(detail::now_seconds() - t0);
        }
        row.lagrange_time_s = detail::median(kkt_times);
        return row;
    };

    ScalingResult res;
    std::vector<double> xs, ys;
    for (int D : d_grid) {
        res.d_rows.push_back(probe_cell(D, dp_for_d));
        xs.push_back(D);
        ys.push_back(res.d_rows.back().step_time_s);
    }
    res.slope_d = detail::loglog_slope(xs, ys);

    xs.clear();
    ys.clear();
    for (int Dp : dp_grid) {
        res.dp_rows.push_back(probe_cell(d_for_dp, Dp));
        xs.push_back(Dp);
        ys.push_back(res.dp_rows.back().lagrange_time_s);
    }
    res.slope_dp_lagrange = detail::loglog_slope(xs, ys);
    return res;
}

/// Run one experiment suite.  Cells execute in a fixed nested order
/// (datasets outer, inits inner, methods innermost), with seeds
/// seed_dataset = hash(master, i) and seed_init = hash(master, i, j); every
/// numerical output is a pure function of the config (wall times exempt).
/// A StepFailure aborts only its cell, recorded as a failed row and excluded
/// from summary means.
inline ExperimentResult run_experiment(const ExperimentConfig& cfg) {
    cfg.validate();
    ExperimentResult res;
    res.config = cfg;

    if (cfg.id == "B-proxy") {
        res.scaling = scaling_probe({10, 30, 50, 70, 90}, 1, {1, 2, 3, 4, 5}, cfg.D, cfg);
        return res;
    }

    const bool want_pca = cfg.id == "C-pca" || cfg.id == "C-noisy";
    const bool want_lda = cfg.id == "C-lda" || cfg.id == "C-noisy";

    for (int i = 0; i < cfg.n_datasets; ++i) {
        const std::uint64_t seed_dataset = derive_seed(cfg.seed, i);
        Dataset train_set, test_set;
        int C = 0, D = 0;
        detail::make_cell_data(cfg, seed_dataset, train_set, test_set, C, D);
        const std::string condition = detail::condition_label(C, D, cfg.Dp, cfg.T);
        const ModelTopology topo = ModelTopology::uniform(C, cfg.K, cfg.M, D, cfg.Dp);

        for (int j = 0; j < cfg.n_inits; ++j) {
            const std::uint64_t seed_init = derive_seed(cfg.seed, i, j);

            ResultRow row;
            row.id = cfg.id;
            row.condition = condition;
            row.method = "tsdcn";
            row.dataset_idx = i;
            row.init_idx = j;
            row.seed_dataset = seed_dataset;
            row.seed_init = seed_init;
            const double t0 = detail::now_seconds();
            try {
                NetworkWeights w = init_weights(topo, seed_init);
                const TrainResult tr = train(w, train_set, cfg.training);
                row.accuracy = accuracy(predict_labels(w, test_set), true_labels(test_set));
                row.J_final = tr.history.back().J;
                row.iterations = tr.iterations;
                if (cfg.id == "C-lda")
                    detail::reduced_class_stds(w, test_set, row.std_class1, row.std_class2);
                if (cfg.id == "D-convergence" && i == 0 && j == 0) res.j_trace = tr.history;
            } catch (const StepFailure&) {
                row.failed = true;
            }
            row.wall_s = detail::now_seconds() - t0;
            res.rows.push_back(row);

            const auto run_pipeline = [&](const char* method, bool use_pca) {
                ResultRow prow = row;
                prow.method = method;
                prow.accuracy = prow.J_final = 0.0;
                prow.iterations = 0;
                prow.failed = false;
                prow.std_class1 = prow.std_class2 = 0.0;
                const double p0 = detail::now_seconds();
                try {
                    const LinearReducer red = use_pca ? pca_fit(train_set, cfg.Dp)
                                                      : lda_fit(train_set, cfg.Dp);
                    ReducedClassifierConfig rc;
                    rc.K = cfg.K;
                    rc.M = cfg.M;
                    rc.training = cfg.training;
                    rc.training.seed = derive_seed(seed_init, use_pca ? 1 : 2);
                    prow.accuracy = classify_reduced(red, train_set, test_set, rc);
                } catch (const Error&) {
                    prow.failed = true;
                }
                prow.wall_s = detail::now_seconds() - p0;
                res.rows.push_back(prow);
            };
            if (want_pca) run_pipeline("pca", true);
            if (want_lda) run_pipeline("lda", false);
        }
    }
    detail::append_summaries(cfg.id, res.rows, res.summaries);
    return res;
}

inline void write_result_rows(const std::string& path, const std::vector<ResultRow>& rows) {
    std::string out =
        "id,condition,method,dataset_idx,init_idx,seed_dataset,seed_init,"
        "accuracy,J_final,iterations,wall_s,failed,std_class1,std_class2\n";
    char buf[320];
    for (const auto& r : rows) {
        std::snprintf(buf, sizeof(buf), "%s,%s,%s,%d,%d,%llu,%llu,%.17g,%.17g,%d,%.6g,%d,%.17g,%.17g\n",
                      r.id.c_str(), r.condition.c_str(), r.method.c_str(), r.dataset_idx,
                      r.init_idx, static_cast<unsigned long long>(r.seed_dataset),
                      static_cast<unsigned long long>(r.seed_init), r.accuracy, r.J_final,
                      r.iterations, r.wall_s, r.failed ? 1 : 0, r.std_class1, r.std_class2);
        out += buf;
    }
    write_text_file(path, out);
}

inline void write_summaries(const std::string& path, const std::vector<SummaryRow>& rows) {
    std::string out = "id,condition,method,n_cells,n_failed,mean_accuracy,std_accuracy\n";
    char buf[240];
    for (const auto& s : rows) {
        std::snprintf(buf, sizeof(buf), "%s,%s,%s,%d,%d,%.17g,%.17g\n", s.id.c_str(),
                      s.condition.c_str(), s.method.c_str(), s.n_cells, s.n_failed,
                      s.mean_accuracy, s.std_accuracy);
        out += buf;
    }
    write_text_file(path, out);
}

/// Figure-analog tables from one or more experiment results:
///   accuracy_vs_classes.csv  accuracy per class count and method
///   time_vs_dims.csv         one row per probed (D, Dp) cell
///   method_comparison.csv    mean/std accuracy per condition and method
///   j_trace.csv              per-iteration loss of the traced training run
inline void emit_plot_data(const std::vector<ExperimentResult>& results,
                           const std::string& dir) {
    if (results.empty()) throw InvalidParams("emit_plot_data: no results");

    // accuracy vs C, grouped over whatever class counts are present.
    {
        std::string out = "C,method,mean_accuracy,std_accuracy,n\n";
        std::vector<std::pair<int, std::string>> keys;
        std::vector<const ResultRow*> all;
        for (const auto& r : results)
            for (const auto& row : r.rows)
                if (!row.failed) all.push_back(&row);
        for (const ResultRow* row : all) {
            int C = 0;
            std::sscanf(row->condition.c_str(), "C=%d", &C);
            const auto key = std::make_pair(C, row->method);
            if (std::find(keys.begin(), keys.end(), key) != keys.end()) continue;
            keys.push_back(key);
            double sum = 0, sumsq = 0;
            int n = 0;
            for (const ResultRow* rr : all) {
                int C2 = 0;
                std::sscanf(rr->condition.c_str(), "C=%d", &C2);
                if (C2 != C || rr->method != row->method) continue;
                sum += rr->accuracy;
                sumsq += rr->accuracy * rr->accuracy;
                ++n;
            }
            const double mean = sum / n;
            const double sd =
                n > 1 ? std::sqrt(std::max(0.0, (sumsq - n * mean * mean) / (n - 1))) : 0.0;
            char buf[200];
            std::snprintf(buf, sizeof(buf), "%d,%s,%.17g,%.17g,%d\n", C, row->method.c_str(),
                          mean, sd, n);
            out += buf;
        }
        write_text_file(dir + "/accuracy_vs_classes.csv", out);
    }

    {
        std::string out = "D,Dp,step_time_s,lagrange_time_s,iters\n";
        char buf[200];
        for (const auto& r : results) {
            const auto emit_row = [&](const ScalingRow& row) {
                std::snprintf(buf, sizeof(buf), "%d,%d,%.6g,%.6g,%d\n", row.D, row.Dp,
                              row.step_time_s, row.lagrange_time_s, row.iters);
                out += buf;
            };
            for (const auto& row : r.scaling.d_rows) emit_row(row);
            for (const auto& row : r.scaling.dp_rows) emit_row(row);
        }
        write_text_file(dir + "/time_vs_dims.csv", out);
    }

    {
        std::string out = "id,condition,method,mean_accuracy,std_accuracy,n_failed\n";
        char buf[240];
        for (const auto& r : results)
            for (const auto& s : r.summaries) {
                std::snprintf(buf, sizeof(buf), "%s,%s,%s,%.17g,%.17g,%d\n", s.id.c_str(),
                              s.condition.c_str(), s.method.c_str(), s.mean_accuracy,
                              s.std_accuracy, s.n_failed);
                out += buf;
            }
        write_text_file(dir + "/method_comparison.csv", out);
    }

    {
        std::string out = "iter,J\n";
        char buf[80];
        for (const auto& r : results) {
            if (r.j_trace.empty()) continue;
            for (const auto& rec : r.j_trace) {
                if (rec.iter == 0) continue;
                std::snprintf(buf, sizeof(buf), "%d,%.17g\n", rec.iter, rec.J);
                out += buf;
            }
            break;  // one trace per file
        }
        write_text_file(dir + "/j_trace.csv", out);
    }
}

/// Run and persist: results.csv, summary.csv, config.json, plus the figure
/// tables and (for D-convergence) the training log of the traced cell.
inline ExperimentResult run_experiment(const ExperimentConfig& cfg, const std::string& out_dir) {
    ExperimentResult res = run_experiment(cfg);
    write_result_rows(out_dir + "/results.csv", res.rows);
    write_summaries(out_dir + "/summary.csv", res.summaries);
    write_json_file(out_dir + "/config.json", experiment_config_to_json(cfg));
    emit_plot_data({res}, out_dir);
    return res;
}

}  // namespace tsdcn
