// Delivery gate: ten scripted checks, one printed line each, exit 0 only if
// every check passes.  Thresholds are pinned here on purpose; loosening one
// is a contract change, not a tuning knob.

#include <tsdcn/experiments.hpp>

#include <chrono>
#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

#include "support.hpp"

namespace {

using tsdcn::derive_seed;
using tsdcn::ExperimentConfig;
using tsdcn::ExperimentResult;

constexpr double kOracleRelTol = 1e-8;    // network vs recursion oracle
constexpr double kGmmAbsTol = 1e-10;      // K=1, T=1 vs direct GMM posterior
constexpr double kGradRelTol = 1e-4;      // analytic vs central differences
constexpr double kGradAbsTol = 1e-8;      // near-zero gradient entries
constexpr double kMonotoneSlack = 1e-9;   // J may rise by at most this per step
constexpr double kOrthTol = 1e-8;         // ||V^T V - I||_inf along the run
constexpr double kExpAMin = 95.0;         // mean accuracy, experiment A
constexpr double kClassSweepMin = 90.0;   // mean accuracy per C in {2,5,10}
constexpr double kSineTsdcnMin = 95.0;    // sine problem, joint reduction
constexpr double kSinePipeMax = 65.0;     // sine problem, PCA pipeline
constexpr double kSineGapMin = 30.0;      // points between the two
constexpr double kXorTsdcnMin = 80.0;     // XOR problem, joint reduction
constexpr double kXorLdaMax = 75.0;       // XOR problem, LDA pipeline
constexpr int kXorStdRunsMin = 8;         // runs (of 10) with std1 > std2
constexpr double kNoisyMin = 75.0;        // noisy problem, joint reduction
constexpr double kNoisyGapMin = 10.0;     // points over each pipeline
constexpr double kSlopeMax = 1.5;         // log-log step time vs D

double now_s() {
    return std::chrono::duration<double>(
               std::chrono::steady_clock::now().time_since_epoch())
        .count();
}

std::string fmt(const char* f, ...) {
    char buf[512];
    va_list ap;
    va_start(ap, f);
    std::vsnprintf(buf, sizeof(buf), f, ap);
    va_end(ap);
    return buf;
}

const tsdcn::SummaryRow& summary_for(const ExperimentResult& res, const std::string& method) {
    for (const auto& s : res.summaries)
        if (s.method == method) return s;
    throw std::runtime_error("no summary for method " + method);
}

tsdcn::TrainingConfig experiment_training(std::uint64_t seed) {
    tsdcn::TrainingConfig t;
    t.learning_rate = 0.05;
    t.max_iter = 200;
    t.loss_tol = 1e-7;
    t.seed = seed;
    return t;
}

// 1: layered network vs the log-space recursion oracle on random instances.
bool check_oracle(std::string& detail) {
    tsdcn::Rng shape_rng(314159);
    double worst = 0.0;
    for (int rep = 0; rep < 100; ++rep) {
        const tsdcn::ModelTopology topo = testsup::random_small_topo(shape_rng);
        tsdcn::Rng rng(derive_seed(101, rep));
        const tsdcn::TsdcaParams params = tsdcn::sample_tsdca_params(topo, rng);
        const tsdcn::NetworkWeights w = tsdcn::encode_tsdca_params(params);
        const int T = 1 + rep % 5;
        const Eigen::MatrixXd series = rng.normal_matrix(T, topo.D);
        const Eigen::VectorXd net = tsdcn::forward_posterior(w, series);
        const Eigen::VectorXd ref = tsdcn::tsdca_direct_posterior(params, series);
        worst = std::max(worst, testsup::max_rel_diff(net, ref));
    }
    detail = fmt("worst rel err %.2e over 100 instances (tol %.0e)", worst, kOracleRelTol);
    return worst <= kOracleRelTol;
}

// 2: K=1, T=1 collapses to a plain GMM Bayes classifier.
bool check_gmm_reduction(std::string& detail) {
    double worst = 0.0;
    for (int rep = 0; rep < 100; ++rep) {
        tsdcn::Rng rng(derive_seed(202, rep));
        const int C = 2 + static_cast<int>(rng.uniform() * 2.0);
        const int D = 1 + static_cast<int>(rng.uniform() * 4.0);
        const int Dp = 1 + static_cast<int>(rng.uniform() * std::min(D, 2));
        const int M = 1 + static_cast<int>(rng.uniform() * 2.0);
        const auto topo = tsdcn::ModelTopology::uniform(C, 1, M, D, std::min(Dp, D));
        const tsdcn::TsdcaParams params = tsdcn::sample_tsdca_params(topo, rng);
        const tsdcn::NetworkWeights w = tsdcn::encode_tsdca_params(params);
        const Eigen::VectorXd x = rng.normal_vector(D);
        const Eigen::VectorXd net = tsdcn::forward_posterior(w, x.transpose());
        const Eigen::VectorXd ref = tsdcn::gmm_posterior(params, x);
        worst = std::max(worst, testsup::max_abs_diff(net, ref));
    }
    detail = fmt("worst abs err %.2e over 100 instances (tol %.0e)", worst, kGmmAbsTol);
    return worst <= kGmmAbsTol;
}

// 3: analytic gradient vs central finite differences on tiny instances.
bool check_gradient(std::string& detail) {
    tsdcn::Rng shape_rng(271828);
    double worst_rel = 0.0, worst_abs = 0.0;
    for (int rep = 0; rep < 20; ++rep) {
        const tsdcn::ModelTopology topo = testsup::random_small_topo(shape_rng);
        tsdcn::Rng rng(derive_seed(303, rep));
        const int T = 1 + rep % 3;
        const tsdcn::Dataset ds = testsup::random_dataset(topo, 2 * topo.C, T, rng);
        const tsdcn::NetworkWeights w =
            testsup::jittered_weights(topo, derive_seed(303, rep, 7));
        const tsdcn::Gradients g = tsdcn::grad_weights(w, ds);
        const tsdcn::Gradients fd = testsup::fd_gradients(w, ds);
        const testsup::GradCompare cmp = testsup::compare_gradients(g, fd);
        worst_rel = std::max(worst_rel, cmp.worst_rel);
        worst_abs = std::max(worst_abs, cmp.worst_abs_small);
    }
    detail = fmt("worst rel %.2e (tol %.0e), worst small-entry abs %.2e (tol %.0e), 20 instances",
                 worst_rel, kGradRelTol, worst_abs, kGradAbsTol);
    return worst_rel <= kGradRelTol && worst_abs <= kGradAbsTol;
}

// 4: on experiment-A data the loss never rises and the projection stays
// orthonormal at every recorded iteration.
bool check_constrained_descent(std::string& detail) {
    const tsdcn::HmmSpec spec = tsdcn::sample_hmm_spec(3, 30, derive_seed(404, 1));
    const tsdcn::Dataset train_set = tsdcn::sample_hmm_dataset(spec, 5, 50, derive_seed(404, 2));
    const auto topo = tsdcn::ModelTopology::uniform(3, 2, 2, 30, 1);
    tsdcn::NetworkWeights w = tsdcn::init_weights(topo, derive_seed(404, 3));
    tsdcn::TrainingConfig cfg = experiment_training(derive_seed(404, 3));
    cfg.max_iter = 120;
    cfg.loss_tol = 1e-12;
    const tsdcn::TrainResult res = tsdcn::train(w, train_set, cfg);

    double max_rise = 0.0, max_h = 0.0;
    for (std::size_t i = 0; i < res.history.size(); ++i) {
        if (i > 0) max_rise = std::max(max_rise, res.history[i].J - res.history[i - 1].J);
        max_h = std::max(max_h, res.history[i].h_inf);
    }
    max_h = std::max(max_h, tsdcn::orthonormality_error(w));
    detail = fmt("%d iterations, J %.4f -> %.4f, max rise %.2e (tol %.0e), max ||h||_inf %.2e (tol %.0e)",
                 res.iterations, res.history.front().J, res.history.back().J, max_rise,
                 kMonotoneSlack, max_h, kOrthTol);
    return max_rise <= kMonotoneSlack && max_h <= kOrthTol;
}

// 5: experiment A at paper scale, mean accuracy over 3 datasets x 3 inits.
bool check_experiment_a(std::string& detail) {
    ExperimentConfig cfg;
    cfg.id = "A";
    cfg.seed = 5001;
    cfg.training = experiment_training(0);
    const ExperimentResult res = tsdcn::run_experiment(cfg);
    const auto& s = summary_for(res, "tsdcn");
    detail = fmt("mean accuracy %.2f%% (min %.0f%%), %d cells, %d failed", s.mean_accuracy,
                 kExpAMin, s.n_cells, s.n_failed);
    return s.n_failed == 0 && s.mean_accuracy >= kExpAMin;
}

// 6: the same protocol holds up as the class count grows.
bool check_class_sweep(std::string& detail) {
    detail.clear();
    bool ok = true;
    for (const int C : {2, 5, 10}) {
        ExperimentConfig cfg;
        cfg.id = "A";
        cfg.C = C;
        cfg.seed = 6000 + C;
        cfg.training = experiment_training(0);
        const ExperimentResult res = tsdcn::run_experiment(cfg);
        const auto& s = summary_for(res, "tsdcn");
        ok = ok && s.n_failed == 0 && s.mean_accuracy >= kClassSweepMin;
        if (!detail.empty()) detail += ", ";
        detail += fmt("C=%d: %.2f%%", C, s.mean_accuracy);
    }
    detail += fmt(" (min %.0f%% each)", kClassSweepMin);
    return ok;
}

// 7: sine problem; the jointly learned reduction must beat the PCA pipeline
// by a wide margin because PCA picks the noise direction.
bool check_sine(std::string& detail) {
    ExperimentConfig cfg;
    cfg.id = "C-pca";
    cfg.T = 50;
    cfg.seed = 7001;
    cfg.training = experiment_training(0);
    cfg.training.learning_rate = 0.1;
    cfg.training.max_iter = 300;
    cfg.training.terminal_attractor = true;
    const ExperimentResult res = tsdcn::run_experiment(cfg);
    const auto& net = summary_for(res, "tsdcn");
    const auto& pipe = summary_for(res, "pca");
    const double gap = net.mean_accuracy - pipe.mean_accuracy;
    detail = fmt("tsdcn %.2f%% (min %.0f%%), pca pipeline %.2f%% (max %.0f%%), gap %.2f (min %.0f)",
                 net.mean_accuracy, kSineTsdcnMin, pipe.mean_accuracy, kSinePipeMax, gap,
                 kSineGapMin);
    return net.n_failed == 0 && net.mean_accuracy >= kSineTsdcnMin &&
           pipe.mean_accuracy <= kSinePipeMax && gap >= kSineGapMin;
}

// 8: XOR problem; LDA has no usable first-order signal, and the learned
// reduction should leave class 1 visibly wider than class 2 run after run.
bool check_xor(std::string& detail) {
    ExperimentConfig cfg;
    cfg.id = "C-lda";
    cfg.T = 10;
    cfg.n_datasets = 10;
    cfg.n_inits = 1;
    cfg.seed = 8001;
    cfg.training = experiment_training(0);
    cfg.training.max_iter = 300;
    const ExperimentResult res = tsdcn::run_experiment(cfg);
    const auto& net = summary_for(res, "tsdcn");
    const auto& lda = summary_for(res, "lda");
    int wider = 0, runs = 0;
    for (const auto& r : res.rows) {
        if (r.method != "tsdcn" || r.failed) continue;
        ++runs;
        if (r.std_class1 > r.std_class2) ++wider;
    }
    detail = fmt("tsdcn %.2f%% (min %.0f%%), lda pipeline %.2f%% (max %.0f%%), class-1 wider in %d/%d runs (min %d/10)",
                 net.mean_accuracy, kXorTsdcnMin, lda.mean_accuracy, kXorLdaMax, wider, runs,
                 kXorStdRunsMin);
    return net.n_failed == 0 && net.mean_accuracy >= kXorTsdcnMin &&
           lda.mean_accuracy <= kXorLdaMax && wider >= kXorStdRunsMin;
}

// 9: heavy additive noise; the joint reduction must stay useful while both
// fixed-reduction pipelines degrade.
bool check_noisy(std::string& detail) {
    ExperimentConfig cfg;
    cfg.id = "C-noisy";
    cfg.seed = 9001;
    cfg.n_train = 20;
    cfg.n_inits = 1;
    cfg.training = experiment_training(0);
    cfg.training.learning_rate = 0.5;
    cfg.training.max_iter = 800;
    const ExperimentResult res = tsdcn::run_experiment(cfg);
    const auto& net = summary_for(res, "tsdcn");
    const auto& pca = summary_for(res, "pca");
    const auto& lda = summary_for(res, "lda");
    const double gap_pca = net.mean_accuracy - pca.mean_accuracy;
    const double gap_lda = net.mean_accuracy - lda.mean_accuracy;
    detail = fmt("tsdcn %.2f%% (min %.0f%%), pca %.2f%%, lda %.2f%%, gaps %.1f/%.1f (min %.0f)",
                 net.mean_accuracy, kNoisyMin, pca.mean_accuracy, lda.mean_accuracy, gap_pca,
                 gap_lda, kNoisyGapMin);
    return net.n_failed == 0 && net.mean_accuracy >= kNoisyMin && gap_pca >= kNoisyGapMin &&
           gap_lda >= kNoisyGapMin;
}

// 10: per-iteration cost grows mildly with the input dimension.
bool check_scaling(std::string& detail) {
    ExperimentConfig cfg;
    cfg.id = "B-proxy";
    cfg.seed = 10001;
    cfg.training = experiment_training(0);
    const tsdcn::ScalingResult res =
        tsdcn::scaling_probe({10, 30, 50, 70, 90}, 1, {1, 2, 3, 4, 5}, 30, cfg, 20);
    std::string times;
    for (const auto& r : res.d_rows) times += fmt(" D=%d:%.2fms", r.D, 1e3 * r.step_time_s);
    detail = fmt("log-log slope %.3f (max %.1f);%s", res.slope_d, kSlopeMax, times.c_str());
    return res.slope_d <= kSlopeMax;
}

struct Criterion {
    const char* name;
    std::function<bool(std::string&)> run;
};

}  // namespace

int main() {
    const std::vector<Criterion> criteria = {
        {"network matches recursion oracle", check_oracle},
        {"K=1,T=1 reduces to GMM posterior", check_gmm_reduction},
        {"analytic gradient matches finite differences", check_gradient},
        {"descent is monotone and stays orthonormal", check_constrained_descent},
        {"experiment A reaches paper-scale accuracy", check_experiment_a},
        {"accuracy holds for C in {2,5,10}", check_class_sweep},
        {"sine: joint reduction beats PCA pipeline", check_sine},
        {"XOR: beats LDA pipeline with wider class 1", check_xor},
        {"noisy: joint reduction beats both pipelines", check_noisy},
        {"step cost scales mildly with D", check_scaling},
    };

    int failed = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        std::string detail;
        bool pass = false;
        const double t0 = now_s();
        try {
            pass = criteria[i].run(detail);
        } catch (const std::exception& e) {
            detail = fmt("exception: %s", e.what());
        }
        const double dt = now_s() - t0;
        std::printf("criterion %2zu %s  %s (%s; %.1fs)\n", i + 1, pass ? "PASS" : "FAIL",
                    criteria[i].name, detail.c_str(), dt);
        std::fflush(stdout);
        if (!pass) ++failed;
    }
    if (failed == 0)
        std::printf("acceptance: all %zu criteria passed\n", criteria.size());
    else
        std::printf("acceptance: %d of %zu criteria FAILED\n", failed, criteria.size());
    return failed == 0 ? 0 : 1;
}
