#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "tsdcn/datagen.hpp"
#include "tsdcn/experiments.hpp"
#include "tsdcn/forward.hpp"
#include "tsdcn/io.hpp"
#include "tsdcn/metrics.hpp"
#include "tsdcn/trainer.hpp"
#include "tsdcn/weights.hpp"

namespace {

using tsdcn::json;

tsdcn::ModelTopology topology_from_json(const json& j) {
    const int C = j.at("C").get<int>();
    const int D = j.at("D").get<int>();
    const int Dp = j.at("Dp").get<int>();
    std::vector<int> K;
    if (j.at("K").is_array())
        K = j["K"].get<std::vector<int>>();
    else
        K.assign(C, j["K"].get<int>());
    std::vector<std::vector<int>> M;
    const json& jm = j.at("M");
    if (jm.is_number()) {
        for (int c = 0; c < C; ++c)
            M.emplace_back(c < static_cast<int>(K.size()) ? K[c] : 0, jm.get<int>());
    } else if (jm.is_array() && !jm.empty() && jm[0].is_array()) {
        M = jm.get<std::vector<std::vector<int>>>();
    } else {
        const auto per_class = jm.get<std::vector<int>>();
        for (int c = 0; c < C; ++c)
            M.emplace_back(c < static_cast<int>(K.size()) ? K[c] : 0,
                           c < static_cast<int>(per_class.size()) ? per_class[c] : 0);
    }
    tsdcn::ModelTopology topo{C, std::move(K), std::move(M), D, Dp};
    topo.validate();
    return topo;
}

tsdcn::TrainingConfig training_from_json(const json& j) {
    tsdcn::TrainingConfig c;
    c.learning_rate = j.value("learning_rate", c.learning_rate);
    c.max_iter = j.value("max_iter", c.max_iter);
    c.loss_tol = j.value("loss_tol", c.loss_tol);
    c.orth_tol = j.value("orth_tol", c.orth_tol);
    c.backtrack = j.value("backtrack", c.backtrack);
    c.terminal_attractor = j.value("terminal_attractor", c.terminal_attractor);
    c.train_projection = j.value("train_projection", c.train_projection);
    c.seed = j.value("seed", c.seed);
    return c;
}

struct GenerateArgs {
    std::string problem;
    int classes = 3, dims = 30, length = 50, n_train = 5, n_test = 50;
    double noise_ratio = 0.8;
    std::uint64_t seed = 1;
    std::string out;
};

void run_generate(const GenerateArgs& a) {
    tsdcn::Dataset train_set, test_set;
    json params{{"classes", a.classes}, {"dims", a.dims},     {"length", a.length},
                {"n_train", a.n_train}, {"n_test", a.n_test}};
    if (a.problem == "pca" || a.problem == "xor") {
        const auto gen = a.problem == "pca" ? tsdcn::gen_pca_problem : tsdcn::gen_xor_problem;
        train_set = gen(a.n_train, a.length, tsdcn::derive_seed(a.seed, 2));
        test_set = gen(a.n_test, a.length, tsdcn::derive_seed(a.seed, 3));
        params["classes"] = 2;
        params["dims"] = 2;
    } else {
        const tsdcn::HmmSpec spec =
            tsdcn::sample_hmm_spec(a.classes, a.dims, tsdcn::derive_seed(a.seed, 1));
        train_set = tsdcn::sample_hmm_dataset(spec, a.n_train, a.length,
                                              tsdcn::derive_seed(a.seed, 2));
        test_set =
            tsdcn::sample_hmm_dataset(spec, a.n_test, a.length, tsdcn::derive_seed(a.seed, 3));
        if (a.problem == "noisy") {
            train_set =
                tsdcn::mix_noise(train_set, a.noise_ratio, tsdcn::derive_seed(a.seed, 4));
            test_set = tsdcn::mix_noise(test_set, a.noise_ratio, tsdcn::derive_seed(a.seed, 5));
            params["noise_ratio"] = a.noise_ratio;
        }
    }
    tsdcn::save_dataset_jsonl(a.out + ".train.jsonl", train_set);
    tsdcn::save_dataset_jsonl(a.out + ".test.jsonl", test_set);
    tsdcn::DatasetMeta meta{a.problem, a.seed, params};
    tsdcn::write_manifest(a.out + ".manifest.json", meta);
    std::printf("wrote %s.train.jsonl (%d samples), %s.test.jsonl (%d samples)\n",
                a.out.c_str(), train_set.size(), a.out.c_str(), test_set.size());
}

void run_train(const std::string& data_path, const std::string& config_path,
               const std::string& model_out, const std::string& log_out) {
    const tsdcn::Dataset ds = tsdcn::load_dataset_jsonl(data_path);
    const json cfg = tsdcn::read_json_file(config_path);
    const tsdcn::ModelTopology topo = topology_from_json(cfg.at("topology"));
    tsdcn::TrainingConfig tc =
        cfg.contains("training") ? training_from_json(cfg["training"]) : tsdcn::TrainingConfig{};
    const std::uint64_t init_seed = cfg.value("seed", tc.seed);
    tsdcn::NetworkWeights w = tsdcn::init_weights(topo, init_seed);
    const tsdcn::TrainResult tr = tsdcn::train(w, ds, tc);
    tsdcn::save_weights(model_out, w);
    if (!log_out.empty()) tsdcn::write_training_log(log_out, tr.history);
    std::printf("iterations=%d J=%.17g converged=%d\n", tr.iterations, tr.history.back().J,
                tr.converged ? 1 : 0);
}

void run_eval(const std::string& model_path, const std::string& data_path) {
    const tsdcn::NetworkWeights w = tsdcn::load_weights(model_path);
    const tsdcn::Dataset ds = tsdcn::load_dataset_jsonl(data_path);
    const double acc = tsdcn::accuracy(tsdcn::predict_labels(w, ds), tsdcn::true_labels(ds));
    std::printf("samples=%d accuracy=%.4f\n", ds.size(), acc);
}

void run_experiment_cmd(const std::string& id, const std::string& config_path,
                        const std::string& out_dir) {
    tsdcn::ExperimentConfig cfg;
    if (!config_path.empty())
        cfg = tsdcn::experiment_config_from_json(tsdcn::read_json_file(config_path));
    cfg.id = id;
    std::filesystem::create_directories(out_dir);
    const tsdcn::ExperimentResult res = tsdcn::run_experiment(cfg, out_dir);
    for (const auto& s : res.summaries)
        std::printf("%s | %s | %s: mean=%.2f std=%.2f (n=%d, failed=%d)\n", s.id.c_str(),
                    s.condition.c_str(), s.method.c_str(), s.mean_accuracy, s.std_accuracy,
                    s.n_cells, s.n_failed);
    if (id == "B-proxy")
        std::printf("slope_d=%.3f slope_dp_lagrange=%.3f\n", res.scaling.slope_d,
                    res.scaling.slope_dp_lagrange);
    std::printf("results written to %s\n", out_dir.c_str());
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"time-series discriminant component network"};
    app.require_subcommand(1);

    GenerateArgs gen;
    CLI::App* cmd_gen = app.add_subcommand("generate", "sample a benchmark problem");
    cmd_gen->add_option("--problem", gen.problem, "problem family")
        ->required()
        ->check(CLI::IsMember({"hmm", "pca", "xor", "noisy"}));
    cmd_gen->add_option("--classes", gen.classes, "number of classes");
    cmd_gen->add_option("--dims", gen.dims, "observation dimension");
    cmd_gen->add_option("--length", gen.length, "series length");
    cmd_gen->add_option("--n-train", gen.n_train, "training series per class");
    cmd_gen->add_option("--n-test", gen.n_test, "test series per class");
    cmd_gen->add_option("--noise-ratio", gen.noise_ratio, "noise mixing ratio for noisy");
    cmd_gen->add_option("--seed", gen.seed, "master seed");
    cmd_gen->add_option("--out", gen.out, "output path prefix")->required();

    std::string data_path, config_path, model_out, log_out;
    CLI::App* cmd_train = app.add_subcommand("train", "fit a model to a dataset");
    cmd_train->add_option("--data", data_path, "training dataset (jsonl)")->required();
    cmd_train->add_option("--config", config_path, "topology/training config (json)")
        ->required();
    cmd_train->add_option("--model-out", model_out, "trained weights output (json)")
        ->required();
    cmd_train->add_option("--log-out", log_out, "per-iteration training log (csv)");

    std::string model_path, eval_data;
    CLI::App* cmd_eval = app.add_subcommand("eval", "classify a dataset with a trained model");
    cmd_eval->add_option("--model", model_path, "trained weights (json)")->required();
    cmd_eval->add_option("--data", eval_data, "dataset to classify (jsonl)")->required();

    std::string exp_id, exp_config, exp_out;
    CLI::App* cmd_exp = app.add_subcommand("experiment", "run a study end to end");
    cmd_exp->add_option("--id", exp_id, "experiment id")
        ->required()
        ->check(CLI::IsMember({"A", "B-proxy", "C-pca", "C-lda", "C-noisy", "D-convergence"}));
    cmd_exp->add_option("--config", exp_config, "experiment config (json)");
    cmd_exp->add_option("--out-dir", exp_out, "output directory")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    try {
        if (cmd_gen->parsed()) run_generate(gen);
        if (cmd_train->parsed()) run_train(data_path, config_path, model_out, log_out);
        if (cmd_eval->parsed()) run_eval(model_path, eval_data);
        if (cmd_exp->parsed()) run_experiment_cmd(exp_id, exp_config, exp_out);
        return 0;
    } catch (const tsdcn::NumericalError& e) {
        std::fprintf(stderr, "numerical failure: %s\n", e.what());
    } catch (const tsdcn::StepFailure& e) {
        std::fprintf(stderr, "numerical failure: %s\n", e.what());
    } catch (const tsdcn::RankDeficient& e) {
        std::fprintf(stderr, "numerical failure: %s\n", e.what());
    } catch (const tsdcn::DegenerateMatrix& e) {
        std::fprintf(stderr, "numerical failure: %s\n", e.what());
    } catch (const tsdcn::DegenerateData& e) {
        std::fprintf(stderr, "numerical failure: %s\n", e.what());
    } catch (const tsdcn::Error& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    } catch (const json::exception& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return 1;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "failure: %s\n", e.what());
    }
    return 2;
}
