#include "ckfnet/cli.hpp"

#include <chrono>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "ckfnet/eval.hpp"
#include "ckfnet/io.hpp"
#include "ckfnet/ssm.hpp"
#include "ckfnet/training.hpp"

namespace ckfnet {

namespace {

namespace fs = std::filesystem;

std::string timestamp_tag() {
    const std::time_t now = std::time(nullptr);
    std::tm tm_utc{};
    gmtime_r(&now, &tm_utc);
    char buf[32];
    std::strftime(buf, sizeof(buf), "%Y%m%d-%H%M%S", &tm_utc);
    return buf;
}

struct Manifest {
    std::string verb;
    TrainingConfig config;
    std::vector<std::pair<std::string, std::string>> overrides;
    bool env_seed_used = false;
    std::uint64_t env_seed = 0;
    int threads = 0;
    std::vector<std::string> artifacts;
};

void write_manifest(const std::string& out_dir, const Manifest& man) {
    std::ostringstream os;
    os << "{\n  \"verb\": \"" << man.verb << "\",\n";
    os << "  \"threads\": " << man.threads << ",\n";
    os << "  \"env_seed_override\": ";
    if (man.env_seed_used)
        os << man.env_seed;
    else
        os << "null";
    os << ",\n  \"overrides\": [";
    for (std::size_t i = 0; i < man.overrides.size(); ++i) {
        if (i) os << ", ";
        os << "[\"" << man.overrides[i].first << "\", \"" << man.overrides[i].second << "\"]";
    }
    os << "],\n  \"config\": ";
    std::istringstream cfg(config_to_json(man.config));
    std::string line;
    bool first = true;
    while (std::getline(cfg, line)) {
        if (!first) os << "\n  ";
        os << line;
        first = false;
    }
    os << ",\n  \"config_fingerprint\": " << config_fingerprint(man.config) << ",\n";
    os << "  \"artifacts\": [";
    for (std::size_t i = 0; i < man.artifacts.size(); ++i) {
        if (i) os << ", ";
        os << "{\"path\": \"" << man.artifacts[i] << "\", \"fnv1a64\": \""
           << file_hash_hex(man.artifacts[i]) << "\"}";
    }
    os << "]\n}\n";
    std::ofstream out(out_dir + "/run_manifest.json");
    if (!out) throw std::runtime_error("cannot write manifest in " + out_dir);
    out << os.str();
}

TrainingConfig resolve_config(const Command& cmd, Manifest& man) {
    TrainingConfig config = load_training_config(cmd.config_path);
    for (const auto& [k, v] : cmd.overrides) apply_override(config, k, v);
    if (const char* env = std::getenv("CKFNET_SEED")) {
        man.env_seed_used = true;
        man.env_seed = std::strtoull(env, nullptr, 10);
        config.base_seed = man.env_seed;
    }
    config.threads = cmd.threads;
    validate_config(config);
    man.config = config;
    return config;
}

int run_gen_data(const Command& cmd, Manifest& man) {
    const TrainingConfig config = resolve_config(cmd, man);
    const StateSpaceModel model = make_model(config.model_id);
    const Dataset data = generate_dataset(config, model);
    for (const DatasetSplit* split : {&data.train, &data.val, &data.test}) {
        const std::string path = cmd.out_dir + "/" + split->split + ".jsonl";
        save_trajectories(path, split->trajectories);
        man.artifacts.push_back(path);
    }
    return 0;
}

int run_train(const Command& cmd, Manifest& man) {
    const TrainingConfig config = resolve_config(cmd, man);
    const StateSpaceModel model = make_model(config.model_id);
    Dataset data;
    if (!cmd.data_dir.empty()) {
        data.train.split = "train";
        data.train.trajectories = load_trajectories(cmd.data_dir + "/train.jsonl");
        data.val.split = "val";
        data.val.trajectories = load_trajectories(cmd.data_dir + "/val.jsonl");
        data.test.split = "test";
        data.test.trajectories = load_trajectories(cmd.data_dir + "/test.jsonl");
    } else {
        data = generate_dataset(config, model);
    }

    const Checkpoint state = train(config, model, data);

    const std::string weights_path = cmd.out_dir + "/weights.txt";
    save_weights(weights_path, state.best_params);
    const std::string ckpt_path = cmd.out_dir + "/checkpoint.txt";
    save_checkpoint(ckpt_path, state, model.n, model.m);
    const std::string hist_path = cmd.out_dir + "/loss_history.txt";
    write_loss_history(hist_path, state.history);
    man.artifacts.push_back(weights_path);
    man.artifacts.push_back(ckpt_path);
    man.artifacts.push_back(hist_path);

    std::cout << "trained " << config.epochs << " epochs; best validation loss "
              << fmt17(state.best_val) << " at epoch " << state.best_epoch << "\n";
    return 0;
}

CkfNetParams load_weights_checked(const Command& cmd, const StateSpaceModel& model,
                                  const TrainingConfig& config) {
    if (cmd.weights_path.empty())
        throw std::runtime_error("this command needs --weights <file>");
    if (!fs::exists(cmd.weights_path))
        throw std::runtime_error("weights file not found: " + cmd.weights_path);
    CkfNetParams params = load_weights(cmd.weights_path);
    if (params.n != model.n || params.m != model.m)
        throw std::runtime_error("weights do not match model dimensions of " + model.id);
    if (params.hidden_dim != config.hidden_dim)
        throw std::runtime_error("weights hidden_dim does not match config");
    return params;
}

int run_eval(const Command& cmd, Manifest& man) {
    const TrainingConfig config = resolve_config(cmd, man);
    const StateSpaceModel model = make_model(config.model_id);
    const CkfNetParams params = load_weights_checked(cmd, model, config);

    const std::vector<Trajectory> test =
        make_test_set(model, config.n_test, config.T, config.base_seed, kTestSeedOffset);
    std::vector<EvalResult> rows;
    rows.push_back(
        evaluate_algorithm(Algorithm::Ckf, model, nullptr, test, 1.0, config.threads));
    if (model.id.rfind("lin-", 0) == 0)
        rows.push_back(
            evaluate_algorithm(Algorithm::KfOracle, model, nullptr, test, 1.0, config.threads));
    rows.push_back(
        evaluate_algorithm(Algorithm::CkfNet, model, &params, test, 1.0, config.threads));

    const std::string csv = cmd.out_dir + "/eval_" + timestamp_tag() + ".csv";
    write_eval_csv(csv, rows);
    man.artifacts.push_back(csv);
    for (const EvalResult& r : rows)
        std::cout << r.algorithm << " amse " << fmt17(r.amse) << "\n";
    return 0;
}

int run_bench(const Command& cmd, Manifest& man) {
    const TrainingConfig config = resolve_config(cmd, man);
    const StateSpaceModel model = make_model(config.model_id);
    const CkfNetParams params = load_weights_checked(cmd, model, config);

    const std::size_t n_traj = std::max<std::size_t>(50, config.n_test);
    const std::vector<EvalResult> rows =
        time_filters(params, model, n_traj, config.T, config.base_seed);
    const std::string csv = cmd.out_dir + "/bench_" + timestamp_tag() + ".csv";
    write_eval_csv(csv, rows, /*with_time_variance=*/true);
    man.artifacts.push_back(csv);
    for (const EvalResult& r : rows)
        std::cout << r.algorithm << " mean " << r.mean_time_s << " s/trajectory\n";
    return 0;
}

int run_horizon(const Command& cmd, Manifest& man) {
    const TrainingConfig config = resolve_config(cmd, man);
    const StateSpaceModel model = make_model(config.model_id);
    const CkfNetParams params = load_weights_checked(cmd, model, config);

    const std::vector<std::size_t> horizons{100, 120, 150, 180};
    const std::vector<EvalResult> rows =
        horizon_sweep(params, model, horizons, config.n_test, config.base_seed, config.threads);
    const std::string csv = cmd.out_dir + "/horizon_" + timestamp_tag() + ".csv";
    write_eval_csv(csv, rows);
    man.artifacts.push_back(csv);
    return 0;
}

int run_noise_sweep(const Command& cmd, Manifest& man) {
    const TrainingConfig config = resolve_config(cmd, man);
    const StateSpaceModel model = make_model(config.model_id);
    const CkfNetParams params = load_weights_checked(cmd, model, config);

    const std::vector<double> scales{0.5, 1.0, 2.0, 5.0};
    const std::vector<EvalResult> rows = noise_sweep(params, model, scales, config.T,
                                                     config.n_test, config.base_seed,
                                                     config.threads);
    const std::string csv = cmd.out_dir + "/noise_" + timestamp_tag() + ".csv";
    write_eval_csv(csv, rows);
    man.artifacts.push_back(csv);
    return 0;
}

}  // namespace

Command parse_args(const std::vector<std::string>& args) {
    CLI::App app{"ckfnet: cubature Kalman filtering lab with a GRU-aided hybrid filter"};
    app.require_subcommand(1);

    Command cmd;
    std::vector<std::string> set_pairs;

    const std::vector<std::pair<std::string, std::string>> verbs = {
        {"gen-data", "simulate and persist train/val/test trajectory sets"},
        {"train", "train the hybrid filter per the config"},
        {"eval", "evaluate CKF / KF oracle / CKFNet on the test split"},
        {"bench", "per-algorithm seconds/trajectory timing table"},
        {"horizon", "horizon-generalization sweep (100/120/150/180)"},
        {"noise-sweep", "noise-scale robustness sweep (0.5/1/2/5)"},
    };
    for (const auto& [name, desc] : verbs) {
        CLI::App* sub = app.add_subcommand(name, desc);
        sub->add_option("--config", cmd.config_path, "training config file")->required();
        sub->add_option("--out", cmd.out_dir, "output directory")->required();
        sub->add_option("--set", set_pairs, "config override key=value");
        sub->add_option("--threads", cmd.threads, "worker thread cap (0 = all cores)");
        if (name != "gen-data" && name != "train")
            sub->add_option("--weights", cmd.weights_path, "trained weights file");
        if (name == "train")
            sub->add_option("--data", cmd.data_dir, "pregenerated dataset directory");
    }

    if (!args.empty() && !args.front().empty() && args.front()[0] != '-') {
        bool known = false;
        for (const auto& [name, desc] : verbs) known = known || name == args.front();
        if (!known) throw CliUsageError("unknown verb '" + args.front() + "'");
    }

    std::vector<const char*> argv;
    argv.push_back("ckfnet");
    for (const std::string& a : args) argv.push_back(a.c_str());

    try {
        app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::CallForHelp&) {
        throw CliHelp(app.help());
    } catch (const CLI::ParseError& e) {
        throw CliUsageError(e.what());
    }

    cmd.verb = app.get_subcommands().front()->get_name();
    for (const std::string& pair : set_pairs) {
        const std::size_t eq = pair.find('=');
        if (eq == std::string::npos)
            throw CliUsageError("--set expects key=value, got '" + pair + "'");
        const std::string key = pair.substr(0, eq);
        if (!is_valid_override_key(key))
            throw CliUsageError("unknown override key '" + key + "'");
        cmd.overrides.emplace_back(key, pair.substr(eq + 1));
    }
    return cmd;
}

int run(const Command& cmd) {
    try {
        fs::create_directories(cmd.out_dir);
        Manifest man;
        man.verb = cmd.verb;
        man.overrides = cmd.overrides;
        man.threads = cmd.threads;

        int rc = 1;
        if (cmd.verb == "gen-data")
            rc = run_gen_data(cmd, man);
        else if (cmd.verb == "train")
            rc = run_train(cmd, man);
        else if (cmd.verb == "eval")
            rc = run_eval(cmd, man);
        else if (cmd.verb == "bench")
            rc = run_bench(cmd, man);
        else if (cmd.verb == "horizon")
            rc = run_horizon(cmd, man);
        else if (cmd.verb == "noise-sweep")
            rc = run_noise_sweep(cmd, man);
        else
            throw std::runtime_error("unknown verb " + cmd.verb);

        write_manifest(cmd.out_dir, man);
        return rc;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}

}  // namespace ckfnet
