#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "ckfnet/cli.hpp"
#include "ckfnet/io.hpp"

using namespace ckfnet;
namespace fs = std::filesystem;

namespace {

struct TempDir {
    fs::path path;
    explicit TempDir(const std::string& tag) {
        path = fs::temp_directory_path() / ("ckfnet_" + tag + "_" + std::to_string(::getpid()));
        fs::remove_all(path);
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
    std::string str() const { return path.string(); }
};

std::string micro_config(const fs::path& dir) {
    const std::string path = (dir / "config.json").string();
    std::ofstream out(path);
    out << R"({
  "model_id": "lin-nav-full",
  "T": 8,
  "n_train": 4,
  "n_val": 2,
  "n_test": 3,
  "hidden_dim": 4,
  "learning_rate": 0.001,
  "lambda": 0.0001,
  "sigma_theta_sq": 10000,
  "batch_size": 2,
  "epochs": 2,
  "grad_clip_norm": 1.0,
  "base_seed": 99,
  "augment": false,
  "augment_range": 0.2
})";
    return path;
}

std::string read_file(const std::string& path) {
    std::ifstream in(path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

// csv with the time_s column blanked, for byte comparison of the rest
std::string strip_time_column(const std::string& csv) {
    std::istringstream in(csv);
    std::ostringstream out;
    std::string line;
    while (std::getline(in, line)) {
        const std::size_t last_comma = line.rfind(',');
        out << line.substr(0, last_comma) << '\n';
    }
    return out.str();
}

std::string find_artifact(const std::string& out_dir, const std::string& prefix) {
    for (const auto& entry : fs::directory_iterator(out_dir)) {
        const std::string name = entry.path().filename().string();
        if (name.rfind(prefix, 0) == 0) return entry.path().string();
    }
    return {};
}

}  // namespace

TEST_CASE("parse_args: verbs, overrides, and rejection of bad input") {
    const Command c = parse_args({"gen-data", "--config", "cfg.json", "--out", "d"});
    CHECK(c.verb == "gen-data");
    CHECK(c.config_path == "cfg.json");
    CHECK(c.out_dir == "d");

    const Command t =
        parse_args({"train", "--config", "cfg.json", "--out", "d", "--set", "lr=0.0005"});
    REQUIRE(t.overrides.size() == 1);
    CHECK(t.overrides[0].first == "lr");
    CHECK(t.overrides[0].second == "0.0005");

    CHECK_THROWS_WITH_AS(parse_args({"frobnicate", "--config", "c", "--out", "d"}),
                         "unknown verb 'frobnicate'", CliUsageError);
    CHECK_THROWS_AS(parse_args({"train", "--config", "c", "--out", "d", "--set", "bogus=1"}),
                    CliUsageError);
    CHECK_THROWS_AS(parse_args({"train", "--out", "d"}), CliUsageError);  // missing --config
    CHECK_THROWS_AS(parse_args({"--help"}), CliHelp);
}

TEST_CASE("override application: lr alias and value echo") {
    TrainingConfig c;
    c.model_id = "lin-nav-full";
    apply_override(c, "lr", "0.0005");
    CHECK(c.learning_rate == 0.0005);
    apply_override(c, "hidden_dim", "16");
    CHECK(c.hidden_dim == 16);
    CHECK_THROWS_AS(apply_override(c, "nope", "1"), std::invalid_argument);
}

TEST_CASE("end-to-end micro pipeline: gen-data, train, eval") {
    TempDir tmp("pipeline");
    const std::string config = micro_config(tmp.path);

    const int gen_rc = run(parse_args(
        {"gen-data", "--config", config, "--out", (tmp.path / "data").string()}));
    CHECK(gen_rc == 0);
    CHECK(fs::exists(tmp.path / "data" / "train.jsonl"));
    CHECK(fs::exists(tmp.path / "data" / "val.jsonl"));
    CHECK(fs::exists(tmp.path / "data" / "test.jsonl"));
    CHECK(fs::exists(tmp.path / "data" / "run_manifest.json"));

    const int train_rc = run(parse_args({"train", "--config", config, "--out",
                                         (tmp.path / "run").string(), "--data",
                                         (tmp.path / "data").string(), "--threads", "2"}));
    CHECK(train_rc == 0);
    const std::string weights = (tmp.path / "run" / "weights.txt").string();
    CHECK(fs::exists(weights));
    CHECK(fs::exists(tmp.path / "run" / "loss_history.txt"));
    CHECK(fs::exists(tmp.path / "run" / "checkpoint.txt"));

    const int eval_rc = run(parse_args({"eval", "--config", config, "--out",
                                        (tmp.path / "eval").string(), "--weights", weights}));
    CHECK(eval_rc == 0);
    const std::string csv = find_artifact((tmp.path / "eval").string(), "eval_");
    REQUIRE(!csv.empty());
    CHECK(read_file(csv).rfind("model,T,", 0) == 0);
}

TEST_CASE("eval without a weights file exits 1 and names the path") {
    TempDir tmp("noweights");
    const std::string config = micro_config(tmp.path);
    const int rc = run(parse_args({"eval", "--config", config, "--out",
                                   (tmp.path / "out").string(), "--weights",
                                   (tmp.path / "missing.txt").string()}));
    CHECK(rc == 1);
}

TEST_CASE("repeated eval reproduces identical csv bytes apart from timing") {
    TempDir tmp("deteval");
    const std::string config = micro_config(tmp.path);
    const int train_rc = run(parse_args(
        {"train", "--config", config, "--out", (tmp.path / "run").string()}));
    REQUIRE(train_rc == 0);
    const std::string weights = (tmp.path / "run" / "weights.txt").string();

    REQUIRE(run(parse_args({"eval", "--config", config, "--out", (tmp.path / "e1").string(),
                            "--weights", weights})) == 0);
    REQUIRE(run(parse_args({"eval", "--config", config, "--out", (tmp.path / "e2").string(),
                            "--weights", weights})) == 0);
    const std::string a = find_artifact((tmp.path / "e1").string(), "eval_");
    const std::string b = find_artifact((tmp.path / "e2").string(), "eval_");
    REQUIRE(!a.empty());
    REQUIRE(!b.empty());
    CHECK(strip_time_column(read_file(a)) == strip_time_column(read_file(b)));
}

TEST_CASE("CKFNET_SEED environment override lands in the manifest") {
    TempDir tmp("envseed");
    const std::string config = micro_config(tmp.path);
    setenv("CKFNET_SEED", "123456", 1);
    const int rc = run(parse_args(
        {"gen-data", "--config", config, "--out", (tmp.path / "data").string()}));
    unsetenv("CKFNET_SEED");
    REQUIRE(rc == 0);
    const std::string manifest = read_file((tmp.path / "data" / "run_manifest.json").string());
    CHECK(manifest.find("\"env_seed_override\": 123456") != std::string::npos);
    CHECK(manifest.find("\"base_seed\": 123456") != std::string::npos);
}

TEST_CASE("trajectory files round-trip bit-exactly") {
    TempDir tmp("roundtrip");
    const std::string config = micro_config(tmp.path);
    REQUIRE(run(parse_args(
                {"gen-data", "--config", config, "--out", (tmp.path / "d").string()})) == 0);
    const std::string path = (tmp.path / "d" / "train.jsonl").string();
    const auto loaded = load_trajectories(path);
    REQUIRE(loaded.size() == 4);

    const std::string resaved = (tmp.path / "d" / "resaved.jsonl").string();
    save_trajectories(resaved, loaded);
    CHECK(read_file(path) == read_file(resaved));
}
