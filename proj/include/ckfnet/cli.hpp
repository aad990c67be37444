#pragma once

#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace ckfnet {

/// Bad command line; maps to exit code 2 with a one-line diagnostic.
class CliUsageError : public std::runtime_error {
public:
    explicit CliUsageError(const std::string& what) : std::runtime_error(what) {}
};

/// `--help` was requested; carries the usage text, maps to exit code 0.
class CliHelp : public std::runtime_error {
public:
    explicit CliHelp(const std::string& text) : std::runtime_error(text) {}
};

struct Command {
    std::string verb;  // gen-data | train | eval | bench | horizon | noise-sweep
    std::string config_path;
    std::vector<std::pair<std::string, std::string>> overrides;
    std::string out_dir;
    std::string weights_path;  // eval/bench/horizon/noise-sweep
    std::string data_dir;      // optional pregenerated dataset for train
    int threads = 0;
};

/// Validates verbs, flags, and override keys before any work starts.
Command parse_args(const std::vector<std::string>& args);

/// Dispatches a validated command; returns the process exit code (0 or 1).
int run(const Command& command);

}  // namespace ckfnet
