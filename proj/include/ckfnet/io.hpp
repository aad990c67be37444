#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "ckfnet/ckfnet.hpp"
#include "ckfnet/eval.hpp"
#include "ckfnet/ssm.hpp"
#include "ckfnet/training.hpp"

namespace ckfnet {

/// Decimal text with 17 significant digits: round-trip exact for doubles.
std::string fmt17(double v);

/// FNV-1a 64-bit over a byte string; used for artifact content hashes.
std::uint64_t fnv1a64_bytes(const std::string& bytes);
std::string file_hash_hex(const std::string& path);

// --- trajectory datasets: one self-describing JSON object per line ---

void save_trajectories(const std::string& path, const std::vector<Trajectory>& trajectories);
std::vector<Trajectory> load_trajectories(const std::string& path);

// --- network weights: manifest plus named tensors in decimal text ---

void save_weights(const std::string& path, const CkfNetParams& params);
CkfNetParams load_weights(const std::string& path);

// --- full training checkpoints (weights + optimizer moments + history) ---

void save_checkpoint(const std::string& path, const Checkpoint& ckpt, std::size_t n,
                     std::size_t m);
Checkpoint load_checkpoint(const std::string& path, std::size_t* n_out, std::size_t* m_out);

// --- training configs: JSON with exactly the TrainingConfig keys ---

TrainingConfig load_training_config(const std::string& path);
std::string config_to_json(const TrainingConfig& config);

/// Applies a key=value override; accepts `lr` as an alias for learning_rate.
void apply_override(TrainingConfig& config, const std::string& key, const std::string& value);

/// The set of override keys accepted on the command line.
bool is_valid_override_key(const std::string& key);

// --- sweep tables ---

/// Columns: model,T,noise_scale,obs_mode,algorithm,amse,time_s
/// (+ time_var_s2 when `with_time_variance`).
void write_eval_csv(const std::string& path, const std::vector<EvalResult>& rows,
                    bool with_time_variance = false);

// --- loss history: two columns per epoch ---

void write_loss_history(const std::string& path, const std::vector<EpochRecord>& history);

}  // namespace ckfnet
