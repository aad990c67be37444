#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "ckfnet/ckfnet.hpp"
#include "ckfnet/ssm.hpp"
#include "ckfnet/tape.hpp"

namespace ckfnet {

/**
 * @brief Everything a training run depends on. The config file carries
 * exactly these keys (minus `threads`, which comes from the command line);
 * unknown keys are rejected.
 */
struct TrainingConfig {
    std::string model_id;
    std::size_t T = 100;
    std::size_t n_train = 256;
    std::size_t n_val = 32;
    std::size_t n_test = 64;
    std::size_t hidden_dim = 128;
    double learning_rate = 1e-3;
    double lambda = 1e-4;
    double sigma_theta_sq = 1e4;  // lambda = 1 / sigma_theta_sq
    std::size_t batch_size = 8;
    std::size_t epochs = 50;
    double grad_clip_norm = 1.0;
    std::uint64_t base_seed = 20250810;
    bool augment = false;
    double augment_range = 0.2;

    int threads = 0;  // not a config-file key; 0 = hardware concurrency
};

/// Consistency checks (counts positive, clip norm > 0, λ·σ² = 1, ...).
void validate_config(const TrainingConfig& config);

/// Stable hash over every result-affecting field.
std::uint64_t config_fingerprint(const TrainingConfig& config);

/// Eigenvalue multipliers applied to W and V when a trajectory was augmented.
struct AugmentRecord {
    Vector w_factors;
    Vector v_factors;
};

struct DatasetSplit {
    std::string split;  // train | val | test
    std::vector<Trajectory> trajectories;
    std::vector<AugmentRecord> augmentation;
};

struct Dataset {
    DatasetSplit train;
    DatasetSplit val;
    DatasetSplit test;
};

/// Seed layout: trajectory seed = base_seed + split offset + index.
constexpr std::uint64_t kTrainSeedOffset = 0;
constexpr std::uint64_t kValSeedOffset = 1'000'000;
constexpr std::uint64_t kTestSeedOffset = 2'000'000;

/**
 * @brief Simulates the train/val/test splits. With augmentation on, each
 * training trajectory's generating W and V get per-eigenvalue multipliers
 * drawn uniformly from [1 − range, 1 + range]; multipliers are recorded for
 * exact regeneration.
 */
Dataset generate_dataset(const TrainingConfig& config, const StateSpaceModel& model);

DatasetSplit generate_split(const TrainingConfig& config, const StateSpaceModel& model,
                            const std::string& split, std::size_t count, std::uint64_t offset,
                            bool augment);

/// (1/T_s) Σ ‖x̂_i − x_i‖² + λ‖Ξ‖².
double sequence_loss(const std::vector<Vector>& estimates, const std::vector<Vector>& truths,
                     double params_norm_sq, double lambda);

/// Epoch-indexed (train_loss, val_loss) record.
struct EpochRecord {
    double train_loss = 0.0;
    double val_loss = 0.0;
};

/**
 * @brief Full training state; resuming from a checkpoint and continuing is
 * bit-identical to an uninterrupted run.
 */
struct Checkpoint {
    std::size_t epochs_done = 0;
    CkfNetParams params;
    CkfNetParams best_params;
    double best_val = 0.0;
    std::size_t best_epoch = 0;  // 1-based; 0 = none yet
    OptimizerState opt;
    std::vector<EpochRecord> history;
    std::uint64_t fingerprint = 0;
};

/// Fresh state at epoch 0 with seeded parameter initialization.
Checkpoint init_training(const TrainingConfig& config, const StateSpaceModel& model);

/**
 * @brief Runs `epochs_to_run` epochs in place: seeded shuffle, full-sequence
 * BPTT per batch, global gradient clipping, adaptive-moment step with the ℓ2
 * term, train/val loss recording, best-validation retention.
 *
 * Throws NonFiniteLoss naming the offending batch's trajectory ids.
 */
void train_epochs(const TrainingConfig& config, const StateSpaceModel& model,
                  const Dataset& data, Checkpoint& state, std::size_t epochs_to_run);

/// init_training + all configured epochs.
Checkpoint train(const TrainingConfig& config, const StateSpaceModel& model,
                 const Dataset& data);

}  // namespace ckfnet
