#include "ckfnet/training.hpp"

#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "ckfnet/errors.hpp"
#include "ckfnet/linalg.hpp"
#include "ckfnet/parallel.hpp"
#include "ckfnet/rng.hpp"

namespace ckfnet {

namespace {

constexpr std::uint64_t kAugmentStreamSalt = 0xA0A0A0A0A0A0A0A0ULL;
constexpr std::uint64_t kParamSeedSalt = 0x5EEDC0DEULL;
constexpr std::uint64_t kShuffleSalt = 0x0BADCAFE00000000ULL;

std::uint64_t fnv1a64(const std::string& s) {
    std::uint64_t h = 1469598103934665603ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    return h;
}

}  // namespace

void validate_config(const TrainingConfig& c) {
    if (c.model_id.empty()) throw std::invalid_argument("config: model_id required");
    if (c.T < 1) throw std::invalid_argument("config: T must be >= 1");
    if (c.n_train < 1 || c.n_val < 1 || c.n_test < 1)
        throw std::invalid_argument("config: trajectory counts must be positive");
    if (c.hidden_dim < 1) throw std::invalid_argument("config: hidden_dim must be positive");
    if (!(c.learning_rate >= 0.0)) throw std::invalid_argument("config: learning_rate < 0");
    if (!(c.grad_clip_norm > 0.0)) throw std::invalid_argument("config: grad_clip_norm <= 0");
    if (c.batch_size < 1) throw std::invalid_argument("config: batch_size must be positive");
    if (c.epochs < 1) throw std::invalid_argument("config: epochs must be positive");
    if (!(c.lambda >= 0.0)) throw std::invalid_argument("config: lambda < 0");
    if (std::fabs(c.lambda * c.sigma_theta_sq - 1.0) > 1e-12)
        throw std::invalid_argument("config: lambda * sigma_theta_sq must equal 1");
    if (c.augment_range < 0.0 || c.augment_range > 0.2)
        throw std::invalid_argument("config: augment_range must lie in [0, 0.2]");
}

std::uint64_t config_fingerprint(const TrainingConfig& c) {
    std::ostringstream os;
    os.precision(17);
    os << c.model_id << '|' << c.T << '|' << c.n_train << '|' << c.n_val << '|' << c.n_test
       << '|' << c.hidden_dim << '|' << c.learning_rate << '|' << c.lambda << '|'
       << c.sigma_theta_sq << '|' << c.batch_size << '|' << c.epochs << '|' << c.grad_clip_norm
       << '|' << c.base_seed << '|' << (c.augment ? 1 : 0) << '|' << c.augment_range;
    return fnv1a64(os.str());
}

DatasetSplit generate_split(const TrainingConfig& config, const StateSpaceModel& model,
                            const std::string& split, std::size_t count, std::uint64_t offset,
                            bool augment) {
    DatasetSplit out;
    out.split = split;
    out.trajectories.reserve(count);
    out.augmentation.reserve(count);
    const Vector x0(model.n);
    for (std::size_t i = 0; i < count; ++i) {
        const std::uint64_t seed = config.base_seed + offset + i;
        AugmentRecord rec{Vector(model.n), Vector(model.m)};
        rec.w_factors.fill(1.0);
        rec.v_factors.fill(1.0);
        StateSpaceModel gen = model;
        if (augment && config.augment_range > 0.0) {
            RngStream factor_rng(seed ^ kAugmentStreamSalt);
            for (std::size_t k = 0; k < model.n; ++k)
                rec.w_factors[k] =
                    factor_rng.next_uniform_in(1.0 - config.augment_range, 1.0 + config.augment_range);
            for (std::size_t k = 0; k < model.m; ++k)
                rec.v_factors[k] =
                    factor_rng.next_uniform_in(1.0 - config.augment_range, 1.0 + config.augment_range);
            gen.W = spd_perturb(model.W, rec.w_factors);
            gen.V = spd_perturb(model.V, rec.v_factors);
        }
        RngStream rng(seed);
        Trajectory traj = simulate_trajectory(gen, x0, config.T, rng);
        traj.traj_id = offset + i;
        out.trajectories.push_back(std::move(traj));
        out.augmentation.push_back(std::move(rec));
    }
    return out;
}

Dataset generate_dataset(const TrainingConfig& config, const StateSpaceModel& model) {
    validate_config(config);
    Dataset data;
    data.train = generate_split(config, model, "train", config.n_train, kTrainSeedOffset,
                                config.augment);
    data.val = generate_split(config, model, "val", config.n_val, kValSeedOffset, false);
    data.test = generate_split(config, model, "test", config.n_test, kTestSeedOffset, false);
    return data;
}

double sequence_loss(const std::vector<Vector>& estimates, const std::vector<Vector>& truths,
                     double params_norm_sq, double lambda) {
    if (estimates.size() != truths.size())
        throw std::invalid_argument("sequence_loss: length mismatch");
    if (estimates.empty()) throw std::invalid_argument("sequence_loss: empty sequence");
    double acc = 0.0;
    for (std::size_t i = 0; i < estimates.size(); ++i) {
        const Vector err = estimates[i] - truths[i];
        acc += err.dot(err);
    }
    return acc / static_cast<double>(estimates.size()) + lambda * params_norm_sq;
}

Checkpoint init_training(const TrainingConfig& config, const StateSpaceModel& model) {
    validate_config(config);
    Checkpoint state;
    state.params = CkfNetParams::init(model.n, model.m, config.hidden_dim,
                                      config.base_seed ^ kParamSeedSalt);
    state.best_params = state.params;
    state.best_val = std::numeric_limits<double>::infinity();
    state.best_epoch = 0;
    CkfNetParams grads = CkfNetParams::zeros(model.n, model.m, config.hidden_dim);
    ParamTape tape = make_tape(state.params, grads);
    state.opt = OptimizerState::init(tape, config.learning_rate);
    state.fingerprint = config_fingerprint(config);
    return state;
}

namespace {

std::vector<std::size_t> shuffled_order(std::size_t count, std::uint64_t base_seed,
                                        std::size_t epoch) {
    std::vector<std::size_t> order(count);
    std::iota(order.begin(), order.end(), 0);
    RngStream rng(base_seed ^ (kShuffleSalt + epoch));
    for (std::size_t i = count; i > 1; --i) {
        const std::size_t j = static_cast<std::size_t>(rng.next_below(i));
        std::swap(order[i - 1], order[j]);
    }
    return order;
}

double validation_loss(const TrainingConfig& config, const StateSpaceModel& model,
                       const DatasetSplit& val, const CkfNetParams& params,
                       double params_norm_sq) {
    std::vector<double> losses(val.trajectories.size());
    parallel_for(val.trajectories.size(), config.threads, [&](std::size_t i) {
        const Trajectory& t = val.trajectories[i];
        losses[i] = ckfnet_data_loss(params, model, t.measurements, t.states, Vector(model.n));
    });
    double acc = 0.0;
    for (double l : losses) acc += l;
    return acc / static_cast<double>(losses.size()) + config.lambda * params_norm_sq;
}

}  // namespace

void train_epochs(const TrainingConfig& config, const StateSpaceModel& model,
                  const Dataset& data, Checkpoint& state, std::size_t epochs_to_run) {
    validate_config(config);
    if (config_fingerprint(config) != state.fingerprint)
        throw std::invalid_argument("train_epochs: checkpoint belongs to a different config");

    CkfNetParams grads = CkfNetParams::zeros(model.n, model.m, config.hidden_dim);
    ParamTape tape = make_tape(state.params, grads);

    const std::size_t n_train = data.train.trajectories.size();
    const int workers = resolve_threads(config.threads);
    std::vector<CkfNetParams> member_grads;
    std::vector<BpttWorkspace> workspaces(config.batch_size);
    for (std::size_t i = 0; i < config.batch_size; ++i)
        member_grads.push_back(CkfNetParams::zeros(model.n, model.m, config.hidden_dim));

    const Vector x0(model.n);
    for (std::size_t e = 0; e < epochs_to_run; ++e) {
        const std::size_t epoch = state.epochs_done;  // 0-based index of this epoch
        const std::vector<std::size_t> order = shuffled_order(n_train, config.base_seed, epoch);

        double epoch_train_loss = 0.0;
        std::size_t batches = 0;
        for (std::size_t start = 0; start < n_train; start += config.batch_size) {
            const std::size_t bsz = std::min(config.batch_size, n_train - start);
            std::vector<double> member_loss(bsz, 0.0);

            auto batch_ids = [&] {
                std::ostringstream os;
                for (std::size_t b = 0; b < bsz; ++b)
                    os << ' ' << data.train.trajectories[order[start + b]].traj_id;
                return os.str();
            };
            try {
                parallel_for(bsz, workers, [&](std::size_t b) {
                    const Trajectory& t = data.train.trajectories[order[start + b]];
                    // reset this member's accumulator, then run forward+backward
                    CkfNetParams& g = member_grads[b];
                    ParamTape member_tape = make_tape(g, g);
                    member_tape.zero_gradients();
                    member_loss[b] =
                        ckfnet_bptt(state.params, model, t.measurements, t.states, x0, g,
                                    workspaces[b]);
                });
            } catch (const NotPositiveDefinite& e) {
                // the filter state overflowed until covariances stopped factoring
                throw NonFiniteLoss("diverged in epoch " + std::to_string(epoch + 1) +
                                    ", trajectories" + batch_ids() + ": " + e.what() +
                                    " (consider lowering the learning rate)");
            } catch (const std::invalid_argument& e) {
                throw NonFiniteLoss("diverged in epoch " + std::to_string(epoch + 1) +
                                    ", trajectories" + batch_ids() + ": " + e.what() +
                                    " (consider lowering the learning rate)");
            }

            double batch_loss = 0.0;
            for (std::size_t b = 0; b < bsz; ++b) batch_loss += member_loss[b];
            batch_loss /= static_cast<double>(bsz);
            if (!std::isfinite(batch_loss)) {
                throw NonFiniteLoss("non-finite loss in epoch " + std::to_string(epoch + 1) +
                                    ", trajectories" + batch_ids() +
                                    " (consider lowering the learning rate)");
            }

            // ordered merge keeps results independent of thread scheduling
            {
                const double inv_b = 1.0 / static_cast<double>(bsz);
                auto& dst = tape.tensors();
                for (std::size_t b = 0; b < bsz; ++b) {
                    ParamTape member_tape = make_tape(member_grads[b], member_grads[b]);
                    auto& src = member_tape.tensors();
                    for (std::size_t ti = 0; ti < dst.size(); ++ti)
                        for (std::size_t k = 0; k < dst[ti].size(); ++k)
                            dst[ti].grad[k] += inv_b * src[ti].value[k];
                }
            }

            const double params_norm_sq = tape.value_norm_sq();
            clip_gradients(tape, config.grad_clip_norm);
            adam_step(state.opt, tape, config.lambda);

            epoch_train_loss += batch_loss + config.lambda * params_norm_sq;
            ++batches;
        }
        epoch_train_loss /= static_cast<double>(batches);

        double val = 0.0;
        try {
            val = validation_loss(config, model, data.val, state.params,
                                  tape.value_norm_sq());
        } catch (const NotPositiveDefinite& e) {
            throw NonFiniteLoss("validation forward diverged after epoch " +
                                std::to_string(epoch + 1) + ": " + e.what());
        } catch (const std::invalid_argument& e) {
            throw NonFiniteLoss("validation forward diverged after epoch " +
                                std::to_string(epoch + 1) + ": " + e.what());
        }
        if (!std::isfinite(val))
            throw NonFiniteLoss("non-finite validation loss after epoch " +
                                std::to_string(epoch + 1));
        state.history.push_back({epoch_train_loss, val});
        state.epochs_done += 1;
        if (val < state.best_val) {
            state.best_val = val;
            state.best_epoch = state.epochs_done;
            state.best_params = state.params;
        }
    }
}

Checkpoint train(const TrainingConfig& config, const StateSpaceModel& model,
                 const Dataset& data) {
    Checkpoint state = init_training(config, model);
    train_epochs(config, model, data, state, config.epochs);
    return state;
}

}  // namespace ckfnet
