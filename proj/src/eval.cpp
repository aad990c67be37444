#include "ckfnet/eval.hpp"

#include <chrono>
#include <cmath>
#include <stdexcept>

#include "ckfnet/ckf.hpp"
#include "ckfnet/parallel.hpp"

namespace ckfnet {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::vector<Vector> filter_means(Algorithm algo, const StateSpaceModel& assumed,
                                 const CkfNetParams* params, const std::vector<Vector>& zs) {
    const Vector x0(assumed.n);
    const Matrix p0 = Matrix::identity(assumed.n);
    switch (algo) {
        case Algorithm::Ckf: {
            std::vector<FilterState> run = run_ckf(assumed, zs, x0, p0);
            std::vector<Vector> means;
            means.reserve(run.size());
            for (auto& s : run) means.push_back(std::move(s.mean));
            return means;
        }
        case Algorithm::KfOracle: {
            // linear maps only: constant Jacobians are the system matrices
            const Matrix f_mat = assumed.f_jacobian(x0);
            const Matrix h_mat = assumed.h_jacobian(x0);
            FilterState state;
            state.mean = x0;
            state.cov = p0;
            std::vector<Vector> means;
            means.reserve(zs.size());
            for (const Vector& z : zs) {
                state = kf_step(state, f_mat, h_mat, assumed.W, assumed.V, z);
                means.push_back(state.mean);
            }
            return means;
        }
        case Algorithm::CkfNet:
            if (!params) throw std::invalid_argument("filter_means: CKFNet needs parameters");
            return ckfnet_run(*params, assumed, zs, x0);
    }
    throw std::logic_error("filter_means: unknown algorithm");
}

}  // namespace

std::string algorithm_name(Algorithm a) {
    switch (a) {
        case Algorithm::Ckf: return "ckf";
        case Algorithm::CkfNet: return "ckfnet";
        case Algorithm::KfOracle: return "kf_oracle";
    }
    return "?";
}

double trajectory_mse(const std::vector<Vector>& estimates, const std::vector<Vector>& truths) {
    if (estimates.size() != truths.size())
        throw std::invalid_argument("trajectory_mse: length mismatch");
    if (estimates.empty()) throw std::invalid_argument("trajectory_mse: empty sequence");
    double acc = 0.0;
    for (std::size_t i = 0; i < estimates.size(); ++i) {
        const Vector err = estimates[i] - truths[i];
        acc += err.dot(err);
    }
    return acc / static_cast<double>(estimates.size());
}

double amse(const std::vector<double>& per_traj_mse) {
    if (per_traj_mse.empty()) throw std::invalid_argument("amse: need at least one trajectory");
    double acc = 0.0;
    for (double v : per_traj_mse) acc += v;
    return acc / static_cast<double>(per_traj_mse.size());
}

std::string obs_mode_of(const StateSpaceModel& model) {
    return model.m < model.n ? "partial" : "full";
}

EvalResult evaluate_algorithm(Algorithm algo, const StateSpaceModel& assumed_model,
                              const CkfNetParams* params,
                              const std::vector<Trajectory>& test, double noise_scale,
                              int threads) {
    if (test.empty()) throw std::invalid_argument("evaluate_algorithm: empty test set");
    EvalResult out;
    out.algorithm = algorithm_name(algo);
    out.model_id = assumed_model.id;
    out.T = test.front().length();
    out.noise_scale = noise_scale;
    out.obs_mode = obs_mode_of(assumed_model);
    out.per_traj_mse.assign(test.size(), 0.0);
    std::vector<double> times(test.size(), 0.0);

    parallel_for(test.size(), threads, [&](std::size_t i) {
        const Trajectory& t = test[i];
        const auto t0 = Clock::now();
        const std::vector<Vector> means = filter_means(algo, assumed_model, params, t.measurements);
        times[i] = seconds_since(t0);
        out.per_traj_mse[i] = trajectory_mse(means, t.states);
    });

    out.amse = amse(out.per_traj_mse);
    double mean_t = 0.0;
    for (double v : times) mean_t += v;
    mean_t /= static_cast<double>(times.size());
    double var_t = 0.0;
    for (double v : times) var_t += (v - mean_t) * (v - mean_t);
    out.mean_time_s = mean_t;
    out.time_var_s2 = times.size() > 1 ? var_t / static_cast<double>(times.size() - 1) : 0.0;
    return out;
}

std::vector<Trajectory> make_test_set(const StateSpaceModel& gen_model, std::size_t count,
                                      std::size_t T, std::uint64_t base_seed,
                                      std::uint64_t offset) {
    std::vector<Trajectory> set;
    set.reserve(count);
    const Vector x0(gen_model.n);
    for (std::size_t i = 0; i < count; ++i) {
        RngStream rng(base_seed + offset + i);
        Trajectory t = simulate_trajectory(gen_model, x0, T, rng);
        t.traj_id = offset + i;
        set.push_back(std::move(t));
    }
    return set;
}

std::vector<EvalResult> horizon_sweep(const CkfNetParams& params, const StateSpaceModel& model,
                                      const std::vector<std::size_t>& horizons,
                                      std::size_t n_test, std::uint64_t base_seed, int threads) {
    const bool linear = model.id.rfind("lin-", 0) == 0;
    std::vector<EvalResult> table;
    for (std::size_t horizon : horizons) {
        const std::uint64_t offset = kTestSeedOffset + 10'000 * horizon;
        const std::vector<Trajectory> test = make_test_set(model, n_test, horizon, base_seed, offset);
        table.push_back(evaluate_algorithm(Algorithm::Ckf, model, nullptr, test, 1.0, threads));
        if (linear)
            table.push_back(
                evaluate_algorithm(Algorithm::KfOracle, model, nullptr, test, 1.0, threads));
        table.push_back(evaluate_algorithm(Algorithm::CkfNet, model, &params, test, 1.0, threads));
    }
    return table;
}

std::vector<EvalResult> noise_sweep(const CkfNetParams& params, const StateSpaceModel& model,
                                    const std::vector<double>& scales, std::size_t T,
                                    std::size_t n_test, std::uint64_t base_seed, int threads) {
    const bool linear = model.id.rfind("lin-", 0) == 0;
    std::vector<EvalResult> table;
    std::size_t scale_index = 0;
    for (double s : scales) {
        if (!(s > 0.0)) throw std::invalid_argument("noise_sweep: scales must be positive");
        // scale the measurement covariance only: joint W,V scaling preserves
        // the Kalman gain and would make the "mismatched" filter near-optimal
        StateSpaceModel gen = model;
        gen.V = model.V * s;
        const std::uint64_t offset = kTestSeedOffset + 40'000'000 + 1'000'000 * scale_index;
        const std::vector<Trajectory> test = make_test_set(gen, n_test, T, base_seed, offset);
        // the CKF keeps believing the nominal covariances: the mismatch scenario
        table.push_back(evaluate_algorithm(Algorithm::Ckf, model, nullptr, test, s, threads));
        if (linear) {
            EvalResult oracle =
                evaluate_algorithm(Algorithm::KfOracle, gen, nullptr, test, s, threads);
            table.push_back(std::move(oracle));
        }
        table.push_back(evaluate_algorithm(Algorithm::CkfNet, model, &params, test, s, threads));
        ++scale_index;
    }
    return table;
}

std::vector<EvalResult> time_filters(const CkfNetParams& params, const StateSpaceModel& model,
                                     std::size_t n_traj, std::size_t T,
                                     std::uint64_t base_seed) {
    constexpr std::size_t kWarmup = 3;
    const std::vector<Trajectory> test =
        make_test_set(model, n_traj + kWarmup, T, base_seed, kTestSeedOffset + 90'000'000);
    const bool linear = model.id.rfind("lin-", 0) == 0;

    std::vector<Algorithm> algos{Algorithm::Ckf};
    if (linear) algos.push_back(Algorithm::KfOracle);
    algos.push_back(Algorithm::CkfNet);

    std::vector<EvalResult> table;
    for (Algorithm a : algos) {
        EvalResult row;
        row.algorithm = algorithm_name(a);
        row.model_id = model.id;
        row.T = T;
        row.noise_scale = 1.0;
        row.obs_mode = obs_mode_of(model);
        std::vector<double> times;
        times.reserve(n_traj);
        for (std::size_t i = 0; i < test.size(); ++i) {
            const auto t0 = Clock::now();
            const std::vector<Vector> means =
                filter_means(a, model, &params, test[i].measurements);
            const double dt = seconds_since(t0);
            if (i >= kWarmup) {
                times.push_back(dt);
                row.per_traj_mse.push_back(trajectory_mse(means, test[i].states));
            }
        }
        row.amse = amse(row.per_traj_mse);
        double mean_t = 0.0;
        for (double v : times) mean_t += v;
        mean_t /= static_cast<double>(times.size());
        double var_t = 0.0;
        for (double v : times) var_t += (v - mean_t) * (v - mean_t);
        row.mean_time_s = mean_t;
        row.time_var_s2 = times.size() > 1 ? var_t / static_cast<double>(times.size() - 1) : 0.0;
        table.push_back(std::move(row));
    }
    return table;
}

}  // namespace ckfnet
