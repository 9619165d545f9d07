// Offline training data: randomized fault scenarios simulated in closed loop,
// sampled into (state, input, fault) records, and the feature training entry
// point built on top of them.
#pragma once

#include "gfi/core.hpp"
#include "gfi/features.hpp"
#include "gfi/sim.hpp"

#include <iostream>

namespace gfi {

struct Range {
    double lo = 0.0;
    double hi = 0.0;
    double sample(Rng& rng) const { return lo == hi ? lo : rng.uniform(lo, hi); }
    bool operator==(const Range&) const = default;
};

struct ActuatorFaultRange {
    int channel = 0;
    double probability = 1.0;
    Range effectiveness{0.0, 1.0};
    Range start_s{0.0, 0.0};
    Range duration_s{0.0, 0.0};
    bool operator==(const ActuatorFaultRange&) const = default;
};

struct SensorFaultRange {
    int channel = 0;
    double probability = 1.0;
    Range amplitude{0.0, 0.0};
    Range omega_rad_s{0.0, 0.0};
    Range phase_rad{0.0, 0.0};
    Range start_s{0.0, 0.0};
    Range duration_s{0.0, 0.0};
    bool operator==(const SensorFaultRange&) const = default;
};

// With probability 1 and degenerate ranges the family collapses to one fixed scenario.
struct ScenarioFamily {
    int actuator_channels = 0;
    int sensor_channels = 0;
    std::vector<ActuatorFaultRange> actuator;
    std::vector<SensorFaultRange> sensor;
    double horizon_s = 60.0;
    double sample_period_s = 0.1;
    bool operator==(const ScenarioFamily&) const = default;

    void validate() const {
        require(horizon_s > 0.0 && sample_period_s > 0.0, "family horizon and sample period must be positive");
        for (const auto& a : actuator) {
            require(a.channel >= 0 && a.channel < actuator_channels, "actuator range channel out of range");
            require(a.probability >= 0.0 && a.probability <= 1.0, "fault probability must lie in [0,1]");
            require(a.effectiveness.lo >= 0.0 && a.effectiveness.hi <= 1.0 && a.effectiveness.lo <= a.effectiveness.hi,
                    "effectiveness range must lie in [0,1]");
        }
        for (const auto& s : sensor) {
            require(s.channel >= 0 && s.channel < sensor_channels, "sensor range channel out of range");
            require(s.probability >= 0.0 && s.probability <= 1.0, "fault probability must lie in [0,1]");
        }
    }

    FaultScenario draw(Rng& rng) const {
        FaultScenario sc;
        sc.actuator_channels = actuator_channels;
        sc.sensor_channels = sensor_channels;
        sc.horizon_s = horizon_s;
        for (const auto& a : actuator) {
            const bool on = rng.uniform() < a.probability;
            const ActuatorFault f{a.channel, a.effectiveness.sample(rng), a.start_s.sample(rng), 0.0};
            const double dur = a.duration_s.sample(rng);
            if (on) sc.actuator_faults.push_back({f.channel, f.effectiveness, f.start_s, f.start_s + dur});
        }
        for (const auto& s : sensor) {
            const bool on = rng.uniform() < s.probability;
            SensorFault f;
            f.channel = s.channel;
            f.amplitude = s.amplitude.sample(rng);
            f.omega_rad_s = s.omega_rad_s.sample(rng);
            f.phase_rad = s.phase_rad.sample(rng);
            f.start_s = s.start_s.sample(rng);
            f.end_s = f.start_s + s.duration_s.sample(rng);
            if (on) sc.sensor_faults.push_back(f);
        }
        return sc;
    }
};

struct FaultDataset {
    Mat states;   // n x N
    Mat inputs;   // m x N
    Mat actuator_faults;
    Mat sensor_faults;
    Vec input_mean;   // over stacked (state, input)
    Vec input_scale;
    int dropped = 0;

    Eigen::Index size() const { return states.cols(); }

    Mat features_input() const {
        Mat in(states.rows() + inputs.rows(), states.cols());
        in << states, inputs;
        return in;
    }
};

struct DatasetOptions {
    double dt = 1e-3;
    Vec x0;
    int jobs = 1;
};

/**
 * Simulates `count` scenarios drawn from the family (draw order fixed by the
 * seed, independent of the job count) and samples each closed-loop run at the
 * family's sample period.
 */
inline FaultDataset generate_dataset(const SystemModel& model, const Controller& controller,
                                     const ScenarioFamily& family, int count, std::uint64_t seed,
                                     const DatasetOptions& opt, std::ostream* warn = &std::cerr) {
    require(count >= 1, "dataset needs at least one scenario");
    family.validate();
    Rng rng(seed);
    std::vector<FaultScenario> scenarios;
    for (int i = 0; i < count; ++i) scenarios.push_back(family.draw(rng));

    SimConfig cfg;
    cfg.dt = opt.dt;
    cfg.horizon_s = family.horizon_s;
    cfg.decimation = std::max(1, static_cast<int>(std::lround(family.sample_period_s / opt.dt)));
    cfg.x0 = opt.x0.size() ? opt.x0 : Vec::Zero(model.state_dim);
    cfg.x_hat0 = cfg.x0;
    cfg.store_weights = false;

    std::vector<SimTrace> runs(scenarios.size());
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t i = next++; i < scenarios.size(); i = next++) runs[i] = simulate_plant(model, scenarios[i], controller, cfg);
    };
    const std::size_t nthreads = std::clamp<std::size_t>(static_cast<std::size_t>(std::max(opt.jobs, 1)), 1, scenarios.size());
    if (nthreads == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (std::size_t k = 0; k < nthreads; ++k) pool.emplace_back(worker);
        for (auto& th : pool) th.join();
    }

    FaultDataset ds;
    std::size_t total = 0;
    for (std::size_t i = 0; i < runs.size(); ++i) {
        if (runs[i].failed) {
            ++ds.dropped;
            if (warn) *warn << "warning: scenario " << i << " dropped (" << runs[i].failure << ")\n";
            continue;
        }
        total += runs[i].size();
    }
    if (2 * ds.dropped > count)
        throw GenerationFailure(std::to_string(ds.dropped) + " of " + std::to_string(count) + " scenarios diverged");

    ds.states.resize(model.state_dim, static_cast<Eigen::Index>(total));
    ds.inputs.resize(model.input_dim, static_cast<Eigen::Index>(total));
    ds.actuator_faults.resize(model.actuator_channels(), static_cast<Eigen::Index>(total));
    ds.sensor_faults.resize(model.sensor_channels(), static_cast<Eigen::Index>(total));
    Eigen::Index col = 0;
    for (const auto& r : runs) {
        if (r.failed) continue;
        for (std::size_t k = 0; k < r.size(); ++k, ++col) {
            ds.states.col(col) = r.x[k];
            ds.inputs.col(col) = r.u[k];
            ds.actuator_faults.col(col) = r.fa_true[k];
            ds.sensor_faults.col(col) = r.fs_true[k];
        }
    }
    detail::column_stats(ds.features_input(), ds.input_mean, ds.input_scale);
    return ds;
}

struct TrainedFeatures {
    TrainedNetwork actuator;
    TrainedNetwork sensor;
};

inline TrainedFeatures train_features(const FaultDataset& ds, const NetworkArch& arch, const TrainOptions& opt) {
    require(ds.size() > 0, "dataset is empty");
    const Mat in = ds.features_input();
    TrainOptions sensor_opt = opt;
    sensor_opt.seed = opt.seed ^ 0x5E5E5E5E5E5E5E5Eull;
    return {train_regressor(in, ds.actuator_faults, arch, opt), train_regressor(in, ds.sensor_faults, arch, sensor_opt)};
}

}  // namespace gfi
