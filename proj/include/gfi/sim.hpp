// Fixed-step co-simulation of plant and observers, trace metrics, threshold
// detection, and the Lyapunov/UUB runtime monitor.
#pragma once

#include "gfi/core.hpp"
#include "gfi/integrator.hpp"
#include "gfi/model.hpp"
#include "gfi/observer.hpp"

#include <algorithm>
#include <atomic>
#include <thread>

namespace gfi {

struct SimConfig {
    double dt = 1e-3;
    double horizon_s = 60.0;
    int decimation = 10;
    Vec x0;
    Vec x_hat0;
    double u_floor = 1e-3;  // N*m, effectiveness reconstruction cutoff
    bool store_weights = true;
    double divergence_bound = 1e6;  // on |x| and |x_hat|

    long steps() const { return std::lround(horizon_s / dt); }

    void validate(const SystemModel& model) const {
        require(dt > 0.0, "dt must be positive");
        require(horizon_s > dt, "horizon must exceed dt");
        require(decimation >= 1, "decimation must be >= 1");
        require(u_floor >= 0.0, "u_floor must be non-negative");
        detail::check_dim(x0, model.state_dim, "initial state");
        detail::check_dim(x_hat0, model.state_dim, "initial estimate");
    }
};

struct NamedObserver {
    std::string name;
    ObserverParams params;
};

struct ObserverTrace {
    std::string name;
    std::vector<Vec> x_hat, r, fa_hat, fs_hat, eta_hat, e_y;
    std::vector<Mat> W_a, W_s;
    int guard_activations = 0;
    bool failed = false;
    double failure_time = std::numeric_limits<double>::quiet_NaN();
    std::string failure;

    std::size_t size() const { return x_hat.size(); }
};

struct SimTrace {
    double dt_sample = 0.0;
    std::vector<double> t;
    std::vector<Vec> x, u, fa_true, fs_true, eta_true, fa_active, fs_active;
    std::vector<ObserverTrace> observers;
    bool failed = false;
    double failure_time = std::numeric_limits<double>::quiet_NaN();
    std::string failure;

    std::size_t size() const { return t.size(); }

    const ObserverTrace& observer(const std::string& name) const {
        for (const auto& o : observers)
            if (o.name == name) return o;
        throw InvalidArgument("trace has no observer named '" + name + "'");
    }
};

namespace detail {

class PlantFailure : public Error {
public:
    using Error::Error;
};

inline Vec active_flags_actuator(const FaultScenario& sc, int channels, double t) {
    Vec a = Vec::Zero(channels);
    for (int i = 0; i < channels; ++i) a(i) = sc.actuator_active(i, t) ? 1.0 : 0.0;
    return a;
}

inline Vec active_flags_sensor(const FaultScenario& sc, int channels, double t) {
    Vec a = Vec::Zero(channels);
    for (int j = 0; j < channels; ++j) a(j) = sc.sensor_active(j, t) ? 1.0 : 0.0;
    return a;
}

inline Vec injected_actuator_fault(const SystemModel& model, const FaultScenario& sc, double t, const Vec& u) {
    if (sc.actuator_faults.empty()) return Vec::Zero(model.actuator_channels());
    return sc.actuator_fault(t, u);
}

inline Vec injected_sensor_fault(const SystemModel& model, const FaultScenario& sc, double t) {
    if (sc.sensor_faults.empty()) return Vec::Zero(model.sensor_channels());
    return sc.sensor_fault(t);
}

// Plant plus at most one observer, stacked as [x; x_hat; vec W_a; vec W_s].
inline SimTrace run_stacked(const SystemModel& model, const FaultScenario& scenario, const Controller& controller,
                            const NamedObserver* obs, const SimConfig& cfg) {
    const int n = model.state_dim;
    ObserverState ostate;
    if (obs) ostate = initial_observer_state(model, obs->params, cfg.x_hat0);
    const Eigen::Index total = n + (obs ? packed_size(ostate) : 0);

    ObserverState scratch = ostate;
    auto rhs = [&](double t, const Vec& v) -> Vec {
        Vec out(total);
        const Vec x = v.head(n);
        Vec u, dx;
        try {
            u = controller(t, x);
            const Vec fa = injected_actuator_fault(model, scenario, t, u);
            dx = eval_dynamics(model, x, u, fa, scenario.disturbance.value(t, n));
        } catch (const NumericalDomainError& e) {
            throw PlantFailure(e.what());
        }
        out.head(n) = dx;
        if (obs) {
            const Vec y = eval_output(model, x, injected_sensor_fault(model, scenario, t));
            unpack_from(v.tail(total - n), scratch);
            try {
                const ObserverRates r =
                    observer_rates(model, obs->params, scratch.x_hat, scratch.W_a, scratch.W_s, y, u);
                pack_rates(r, out.tail(total - n));
            } catch (const NumericalDomainError& e) {
                throw ObserverDiverged(t, e.what());
            }
        }
        return out;
    };

    SimTrace tr;
    tr.dt_sample = cfg.dt * cfg.decimation;
    ObserverTrace otr;
    if (obs) otr.name = obs->name;
    Vec eta_hold = Vec::Ones(model.actuator_channels());

    auto record = [&](double t, const Vec& v) {
        const Vec x = v.head(n);
        const Vec u = controller(t, x);
        tr.t.push_back(t);
        tr.x.push_back(x);
        tr.u.push_back(u);
        tr.fa_true.push_back(injected_actuator_fault(model, scenario, t, u));
        tr.fs_true.push_back(injected_sensor_fault(model, scenario, t));
        tr.eta_true.push_back(scenario.actuator_faults.empty() ? Vec::Ones(model.actuator_channels())
                                                                : scenario.effectiveness(t));
        tr.fa_active.push_back(active_flags_actuator(scenario, model.actuator_channels(), t));
        tr.fs_active.push_back(active_flags_sensor(scenario, model.sensor_channels(), t));
        if (!obs) return;
        unpack_from(v.tail(total - n), scratch);
        const Vec y = eval_output(model, x, tr.fs_true.back());
        const ObserverRates r = observer_rates(model, obs->params, scratch.x_hat, scratch.W_a, scratch.W_s, y, u);
        otr.x_hat.push_back(scratch.x_hat);
        otr.r.push_back(r.signals.r);
        otr.fa_hat.push_back(r.fa_hat);
        otr.fs_hat.push_back(r.fs_hat);
        if (u.size() == eta_hold.size())
            for (Eigen::Index i = 0; i < u.size(); ++i)
                if (std::abs(u(i)) > cfg.u_floor) eta_hold(i) = 1.0 + r.fa_hat(i) / u(i);
        otr.eta_hat.push_back(eta_hold);
        otr.e_y.push_back(model.output_map(x) - model.output_map(scratch.x_hat));
        if (cfg.store_weights) {
            otr.W_a.push_back(scratch.W_a);
            otr.W_s.push_back(scratch.W_s);
        }
    };

    Vec v(total);
    v.head(n) = cfg.x0;
    if (obs) pack_into(ostate, v.tail(total - n));
    const long steps = cfg.steps();
    record(0.0, v);
    for (long k = 0; k < steps; ++k) {
        const double t = static_cast<double>(k) * cfg.dt;
        const double t_next = static_cast<double>(k + 1) * cfg.dt;
        try {
            v = rk4_step(rhs, t, v, cfg.dt);
            if (!v.head(n).allFinite() || v.head(n).norm() > cfg.divergence_bound)
                throw PlantFailure("plant state diverged");
            if (obs) {
                unpack_from(v.tail(total - n), ostate);
                check_observer_finite(ostate, t_next);
                if (ostate.x_hat.norm() > cfg.divergence_bound)
                    throw ObserverDiverged(t_next, "observer state exceeded divergence bound");
                if (apply_weight_guard(ostate, obs->params.weight_bound) > 0) pack_into(ostate, v.tail(total - n));
            }
        } catch (const PlantFailure& e) {
            tr.failed = true;
            tr.failure_time = t_next;
            tr.failure = e.what();
            break;
        } catch (const ObserverDiverged& e) {
            otr.failed = true;
            otr.failure_time = e.time;
            otr.failure = e.what();
            tr.failed = true;
            tr.failure_time = e.time;
            tr.failure = otr.name + ": " + e.what();
            break;
        }
        if ((k + 1) % cfg.decimation == 0) record(t_next, v);
    }
    if (obs) {
        otr.guard_activations = ostate.guard_activations;
        tr.observers.push_back(std::move(otr));
    }
    return tr;
}

}  // namespace detail

// Plant-only closed-loop simulation.
inline SimTrace simulate_plant(const SystemModel& model, const FaultScenario& scenario, const Controller& controller,
                               SimConfig cfg) {
    if (cfg.x_hat0.size() == 0) cfg.x_hat0 = cfg.x0;
    cfg.validate(model);
    return detail::run_stacked(model, scenario, controller, nullptr, cfg);
}

/**
 * Runs every observer against the same closed-loop plant. Each observer is
 * integrated jointly with its own copy of the (deterministic) plant, so the
 * runs are independent and may execute on separate threads; the plant series
 * are identical across them.
 */
inline SimTrace run_scenario(const SystemModel& model, const FaultScenario& scenario, const Controller& controller,
                             const std::vector<NamedObserver>& observers, const SimConfig& cfg, int jobs = 1) {
    cfg.validate(model);
    scenario.validate();
    for (const auto& o : observers) o.params.validate(model);
    if (observers.empty()) return detail::run_stacked(model, scenario, controller, nullptr, cfg);

    std::vector<SimTrace> runs(observers.size());
    std::vector<std::exception_ptr> errors(observers.size());
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t i = next++; i < observers.size(); i = next++) {
            try {
                runs[i] = detail::run_stacked(model, scenario, controller, &observers[i], cfg);
            } catch (...) {
                errors[i] = std::current_exception();
            }
        }
    };
    const std::size_t nthreads = std::clamp<std::size_t>(static_cast<std::size_t>(std::max(jobs, 1)), 1, observers.size());
    if (nthreads == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (std::size_t k = 0; k < nthreads; ++k) pool.emplace_back(worker);
        for (auto& th : pool) th.join();
    }
    for (const auto& e : errors)
        if (e) std::rethrow_exception(e);

    std::size_t longest = 0;
    for (std::size_t i = 1; i < runs.size(); ++i)
        if (runs[i].size() > runs[longest].size()) longest = i;
    SimTrace out = runs[longest];
    out.observers.clear();
    out.failed = false;
    for (auto& r : runs) {
        if (r.failed && (!out.failed || r.failure_time < out.failure_time)) {
            out.failed = true;
            out.failure_time = r.failure_time;
            out.failure = r.failure;
        }
        out.observers.push_back(std::move(r.observers.front()));
    }
    return out;
}

// =============================================================================
// Metrics
// =============================================================================

struct ChannelMetrics {
    std::string channel;
    double rms_active = std::numeric_limits<double>::quiet_NaN();
    double rms_healthy = std::numeric_limits<double>::quiet_NaN();
    double rms_estimate_active = std::numeric_limits<double>::quiet_NaN();  // of f_hat itself
    double mean_abs_active = std::numeric_limits<double>::quiet_NaN();
    double mean_abs_healthy = std::numeric_limits<double>::quiet_NaN();
    double mean_abs_fault_period = std::numeric_limits<double>::quiet_NaN();  // while any channel of this kind is faulty
    double eta_ss_error = std::numeric_limits<double>::quiet_NaN();           // actuator channels only
};

struct ObserverMetrics {
    std::string name;
    Vec e_rms;
    Vec e_max;
    std::vector<ChannelMetrics> actuator;
    std::vector<ChannelMetrics> sensor;
    int guard_activations = 0;
    bool failed = false;
};

namespace detail {

struct Accum {
    double sq = 0.0, sq_est = 0.0, abs_est = 0.0;
    long n = 0;
    void add(double err, double est) {
        sq += err * err;
        sq_est += est * est;
        abs_est += std::abs(est);
        ++n;
    }
    double rms() const { return n ? std::sqrt(sq / static_cast<double>(n)) : std::numeric_limits<double>::quiet_NaN(); }
    double rms_est() const { return n ? std::sqrt(sq_est / static_cast<double>(n)) : std::numeric_limits<double>::quiet_NaN(); }
    double mean_abs() const { return n ? abs_est / static_cast<double>(n) : std::numeric_limits<double>::quiet_NaN(); }
};

// Contiguous [begin, end) index runs where flag(k) is set.
template <typename Flag>
std::vector<std::pair<std::size_t, std::size_t>> active_runs(std::size_t n, Flag flag) {
    std::vector<std::pair<std::size_t, std::size_t>> runs;
    std::size_t k = 0;
    while (k < n) {
        if (!flag(k)) {
            ++k;
            continue;
        }
        const std::size_t b = k;
        while (k < n && flag(k)) ++k;
        runs.emplace_back(b, k);
    }
    return runs;
}

inline std::vector<ChannelMetrics> channel_metrics(const SimTrace& tr, std::size_t len, const std::vector<Vec>& est,
                                                   const std::vector<Vec>& truth, const std::vector<Vec>& active,
                                                   const char* prefix) {
    std::vector<ChannelMetrics> out;
    if (len == 0) return out;
    const Eigen::Index channels = truth.front().size();
    for (Eigen::Index c = 0; c < channels; ++c) {
        Accum act, healthy, period;
        for (std::size_t k = 0; k < len; ++k) {
            const double e = est[k](c) - truth[k](c);
            (active[k](c) != 0.0 ? act : healthy).add(e, est[k](c));
            if (active[k].sum() > 0.0) period.add(e, est[k](c));
        }
        ChannelMetrics m;
        m.channel = prefix + std::to_string(c + 1);
        m.rms_active = act.rms();
        m.rms_healthy = healthy.rms();
        m.rms_estimate_active = act.rms_est();
        m.mean_abs_active = act.mean_abs();
        m.mean_abs_healthy = healthy.mean_abs();
        m.mean_abs_fault_period = period.mean_abs();
        (void)tr;
        out.push_back(m);
    }
    return out;
}

}  // namespace detail

inline ObserverMetrics compute_metrics(const SimTrace& tr, const ObserverTrace& ot) {
    ObserverMetrics m;
    m.name = ot.name;
    m.guard_activations = ot.guard_activations;
    m.failed = ot.failed;
    const std::size_t len = std::min(tr.size(), ot.size());
    if (len == 0) return m;
    const Eigen::Index p = ot.e_y.front().size();
    m.e_rms = Vec::Zero(p);
    m.e_max = Vec::Zero(p);
    for (std::size_t k = 0; k < len; ++k) {
        m.e_rms += ot.e_y[k].array().square().matrix();
        m.e_max = m.e_max.cwiseMax(ot.e_y[k].cwiseAbs());
    }
    m.e_rms = (m.e_rms / static_cast<double>(len)).cwiseSqrt();
    m.actuator = detail::channel_metrics(tr, len, ot.fa_hat, tr.fa_true, tr.fa_active, "a");
    m.sensor = detail::channel_metrics(tr, len, ot.fs_hat, tr.fs_true, tr.fs_active, "s");

    // effectiveness over the tail of each window, fitted as 1 + <fa_hat,u>/<u,u>
    for (std::size_t c = 0; c < m.actuator.size(); ++c) {
        const auto ci = static_cast<Eigen::Index>(c);
        const auto runs = detail::active_runs(len, [&](std::size_t k) { return tr.fa_active[k](ci) != 0.0; });
        double acc = 0.0;
        double weight = 0.0;
        for (const auto& [b, e] : runs) {
            const std::size_t tail = b + static_cast<std::size_t>(std::floor(0.75 * static_cast<double>(e - b)));
            double fu = 0.0, uu = 0.0, eta = 0.0;
            for (std::size_t k = tail; k < e; ++k) {
                fu += ot.fa_hat[k](ci) * tr.u[k](ci);
                uu += tr.u[k](ci) * tr.u[k](ci);
                eta += tr.eta_true[k](ci);
            }
            const double n = static_cast<double>(e - tail);
            if (uu <= 0.0 || n == 0.0) continue;
            acc += n * std::abs(1.0 + fu / uu - eta / n);
            weight += n;
        }
        if (weight > 0.0) m.actuator[c].eta_ss_error = acc / weight;
    }
    return m;
}

struct MetricDelta {
    std::string quantity;
    double first = 0.0;
    double second = 0.0;
    double delta() const { return first - second; }
};

// Side-by-side deltas (first - second) of the headline metrics.
inline std::vector<MetricDelta> compare_metrics(const ObserverMetrics& a, const ObserverMetrics& b) {
    if (a.e_rms.size() != b.e_rms.size() || a.actuator.size() != b.actuator.size() || a.sensor.size() != b.sensor.size())
        throw IncomparableTraces("metric records have different shapes");
    std::vector<MetricDelta> out;
    for (Eigen::Index k = 0; k < a.e_rms.size(); ++k) {
        out.push_back({"e" + std::to_string(k + 1) + "_rms", a.e_rms(k), b.e_rms(k)});
        out.push_back({"e" + std::to_string(k + 1) + "_max", a.e_max(k), b.e_max(k)});
    }
    auto chan = [&](const std::vector<ChannelMetrics>& x, const std::vector<ChannelMetrics>& y) {
        for (std::size_t c = 0; c < x.size(); ++c) {
            if (!std::isnan(x[c].rms_active) || !std::isnan(y[c].rms_active))
                out.push_back({x[c].channel + "_rms_active", x[c].rms_active, y[c].rms_active});
            if (!std::isnan(x[c].rms_healthy) || !std::isnan(y[c].rms_healthy))
                out.push_back({x[c].channel + "_rms_healthy", x[c].rms_healthy, y[c].rms_healthy});
        }
    };
    chan(a.actuator, b.actuator);
    chan(a.sensor, b.sensor);
    return out;
}

// =============================================================================
// Detection
// =============================================================================

struct DetectionThreshold {
    double magnitude = 0.0;
    double dwell_s = 0.0;
    bool operator==(const DetectionThreshold&) const = default;
};

struct ChannelDetection {
    std::string channel;
    bool flagged = false;
    double onset_time = std::numeric_limits<double>::quiet_NaN();
    double true_start = std::numeric_limits<double>::quiet_NaN();
    double latency = std::numeric_limits<double>::quiet_NaN();
};

namespace detail {

inline std::vector<ChannelDetection> detect_channels(const SimTrace& tr, std::size_t len, const std::vector<Vec>& est,
                                                     const std::vector<Vec>& active,
                                                     const std::vector<DetectionThreshold>& th, const char* prefix) {
    std::vector<ChannelDetection> out;
    if (len == 0) return out;
    const Eigen::Index channels = est.front().size();
    require(static_cast<Eigen::Index>(th.size()) == channels, "need one detection threshold per channel");
    for (Eigen::Index c = 0; c < channels; ++c) {
        const auto& h = th[static_cast<std::size_t>(c)];
        ChannelDetection d;
        d.channel = prefix + std::to_string(c + 1);
        const long need = std::lround(h.dwell_s / tr.dt_sample);
        long run_start = -1;
        for (std::size_t k = 0; k < len; ++k) {
            if (std::isnan(d.true_start) && active[k](c) != 0.0) d.true_start = tr.t[k];
            if (std::abs(est[k](c)) > h.magnitude) {
                if (run_start < 0) run_start = static_cast<long>(k);
                if (!d.flagged && static_cast<long>(k) - run_start >= need) {
                    d.flagged = true;
                    d.onset_time = tr.t[k];
                }
            } else {
                run_start = -1;
            }
        }
        if (d.flagged && !std::isnan(d.true_start)) d.latency = d.onset_time - d.true_start;
        out.push_back(d);
    }
    return out;
}

}  // namespace detail

struct DetectionReport {
    std::vector<ChannelDetection> actuator;
    std::vector<ChannelDetection> sensor;
};

// A channel is flagged once |f_hat| stays above its magnitude threshold for the dwell time.
inline DetectionReport detect(const SimTrace& tr, const ObserverTrace& ot, const std::vector<DetectionThreshold>& actuator,
                              const std::vector<DetectionThreshold>& sensor) {
    require(tr.dt_sample > 0.0, "trace has no sample period");
    const std::size_t len = std::min(tr.size(), ot.size());
    return {detail::detect_channels(tr, len, ot.fa_hat, tr.fa_active, actuator, "a"),
            detail::detect_channels(tr, len, ot.fs_hat, tr.fs_active, sensor, "s")};
}

// =============================================================================
// Lyapunov monitor
// =============================================================================

struct IdealWeights {
    Mat W_a;
    Mat W_s;
};

/**
 * Least-squares last layers reproducing the injected faults from features
 * evaluated on the true trajectory; the stand-in for the unknown ideal weights.
 */
inline IdealWeights fit_ideal_weights(const SimTrace& tr, const ObserverParams& params, double ridge = 1e-8) {
    require(!tr.t.empty(), "empty trace");
    const std::size_t len = tr.size();
    const Eigen::Index na = params.phi_a->output_dim(), ns = params.phi_s->output_dim();
    Mat Ga = Mat::Zero(na, na), Gs = Mat::Zero(ns, ns);
    Mat Ba = Mat::Zero(na, tr.fa_true.front().size()), Bs = Mat::Zero(ns, tr.fs_true.front().size());
    for (std::size_t k = 0; k < len; ++k) {
        const Vec in = feature_input(tr.x[k], tr.u[k]);
        const Vec pa = params.phi_a->evaluate(in), ps = params.phi_s->evaluate(in);
        Ga.noalias() += pa * pa.transpose();
        Gs.noalias() += ps * ps.transpose();
        Ba.noalias() += pa * tr.fa_true[k].transpose();
        Bs.noalias() += ps * tr.fs_true[k].transpose();
    }
    const double scale = 1.0 / static_cast<double>(len);
    Ga = Ga * scale + ridge * Mat::Identity(na, na);
    Gs = Gs * scale + ridge * Mat::Identity(ns, ns);
    return {Ga.ldlt().solve(Ba * scale), Gs.ldlt().solve(Bs * scale)};
}

struct LyapunovCertificate {
    std::vector<double> t;
    std::vector<double> V;
    double alpha_v = 0.0;
    double sigma = 0.0;
    double ultimate_bound = std::numeric_limits<double>::infinity();
    bool verified = false;
    double entry_time = std::numeric_limits<double>::quiet_NaN();
    IdealWeights ideal;
};

// Mirror map implied by an observer's adaptation law.
inline MirrorMapEN effective_map(const MirrorMapEN& map, AdaptationLaw law) {
    return law == AdaptationLaw::mirror_descent ? map : MirrorMapEN::quadratic(map.columns());
}

inline double lyapunov_value(const ObserverParams& params, const Vec& e, const Mat& W_a, const Mat& W_s,
                             const IdealWeights& ideal) {
    const MirrorMapEN ma = effective_map(params.map_a, params.law), ms = effective_map(params.map_s, params.law);
    double v = 0.5 * e.dot(params.M * e);
    for (Eigen::Index i = 0; i < W_a.cols(); ++i)
        v += ma.column_bregman(ideal.W_a.col(i), W_a.col(i), i) / params.gamma_a(i);
    for (Eigen::Index j = 0; j < W_s.cols(); ++j)
        v += ms.column_bregman(ideal.W_s.col(j), W_s.col(j), j) / params.gamma_s(j);
    return v;
}

/**
 * Fits the tightest (alpha, sigma) with V_{k+1} <= V_k exp(-alpha dt) + sigma dt
 * over a grid of alpha in (0, alpha_max], choosing the pair with the smallest
 * ultimate bound sigma/alpha.
 */
inline void fit_certificate(LyapunovCertificate& c, double dt, double alpha_max, int grid = 400) {
    c.alpha_v = 0.0;
    c.sigma = 0.0;
    c.ultimate_bound = std::numeric_limits<double>::infinity();
    c.verified = false;
    c.entry_time = std::numeric_limits<double>::quiet_NaN();
    if (c.V.size() < 2 || !(alpha_max > 0.0)) return;
    const double lo = std::log(alpha_max * 1e-4), hi = std::log(alpha_max);
    for (int g = 0; g < grid; ++g) {
        const double a = std::exp(lo + (hi - lo) * g / (grid - 1));
        const double decay = std::exp(-a * dt);
        double s = 0.0;
        for (std::size_t k = 0; k + 1 < c.V.size(); ++k) s = std::max(s, (c.V[k + 1] - c.V[k] * decay) / dt);
        const double bound = s / a;
        if (bound <= c.ultimate_bound) {
            c.ultimate_bound = bound;
            c.alpha_v = a;
            c.sigma = s;
        }
    }
    const double set = 1.1 * c.ultimate_bound;
    for (std::size_t k = c.V.size(); k-- > 0;) {
        if (c.V[k] > set) break;
        c.entry_time = c.t[k];
    }
    c.verified = c.alpha_v > 0.0 && !std::isnan(c.entry_time);
}

inline LyapunovCertificate lyapunov_monitor(const SimTrace& tr, const ObserverTrace& ot, const ObserverParams& params,
                                            double alpha_max) {
    require(!ot.W_a.empty(), "trace was recorded without weights");
    LyapunovCertificate c;
    c.ideal = fit_ideal_weights(tr, params);
    const std::size_t len = std::min({tr.size(), ot.size(), ot.W_a.size()});
    for (std::size_t k = 0; k < len; ++k) {
        c.t.push_back(tr.t[k]);
        c.V.push_back(lyapunov_value(params, tr.x[k] - ot.x_hat[k], ot.W_a[k], ot.W_s[k], c.ideal));
    }
    fit_certificate(c, tr.dt_sample, alpha_max);
    return c;
}

}  // namespace gfi
