// Command implementations behind the gfi executable: config -> model,
// scenario and observers, plus the CSV trace format.
#pragma once

#include "gfi/config.hpp"
#include "gfi/geometry.hpp"

#include <cstdio>
#include <map>

namespace gfi {

namespace fs = std::filesystem;

enum ExitCode : int { exit_ok = 0, exit_config = 2, exit_divergence = 3, exit_comparison = 4 };

struct BuiltModel {
    SystemModel model;
    Controller controller;
    Vec x0;
    std::optional<SpacecraftParams> spacecraft;
};

namespace detail {

inline Mat to_mat(const DMat& rows, const std::string& where) {
    if (rows.empty()) return Mat(0, 0);
    Mat M(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows.front().size()));
    for (std::size_t i = 0; i < rows.size(); ++i) {
        if (rows[i].size() != rows.front().size()) throw ConfigError(where + ": ragged matrix rows");
        for (std::size_t j = 0; j < rows[i].size(); ++j)
            M(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
    }
    return M;
}

inline Vec to_vec(const DVec& v) { return Eigen::Map<const Vec>(v.data(), static_cast<Eigen::Index>(v.size())); }

inline DVec from_vec(const Vec& v) { return DVec(v.data(), v.data() + v.size()); }

// one entry broadcasts to all channels
inline Vec per_channel(const DVec& v, Eigen::Index n, const std::string& where) {
    if (v.size() == 1) return Vec::Constant(n, v.front());
    if (static_cast<Eigen::Index>(v.size()) != n)
        throw ConfigError(where + ": expected 1 or " + std::to_string(n) + " values, got " + std::to_string(v.size()));
    return to_vec(v);
}

inline Vec sized(const DVec& v, Eigen::Index n, const std::string& where) {
    if (static_cast<Eigen::Index>(v.size()) != n)
        throw ConfigError(where + ": expected " + std::to_string(n) + " values, got " + std::to_string(v.size()));
    return to_vec(v);
}

}  // namespace detail

inline fs::path resolve_path(const std::string& p, const fs::path& out_dir) {
    const fs::path path(p);
    return path.is_absolute() ? path : out_dir / path;
}

inline SpacecraftParams spacecraft_params(const SpacecraftBlock& b) {
    SpacecraftParams sp;
    sp.inertia = Eigen::Vector3d(b.inertia_kg_m2[0], b.inertia_kg_m2[1], b.inertia_kg_m2[2]).asDiagonal();
    sp.wheel_inertia = b.wheel_inertia_kg_m2;
    sp.torque_limit = b.torque_limit_n_m;
    sp.wheel_config = pyramid_wheel_config(b.wheel_elevation_rad);
    sp.kp = Eigen::Vector3d(b.kp_per_s2[0], b.kp_per_s2[1], b.kp_per_s2[2]).asDiagonal();
    sp.kd = Eigen::Vector3d(b.kd_per_s[0], b.kd_per_s[1], b.kd_per_s[2]).asDiagonal();
    return sp;
}

inline AttitudeReference attitude_reference(const ReferenceBlock& b) {
    AttitudeReference r;
    r.kind = b.kind == "slew" ? AttitudeReference::Kind::slew : AttitudeReference::Kind::sinusoid;
    r.target_rad = detail::to_vec(b.target_rad);
    r.amplitude_rad = detail::to_vec(b.amplitude_rad);
    r.omega_rad_s = detail::to_vec(b.omega_rad_s);
    r.phase_rad = detail::to_vec(b.phase_rad);
    return r;
}

inline BuiltModel build_model(const RunConfig& cfg) {
    BuiltModel bm;
    try {
        if (cfg.model.kind == "spacecraft") {
            const SpacecraftParams sp = spacecraft_params(cfg.model.spacecraft);
            const AttitudeReference ref = attitude_reference(cfg.reference);
            bm.model = spacecraft_model(sp);
            bm.controller = spacecraft_controller(sp, ref);
            bm.x0 = ref.state(0.0);
            bm.spacecraft = sp;
        } else {
            const auto& lb = cfg.model.linear;
            const Mat A = detail::to_mat(lb.a, "model.linear.a");
            const Mat B = detail::to_mat(lb.b, "model.linear.b");
            const Mat C = detail::to_mat(lb.c, "model.linear.c");
            const Mat Bf = detail::to_mat(lb.bf, "model.linear.bf");
            const Mat E = detail::to_mat(lb.e, "model.linear.e");
            if (A.size() == 0 || B.size() == 0 || C.size() == 0)
                throw ConfigError("model.linear: a, b and c are required");
            bm.model = linear_model(A, B, C, Bf, E);
            Mat K = lb.feedback_gain.empty() ? Mat::Zero(B.cols(), A.rows()) : detail::to_mat(lb.feedback_gain, "model.linear.feedback_gain");
            if (K.rows() != B.cols() || K.cols() != A.rows())
                throw ConfigError("model.linear.feedback_gain: expected " + std::to_string(B.cols()) + "x" +
                                  std::to_string(A.rows()));
            const Vec bias = lb.input_bias.empty() ? Vec::Zero(B.cols())
                                                   : detail::sized(lb.input_bias, B.cols(), "model.linear.input_bias");
            bm.controller = [K, bias](double, const Vec& x) -> Vec { return bias - K * x; };
            bm.x0 = Vec::Zero(A.rows());
        }
    } catch (const InvalidArgument& e) {
        throw ConfigError(std::string("model: ") + e.what());
    }
    if (!cfg.sim.x0.empty()) bm.x0 = detail::sized(cfg.sim.x0, bm.model.state_dim, "sim.x0");
    return bm;
}

inline FaultScenario build_scenario(const RunConfig& cfg, const SystemModel& model) {
    FaultScenario sc;
    sc.actuator_channels = model.actuator_channels();
    sc.sensor_channels = model.sensor_channels();
    sc.actuator_faults = cfg.scenario.actuator_faults;
    sc.sensor_faults = cfg.scenario.sensor_faults;
    sc.horizon_s = cfg.sim.horizon_s;
    sc.disturbance.bound = cfg.scenario.disturbance_bound;
    sc.disturbance.seed = cfg.scenario.disturbance_seed;
    if (!cfg.scenario.disturbance_mask.empty())
        sc.disturbance.mask = detail::sized(cfg.scenario.disturbance_mask, model.state_dim, "scenario.disturbance_mask");
    try {
        sc.validate();
    } catch (const InvalidArgument& e) {
        throw ConfigError(std::string("scenario: ") + e.what());
    }
    return sc;
}

inline SimConfig build_sim_config(const RunConfig& cfg, const BuiltModel& bm) {
    SimConfig s;
    s.dt = cfg.sim.dt_s;
    s.horizon_s = cfg.sim.horizon_s;
    s.decimation = cfg.sim.decimation;
    s.u_floor = cfg.sim.u_floor_n_m;
    s.x0 = bm.x0;
    s.x_hat0 = cfg.sim.x_hat0.empty() ? bm.x0 : detail::sized(cfg.sim.x_hat0, bm.model.state_dim, "sim.x_hat0");
    s.divergence_bound = cfg.sim.divergence_bound;
    return s;
}

namespace detail {

inline std::vector<TrajectorySample> fault_free_samples(const RunConfig& cfg, const BuiltModel& bm) {
    const double span = (cfg.analysis.samples - 1) * cfg.analysis.sample_period_s;
    SimConfig sc = build_sim_config(cfg, bm);
    sc.store_weights = false;
    sc.horizon_s = std::max(span, sc.dt);
    sc.decimation = std::max(1, static_cast<int>(std::lround(cfg.analysis.sample_period_s / sc.dt)));
    FaultScenario clean;
    clean.actuator_channels = bm.model.actuator_channels();
    clean.sensor_channels = bm.model.sensor_channels();
    clean.horizon_s = sc.horizon_s;
    const SimTrace tr = simulate_plant(bm.model, clean, bm.controller, sc);
    if (tr.failed) throw ObserverDiverged(tr.failure_time, "fault-free trajectory for analysis failed: " + tr.failure);
    std::vector<TrajectorySample> out;
    for (std::size_t k = 0; k < tr.size() && static_cast<int>(out.size()) < cfg.analysis.samples; ++k)
        out.push_back({tr.t[k], tr.x[k], tr.u[k]});
    return out;
}

}  // namespace detail

inline MetricDesign build_gain(const RunConfig& cfg, const BuiltModel& bm) {
    const auto& o = cfg.observer;
    const Vec x_op = o.operating_state.empty() ? Vec::Zero(bm.model.state_dim)
                                               : detail::sized(o.operating_state, bm.model.state_dim, "observer.operating_state");
    const Vec u_op = Vec::Zero(bm.model.input_dim);
    GainDesignOptions opt{o.q_weight, o.r_weight, o.metric_q};
    // contraction is checked along the fault-free closed-loop trajectory
    std::vector<OperatingSample> samples;
    for (const auto& s : detail::fault_free_samples(cfg, bm)) samples.push_back({s.x, s.u});
    if (o.gain_mode == "manual") {
        const Mat L = detail::to_mat(o.gain, "observer.gain");
        if (L.rows() != bm.model.state_dim || L.cols() != bm.model.output_dim)
            throw ConfigError("observer.gain: expected " + std::to_string(bm.model.state_dim) + "x" +
                              std::to_string(bm.model.output_dim));
        return certify_gain(bm.model, x_op, u_op, L, o.metric_rate_per_s, samples, opt);
    }
    return design_metric_and_gain(bm.model, x_op, u_op, o.rate_target_per_s, samples, opt);
}

struct XiFile {
    DVec xi_a;
    DVec xi_s;
};

inline void write_xi_file(const fs::path& path, const XiFile& xi) {
    std::ofstream out(path);
    if (!out) throw Error("cannot write " + path.string());
    out << Json{{"xi_a", xi.xi_a}, {"xi_s", xi.xi_s}}.dump(2) << "\n";
}

inline XiFile read_xi_file(const fs::path& path) {
    const std::string text = read_text_file(path);
    XiFile xi;
    try {
        const Json j = Json::parse(text);
        xi.xi_a = j.at("xi_a").get<DVec>();
        xi.xi_s = j.at("xi_s").get<DVec>();
    } catch (const Json::exception& e) {
        throw ConfigError(path.string() + ": malformed xi file (" + e.what() + ")");
    }
    return xi;
}

inline MirrorMapEN build_map(const MirrorMapBlock& b, Eigen::Index columns, bool actuator, const fs::path& out_dir,
                             const std::string& where) {
    MirrorMapEN m{b.beta, b.alpha, b.eps, Vec::Ones(columns)};
    if (!b.xi.empty() && !b.xi_file.empty()) throw ConfigError(where + ": give xi or xi_file, not both");
    if (!b.xi.empty()) m.xi = detail::per_channel(b.xi, columns, where + ".xi");
    if (!b.xi_file.empty()) {
        const XiFile xi = read_xi_file(resolve_path(b.xi_file, out_dir));
        m.xi = detail::sized(actuator ? xi.xi_a : xi.xi_s, columns, where + ".xi_file");
    }
    try {
        m.validate();
    } catch (const InvalidArgument& e) {
        throw ConfigError(where + ": " + e.what());
    }
    return m;
}

inline FeatureFile load_features(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw FileNotFound(path.string());
    try {
        return read_feature_map(in);
    } catch (const Error& e) {
        throw ConfigError(path.string() + ": " + e.what());
    }
}

struct BuiltObservers {
    MetricDesign design;
    std::vector<NamedObserver> observers;
};

inline BuiltObservers build_observers(const RunConfig& cfg, const BuiltModel& bm, const fs::path& out_dir) {
    const auto& o = cfg.observer;
    BuiltObservers out;
    out.design = build_gain(cfg, bm);
    const FeatureFile fa = load_features(resolve_path(o.features_a, out_dir));
    const FeatureFile fsn = load_features(resolve_path(o.features_s, out_dir));
    const Eigen::Index in_dim = bm.model.state_dim + bm.model.input_dim;
    if (fa.features.input_dim() != in_dim || fsn.features.input_dim() != in_dim)
        throw ConfigError("observer: feature maps expect input dimension " + std::to_string(fa.features.input_dim()) +
                          ", model provides " + std::to_string(in_dim));
    ObserverParams p;
    p.L = out.design.L;
    p.M = out.design.M;
    const Eigen::Index qa = bm.model.actuator_channels(), qs = bm.model.sensor_channels();
    p.gamma_a = detail::per_channel(o.gamma_a, qa, "observer.gamma_a");
    p.gamma_s = detail::per_channel(o.gamma_s, qs, "observer.gamma_s");
    p.sigma_a = o.sigma_a;
    p.sigma_s = o.sigma_s;
    p.map_a = build_map(o.map_a, qa, true, out_dir, "observer.map_a");
    p.map_s = build_map(o.map_s, qs, false, out_dir, "observer.map_s");
    p.phi_a = std::make_shared<FeatureMap>(fa.features);
    p.phi_s = std::make_shared<FeatureMap>(fsn.features);
    p.weight_bound = o.weight_bound;
    p.adapt = o.adapt;
    for (const auto& law : o.laws) {
        ObserverParams q = p;
        q.law = law == "md" ? AdaptationLaw::mirror_descent : AdaptationLaw::gradient_descent;
        try {
            q.validate(bm.model);
        } catch (const InvalidArgument& e) {
            throw ConfigError(std::string("observer: ") + e.what());
        }
        out.observers.push_back({law, std::move(q)});
    }
    return out;
}

// =============================================================================
// Trace CSV
// =============================================================================

struct Provenance {
    std::string config_hash;
    std::string scenario_hash;
    std::uint64_t seed = 0;
    std::string observer;
    bool operator==(const Provenance&) const = default;
};

inline std::string fmt_num(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

namespace detail {

struct ColumnGroup {
    std::string prefix;
    Eigen::Index size;
};

inline std::vector<ColumnGroup> trace_groups(Eigen::Index n, Eigen::Index m, Eigen::Index p, Eigen::Index qa, Eigen::Index qs) {
    return {{"x", n},         {"u", m},           {"fa_true", qa}, {"fs_true", qs}, {"eta_true", qa},
            {"fa_active", qa}, {"fs_active", qs}, {"x_hat", n},    {"r", p},        {"fa_hat", qa},
            {"fs_hat", qs},   {"eta_hat", qa},    {"e_y", p}};
}

}  // namespace detail

inline void write_trace_csv(std::ostream& os, const SimTrace& tr, const ObserverTrace& ot, const Provenance& prov) {
    require(!tr.t.empty(), "cannot write an empty trace");
    const Eigen::Index n = tr.x.front().size(), m = tr.u.front().size(), p = ot.r.empty() ? 0 : ot.r.front().size();
    const Eigen::Index qa = tr.fa_true.front().size(), qs = tr.fs_true.front().size();
    os << "# gfi-trace 1\n";
    os << "# config_hash " << prov.config_hash << "\n";
    os << "# scenario_hash " << prov.scenario_hash << "\n";
    os << "# seed " << prov.seed << "\n";
    os << "# observer " << ot.name << "\n";
    os << "# dt_sample " << fmt_num(tr.dt_sample) << "\n";
    os << "# dims " << n << " " << m << " " << p << " " << qa << " " << qs << "\n";
    os << "# guard_activations " << ot.guard_activations << "\n";
    os << "# failed " << (tr.failed || ot.failed ? 1 : 0) << "\n";
    os << "t";
    for (const auto& g : detail::trace_groups(n, m, p, qa, qs))
        for (Eigen::Index k = 0; k < g.size; ++k) os << "," << g.prefix << "_" << k + 1;
    os << "\n";
    const std::size_t len = std::min(tr.size(), ot.size());
    auto put = [&](const Vec& v) {
        for (Eigen::Index k = 0; k < v.size(); ++k) os << "," << fmt_num(v(k));
    };
    for (std::size_t k = 0; k < len; ++k) {
        os << fmt_num(tr.t[k]);
        put(tr.x[k]);
        put(tr.u[k]);
        put(tr.fa_true[k]);
        put(tr.fs_true[k]);
        put(tr.eta_true[k]);
        put(tr.fa_active[k]);
        put(tr.fs_active[k]);
        put(ot.x_hat[k]);
        put(ot.r[k]);
        put(ot.fa_hat[k]);
        put(ot.fs_hat[k]);
        put(ot.eta_hat[k]);
        put(ot.e_y[k]);
        os << "\n";
    }
}

struct TraceFile {
    Provenance provenance;
    SimTrace trace;  // holds exactly one observer
};

inline TraceFile read_trace_csv(std::istream& is, const std::string& origin = "<trace>") {
    TraceFile tf;
    std::string line;
    std::map<std::string, std::string> meta;
    std::vector<Eigen::Index> dims;
    int lineno = 0;
    auto bad = [&](const std::string& what) -> ConfigError { return ConfigError(origin + ":" + std::to_string(lineno) + ": " + what); };
    while (std::getline(is, line)) {
        ++lineno;
        if (line.rfind("# ", 0) != 0) break;
        std::istringstream ss(line.substr(2));
        std::string key, rest;
        ss >> key;
        std::getline(ss >> std::ws, rest);
        meta[key] = rest;
    }
    if (!meta.count("gfi-trace")) throw bad("not a gfi trace file");
    for (const char* k : {"config_hash", "scenario_hash", "seed", "observer", "dt_sample", "dims"})
        if (!meta.count(k)) throw bad(std::string("missing header field ") + k);
    tf.provenance = {meta["config_hash"], meta["scenario_hash"], std::stoull(meta["seed"]), meta["observer"]};
    {
        std::istringstream ss(meta["dims"]);
        Eigen::Index d;
        while (ss >> d) dims.push_back(d);
    }
    if (dims.size() != 5) throw bad("dims header needs five entries");
    const auto groups = detail::trace_groups(dims[0], dims[1], dims[2], dims[3], dims[4]);
    Eigen::Index width = 1;
    for (const auto& g : groups) width += g.size;

    SimTrace& tr = tf.trace;
    tr.dt_sample = std::stod(meta["dt_sample"]);
    tr.failed = meta.count("failed") && meta["failed"] == "1";
    ObserverTrace ot;
    ot.name = meta["observer"];
    ot.guard_activations = meta.count("guard_activations") ? std::stoi(meta["guard_activations"]) : 0;
    ot.failed = tr.failed;
    std::vector<Vec>* sinks[] = {&tr.x,        &tr.u,        &tr.fa_true, &tr.fs_true, &tr.eta_true, &tr.fa_active, &tr.fs_active,
                                 &ot.x_hat,    &ot.r,        &ot.fa_hat,  &ot.fs_hat,  &ot.eta_hat,  &ot.e_y};
    while (std::getline(is, line)) {
        ++lineno;
        if (line.empty()) continue;
        std::vector<double> vals;
        std::size_t pos = 0;
        while (pos <= line.size()) {
            const std::size_t comma = std::min(line.find(',', pos), line.size());
            const std::string cell = line.substr(pos, comma - pos);
            try {
                vals.push_back(std::stod(cell));
            } catch (const std::exception&) {
                throw bad("bad number \"" + cell + "\"");
            }
            pos = comma + 1;
        }
        if (static_cast<Eigen::Index>(vals.size()) != width)
            throw bad("expected " + std::to_string(width) + " columns, got " + std::to_string(vals.size()));
        tr.t.push_back(vals[0]);
        std::size_t c = 1;
        for (std::size_t g = 0; g < groups.size(); ++g) {
            Vec v(groups[g].size);
            for (Eigen::Index k = 0; k < groups[g].size; ++k) v(k) = vals[c++];
            sinks[g]->push_back(std::move(v));
        }
    }
    tr.observers.push_back(std::move(ot));
    return tf;
}

// =============================================================================
// Commands
// =============================================================================

struct CommandOptions {
    fs::path config;
    std::optional<std::uint64_t> seed;
    fs::path out_dir = ".";
    int jobs = 1;
    bool dry_run = false;
};

namespace detail {

inline void write_file(const fs::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write " + path.string());
    out << text;
}

inline std::string provenance_block(const RunConfig& cfg) {
    return "config_hash " + config_hash(cfg) + "\nscenario_hash " + scenario_hash(cfg) + "\nseed " +
           std::to_string(cfg.seed) + "\n";
}

inline RunConfig load_with_seed(const CommandOptions& opt) {
    RunConfig cfg = load_config(opt.config);
    if (opt.seed) cfg.seed = *opt.seed;
    return cfg;
}

inline double lower_quantile(std::vector<double> v, double q) {
    std::sort(v.begin(), v.end());
    const auto idx = static_cast<std::size_t>(std::floor(q * static_cast<double>(v.size() - 1)));
    return v[idx];
}

}  // namespace detail

// analyze: isolability report at the first trajectory sample, angle profile
// along the fault-free trajectory, and the curvature suggestion.
inline int cmd_analyze(const CommandOptions& opt, std::ostream& out) {
    const RunConfig cfg = detail::load_with_seed(opt);
    const BuiltModel bm = build_model(cfg);
    if (opt.dry_run) {
        out << "config ok " << config_hash(cfg) << "\n";
        return exit_ok;
    }
    const auto samples = detail::fault_free_samples(cfg, bm);
    const DiffMapJacobians jac = diffmap_jacobians(bm.model, samples.front().x, samples.front().u, cfg.analysis.order);
    const IsolabilityReport rep = isolability_report(jac, cfg.analysis.angle_floor_rad);
    const AngleProfile prof = angle_profile(bm.model, samples, cfg.analysis.order, cfg.analysis.angle_floor_rad);

    Vec lb_a(bm.model.actuator_channels()), lb_s(bm.model.sensor_channels());
    for (Eigen::Index i = 0; i < lb_a.size(); ++i) lb_a(i) = detail::lower_quantile(prof.actuator[static_cast<std::size_t>(i)], cfg.analysis.quantile);
    for (Eigen::Index j = 0; j < lb_s.size(); ++j) lb_s(j) = detail::lower_quantile(prof.sensor[static_cast<std::size_t>(j)], cfg.analysis.quantile);
    XiFile xi{detail::from_vec(design_xi_from_angles(lb_a, cfg.analysis.xi_min, cfg.analysis.xi_max)),
              detail::from_vec(design_xi_from_angles(lb_s, cfg.analysis.xi_min, cfg.analysis.xi_max))};

    fs::create_directories(opt.out_dir);
    std::ostringstream report;
    report << "# gfi isolability report\n" << detail::provenance_block(cfg);
    report << "order " << cfg.analysis.order << "\n" << rep.summary();
    report << "profile_samples " << prof.times.size() << " skipped " << prof.skipped.size() << "\n";
    for (const auto& w : prof.warnings) report << "warning " << w << "\n";
    for (Eigen::Index i = 0; i < lb_a.size(); ++i)
        report << "a" << i + 1 << " theta_lower_rad " << fmt_num(lb_a(i)) << " xi " << fmt_num(xi.xi_a[static_cast<std::size_t>(i)]) << "\n";
    for (Eigen::Index j = 0; j < lb_s.size(); ++j)
        report << "s" << j + 1 << " theta_lower_rad " << fmt_num(lb_s(j)) << " xi " << fmt_num(xi.xi_s[static_cast<std::size_t>(j)]) << "\n";
    detail::write_file(opt.out_dir / "isolability_report.txt", report.str());

    std::ostringstream csv;
    csv << "# gfi-angle-profile 1\n";
    for (const auto& l : {"config_hash " + config_hash(cfg), "seed " + std::to_string(cfg.seed)}) csv << "# " << l << "\n";
    csv << "t";
    for (std::size_t i = 0; i < prof.actuator.size(); ++i) csv << ",theta_a" << i + 1;
    for (std::size_t j = 0; j < prof.sensor.size(); ++j) csv << ",theta_s" << j + 1;
    csv << "\n";
    for (std::size_t k = 0; k < prof.times.size(); ++k) {
        csv << fmt_num(prof.times[k]);
        for (const auto& ch : prof.actuator) csv << "," << fmt_num(ch[k]);
        for (const auto& ch : prof.sensor) csv << "," << fmt_num(ch[k]);
        csv << "\n";
    }
    detail::write_file(opt.out_dir / "angle_profile.csv", csv.str());
    write_xi_file(opt.out_dir / "xi.json", xi);
    out << rep.summary();
    return exit_ok;
}

inline ScenarioFamily training_family(const RunConfig& cfg, const SystemModel& model) {
    ScenarioFamily fam;
    fam.actuator_channels = model.actuator_channels();
    fam.sensor_channels = model.sensor_channels();
    fam.actuator = cfg.training.actuator_ranges;
    fam.sensor = cfg.training.sensor_ranges;
    fam.horizon_s = cfg.training.horizon_s;
    fam.sample_period_s = cfg.training.sample_period_s;
    try {
        fam.validate();
    } catch (const InvalidArgument& e) {
        throw ConfigError(std::string("training: ") + e.what());
    }
    return fam;
}

inline int cmd_train(const CommandOptions& opt, std::ostream& out, std::ostream& err) {
    const RunConfig cfg = detail::load_with_seed(opt);
    const BuiltModel bm = build_model(cfg);
    const ScenarioFamily fam = training_family(cfg, bm.model);
    if (opt.dry_run) {
        out << "config ok " << config_hash(cfg) << "\n";
        return exit_ok;
    }
    DatasetOptions dop;
    dop.dt = cfg.training.dt_s;
    dop.x0 = bm.x0;
    dop.jobs = opt.jobs;
    const FaultDataset ds = generate_dataset(bm.model, bm.controller, fam, cfg.training.scenarios, cfg.seed, dop, &err);
    NetworkArch arch{cfg.training.hidden_widths, activation_from_string(cfg.training.activation)};
    TrainOptions top{cfg.training.epochs, cfg.training.batch_size, cfg.training.learning_rate, cfg.seed};
    const TrainedFeatures tf = train_features(ds, arch, top);

    fs::create_directories(opt.out_dir);
    const fs::path pa = resolve_path(cfg.observer.features_a, opt.out_dir), ps = resolve_path(cfg.observer.features_s, opt.out_dir);
    for (const auto& [path, net] : {std::pair{pa, &tf.actuator}, std::pair{ps, &tf.sensor}}) {
        if (path.has_parent_path()) fs::create_directories(path.parent_path());
        std::ostringstream os;
        write_feature_map(os, net->features, &net->last_layer);
        detail::write_file(path, os.str());
    }
    std::ostringstream rep;
    rep << "# gfi training report\n" << detail::provenance_block(cfg);
    rep << "samples " << ds.size() << "\ndropped_scenarios " << ds.dropped << "\n";
    rep << "actuator_final_loss " << fmt_num(tf.actuator.final_loss) << "\n";
    rep << "sensor_final_loss " << fmt_num(tf.sensor.final_loss) << "\n";
    rep << "actuator_lipschitz " << fmt_num(tf.actuator.features.lipschitz_estimate) << "\n";
    rep << "sensor_lipschitz " << fmt_num(tf.sensor.features.lipschitz_estimate) << "\n";
    detail::write_file(opt.out_dir / "training_report.txt", rep.str());
    out << "trained on " << ds.size() << " samples, losses " << fmt_num(tf.actuator.final_loss) << " "
        << fmt_num(tf.sensor.final_loss) << "\n";
    return exit_ok;
}

inline std::string metrics_text(const ObserverMetrics& m) {
    std::ostringstream os;
    os << "observer " << m.name << "\n";
    for (Eigen::Index k = 0; k < m.e_rms.size(); ++k)
        os << "e" << k + 1 << " rms " << fmt_num(m.e_rms(k)) << " max " << fmt_num(m.e_max(k)) << "\n";
    for (const auto* group : {&m.actuator, &m.sensor})
        for (const auto& c : *group) {
            os << c.channel << " rms_active " << fmt_num(c.rms_active) << " rms_healthy " << fmt_num(c.rms_healthy)
               << " rms_estimate_active " << fmt_num(c.rms_estimate_active)
               << " mean_abs_active " << fmt_num(c.mean_abs_active) << " mean_abs_healthy " << fmt_num(c.mean_abs_healthy)
               << " mean_abs_fault_period " << fmt_num(c.mean_abs_fault_period);
            if (!std::isnan(c.eta_ss_error)) os << " eta_ss_error " << fmt_num(c.eta_ss_error);
            os << "\n";
        }
    os << "guard_activations " << m.guard_activations << "\nfailed " << (m.failed ? 1 : 0) << "\n";
    return os.str();
}

inline std::vector<DetectionThreshold> thresholds(const DVec& mags, Eigen::Index n, double dwell, const std::string& where) {
    std::vector<DetectionThreshold> out;
    if (mags.empty()) return out;
    const Vec m = detail::per_channel(mags, n, where);
    for (Eigen::Index k = 0; k < n; ++k) out.push_back({m(k), dwell});
    return out;
}

inline int cmd_run(const CommandOptions& opt, std::ostream& out, std::ostream& err) {
    const RunConfig cfg = detail::load_with_seed(opt);
    const BuiltModel bm = build_model(cfg);
    const FaultScenario sc = build_scenario(cfg, bm.model);
    const SimConfig sim = build_sim_config(cfg, bm);
    if (cfg.observer.laws.empty()) throw ConfigError("observer.laws: at least one observer is required");
    const auto tha = thresholds(cfg.detection.actuator_magnitude, bm.model.actuator_channels(), cfg.detection.dwell_s, "detection.actuator_magnitude");
    const auto ths = thresholds(cfg.detection.sensor_magnitude, bm.model.sensor_channels(), cfg.detection.dwell_s, "detection.sensor_magnitude");
    if (opt.dry_run) {
        // feature files are checked without writing anything
        for (const auto& f : {cfg.observer.features_a, cfg.observer.features_s})
            if (!fs::exists(resolve_path(f, opt.out_dir))) throw FileNotFound(resolve_path(f, opt.out_dir).string());
        out << "config ok " << config_hash(cfg) << "\n";
        return exit_ok;
    }
    const BuiltObservers obs = build_observers(cfg, bm, opt.out_dir);
    const SimTrace tr = run_scenario(bm.model, sc, bm.controller, obs.observers, sim, opt.jobs);

    fs::create_directories(opt.out_dir);
    std::ostringstream summary;
    summary << "# gfi run report\n" << detail::provenance_block(cfg);
    summary << "scenario " << cfg.scenario.name << "\n";
    summary << "metric_rate_per_s " << fmt_num(obs.design.rate) << "\n";
    bool diverged = tr.failed;
    if (tr.failed) err << "error: plant diverged at t=" << fmt_num(tr.failure_time) << " s: " << tr.failure << "\n";
    for (std::size_t i = 0; i < tr.observers.size(); ++i) {
        const ObserverTrace& ot = tr.observers[i];
        const ObserverParams& params = obs.observers[i].params;
        std::ostringstream csv;
        write_trace_csv(csv, tr, ot, {config_hash(cfg), scenario_hash(cfg), cfg.seed, ot.name});
        detail::write_file(opt.out_dir / ("trace_" + ot.name + ".csv"), csv.str());
        if (ot.failed) {
            diverged = true;
            err << "error: observer " << ot.name << " diverged at t=" << fmt_num(ot.failure_time) << " s: " << ot.failure << "\n";
            summary << "observer " << ot.name << " failed " << fmt_num(ot.failure_time) << "\n";
            continue;
        }
        const ObserverMetrics m = compute_metrics(tr, ot);
        summary << metrics_text(m);
        if (ot.guard_activations > 0) err << "warning: observer " << ot.name << " hit the weight guard " << ot.guard_activations << " times\n";
        if (!tr.failed) {
            const LyapunovCertificate cert = lyapunov_monitor(tr, ot, params, 2.0 * obs.design.rate);
            std::ostringstream c;
            c << "# gfi lyapunov certificate\n" << detail::provenance_block(cfg) << "observer " << ot.name << "\n";
            c << "alpha_v " << fmt_num(cert.alpha_v) << "\nsigma " << fmt_num(cert.sigma) << "\nultimate_bound "
              << fmt_num(cert.ultimate_bound) << "\nentry_time_s " << fmt_num(cert.entry_time) << "\nverified "
              << (cert.verified ? 1 : 0) << "\nt,V\n";
            for (std::size_t k = 0; k < cert.t.size(); ++k) c << fmt_num(cert.t[k]) << "," << fmt_num(cert.V[k]) << "\n";
            detail::write_file(opt.out_dir / ("certificate_" + ot.name + ".txt"), c.str());
            summary << "certificate alpha_v " << fmt_num(cert.alpha_v) << " ultimate_bound " << fmt_num(cert.ultimate_bound)
                    << " entry_time_s " << fmt_num(cert.entry_time) << "\n";
        }
        if (!tha.empty() || !ths.empty()) {
            const DetectionReport d = detect(tr, ot, tha, ths);
            for (const auto* group : {&d.actuator, &d.sensor})
                for (const auto& c : *group)
                    summary << "detect " << ot.name << " " << c.channel << " flagged " << (c.flagged ? 1 : 0) << " onset_s "
                            << fmt_num(c.onset_time) << " latency_s " << fmt_num(c.latency) << "\n";
        }
    }
    detail::write_file(opt.out_dir / "metrics.txt", summary.str());
    out << summary.str();
    return diverged ? exit_divergence : exit_ok;
}

// Aggregate fault-estimation error: RMS over channels of their active-window RMS.
inline double fault_estimation_rms(const ObserverMetrics& m) {
    double acc = 0.0;
    int n = 0;
    for (const auto* group : {&m.actuator, &m.sensor})
        for (const auto& c : *group)
            if (!std::isnan(c.rms_active)) {
                acc += c.rms_active * c.rms_active;
                ++n;
            }
    return n ? std::sqrt(acc / n) : 0.0;
}

inline TraceFile load_trace(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw FileNotFound(path.string());
    return read_trace_csv(in, path.string());
}

// Exit 0 when the first trace's fault-estimation RMS does not exceed the second's.
inline int cmd_compare(const fs::path& first, const fs::path& second, std::ostream& out) {
    const TraceFile a = load_trace(first), b = load_trace(second);
    if (a.provenance.scenario_hash != b.provenance.scenario_hash)
        throw IncomparableTraces("scenario hashes differ: " + a.provenance.scenario_hash + " vs " + b.provenance.scenario_hash);
    if (a.trace.t != b.trace.t) throw IncomparableTraces("time grids differ");
    const ObserverMetrics ma = compute_metrics(a.trace, a.trace.observers.front());
    const ObserverMetrics mb = compute_metrics(b.trace, b.trace.observers.front());
    const auto deltas = compare_metrics(ma, mb);
    out << "quantity," << ma.name << "," << mb.name << ",delta\n";
    for (const auto& d : deltas) out << d.quantity << "," << fmt_num(d.first) << "," << fmt_num(d.second) << "," << fmt_num(d.delta()) << "\n";
    const double ra = fault_estimation_rms(ma), rb = fault_estimation_rms(mb);
    out << "fault_estimation_rms," << fmt_num(ra) << "," << fmt_num(rb) << "," << fmt_num(ra - rb) << "\n";
    return ra <= rb ? exit_ok : exit_comparison;
}

}  // namespace gfi
