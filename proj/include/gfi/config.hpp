// Declarative run configuration: JSON with an explicit schema version,
// strict key checking, and a canonical serialization used for hashing.
#pragma once

#include "gfi/core.hpp"
#include "gfi/dataset.hpp"

#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <optional>
#include <set>
#include <sstream>

namespace gfi {

using Json = nlohmann::json;
using DVec = std::vector<double>;
using DMat = std::vector<std::vector<double>>;

inline constexpr int kSchemaVersion = 1;

struct SpacecraftBlock {
    DVec inertia_kg_m2{1.0, 1.0, 0.8};  // diagonal
    double wheel_inertia_kg_m2 = 0.01;
    double torque_limit_n_m = 0.14;
    double wheel_elevation_rad = 0.6154797086703874;
    DVec kp_per_s2{22.5, 18.0, 15.0};
    DVec kd_per_s{12.0, 9.0, 7.5};
    bool operator==(const SpacecraftBlock&) const = default;
};

// x' = A x + B u + Bf fa, y = C x + E fs, u = u_bias - K x
struct LinearBlock {
    DMat a, b, c, bf, e;
    DMat feedback_gain;
    DVec input_bias;
    bool operator==(const LinearBlock&) const = default;
};

struct ModelBlock {
    std::string kind = "spacecraft";
    SpacecraftBlock spacecraft;
    LinearBlock linear;
    bool operator==(const ModelBlock&) const = default;
};

struct ReferenceBlock {
    std::string kind = "sinusoid";
    DVec target_rad{0.2, -0.15, 0.1};
    DVec amplitude_rad{0.1, 0.08, 0.06};
    DVec omega_rad_s{0.5, 0.35, 0.42};
    DVec phase_rad{0.0, 1.0, 2.0};
    bool operator==(const ReferenceBlock&) const = default;
};

struct ScenarioBlock {
    std::string name = "fault_free";
    std::vector<ActuatorFault> actuator_faults;
    std::vector<SensorFault> sensor_faults;
    double disturbance_bound = 0.0;
    std::uint64_t disturbance_seed = 1;
    DVec disturbance_mask;
    bool operator==(const ScenarioBlock&) const = default;
};

struct MirrorMapBlock {
    double beta = 1.0;
    double alpha = 0.1;
    double eps = 1e-4;
    DVec xi;               // empty: ones, or taken from xi_file
    std::string xi_file;  // analyze output
    bool operator==(const MirrorMapBlock&) const = default;
};

struct ObserverBlock {
    std::string gain_mode = "riccati";  // riccati | manual
    double rate_target_per_s = 1.0;
    double q_weight = 1.0;
    double r_weight = 1.0;
    double metric_q = 1.0;
    DMat gain;                      // manual mode
    double metric_rate_per_s = 0.0;  // manual mode shift for the metric solve
    DVec operating_state;          // linearization point; empty = zero
    DVec gamma_a{50.0};
    DVec gamma_s{50.0};
    double sigma_a = 0.1;
    double sigma_s = 0.1;
    MirrorMapBlock map_a;
    MirrorMapBlock map_s;
    std::string features_a = "features_a.txt";
    std::string features_s = "features_s.txt";
    double weight_bound = 1e3;
    std::vector<std::string> laws{"md", "gd"};
    bool adapt = true;
    bool operator==(const ObserverBlock&) const = default;
};

struct SimBlock {
    double dt_s = 1e-3;
    double horizon_s = 60.0;
    int decimation = 10;
    double u_floor_n_m = 1e-3;
    DVec x0;       // empty: reference state at t=0 (spacecraft) or zero
    DVec x_hat0;   // empty: x0
    double divergence_bound = 1e6;
    bool operator==(const SimBlock&) const = default;
};

struct AnalysisBlock {
    int order = 2;
    double angle_floor_rad = 1e-3;
    int samples = 20;
    double sample_period_s = 3.0;
    double xi_min = 1.0;
    double xi_max = 5.0;
    double quantile = 0.0;  // 0 = min over the angle profile
    bool operator==(const AnalysisBlock&) const = default;
};

struct TrainingBlock {
    int scenarios = 20;
    double horizon_s = 60.0;
    double sample_period_s = 0.05;
    double dt_s = 1e-3;
    std::vector<ActuatorFaultRange> actuator_ranges;
    std::vector<SensorFaultRange> sensor_ranges;
    std::vector<int> hidden_widths{32, 32, 32};
    std::string activation = "tanh";
    int epochs = 20;
    int batch_size = 64;
    double learning_rate = 0.05;
    bool operator==(const TrainingBlock&) const = default;
};

struct DetectionBlock {
    DVec actuator_magnitude;
    DVec sensor_magnitude;
    double dwell_s = 1.0;
    bool operator==(const DetectionBlock&) const = default;
};

struct RunConfig {
    int schema_version = kSchemaVersion;
    std::uint64_t seed = 1;
    ModelBlock model;
    ReferenceBlock reference;
    ScenarioBlock scenario;
    ObserverBlock observer;
    SimBlock sim;
    AnalysisBlock analysis;
    TrainingBlock training;
    DetectionBlock detection;
    bool operator==(const RunConfig&) const = default;
};

// =============================================================================
// Strict reader
// =============================================================================

namespace detail {

class Reader {
public:
    Reader(const Json& j, std::string path) : j_(j), path_(std::move(path)) {
        if (!j_.is_object()) fail(path_, "expected an object");
    }

    bool has(const std::string& key) const { return j_.contains(key); }

    template <class T>
    void get(const std::string& key, T& out) {
        seen_.insert(key);
        if (!j_.contains(key)) return;
        read(j_.at(key), field(key), out);
    }

    template <class F>
    void object(const std::string& key, F&& fn) {
        seen_.insert(key);
        if (!j_.contains(key)) return;
        Reader sub(j_.at(key), field(key));
        fn(sub);
        sub.finish();
    }

    template <class T, class F>
    void array(const std::string& key, std::vector<T>& out, F&& fn) {
        seen_.insert(key);
        if (!j_.contains(key)) return;
        const Json& a = j_.at(key);
        if (!a.is_array()) fail(field(key), "expected an array");
        out.clear();
        for (std::size_t i = 0; i < a.size(); ++i) {
            Reader sub(a[i], field(key) + "[" + std::to_string(i) + "]");
            T item{};
            fn(sub, item);
            sub.finish();
            out.push_back(std::move(item));
        }
    }

    void finish() const {
        for (auto it = j_.begin(); it != j_.end(); ++it)
            if (!seen_.count(it.key())) fail(field(it.key()), "unknown key");
    }

    const std::string& path() const { return path_; }
    std::string field(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

    [[noreturn]] static void fail(const std::string& where, const std::string& what) {
        throw ConfigError(where + ": " + what);
    }

private:
    static void read(const Json& v, const std::string& where, double& out) {
        if (!v.is_number()) fail(where, "expected a number");
        out = v.get<double>();
    }
    static void read(const Json& v, const std::string& where, int& out) {
        if (!v.is_number_integer()) fail(where, "expected an integer");
        out = v.get<int>();
    }
    static void read(const Json& v, const std::string& where, std::uint64_t& out) {
        if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<long long>() >= 0))
            fail(where, "expected a non-negative integer");
        out = v.get<std::uint64_t>();
    }
    static void read(const Json& v, const std::string& where, bool& out) {
        if (!v.is_boolean()) fail(where, "expected true or false");
        out = v.get<bool>();
    }
    static void read(const Json& v, const std::string& where, std::string& out) {
        if (!v.is_string()) fail(where, "expected a string");
        out = v.get<std::string>();
    }
    // a bare number is accepted where a list is expected
    static void read(const Json& v, const std::string& where, DVec& out) {
        out.clear();
        if (v.is_number()) {
            out.push_back(v.get<double>());
            return;
        }
        if (!v.is_array()) fail(where, "expected a number or an array of numbers");
        for (std::size_t i = 0; i < v.size(); ++i) {
            if (!v[i].is_number()) fail(where + "[" + std::to_string(i) + "]", "expected a number");
            out.push_back(v[i].get<double>());
        }
    }
    static void read(const Json& v, const std::string& where, std::vector<int>& out) {
        if (!v.is_array()) fail(where, "expected an array of integers");
        out.clear();
        for (std::size_t i = 0; i < v.size(); ++i) {
            if (!v[i].is_number_integer()) fail(where + "[" + std::to_string(i) + "]", "expected an integer");
            out.push_back(v[i].get<int>());
        }
    }
    static void read(const Json& v, const std::string& where, std::vector<std::string>& out) {
        if (!v.is_array()) fail(where, "expected an array of strings");
        out.clear();
        for (std::size_t i = 0; i < v.size(); ++i) {
            if (!v[i].is_string()) fail(where + "[" + std::to_string(i) + "]", "expected a string");
            out.push_back(v[i].get<std::string>());
        }
    }
    static void read(const Json& v, const std::string& where, DMat& out) {
        if (!v.is_array()) fail(where, "expected an array of rows");
        out.clear();
        for (std::size_t i = 0; i < v.size(); ++i) {
            DVec row;
            read(v[i], where + "[" + std::to_string(i) + "]", row);
            if (!out.empty() && row.size() != out.front().size()) fail(where, "ragged matrix rows");
            out.push_back(std::move(row));
        }
    }
    static void read(const Json& v, const std::string& where, Range& out) {
        if (v.is_number()) {
            out.lo = out.hi = v.get<double>();
            return;
        }
        if (!v.is_array() || v.size() != 2 || !v[0].is_number() || !v[1].is_number())
            fail(where, "expected a number or a [lo, hi] pair");
        out = {v[0].get<double>(), v[1].get<double>()};
        if (out.lo > out.hi) fail(where, "range has lo > hi");
    }

    const Json& j_;
    std::string path_;
    std::set<std::string> seen_;
};

inline void check_vec(const DVec& v, std::size_t n, const std::string& where) {
    if (v.size() != n) Reader::fail(where, "expected " + std::to_string(n) + " values, got " + std::to_string(v.size()));
}

}  // namespace detail

inline RunConfig config_from_json(const Json& root) {
    using detail::Reader;
    RunConfig c;
    Reader r(root, "");
    if (!root.contains("schema_version")) Reader::fail("schema_version", "missing");
    r.get("schema_version", c.schema_version);
    if (c.schema_version != kSchemaVersion)
        Reader::fail("schema_version", "unsupported version " + std::to_string(c.schema_version));
    r.get("seed", c.seed);

    r.object("model", [&](Reader& m) {
        m.get("kind", c.model.kind);
        m.object("spacecraft", [&](Reader& s) {
            auto& b = c.model.spacecraft;
            s.get("inertia_kg_m2", b.inertia_kg_m2);
            s.get("wheel_inertia_kg_m2", b.wheel_inertia_kg_m2);
            s.get("torque_limit_n_m", b.torque_limit_n_m);
            s.get("wheel_elevation_rad", b.wheel_elevation_rad);
            s.get("kp_per_s2", b.kp_per_s2);
            s.get("kd_per_s", b.kd_per_s);
            detail::check_vec(b.inertia_kg_m2, 3, s.field("inertia_kg_m2"));
            detail::check_vec(b.kp_per_s2, 3, s.field("kp_per_s2"));
            detail::check_vec(b.kd_per_s, 3, s.field("kd_per_s"));
        });
        m.object("linear", [&](Reader& l) {
            auto& b = c.model.linear;
            l.get("a", b.a);
            l.get("b", b.b);
            l.get("c", b.c);
            l.get("bf", b.bf);
            l.get("e", b.e);
            l.get("feedback_gain", b.feedback_gain);
            l.get("input_bias", b.input_bias);
        });
        if (c.model.kind != "spacecraft" && c.model.kind != "linear")
            Reader::fail("model.kind", "expected \"spacecraft\" or \"linear\"");
    });

    r.object("reference", [&](Reader& s) {
        auto& b = c.reference;
        s.get("kind", b.kind);
        s.get("target_rad", b.target_rad);
        s.get("amplitude_rad", b.amplitude_rad);
        s.get("omega_rad_s", b.omega_rad_s);
        s.get("phase_rad", b.phase_rad);
        if (b.kind != "sinusoid" && b.kind != "slew") Reader::fail("reference.kind", "expected \"sinusoid\" or \"slew\"");
        detail::check_vec(b.target_rad, 3, s.field("target_rad"));
        detail::check_vec(b.amplitude_rad, 3, s.field("amplitude_rad"));
        detail::check_vec(b.omega_rad_s, 3, s.field("omega_rad_s"));
        detail::check_vec(b.phase_rad, 3, s.field("phase_rad"));
    });

    r.object("scenario", [&](Reader& s) {
        auto& b = c.scenario;
        s.get("name", b.name);
        s.array("actuator_faults", b.actuator_faults, [](Reader& f, ActuatorFault& a) {
            f.get("channel", a.channel);
            f.get("effectiveness", a.effectiveness);
            f.get("start_s", a.start_s);
            f.get("end_s", a.end_s);
        });
        s.array("sensor_faults", b.sensor_faults, [](Reader& f, SensorFault& a) {
            f.get("channel", a.channel);
            f.get("amplitude", a.amplitude);
            f.get("omega_rad_s", a.omega_rad_s);
            f.get("phase_rad", a.phase_rad);
            f.get("start_s", a.start_s);
            f.get("end_s", a.end_s);
        });
        s.get("disturbance_bound", b.disturbance_bound);
        s.get("disturbance_seed", b.disturbance_seed);
        s.get("disturbance_mask", b.disturbance_mask);
    });

    auto read_map = [](Reader& m, MirrorMapBlock& b) {
        m.get("beta", b.beta);
        m.get("alpha", b.alpha);
        m.get("eps", b.eps);
        m.get("xi", b.xi);
        m.get("xi_file", b.xi_file);
    };
    r.object("observer", [&](Reader& o) {
        auto& b = c.observer;
        o.get("gain_mode", b.gain_mode);
        o.get("rate_target_per_s", b.rate_target_per_s);
        o.get("q_weight", b.q_weight);
        o.get("r_weight", b.r_weight);
        o.get("metric_q", b.metric_q);
        o.get("gain", b.gain);
        o.get("metric_rate_per_s", b.metric_rate_per_s);
        o.get("operating_state", b.operating_state);
        o.get("gamma_a", b.gamma_a);
        o.get("gamma_s", b.gamma_s);
        o.get("sigma_a", b.sigma_a);
        o.get("sigma_s", b.sigma_s);
        o.object("map_a", [&](Reader& m) { read_map(m, b.map_a); });
        o.object("map_s", [&](Reader& m) { read_map(m, b.map_s); });
        o.get("features_a", b.features_a);
        o.get("features_s", b.features_s);
        o.get("weight_bound", b.weight_bound);
        o.get("laws", b.laws);
        o.get("adapt", b.adapt);
        if (b.gain_mode != "riccati" && b.gain_mode != "manual")
            Reader::fail("observer.gain_mode", "expected \"riccati\" or \"manual\"");
        if (b.gain_mode == "manual" && b.gain.empty()) Reader::fail("observer.gain", "manual gain mode needs a gain matrix");
        for (const auto& l : b.laws)
            if (l != "md" && l != "gd") Reader::fail("observer.laws", "unknown law \"" + l + "\"");
    });

    r.object("sim", [&](Reader& s) {
        auto& b = c.sim;
        s.get("dt_s", b.dt_s);
        s.get("horizon_s", b.horizon_s);
        s.get("decimation", b.decimation);
        s.get("u_floor_n_m", b.u_floor_n_m);
        s.get("x0", b.x0);
        s.get("x_hat0", b.x_hat0);
        s.get("divergence_bound", b.divergence_bound);
        if (!(b.dt_s > 0.0)) Reader::fail("sim.dt_s", "must be positive");
        if (!(b.horizon_s > 0.0)) Reader::fail("sim.horizon_s", "must be positive");
        if (b.decimation < 1) Reader::fail("sim.decimation", "must be at least 1");
    });

    r.object("analysis", [&](Reader& s) {
        auto& b = c.analysis;
        s.get("order", b.order);
        s.get("angle_floor_rad", b.angle_floor_rad);
        s.get("samples", b.samples);
        s.get("sample_period_s", b.sample_period_s);
        s.get("xi_min", b.xi_min);
        s.get("xi_max", b.xi_max);
        s.get("quantile", b.quantile);
        if (b.order < 0) Reader::fail("analysis.order", "must be non-negative");
        if (b.samples < 1) Reader::fail("analysis.samples", "must be at least 1");
        if (!(b.quantile >= 0.0 && b.quantile <= 1.0)) Reader::fail("analysis.quantile", "must lie in [0,1]");
    });

    r.object("training", [&](Reader& s) {
        auto& b = c.training;
        s.get("scenarios", b.scenarios);
        s.get("horizon_s", b.horizon_s);
        s.get("sample_period_s", b.sample_period_s);
        s.get("dt_s", b.dt_s);
        s.array("actuator_ranges", b.actuator_ranges, [](Reader& f, ActuatorFaultRange& a) {
            f.get("channel", a.channel);
            f.get("probability", a.probability);
            f.get("effectiveness", a.effectiveness);
            f.get("start_s", a.start_s);
            f.get("duration_s", a.duration_s);
        });
        s.array("sensor_ranges", b.sensor_ranges, [](Reader& f, SensorFaultRange& a) {
            f.get("channel", a.channel);
            f.get("probability", a.probability);
            f.get("amplitude", a.amplitude);
            f.get("omega_rad_s", a.omega_rad_s);
            f.get("phase_rad", a.phase_rad);
            f.get("start_s", a.start_s);
            f.get("duration_s", a.duration_s);
        });
        s.get("hidden_widths", b.hidden_widths);
        s.get("activation", b.activation);
        s.get("epochs", b.epochs);
        s.get("batch_size", b.batch_size);
        s.get("learning_rate", b.learning_rate);
        if (b.scenarios < 1) Reader::fail("training.scenarios", "must be at least 1");
        if (b.activation != "tanh" && b.activation != "identity")
            Reader::fail("training.activation", "expected \"tanh\" or \"identity\"");
    });

    r.object("detection", [&](Reader& s) {
        s.get("actuator_magnitude", c.detection.actuator_magnitude);
        s.get("sensor_magnitude", c.detection.sensor_magnitude);
        s.get("dwell_s", c.detection.dwell_s);
    });
    r.finish();
    return c;
}

// =============================================================================
// Canonical serialization
// =============================================================================

inline Json config_to_json(const RunConfig& c) {
    Json j;
    j["schema_version"] = c.schema_version;
    j["seed"] = c.seed;
    const auto& sc = c.model.spacecraft;
    const auto& li = c.model.linear;
    j["model"] = {{"kind", c.model.kind},
                  {"spacecraft",
                   {{"inertia_kg_m2", sc.inertia_kg_m2},
                    {"wheel_inertia_kg_m2", sc.wheel_inertia_kg_m2},
                    {"torque_limit_n_m", sc.torque_limit_n_m},
                    {"wheel_elevation_rad", sc.wheel_elevation_rad},
                    {"kp_per_s2", sc.kp_per_s2},
                    {"kd_per_s", sc.kd_per_s}}},
                  {"linear",
                   {{"a", li.a},
                    {"b", li.b},
                    {"c", li.c},
                    {"bf", li.bf},
                    {"e", li.e},
                    {"feedback_gain", li.feedback_gain},
                    {"input_bias", li.input_bias}}}};
    j["reference"] = {{"kind", c.reference.kind},
                      {"target_rad", c.reference.target_rad},
                      {"amplitude_rad", c.reference.amplitude_rad},
                      {"omega_rad_s", c.reference.omega_rad_s},
                      {"phase_rad", c.reference.phase_rad}};
    Json af = Json::array(), sf = Json::array();
    for (const auto& f : c.scenario.actuator_faults)
        af.push_back({{"channel", f.channel}, {"effectiveness", f.effectiveness}, {"start_s", f.start_s}, {"end_s", f.end_s}});
    for (const auto& f : c.scenario.sensor_faults)
        sf.push_back({{"channel", f.channel},
                      {"amplitude", f.amplitude},
                      {"omega_rad_s", f.omega_rad_s},
                      {"phase_rad", f.phase_rad},
                      {"start_s", f.start_s},
                      {"end_s", f.end_s}});
    j["scenario"] = {{"name", c.scenario.name},
                     {"actuator_faults", af},
                     {"sensor_faults", sf},
                     {"disturbance_bound", c.scenario.disturbance_bound},
                     {"disturbance_seed", c.scenario.disturbance_seed},
                     {"disturbance_mask", c.scenario.disturbance_mask}};
    auto map = [](const MirrorMapBlock& m) {
        return Json{{"beta", m.beta}, {"alpha", m.alpha}, {"eps", m.eps}, {"xi", m.xi}, {"xi_file", m.xi_file}};
    };
    const auto& o = c.observer;
    j["observer"] = {{"gain_mode", o.gain_mode},
                     {"rate_target_per_s", o.rate_target_per_s},
                     {"q_weight", o.q_weight},
                     {"r_weight", o.r_weight},
                     {"metric_q", o.metric_q},
                     {"gain", o.gain},
                     {"metric_rate_per_s", o.metric_rate_per_s},
                     {"operating_state", o.operating_state},
                     {"gamma_a", o.gamma_a},
                     {"gamma_s", o.gamma_s},
                     {"sigma_a", o.sigma_a},
                     {"sigma_s", o.sigma_s},
                     {"map_a", map(o.map_a)},
                     {"map_s", map(o.map_s)},
                     {"features_a", o.features_a},
                     {"features_s", o.features_s},
                     {"weight_bound", o.weight_bound},
                     {"laws", o.laws},
                     {"adapt", o.adapt}};
    j["sim"] = {{"dt_s", c.sim.dt_s},
                {"horizon_s", c.sim.horizon_s},
                {"decimation", c.sim.decimation},
                {"u_floor_n_m", c.sim.u_floor_n_m},
                {"x0", c.sim.x0},
                {"x_hat0", c.sim.x_hat0},
                {"divergence_bound", c.sim.divergence_bound}};
    const auto& a = c.analysis;
    j["analysis"] = {{"order", a.order},
                     {"angle_floor_rad", a.angle_floor_rad},
                     {"samples", a.samples},
                     {"sample_period_s", a.sample_period_s},
                     {"xi_min", a.xi_min},
                     {"xi_max", a.xi_max},
                     {"quantile", a.quantile}};
    auto range = [](const Range& r) { return Json::array({r.lo, r.hi}); };
    Json ar = Json::array(), sr = Json::array();
    for (const auto& f : c.training.actuator_ranges)
        ar.push_back({{"channel", f.channel},
                      {"probability", f.probability},
                      {"effectiveness", range(f.effectiveness)},
                      {"start_s", range(f.start_s)},
                      {"duration_s", range(f.duration_s)}});
    for (const auto& f : c.training.sensor_ranges)
        sr.push_back({{"channel", f.channel},
                      {"probability", f.probability},
                      {"amplitude", range(f.amplitude)},
                      {"omega_rad_s", range(f.omega_rad_s)},
                      {"phase_rad", range(f.phase_rad)},
                      {"start_s", range(f.start_s)},
                      {"duration_s", range(f.duration_s)}});
    const auto& t = c.training;
    j["training"] = {{"scenarios", t.scenarios},
                     {"horizon_s", t.horizon_s},
                     {"sample_period_s", t.sample_period_s},
                     {"dt_s", t.dt_s},
                     {"actuator_ranges", ar},
                     {"sensor_ranges", sr},
                     {"hidden_widths", t.hidden_widths},
                     {"activation", t.activation},
                     {"epochs", t.epochs},
                     {"batch_size", t.batch_size},
                     {"learning_rate", t.learning_rate}};
    j["detection"] = {{"actuator_magnitude", c.detection.actuator_magnitude},
                      {"sensor_magnitude", c.detection.sensor_magnitude},
                      {"dwell_s", c.detection.dwell_s}};
    return j;
}

inline std::string serialize_config(const RunConfig& c) { return config_to_json(c).dump(2) + "\n"; }

// Byte offset to line:column for parser diagnostics.
inline std::string text_position(const std::string& text, std::size_t offset) {
    std::size_t line = 1, col = 1;
    for (std::size_t i = 0; i < offset && i < text.size(); ++i) {
        if (text[i] == '\n') {
            ++line;
            col = 1;
        } else {
            ++col;
        }
    }
    return std::to_string(line) + ":" + std::to_string(col);
}

inline RunConfig parse_config(const std::string& text, const std::string& origin = "<config>") {
    Json j;
    try {
        j = Json::parse(text);
    } catch (const Json::parse_error& e) {
        throw ConfigError(origin + ":" + text_position(text, e.byte ? e.byte - 1 : 0) + ": malformed JSON (" + e.what() + ")");
    }
    try {
        return config_from_json(j);
    } catch (const ConfigError& e) {
        throw ConfigError(origin + ": " + e.what());
    }
}

inline std::string read_text_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw FileNotFound(path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

inline RunConfig load_config(const std::filesystem::path& path) { return parse_config(read_text_file(path), path.string()); }

inline std::string config_hash(const RunConfig& c) { return hex64(fnv1a(config_to_json(c).dump())); }
inline std::string scenario_hash(const RunConfig& c) {
    const Json j = config_to_json(c);
    return hex64(fnv1a(Json{{"scenario", j["scenario"]}, {"sim", j["sim"]}, {"model", j["model"]}, {"reference", j["reference"]}}.dump()));
}

}  // namespace gfi
