#include "oracles.hpp"

#include <sys/wait.h>

#include <chrono>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

using namespace gfi;

namespace {

// tolerances
constexpr double kAngleTol = 1e-9;
constexpr double kHessianSlack = 1e-10;
constexpr double kHessianFdTol = 1e-5;
constexpr double kDegeneracyTol = 1e-12;
constexpr double kContractionSlack = 1.05;
constexpr double kDecayFraction = 0.9;
constexpr double kEtaTol = 0.1;
constexpr double kHealthyRatio = 0.25;
constexpr double kSensorRmsRatio = 0.3;
constexpr double kYawRatio = 0.5;
constexpr double kResidualSetSlack = 1.1;
constexpr double kSlope = 4.0, kSlopeTol = 0.3;

// pinned by the first verified run of the actuator scenario
constexpr double kActuatorMaxErrorRad = 0.015;

const fs::path kSource = GFI_SOURCE_DIR;
const fs::path kWork = GFI_WORK_DIR;

struct Outcome {
    bool pass = false;
    std::string detail;
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

std::string num(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.4g", v);
    return buf;
}

fs::path config_path(const std::string& name) { return kSource / "configs" / name; }

// features for the paper scenarios are trained once and cached next to the build
const fs::path& feature_dir() {
    static const fs::path dir = [] {
        const fs::path d = kWork / "features";
        if (!fs::exists(d / "features_a.txt") || !fs::exists(d / "features_s.txt")) {
            CommandOptions opt;
            opt.config = config_path("paper_actuator.json");
            opt.out_dir = d;
            std::ostringstream out, err;
            if (cmd_train(opt, out, err) != exit_ok) throw Error("feature training failed: " + err.str());
        }
        return d;
    }();
    return dir;
}

struct Setup {
    RunConfig cfg;
    BuiltModel bm;
    FaultScenario scenario;
    SimConfig sim;
    BuiltObservers obs;
};

Setup load_setup(const std::string& config) {
    Setup s{load_config(config_path(config)), {}, {}, {}, {}};
    s.bm = build_model(s.cfg);
    s.scenario = build_scenario(s.cfg, s.bm.model);
    s.sim = build_sim_config(s.cfg, s.bm);
    s.obs = build_observers(s.cfg, s.bm, feature_dir());
    return s;
}

SimTrace run(const Setup& s) { return run_scenario(s.bm.model, s.scenario, s.bm.controller, s.obs.observers, s.sim, 2); }

// ---------------------------------------------------------------------------

Outcome geometry_oracle() {
    const auto t0 = Clock::now();
    Rng rng(2024);
    double worst = 0.0;
    int equivalence_failures = 0;
    auto check_equivalence = [&](const oracle::SubspacePair& p) {
        const SubspaceBasis a = orthonormalize(p.A), b = orthonormalize(p.B);
        const std::vector<double> th = principal_angles(a, b);
        Mat both(p.A.rows(), p.A.cols() + p.B.cols());
        both << p.A, p.B;
        const bool trivial = oracle::numerical_rank(both) == a.dim() + b.dim();
        const bool positive = th.front() > 1e-6;
        const auto zeros = std::count_if(th.begin(), th.end(), [](double v) { return v < 1e-6; });
        if (positive != trivial || zeros != p.shared) ++equivalence_failures;
        return th;
    };
    for (int k = 0; k < 200; ++k) {
        const oracle::SubspacePair p = oracle::random_pair(rng);
        const std::vector<double> th = check_equivalence(p);
        const std::vector<double> ref = oracle::projector_angles(p.A, p.B);
        if (th.size() != ref.size()) return {false, "angle count mismatch"};
        for (std::size_t i = 0; i < th.size(); ++i) worst = std::max(worst, std::abs(th[i] - ref[i]));
    }
    for (int k = 0; k < 20; ++k) check_equivalence(oracle::degenerate_pair(rng));
    const double secs = seconds_since(t0);
    return {worst <= kAngleTol && equivalence_failures == 0 && secs < 5.0,
            "max angle error " + num(worst) + ", equivalence failures " + std::to_string(equivalence_failures) + ", " +
                num(secs) + " s"};
}

Outcome duplicated_signature() {
    const auto t0 = Clock::now();
    Mat A = Mat::Zero(2, 2), B = Mat::Identity(2, 2), C = Mat::Identity(2, 2), Bf(2, 2);
    A(0, 1) = 1.0;
    Bf << 1, 1, 0, 0;
    const SystemModel m = linear_model(A, B, C, Bf, Mat(2, 0));
    const DiffMapJacobians j = diffmap_jacobians(m, Vec::Zero(2), Vec::Zero(2), 1);
    const double floor = 1e-3;
    const IsolabilityReport rep = isolability_report(j, floor);
    bool raised = true;
    for (int i = 0; i < 2; ++i) {
        try {
            isolating_projector(j, ChannelId::actuator(i), floor);
            raised = false;
        } catch (const IsolabilityViolation&) {
        }
    }
    const double th = std::max(rep.actuator[0].theta_min, rep.actuator[1].theta_min);
    const double secs = seconds_since(t0);
    return {th < floor && raised && secs < 1.0,
            "theta_min " + num(th) + ", projector raised " + (raised ? "yes" : "no") + ", " + num(secs) + " s"};
}

Outcome mirror_map_properties() {
    const auto t0 = Clock::now();
    Rng rng(77);
    int bad_bregman = 0, bad_convexity = 0, bad_hessian = 0, bad_separable = 0;
    double worst_fd = 0.0;
    for (int k = 0; k < 10000; ++k) {
        const Eigen::Index rows = 1 + static_cast<Eigen::Index>(rng.index(6)), cols = 1 + static_cast<Eigen::Index>(rng.index(4));
        MirrorMapEN m;
        m.beta = rng.uniform(0.2, 3.0);
        m.alpha = rng.uniform(0.0, 1.0);
        m.eps = std::pow(10.0, rng.uniform(-3.0, -1.0));
        m.xi = Vec(cols);
        for (Eigen::Index c = 0; c < cols; ++c) m.xi(c) = rng.uniform(1.0, 5.0);
        const Mat W = rng.normal_mat(rows, cols), W0 = rng.normal_mat(rows, cols);
        const double d = bregman(m, W, W0);
        if (!(d >= 0.0)) ++bad_bregman;
        if (d < 0.5 * m.modulus() * (W - W0).squaredNorm() * (1.0 - 1e-12)) ++bad_convexity;
        double sum = 0.0;
        for (Eigen::Index c = 0; c < cols; ++c) {
            const Mat K = mirror_hessian_block(m, W, c);
            if (Eigen::SelfAdjointEigenSolver<Mat>(K).eigenvalues().minCoeff() < m.beta * m.xi(c) - kHessianSlack) ++bad_hessian;
            const VecField g = [&m, c](const Vec& w) -> Vec { return m.column_gradient(w, c); };
            const Mat Jn = stencil_jacobian(g, W.col(c), 1e-4);
            worst_fd = std::max(worst_fd, (K - Jn).norm() / K.norm());
            const MirrorMapEN single{m.beta, m.alpha, m.eps, Vec::Constant(1, m.xi(c))};
            sum += bregman(single, W.col(c), W0.col(c));
            Mat W2 = W;
            W2.col((c + 1) % cols) = rng.normal_vec(rows);
            if (cols > 1 && !(mirror_hessian_block(m, W2, c) == K)) ++bad_separable;
        }
        if (sum != d) ++bad_separable;
    }
    const double secs = seconds_since(t0);
    return {bad_bregman == 0 && bad_convexity == 0 && bad_hessian == 0 && bad_separable == 0 && worst_fd < kHessianFdTol &&
                secs < 30.0,
            "violations bregman " + std::to_string(bad_bregman) + " convexity " + std::to_string(bad_convexity) + " hessian " +
                std::to_string(bad_hessian) + " separability " + std::to_string(bad_separable) + ", fd rel error " +
                num(worst_fd) + ", " + num(secs) + " s"};
}

Outcome md_gd_degeneracy() {
    const auto t0 = Clock::now();
    const Setup s = load_setup("md_gd_degenerate.json");
    const SimTrace tr = run(s);
    if (tr.failed) return {false, "run failed: " + tr.failure};
    const ObserverTrace &a = tr.observer("md"), &b = tr.observer("gd");
    if (a.size() != b.size() || a.size() != tr.size()) return {false, "trace lengths differ"};
    double worst = 0.0;
    for (std::size_t k = 0; k < a.size(); ++k) {
        worst = std::max(worst, (a.x_hat[k] - b.x_hat[k]).cwiseAbs().maxCoeff());
        worst = std::max(worst, (a.fa_hat[k] - b.fa_hat[k]).cwiseAbs().maxCoeff());
        worst = std::max(worst, (a.fs_hat[k] - b.fs_hat[k]).cwiseAbs().maxCoeff());
        worst = std::max(worst, (a.W_a[k] - b.W_a[k]).cwiseAbs().maxCoeff());
        worst = std::max(worst, (a.W_s[k] - b.W_s[k]).cwiseAbs().maxCoeff());
    }
    const double secs = seconds_since(t0);
    return {worst <= kDegeneracyTol && tr.t.back() >= 60.0 - 1e-9 && secs < 120.0,
            "max per-step difference " + num(worst) + " over " + num(tr.t.back()) + " s, " + num(secs) + " s"};
}

Outcome contraction() {
    const Setup base = load_setup("contraction.json");
    Setup s = base;
    FaultScenario clean;
    clean.actuator_channels = s.bm.model.actuator_channels();
    clean.sensor_channels = s.bm.model.sensor_channels();
    clean.horizon_s = s.sim.horizon_s;
    s.scenario = clean;
    const double rate = s.obs.design.rate;
    const Mat& M = s.obs.design.M;
    const SimTrace tr = run(s);
    if (tr.failed) return {false, "run failed: " + tr.failure};
    const ObserverTrace& o = tr.observer("md");
    auto mnorm = [&](const Vec& e) { return std::sqrt(e.dot(M * e)); };
    const double e0 = mnorm(tr.x[0] - o.x_hat[0]);
    double worst = 0.0;
    // log-linear least squares while the error is well above round-off
    double st = 0, sl = 0, stt = 0, stl = 0;
    int n = 0;
    for (std::size_t k = 0; k < o.size(); ++k) {
        const double e = mnorm(tr.x[k] - o.x_hat[k]);
        worst = std::max(worst, e / (e0 * std::exp(-rate * tr.t[k])));
        if (e > 1e-9 * e0) {
            const double t = tr.t[k], l = std::log(e);
            st += t;
            sl += l;
            stt += t * t;
            stl += t * l;
            ++n;
        }
    }
    const double fit = n > 1 ? -(n * stl - st * sl) / (n * stt - st * st) : 0.0;
    return {rate > 0.0 && worst <= kContractionSlack && fit >= kDecayFraction * rate,
            "certified rate " + num(rate) + ", max ratio to bound " + num(worst) + ", fitted decay " + num(fit)};
}

Outcome actuator_scenario() {
    const auto t0 = Clock::now();
    const Setup s = load_setup("paper_actuator.json");
    const SimTrace tr = run(s);
    if (tr.failed) return {false, "run failed: " + tr.failure};
    const ObserverTrace& o = tr.observer("md");
    if (o.failed) return {false, "md observer failed: " + o.failure};
    const ObserverMetrics m = compute_metrics(tr, o);
    const double emax = m.e_max.maxCoeff();
    const double e1 = m.actuator[1].eta_ss_error, e2 = m.actuator[2].eta_ss_error;
    const double healthy = 0.5 * (m.actuator[0].mean_abs_fault_period + m.actuator[3].mean_abs_fault_period);
    const double faulty = 0.5 * (m.actuator[1].mean_abs_fault_period + m.actuator[2].mean_abs_fault_period);
    const double secs = seconds_since(t0);
    return {emax < kActuatorMaxErrorRad && e1 <= kEtaTol && e2 <= kEtaTol && healthy < kHealthyRatio * faulty && secs < 180.0,
            "max |e_theta| " + num(emax) + " (bound " + num(kActuatorMaxErrorRad) + "), eta errors " + num(e1) + " " + num(e2) +
                ", healthy/faulty " + num(healthy / faulty) + ", " + num(secs) + " s"};
}

struct CombinedRun {
    Setup setup;
    SimTrace trace;
};

const CombinedRun& combined_run() {
    static const CombinedRun r = [] {
        Setup s = load_setup("paper_combined.json");
        s.sim.store_weights = true;
        SimTrace tr = run(s);
        return CombinedRun{std::move(s), std::move(tr)};
    }();
    return r;
}

Outcome combined_scenario() {
    const CombinedRun& r = combined_run();
    if (r.trace.failed) return {false, "run failed: " + r.trace.failure};
    const ObserverTrace &md = r.trace.observer("md"), &gd = r.trace.observer("gd");
    if (md.failed || gd.failed) return {false, "observer failed"};
    const ObserverMetrics a = compute_metrics(r.trace, md), b = compute_metrics(r.trace, gd);
    const double amp0 = r.setup.scenario.sensor_faults[0].amplitude, amp1 = r.setup.scenario.sensor_faults[1].amplitude;
    const double r0 = a.sensor[0].rms_active / amp0, r1 = a.sensor[1].rms_active / amp1;
    // healthy yaw estimate against the size of the active roll estimate
    const double yaw = a.sensor[2].rms_healthy / a.sensor[0].rms_estimate_active;
    const bool ordinal = a.sensor[0].rms_active < b.sensor[0].rms_active && a.sensor[1].rms_active < b.sensor[1].rms_active &&
                         a.sensor[2].rms_healthy < b.sensor[2].rms_healthy;
    return {r0 <= kSensorRmsRatio && r1 <= kSensorRmsRatio && yaw < kYawRatio && ordinal,
            "roll/pitch rms over amplitude " + num(r0) + " " + num(r1) + ", yaw/roll " + num(yaw) + ", gd roll/pitch " +
                num(b.sensor[0].rms_active / amp0) + " " + num(b.sensor[1].rms_active / amp1) + ", yaw drift md " +
                num(a.sensor[2].rms_healthy) + " gd " + num(b.sensor[2].rms_healthy)};
}

Outcome lyapunov() {
    const CombinedRun& r = combined_run();
    if (r.trace.failed) return {false, "run failed: " + r.trace.failure};
    const ObserverTrace& md = r.trace.observer("md");
    const LyapunovCertificate c = lyapunov_monitor(r.trace, md, r.setup.obs.observers[0].params, 2.0 * r.setup.obs.design.rate);
    const double T = r.trace.t.back();
    bool stays = !std::isnan(c.entry_time);
    for (std::size_t k = 0; k < c.V.size() && stays; ++k)
        if (c.t[k] >= c.entry_time && c.V[k] > kResidualSetSlack * c.ultimate_bound) stays = false;
    return {c.alpha_v > 0.0 && stays && c.entry_time < T && md.guard_activations == 0,
            "alpha_v " + num(c.alpha_v) + ", bound " + num(c.ultimate_bound) + ", entry " + num(c.entry_time) + " s, guard hits " +
                std::to_string(md.guard_activations)};
}

Outcome integrator_order() {
    SpacecraftParams p;
    const SystemModel m = spacecraft_model(p);
    const AttitudeReference ref_traj;
    const Controller ctl = spacecraft_controller(p, ref_traj);
    const FaultScenario clean{4, 3, {}, {}, {}, 10.0};
    Vec x0 = ref_traj.state(0.0);
    x0.tail(3) += Eigen::Vector3d(0.002, -0.001, 0.0015);
    double peak = 0.0;
    auto final_state = [&](double dt) {
        SimConfig c;
        c.dt = dt;
        c.horizon_s = 10.0;
        c.decimation = 1;
        c.x0 = x0;
        c.x_hat0 = x0;
        c.store_weights = false;
        const SimTrace tr = simulate_plant(m, clean, ctl, c);
        for (const Vec& u : tr.u) peak = std::max(peak, u.cwiseAbs().maxCoeff());
        return tr.x.back();
    };
    const Vec ref = final_state(2.5e-4);
    const double dts[3] = {4e-3, 2e-3, 1e-3};
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    std::string errs;
    for (double dt : dts) {
        const double e = (final_state(dt) - ref).norm();
        const double x = std::log(dt), y = std::log(e);
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
        errs += " " + num(e);
    }
    const double slope = (3 * sxy - sx * sy) / (3 * sxx - sx * sx);
    return {std::abs(slope - kSlope) <= kSlopeTol && peak < p.torque_limit,
            "slope " + num(slope) + ", errors" + errs + ", peak torque " + num(peak)};
}

int run_cli(const std::string& args) {
    const std::string cmd = std::string(GFI_CLI) + " " + args + " >/dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

Outcome determinism() {
    const fs::path cfg = config_path("determinism.json");
    const fs::path a = kWork / "det_a", b = kWork / "det_b";
    fs::remove_all(a);
    fs::remove_all(b);
    for (const fs::path& d : {a, b}) {
        for (const char* cmd : {"train", "analyze", "run"}) {
            const int code = run_cli(std::string(cmd) + " --config " + cfg.string() + " --out-dir " + d.string() + " --seed 11");
            if (code != 0) return {false, std::string(cmd) + " exited " + std::to_string(code)};
        }
    }
    int files = 0;
    std::string differing;
    for (const auto& entry : fs::directory_iterator(a)) {
        const fs::path other = b / entry.path().filename();
        ++files;
        if (!fs::exists(other) || read_text_file(entry.path()) != read_text_file(other)) differing += " " + entry.path().filename().string();
    }
    return {files > 0 && differing.empty(),
            std::to_string(files) + " files compared" + (differing.empty() ? "" : ", differing:" + differing)};
}

}  // namespace

int main() {
    fs::create_directories(kWork);
    const std::pair<const char*, Outcome (*)()> criteria[] = {
        {"geometry oracle equivalence", geometry_oracle},
        {"duplicated signature non-isolability", duplicated_signature},
        {"mirror map properties", mirror_map_properties},
        {"md/gd degeneracy", md_gd_degeneracy},
        {"contraction with frozen weights", contraction},
        {"actuator fault scenario", actuator_scenario},
        {"combined fault scenario", combined_scenario},
        {"lyapunov monitor", lyapunov},
        {"rk4 order", integrator_order},
        {"cli determinism", determinism},
    };
    int failed = 0, id = 0;
    for (const auto& [name, fn] : criteria) {
        ++id;
        Outcome o;
        try {
            o = fn();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        if (!o.pass) ++failed;
        std::cout << (o.pass ? "PASS" : "FAIL") << " " << id << " " << name << ": " << o.detail << std::endl;
    }
    std::cout << (10 - failed) << "/10 criteria passed" << std::endl;
    return failed == 0 ? 0 : 1;
}
