// Neural fault-estimating observer: Luenberger-like state estimate with
// additive last-layer fault estimates adapted online by mirror descent (or by
// plain gradient descent as a baseline), plus gain/metric design.
#pragma once

#include "gfi/core.hpp"
#include "gfi/features.hpp"
#include "gfi/integrator.hpp"
#include "gfi/mirror_map.hpp"
#include "gfi/model.hpp"

#include <complex>
#include <memory>

namespace gfi {

enum class AdaptationLaw { mirror_descent, gradient_descent };

inline std::string to_string(AdaptationLaw law) {
    return law == AdaptationLaw::mirror_descent ? "md" : "gd";
}

/**
 * Constant observer data. W_a is n_a x m (one column per actuator channel),
 * W_s is n_s x q (one column per sensor channel).
 */
struct ObserverParams {
    AdaptationLaw law = AdaptationLaw::mirror_descent;
    Mat L;  // n x p
    Mat M;  // n x n, symmetric positive definite
    Vec gamma_a;
    Vec gamma_s;
    double sigma_a = 0.1;
    double sigma_s = 0.1;
    MirrorMapEN map_a;
    MirrorMapEN map_s;
    std::shared_ptr<const FeatureMap> phi_a;
    std::shared_ptr<const FeatureMap> phi_s;
    double weight_bound = 1e3;
    bool adapt = true;  // false freezes W

    void validate(const SystemModel& model) const {
        const int n = model.state_dim, p = model.output_dim;
        require(L.rows() == n && L.cols() == p, "observer gain must be " + std::to_string(n) + "x" + std::to_string(p));
        require(M.rows() == n && M.cols() == n, "metric must be square of state dimension");
        require((M - M.transpose()).norm() <= 1e-9 * (1.0 + M.norm()), "metric must be symmetric");
        Eigen::SelfAdjointEigenSolver<Mat> es(0.5 * (M + M.transpose()));
        require(es.eigenvalues().minCoeff() > 0.0, "metric must be positive definite");
        require(phi_a && phi_s, "observer needs both feature maps");
        require(phi_a->input_dim() == n + model.input_dim && phi_s->input_dim() == n + model.input_dim,
                "feature maps must take (state, input)");
        require(gamma_a.size() == model.actuator_channels() && gamma_s.size() == model.sensor_channels(),
                "one adaptation gain per fault channel");
        require(gamma_a.size() == 0 || gamma_a.minCoeff() > 0.0, "actuator adaptation gains must be positive");
        require(gamma_s.size() == 0 || gamma_s.minCoeff() > 0.0, "sensor adaptation gains must be positive");
        require(sigma_a >= 0.0 && sigma_s >= 0.0, "leakage must be non-negative");
        require(weight_bound > 0.0, "weight bound must be positive");
        map_a.validate();
        map_s.validate();
        require(map_a.columns() == model.actuator_channels(), "actuator mirror map needs one xi per channel");
        require(map_s.columns() == model.sensor_channels(), "sensor mirror map needs one xi per channel");
    }
};

struct ObserverState {
    Vec x_hat;
    Mat W_a;
    Mat W_s;
    int guard_activations = 0;
};

inline ObserverState initial_observer_state(const SystemModel& model, const ObserverParams& params, const Vec& x_hat0) {
    detail::check_dim(x_hat0, model.state_dim, "initial estimate");
    return {x_hat0, Mat::Zero(params.phi_a->output_dim(), model.actuator_channels()),
            Mat::Zero(params.phi_s->output_dim(), model.sensor_channels()), 0};
}

struct AdaptationSignals {
    Vec r;  // y - y_hat
    Vec z;  // g(x_hat)^T M L r
    double loss() const { return 0.5 * r.squaredNorm(); }
};

struct ObserverRates {
    Vec dx_hat;
    Mat dW_a;
    Mat dW_s;
    AdaptationSignals signals;
    Vec fa_hat;
    Vec fs_hat;
};

inline Vec feature_input(const Vec& x, const Vec& u) {
    Vec in(x.size() + u.size());
    in << x, u;
    return in;
}

inline Vec observer_output(const SystemModel& model, const ObserverParams& params, const Vec& x_hat, const Mat& W_s,
                           const Vec& u) {
    const Vec fs_hat = W_s.transpose() * params.phi_s->evaluate(feature_input(x_hat, u));
    return eval_output(model, x_hat, fs_hat);
}

// Right-hand side of the observer and both adaptation laws.
inline ObserverRates observer_rates(const SystemModel& model, const ObserverParams& params, const Vec& x_hat,
                                    const Mat& W_a, const Mat& W_s, const Vec& y, const Vec& u) {
    detail::check_dim(y, model.output_dim, "measurement");
    const Vec in = feature_input(x_hat, u);
    const Vec pa = params.phi_a->evaluate(in);
    const Vec ps = params.phi_s->evaluate(in);

    ObserverRates out;
    out.fa_hat = W_a.transpose() * pa;
    out.fs_hat = W_s.transpose() * ps;
    const Vec y_hat = eval_output(model, x_hat, out.fs_hat);
    out.signals.r = y - y_hat;
    const Mat Gf = model.actuator_fault_matrix(x_hat);
    const Vec Lr = params.L * out.signals.r;
    out.signals.z = Gf.transpose() * (params.M * Lr);

    out.dx_hat = eval_dynamics(model, x_hat, u, out.fa_hat, Vec::Zero(model.state_dim)) + Lr;

    out.dW_a = Mat::Zero(W_a.rows(), W_a.cols());
    out.dW_s = Mat::Zero(W_s.rows(), W_s.cols());
    if (!params.adapt) return out;
    const Vec rs = model.sensor_fault_matrix().transpose() * out.signals.r;
    const bool md = params.law == AdaptationLaw::mirror_descent;
    for (Eigen::Index i = 0; i < W_a.cols(); ++i) {
        const Vec step = -params.gamma_a(i) * out.signals.z(i) * pa;
        out.dW_a.col(i) = (md ? params.map_a.solve_block(W_a.col(i), i, step) : step) - params.sigma_a * W_a.col(i);
    }
    for (Eigen::Index j = 0; j < W_s.cols(); ++j) {
        const Vec step = params.gamma_s(j) * rs(j) * ps;
        out.dW_s.col(j) = (md ? params.map_s.solve_block(W_s.col(j), j, step) : step) - params.sigma_s * W_s.col(j);
    }
    return out;
}

// Stacked layout [x_hat; vec(W_a); vec(W_s)] used by the integrators.
inline Eigen::Index packed_size(const ObserverState& s) { return s.x_hat.size() + s.W_a.size() + s.W_s.size(); }

inline void pack_into(const ObserverState& s, Eigen::Ref<Vec> out) {
    const Eigen::Index n = s.x_hat.size(), na = s.W_a.size();
    out.head(n) = s.x_hat;
    out.segment(n, na) = s.W_a.reshaped();
    out.segment(n + na, s.W_s.size()) = s.W_s.reshaped();
}

inline void unpack_from(const Eigen::Ref<const Vec>& in, ObserverState& s) {
    const Eigen::Index n = s.x_hat.size(), na = s.W_a.size();
    s.x_hat = in.head(n);
    s.W_a = in.segment(n, na).reshaped(s.W_a.rows(), s.W_a.cols());
    s.W_s = in.segment(n + na, s.W_s.size()).reshaped(s.W_s.rows(), s.W_s.cols());
}

inline void pack_rates(const ObserverRates& r, Eigen::Ref<Vec> out) {
    const Eigen::Index n = r.dx_hat.size(), na = r.dW_a.size();
    out.head(n) = r.dx_hat;
    out.segment(n, na) = r.dW_a.reshaped();
    out.segment(n + na, r.dW_s.size()) = r.dW_s.reshaped();
}

// Clamp each weight column into the norm ball; returns the number of clamps.
inline int apply_weight_guard(ObserverState& s, double bound) {
    int hits = 0;
    for (Mat* W : {&s.W_a, &s.W_s})
        for (Eigen::Index j = 0; j < W->cols(); ++j) {
            const double nrm = W->col(j).norm();
            if (nrm > bound) {
                W->col(j) *= bound / nrm;
                ++hits;
            }
        }
    s.guard_activations += hits;
    return hits;
}

inline void check_observer_finite(const ObserverState& s, double t) {
    if (!s.x_hat.allFinite()) throw ObserverDiverged(t, "observer state became non-finite");
    if (!s.W_a.allFinite() || !s.W_s.allFinite()) throw ObserverDiverged(t, "observer weights became non-finite");
}

struct StepResult {
    ObserverState state;
    AdaptationSignals signals;  // at the start of the step
};

/**
 * One RK4 step of the observer with the measurement and input held over the
 * step. The co-simulation in sim.hpp integrates plant and observer jointly
 * instead, re-evaluating y and u at every stage.
 */
inline StepResult observer_step(const SystemModel& model, const ObserverParams& params, const ObserverState& state,
                                const Vec& y, const Vec& u, double dt, double t = 0.0) {
    require(dt > 0.0, "time step must be positive");
    ObserverState scratch = state;
    AdaptationSignals sig;
    auto rhs = [&](double, const Vec& v) {
        unpack_from(v, scratch);
        const ObserverRates r = observer_rates(model, params, scratch.x_hat, scratch.W_a, scratch.W_s, y, u);
        Vec out(v.size());
        pack_rates(r, out);
        return out;
    };
    Vec v(packed_size(state));
    pack_into(state, v);
    sig = observer_rates(model, params, state.x_hat, state.W_a, state.W_s, y, u).signals;
    const Vec next = rk4_step(rhs, t, v, dt);
    StepResult res{state, std::move(sig)};
    unpack_from(next, res.state);
    check_observer_finite(res.state, t + dt);
    apply_weight_guard(res.state, params.weight_bound);
    return res;
}

inline StepResult gd_baseline_step(const SystemModel& model, ObserverParams params, const ObserverState& state,
                                   const Vec& y, const Vec& u, double dt, double t = 0.0) {
    params.law = AdaptationLaw::gradient_descent;
    return observer_step(model, params, state, y, u, dt, t);
}

// =============================================================================
// Gain and metric design
// =============================================================================

// A^T X + X A = -Q via the Kronecker form.
inline Mat solve_lyapunov(const Mat& A, const Mat& Q) {
    require(A.rows() == A.cols() && Q.rows() == A.rows() && Q.cols() == A.cols(), "Lyapunov dimensions mismatch");
    const Eigen::Index n = A.rows();
    const Mat I = Mat::Identity(n, n);
    Mat K = Mat::Zero(n * n, n * n);
    const Mat At = A.transpose();
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j < n; ++j) {
            K.block(i * n, j * n, n, n) += At * I(i, j);
            K.block(i * n, j * n, n, n) += I * At(i, j);
        }
    Eigen::FullPivLU<Mat> lu(K);
    if (!lu.isInvertible()) throw DesignInfeasible("Lyapunov operator is singular");
    const Vec x = lu.solve(-Q.reshaped());
    const Mat X = x.reshaped(n, n);
    return 0.5 * (X + X.transpose());
}

inline double spectral_abscissa(const Mat& A) {
    return Eigen::EigenSolver<Mat>(A, false).eigenvalues().real().maxCoeff();
}

// PBH test for detectability of (A + shift I, C): every mode with real part
// >= -shift must be visible in C.
inline bool is_detectable(const Mat& A, const Mat& C, double shift = 0.0) {
    using Cplx = std::complex<double>;
    Eigen::ComplexEigenSolver<Mat> es(A);
    const Eigen::Index n = A.rows();
    const double scale = 1.0 + A.norm() + C.norm();
    for (Eigen::Index k = 0; k < n; ++k) {
        const Cplx mu = es.eigenvalues()(k);
        if (mu.real() < -shift - 1e-9 * scale) continue;
        Eigen::MatrixXcd P(n + C.rows(), n);
        P.topRows(n) = A.cast<Cplx>() - mu * Eigen::MatrixXcd::Identity(n, n);
        P.bottomRows(C.rows()) = C.cast<Cplx>();
        const Eigen::VectorXd sv = Eigen::JacobiSVD<Eigen::MatrixXcd>(P).singularValues();
        if (sv(n - 1) < 1e-9 * scale) return false;
    }
    return true;
}

/**
 * Stabilizing solution of A^T X + X A - X G X + Q = 0 through the matrix sign
 * function of the Hamiltonian [A -G; -Q -A^T] with determinant scaling.
 */
inline Mat solve_care(const Mat& A, const Mat& G, const Mat& Q) {
    const Eigen::Index n = A.rows();
    Mat H(2 * n, 2 * n);
    H << A, -G, -Q, -A.transpose();
    Mat Z = H;
    for (int it = 0; it < 100; ++it) {
        Eigen::PartialPivLU<Mat> lu(Z);
        const double det = std::abs(lu.determinant());
        if (!(det > 0.0) || !std::isfinite(det)) throw DesignInfeasible("Hamiltonian has eigenvalues on the imaginary axis");
        const double c = std::pow(det, -1.0 / static_cast<double>(2 * n));
        const Mat next = 0.5 * (c * Z + lu.inverse() / c);
        const double change = (next - Z).norm() / (1.0 + Z.norm());
        Z = next;
        if (change < 1e-13) break;
    }
    Mat lhs(2 * n, n), rhs(2 * n, n);
    lhs << Z.topRightCorner(n, n), Z.bottomRightCorner(n, n) + Mat::Identity(n, n);
    rhs << -(Z.topLeftCorner(n, n) + Mat::Identity(n, n)), -Z.bottomLeftCorner(n, n);
    const Mat X = lhs.colPivHouseholderQr().solve(rhs);
    if (!X.allFinite()) throw DesignInfeasible("Riccati solution is not finite");
    return 0.5 * (X + X.transpose());
}

// Linearization of the observer error dynamics: df/dx + sum_k dg_k/dx u_k.
inline Mat state_jacobian(const SystemModel& model, const Vec& x, const Vec& u) {
    Mat A = model.drift_jac(x);
    for (int k = 0; k < model.input_dim; ++k)
        if (u(k) != 0.0) A += model.control_jac(k, x) * u(k);
    return A;
}

// Largest rate lambda with A^T M + M A <= -2 lambda M.
inline double contraction_rate(const Mat& A, const Mat& M) {
    Eigen::SelfAdjointEigenSolver<Mat> es(M);
    const Mat Misqrt = es.operatorInverseSqrt();
    const Mat S = Misqrt * (A.transpose() * M + M * A) * Misqrt;
    return -0.5 * Eigen::SelfAdjointEigenSolver<Mat>(0.5 * (S + S.transpose())).eigenvalues().maxCoeff();
}

struct GainDesignOptions {
    double q_weight = 1.0;       // state weight of the dual Riccati design
    double r_weight = 1.0;       // output weight
    double metric_q = 1.0;       // Q in the metric equation
    bool operator==(const GainDesignOptions&) const = default;
};

struct MetricDesign {
    Mat L;
    Mat M;
    double rate = 0.0;          // verified contraction rate over the samples
    double linear_rate = 0.0;   // rate at the operating point
};

struct OperatingSample {
    Vec x;
    Vec u;
};

/**
 * Solves (A_L + lambda I)^T M + M (A_L + lambda I) = -Q for a given gain and
 * certifies the contraction rate at the operating point and each sample.
 */
inline MetricDesign certify_gain(const SystemModel& model, const Vec& x_op, const Vec& u_op, const Mat& L,
                                 double lambda_target, const std::vector<OperatingSample>& samples = {},
                                 const GainDesignOptions& opt = {}) {
    require(lambda_target >= 0.0, "target rate must be non-negative");
    const Eigen::Index n = model.state_dim;
    const Mat C = model.output_jac(x_op);
    const Mat AL = state_jacobian(model, x_op, u_op) - L * C;
    if (spectral_abscissa(AL) >= -lambda_target)
        throw DesignInfeasible("gain does not place the error dynamics left of -lambda_target");
    MetricDesign d;
    d.L = L;
    d.M = solve_lyapunov(AL + lambda_target * Mat::Identity(n, n), opt.metric_q * Mat::Identity(n, n));
    d.linear_rate = contraction_rate(AL, d.M);
    d.rate = d.linear_rate;
    std::vector<Vec> bad;
    for (const auto& s : samples) {
        const Mat A = state_jacobian(model, s.x, s.u) - L * model.output_jac(s.x);
        const double rate = contraction_rate(A, d.M);
        if (!(rate > 0.0)) bad.push_back(s.x);
        d.rate = std::min(d.rate, rate);
    }
    if (!bad.empty())
        throw MetricVerificationError("contraction inequality fails at " + std::to_string(bad.size()) + " sampled states",
                                      std::move(bad));
    return d;
}

/**
 * Gain from the dual Riccati equation on the linearization shifted by
 * lambda_target, so that A - L C has spectral abscissa below -lambda_target,
 * followed by the metric solve and sample verification.
 */
inline MetricDesign design_metric_and_gain(const SystemModel& model, const Vec& x_op, const Vec& u_op,
                                           double lambda_target, const std::vector<OperatingSample>& samples = {},
                                           const GainDesignOptions& opt = {}) {
    require(lambda_target >= 0.0, "target rate must be non-negative");
    require(opt.q_weight > 0.0 && opt.r_weight > 0.0 && opt.metric_q > 0.0, "design weights must be positive");
    const Eigen::Index n = model.state_dim;
    const Mat A = state_jacobian(model, x_op, u_op);
    const Mat C = model.output_jac(x_op);
    if (!is_detectable(A, C, lambda_target))
        throw DesignInfeasible("linearization (A, C) is not detectable at the requested rate");
    const Mat As = A + lambda_target * Mat::Identity(n, n);
    const Mat G = C.transpose() * C / opt.r_weight;
    const Mat P = solve_care(As.transpose(), G, opt.q_weight * Mat::Identity(n, n));
    const Mat L = P * C.transpose() / opt.r_weight;
    return certify_gain(model, x_op, u_op, L, lambda_target, samples, opt);
}

// xi_i = xi_min + (xi_max - xi_min)(1 - theta_i / (pi/2)).
inline Vec design_xi_from_angles(const Vec& theta_lb, double xi_min, double xi_max) {
    require(xi_min > 0.0 && xi_min < xi_max, "xi range must satisfy 0 < xi_min < xi_max");
    Vec xi(theta_lb.size());
    for (Eigen::Index i = 0; i < theta_lb.size(); ++i) {
        const double th = theta_lb(i);
        if (!(th >= 0.0 && th <= kHalfPi + 1e-12))
            throw InvalidArgument("angle lower bound " + std::to_string(th) + " outside [0, pi/2]");
        xi(i) = xi_min + (xi_max - xi_min) * (1.0 - std::min(th, kHalfPi) / kHalfPi);
    }
    return xi;
}

}  // namespace gfi
