// Control-affine plant models with actuator/sensor fault channels, fault
// schedules, and the reaction-wheel spacecraft instance.
#pragma once

#include "gfi/core.hpp"
#include "gfi/numdiff.hpp"

#include <algorithm>
#include <functional>
#include <optional>
#include <utility>

namespace gfi {

/**
 * x' = f(x) + sum_k g_k(x) u_k + sum_i g^f_i(x) fa_i + d
 * y  = h(x) + sum_j e_j fs_j
 *
 * Analytic Jacobians are optional; missing ones fall back to central
 * differences with step 1e-6*(1+|x|).
 */
struct SystemModel {
    int state_dim = 0;
    int input_dim = 0;
    int output_dim = 0;

    VecField drift;
    std::vector<VecField> control_fields;
    std::vector<VecField> actuator_fault_fields;
    std::vector<Vec> sensor_fault_dirs;
    VecField output_map;

    JacField drift_jacobian;
    std::vector<JacField> control_jacobians;
    JacField output_jacobian;

    int actuator_channels() const { return static_cast<int>(actuator_fault_fields.size()); }
    int sensor_channels() const { return static_cast<int>(sensor_fault_dirs.size()); }

    void validate() const {
        require(state_dim > 0 && input_dim > 0 && output_dim > 0, "model dimensions must be positive");
        require(static_cast<int>(control_fields.size()) == input_dim,
                "model needs one control field per input");
        require(drift && output_map, "model needs drift and output map");
        for (const auto& e : sensor_fault_dirs) {
            require(e.size() == output_dim, "sensor fault direction has wrong dimension");
            require(e.norm() > 0.0, "sensor fault direction must be nonzero");
        }
        require(control_jacobians.empty() || static_cast<int>(control_jacobians.size()) == input_dim,
                "control Jacobians must be given for all inputs or none");
    }

    Mat input_matrix(const Vec& x) const {
        Mat G(state_dim, input_dim);
        for (int k = 0; k < input_dim; ++k) G.col(k) = control_fields[static_cast<std::size_t>(k)](x);
        return G;
    }

    Mat actuator_fault_matrix(const Vec& x) const {
        Mat G(state_dim, actuator_channels());
        for (int i = 0; i < actuator_channels(); ++i)
            G.col(i) = actuator_fault_fields[static_cast<std::size_t>(i)](x);
        return G;
    }

    Mat sensor_fault_matrix() const {
        Mat E(output_dim, sensor_channels());
        for (int j = 0; j < sensor_channels(); ++j) E.col(j) = sensor_fault_dirs[static_cast<std::size_t>(j)];
        return E;
    }

    Mat drift_jac(const Vec& x) const {
        return drift_jacobian ? drift_jacobian(x) : central_jacobian(drift, x);
    }

    Mat control_jac(int k, const Vec& x) const {
        if (!control_jacobians.empty() && control_jacobians[static_cast<std::size_t>(k)])
            return control_jacobians[static_cast<std::size_t>(k)](x);
        return central_jacobian(control_fields[static_cast<std::size_t>(k)], x);
    }

    Mat output_jac(const Vec& x) const {
        return output_jacobian ? output_jacobian(x) : central_jacobian(output_map, x);
    }

    bool has_analytic_output_jacobian() const { return static_cast<bool>(output_jacobian); }
};

namespace detail {
inline void check_dim(const Vec& v, int n, const char* what) {
    if (v.size() != n)
        throw InvalidArgument(std::string(what) + " has dimension " + std::to_string(v.size()) +
                              ", expected " + std::to_string(n));
}
}  // namespace detail

inline Vec eval_dynamics(const SystemModel& model, const Vec& x, const Vec& u, const Vec& fa, const Vec& d) {
    detail::check_dim(x, model.state_dim, "state");
    detail::check_dim(u, model.input_dim, "input");
    detail::check_dim(fa, model.actuator_channels(), "actuator fault vector");
    detail::check_dim(d, model.state_dim, "disturbance");
    Vec dx = model.drift(x) + d;
    for (int k = 0; k < model.input_dim; ++k)
        if (u(k) != 0.0) dx += model.control_fields[static_cast<std::size_t>(k)](x) * u(k);
    for (int i = 0; i < model.actuator_channels(); ++i)
        if (fa(i) != 0.0) dx += model.actuator_fault_fields[static_cast<std::size_t>(i)](x) * fa(i);
    if (!dx.allFinite()) throw NumericalDomainError("non-finite state derivative");
    return dx;
}

inline Vec eval_output(const SystemModel& model, const Vec& x, const Vec& fs) {
    detail::check_dim(x, model.state_dim, "state");
    detail::check_dim(fs, model.sensor_channels(), "sensor fault vector");
    Vec y = model.output_map(x);
    for (int j = 0; j < model.sensor_channels(); ++j) y += model.sensor_fault_dirs[static_cast<std::size_t>(j)] * fs(j);
    return y;
}

// x' = A x + B u + Bf fa,  y = C x + E fs.
inline SystemModel linear_model(const Mat& A, const Mat& B, const Mat& C, const Mat& Bf, const Mat& E) {
    require(A.rows() == A.cols(), "A must be square");
    require(B.rows() == A.rows() && C.cols() == A.rows(), "B/C dimensions do not match A");
    require(Bf.rows() == A.rows() || Bf.size() == 0, "actuator signature rows must match state dim");
    require(E.rows() == C.rows() || E.size() == 0, "sensor directions must match output dim");
    SystemModel m;
    m.state_dim = static_cast<int>(A.rows());
    m.input_dim = static_cast<int>(B.cols());
    m.output_dim = static_cast<int>(C.rows());
    m.drift = [A](const Vec& x) -> Vec { return A * x; };
    m.drift_jacobian = [A](const Vec&) -> Mat { return A; };
    for (Eigen::Index k = 0; k < B.cols(); ++k) {
        Vec b = B.col(k);
        m.control_fields.push_back([b](const Vec&) -> Vec { return b; });
        m.control_jacobians.push_back([n = A.rows()](const Vec&) -> Mat { return Mat::Zero(n, n); });
    }
    for (Eigen::Index i = 0; i < Bf.cols(); ++i) {
        Vec b = Bf.col(i);
        m.actuator_fault_fields.push_back([b](const Vec&) -> Vec { return b; });
    }
    for (Eigen::Index j = 0; j < E.cols(); ++j) m.sensor_fault_dirs.push_back(E.col(j));
    m.output_map = [C](const Vec& x) -> Vec { return C * x; };
    m.output_jacobian = [C](const Vec&) -> Mat { return C; };
    m.validate();
    return m;
}

// =============================================================================
// Fault schedules
// =============================================================================

// Loss of effectiveness on one actuator channel over [start, end).
struct ActuatorFault {
    int channel = 0;  // zero-based
    double effectiveness = 1.0;
    double start_s = 0.0;
    double end_s = 0.0;

    bool active(double t) const { return t >= start_s && t < end_s; }
    bool operator==(const ActuatorFault&) const = default;
};

// Additive sinusoid amplitude*sin(omega*(t-start) + phase) over [start, end).
struct SensorFault {
    int channel = 0;
    double amplitude = 0.0;
    double omega_rad_s = 0.0;
    double phase_rad = 0.0;
    double start_s = 0.0;
    double end_s = 0.0;

    bool active(double t) const { return t >= start_s && t < end_s; }
    double value(double t) const {
        return active(t) ? amplitude * std::sin(omega_rad_s * (t - start_s) + phase_rad) : 0.0;
    }
    bool operator==(const SensorFault&) const = default;
};

// Bounded smooth disturbance: per-component sums of sinusoids with seeded
// phases, scaled so that |d(t)| <= 0.9*bound.
struct Disturbance {
    double bound = 0.0;
    std::uint64_t seed = 1;
    Vec mask;  // which state components are disturbed; empty = all

    bool operator==(const Disturbance& o) const {
        return bound == o.bound && seed == o.seed && mask.size() == o.mask.size() &&
               (mask.size() == 0 || mask == o.mask);
    }

    Vec value(double t, int n) const {
        Vec d = Vec::Zero(n);
        if (bound <= 0.0) return d;
        Rng rng(seed);
        int active = 0;
        for (int k = 0; k < n; ++k)
            if (mask.size() == 0 || mask(k) != 0.0) ++active;
        if (active == 0) return d;
        const double per = 0.9 * bound / std::sqrt(static_cast<double>(active));
        for (int k = 0; k < n; ++k) {
            double acc = 0.0;
            for (int h = 0; h < 3; ++h) {
                const double w = rng.uniform(0.05, 1.0);
                const double ph = rng.uniform(0.0, 2.0 * std::numbers::pi);
                acc += std::sin(w * t + ph) / 3.0;
            }
            if (mask.size() == 0 || mask(k) != 0.0) d(k) = per * acc;
        }
        return d;
    }
};

struct FaultScenario {
    int actuator_channels = 0;
    int sensor_channels = 0;
    std::vector<ActuatorFault> actuator_faults;
    std::vector<SensorFault> sensor_faults;
    Disturbance disturbance;
    double horizon_s = 60.0;

    bool operator==(const FaultScenario&) const = default;

    void validate() const {
        for (const auto& f : actuator_faults) {
            require(f.channel >= 0 && f.channel < actuator_channels, "actuator fault channel out of range");
            require(f.effectiveness >= 0.0 && f.effectiveness <= 1.0, "effectiveness must lie in [0,1]");
            require(f.end_s >= f.start_s, "actuator fault window reversed");
        }
        for (const auto& f : sensor_faults) {
            require(f.channel >= 0 && f.channel < sensor_channels, "sensor fault channel out of range");
            require(f.end_s >= f.start_s, "sensor fault window reversed");
        }
        require(horizon_s > 0.0, "scenario horizon must be positive");
    }

    Vec effectiveness(double t) const {
        Vec eta = Vec::Ones(actuator_channels);
        for (const auto& f : actuator_faults)
            if (f.active(t)) eta(f.channel) = f.effectiveness;
        return eta;
    }

    // fa_i = (eta_i - 1) u_i on the commanded input.
    Vec actuator_fault(double t, const Vec& u) const {
        require(u.size() == actuator_channels, "loss-of-effectiveness needs one input per actuator channel");
        return ((effectiveness(t).array() - 1.0) * u.array()).matrix();
    }

    Vec sensor_fault(double t) const {
        Vec fs = Vec::Zero(sensor_channels);
        for (const auto& f : sensor_faults) fs(f.channel) += f.value(t);
        return fs;
    }

    bool actuator_active(int channel, double t) const {
        return std::any_of(actuator_faults.begin(), actuator_faults.end(),
                           [&](const ActuatorFault& f) { return f.channel == channel && f.active(t); });
    }

    bool sensor_active(int channel, double t) const {
        return std::any_of(sensor_faults.begin(), sensor_faults.end(),
                           [&](const SensorFault& f) { return f.channel == channel && f.active(t); });
    }
};

// =============================================================================
// Spacecraft with four reaction wheels
// =============================================================================

// Symmetric pyramid; column i is the unit spin axis of wheel i.
inline Eigen::Matrix<double, 3, 4> pyramid_wheel_config(double elevation_rad = std::atan(1.0 / std::sqrt(2.0))) {
    Eigen::Matrix<double, 3, 4> A;
    const double c = std::cos(elevation_rad), s = std::sin(elevation_rad);
    for (int i = 0; i < 4; ++i) {
        const double az = std::numbers::pi / 4.0 + i * std::numbers::pi / 2.0;
        A.col(i) << c * std::cos(az), c * std::sin(az), s;
    }
    return A;
}

struct SpacecraftParams {
    Eigen::Matrix3d inertia = Eigen::Vector3d(1.0, 1.0, 0.8).asDiagonal();
    double wheel_inertia = 0.01;
    double torque_limit = 0.14;
    Eigen::Matrix<double, 3, 4> wheel_config = pyramid_wheel_config();
    Eigen::Matrix3d kp = Eigen::Vector3d(22.5, 18.0, 15.0).asDiagonal();
    Eigen::Matrix3d kd = Eigen::Vector3d(12.0, 9.0, 7.5).asDiagonal();

    void validate() const {
        Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> es(0.5 * (inertia + inertia.transpose()));
        require(es.eigenvalues().minCoeff() > 0.0, "inertia must be positive definite");
        require(torque_limit > 0.0, "torque limit must be positive");
        require(wheel_inertia > 0.0, "wheel inertia must be positive");
        const Eigen::JacobiSVD<Mat> svd{Mat(wheel_config)};
        require(svd.singularValues().minCoeff() > 1e-10 * svd.singularValues().maxCoeff(),
                "wheel configuration must have full row rank");
    }
};

inline Eigen::Matrix3d skew(const Eigen::Vector3d& v) {
    Eigen::Matrix3d S;
    S << 0.0, -v.z(), v.y(), v.z(), 0.0, -v.x(), -v.y(), v.x(), 0.0;
    return S;
}

/**
 * State (theta, omega) with small-angle kinematics theta' = omega and Euler's
 * equations I omega' = -omega x I omega + A u. Four actuator channels reuse
 * the wheel input fields; sensor channels are the three attitude outputs.
 */
inline SystemModel spacecraft_model(const SpacecraftParams& params) {
    Eigen::FullPivLU<Eigen::Matrix3d> lu(params.inertia);
    if (!lu.isInvertible()) throw InvalidArgument("spacecraft inertia is singular");
    params.validate();
    const Eigen::Matrix3d I = params.inertia;
    const Eigen::Matrix3d Iinv = lu.inverse();

    SystemModel m;
    m.state_dim = 6;
    m.input_dim = 4;
    m.output_dim = 3;
    m.drift = [I, Iinv](const Vec& x) -> Vec {
        const Eigen::Vector3d w = x.segment<3>(3);
        Vec dx(6);
        dx.head<3>() = w;
        dx.tail<3>() = -Iinv * w.cross(I * w);
        return dx;
    };
    m.drift_jacobian = [I, Iinv](const Vec& x) -> Mat {
        const Eigen::Vector3d w = x.segment<3>(3);
        Mat J = Mat::Zero(6, 6);
        J.block<3, 3>(0, 3) = Eigen::Matrix3d::Identity();
        J.block<3, 3>(3, 3) = -Iinv * (skew(w) * I - skew(I * w));
        return J;
    };
    for (int k = 0; k < 4; ++k) {
        Vec g = Vec::Zero(6);
        g.tail<3>() = Iinv * params.wheel_config.col(k);
        m.control_fields.push_back([g](const Vec&) -> Vec { return g; });
        m.control_jacobians.push_back([](const Vec&) -> Mat { return Mat::Zero(6, 6); });
        m.actuator_fault_fields.push_back([g](const Vec&) -> Vec { return g; });
    }
    for (int j = 0; j < 3; ++j) m.sensor_fault_dirs.push_back(Vec::Unit(3, j));
    m.output_map = [](const Vec& x) -> Vec { return x.head(3); };
    m.output_jacobian = [](const Vec&) -> Mat {
        Mat C = Mat::Zero(3, 6);
        C.leftCols(3).setIdentity();
        return C;
    };
    m.validate();
    return m;
}

// PD attitude torque before allocation.
inline Eigen::Vector3d body_torque_command(const SpacecraftParams& params, const Vec& x, const Vec& x_ref) {
    detail::check_dim(x, 6, "state");
    detail::check_dim(x_ref, 6, "reference state");
    return -params.kp * (x.head<3>() - x_ref.head<3>()) - params.kd * (x.tail<3>() - x_ref.tail<3>());
}

// Wheel commands: pseudoinverse allocation, each clipped to the torque limit.
inline Vec nominal_controller(const SpacecraftParams& params, const Vec& x, const Vec& x_ref) {
    const Eigen::Vector3d tau = body_torque_command(params, x, x_ref);
    const Mat A = params.wheel_config;
    const Mat pinv = A.transpose() * (A * A.transpose()).inverse();
    Vec u = pinv * tau;
    for (Eigen::Index i = 0; i < u.size(); ++i) u(i) = std::clamp(u(i), -params.torque_limit, params.torque_limit);
    return u;
}

struct AttitudeReference {
    enum class Kind { slew, sinusoid };
    Kind kind = Kind::sinusoid;
    Eigen::Vector3d target_rad = Eigen::Vector3d(0.2, -0.15, 0.1);  // slew
    Eigen::Vector3d amplitude_rad = Eigen::Vector3d(0.1, 0.08, 0.06);
    Eigen::Vector3d omega_rad_s = Eigen::Vector3d(0.5, 0.35, 0.42);
    Eigen::Vector3d phase_rad = Eigen::Vector3d(0.0, 1.0, 2.0);

    bool operator==(const AttitudeReference&) const = default;

    // (theta_ref, theta_ref')
    Vec state(double t) const {
        Vec r = Vec::Zero(6);
        if (kind == Kind::slew) {
            r.head<3>() = target_rad;
            return r;
        }
        for (int k = 0; k < 3; ++k) {
            const double arg = omega_rad_s(k) * t + phase_rad(k);
            r(k) = amplitude_rad(k) * std::sin(arg);
            r(3 + k) = amplitude_rad(k) * omega_rad_s(k) * std::cos(arg);
        }
        return r;
    }
};

using Controller = std::function<Vec(double, const Vec&)>;

inline Controller spacecraft_controller(SpacecraftParams params, AttitudeReference ref) {
    return [params = std::move(params), ref = std::move(ref)](double t, const Vec& x) {
        return nominal_controller(params, x, ref.state(t));
    };
}

}  // namespace gfi
