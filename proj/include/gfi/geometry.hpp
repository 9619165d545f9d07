// Fault signature geometry in the stacked output-derivative space: relative
// degrees, first-order variation of (y, y', ..., y^(R)), signature and residue
// subspaces, principal angles, and the isolability verdicts built on them.
#pragma once

#include "gfi/core.hpp"
#include "gfi/model.hpp"
#include "gfi/numdiff.hpp"

#include <algorithm>
#include <sstream>

namespace gfi {

struct LieOptions {
    double step = 1e-3;         // relative five-point step at every nesting level
    double nonzero_tol = 1e-8;  // |L_g L_f^(r-1) h| > tol*(1+|x|) counts as nonzero
    int max_order = 4;
};

struct RelativeDegrees {
    std::vector<int> per_output;
    int order = 0;  // R = max over outputs
};

struct DiffMapJacobians {
    int order = 0;
    int output_dim = 0;
    Mat C_R;                 // p(R+1) x n
    std::vector<Vec> F_a;    // one column per actuator channel
    std::vector<Vec> E_s;    // one column per sensor channel
    Vec x_star;
    Vec u_star;

    Eigen::Index rows() const { return static_cast<Eigen::Index>(output_dim) * (order + 1); }
};

namespace detail {

inline VecField closed_field(const SystemModel& model, const Vec& u, const Vec& fa) {
    return [&model, u, fa](const Vec& x) -> Vec {
        Vec dx = model.drift(x);
        for (int k = 0; k < model.input_dim; ++k)
            if (u(k) != 0.0) dx += model.control_fields[static_cast<std::size_t>(k)](x) * u(k);
        for (int i = 0; i < model.actuator_channels(); ++i)
            if (fa(i) != 0.0) dx += model.actuator_fault_fields[static_cast<std::size_t>(i)](x) * fa(i);
        return dx;
    };
}

// x -> y^(k) for frozen input and fault signals (sensor term omitted: it only
// contributes to block 0).
inline VecField stacked_derivative(const SystemModel& model, const VecField& field, int k, const LieOptions& opt) {
    VecField phi = model.output_map;
    if (k == 0) return phi;
    if (model.has_analytic_output_jacobian()) {
        phi = [&model, field](const Vec& x) -> Vec { return model.output_jacobian(x) * field(x); };
    } else {
        phi = directional_derivative(phi, field, opt.step);
    }
    for (int level = 2; level <= k; ++level) phi = directional_derivative(phi, field, opt.step);
    return phi;
}

}  // namespace detail

/**
 * Smallest r with L_{g_k} L_f^(r-1) h_l(x*) != 0 for some input k, per output.
 * Throws NotFiniteRelativeDegree when an output has none up to max_order.
 */
inline RelativeDegrees relative_degrees(const SystemModel& model, const Vec& x_star, const LieOptions& opt = {}) {
    model.validate();
    detail::check_dim(x_star, model.state_dim, "state");
    const Vec zero_u = Vec::Zero(model.input_dim);
    const Vec zero_fa = Vec::Zero(model.actuator_channels());
    const VecField drift_only = detail::closed_field(model, zero_u, zero_fa);
    const double tol = opt.nonzero_tol * (1.0 + x_star.norm());

    RelativeDegrees out;
    out.per_output.assign(static_cast<std::size_t>(model.output_dim), 0);
    int remaining = model.output_dim;
    for (int r = 1; r <= opt.max_order && remaining > 0; ++r) {
        const VecField lfh = detail::stacked_derivative(model, drift_only, r - 1, opt);
        for (int k = 0; k < model.input_dim; ++k) {
            const VecField& gk = model.control_fields[static_cast<std::size_t>(k)];
            Vec lg;
            if (r == 1 && model.has_analytic_output_jacobian())
                lg = model.output_jacobian(x_star) * gk(x_star);
            else
                lg = directional_derivative(lfh, gk, opt.step)(x_star);
            if (!lg.allFinite()) throw NumericalDomainError("non-finite Lie derivative");
            for (int l = 0; l < model.output_dim; ++l) {
                auto& slot = out.per_output[static_cast<std::size_t>(l)];
                if (slot == 0 && std::abs(lg(l)) > tol) {
                    slot = r;
                    --remaining;
                }
            }
        }
    }
    for (int l = 0; l < model.output_dim; ++l)
        if (out.per_output[static_cast<std::size_t>(l)] == 0) throw NotFiniteRelativeDegree(l, opt.max_order);
    out.order = *std::max_element(out.per_output.begin(), out.per_output.end());
    return out;
}

/**
 * Jacobians of the stacked map (y, y', ..., y^(R)) at (x*, u*, fa=0, fs=0).
 * Fault signals are frozen constants, so E_s,j = [e_j; 0; ...; 0].
 */
inline DiffMapJacobians diffmap_jacobians(const SystemModel& model, const Vec& x_star, const Vec& u_star, int order,
                                          const LieOptions& opt = {}) {
    model.validate();
    detail::check_dim(x_star, model.state_dim, "state");
    detail::check_dim(u_star, model.input_dim, "input");
    require(order >= 0, "order must be non-negative");
    const int p = model.output_dim;
    const int n = model.state_dim;
    const int qa = model.actuator_channels();

    DiffMapJacobians jac;
    jac.order = order;
    jac.output_dim = p;
    jac.x_star = x_star;
    jac.u_star = u_star;
    jac.C_R = Mat::Zero(jac.rows(), n);
    jac.F_a.assign(static_cast<std::size_t>(qa), Vec::Zero(jac.rows()));

    const Vec zero_fa = Vec::Zero(qa);
    const VecField nominal = detail::closed_field(model, u_star, zero_fa);
    jac.C_R.topRows(p) = model.output_jac(x_star);
    for (int k = 1; k <= order; ++k) {
        const VecField phi = detail::stacked_derivative(model, nominal, k, opt);
        jac.C_R.middleRows(static_cast<Eigen::Index>(k) * p, p) = stencil_jacobian(phi, x_star, opt.step);
        for (int i = 0; i < qa; ++i) {
            const Vec col = five_point(
                [&](double s) {
                    Vec fa = zero_fa;
                    fa(i) = s;
                    return detail::stacked_derivative(model, detail::closed_field(model, u_star, fa), k, opt)(x_star);
                },
                opt.step);
            jac.F_a[static_cast<std::size_t>(i)].segment(static_cast<Eigen::Index>(k) * p, p) = col;
        }
    }
    for (int j = 0; j < model.sensor_channels(); ++j) {
        Vec col = Vec::Zero(jac.rows());
        col.head(p) = model.sensor_fault_dirs[static_cast<std::size_t>(j)];
        jac.E_s.push_back(col);
    }
    if (!jac.C_R.allFinite()) throw NumericalDomainError("non-finite output-map Jacobian");
    for (const auto& f : jac.F_a)
        if (!f.allFinite()) throw NumericalDomainError("non-finite actuator signature");
    return jac;
}

// =============================================================================
// Subspaces
// =============================================================================

struct SubspaceBasis {
    Mat basis;  // N x r, orthonormal columns
    std::string label;

    Eigen::Index ambient_dim() const { return basis.rows(); }
    Eigen::Index dim() const { return basis.cols(); }
    bool empty() const { return basis.cols() == 0; }
    Mat projector() const { return basis * basis.transpose(); }
};

inline SubspaceBasis orthonormalize(const Mat& M, std::string label = {}, double rel_tol = 1e-10) {
    SubspaceBasis out{Mat::Zero(M.rows(), 0), std::move(label)};
    if (M.cols() == 0 || M.rows() == 0) return out;
    Eigen::JacobiSVD<Mat> svd(M, Eigen::ComputeThinU);
    const Vec& s = svd.singularValues();
    if (s.size() == 0 || s(0) == 0.0) return out;
    Eigen::Index rank = 0;
    while (rank < s.size() && s(rank) > rel_tol * s(0)) ++rank;
    out.basis = svd.matrixU().leftCols(rank);
    return out;
}

/**
 * Ascending principal angles from the cosines (singular values of Qu^T Qv)
 * and the sines (singular values of (I - Qu Qu^T) Qv); small angles are taken
 * from the sines where arccos loses precision.
 */
inline std::vector<double> principal_angles(const SubspaceBasis& U, const SubspaceBasis& V) {
    require(U.ambient_dim() == V.ambient_dim(), "subspaces live in different ambient spaces");
    require(!U.empty() && !V.empty(), "principal angles need nonempty subspaces");
    const Mat* big = &U.basis;
    const Mat* small = &V.basis;
    if (small->cols() > big->cols()) std::swap(big, small);

    const Mat cross = big->transpose() * (*small);
    const Mat perp = *small - (*big) * cross;
    const Vec cosines = Eigen::JacobiSVD<Mat>(cross).singularValues();  // descending
    const Vec sines = Eigen::JacobiSVD<Mat>(perp).singularValues();     // descending
    const Eigen::Index r = small->cols();

    std::vector<double> angles(static_cast<std::size_t>(r));
    for (Eigen::Index k = 0; k < r; ++k) {
        const double c = std::clamp(k < cosines.size() ? cosines(k) : 0.0, 0.0, 1.0);
        const double s = std::clamp(r - 1 - k < sines.size() ? sines(r - 1 - k) : 0.0, 0.0, 1.0);
        angles[static_cast<std::size_t>(k)] = (c * c < 0.5) ? std::acos(c) : std::asin(s);
    }
    std::sort(angles.begin(), angles.end());
    return angles;
}

struct ChannelId {
    enum class Kind { actuator, sensor };
    Kind kind = Kind::actuator;
    int index = 0;  // zero-based

    static ChannelId actuator(int i) { return {Kind::actuator, i}; }
    static ChannelId sensor(int j) { return {Kind::sensor, j}; }

    std::string name() const { return (kind == Kind::actuator ? "a" : "s") + std::to_string(index + 1); }
    bool operator==(const ChannelId&) const = default;
};

inline void check_channel(const DiffMapJacobians& jac, ChannelId ch) {
    const auto count = ch.kind == ChannelId::Kind::actuator ? jac.F_a.size() : jac.E_s.size();
    if (ch.index < 0 || static_cast<std::size_t>(ch.index) >= count)
        throw InvalidArgument("invalid fault channel " + ch.name());
}

inline SubspaceBasis signature_subspace(const DiffMapJacobians& jac, ChannelId ch) {
    check_channel(jac, ch);
    const Vec& col = ch.kind == ChannelId::Kind::actuator ? jac.F_a[static_cast<std::size_t>(ch.index)]
                                                          : jac.E_s[static_cast<std::size_t>(ch.index)];
    return orthonormalize(col, ch.name());
}

// Algebraic sum of every other channel's signature subspace.
inline SubspaceBasis residue_subspace(const DiffMapJacobians& jac, ChannelId target) {
    check_channel(jac, target);
    std::vector<const Vec*> cols;
    for (std::size_t i = 0; i < jac.F_a.size(); ++i)
        if (!(target.kind == ChannelId::Kind::actuator && static_cast<int>(i) == target.index))
            cols.push_back(&jac.F_a[i]);
    for (std::size_t j = 0; j < jac.E_s.size(); ++j)
        if (!(target.kind == ChannelId::Kind::sensor && static_cast<int>(j) == target.index))
            cols.push_back(&jac.E_s[j]);
    Mat M(jac.rows(), static_cast<Eigen::Index>(cols.size()));
    for (std::size_t c = 0; c < cols.size(); ++c) M.col(static_cast<Eigen::Index>(c)) = *cols[c];
    return orthonormalize(M, "residue-of-" + target.name());
}

struct ChannelVerdict {
    ChannelId channel;
    double theta_min = 0.0;
    std::vector<double> angles;
    bool isolable = false;
    Eigen::Index signature_dim = 0;
    Eigen::Index residue_dim = 0;
};

struct IsolabilityReport {
    std::vector<ChannelVerdict> actuator;
    std::vector<ChannelVerdict> sensor;
    Vec x_star;
    double angle_floor = 1e-3;

    std::string summary() const {
        std::ostringstream os;
        os.precision(6);
        os << "angle_floor_rad " << angle_floor << "\n";
        for (const auto* group : {&actuator, &sensor})
            for (const auto& v : *group)
                os << v.channel.name() << " theta_min_rad " << v.theta_min << " signature_dim " << v.signature_dim
                   << " residue_dim " << v.residue_dim << " isolable " << (v.isolable ? "yes" : "no") << "\n";
        return os.str();
    }
};

inline ChannelVerdict channel_verdict(const DiffMapJacobians& jac, ChannelId ch, double angle_floor) {
    ChannelVerdict v;
    v.channel = ch;
    const SubspaceBasis sig = signature_subspace(jac, ch);
    const SubspaceBasis res = residue_subspace(jac, ch);
    v.signature_dim = sig.dim();
    v.residue_dim = res.dim();
    if (sig.empty()) {
        v.theta_min = 0.0;  // numerically zero signature: non-isolable by convention
        v.angles = {0.0};
    } else if (res.empty()) {
        v.theta_min = kHalfPi;
        v.angles.assign(static_cast<std::size_t>(sig.dim()), kHalfPi);
    } else {
        v.angles = principal_angles(sig, res);
        v.theta_min = v.angles.front();
    }
    v.isolable = !sig.empty() && v.theta_min > angle_floor;
    return v;
}

inline IsolabilityReport isolability_report(const DiffMapJacobians& jac, double angle_floor = 1e-3) {
    IsolabilityReport rep;
    rep.x_star = jac.x_star;
    rep.angle_floor = angle_floor;
    for (std::size_t i = 0; i < jac.F_a.size(); ++i)
        rep.actuator.push_back(channel_verdict(jac, ChannelId::actuator(static_cast<int>(i)), angle_floor));
    for (std::size_t j = 0; j < jac.E_s.size(); ++j)
        rep.sensor.push_back(channel_verdict(jac, ChannelId::sensor(static_cast<int>(j)), angle_floor));
    return rep;
}

/**
 * Orthogonal projector onto the complement of the residue subspace: it
 * annihilates every residue direction and is injective on the target
 * signature whenever the channel is isolable.
 */
inline Mat isolating_projector(const DiffMapJacobians& jac, ChannelId target, double angle_floor = 1e-3) {
    const ChannelVerdict v = channel_verdict(jac, target, angle_floor);
    if (!v.isolable)
        throw IsolabilityViolation("channel " + target.name() + " is not isolable (theta_min=" +
                                   std::to_string(v.theta_min) + " rad)");
    const SubspaceBasis res = residue_subspace(jac, target);
    Mat H = Mat::Identity(jac.rows(), jac.rows());
    if (!res.empty()) H -= res.projector();
    return H;
}

// =============================================================================
// Angle profiles along trajectories
// =============================================================================

struct TrajectorySample {
    double t = 0.0;
    Vec x;
    Vec u;
};

struct AngleProfile {
    std::vector<double> times;
    std::vector<std::vector<double>> actuator;  // [channel][sample]
    std::vector<std::vector<double>> sensor;
    Vec actuator_lower;  // conservative per-channel bound (min over samples)
    Vec sensor_lower;
    std::vector<std::size_t> skipped;
    std::vector<std::string> warnings;
};

inline AngleProfile angle_profile(const SystemModel& model, const std::vector<TrajectorySample>& trajectory, int order,
                                  double angle_floor = 1e-3, const LieOptions& opt = {}) {
    require(!trajectory.empty(), "angle profile needs a nonempty trajectory");
    AngleProfile prof;
    const int qa = model.actuator_channels();
    const int qs = model.sensor_channels();
    prof.actuator.resize(static_cast<std::size_t>(qa));
    prof.sensor.resize(static_cast<std::size_t>(qs));
    prof.actuator_lower = Vec::Constant(qa, kHalfPi);
    prof.sensor_lower = Vec::Constant(qs, kHalfPi);
    for (std::size_t k = 0; k < trajectory.size(); ++k) {
        const auto& s = trajectory[k];
        try {
            const RelativeDegrees rd = relative_degrees(model, s.x, opt);
            if (rd.order > order) {
                prof.skipped.push_back(k);
                prof.warnings.push_back("sample " + std::to_string(k) + ": relative degree " +
                                        std::to_string(rd.order) + " exceeds order " + std::to_string(order));
                continue;
            }
        } catch (const NotFiniteRelativeDegree& e) {
            prof.skipped.push_back(k);
            prof.warnings.push_back("sample " + std::to_string(k) + ": " + e.what());
            continue;
        }
        const DiffMapJacobians jac = diffmap_jacobians(model, s.x, s.u, order, opt);
        const IsolabilityReport rep = isolability_report(jac, angle_floor);
        prof.times.push_back(s.t);
        for (int i = 0; i < qa; ++i) {
            const double th = rep.actuator[static_cast<std::size_t>(i)].theta_min;
            prof.actuator[static_cast<std::size_t>(i)].push_back(th);
            prof.actuator_lower(i) = std::min(prof.actuator_lower(i), th);
        }
        for (int j = 0; j < qs; ++j) {
            const double th = rep.sensor[static_cast<std::size_t>(j)].theta_min;
            prof.sensor[static_cast<std::size_t>(j)].push_back(th);
            prof.sensor_lower(j) = std::min(prof.sensor_lower(j), th);
        }
    }
    require(!prof.times.empty(), "every trajectory sample was skipped");
    return prof;
}

}  // namespace gfi
