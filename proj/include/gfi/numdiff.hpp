// Finite-difference Jacobians and directional derivatives.
#pragma once

#include "gfi/core.hpp"

#include <functional>

namespace gfi {

using VecField = std::function<Vec(const Vec&)>;
using JacField = std::function<Mat(const Vec&)>;

// Second-order central Jacobian with step rel_step*(1+|x|).
inline Mat central_jacobian(const VecField& fn, const Vec& x, double rel_step = 1e-6) {
    const double h = rel_step * (1.0 + x.norm());
    const Vec f0 = fn(x);
    Mat J(f0.size(), x.size());
    Vec xp = x;
    for (Eigen::Index k = 0; k < x.size(); ++k) {
        xp(k) = x(k) + h;
        const Vec fp = fn(xp);
        xp(k) = x(k) - h;
        const Vec fm = fn(xp);
        xp(k) = x(k);
        J.col(k) = (fp - fm) / (2.0 * h);
    }
    return J;
}

// Fourth-order five-point stencil of a map along a line: d/ds fn(s) at s = 0.
inline Vec five_point(const std::function<Vec(double)>& fn, double h) {
    return (fn(-2.0 * h) - 8.0 * fn(-h) + 8.0 * fn(h) - fn(2.0 * h)) / (12.0 * h);
}

// Jacobian by the five-point stencil; used for nested Lie derivatives where
// second-order stencils amplify the inner truncation noise too much.
inline Mat stencil_jacobian(const VecField& fn, const Vec& x, double rel_step) {
    const double h = rel_step * (1.0 + x.norm());
    Mat J;
    for (Eigen::Index k = 0; k < x.size(); ++k) {
        const Vec col = five_point(
            [&](double s) {
                Vec xs = x;
                xs(k) += s;
                return fn(xs);
            },
            h);
        if (k == 0) J.resize(col.size(), x.size());
        J.col(k) = col;
    }
    return J;
}

// x -> D fn(x)[v(x)], displacement along v scaled to rel_step*(1+|x|).
inline VecField directional_derivative(VecField fn, VecField v, double rel_step) {
    return [fn = std::move(fn), v = std::move(v), rel_step](const Vec& x) -> Vec {
        const Vec dir = v(x);
        const double vn = dir.norm();
        if (vn == 0.0) return Vec::Zero(fn(x).size());
        const double t = rel_step * (1.0 + x.norm()) / vn;
        return five_point([&](double s) { return fn(x + s * dir); }, t);
    };
}

}  // namespace gfi
