// Elastic-net mirror map over the columns of a last-layer weight matrix:
//
//   psi(W) = sum_j [ (beta/2) xi_j |w_j|^2 + alpha sqrt(|w_j|^2 + eps) ]
//
// Column-separable, so the Hessian is block diagonal with blocks
//   K_j = beta xi_j I + alpha (I/s - w_j w_j^T / s^3),  s = sqrt(|w_j|^2 + eps).
#pragma once

#include "gfi/core.hpp"

namespace gfi {

struct MirrorMapEN {
    double beta = 1.0;
    double alpha = 0.1;
    double eps = 1e-4;
    Vec xi;  // per-column curvature

    static MirrorMapEN quadratic(Eigen::Index columns) { return {1.0, 0.0, 1e-4, Vec::Ones(columns)}; }

    void validate() const {
        require(beta > 0.0, "mirror map beta must be positive");
        require(alpha >= 0.0, "mirror map alpha must be non-negative");
        require(eps > 0.0, "mirror map eps must be positive");
        require(xi.size() > 0 && xi.minCoeff() > 0.0, "mirror map xi entries must be positive");
    }

    Eigen::Index columns() const { return xi.size(); }

    // Strong-convexity modulus of psi.
    double modulus() const { return beta * xi.minCoeff(); }

    double column_potential(const Vec& w, Eigen::Index j) const {
        return 0.5 * beta * xi(j) * w.squaredNorm() + alpha * std::sqrt(w.squaredNorm() + eps);
    }

    Vec column_gradient(const Vec& w, Eigen::Index j) const {
        return (beta * xi(j) + alpha / std::sqrt(w.squaredNorm() + eps)) * w;
    }

    double potential(const Mat& W) const {
        check(W);
        double acc = 0.0;
        for (Eigen::Index j = 0; j < W.cols(); ++j) acc += column_potential(W.col(j), j);
        return acc;
    }

    Mat gradient(const Mat& W) const {
        check(W);
        Mat G(W.rows(), W.cols());
        for (Eigen::Index j = 0; j < W.cols(); ++j) G.col(j) = column_gradient(W.col(j), j);
        return G;
    }

    Mat hessian_block(const Vec& w, Eigen::Index j) const {
        const double s2 = w.squaredNorm() + eps;
        const double s = std::sqrt(s2);
        Mat K = (beta * xi(j) + alpha / s) * Mat::Identity(w.size(), w.size());
        K.noalias() -= (alpha / (s2 * s)) * w * w.transpose();
        return K;
    }

    // K_j^{-1} v via Sherman-Morrison on K_j = c0 I - c1 w w^T.
    Vec solve_block(const Vec& w, Eigen::Index j, const Vec& v) const {
        const double s2 = w.squaredNorm() + eps;
        const double s = std::sqrt(s2);
        const double c0 = beta * xi(j) + alpha / s;
        const double c1 = alpha / (s2 * s);
        // c0 - c1 |w|^2 = beta xi_j + alpha eps / s^3 > 0
        const double radial = beta * xi(j) + alpha * eps / (s2 * s);
        return v / c0 + (c1 * w.dot(v) / (c0 * radial)) * w;
    }

    // Bregman divergence of a single column, evaluated in cancellation-free form.
    double column_bregman(const Vec& w, const Vec& w_ref, Eigen::Index j) const {
        const double quad = 0.5 * beta * xi(j) * (w - w_ref).squaredNorm();
        if (alpha == 0.0) return quad;
        if (w == w_ref) return 0.0;
        // With a = (w, sqrt eps), b = (w_ref, sqrt eps):
        //   s_a - s_b - <grad, w - w_ref> = (|a||b| - <a,b>) / |b|
        //   |a||b| - <a,b> = |a|^2 |b_perp|^2 / (|a||b| + <a,b>)
        const double sa = std::sqrt(w.squaredNorm() + eps);
        const double sb = std::sqrt(w_ref.squaredNorm() + eps);
        const double ab = w.dot(w_ref) + eps;
        const double a2 = sa * sa;
        const double coef = ab / a2;
        const double perp2 = (w_ref - coef * w).squaredNorm() + eps * (1.0 - coef) * (1.0 - coef);
        const double denom = sa * sb + ab;
        const double gap = denom > 0.0 ? a2 * perp2 / denom : (sa * sb - ab);
        return quad + alpha * gap / sb;
    }

private:
    void check(const Mat& W) const {
        if (W.cols() != xi.size())
            throw InvalidArgument("weight matrix has " + std::to_string(W.cols()) + " columns, mirror map expects " +
                                  std::to_string(xi.size()));
    }

    friend double bregman(const MirrorMapEN&, const Mat&, const Mat&);
};

// psi(W) - psi(W_ref) - <grad psi(W_ref), W - W_ref>.
inline double bregman(const MirrorMapEN& map, const Mat& W, const Mat& W_ref) {
    require(W.rows() == W_ref.rows() && W.cols() == W_ref.cols(), "Bregman arguments differ in shape");
    map.check(W);
    double acc = 0.0;
    for (Eigen::Index j = 0; j < W.cols(); ++j) acc += map.column_bregman(W.col(j), W_ref.col(j), j);
    return acc;
}

inline Mat mirror_hessian_block(const MirrorMapEN& map, const Mat& W, Eigen::Index j) {
    require(j >= 0 && j < W.cols() && j < map.columns(), "Hessian block index out of range");
    return map.hessian_block(W.col(j), j);
}

}  // namespace gfi
