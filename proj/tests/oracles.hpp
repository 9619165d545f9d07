#pragma once

#include "gfi/app.hpp"

#include <algorithm>

namespace gfi::oracle {

// Principal angles from eigenvalues of compressed projectors: sin^2 from
// U^T (I - P_V) U below pi/4, cos^2 from U^T P_V U above. The smaller subspace
// plays the role of U.
inline std::vector<double> projector_angles(const Mat& A, const Mat& B) {
    const SubspaceBasis a = orthonormalize(A), b = orthonormalize(B);
    const Mat& U = a.dim() <= b.dim() ? a.basis : b.basis;
    const Mat& V = a.dim() <= b.dim() ? b.basis : a.basis;
    const Mat PV = V * V.transpose();
    const Eigen::Index N = U.rows();
    Eigen::SelfAdjointEigenSolver<Mat> cos2(U.transpose() * PV * U);
    Eigen::SelfAdjointEigenSolver<Mat> sin2(U.transpose() * (Mat::Identity(N, N) - PV) * U);
    const Eigen::Index r = U.cols();
    std::vector<double> out(static_cast<std::size_t>(r));
    for (Eigen::Index k = 0; k < r; ++k) {
        // k-th smallest angle: largest cos^2, smallest sin^2
        const double s2 = std::clamp(sin2.eigenvalues()(k), 0.0, 1.0);
        const double c2 = std::clamp(cos2.eigenvalues()(r - 1 - k), 0.0, 1.0);
        out[static_cast<std::size_t>(k)] = s2 < 0.5 ? std::asin(std::sqrt(s2)) : std::acos(std::sqrt(c2));
    }
    return out;
}

inline Eigen::Index numerical_rank(const Mat& M, double rel_tol = 1e-10) {
    if (M.cols() == 0) return 0;
    const Vec sv = Eigen::JacobiSVD<Mat>(M).singularValues();
    const double tol = rel_tol * std::max<double>(1.0, sv(0));
    return (sv.array() > tol).count();
}

struct SubspacePair {
    Mat A;
    Mat B;
    Eigen::Index shared = 0;  // constructed intersection dimension
};

// Generic pair with r + s <= N, so the intersection is trivial.
inline SubspacePair random_pair(Rng& rng) {
    const auto N = static_cast<Eigen::Index>(2 + rng.index(19));  // 2..20
    const auto r = static_cast<Eigen::Index>(1 + rng.index(static_cast<std::size_t>(N - 1)));
    const auto s = static_cast<Eigen::Index>(1 + rng.index(static_cast<std::size_t>(N - r)));
    return {rng.normal_mat(N, r), rng.normal_mat(N, s), 0};
}

// Pair sharing k >= 1 directions, mixed into random non-orthonormal spanning sets.
inline SubspacePair degenerate_pair(Rng& rng) {
    const auto N = static_cast<Eigen::Index>(3 + rng.index(18));  // 3..20
    const auto k = static_cast<Eigen::Index>(1 + rng.index(static_cast<std::size_t>(std::min<Eigen::Index>(3, N - 2))));
    const auto ra = static_cast<Eigen::Index>(rng.index(static_cast<std::size_t>((N - k) / 2 + 1)));
    const auto rb = static_cast<Eigen::Index>(rng.index(static_cast<std::size_t>(N - k - ra + 1)));
    const Mat Q = Eigen::HouseholderQR<Mat>(rng.normal_mat(N, N)).householderQ();
    Mat A(N, k + ra), B(N, k + rb);
    A << Q.leftCols(k), Q.middleCols(k, ra);
    B << Q.leftCols(k), Q.middleCols(k + ra, rb);
    const Mat mixA = rng.normal_mat(k + ra, k + ra) + 3.0 * Mat::Identity(k + ra, k + ra);
    const Mat mixB = rng.normal_mat(k + rb, k + rb) + 3.0 * Mat::Identity(k + rb, k + rb);
    return {A * mixA, B * mixB, k};
}

}  // namespace gfi::oracle
