#include "common.hpp"

using namespace gfi;

TEST(Geometry, OrthonormalizeDropsDependentColumns) {
    Rng rng(1);
    Mat M = rng.normal_mat(6, 3);
    Mat D(6, 4);
    D << M, M.col(0) + 2.0 * M.col(2);
    const SubspaceBasis b = orthonormalize(D);
    EXPECT_EQ(b.dim(), 3);
    EXPECT_LT((b.basis.transpose() * b.basis - Mat::Identity(3, 3)).norm(), 1e-12);
    EXPECT_TRUE(orthonormalize(Mat::Zero(5, 2)).empty());
}

TEST(Geometry, PrincipalAnglesKnownPlanes) {
    // span(e1) vs span(cos t e1 + sin t e2)
    for (double t : {0.0, 1e-7, 0.3, 1.0, kHalfPi}) {
        Mat a = Mat::Zero(3, 1), b = Mat::Zero(3, 1);
        a(0, 0) = 1.0;
        b(0, 0) = std::cos(t);
        b(1, 0) = std::sin(t);
        const auto ang = principal_angles(orthonormalize(a), orthonormalize(b));
        ASSERT_EQ(ang.size(), 1u);
        EXPECT_NEAR(ang[0], t, 1e-14);
    }
}

TEST(Geometry, PrincipalAnglesMatchProjectorOracle) {
    Rng rng(2024);
    for (int trial = 0; trial < 50; ++trial) {
        const auto pr = oracle::random_pair(rng);
        const auto got = principal_angles(orthonormalize(pr.A), orthonormalize(pr.B));
        const auto want = oracle::projector_angles(pr.A, pr.B);
        ASSERT_EQ(got.size(), want.size());
        for (std::size_t k = 0; k < got.size(); ++k) EXPECT_NEAR(got[k], want[k], 1e-9);
        EXPECT_TRUE(std::is_sorted(got.begin(), got.end()));
        EXPECT_GE(got.front(), 0.0);
        EXPECT_LE(got.back(), kHalfPi + 1e-15);
    }
}

TEST(Geometry, AnglesAreSymmetricAndRotationInvariant) {
    Rng rng(9);
    for (int trial = 0; trial < 20; ++trial) {
        const auto pr = oracle::random_pair(rng);
        const Mat Q = test::random_orthogonal(rng, pr.A.rows());
        const auto ab = principal_angles(orthonormalize(pr.A), orthonormalize(pr.B));
        const auto ba = principal_angles(orthonormalize(pr.B), orthonormalize(pr.A));
        const auto rot = principal_angles(orthonormalize(Q * pr.A), orthonormalize(Q * pr.B));
        for (std::size_t k = 0; k < ab.size(); ++k) {
            EXPECT_NEAR(ab[k], ba[k], 1e-12);
            EXPECT_NEAR(ab[k], rot[k], 1e-10);
        }
    }
}

TEST(Geometry, TrivialIntersectionEquivalence) {
    Rng rng(77);
    for (int trial = 0; trial < 40; ++trial) {
        const bool degenerate = trial % 2 == 1;
        const auto pr = degenerate ? oracle::degenerate_pair(rng) : oracle::random_pair(rng);
        const auto ang = principal_angles(orthonormalize(pr.A), orthonormalize(pr.B));
        Mat both(pr.A.rows(), pr.A.cols() + pr.B.cols());
        both << pr.A, pr.B;
        const bool rank_sum = oracle::numerical_rank(both) == oracle::numerical_rank(pr.A) + oracle::numerical_rank(pr.B);
        const bool positive = ang.front() > 1e-6;
        EXPECT_EQ(positive, rank_sum);
        EXPECT_EQ(positive, !degenerate);
        if (degenerate) {
            // one zero angle per shared direction
            const auto zeros = std::count_if(ang.begin(), ang.end(), [](double a) { return a < 1e-6; });
            EXPECT_EQ(zeros, pr.shared);
        }
    }
}

TEST(Geometry, EmptySubspaceRejected) {
    EXPECT_THROW(principal_angles(orthonormalize(Mat::Zero(3, 0)), orthonormalize(Mat::Identity(3, 1))), InvalidArgument);
    EXPECT_THROW(principal_angles(orthonormalize(Mat::Identity(3, 1)), orthonormalize(Mat::Identity(4, 1))),
                 InvalidArgument);
}

TEST(Geometry, RelativeDegreeLinear) {
    const SystemModel di = test::double_integrator();
    const RelativeDegrees rd = relative_degrees(di, Vec::Zero(2));
    ASSERT_EQ(rd.per_output.size(), 1u);
    EXPECT_EQ(rd.per_output[0], 2);
    EXPECT_EQ(rd.order, 2);
}

TEST(Geometry, RelativeDegreeSpacecraft) {
    const SystemModel m = spacecraft_model({});
    Vec x(6);
    x << 0.1, -0.2, 0.05, 0.02, -0.01, 0.03;
    const RelativeDegrees rd = relative_degrees(m, x);
    EXPECT_EQ(rd.per_output, (std::vector<int>{2, 2, 2}));
    EXPECT_EQ(rd.order, 2);
}

TEST(Geometry, NoRelativeDegreeThrows) {
    Mat A = Mat::Zero(2, 2), B(2, 1), C(1, 2);
    B << 1, 0;
    C << 0, 1;  // output never sees the input
    const SystemModel m = linear_model(A, B, C, Mat(2, 0), Mat(1, 0));
    EXPECT_THROW(relative_degrees(m, Vec::Zero(2)), NotFiniteRelativeDegree);
}

TEST(Geometry, LinearSignaturesAreMarkovParameters) {
    Rng rng(4);
    const Mat A = 0.5 * rng.normal_mat(4, 4), B = rng.normal_mat(4, 2), C = rng.normal_mat(2, 4);
    const Mat Bf = rng.normal_mat(4, 2), E = rng.normal_mat(2, 1);
    const SystemModel m = linear_model(A, B, C, Bf, E);
    const Vec x = rng.normal_vec(4), u = rng.normal_vec(2);
    const DiffMapJacobians jac = diffmap_jacobians(m, x, u, 2);
    ASSERT_EQ(jac.rows(), 6);
    Mat CR(6, 4);
    CR << C, C * A, C * A * A;
    EXPECT_LT((jac.C_R - CR).norm(), 1e-6 * CR.norm());
    for (int i = 0; i < 2; ++i) {
        Vec want(6);
        want << Vec::Zero(2), C * Bf.col(i), C * A * Bf.col(i);
        EXPECT_LT((jac.F_a[static_cast<std::size_t>(i)] - want).norm(), 1e-6 * (1.0 + want.norm()));
    }
    Vec e(6);
    e << E.col(0), Vec::Zero(4);
    EXPECT_EQ(jac.E_s[0], e);
}

TEST(Geometry, DuplicatedSignatureIsNotIsolable) {
    const SystemModel m = test::duplicated_signature_model();
    const DiffMapJacobians jac = diffmap_jacobians(m, Vec::Zero(2), Vec::Zero(2), 2);
    const IsolabilityReport rep = isolability_report(jac);
    ASSERT_EQ(rep.actuator.size(), 2u);
    for (const auto& v : rep.actuator) {
        EXPECT_LT(v.theta_min, 1e-3);
        EXPECT_FALSE(v.isolable);
    }
    EXPECT_THROW(isolating_projector(jac, ChannelId::actuator(0)), IsolabilityViolation);
    EXPECT_THROW(isolating_projector(jac, ChannelId::actuator(1)), IsolabilityViolation);
}

TEST(Geometry, IsolatingProjectorAnnihilatesResidue) {
    Rng rng(8);
    const SystemModel m = linear_model(0.3 * rng.normal_mat(4, 4), rng.normal_mat(4, 2), rng.normal_mat(3, 4),
                                       rng.normal_mat(4, 2), rng.normal_mat(3, 2));
    const DiffMapJacobians jac = diffmap_jacobians(m, Vec::Zero(4), Vec::Zero(2), 2);
    for (int i = 0; i < 2; ++i) {
        const ChannelId ch = ChannelId::actuator(i);
        const Mat H = isolating_projector(jac, ch);
        const SubspaceBasis res = residue_subspace(jac, ch);
        EXPECT_LT((H * res.basis).norm(), 1e-10);
        const SubspaceBasis sig = signature_subspace(jac, ch);
        EXPECT_GT(Eigen::JacobiSVD<Mat>(H * sig.basis).singularValues().minCoeff(), 1e-6);
        EXPECT_LT((H * H - H).norm(), 1e-10);
    }
}

TEST(Geometry, SpacecraftWheelsShareResidue) {
    // four wheels in three axes: each wheel's signature lies in the span of the others
    const SystemModel m = spacecraft_model({});
    Vec x = Vec::Zero(6);
    const DiffMapJacobians jac = diffmap_jacobians(m, x, Vec::Zero(4), 2);
    const IsolabilityReport rep = isolability_report(jac);
    for (const auto& v : rep.actuator) EXPECT_FALSE(v.isolable);
    for (const auto& v : rep.sensor) EXPECT_TRUE(v.isolable);
}

TEST(Geometry, AngleProfileTakesMinimum) {
    const SystemModel m = spacecraft_model({});
    std::vector<TrajectorySample> traj;
    for (int k = 0; k < 4; ++k) {
        Vec x = Vec::Zero(6);
        x(3) = 0.05 * k;
        x(5) = -0.03 * k;
        traj.push_back({static_cast<double>(k), x, 0.01 * Vec::Ones(4)});
    }
    const AngleProfile prof = angle_profile(m, traj, 2);
    EXPECT_EQ(prof.times.size(), 4u);
    for (int j = 0; j < 3; ++j) {
        const auto& s = prof.sensor[static_cast<std::size_t>(j)];
        EXPECT_DOUBLE_EQ(prof.sensor_lower(j), *std::min_element(s.begin(), s.end()));
    }
}

TEST(Geometry, XiFromAngles) {
    Vec th(3);
    th << 0.0, kHalfPi, kHalfPi / 2.0;
    const Vec xi = design_xi_from_angles(th, 1.0, 5.0);
    EXPECT_DOUBLE_EQ(xi(0), 5.0);
    EXPECT_DOUBLE_EQ(xi(1), 1.0);
    EXPECT_DOUBLE_EQ(xi(2), 3.0);
    th(0) = -0.1;
    EXPECT_THROW(design_xi_from_angles(th, 1.0, 5.0), InvalidArgument);
    EXPECT_THROW(design_xi_from_angles(Vec::Zero(1), 5.0, 1.0), InvalidArgument);
}
