#include "common.hpp"

using namespace gfi;

namespace {

struct Fixture {
    SystemModel model;
    ObserverParams params;
};

Fixture spacecraft_setup(AdaptationLaw law, std::uint64_t seed = 1) {
    Rng rng(seed);
    Fixture s{spacecraft_model({}), {}};
    s.params.law = law;
    s.params.L = Mat::Zero(6, 3);
    s.params.L.topRows(3) = 2.0 * Mat::Identity(3, 3);
    s.params.L.bottomRows(3) = 1.5 * Mat::Identity(3, 3);
    const Mat R = rng.normal_mat(6, 6);
    s.params.M = R * R.transpose() + Mat::Identity(6, 6);
    s.params.gamma_a = Vec::LinSpaced(4, 10.0, 40.0);
    s.params.gamma_s = Vec::LinSpaced(3, 5.0, 15.0);
    s.params.sigma_a = 0.2;
    s.params.sigma_s = 0.3;
    s.params.map_a = {1.0, 0.1, 1e-4, Vec::LinSpaced(4, 1.0, 4.0)};
    s.params.map_s = {1.0, 0.1, 1e-4, Vec::LinSpaced(3, 2.0, 5.0)};
    s.params.phi_a = std::make_shared<FeatureMap>(test::small_feature_map(rng, 10, 6, 5));
    s.params.phi_s = std::make_shared<FeatureMap>(test::small_feature_map(rng, 10, 6, 4));
    return s;
}

}  // namespace

TEST(Observer, RatesMatchDenseOracle) {
    const Fixture s = spacecraft_setup(AdaptationLaw::mirror_descent);
    s.params.validate(s.model);
    Rng rng(2);
    const Vec x_hat = 0.1 * rng.normal_vec(6), u = 0.05 * rng.normal_vec(4), y = 0.1 * rng.normal_vec(3);
    const Mat W_a = 0.3 * rng.normal_mat(5, 4), W_s = 0.3 * rng.normal_mat(4, 3);
    const ObserverRates r = observer_rates(s.model, s.params, x_hat, W_a, W_s, y, u);

    const Vec in = feature_input(x_hat, u);
    const Vec pa = s.params.phi_a->evaluate(in), ps = s.params.phi_s->evaluate(in);
    const Vec fs_hat = W_s.transpose() * ps;
    const Vec res = y - (x_hat.head(3) + fs_hat);
    const Mat G = s.model.input_matrix(x_hat);
    const Vec z = G.transpose() * s.params.M * s.params.L * res;
    EXPECT_LT((r.signals.r - res).norm(), 1e-14);
    EXPECT_LT((r.signals.z - z).norm(), 1e-12);
    const Vec dx = eval_dynamics(s.model, x_hat, u, W_a.transpose() * pa, Vec::Zero(6)) + s.params.L * res;
    EXPECT_LT((r.dx_hat - dx).norm(), 1e-13);
    for (Eigen::Index i = 0; i < 4; ++i) {
        const Mat K = s.params.map_a.hessian_block(W_a.col(i), i);
        const Vec want = K.ldlt().solve(Vec(-s.params.gamma_a(i) * z(i) * pa)) - s.params.sigma_a * W_a.col(i);
        EXPECT_LT((r.dW_a.col(i) - want).norm(), 1e-10 * (1.0 + want.norm()));
    }
    for (Eigen::Index j = 0; j < 3; ++j) {
        const Mat K = s.params.map_s.hessian_block(W_s.col(j), j);
        const Vec want = K.ldlt().solve(Vec(s.params.gamma_s(j) * res(j) * ps)) - s.params.sigma_s * W_s.col(j);
        EXPECT_LT((r.dW_s.col(j) - want).norm(), 1e-10 * (1.0 + want.norm()));
    }
}

TEST(Observer, GradientLawUsesRawStep) {
    const Fixture s = spacecraft_setup(AdaptationLaw::gradient_descent);
    Rng rng(3);
    const Vec x_hat = 0.1 * rng.normal_vec(6), u = 0.05 * rng.normal_vec(4), y = 0.1 * rng.normal_vec(3);
    const Mat W_a = 0.3 * rng.normal_mat(5, 4), W_s = 0.3 * rng.normal_mat(4, 3);
    const ObserverRates r = observer_rates(s.model, s.params, x_hat, W_a, W_s, y, u);
    const Vec pa = s.params.phi_a->evaluate(feature_input(x_hat, u));
    for (Eigen::Index i = 0; i < 4; ++i) {
        const Vec want = -s.params.gamma_a(i) * r.signals.z(i) * pa - s.params.sigma_a * W_a.col(i);
        EXPECT_LT((r.dW_a.col(i) - want).norm(), 1e-14);
    }
}

TEST(Observer, SignalsDescendTheFaultLoss) {
    // moving W_a along dW_a (without leakage) lowers z^T fa-direction coupling:
    // d/dW <z, W^T phi> = phi z^T, so the step is -Gamma times that gradient
    Fixture s = spacecraft_setup(AdaptationLaw::gradient_descent);
    s.params.sigma_a = 0.0;
    Rng rng(4);
    const Vec x_hat = 0.1 * rng.normal_vec(6), u = 0.05 * rng.normal_vec(4), y = 0.1 * rng.normal_vec(3);
    const Mat W_a = 0.3 * rng.normal_mat(5, 4), W_s = Mat::Zero(4, 3);
    const ObserverRates r = observer_rates(s.model, s.params, x_hat, W_a, W_s, y, u);
    const Vec pa = s.params.phi_a->evaluate(feature_input(x_hat, u));
    const Mat grad = pa * r.signals.z.transpose();
    EXPECT_LT((grad.array() * r.dW_a.array()).sum(), 0.0);
}

TEST(Observer, MdWithQuadraticMapEqualsGdBitwise) {
    Fixture md = spacecraft_setup(AdaptationLaw::mirror_descent);
    md.params.map_a = MirrorMapEN{1.0, 0.0, 1e-4, Vec::Ones(4)};
    md.params.map_s = MirrorMapEN{1.0, 0.0, 1e-4, Vec::Ones(3)};
    ObserverParams gd = md.params;
    gd.law = AdaptationLaw::gradient_descent;
    Rng rng(5);
    ObserverState st = initial_observer_state(md.model, md.params, 0.05 * rng.normal_vec(6));
    ObserverState sg = st;
    for (int k = 0; k < 200; ++k) {
        const Vec y = 0.1 * Vec::Constant(3, std::sin(0.01 * k)), u = 0.01 * Vec::Ones(4);
        st = observer_step(md.model, md.params, st, y, u, 1e-3).state;
        sg = observer_step(md.model, gd, sg, y, u, 1e-3).state;
        ASSERT_EQ(st.x_hat, sg.x_hat);
        ASSERT_EQ(st.W_a, sg.W_a);
        ASSERT_EQ(st.W_s, sg.W_s);
    }
    EXPECT_GT(st.W_a.norm(), 0.0);
}

TEST(Observer, LeakageDecaysWeightsExponentially) {
    // no sensor channels and zero gain: only the sigma term acts on W_a
    SystemModel m = test::double_integrator(true, false);
    Rng rng(6);
    ObserverParams p;
    p.law = AdaptationLaw::mirror_descent;
    p.L = Mat::Zero(2, 1);
    p.M = Mat::Identity(2, 2);
    p.gamma_a = Vec::Constant(1, 10.0);
    p.gamma_s = Vec(0);
    p.sigma_a = 0.5;
    p.map_a = {1.0, 0.1, 1e-4, Vec::Ones(1)};
    p.map_s = {1.0, 0.1, 1e-4, Vec::Ones(0)};
    p.phi_a = std::make_shared<FeatureMap>(test::small_feature_map(rng, 3, 4, 3));
    p.phi_s = p.phi_a;
    ObserverState s = initial_observer_state(m, p, Vec::Zero(2));
    s.W_a = rng.normal_mat(3, 1);
    const Mat W0 = s.W_a;
    const double dt = 1e-2;
    for (int k = 0; k < 100; ++k) s = observer_step(m, p, s, Vec::Zero(1), Vec::Zero(1), dt).state;
    EXPECT_LT((s.W_a - W0 * std::exp(-0.5 * 1.0)).norm(), 1e-9);
}

TEST(Observer, FrozenWeightsStayPut) {
    Fixture s = spacecraft_setup(AdaptationLaw::mirror_descent);
    s.params.adapt = false;
    Rng rng(7);
    ObserverState st = initial_observer_state(s.model, s.params, Vec::Zero(6));
    st.W_a = rng.normal_mat(5, 4);
    const Mat W0 = st.W_a;
    st = observer_step(s.model, s.params, st, 0.1 * Vec::Ones(3), Vec::Zero(4), 1e-3).state;
    EXPECT_EQ(st.W_a, W0);
    EXPECT_NE(st.x_hat, Vec::Zero(6));
}

TEST(Observer, WeightGuardClampsAndCounts) {
    Fixture s = spacecraft_setup(AdaptationLaw::gradient_descent);
    s.params.weight_bound = 0.5;
    ObserverState st = initial_observer_state(s.model, s.params, Vec::Zero(6));
    st.W_a = Mat::Constant(5, 4, 1.0);
    st = observer_step(s.model, s.params, st, Vec::Zero(3), Vec::Zero(4), 1e-3).state;
    EXPECT_EQ(st.guard_activations, 4);
    for (Eigen::Index i = 0; i < 4; ++i) EXPECT_NEAR(st.W_a.col(i).norm(), 0.5, 1e-12);
}

TEST(Observer, NonFiniteStateThrows) {
    Fixture s = spacecraft_setup(AdaptationLaw::mirror_descent);
    ObserverState st = initial_observer_state(s.model, s.params, Vec::Zero(6));
    Vec y = Vec::Zero(3);
    y(0) = std::numeric_limits<double>::infinity();
    EXPECT_THROW(observer_step(s.model, s.params, st, y, Vec::Zero(4), 1e-3), Error);
}

TEST(Observer, ParamValidation) {
    Fixture s = spacecraft_setup(AdaptationLaw::mirror_descent);
    ObserverParams p = s.params;
    p.L = Mat::Zero(6, 2);
    EXPECT_THROW(p.validate(s.model), InvalidArgument);
    p = s.params;
    p.M = -Mat::Identity(6, 6);
    EXPECT_THROW(p.validate(s.model), InvalidArgument);
    p = s.params;
    p.gamma_a(0) = 0.0;
    EXPECT_THROW(p.validate(s.model), InvalidArgument);
    p = s.params;
    p.map_s.xi = Vec::Ones(2);
    EXPECT_THROW(p.validate(s.model), InvalidArgument);
}

TEST(Observer, LyapunovSolverResidual) {
    Rng rng(8);
    for (int trial = 0; trial < 10; ++trial) {
        const Mat A = rng.normal_mat(5, 5) - 4.0 * Mat::Identity(5, 5);
        const Mat R = rng.normal_mat(5, 5);
        const Mat Q = R * R.transpose() + Mat::Identity(5, 5);
        const Mat X = solve_lyapunov(A, Q);
        EXPECT_LT((A.transpose() * X + X * A + Q).norm(), 1e-9 * Q.norm());
    }
}

TEST(Observer, RiccatiSolverResidual) {
    Rng rng(9);
    const Mat A = rng.normal_mat(4, 4), B = rng.normal_mat(4, 2);
    const Mat G = B * B.transpose(), Q = Mat::Identity(4, 4);
    const Mat X = solve_care(A, G, Q);
    EXPECT_LT((A.transpose() * X + X * A - X * G * X + Q).norm(), 1e-8 * (1.0 + X.norm()));
    EXPECT_LT(spectral_abscissa(A - G * X), 0.0);
}

TEST(Observer, DoubleIntegratorCertifiedRate) {
    const SystemModel m = test::double_integrator();
    const MetricDesign d = design_metric_and_gain(m, Vec::Zero(2), Vec::Zero(1), 3.0);
    EXPECT_GE(d.rate, 2.9);
    EXPECT_LT(spectral_abscissa(Mat(m.drift_jac(Vec::Zero(2)) - d.L * m.output_jac(Vec::Zero(2)))), -3.0);
    Eigen::SelfAdjointEigenSolver<Mat> es(d.M);
    EXPECT_GT(es.eigenvalues().minCoeff(), 0.0);
}

TEST(Observer, SpacecraftDesignVerifiesSamples) {
    const SystemModel m = spacecraft_model({});
    std::vector<OperatingSample> samples;
    for (int k = 0; k < 5; ++k) {
        Vec x = Vec::Zero(6);
        x.tail(3) = Vec::Constant(3, 0.02 * k);
        samples.push_back({x, Vec::Zero(4)});
    }
    const MetricDesign d = design_metric_and_gain(m, Vec::Zero(6), Vec::Zero(4), 1.0, samples);
    EXPECT_GT(d.rate, 0.0);
    EXPECT_LE(d.rate, d.linear_rate + 1e-12);
}

TEST(Observer, UndetectablePairRejected) {
    Mat A = Mat::Zero(2, 2), B(2, 1), C(1, 2);
    B << 1, 1;
    C << 1, 0;
    const SystemModel m = linear_model(A, B, C, Mat(2, 0), Mat(1, 0));
    EXPECT_FALSE(is_detectable(A, C));
    EXPECT_THROW(design_metric_and_gain(m, Vec::Zero(2), Vec::Zero(1), 1.0), DesignInfeasible);
}

TEST(Observer, SlowGainRejected) {
    const SystemModel m = test::double_integrator();
    Mat L(2, 1);
    L << 2.0, 1.0;  // poles at -1
    EXPECT_THROW(certify_gain(m, Vec::Zero(2), Vec::Zero(1), L, 2.0), DesignInfeasible);
    EXPECT_NO_THROW(certify_gain(m, Vec::Zero(2), Vec::Zero(1), L, 0.5));
}

TEST(Observer, MetricVerificationReportsViolations) {
    SystemModel m = test::double_integrator();
    m.drift = [](const Vec& x) -> Vec {
        Vec d(2);
        d << x(1), 10.0 * x(0) * x(0) * x(0);
        return d;
    };
    m.drift_jacobian = [](const Vec& x) -> Mat {
        Mat J(2, 2);
        J << 0.0, 1.0, 30.0 * x(0) * x(0), 0.0;
        return J;
    };
    std::vector<OperatingSample> samples{{Vec::Zero(2), Vec::Zero(1)}, {Vec::Constant(2, 3.0), Vec::Zero(1)}};
    try {
        design_metric_and_gain(m, Vec::Zero(2), Vec::Zero(1), 1.0, samples);
        FAIL() << "expected MetricVerificationError";
    } catch (const MetricVerificationError& e) {
        ASSERT_EQ(e.violating_states.size(), 1u);
        EXPECT_EQ(e.violating_states[0], Vec::Constant(2, 3.0));
    }
}
