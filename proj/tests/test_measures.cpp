#include "tipping/tipping.hpp"

#include <gtest/gtest.h>

#include <unsupported/Eigen/MatrixFunctions>

#include <numbers>
#include <random>

using namespace tipping;

namespace {

Matrix gaussian(Eigen::Index rows, Eigen::Index cols, std::mt19937_64& rng, double scale = 1.0) {
    std::normal_distribution<double> z;
    Matrix M(rows, cols);
    for (Eigen::Index i = 0; i < M.size(); ++i) M.data()[i] = scale * z(rng);
    return M;
}

// Closed loop with the given recurrent matrix, one input and a chosen readout.
AutonomousRC make_rc(const Matrix& A, const Vector& b_r, const Matrix& W_out, double gamma, ReservoirMode mode) {
    ReservoirModel m;
    m.A = A.sparseView();
    m.W_in = Matrix::Ones(A.rows(), W_out.rows());
    m.b_r = b_r;
    m.gamma = gamma;
    m.mode = mode;
    return close_loop(m, ReadoutModel{W_out, Vector::Zero(W_out.rows())});
}

AutonomousRC random_rc(Eigen::Index n, std::uint64_t seed, ReservoirMode mode = ReservoirMode::continuous) {
    std::mt19937_64 rng(seed);
    ReservoirModel m;
    m.A = gaussian(n, n, rng, 0.8 / std::sqrt(double(n))).sparseView();
    m.W_in = gaussian(n, 1, rng, 0.5);
    m.b_r = gaussian(n, 1, rng, 0.3);
    m.gamma = mode == ReservoirMode::continuous ? 2.0 : 0.8;
    m.mode = mode;
    return close_loop(m, ReadoutModel{gaussian(1, n, rng, 0.1), Vector::Constant(1, 0.1)});
}

SystemSpec constant_spec(SystemId id, double p, std::size_t length, double dt, double noise) {
    SystemSpec s;
    s.id = id;
    s.schedule = ParameterSchedule::constant(p);
    s.noise = noise;
    s.dt = dt;
    s.length = length;
    return s;
}

TrainedWindow train_on(const TimeSeries& ts, const ReservoirConfig& c) {
    return train_window(build_reservoir(c, ts.dimension()), ts, c.lambda, c.washout_fraction, true);
}

}  // namespace

TEST(Jacobian, ZeroCouplingGivesMinusGammaIdentity) {
    const auto rc = make_rc(Matrix::Zero(6, 6), Vector::Zero(6), Matrix::Zero(1, 6), 3.0, ReservoirMode::continuous);
    EXPECT_LT((jacobian_at(rc, Vector::Constant(6, 0.2)) + 3.0 * Matrix::Identity(6, 6)).norm(), 1e-15);
}

TEST(Jacobian, MatchesCentralDifferences) {
    for (const auto mode : {ReservoirMode::continuous, ReservoirMode::discrete}) {
        const auto rc = random_rc(12, 21, mode);
        std::mt19937_64 rng(4);
        const Vector r = gaussian(12, 1, rng, 0.3);
        const Matrix J = jacobian_at(rc, r);
        const auto f = [&](const Vector& x) { return mode == ReservoirMode::continuous ? rc.field(x) : rc.map(x); };
        const double h = 1e-6;
        Matrix fd(12, 12);
        for (Eigen::Index j = 0; j < 12; ++j) {
            Vector e = Vector::Zero(12);
            e(j) = h;
            fd.col(j) = (f(r + e) - f(r - e)) / (2.0 * h);
        }
        EXPECT_LT((J - fd).cwiseAbs().maxCoeff(), 1e-7);
        EXPECT_LT((rc.jvp(r, Matrix::Identity(12, 12)) - J).norm(), 1e-13);
    }
}

TEST(Jacobian, SaturatedStateLosesCoupling) {
    const Matrix A = Matrix::Constant(4, 4, 0.3);
    const auto rc = make_rc(A, Vector::Constant(4, 50.0), Matrix::Zero(1, 4), 2.0, ReservoirMode::continuous);
    EXPECT_LT((jacobian_at(rc, Vector::Zero(4)) + 2.0 * Matrix::Identity(4, 4)).norm(), 1e-12);
}

TEST(Equilibrium, ZeroBiasHasZeroEquilibrium) {
    std::mt19937_64 rng(2);
    const auto rc = make_rc(gaussian(8, 8, rng, 0.1), Vector::Zero(8), Matrix::Zero(1, 8), 1.0,
                            ReservoirMode::continuous);
    const auto eq = find_equilibrium(rc, Vector::Constant(8, 0.3));
    ASSERT_TRUE(eq.converged);
    EXPECT_LT(eq.r_star.norm(), 1e-10);
}

TEST(Equilibrium, OneNodeMatchesBisection) {
    const double a = 0.5, b = 0.3;
    const auto rc = make_rc(Matrix::Constant(1, 1, a), Vector::Constant(1, b), Matrix::Zero(1, 1), 1.0,
                            ReservoirMode::continuous);
    double lo = -1.0, hi = 1.0;
    for (int i = 0; i < 200; ++i) {
        const double mid = 0.5 * (lo + hi);
        (mid - std::tanh(a * mid + b) > 0.0 ? hi : lo) = mid;
    }
    const auto eq = find_equilibrium(rc, Vector::Zero(1));
    ASSERT_TRUE(eq.converged);
    EXPECT_NEAR(eq.r_star(0), 0.5 * (lo + hi), 1e-9);
    EXPECT_LT(eq.residual_norm, 1e-10);
}

TEST(Dej, ZeroReadoutIsDegenerate) {
    const auto rc = make_rc(Matrix::Identity(3, 3) * 0.2, Vector::Zero(3), Matrix::Zero(1, 3), 1.0,
                            ReservoirMode::continuous);
    EXPECT_TRUE(compute_dej(rc, Vector::Zero(3)).degenerate);
}

TEST(Dej, LogisticFixedPointSlope) {
    // The map derivative at the fixed point is 2 - p.
    const auto ts = simulate(constant_spec(SystemId::logistic_map, 2.8, 1000, 1.0, 0.01));
    const auto tw = train_on(ts, map_dej_config());
    const auto dej = compute_dej(tw.autonomous, tw.hidden_mean);
    ASSERT_TRUE(dej.equilibrium.converged);
    EXPECT_FALSE(dej.degenerate);
    EXPECT_NEAR(dej.value.real(), -0.8, 0.05);
    EXPECT_NEAR(dej.value.imag(), 0.0, 1e-12);
}

TEST(Period, SineWithPeriodFifty) {
    Vector x(1000);
    for (Eigen::Index i = 0; i < x.size(); ++i) x(i) = std::sin(2.0 * std::numbers::pi * double(i) / 50.0);
    const auto p = detect_period(x);
    ASSERT_TRUE(p.accepted);
    EXPECT_NEAR(p.period, 50.0, 0.05);
    EXPECT_EQ(p.split, 50u);
}

TEST(Period, NonIntegerPeriodIsRefined) {
    Vector x(2000);
    for (Eigen::Index i = 0; i < x.size(); ++i) x(i) = std::cos(2.0 * std::numbers::pi * double(i) / 37.3);
    const auto p = detect_period(x);
    ASSERT_TRUE(p.accepted);
    EXPECT_NEAR(p.period, 37.3, 0.2);
}

TEST(Period, WhiteNoiseIsRejected) {
    std::mt19937_64 rng(8);
    EXPECT_FALSE(detect_period(gaussian(2000, 1, rng)).accepted);
}

TEST(Period, LogisticPeriodFour) {
    Vector x(400);
    double s = 0.3;
    for (int i = 0; i < 1000; ++i) s = 3.5 * s * (1.0 - s);
    for (Eigen::Index i = 0; i < x.size(); ++i) {
        x(i) = s;
        s = 3.5 * s * (1.0 - s);
    }
    const auto p = detect_period(x, 3, 0.9, false);
    ASSERT_TRUE(p.accepted);
    EXPECT_EQ(p.split, 4u);
}

TEST(Monodromy, ZeroPeriodIsIdentity) {
    const auto rc = random_rc(6, 3);
    EXPECT_TRUE(monodromy(rc, Vector::Zero(6), 0.0) == Matrix::Identity(6, 6));
}

TEST(Monodromy, LinearizationAtRestMatchesMatrixExponential) {
    // With zero bias, r = 0 is an equilibrium with slope 1, so the variational
    // flow there is exp(gamma (A - I) T).
    std::mt19937_64 rng(6);
    for (Eigen::Index n = 4; n <= 8; ++n) {
        const Matrix A = gaussian(n, n, rng, 0.4);
        const double gamma = 1.5, T = 2.0;
        const auto rc = make_rc(A, Vector::Zero(n), Matrix::Zero(1, n), gamma, ReservoirMode::continuous);
        const Matrix oracle = (gamma * (A - Matrix::Identity(n, n)) * T).exp();
        const Matrix Phi = monodromy(rc, Vector::Zero(n), T, 0.05, 4);
        EXPECT_LT((Phi - oracle).norm(), 1e-7 * oracle.norm()) << n;
    }
}

TEST(Monodromy, DiscreteIsJacobianProductAlongOrbit) {
    const auto rc = random_rc(5, 12, ReservoirMode::discrete);
    Vector r = Vector::Constant(5, 0.1);
    Matrix expected = Matrix::Identity(5, 5);
    for (int i = 0; i < 3; ++i) {
        expected = rc.jacobian(r) * expected;
        r = rc.map(r);
    }
    EXPECT_LT((monodromy(rc, Vector::Constant(5, 0.1), 3.0) - expected).norm(), 1e-13);
}

TEST(Mfm, LogisticPeriodFourMultiplier) {
    // Oracle: product of p (1 - 2 x) over the noiseless period-4 orbit.
    const double p = 3.5;
    double s = 0.3;
    for (int i = 0; i < 10000; ++i) s = p * s * (1.0 - s);
    double oracle = 1.0;
    for (int i = 0; i < 4; ++i) {
        oracle *= p * (1.0 - 2.0 * s);
        s = p * s * (1.0 - s);
    }

    const auto ts = simulate(constant_spec(SystemId::logistic_map, p, 2000, 1.0, 0.003));
    // The default map ridge is too strong to hold a period-4 orbit in closed loop.
    auto c = map_dej_config();
    c.lambda = 1e-6;
    const auto tw = train_on(ts, c);
    MfmOptions opt;
    opt.t_min = 3;
    opt.beta = 0.9;
    const auto mfm = compute_mfm(tw.autonomous, tw.forecast_start, 1.0, opt);
    ASSERT_TRUE(mfm.has_value());
    EXPECT_EQ(mfm->period.split, 4u);
    EXPECT_NEAR(mfm->value.real(), oracle, 0.1);
}

TEST(Mfm, TrivialMultiplierOnTrainedCycle) {
    const auto ts = simulate(constant_spec(SystemId::hopf_flow, 1.0, 2000, 0.05, 0.01));
    const auto tw = train_on(ts, cycle_mfm_config());
    const auto mfm = compute_mfm(tw.autonomous, tw.forecast_start, ts.dt);
    ASSERT_TRUE(mfm.has_value());
    // Unit-speed rotation: period 2 pi.
    EXPECT_NEAR(mfm->period.period * ts.dt, 2.0 * std::numbers::pi, 0.1);
    EXPECT_NEAR(std::abs(mfm->trivial_multiplier), 1.0, 0.1);
    EXPECT_FALSE(mfm->poor_closure);
    EXPECT_LT(mfm->modulus, 1.0);
}

TEST(Mle, ContractionMapIsLogHalf) {
    // gamma = 1/2 with A~ = 0 gives the map r -> r/2 + const.
    const auto rc = make_rc(Matrix::Zero(5, 5), Vector::Constant(5, 0.1), Matrix::Zero(1, 5), 0.5,
                            ReservoirMode::discrete);
    MleOptions opt;
    opt.total_steps = 2000;
    const auto a = compute_mle(rc, Vector::Zero(5), 1.0, opt);
    EXPECT_NEAR(a.leading(), std::log(0.5), 1e-10);
    opt.total_steps = 4000;
    EXPECT_NEAR(compute_mle(rc, Vector::Zero(5), 1.0, opt).leading(), a.leading(), 1e-10);
}

TEST(Mle, SeveralExponentsAreOrdered) {
    const auto rc = random_rc(10, 5);
    MleOptions opt;
    opt.total_steps = 4000;
    opt.exponents = 3;
    const auto est = compute_mle(rc, Vector::Zero(10), 0.05, opt);
    ASSERT_EQ(est.exponents.size(), 3u);
    // Nearly equal exponents may swap by up to the convergence tolerance.
    EXPECT_GE(est.exponents[0], est.exponents[1] - opt.tol);
    EXPECT_GE(est.exponents[1], est.exponents[2] - opt.tol);
    opt.exponents = 11;
    EXPECT_THROW((void)compute_mle(rc, Vector::Zero(10), 0.05, opt), ConfigError);
}
