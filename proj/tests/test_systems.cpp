#include "tipping/tipping.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

using namespace tipping;

namespace {

SystemSpec constant_spec(SystemId id, double p, std::size_t length, double dt = 1.0) {
    SystemSpec s;
    s.id = id;
    s.schedule = ParameterSchedule::constant(p);
    s.noise = 0.0;
    s.dt = dt;
    s.length = length;
    return s;
}

}  // namespace

TEST(Schedule, LinearAndStepwise) {
    const auto lin = ParameterSchedule::linear(1.0, 1.0);
    EXPECT_DOUBLE_EQ(lin.at(0, 20000), 1.0);
    EXPECT_DOUBLE_EQ(lin.at(10000, 20000), 1.5);
    const auto step = ParameterSchedule::stepwise({{40.0, 3}, {38.0, 2}});
    EXPECT_DOUBLE_EQ(step.at(2, 5), 40.0);
    EXPECT_DOUBLE_EQ(step.at(3, 5), 38.0);
    EXPECT_NO_THROW(step.validate(5));
    EXPECT_THROW(step.validate(6), ConfigError);
}

TEST(Presets, FoldMatchesTable) {
    const auto s = preset("fold_fig2");
    EXPECT_EQ(s.id, SystemId::fold_map);
    EXPECT_EQ(s.schedule.form, ParameterSchedule::Form::linear);
    EXPECT_DOUBLE_EQ(s.schedule.slope, 1.0);
    EXPECT_DOUBLE_EQ(s.schedule.intercept, 1.0);
    EXPECT_EQ(s.length, 20000u);
    EXPECT_DOUBLE_EQ(s.noise, 0.01);
}

TEST(Presets, KsPeriodicToChaos) {
    const auto s = preset("ks_periodic_to_chaos");
    EXPECT_EQ(s.id, SystemId::ks_pde);
    EXPECT_DOUBLE_EQ(s.schedule.slope, 0.0056);
    EXPECT_DOUBLE_EQ(s.schedule.intercept, 0.076);
    EXPECT_DOUBLE_EQ(s.dt, 0.02);
    EXPECT_EQ(s.length, 20000u);
    EXPECT_DOUBLE_EQ(s.domain_size, 2.0 * std::numbers::pi);
    EXPECT_EQ(s.spatial_points, 64u);
}

TEST(Presets, LorenzChaosToEquilibrium) {
    const auto s = preset("lorenz_chaos_to_eq");
    EXPECT_EQ(s.id, SystemId::lorenz63);
    EXPECT_DOUBLE_EQ(s.schedule.slope, -30.0);
    EXPECT_DOUBLE_EQ(s.schedule.intercept, 50.0);
    EXPECT_DOUBLE_EQ(s.dt, 0.01);
}

TEST(Presets, StepwiseKsLadderCoversSeries) {
    const auto s = preset("ks_chaos_to_periodic");
    ASSERT_TRUE(s.domain_schedule.has_value());
    EXPECT_NO_THROW(s.domain_schedule->validate(s.length));
    EXPECT_DOUBLE_EQ(s.domain_schedule->at(0, s.length), 40.0);
    EXPECT_DOUBLE_EQ(s.domain_schedule->at(double(s.length - 1), s.length), 30.0);
}

TEST(Presets, UnknownNameListsValidOnes) {
    try {
        (void)preset("nope");
        FAIL();
    } catch (const ConfigError& e) {
        EXPECT_NE(std::string(e.what()).find("fold_fig2"), std::string::npos);
    }
}

TEST(Presets, EveryPresetValidates) {
    for (const auto& p : kPresets) EXPECT_NO_THROW(preset(p.name).validate()) << p.name;
}

TEST(Simulate, DeterministicForFixedSeed) {
    auto s = preset("hopf_fig2");
    s.length = 2000;
    const auto a = simulate(s);
    const auto b = simulate(s);
    EXPECT_TRUE(a.values == b.values);
    s.seed = 2;
    EXPECT_FALSE(simulate(s).values == a.values);
}

TEST(Simulate, DimensionsAndTimeAxis) {
    const auto fold = simulate(preset("fold_fig2"));
    EXPECT_EQ(fold.size(), 20000u);
    EXPECT_EQ(fold.dimension(), 1u);
    EXPECT_TRUE(fold.discrete);
    auto lor = preset("lorenz_eq_to_chaos");
    lor.length = 100;
    const auto l = simulate(lor);
    EXPECT_EQ(l.dimension(), 3u);
    EXPECT_DOUBLE_EQ(l.time(10), 10 * 0.01);
}

TEST(Simulate, FoldTipsNearTheFold) {
    // Upper branch disappears at p = 1.82; p = 1 + i/T puts that at i = 16400.
    const auto ts = simulate(preset("fold_fig2"));
    const double t = detect_transition(ts, 500);
    EXPECT_GT(t, 14000.0);
    EXPECT_LT(t, 16800.0);
}

TEST(Simulate, LogisticConvergesToFixedPoint) {
    auto s = constant_spec(SystemId::logistic_map, 2.5, 201);
    s.initial_state = Vector::Constant(1, 0.3);
    const auto ts = simulate(s);
    EXPECT_NEAR(ts.values(200, 0), 1.0 - 1.0 / 2.5, 1e-9);
}

TEST(Simulate, NoiselessEquilibriaStayPut) {
    struct Case {
        SystemId id;
        double p;
        double dt;
    };
    for (const auto c : {Case{SystemId::fold_map, 1.2, 1.0}, Case{SystemId::period_doubling_map, 0.3, 1.0},
                         Case{SystemId::logistic_map, 2.8, 1.0}, Case{SystemId::hopf_flow, -1.0, 0.05},
                         Case{SystemId::pitchfork_flow, 0.5, 0.1}, Case{SystemId::lorenz63, 10.0, 0.01}}) {
        auto s = constant_spec(c.id, c.p, 500, c.dt);
        s.initial_state = ground_truth_dej(s, c.p).equilibrium;
        const auto ts = simulate(s);
        const Matrix dev = ts.values.rowwise() - s.initial_state.transpose();
        EXPECT_LT(dev.cwiseAbs().maxCoeff(), 1e-8) << to_string(c.id);
    }
}

TEST(Simulate, LorenzIntegratorIsFourthOrder) {
    const auto f = [](const Vector& x) { return equations::flow_field(SystemId::lorenz63, x, 28.0); };
    const auto run = [&](double h) {
        Vector x = (Vector(3) << 1.0, 1.0, 1.0).finished();
        for (long i = 0; i < std::lround(1.0 / h); ++i) x = rk4_step(f, x, h);
        return x;
    };
    const double h = 0.01;
    const Vector ref = run(h / 8);
    const double e1 = (run(h) - ref).norm();
    const double e2 = (run(h / 2) - ref).norm();
    EXPECT_GT(e1 / e2, 8.0);
}

TEST(Simulate, KsConservesSpatialMean) {
    auto s = constant_spec(SystemId::ks_pde, 1.0, 101, 0.25);
    s.domain_size = 22.0;
    s.spatial_points = 64;
    const auto ts = simulate(s);
    const double m0 = ts.values.row(0).mean();
    for (Eigen::Index i = 1; i < ts.values.rows(); ++i) EXPECT_NEAR(ts.values.row(i).mean(), m0, 1e-6);
}

TEST(Simulate, KsPresetShape) {
    auto s = preset("ks_chaotic");
    s.length = 200;
    const auto ts = simulate(s);
    EXPECT_EQ(ts.dimension(), 64u);
    EXPECT_TRUE(ts.values.allFinite());
}

TEST(GroundTruth, LogisticDej) {
    const auto s = constant_spec(SystemId::logistic_map, 2.5, 100);
    const auto gt = ground_truth_dej(s, 2.5);
    EXPECT_NEAR(gt.value.real(), -0.5, 1e-10);
    EXPECT_NEAR(gt.value.imag(), 0.0, 1e-12);
}

TEST(GroundTruth, HopfEquilibriumEigenvalues) {
    const auto s = constant_spec(SystemId::hopf_flow, -1.0, 100, 0.05);
    const auto gt = ground_truth_dej(s, -1.0);
    EXPECT_LT(gt.equilibrium.norm(), 1e-12);
    EXPECT_NEAR(gt.value.real(), -1.0, 1e-12);
    EXPECT_NEAR(std::abs(gt.value.imag()), 1.0, 1e-12);
}

TEST(GroundTruth, LorenzDejAtTen) {
    const auto s = constant_spec(SystemId::lorenz63, 10.0, 100, 0.01);
    EXPECT_NEAR(ground_truth_dej(s, 10.0).value.real(), -0.596, 0.005);
}

TEST(GroundTruth, FoldAndPeriodDoublingAtTheirBifurcations) {
    const auto fold = constant_spec(SystemId::fold_map, 1.8, 100);
    EXPECT_NEAR(std::abs(ground_truth_dej(fold, 1.8).value), 1.0, 0.1);
    // The Henon-type map flips at p = 3 (1 - b)^2 / 4 = 0.3675 for b = 0.3.
    const auto pd = constant_spec(SystemId::period_doubling_map, 0.36, 100);
    const auto v = ground_truth_dej(pd, 0.36).value;
    EXPECT_LT(v.real(), -0.9);
    EXPECT_NEAR(v.imag(), 0.0, 1e-12);
}

TEST(GroundTruth, LogisticMleAtFourIsLnTwo) {
    const auto s = constant_spec(SystemId::logistic_map, 4.0, 100);
    const auto est = ground_truth_mle(s, 4.0, 1000000);
    EXPECT_NEAR(est.exponents[0], std::log(2.0), 0.01);

    // Direct derivative-product average along one orbit.
    double x = 0.4, acc = 0.0;
    const int n = 1000000;
    for (int i = 0; i < n; ++i) {
        acc += std::log(std::abs(4.0 * (1.0 - 2.0 * x)));
        x = 4.0 * x * (1.0 - x);
    }
    EXPECT_NEAR(acc / n, std::log(2.0), 0.01);
    EXPECT_NEAR(est.exponents[0], acc / n, 0.01);
}

TEST(GroundTruth, LorenzMleAtTwentyEight) {
    const auto s = constant_spec(SystemId::lorenz63, 28.0, 100, 0.01);
    const auto est = ground_truth_mle(s, 28.0, 100000);
    EXPECT_NEAR(est.exponents[0], 0.91, 0.05);
}

TEST(GroundTruth, KsIsNotAvailable) {
    auto s = preset("ks_chaotic");
    EXPECT_THROW((void)ground_truth_dej(s, 1.0), ConfigError);
}

TEST(GroundTruth, HopfCycleFloquetMultipliers) {
    // Variational equation of the true system around its limit cycle r = sqrt(p):
    // multipliers {1, exp(-4 pi p)}.
    const double p = 0.25;
    Vector x = (Vector(2) << std::sqrt(p), 0.0).finished();
    Matrix Phi = Matrix::Identity(2, 2);
    const auto f = [&](const Vector& s) { return equations::flow_field(SystemId::hopf_flow, s, p); };
    const auto jvp = [&](const Vector& s, const Matrix& V) -> Matrix {
        return equations::flow_jacobian(SystemId::hopf_flow, s, p) * V;
    };
    const int steps = 20000;
    for (int i = 0; i < steps; ++i) rk4_tangent_step(f, jvp, x, Phi, 2.0 * std::numbers::pi / steps);
    auto mult = eigen_decompose(Phi).values;
    std::vector<double> mods{std::abs(mult(0)), std::abs(mult(1))};
    std::sort(mods.begin(), mods.end());
    EXPECT_NEAR(mods[1], 1.0, 1e-8);
    EXPECT_NEAR(mods[0], std::exp(-4.0 * std::numbers::pi * p), 1e-8);
}

TEST(SpecValidation, RejectsBadFields) {
    auto s = preset("fold_fig2");
    s.length = 1;
    EXPECT_THROW(s.validate(), ConfigError);
    auto k = preset("ks_chaotic");
    k.spatial_points = 60;
    EXPECT_THROW(k.validate(), ConfigError);
    auto f = preset("hopf_fig2");
    f.initial_state = Vector::Zero(3);
    EXPECT_THROW(f.validate(), ConfigError);
}
