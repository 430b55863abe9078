// Acceptance report: one PASS/FAIL line per criterion.
//
// Exits 0 once every criterion has been evaluated, so a FAIL line is a
// reported outcome rather than a crash. `--strict` exits 1 on any FAIL.
// The long KS criterion runs only with TIPPING_ACCEPTANCE_KS=1.

#include "tipping/tipping.hpp"

#include <unsupported/Eigen/MatrixFunctions>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <numbers>
#include <random>
#include <string>
#include <vector>

using namespace tipping;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

std::string fmt(const char* format, auto... args) {
    char buf[512];
    std::snprintf(buf, sizeof buf, format, args...);
    return buf;
}

double median(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    const std::size_t n = v.size();
    return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

double pearson(const std::vector<double>& a, const std::vector<double>& b) {
    const Eigen::Map<const Vector> x(a.data(), static_cast<Eigen::Index>(a.size()));
    const Eigen::Map<const Vector> y(b.data(), static_cast<Eigen::Index>(b.size()));
    const Vector xc = x.array() - x.mean();
    const Vector yc = y.array() - y.mean();
    return xc.dot(yc) / std::sqrt(xc.squaredNorm() * yc.squaredNorm());
}

double slope(const std::vector<double>& t, const std::vector<double>& y) {
    const Eigen::Map<const Vector> x(t.data(), static_cast<Eigen::Index>(t.size()));
    const Eigen::Map<const Vector> v(y.data(), static_cast<Eigen::Index>(y.size()));
    const Vector xc = x.array() - x.mean();
    return xc.dot(v) / xc.squaredNorm();
}

SystemSpec at_constant(SystemSpec s, double p, std::size_t length, std::uint64_t seed) {
    s.schedule = ParameterSchedule::constant(p);
    s.length = length;
    s.seed = seed;
    return s;
}

// One pipeline window covering the whole series.
MeasurePoint single_window(const TimeSeries& ts, ReservoirConfig c, MeasureKind kind, std::uint64_t seed,
                           AnalysisOptions opt = {}) {
    c.seed = seed;
    const std::size_t d = ts.size() - 1;
    return run_sliding_analysis(ts, {d, 1}, c, kind, opt).points.front();
}

// Criterion 1: Lorenz DEJ at rho = 10.
Outcome lorenz_dej() {
    std::vector<double> re;
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
        const auto ts = simulate(at_constant(preset("lorenz_eq_to_chaos"), 10.0, 1001, seed));
        const auto p = single_window(ts, lorenz_dej_config(), MeasureKind::dej, seed);
        if (p.accepted()) re.push_back(p.value.real());
    }
    if (re.size() < 6) return {false, fmt("only %zu of 10 seeds accepted", re.size())};
    const double m = median(re);
    return {std::abs(m + 0.596) <= 0.1, fmt("median Re(DEJ) %.4f over %zu seeds, target -0.596 +- 0.1", m, re.size())};
}

// Criterion 2: Lorenz MLE at rho = 28.
Outcome lorenz_mle() {
    std::vector<double> v;
    std::size_t unconverged = 0;
    for (std::uint64_t seed = 1; seed <= 3; ++seed) {
        const auto ts = simulate(at_constant(preset("lorenz_chaos_to_eq"), 28.0, 5001, seed));
        const auto p = single_window(ts, lorenz_mle_config(), MeasureKind::mle, seed);
        if (!p.accepted()) continue;
        v.push_back(p.value.real());
        unconverged += (p.flags & quality::unconverged) != 0;
    }
    if (v.empty()) return {false, "no seed produced an MLE"};
    const double m = median(v);
    return {std::abs(m - 0.91) <= 0.1, fmt("median MLE %.4f over %zu seeds (d = 5000, %zu flagged unconverged), "
                                           "target 0.91 +- 0.1",
                                           m, v.size(), unconverged)};
}

// Criterion 3: logistic ground-truth MLE and pipeline DEJ.
Outcome logistic_chain() {
    SystemSpec s;
    s.id = SystemId::logistic_map;
    const double mle = ground_truth_mle(s, 4.0, 1000000).leading();
    std::vector<double> re;
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        auto spec = at_constant(preset("logistic_fig2c"), 2.8, 2001, seed);
        const auto p = single_window(simulate(spec), map_dej_config(), MeasureKind::dej, seed);
        if (p.accepted()) re.push_back(p.value.real());
    }
    if (re.empty()) return {false, fmt("GT MLE %.5f; no accepted DEJ", mle)};
    const double dej = median(re);
    const bool ok = std::abs(mle - std::numbers::ln2) <= 0.01 && std::abs(dej + 0.8) <= 0.05;
    return {ok, fmt("GT MLE(p=4) %.5f vs ln2 +- 0.01; median DEJ(p=2.8) %.4f vs -0.8 +- 0.05", mle, dej)};
}

struct SweepCase {
    const char* preset;
    BifurcationClass expected;
};

// Time of the critical transition used to truncate each sweep.
double sweep_transition(const std::string& name, const SystemSpec& spec, const TimeSeries& ts) {
    if (name == "fold_fig2") return detect_transition(ts, 500);
    if (name == "period_doubling_fig2") return (0.3675 - 0.25) / 0.15 * static_cast<double>(spec.length);
    return ts.time(ts.size() - 1);
}

// Criterion 4: correlation with the analytic DEJ and class, per bifurcation.
Outcome bifurcation_sweeps() {
    const SweepCase cases[] = {{"fold_fig2", BifurcationClass::fold_or_pitchfork},
                               {"period_doubling_fig2", BifurcationClass::period_doubling},
                               {"pitchfork_fig2", BifurcationClass::fold_or_pitchfork},
                               {"hopf_fig2", BifurcationClass::hopf}};
    bool all = true;
    std::string detail;
    for (const auto& c : cases) {
        const auto spec = preset(c.preset);
        const auto ts = simulate(spec);
        const auto def = recommended_analysis(c.preset);
        const auto m = run_sliding_analysis(ts, def.plan, def.reservoir, MeasureKind::dej);
        const double t_tr = sweep_transition(c.preset, spec, ts);
        const double half = 0.5 * static_cast<double>(def.plan.d) * ts.dt;
        std::vector<double> rc, gt;
        for (const auto& p : m.points) {
            if (!p.accepted() || p.t_mid + half > t_tr) continue;
            const double par = spec.schedule.at(p.t_mid / ts.dt, spec.length);
            rc.push_back(p.value.real());
            gt.push_back(ground_truth_dej(spec, par).value.real());
        }
        const double r = rc.size() >= 3 ? pearson(rc, gt) : std::numeric_limits<double>::quiet_NaN();
        const auto cls = classify_bifurcation(m, t_tr - half);
        const bool ok = r >= 0.9 && cls == c.expected;
        all = all && ok;
        detail += fmt("%s%s r=%.3f (%zu pts) class=%s%s", detail.empty() ? "" : "; ", c.preset, r, rc.size(),
                      std::string(to_string(cls)).c_str(), ok ? "" : " [fail]");
    }
    return {all, detail + "; need r >= 0.9 and the correct class"};
}

// Criterion 5: Hopf Floquet multiplier at p = 0.25 and its approach to 1.
Outcome hopf_mfm() {
    const double oracle = std::exp(-std::numbers::pi);
    std::vector<double> mods;
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        auto spec = at_constant(preset("hopf_cycle_to_eq"), 0.25, 2001, seed);
        spec.transient = 2000;
        const auto p = single_window(simulate(spec), cycle_mfm_config(), MeasureKind::mfm, seed);
        if (p.accepted()) mods.push_back(std::abs(p.value));
    }
    if (mods.empty()) return {false, "no window produced an MFM at p = 0.25"};
    const double m = median(mods);
    const bool level = std::abs(m - oracle) <= 0.05;

    const auto spec = preset("hopf_cycle_to_eq");
    const auto ts = simulate(spec);
    const auto def = recommended_analysis("hopf_cycle_to_eq");
    const auto series = run_sliding_analysis(ts, def.plan, def.reservoir, MeasureKind::mfm);
    // p crosses 0 at 2 / 2.3 of the run.
    const double t_tr = 2.0 / 2.3 * static_cast<double>(spec.length) * ts.dt;
    const double half = 0.5 * static_cast<double>(def.plan.d) * ts.dt;
    std::vector<double> t, y;
    for (const auto& p : series.points)
        if (p.accepted() && p.t_mid + half <= t_tr) {
            t.push_back(p.t_mid);
            y.push_back(std::abs(p.value));
        }
    const bool rises = t.size() >= 3 && slope(t, y) > 0.0 && std::abs(1.0 - y.back()) < std::abs(1.0 - y.front());
    const std::string trend =
        t.size() >= 3 ? fmt("|MFM| %.3f -> %.3f over %zu pre-transition windows", y.front(), y.back(), t.size())
                      : fmt("only %zu pre-transition windows", t.size());
    return {level && rises, fmt("median |MFM|(p=0.25) %.4f vs e^-pi %.4f +- 0.05; ", m, oracle) + trend};
}

// Criterion 6: fold transition predicted from a cutoff at 70% of the span.
Outcome ultra_early() {
    std::vector<double> errs;
    std::size_t missing = 0;
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
        auto spec = preset("fold_fig2");
        spec.seed = seed;
        const auto ts = simulate(spec);
        auto def = recommended_analysis("fold_fig2");
        def.reservoir.seed = seed;
        const double t_tr = detect_transition(ts, 500);
        const auto m = run_sliding_analysis(ts, def.plan, def.reservoir, MeasureKind::dej);
        const double t_l = 0.7 * t_tr - 0.5 * static_cast<double>(def.plan.d);
        const auto f = predict_tipping(m, t_l, WarningConfig{0.05});
        if (!f.t_hat_p) {
            ++missing;
            errs.push_back(std::numeric_limits<double>::infinity());
        } else {
            errs.push_back(std::abs(*f.t_hat_p - t_tr) / static_cast<double>(spec.length));
        }
    }
    const double m = median(errs);
    return {m <= 0.1, fmt("median |t_hat - t_tr| / T = %.4f over 10 seeds (%zu without a crossing), need <= 0.1", m,
                          missing)};
}

// Criterion 7: variational flow of a constant Jacobian against expm.
Outcome monodromy_oracle() {
    std::mt19937_64 rng(7);
    std::normal_distribution<double> z;
    std::uniform_int_distribution<int> dim(4, 8);
    double worst = 0.0;
    for (int trial = 0; trial < 20; ++trial) {
        const Eigen::Index n = dim(rng);
        Matrix A(n, n);
        for (Eigen::Index i = 0; i < A.size(); ++i) A.data()[i] = 0.4 * z(rng);
        // Zero bias and zero readout make r = 0 a rest point with unit tanh
        // slope, so the linearized field there is J = gamma (A - I).
        ReservoirModel model;
        model.A = A.sparseView();
        model.W_in = Matrix::Ones(n, 1);
        model.b_r = Vector::Zero(n);
        model.gamma = 1.5;
        model.mode = ReservoirMode::continuous;
        const auto rc = close_loop(model, ReadoutModel{Matrix::Zero(1, n), Vector::Zero(1)});
        const double T = 2.0;
        const Matrix oracle = (model.gamma * (A - Matrix::Identity(n, n)) * T).exp();
        const Matrix Phi = monodromy(rc, Vector::Zero(n), T, 0.05, 4);
        worst = std::max(worst, (Phi - oracle).norm() / oracle.norm());
    }
    return {worst < 1e-6, fmt("worst relative error %.2e over 20 cases, need < 1e-6", worst)};
}

double bisect_tanh_fixed_point(double a, double b) {
    double lo = -1.0, hi = 1.0;
    for (int i = 0; i < 200; ++i) {
        const double mid = 0.5 * (lo + hi);
        (mid - std::tanh(a * mid + b) < 0.0 ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
}

// Criterion 8: ridge, Newton and eigenpair certificates.
Outcome certificates() {
    std::mt19937_64 rng(8);
    std::normal_distribution<double> z;
    Matrix hidden(400, 60), target(400, 3);
    for (Eigen::Index i = 0; i < hidden.size(); ++i) hidden.data()[i] = z(rng);
    for (Eigen::Index i = 0; i < target.size(); ++i) target.data()[i] = z(rng);
    const double ridge = train_readout(hidden, target, 1e-6, 0.1).diagnostics.normal_equation_residual;

    const double a = 0.5, b = 0.3;
    const auto g = [&](const Vector& r) { return Vector((r.array() - (a * r.array() + b).tanh()).matrix()); };
    const auto jac = [&](const Vector& r) {
        const double t = std::tanh(a * r(0) + b);
        return Matrix::Constant(1, 1, 1.0 - a * (1.0 - t * t));
    };
    const auto newton = damped_newton(g, jac, Vector::Zero(1), 1e-14, 50);
    const double newton_err = std::abs(newton.x(0) - bisect_tanh_fixed_point(a, b));

    double eig = 0.0;
    for (int trial = 0; trial < 100; ++trial) {
        const Eigen::Index n = 2 + trial % 30;
        Matrix J(n, n);
        for (Eigen::Index i = 0; i < J.size(); ++i) J.data()[i] = z(rng);
        const auto pair = dominant_eigenpair(J, trial % 2 ? EigenConvention::max_modulus : EigenConvention::max_real);
        const ComplexVector res = J.cast<Complex>() * pair.vector - pair.value * pair.vector;
        eig = std::max(eig, res.norm() / J.norm());
    }
    const bool ok = ridge < 1e-8 && newton.converged && newton_err < 1e-9 && eig < 1e-8;
    return {ok, fmt("ridge residual %.2e (< 1e-8); Newton |r - r_bisect| %.2e (< 1e-9); "
                    "max eigenpair residual / ||J|| %.2e (< 1e-8)",
                    ridge, newton_err, eig)};
}

MeasureSeries score_series(const std::vector<double>& v) {
    MeasureSeries m{MeasureKind::variance, ReservoirMode::discrete, {}};
    for (std::size_t i = 0; i < v.size(); ++i) {
        MeasurePoint p;
        p.window = i;
        p.t_mid = static_cast<double>(i);
        p.kind = MeasureKind::variance;
        p.value = Complex(v[i], 0.0);
        m.points.push_back(p);
    }
    return m;
}

// Criterion 9: ROC protocol.
Outcome roc_protocol() {
    std::vector<double> v(200);
    for (std::size_t i = 0; i < v.size(); ++i) v[i] = static_cast<double>(i);
    const double perfect = roc_auc(score_series(v), 1e9).auc;

    std::mt19937_64 rng(9);
    double sum = 0.0, lo = 1.0, hi = 0.0;
    for (int rep = 0; rep < 100; ++rep) {
        std::shuffle(v.begin(), v.end(), rng);
        const double a = roc_auc(score_series(v), 1e9).auc;
        sum += a;
        lo = std::min(lo, a);
        hi = std::max(hi, a);
    }
    const double mean = sum / 100.0;

    const auto spec = preset("fold_fig2");
    const auto ts = simulate(spec);
    const auto def = recommended_analysis("fold_fig2");
    const auto m = run_sliding_analysis(ts, def.plan, def.reservoir, MeasureKind::dej);
    const double fold = roc_auc(m, detect_transition(ts, 500), 0.3).auc;

    const bool ok = perfect == 1.0 && mean >= 0.4 && mean <= 0.6 && fold >= 0.9;
    return {ok, fmt("perfect separation AUC %.17g (== 1); shuffled mean %.3f in [0.4, 0.6] (range %.3f..%.3f); "
                    "fold DEJ AUC %.3f (>= 0.9)",
                    perfect, mean, lo, hi, fold)};
}

// Criterion 10: KS MLE on the chaotic preset.
Outcome ks_mle() {
    const auto spec = preset("ks_chaotic");
    const auto ts = simulate(spec);
    const auto def = recommended_analysis("ks_chaotic");
    const auto m = run_sliding_analysis(ts, def.plan, def.reservoir, MeasureKind::mle);
    std::vector<double> v;
    for (const auto& p : m.accepted()) v.push_back(p.value.real());
    const double med = median(v);
    return {std::abs(med - 0.05) <= 0.03, fmt("median RC-MLE %.4f over %zu windows, target 0.05 +- 0.03", med, v.size())};
}

}  // namespace

int main(int argc, char** argv) {
    const bool strict = argc > 1 && std::string(argv[1]) == "--strict";
    const char* ks = std::getenv("TIPPING_ACCEPTANCE_KS");
    const bool run_ks = ks && std::string(ks) == "1";

    struct Criterion {
        int id;
        const char* name;
        std::function<Outcome()> run;
        bool enabled;
    };
    const std::vector<Criterion> criteria{
        {1, "Lorenz63 DEJ", lorenz_dej, true},
        {2, "Lorenz63 MLE", lorenz_mle, true},
        {3, "logistic oracle chain", logistic_chain, true},
        {4, "bifurcation sweeps", bifurcation_sweeps, true},
        {5, "Hopf MFM", hopf_mfm, true},
        {6, "ultra-early prediction", ultra_early, true},
        {7, "monodromy oracle", monodromy_oracle, true},
        {8, "ridge/Newton/eigen certificates", certificates, true},
        {9, "ROC protocol", roc_protocol, true},
        {10, "KS MLE (optional)", ks_mle, run_ks},
    };

    int failures = 0;
    for (const auto& c : criteria) {
        if (!c.enabled) {
            std::printf("criterion %2d  SKIP  %s: set TIPPING_ACCEPTANCE_KS=1 to run\n", c.id, c.name);
            continue;
        }
        const auto start = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = c.run();
        } catch (const std::exception& e) {
            o = {false, std::string("error: ") + e.what()};
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        failures += !o.pass;
        std::printf("criterion %2d  %s  %s: %s (%.1f s)\n", c.id, o.pass ? "PASS" : "FAIL", c.name, o.detail.c_str(),
                    secs);
        std::fflush(stdout);
    }
    std::printf("%d criterion(s) failed\n", failures);
    return strict && failures > 0 ? 1 : 0;
}
