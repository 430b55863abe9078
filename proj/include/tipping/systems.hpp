#pragma once

// Benchmark systems with drifting parameters and state-proportional noise:
// four canonical bifurcation models, the logistic map, Lorenz63 and the
// Kuramoto-Sivashinsky PDE, plus ground-truth stability oracles computed from
// the noiseless equations.

#include "tipping/core.hpp"
#include "tipping/dynamics.hpp"
#include "tipping/ks.hpp"

#include <array>
#include <numbers>
#include <optional>
#include <string_view>
#include <utility>

namespace tipping {

enum class SystemId { fold_map, period_doubling_map, pitchfork_flow, hopf_flow, logistic_map, lorenz63, ks_pde };
enum class SystemKind { discrete_map, continuous_flow, pde };

inline constexpr std::array<std::pair<SystemId, std::string_view>, 7> kSystemNames{{
    {SystemId::fold_map, "fold_map"},
    {SystemId::period_doubling_map, "period_doubling_map"},
    {SystemId::pitchfork_flow, "pitchfork_flow"},
    {SystemId::hopf_flow, "hopf_flow"},
    {SystemId::logistic_map, "logistic_map"},
    {SystemId::lorenz63, "lorenz63"},
    {SystemId::ks_pde, "ks_pde"},
}};

[[nodiscard]] inline std::string_view to_string(SystemId id) {
    for (const auto& [k, v] : kSystemNames)
        if (k == id) return v;
    return "unknown";
}

[[nodiscard]] inline SystemId parse_system_id(std::string_view name) {
    for (const auto& [k, v] : kSystemNames)
        if (v == name) return k;
    throw ConfigError("unknown system id '" + std::string(name) + "'");
}

[[nodiscard]] constexpr SystemKind kind_of(SystemId id) noexcept {
    switch (id) {
        case SystemId::fold_map:
        case SystemId::period_doubling_map:
        case SystemId::logistic_map: return SystemKind::discrete_map;
        case SystemId::ks_pde: return SystemKind::pde;
        default: return SystemKind::continuous_flow;
    }
}

// -----------------------------------------------------------------------------
// Parameter schedule
// -----------------------------------------------------------------------------

/// Time-varying parameter indexed by sample. The linear form is
/// p_i = slope * i / T + intercept, which for flows equals
/// slope * t / (T dt) + intercept with t = i dt.
struct ParameterSchedule {
    enum class Form { constant, linear, stepwise };
    struct Level {
        double value = 0.0;
        std::size_t hold = 0;  // samples held at this level
    };

    Form form = Form::constant;
    double slope = 0.0;
    double intercept = 0.0;  // also the constant value
    std::vector<Level> levels;

    [[nodiscard]] static ParameterSchedule constant(double v) { return {Form::constant, 0.0, v, {}}; }
    [[nodiscard]] static ParameterSchedule linear(double k, double b) { return {Form::linear, k, b, {}}; }
    [[nodiscard]] static ParameterSchedule stepwise(std::vector<Level> steps) {
        return {Form::stepwise, 0.0, 0.0, std::move(steps)};
    }

    /// Value at a (possibly fractional) sample index of a length-T series.
    [[nodiscard]] double at(double index, std::size_t length) const {
        switch (form) {
            case Form::constant: return intercept;
            case Form::linear: return slope * index / static_cast<double>(length) + intercept;
            case Form::stepwise: {
                double edge = 0.0;
                for (const auto& l : levels) {
                    edge += static_cast<double>(l.hold);
                    if (index < edge) return l.value;
                }
                return levels.empty() ? 0.0 : levels.back().value;
            }
        }
        return intercept;
    }

    void validate(std::size_t length) const {
        if (form == Form::stepwise) {
            std::size_t total = 0;
            for (const auto& l : levels) total += l.hold;
            if (levels.empty() || total != length)
                throw ConfigError("stepwise schedule hold counts must sum to the series length (" +
                                  std::to_string(total) + " != " + std::to_string(length) + ")");
        }
        if (!std::isfinite(slope) || !std::isfinite(intercept)) throw ConfigError("schedule coefficients must be finite");
    }
};

// -----------------------------------------------------------------------------
// System specification
// -----------------------------------------------------------------------------

struct SystemSpec {
    SystemId id = SystemId::fold_map;
    ParameterSchedule schedule = ParameterSchedule::constant(1.0);  // bifurcation parameter p (KS: viscosity)
    double noise = 0.0;                                             // intensity omega
    double dt = 1.0;                                                // flows and PDE only
    std::size_t length = 20000;                                     // T
    double domain_size = 0.0;                                       // KS only
    std::size_t spatial_points = 0;                                 // KS only
    std::uint64_t seed = 1;
    Vector initial_state;                           // empty: documented default for the system
    std::size_t transient = 0;                      // samples discarded before recording, parameter held at p_0
    std::optional<ParameterSchedule> domain_schedule;  // KS only: drives L instead of domain_size

    [[nodiscard]] SystemKind kind() const noexcept { return kind_of(id); }

    [[nodiscard]] std::size_t dimension() const noexcept {
        switch (id) {
            case SystemId::fold_map:
            case SystemId::pitchfork_flow:
            case SystemId::logistic_map: return 1;
            case SystemId::period_doubling_map:
            case SystemId::hopf_flow: return 2;
            case SystemId::lorenz63: return 3;
            case SystemId::ks_pde: return spatial_points;
        }
        return 0;
    }

    /// Time between recorded samples (1 for maps).
    [[nodiscard]] double sample_time() const noexcept { return kind() == SystemKind::discrete_map ? 1.0 : dt; }

    void validate() const {
        if (length < 2) throw ConfigError("SystemSpec: length T must be at least 2");
        if (!(noise >= 0.0) || !std::isfinite(noise)) throw ConfigError("SystemSpec: noise intensity must be >= 0");
        if (kind() != SystemKind::discrete_map && !(dt > 0.0)) throw ConfigError("SystemSpec: dt must be positive");
        if (id == SystemId::ks_pde) {
            if (spatial_points < 8 || (spatial_points & (spatial_points - 1)) != 0)
                throw ConfigError("SystemSpec: KS spatial_points must be a power of two >= 8");
            if (!domain_schedule && !(domain_size > 0.0)) throw ConfigError("SystemSpec: KS domain_size must be positive");
            if (domain_schedule) domain_schedule->validate(length);
        }
        schedule.validate(length);
        if (initial_state.size() != 0 && static_cast<std::size_t>(initial_state.size()) != dimension())
            throw ConfigError("SystemSpec: initial_state dimension mismatch");
    }
};

// -----------------------------------------------------------------------------
// Equations
// -----------------------------------------------------------------------------

namespace equations {

inline constexpr double kFoldHalfSaturation = 0.75;
inline constexpr double kHenonB = 0.3;
inline constexpr double kLorenzSigma = 10.0;
inline constexpr double kLorenzBeta = 8.0 / 3.0;

/// Noiseless update of a map system.
[[nodiscard]] inline Vector map_step(SystemId id, const Vector& s, double p) {
    Vector out(s.size());
    switch (id) {
        case SystemId::fold_map: {
            const double x = s(0);
            const double h2 = kFoldHalfSaturation * kFoldHalfSaturation;
            out(0) = x * std::exp(0.75 - 0.1 * x) - p * x * x / (x * x + h2);
            break;
        }
        case SystemId::period_doubling_map:
            out(0) = 1.0 - p * s(0) * s(0) + s(1);
            out(1) = kHenonB * s(0);
            break;
        case SystemId::logistic_map: out(0) = p * s(0) * (1.0 - s(0)); break;
        default: throw ConfigError("map_step: not a map system");
    }
    return out;
}

[[nodiscard]] inline Matrix map_jacobian(SystemId id, const Vector& s, double p) {
    switch (id) {
        case SystemId::fold_map: {
            const double x = s(0);
            const double h2 = kFoldHalfSaturation * kFoldHalfSaturation;
            const double den = x * x + h2;
            Matrix J(1, 1);
            J(0, 0) = std::exp(0.75 - 0.1 * x) * (1.0 - 0.1 * x) - p * 2.0 * x * h2 / (den * den);
            return J;
        }
        case SystemId::period_doubling_map: {
            Matrix J(2, 2);
            J << -2.0 * p * s(0), 1.0, kHenonB, 0.0;
            return J;
        }
        case SystemId::logistic_map: {
            Matrix J(1, 1);
            J(0, 0) = p * (1.0 - 2.0 * s(0));
            return J;
        }
        default: throw ConfigError("map_jacobian: not a map system");
    }
}

/// Noiseless vector field of a flow system.
[[nodiscard]] inline Vector flow_field(SystemId id, const Vector& s, double p) {
    Vector out(s.size());
    switch (id) {
        case SystemId::pitchfork_flow: out(0) = 0.5 + p * s(0) - s(0) * s(0) * s(0); break;
        case SystemId::hopf_flow: {
            const double r2 = s(0) * s(0) + s(1) * s(1);
            out(0) = p * s(0) - s(1) - s(0) * r2;
            out(1) = s(0) + p * s(1) - s(1) * r2;
            break;
        }
        case SystemId::lorenz63:
            out(0) = kLorenzSigma * (s(1) - s(0));
            out(1) = p * s(0) - s(1) - s(0) * s(2);
            out(2) = s(0) * s(1) - kLorenzBeta * s(2);
            break;
        default: throw ConfigError("flow_field: not a flow system");
    }
    return out;
}

[[nodiscard]] inline Matrix flow_jacobian(SystemId id, const Vector& s, double p) {
    switch (id) {
        case SystemId::pitchfork_flow: {
            Matrix J(1, 1);
            J(0, 0) = p - 3.0 * s(0) * s(0);
            return J;
        }
        case SystemId::hopf_flow: {
            const double x = s(0), y = s(1);
            Matrix J(2, 2);
            J << p - 3.0 * x * x - y * y, -1.0 - 2.0 * x * y, 1.0 - 2.0 * x * y, p - x * x - 3.0 * y * y;
            return J;
        }
        case SystemId::lorenz63: {
            Matrix J(3, 3);
            J << -kLorenzSigma, kLorenzSigma, 0.0, p - s(2), -1.0, -s(0), s(1), s(0), -kLorenzBeta;
            return J;
        }
        default: throw ConfigError("flow_jacobian: not a flow system");
    }
}

}  // namespace equations

// -----------------------------------------------------------------------------
// Default initial states
// -----------------------------------------------------------------------------

namespace detail {

inline double henon_fixed_point(double p) {
    if (std::abs(p) < 1e-12) return 1.0 / (1.0 - equations::kHenonB);
    const double a = 1.0 - equations::kHenonB;
    return (-a + std::sqrt(a * a + 4.0 * p)) / (2.0 * p);
}

/// Largest real root of 0.5 + p s - s^3 (Newton from the right is monotone).
inline double pitchfork_upper_root(double p) {
    double s = 2.0 + std::sqrt(std::max(0.0, p));
    for (int i = 0; i < 100; ++i) {
        const double f = 0.5 + p * s - s * s * s;
        const double df = p - 3.0 * s * s;
        const double next = s - f / df;
        if (std::abs(next - s) < 1e-15 * std::max(1.0, std::abs(s))) return next;
        s = next;
    }
    return s;
}

/// Fixed points of the fold map on (0, 7.5) by sign scan plus bisection,
/// ascending. The map's growth term is below one beyond s = 7.5.
inline std::vector<double> fold_fixed_points(double p) {
    const auto g = [p](double x) {
        return equations::map_step(SystemId::fold_map, Vector::Constant(1, x), p)(0) - x;
    };
    std::vector<double> roots;
    constexpr int grid = 4000;
    constexpr double lo = 1e-6, hi = 7.5;
    double a = lo, ga = g(a);
    for (int i = 1; i <= grid; ++i) {
        const double b = lo + (hi - lo) * i / grid;
        const double gb = g(b);
        if (ga == 0.0) roots.push_back(a);
        else if (ga * gb < 0.0) {
            double l = a, r = b, gl = ga;
            for (int it = 0; it < 200 && r - l > 1e-15; ++it) {
                const double m = 0.5 * (l + r);
                const double gm = g(m);
                if (gl * gm <= 0.0) r = m;
                else { l = m; gl = gm; }
            }
            roots.push_back(0.5 * (l + r));
        }
        a = b;
        ga = gb;
    }
    return roots;
}

}  // namespace detail

/// Documented starting state when `initial_state` is empty.
[[nodiscard]] inline Vector default_initial_state(const SystemSpec& spec) {
    const double p0 = spec.schedule.at(0.0, spec.length);
    switch (spec.id) {
        case SystemId::fold_map: return Vector::Constant(1, 3.0);
        case SystemId::period_doubling_map: {
            const double x = detail::henon_fixed_point(p0);
            return (Vector(2) << x, equations::kHenonB * x).finished();
        }
        case SystemId::pitchfork_flow: return Vector::Constant(1, detail::pitchfork_upper_root(p0));
        case SystemId::hopf_flow: return (Vector(2) << 1.0, 0.0).finished();
        case SystemId::logistic_map: return Vector::Constant(1, 0.4);
        case SystemId::lorenz63: return Vector::Ones(3);
        case SystemId::ks_pde: {
            Rng rng(mix_seed(spec.seed, 17));
            std::normal_distribution<double> normal(0.0, 0.1);
            Vector u(static_cast<Eigen::Index>(spec.spatial_points));
            for (Eigen::Index i = 0; i < u.size(); ++i) u(i) = normal(rng);
            u.array() -= u.mean();
            return u;
        }
    }
    return {};
}

// -----------------------------------------------------------------------------
// Simulation
// -----------------------------------------------------------------------------

namespace detail {

inline void add_state_noise(Vector& s, double intensity, double scale, Rng& rng,
                            std::normal_distribution<double>& normal) {
    if (intensity == 0.0) return;
    for (Eigen::Index j = 0; j < s.size(); ++j) s(j) += intensity * s(j) * normal(rng) * scale;
}

inline void check_finite(const Vector& s, std::size_t index) {
    if (!s.allFinite()) throw NumericError("simulate: trajectory blow-up, first non-finite sample", index);
}

}  // namespace detail

/// Generates T samples. Maps add omega*zeta*s per iterate; flows take an RK4
/// drift step then add omega*s*zeta*sqrt(dt); KS adds the same increment in
/// physical space after each ETDRK4 step. Identical specs give bit-identical
/// output.
[[nodiscard]] inline TimeSeries simulate(const SystemSpec& spec) {
    spec.validate();
    const auto T = spec.length;
    const auto N = static_cast<Eigen::Index>(spec.dimension());
    Rng rng(mix_seed(spec.seed, 0));
    std::normal_distribution<double> normal(0.0, 1.0);
    Vector s = spec.initial_state.size() ? spec.initial_state : default_initial_state(spec);
    Matrix out(static_cast<Eigen::Index>(T), N);

    const auto param = [&](double index) { return spec.schedule.at(index, T); };

    switch (spec.kind()) {
        case SystemKind::discrete_map: {
            const auto step = [&](double p) {
                const Vector prev = s;
                s = equations::map_step(spec.id, prev, p);
                if (spec.noise != 0.0)
                    for (Eigen::Index j = 0; j < N; ++j) s(j) += spec.noise * normal(rng) * prev(j);
            };
            for (std::size_t i = 0; i < spec.transient; ++i) step(param(0.0));
            detail::check_finite(s, 0);
            out.row(0) = s.transpose();
            for (std::size_t i = 0; i + 1 < T; ++i) {
                step(param(static_cast<double>(i)));
                detail::check_finite(s, i + 1);
                out.row(static_cast<Eigen::Index>(i + 1)) = s.transpose();
            }
            return {std::move(out), 0.0, 1.0, true};
        }
        case SystemKind::continuous_flow: {
            const double h = spec.dt;
            const double root_h = std::sqrt(h);
            const auto step = [&](double i0, bool frozen) {
                const double pa = frozen ? param(0.0) : param(i0);
                const double pm = frozen ? pa : param(i0 + 0.5);
                const double pb = frozen ? pa : param(i0 + 1.0);
                const Vector k1 = equations::flow_field(spec.id, s, pa);
                const Vector k2 = equations::flow_field(spec.id, s + 0.5 * h * k1, pm);
                const Vector k3 = equations::flow_field(spec.id, s + 0.5 * h * k2, pm);
                const Vector k4 = equations::flow_field(spec.id, s + h * k3, pb);
                const Vector drifted = s + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
                const Vector prev = s;
                s = drifted;
                if (spec.noise != 0.0)
                    for (Eigen::Index j = 0; j < N; ++j) s(j) += spec.noise * prev(j) * normal(rng) * root_h;
            };
            for (std::size_t i = 0; i < spec.transient; ++i) step(0.0, true);
            detail::check_finite(s, 0);
            out.row(0) = s.transpose();
            for (std::size_t i = 0; i + 1 < T; ++i) {
                step(static_cast<double>(i), false);
                detail::check_finite(s, i + 1);
                out.row(static_cast<Eigen::Index>(i + 1)) = s.transpose();
            }
            return {std::move(out), 0.0, h, false};
        }
        case SystemKind::pde: {
            const double h = spec.dt;
            const double root_h = std::sqrt(h);
            const auto length_at = [&](double index) {
                return spec.domain_schedule ? spec.domain_schedule->at(index, T) : spec.domain_size;
            };
            KuramotoSivashinsky solver(spec.spatial_points, length_at(0.0), param(0.0), h);
            const auto step = [&](double index) {
                solver.configure(length_at(index), param(index));
                const Vector prev = s;
                solver.step(s);
                if (spec.noise != 0.0)
                    for (Eigen::Index j = 0; j < N; ++j) s(j) += spec.noise * prev(j) * normal(rng) * root_h;
            };
            for (std::size_t i = 0; i < spec.transient; ++i) step(0.0);
            detail::check_finite(s, 0);
            out.row(0) = s.transpose();
            for (std::size_t i = 0; i + 1 < T; ++i) {
                step(static_cast<double>(i));
                detail::check_finite(s, i + 1);
                out.row(static_cast<Eigen::Index>(i + 1)) = s.transpose();
            }
            return {std::move(out), 0.0, h, false};
        }
    }
    throw ConfigError("simulate: unsupported system");
}

// -----------------------------------------------------------------------------
// Presets
// -----------------------------------------------------------------------------

struct PresetInfo {
    std::string_view name;
    std::string_view description;
};

inline constexpr std::array<PresetInfo, 12> kPresets{{
    {"fold_fig2", "fold map, p_i = i/T + 1, T = 20000, omega = 0.01 (fold at p* = 1.82)"},
    {"period_doubling_fig2", "Henon-type map, p_i = 0.15 i/T + 0.25, T = 20000, omega = 0.01 (period doubling at p* = 0.37)"},
    {"pitchfork_fig2", "pitchfork flow, p = 1.65 t/(T dt) - 0.5, dt = 0.1, T = 20000, omega = 0.01"},
    {"hopf_fig2", "Hopf normal form, p = -2 t/(T dt) + 2.5, dt = 0.05, T = 20000, omega = 0.01"},
    {"hopf_cycle_to_eq", "Hopf normal form, p = -2.3 t/(T dt) + 2, dt = 0.05, T = 20000, omega = 0.01"},
    {"logistic_fig2c", "logistic map, p_i = 0.13 i/T + 3.44, T = 50000, omega = 0.003"},
    {"lorenz_eq_to_chaos", "Lorenz63, rho = 22 t/(T dt) + 2, dt = 0.01, T = 20000, omega = 0.001"},
    {"lorenz_chaos_to_eq", "Lorenz63, rho = -30 t/(T dt) + 50, dt = 0.01, T = 20000, omega = 0.001"},
    {"lorenz_near_eq", "Lorenz63, rho = 10, dt = 0.005, T = 3000, omega = 0.001"},
    {"ks_periodic_to_chaos", "KS, L = 2 pi, p = 0.0056 t/(T dt) + 0.076, dt = 0.02, T = 20000, 64 points, omega = 1e-4"},
    {"ks_chaos_to_periodic", "KS, p = 1, L stepping 40 -> 30 every 10000 samples, dt = 0.25, 64 points, omega = 1e-4"},
    {"ks_chaotic", "KS, L = 22, p = 1, dt = 0.25, T = 20000, 64 points, omega = 1e-4"},
}};

/// KS domain ladder for the stepwise preset; crosses L* ~ 33.7 between 34 and 32.
inline constexpr std::array<double, 6> kKsDomainLadder{40.0, 38.0, 36.0, 34.0, 32.0, 30.0};
inline constexpr std::size_t kKsLadderHold = 10000;

[[nodiscard]] inline std::string preset_list() {
    std::string out;
    for (const auto& p : kPresets) {
        if (!out.empty()) out += ", ";
        out += p.name;
    }
    return out;
}

[[nodiscard]] inline SystemSpec preset(std::string_view name) {
    SystemSpec s;
    if (name == "fold_fig2") {
        s.id = SystemId::fold_map;
        s.schedule = ParameterSchedule::linear(1.0, 1.0);
        s.noise = 0.01;
    } else if (name == "period_doubling_fig2") {
        s.id = SystemId::period_doubling_map;
        s.schedule = ParameterSchedule::linear(0.15, 0.25);
        s.noise = 0.01;
    } else if (name == "pitchfork_fig2") {
        s.id = SystemId::pitchfork_flow;
        s.schedule = ParameterSchedule::linear(1.65, -0.50);
        s.dt = 0.1;
        s.noise = 0.01;
    } else if (name == "hopf_fig2") {
        s.id = SystemId::hopf_flow;
        s.schedule = ParameterSchedule::linear(-2.0, 2.5);
        s.dt = 0.05;
        s.noise = 0.01;
    } else if (name == "hopf_cycle_to_eq") {
        s.id = SystemId::hopf_flow;
        s.schedule = ParameterSchedule::linear(-2.3, 2.0);
        s.dt = 0.05;
        s.noise = 0.01;
    } else if (name == "logistic_fig2c") {
        s.id = SystemId::logistic_map;
        s.schedule = ParameterSchedule::linear(0.13, 3.44);
        s.length = 50000;
        s.noise = 0.003;
    } else if (name == "lorenz_eq_to_chaos" || name == "lorenz_chaos_to_eq" || name == "lorenz_near_eq") {
        s.id = SystemId::lorenz63;
        s.dt = 0.01;
        s.noise = 0.001;
        s.transient = 500;
        if (name == "lorenz_eq_to_chaos") s.schedule = ParameterSchedule::linear(22.0, 2.0);
        else if (name == "lorenz_chaos_to_eq") s.schedule = ParameterSchedule::linear(-30.0, 50.0);
        else {
            s.schedule = ParameterSchedule::constant(10.0);
            s.dt = 0.005;
            s.length = 3000;
        }
    } else if (name == "ks_periodic_to_chaos") {
        s.id = SystemId::ks_pde;
        s.schedule = ParameterSchedule::linear(0.0056, 0.076);
        s.dt = 0.02;
        s.domain_size = 2.0 * std::numbers::pi;
        s.spatial_points = 64;
        s.noise = 1e-4;
        s.transient = 1000;
    } else if (name == "ks_chaos_to_periodic") {
        s.id = SystemId::ks_pde;
        s.schedule = ParameterSchedule::constant(1.0);
        s.dt = 0.25;
        s.spatial_points = 64;
        s.noise = 1e-4;
        s.transient = 1000;
        std::vector<ParameterSchedule::Level> ladder;
        for (double L : kKsDomainLadder) ladder.push_back({L, kKsLadderHold});
        s.domain_schedule = ParameterSchedule::stepwise(std::move(ladder));
        s.domain_size = kKsDomainLadder.front();
        s.length = kKsLadderHold * kKsDomainLadder.size();
    } else if (name == "ks_chaotic") {
        s.id = SystemId::ks_pde;
        s.schedule = ParameterSchedule::constant(1.0);
        s.dt = 0.25;
        s.domain_size = 22.0;
        s.spatial_points = 64;
        s.noise = 1e-4;
        s.transient = 1000;
    } else {
        throw ConfigError("unknown preset '" + std::string(name) + "'; valid presets: " + preset_list());
    }
    return s;
}

// -----------------------------------------------------------------------------
// Ground truth
// -----------------------------------------------------------------------------

struct GroundTruthDej {
    Complex value;
    Vector equilibrium;
    double residual_norm = 0.0;
    std::size_t iterations = 0;
};

/// Documented Newton starting point for the equilibrium whose stability is
/// reported: fold -> upper fixed point, Henon -> positive fixed point,
/// logistic -> 1 - 1/p, pitchfork -> largest root, Hopf -> origin,
/// Lorenz63 -> the C+ equilibrium (origin for p <= 1).
[[nodiscard]] inline Vector ground_truth_guess(SystemId id, double p) {
    switch (id) {
        case SystemId::fold_map: {
            const auto roots = detail::fold_fixed_points(p);
            return Vector::Constant(1, roots.empty() ? 3.0 : roots.back());
        }
        case SystemId::period_doubling_map: {
            const double x = detail::henon_fixed_point(p);
            return (Vector(2) << x, equations::kHenonB * x).finished();
        }
        case SystemId::logistic_map: return Vector::Constant(1, p > 1.0 ? 1.0 - 1.0 / p : 0.0);
        case SystemId::pitchfork_flow: return Vector::Constant(1, detail::pitchfork_upper_root(p));
        case SystemId::hopf_flow: return Vector::Zero(2);
        case SystemId::lorenz63: {
            if (p <= 1.0) return Vector::Zero(3);
            const double c = std::sqrt(equations::kLorenzBeta * (p - 1.0));
            return (Vector(3) << c, c, p - 1.0).finished();
        }
        case SystemId::ks_pde: break;
    }
    throw ConfigError("ground truth: no analytic equilibrium available for the KS system");
}

/// Dominant Jacobian eigenvalue of the true system at an equilibrium found by
/// Newton on the noiseless equations (largest real part for flows, largest
/// modulus for maps).
[[nodiscard]] inline GroundTruthDej ground_truth_dej(const SystemSpec& spec, double p,
                                                     const std::optional<Vector>& guess = std::nullopt) {
    if (spec.id == SystemId::ks_pde) throw ConfigError("ground_truth_dej: not available for the KS system");
    const Vector x0 = guess ? *guess : ground_truth_guess(spec.id, p);
    const bool is_map = spec.kind() == SystemKind::discrete_map;
    const auto g = [&](const Vector& s) -> Vector {
        return is_map ? Vector(equations::map_step(spec.id, s, p) - s) : equations::flow_field(spec.id, s, p);
    };
    const auto jac = [&](const Vector& s) -> Matrix {
        if (is_map) return equations::map_jacobian(spec.id, s, p) - Matrix::Identity(s.size(), s.size());
        return equations::flow_jacobian(spec.id, s, p);
    };
    const auto res = damped_newton(g, jac, x0, 1e-12, 100);
    if (!res.converged)
        throw NumericError("ground_truth_dej: Newton did not converge, residual norm " +
                           std::to_string(res.residual_norm));
    const Matrix J = is_map ? equations::map_jacobian(spec.id, res.x, p) : equations::flow_jacobian(spec.id, res.x, p);
    const auto pair = dominant_eigenpair(J, is_map ? EigenConvention::max_modulus : EigenConvention::max_real);
    return {pair.value, res.x, res.residual_norm, res.iterations};
}

/// Largest Lyapunov exponent of the noiseless system at fixed p; per iterate
/// for maps, per time unit for flows. A non-converged trace sets
/// `converged = false` rather than throwing.
[[nodiscard]] inline LyapunovEstimate ground_truth_mle(const SystemSpec& spec, double p, std::size_t steps,
                                                       double tol = 0.02) {
    if (spec.id == SystemId::ks_pde) throw ConfigError("ground_truth_mle: not available for the KS system");
    Vector x0 = default_initial_state(spec);
    Rng rng(mix_seed(spec.seed, 29));
    Matrix tangent(x0.size(), 1);
    for (Eigen::Index i = 0; i < tangent.rows(); ++i) tangent(i, 0) = uniform_symmetric(rng, 1.0);
    if (spec.kind() == SystemKind::discrete_map) {
        const auto advance = [&](Vector& x, Matrix& V) {
            V = equations::map_jacobian(spec.id, x, p) * V;
            x = equations::map_step(spec.id, x, p);
        };
        return benettin(advance, x0, tangent, steps, 1, 1.0, 0.2, tol);
    }
    const double h = spec.dt;
    const auto field = [&](const Vector& x) { return equations::flow_field(spec.id, x, p); };
    const auto jvp = [&](const Vector& x, const Matrix& V) -> Matrix {
        return equations::flow_jacobian(spec.id, x, p) * V;
    };
    const auto advance = [&](Vector& x, Matrix& V) { rk4_tangent_step(field, jvp, x, V, h); };
    return benettin(advance, x0, tangent, steps, 10, h, 0.2, tol);
}

}  // namespace tipping
