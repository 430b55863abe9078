#pragma once

// Stability measures of a closed-loop reservoir: dominant Jacobian eigenvalue
// at an equilibrium (DEJ), maximum nontrivial Floquet multiplier of a periodic
// orbit (MFM) and maximum Lyapunov exponent (MLE).

#include "tipping/dynamics.hpp"
#include "tipping/reservoir.hpp"

#include <optional>

namespace tipping {

/// Reservoir measures plus the classical indicators, so one series type
/// carries both.
enum class MeasureKind { dej, mfm, mle, variance, lag1_ac, skewness };

[[nodiscard]] inline std::string_view to_string(MeasureKind k) {
    switch (k) {
        case MeasureKind::dej: return "DEJ";
        case MeasureKind::mfm: return "MFM";
        case MeasureKind::mle: return "MLE";
        case MeasureKind::variance: return "variance";
        case MeasureKind::lag1_ac: return "lag1_ac";
        case MeasureKind::skewness: return "skewness";
    }
    return "?";
}

[[nodiscard]] inline MeasureKind parse_measure_kind(std::string_view s) {
    if (s == "DEJ" || s == "dej") return MeasureKind::dej;
    if (s == "MFM" || s == "mfm") return MeasureKind::mfm;
    if (s == "MLE" || s == "mle") return MeasureKind::mle;
    if (s == "variance") return MeasureKind::variance;
    if (s == "lag1_ac") return MeasureKind::lag1_ac;
    if (s == "skewness") return MeasureKind::skewness;
    throw ConfigError("unknown measure kind '" + std::string(s) +
                      "' (expected DEJ, MFM, MLE, variance, lag1_ac or skewness)");
}

[[nodiscard]] constexpr bool is_reservoir_measure(MeasureKind k) noexcept {
    return k == MeasureKind::dej || k == MeasureKind::mfm || k == MeasureKind::mle;
}

[[nodiscard]] inline EigenConvention convention_for(ReservoirMode mode) {
    return mode == ReservoirMode::continuous ? EigenConvention::max_real : EigenConvention::max_modulus;
}

/// Jacobian of the closed-loop dynamics at r.
[[nodiscard]] inline Matrix jacobian_at(const AutonomousRC& rc, const Vector& r) {
    if (!r.allFinite()) throw ConfigError("jacobian_at: non-finite state");
    return rc.jacobian(r);
}

// -----------------------------------------------------------------------------
// Equilibria and DEJ
// -----------------------------------------------------------------------------

struct Equilibrium {
    Vector r_star;
    double residual_norm = 0.0;
    std::size_t iterations = 0;
    bool converged = false;
    bool singular_fallback = false;
    std::vector<double> residual_trace;
};

/// Damped Newton on g(r) = gamma(-r + tanh(A~ r + b~)), which is the vector
/// field in continuous mode and map(r) - r in discrete mode.
[[nodiscard]] inline Equilibrium find_equilibrium(const AutonomousRC& rc, const Vector& r_init,
                                                  double newton_tol = 1e-10, std::size_t max_iters = 100) {
    if (!r_init.allFinite()) throw ConfigError("find_equilibrium: non-finite initial state");
    auto res = damped_newton([&](const Vector& r) { return rc.residual(r); },
                             [&](const Vector& r) { return rc.residual_jacobian(r); }, r_init, newton_tol, max_iters);
    return {std::move(res.x), res.residual_norm, res.iterations, res.converged, res.singular_fallback,
            std::move(res.residual_trace)};
}

[[nodiscard]] inline EigenPair dominant_eigenvalue(const Matrix& J, EigenConvention convention) {
    return dominant_eigenpair(J, convention);
}

struct DejResult {
    Complex value;
    ComplexVector eigenvector;
    double eigenvector_image_norm = 0.0;  // ||W_out v1|| with ||v1|| = 1
    Equilibrium equilibrium;
    EigenConvention convention = EigenConvention::max_real;
    bool degenerate = false;  // v1 (numerically) in the null space of W_out
};

/// Equilibrium from r_init, Jacobian there, dominant eigenpair and the
/// observability check ||W_out v1|| > null_tol * ||W_out||.
[[nodiscard]] inline DejResult compute_dej(const AutonomousRC& rc, const Vector& r_init, double null_tol = 1e-8,
                                           double newton_tol = 1e-10, std::size_t max_iters = 100) {
    DejResult out;
    out.convention = convention_for(rc.mode());
    out.equilibrium = find_equilibrium(rc, r_init, newton_tol, max_iters);
    const auto pair = dominant_eigenvalue(jacobian_at(rc, out.equilibrium.r_star), out.convention);
    out.value = pair.value;
    out.eigenvector = pair.vector;
    out.eigenvector_image_norm = (rc.W_out().cast<Complex>() * pair.vector).norm();
    out.degenerate = !(out.eigenvector_image_norm > null_tol * rc.W_out().norm());
    return out;
}

// -----------------------------------------------------------------------------
// Period detection
// -----------------------------------------------------------------------------

struct PeriodDetection {
    double period = 0.0;    // samples; fractional after refinement
    std::size_t split = 0;  // integer split length at which the test passed
    double c_t = 0.0;
    double e_t = 1.0;
    bool accepted = false;
};

namespace detail {

inline double pearson(const Eigen::Ref<const Vector>& a, const Eigen::Ref<const Vector>& b) {
    const Vector ac = a.array() - a.mean();
    const Vector bc = b.array() - b.mean();
    const double den = std::sqrt(ac.squaredNorm() * bc.squaredNorm());
    const double scale = std::max(a.cwiseAbs().maxCoeff(), b.cwiseAbs().maxCoeff());
    if (!(den > 1e-24 * std::max(1.0, scale * scale) * static_cast<double>(a.size()))) return 0.0;
    return ac.dot(bc) / den;
}

inline double split_error(const Eigen::Ref<const Vector>& a, const Eigen::Ref<const Vector>& b) {
    return (a - b).norm() / (a.norm() + b.norm() + 1e-300);
}

/// Split test comparing x[0, t) with x[shift, shift + t).
inline std::pair<double, double> shifted_scores(const Vector& x, std::size_t t, std::size_t shift) {
    const auto a = x.segment(0, static_cast<Eigen::Index>(t));
    const auto b = x.segment(static_cast<Eigen::Index>(shift), static_cast<Eigen::Index>(t));
    return {pearson(a, b), split_error(a, b)};
}

}  // namespace detail

/// Split-correlation period search: for t = T_min, T_min + 1, ... compares the
/// first t samples with the next t and accepts the first t with c_t > beta and
/// e_t < 1 - beta. The accepted split is then moved to the local maximum of
/// c_t, replaced by its smallest divisor that passes the same test as a
/// shift with comparable error, and (when `refine`) interpolated parabolically.
[[nodiscard]] inline PeriodDetection detect_period(const Vector& x, std::size_t t_min = 10, double beta = 0.95,
                                                   bool refine = true) {
    if (t_min < 2) throw ConfigError("detect_period: T_min must be at least 2");
    if (static_cast<std::size_t>(x.size()) < 2 * t_min)
        throw ConfigError("detect_period: series shorter than 2 * T_min");
    const std::size_t limit = static_cast<std::size_t>(x.size()) / 2;
    const auto passes = [&](double c, double e) { return c > beta && e < 1.0 - beta; };

    PeriodDetection out;
    std::size_t t = t_min;
    for (; t <= limit; ++t) {
        const auto [c, e] = detail::shifted_scores(x, t, t);
        if (passes(c, e)) {
            out.c_t = c;
            out.e_t = e;
            out.accepted = true;
            break;
        }
    }
    if (!out.accepted) return out;

    // Climb to the correlation peak.
    while (t + 1 <= limit) {
        const auto [c, e] = detail::shifted_scores(x, t + 1, t + 1);
        if (!(c > out.c_t)) break;
        ++t;
        out.c_t = c;
        out.e_t = e;
    }

    // Smallest true period dividing the accepted split. A short shift of a
    // smooth signal also correlates well, so its error must match the split's.
    for (std::size_t q = 2; q < t; ++q) {
        if (t % q != 0 || q + t > static_cast<std::size_t>(x.size())) continue;
        const auto [c, e] = detail::shifted_scores(x, t, q);
        if (passes(c, e) && e <= 2.0 * out.e_t + 1e-12) {
            t = q;
            std::tie(out.c_t, out.e_t) = detail::shifted_scores(x, t, t);
            break;
        }
    }
    out.split = t;
    out.period = static_cast<double>(t);

    if (refine && t > t_min && t + 1 <= limit) {
        const double cm = detail::shifted_scores(x, t - 1, t - 1).first;
        const double c0 = out.c_t;
        const double cp = detail::shifted_scores(x, t + 1, t + 1).first;
        const double curvature = cm - 2.0 * c0 + cp;
        if (curvature < 0.0) {
            const double offset = 0.5 * (cm - cp) / curvature;
            if (std::abs(offset) <= 0.5) out.period += offset;
        }
    }
    return out;
}

// -----------------------------------------------------------------------------
// Monodromy and MFM
// -----------------------------------------------------------------------------

/// Continuous: RK4 on (r, Phi) from Phi(0) = I over [0, period_time] with
/// step close to h/substeps, landing exactly on period_time. Discrete: product
/// of `cycle` per-step Jacobians along the orbit (period_time is then the
/// integer cycle length).
[[nodiscard]] inline Matrix monodromy(const AutonomousRC& rc, const Vector& r_on_orbit, double period_time,
                                      double h = 1.0, std::size_t substeps = 4) {
    const auto n = static_cast<Eigen::Index>(rc.size());
    Matrix Phi = Matrix::Identity(n, n);
    if (period_time <= 0.0) return Phi;
    Vector r = r_on_orbit;
    if (rc.mode() == ReservoirMode::discrete) {
        const auto cycle = static_cast<std::size_t>(std::llround(period_time));
        for (std::size_t i = 0; i < cycle; ++i) {
            Phi = rc.jvp(r, Phi);
            r = rc.map(r);
            if (!r.allFinite() || !Phi.allFinite()) throw NumericError("monodromy: non-finite orbit", i);
        }
        return Phi;
    }
    const double target = h / static_cast<double>(std::max<std::size_t>(1, substeps));
    const auto steps = static_cast<std::size_t>(std::max(1.0, std::ceil(period_time / target - 1e-9)));
    const double dt = period_time / static_cast<double>(steps);
    const auto field = [&](const Vector& x) { return rc.field(x); };
    const auto jvp = [&](const Vector& x, const Matrix& V) { return rc.jvp(x, V); };
    for (std::size_t i = 0; i < steps; ++i) {
        rk4_tangent_step(field, jvp, r, Phi, dt);
        if (!r.allFinite() || !Phi.allFinite()) throw NumericError("monodromy: non-finite orbit", i);
    }
    return Phi;
}

struct MfmOptions {
    std::size_t transient_steps = 1000;  // closed-loop steps before the orbit is sampled
    std::size_t record_steps = 2000;     // samples used for period detection
    std::size_t t_min = 10;
    double beta = 0.95;
    std::size_t substeps = 4;
    double closure_tol = 0.1;
    double null_tol = 1e-8;
};

struct MfmResult {
    Complex value;
    double modulus = 0.0;
    PeriodDetection period;
    Complex trivial_multiplier{1.0, 0.0};  // continuous mode only
    bool poor_closure = false;             // |trivial - 1| > closure_tol
    bool degenerate = false;
    Vector orbit_point;
};

/// Runs the closed loop from `r_start`, detects the period of the first
/// observable coordinate and eigen-decomposes the monodromy matrix. Returns
/// nullopt when no period is accepted.
[[nodiscard]] inline std::optional<MfmResult> compute_mfm(const AutonomousRC& rc, const Vector& r_start, double h,
                                                          const MfmOptions& opt = {}) {
    const Matrix burn = predict_autonomous(rc, r_start, opt.transient_steps, h);
    const Vector r0 = burn.row(burn.rows() - 1).transpose();
    const Matrix orbit = predict_autonomous(rc, r0, opt.record_steps - 1, h);
    const Vector signal = orbit * rc.W_out().row(0).transpose();
    MfmResult out;
    out.period = detect_period(signal, opt.t_min, opt.beta, rc.mode() == ReservoirMode::continuous);
    if (!out.period.accepted) return std::nullopt;
    out.orbit_point = r0;

    const double period_time =
        rc.mode() == ReservoirMode::discrete ? static_cast<double>(out.period.split) : out.period.period * h;
    const Matrix Phi = monodromy(rc, r0, period_time, h, opt.substeps);
    const auto dec = eigen_decompose(Phi);

    Eigen::Index chosen = -1;
    if (rc.mode() == ReservoirMode::continuous) {
        const Vector flow = rc.field(r0);
        Eigen::Index trivial = 0;
        if (flow.norm() > 0.0) {
            const ComplexVector f = (flow / flow.norm()).cast<Complex>();
            double best = -1.0;
            for (Eigen::Index i = 0; i < dec.vectors.cols(); ++i) {
                const double align = std::abs(dec.vectors.col(i).dot(f));
                if (align > best) {
                    best = align;
                    trivial = i;
                }
            }
        } else {
            // Degenerate orbit (equilibrium): treat the multiplier closest to 1 as trivial.
            (dec.values.array() - Complex(1.0, 0.0)).abs().minCoeff(&trivial);
        }
        out.trivial_multiplier = dec.values(trivial);
        out.poor_closure = std::abs(out.trivial_multiplier - 1.0) > opt.closure_tol;
        for (Eigen::Index i = 0; i < dec.values.size(); ++i) {
            if (i == trivial) continue;
            if (chosen < 0 || std::abs(dec.values(i)) > std::abs(dec.values(chosen)) + 1e-12 ||
                (std::abs(std::abs(dec.values(i)) - std::abs(dec.values(chosen))) <= 1e-12 &&
                 dec.values(i).imag() > dec.values(chosen).imag()))
                chosen = i;
        }
        if (chosen < 0) chosen = trivial;  // one-dimensional reservoir
    } else {
        chosen = detail::dominant_index(dec.values, EigenConvention::max_modulus);
    }
    out.value = dec.values(chosen);
    out.modulus = std::abs(out.value);
    const double image = (rc.W_out().cast<Complex>() * dec.vectors.col(chosen)).norm();
    out.degenerate = !(image > opt.null_tol * rc.W_out().norm());
    return out;
}

// -----------------------------------------------------------------------------
// MLE
// -----------------------------------------------------------------------------

using MleResult = LyapunovEstimate;

struct MleOptions {
    std::size_t total_steps = 20000;
    std::size_t reorth_interval = 10;
    std::size_t exponents = 1;  // K
    double burn_fraction = 0.2;
    double tol = 0.02;
    std::uint64_t seed = 1;  // initial tangent directions
};

/// Benettin/QR on the closed loop from r0; exponents per time unit
/// (continuous, step h) or per iterate (discrete).
[[nodiscard]] inline MleResult compute_mle(const AutonomousRC& rc, const Vector& r0, double h,
                                           const MleOptions& opt = {}) {
    if (opt.exponents < 1 || opt.exponents > rc.size())
        throw ConfigError("compute_mle: K must be between 1 and the reservoir size");
    const auto n = static_cast<Eigen::Index>(rc.size());
    Rng rng(mix_seed(opt.seed, 31));
    Matrix V(n, static_cast<Eigen::Index>(opt.exponents));
    for (Eigen::Index i = 0; i < V.size(); ++i) V.data()[i] = uniform_symmetric(rng, 1.0);
    if (rc.mode() == ReservoirMode::discrete) {
        const auto advance = [&](Vector& r, Matrix& Q) {
            Q = rc.jvp(r, Q);
            r = rc.map(r);
        };
        return benettin(advance, r0, V, opt.total_steps, opt.reorth_interval, 1.0, opt.burn_fraction, opt.tol);
    }
    const auto field = [&](const Vector& x) { return rc.field(x); };
    const auto jvp = [&](const Vector& x, const Matrix& Q) { return rc.jvp(x, Q); };
    const auto advance = [&](Vector& r, Matrix& Q) { rk4_tangent_step(field, jvp, r, Q, h); };
    return benettin(advance, r0, V, opt.total_steps, opt.reorth_interval, h, opt.burn_fraction, opt.tol);
}

}  // namespace tipping
