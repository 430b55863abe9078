#pragma once

// Sliding-window analysis: one trained reservoir and one measure point per
// window, low-order trend fits, threshold extrapolation, epsilon warnings,
// bifurcation classification and lead-time curves.

#include "tipping/measures.hpp"

#include <array>
#include <numeric>
#include <optional>

namespace tipping {

// -----------------------------------------------------------------------------
// Measure series
// -----------------------------------------------------------------------------

/// Quality flags on a measure point. All but `unconverged` exclude the point
/// from trend fits and warnings.
namespace quality {
inline constexpr std::uint32_t degenerate = 1u << 0;
inline constexpr std::uint32_t no_period = 1u << 1;
inline constexpr std::uint32_t newton_failed = 1u << 2;
inline constexpr std::uint32_t skipped_outlier = 1u << 3;
inline constexpr std::uint32_t numeric_error = 1u << 4;
inline constexpr std::uint32_t unconverged = 1u << 5;
inline constexpr std::uint32_t excluding = degenerate | no_period | newton_failed | skipped_outlier | numeric_error;

inline constexpr std::array<std::pair<std::uint32_t, std::string_view>, 6> kNames{{
    {degenerate, "degenerate"},
    {no_period, "no_period"},
    {newton_failed, "newton_failed"},
    {skipped_outlier, "skipped_outlier"},
    {numeric_error, "numeric_error"},
    {unconverged, "unconverged"},
}};

/// '|'-separated flag names, empty when no flag is set.
[[nodiscard]] inline std::string to_string(std::uint32_t flags) {
    std::string out;
    for (const auto& [bit, name] : kNames) {
        if (!(flags & bit)) continue;
        if (!out.empty()) out += '|';
        out += name;
    }
    return out;
}

[[nodiscard]] inline std::uint32_t parse(std::string_view text) {
    std::uint32_t flags = 0;
    while (!text.empty()) {
        const auto bar = text.find('|');
        const auto token = text.substr(0, bar);
        bool known = false;
        for (const auto& [bit, name] : kNames)
            if (token == name) {
                flags |= bit;
                known = true;
            }
        if (!known && !token.empty()) throw ConfigError("unknown quality flag '" + std::string(token) + "'");
        if (bar == std::string_view::npos) break;
        text.remove_prefix(bar + 1);
    }
    return flags;
}
}  // namespace quality

struct MeasurePoint {
    std::size_t window = 0;
    double t_mid = 0.0;
    MeasureKind kind = MeasureKind::dej;
    Complex value;
    std::uint32_t flags = 0;
    std::string note;  // failure detail, not serialized

    [[nodiscard]] bool accepted() const noexcept { return (flags & quality::excluding) == 0; }
};

struct MeasureSeries {
    MeasureKind kind = MeasureKind::dej;
    ReservoirMode mode = ReservoirMode::continuous;
    std::vector<MeasurePoint> points;

    [[nodiscard]] std::vector<MeasurePoint> accepted() const {
        std::vector<MeasurePoint> out;
        for (const auto& p : points)
            if (p.accepted()) out.push_back(p);
        return out;
    }
};

// -----------------------------------------------------------------------------
// Threshold geometry
// -----------------------------------------------------------------------------

enum class Component { real, modulus };

/// Scalar that is trended and thresholded: Re(DEJ) for flows, |DEJ| for maps,
/// |MFM|, and the MLE itself.
[[nodiscard]] constexpr Component default_component(MeasureKind kind, ReservoirMode mode) noexcept {
    if (kind == MeasureKind::mfm) return Component::modulus;
    if (kind == MeasureKind::dej && mode == ReservoirMode::discrete) return Component::modulus;
    return Component::real;
}

[[nodiscard]] inline double component_value(Complex z, Component c) noexcept {
    return c == Component::real ? z.real() : std::abs(z);
}

/// Critical value of the trended component.
[[nodiscard]] constexpr double critical_threshold(MeasureKind kind, ReservoirMode mode) noexcept {
    return default_component(kind, mode) == Component::modulus ? 1.0 : 0.0;
}

/// MLE approaches its threshold from above; the others from below.
[[nodiscard]] constexpr bool approaches_from_above(MeasureKind kind) noexcept { return kind == MeasureKind::mle; }

// -----------------------------------------------------------------------------
// Sliding analysis
// -----------------------------------------------------------------------------

struct WindowPlan {
    std::size_t d = 2000;  // window length
    std::size_t k = 500;   // slide step

    /// Number of windows, floor((T - d) / k).
    [[nodiscard]] std::size_t count(std::size_t length) const noexcept { return length < d ? 0 : (length - d) / k; }

    void validate(std::size_t length) const {
        if (k < 1 || k > d || d > length)
            throw ConfigError("WindowPlan: need 1 <= k <= d <= T (k=" + std::to_string(k) + ", d=" + std::to_string(d) +
                              ", T=" + std::to_string(length) + ")");
        if (d < 2) throw ConfigError("WindowPlan: window length d must be at least 2");
    }
};

struct AnalysisOptions {
    std::vector<MeasureKind> kinds{MeasureKind::dej};
    bool standardize = true;
    unsigned threads = 1;
    std::vector<std::size_t> outlier_windows;
    double newton_tol = 1e-10;
    std::size_t newton_max_iters = 100;
    double null_tol = 1e-8;
    MfmOptions mfm;
    MleOptions mle;
};

/// Midpoint timestamp (t_i + t_{i+d}) / 2 of window w.
[[nodiscard]] inline double window_midpoint(const TimeSeries& series, const WindowPlan& plan, std::size_t w) {
    const double start = series.time(w * plan.k);
    const double end = series.time(w * plan.k + plan.d);
    return 0.5 * (start + end);
}

namespace detail {

inline MeasurePoint measure_window(const TrainedWindow& tw, MeasureKind kind, const AnalysisOptions& opt) {
    MeasurePoint pt;
    pt.kind = kind;
    switch (kind) {
        case MeasureKind::dej: {
            // The window average sits inside limit cycles; the last state is the fallback.
            auto dej = compute_dej(tw.autonomous, tw.hidden_mean, opt.null_tol, opt.newton_tol, opt.newton_max_iters);
            if (!dej.equilibrium.converged)
                dej = compute_dej(tw.autonomous, tw.forecast_start, opt.null_tol, opt.newton_tol,
                                  opt.newton_max_iters);
            pt.value = dej.value;
            if (!dej.equilibrium.converged) pt.flags |= quality::newton_failed;
            if (dej.degenerate) pt.flags |= quality::degenerate;
            break;
        }
        case MeasureKind::mfm: {
            auto mfm_opt = opt.mfm;
            mfm_opt.null_tol = opt.null_tol;
            const auto mfm = compute_mfm(tw.autonomous, tw.forecast_start, tw.dt, mfm_opt);
            if (!mfm) {
                pt.flags |= quality::no_period;
                pt.value = Complex(std::numeric_limits<double>::quiet_NaN(), 0.0);
            } else {
                pt.value = mfm->value;
                if (mfm->degenerate) pt.flags |= quality::degenerate;
            }
            break;
        }
        case MeasureKind::mle: {
            const auto mle = compute_mle(tw.autonomous, tw.forecast_start,
                                         tw.autonomous.mode() == ReservoirMode::discrete ? 1.0 : tw.dt, opt.mle);
            pt.value = Complex(mle.leading(), 0.0);
            if (!mle.converged) pt.flags |= quality::unconverged;
            break;
        }
        default: throw ConfigError("sliding analysis: measure kind is not a reservoir measure");
    }
    return pt;
}

}  // namespace detail

/// Trains one reservoir readout per window [ik, ik + d) on a shared random
/// reservoir and computes every requested measure. Failed windows are kept
/// with quality flags. Returns one series per requested kind, in request order.
[[nodiscard]] inline std::vector<MeasureSeries> run_sliding_analysis(const TimeSeries& series, const WindowPlan& plan,
                                                                     const ReservoirConfig& config,
                                                                     const AnalysisOptions& options) {
    plan.validate(series.size());
    config.validate();
    if (options.kinds.empty()) throw ConfigError("run_sliding_analysis: no measure kinds requested");
    if ((config.mode == ReservoirMode::discrete) != series.discrete)
        throw ConfigError(std::string("run_sliding_analysis: ") + std::string(to_string(config.mode)) +
                          " reservoir does not match a " + (series.discrete ? "discrete" : "continuous") + " series");
    const std::size_t windows = plan.count(series.size());
    if (windows == 0) throw ConfigError("run_sliding_analysis: series too short for a single window");

    const auto model = build_reservoir(config, series.dimension());
    std::vector<std::vector<MeasurePoint>> results(windows);
    parallel_for(windows, options.threads, [&](std::size_t w) {
        auto& slot = results[w];
        slot.resize(options.kinds.size());
        const double t_mid = window_midpoint(series, plan, w);
        const bool outlier = std::find(options.outlier_windows.begin(), options.outlier_windows.end(), w) !=
                             options.outlier_windows.end();
        std::optional<TrainedWindow> tw;
        std::string failure;
        if (!outlier) {
            try {
                tw = train_window(model, series.slice(w * plan.k, plan.d), config.lambda, config.washout_fraction,
                                  options.standardize);
            } catch (const NumericError& e) {
                failure = e.what();
            }
        }
        for (std::size_t q = 0; q < options.kinds.size(); ++q) {
            MeasurePoint pt;
            pt.kind = options.kinds[q];
            if (outlier) {
                pt.flags = quality::skipped_outlier;
                pt.value = Complex(std::numeric_limits<double>::quiet_NaN(), 0.0);
            } else if (!tw) {
                pt.flags = quality::numeric_error;
                pt.note = failure;
                pt.value = Complex(std::numeric_limits<double>::quiet_NaN(), 0.0);
            } else {
                try {
                    pt = detail::measure_window(*tw, options.kinds[q], options);
                } catch (const NumericError& e) {
                    pt.flags = quality::numeric_error;
                    pt.note = e.what();
                    pt.value = Complex(std::numeric_limits<double>::quiet_NaN(), 0.0);
                }
            }
            pt.window = w;
            pt.t_mid = t_mid;
            slot[q] = std::move(pt);
        }
    });

    std::vector<MeasureSeries> out(options.kinds.size());
    for (std::size_t q = 0; q < options.kinds.size(); ++q) {
        out[q].kind = options.kinds[q];
        out[q].mode = config.mode;
        out[q].points.reserve(windows);
        for (std::size_t w = 0; w < windows; ++w) out[q].points.push_back(results[w][q]);
        if (out[q].accepted().empty())
            throw NumericError("run_sliding_analysis: no window produced an accepted " +
                               std::string(to_string(options.kinds[q])) + " value");
    }
    return out;
}

[[nodiscard]] inline MeasureSeries run_sliding_analysis(const TimeSeries& series, const WindowPlan& plan,
                                                        const ReservoirConfig& config, MeasureKind kind,
                                                        AnalysisOptions options = {}) {
    options.kinds = {kind};
    return std::move(run_sliding_analysis(series, plan, config, options).front());
}

// -----------------------------------------------------------------------------
// Trend fitting
// -----------------------------------------------------------------------------

struct TrendModel {
    std::vector<double> coefficients;     // ascending powers of t
    std::vector<double> standard_errors;  // of `coefficients`
    int order = 1;
    double t_first = 0.0;
    double t_l = 0.0;
    double rms_residual = 0.0;
    std::size_t points = 0;
    // Evaluation uses the centered, scaled variable u = (t - center) / scale.
    double center = 0.0;
    double scale = 1.0;
    std::vector<double> scaled_coefficients;

    [[nodiscard]] double operator()(double t) const {
        const double u = (t - center) / scale;
        double v = 0.0;
        for (auto it = scaled_coefficients.rbegin(); it != scaled_coefficients.rend(); ++it) v = v * u + *it;
        return v;
    }

    [[nodiscard]] double derivative(double t) const {
        const double u = (t - center) / scale;
        double v = 0.0;
        for (std::size_t i = scaled_coefficients.size(); i-- > 1;) v = v * u + static_cast<double>(i) * scaled_coefficients[i];
        return v / scale;
    }
};

namespace detail {

struct PolyFit {
    Vector beta;
    Matrix covariance;
    double rss = 0.0;
};

inline PolyFit polyfit(const Vector& u, const Vector& y, int order) {
    const auto m = u.size();
    Matrix X(m, order + 1);
    for (Eigen::Index i = 0; i < m; ++i) {
        double p = 1.0;
        for (int j = 0; j <= order; ++j, p *= u(i)) X(i, j) = p;
    }
    Eigen::ColPivHouseholderQR<Matrix> qr(X);
    PolyFit f;
    f.beta = qr.solve(y);
    f.rss = (X * f.beta - y).squaredNorm();
    const double dof = static_cast<double>(m - order - 1);
    const double sigma2 = dof > 0 ? f.rss / dof : 0.0;
    f.covariance = sigma2 * (X.transpose() * X).inverse();
    return f;
}

/// Binomial re-expansion of sum b_j ((t - c)/s)^j into ascending powers of t.
inline Matrix scaled_to_raw(int order, double c, double s) {
    Matrix M = Matrix::Zero(order + 1, order + 1);  // raw = M * scaled
    for (int j = 0; j <= order; ++j) {
        for (int i = 0; i <= j; ++i) {
            double binom = 1.0;
            for (int q = 0; q < i; ++q) binom = binom * (j - q) / (q + 1);
            M(i, j) = binom * std::pow(-c, j - i) / std::pow(s, j);
        }
    }
    return M;
}

}  // namespace detail

/// Least-squares polynomial of order 1..max_order against t_mid over accepted
/// points in [t_first, t_l], order chosen by corrected AIC (ties to the lower
/// order through an RSS floor).
[[nodiscard]] inline TrendModel fit_trend(const MeasureSeries& measures, double t_l, Component component,
                                          double t_first = -std::numeric_limits<double>::infinity(),
                                          int max_order = 3) {
    std::vector<double> ts, ys;
    for (const auto& p : measures.points) {
        if (!p.accepted() || p.t_mid > t_l || p.t_mid < t_first) continue;
        const double v = component_value(p.value, component);
        if (!std::isfinite(v)) continue;
        ts.push_back(p.t_mid);
        ys.push_back(v);
    }
    constexpr std::size_t min_points = 8;
    if (ts.size() < min_points)
        throw ConfigError("fit_trend: " + std::to_string(ts.size()) + " accepted points before t_l, need " +
                          std::to_string(min_points) + "; choose a later t_l");
    const auto N = static_cast<Eigen::Index>(ts.size());
    const Vector t = Eigen::Map<const Vector>(ts.data(), N);
    const Vector y = Eigen::Map<const Vector>(ys.data(), N);

    TrendModel out;
    out.t_first = t.minCoeff();
    out.t_l = t_l;
    out.points = ts.size();
    out.center = 0.5 * (t.minCoeff() + t.maxCoeff());
    out.scale = std::max(0.5 * (t.maxCoeff() - t.minCoeff()), 1e-300);
    const Vector u = (t.array() - out.center) / out.scale;

    const double y_scale = std::max(1.0, y.cwiseAbs().maxCoeff());
    const double rss_floor = static_cast<double>(N) * std::pow(1e-13 * y_scale, 2);
    double best_aicc = std::numeric_limits<double>::infinity();
    detail::PolyFit best;
    const int top = std::min<int>(max_order, static_cast<int>(N) - 4);
    for (int m = 1; m <= std::max(1, top); ++m) {
        auto f = detail::polyfit(u, y, m);
        const double k = m + 2.0;  // coefficients plus noise variance
        const double n = static_cast<double>(N);
        const double aicc = n * std::log(std::max(f.rss, rss_floor) / n) + 2.0 * k + 2.0 * k * (k + 1.0) / (n - k - 1.0);
        if (aicc < best_aicc - 1e-12) {
            best_aicc = aicc;
            best = std::move(f);
            out.order = m;
        }
    }
    out.scaled_coefficients.assign(best.beta.data(), best.beta.data() + best.beta.size());
    const Matrix M = detail::scaled_to_raw(out.order, out.center, out.scale);
    const Vector raw = M * best.beta;
    const Matrix raw_cov = M * best.covariance * M.transpose();
    out.coefficients.assign(raw.data(), raw.data() + raw.size());
    for (Eigen::Index i = 0; i < raw.size(); ++i) out.standard_errors.push_back(std::sqrt(std::max(0.0, raw_cov(i, i))));
    out.rms_residual = std::sqrt(best.rss / static_cast<double>(N));
    return out;
}

// -----------------------------------------------------------------------------
// Extrapolation
// -----------------------------------------------------------------------------

/// First sign change of P(t) - tau on [from, to], by scan and bisection.
[[nodiscard]] inline std::optional<double> first_crossing(const TrendModel& trend, double tau, double from, double to,
                                                          std::size_t grid = 4096) {
    if (!(to > from)) return std::nullopt;
    const auto f = [&](double t) { return trend(t) - tau; };
    double a = from;
    double fa = f(a);
    if (fa == 0.0) return a;
    for (std::size_t i = 1; i <= grid; ++i) {
        const double b = from + (to - from) * static_cast<double>(i) / static_cast<double>(grid);
        const double fb = f(b);
        if (fb == 0.0) return b;
        if ((fa < 0.0) != (fb < 0.0)) {
            double lo = a, hi = b, flo = fa;
            for (int it = 0; it < 200 && hi - lo > 1e-12 * std::max(1.0, std::abs(hi)); ++it) {
                const double mid = 0.5 * (lo + hi);
                const double fm = f(mid);
                if ((flo < 0.0) == (fm < 0.0)) {
                    lo = mid;
                    flo = fm;
                } else {
                    hi = mid;
                }
            }
            return 0.5 * (lo + hi);
        }
        a = b;
        fa = fb;
    }
    return std::nullopt;
}

/// Smallest crossing of tau in (t_l, t_l + horizon], or none.
[[nodiscard]] inline std::optional<double> extrapolate_to_threshold(const TrendModel& trend, double tau,
                                                                    double horizon) {
    const auto hit = first_crossing(trend, tau, trend.t_l, trend.t_l + horizon);
    if (hit && *hit <= trend.t_l) return std::nullopt;
    return hit;
}

/// In-range crossing over [t_first, t_l] when the trend already crosses,
/// otherwise the extrapolated crossing within the horizon.
[[nodiscard]] inline std::optional<double> predict_crossing(const TrendModel& trend, double tau, double horizon) {
    if (auto inside = first_crossing(trend, tau, trend.t_first, trend.t_l)) return inside;
    return extrapolate_to_threshold(trend, tau, horizon);
}

// -----------------------------------------------------------------------------
// Warnings
// -----------------------------------------------------------------------------

struct WarningConfig {
    double epsilon = 0.1;

    void validate() const {
        if (!(epsilon > 0.0)) throw ConfigError("WarningConfig: epsilon must be positive");
    }
};

/// epsilon as a fraction of the accepted measure range (default 15%).
[[nodiscard]] inline double epsilon_from_range(const MeasureSeries& measures, double fraction = 0.15) {
    const auto c = default_component(measures.kind, measures.mode);
    double lo = std::numeric_limits<double>::infinity(), hi = -lo;
    for (const auto& p : measures.points) {
        if (!p.accepted()) continue;
        const double v = component_value(p.value, c);
        if (!std::isfinite(v)) continue;
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    if (!(hi >= lo)) throw ConfigError("epsilon_from_range: no accepted points");
    const double eps = fraction * (hi - lo);
    return eps > 0.0 ? eps : std::numeric_limits<double>::min();
}

struct WarningResult {
    bool warned = false;
    std::optional<double> onset;
};

/// Whether one value breaches the epsilon margin of its kind.
[[nodiscard]] inline bool warning_fires(double v, MeasureKind kind, ReservoirMode mode, double epsilon) {
    const double tau = critical_threshold(kind, mode);
    return approaches_from_above(kind) ? v < tau + epsilon : v > tau - epsilon;
}

/// First accepted t_mid whose value breaches the margin.
[[nodiscard]] inline WarningResult evaluate_warning(const MeasureSeries& measures, const WarningConfig& config) {
    config.validate();
    const auto c = default_component(measures.kind, measures.mode);
    for (const auto& p : measures.points) {
        if (!p.accepted()) continue;
        const double v = component_value(p.value, c);
        if (std::isfinite(v) && warning_fires(v, measures.kind, measures.mode, config.epsilon))
            return {true, p.t_mid};
    }
    return {};
}

// -----------------------------------------------------------------------------
// Classification
// -----------------------------------------------------------------------------

enum class BifurcationClass { fold_or_pitchfork, period_doubling, hopf, unclassified };

[[nodiscard]] inline std::string_view to_string(BifurcationClass c) {
    switch (c) {
        case BifurcationClass::fold_or_pitchfork: return "fold_or_pitchfork";
        case BifurcationClass::period_doubling: return "period_doubling";
        case BifurcationClass::hopf: return "hopf";
        case BifurcationClass::unclassified: return "unclassified";
    }
    return "unclassified";
}

/// Reads the limit of Re/Im(DEJ) over the final third (at least 5 points) of
/// the accepted DEJ values at or before t_l. The real-part trend must move
/// toward its target: +1 or -1 for maps, 0 for flows. Mean |Im| above im_tol
/// marks an oscillatory (Hopf or Neimark-Sacker) mode.
[[nodiscard]] inline BifurcationClass classify_bifurcation(
    const MeasureSeries& dej, double t_l = std::numeric_limits<double>::infinity(), double im_tol = 0.05) {
    if (dej.kind != MeasureKind::dej) return BifurcationClass::unclassified;
    std::vector<const MeasurePoint*> pts;
    for (const auto& p : dej.points)
        if (p.accepted() && p.t_mid <= t_l && std::isfinite(p.value.real())) pts.push_back(&p);
    constexpr std::size_t min_points = 5;
    if (pts.size() < min_points) return BifurcationClass::unclassified;
    const std::size_t seg = std::max(min_points, pts.size() / 3);
    const auto first = pts.end() - static_cast<std::ptrdiff_t>(seg);

    Vector t(static_cast<Eigen::Index>(seg)), re(static_cast<Eigen::Index>(seg));
    double im = 0.0;
    Eigen::Index i = 0;
    for (auto it = first; it != pts.end(); ++it, ++i) {
        t(i) = (*it)->t_mid;
        re(i) = (*it)->value.real();
        im += std::abs((*it)->value.imag());
    }
    im /= static_cast<double>(seg);
    const double tc = t.mean();
    const Vector tt = t.array() - tc;
    const double slope = tt.squaredNorm() > 0.0 ? tt.dot(re) / tt.squaredNorm() : 0.0;
    const double start = re.mean() + slope * (t(0) - tc);
    const double end = re.mean() + slope * (t(t.size() - 1) - tc);
    const bool oscillatory = im > im_tol;
    const auto toward = [&](double target) { return std::abs(end - target) < std::abs(start - target); };

    if (dej.mode == ReservoirMode::continuous) {
        if (!toward(0.0)) return BifurcationClass::unclassified;
        return oscillatory ? BifurcationClass::hopf : BifurcationClass::fold_or_pitchfork;
    }
    if (oscillatory) return BifurcationClass::hopf;
    if (end > 0.0 && toward(1.0) && slope > 0.0) return BifurcationClass::fold_or_pitchfork;
    if (end < 0.0 && toward(-1.0) && slope < 0.0) return BifurcationClass::period_doubling;
    return BifurcationClass::unclassified;
}

// -----------------------------------------------------------------------------
// Forecast
// -----------------------------------------------------------------------------

struct TippingForecast {
    MeasureKind kind = MeasureKind::dej;
    double threshold = 0.0;
    double epsilon = 0.0;
    std::optional<double> t_hat_p;
    double t_l = 0.0;
    std::optional<double> lead_time;  // t_p_reference - t_l
    bool warned = false;
    std::optional<double> warning_onset;
    BifurcationClass bifurcation_class = BifurcationClass::unclassified;
    std::optional<TrendModel> trend;
    std::string note;
};

/// Trend fit up to t_l, threshold crossing within the horizon, epsilon warning
/// and (for DEJ) bifurcation class. A horizon <= 0 selects twice the
/// measured span.
[[nodiscard]] inline TippingForecast predict_tipping(const MeasureSeries& measures, double t_l,
                                                     const WarningConfig& warning, double horizon = 0.0,
                                                     std::optional<double> t_p_reference = std::nullopt) {
    TippingForecast out;
    out.kind = measures.kind;
    out.threshold = critical_threshold(measures.kind, measures.mode);
    out.epsilon = warning.epsilon;
    out.t_l = t_l;
    if (t_p_reference) out.lead_time = *t_p_reference - t_l;

    MeasureSeries upto = measures;
    std::erase_if(upto.points, [&](const MeasurePoint& p) { return p.t_mid > t_l; });
    const auto w = evaluate_warning(upto, warning);
    out.warned = w.warned;
    out.warning_onset = w.onset;
    if (measures.kind == MeasureKind::dej) out.bifurcation_class = classify_bifurcation(measures, t_l);

    if (horizon <= 0.0 && !measures.points.empty())
        horizon = 2.0 * (measures.points.back().t_mid - measures.points.front().t_mid);
    try {
        out.trend = fit_trend(measures, t_l, default_component(measures.kind, measures.mode));
        out.t_hat_p = predict_crossing(*out.trend, out.threshold, horizon);
        if (!out.t_hat_p) out.note = "trend does not reach the threshold within the horizon";
    } catch (const ConfigError& e) {
        out.note = e.what();
    }
    return out;
}

// -----------------------------------------------------------------------------
// Lead-time analysis
// -----------------------------------------------------------------------------

struct LeadTimeRow {
    double cutoff = 0.0;
    double lead_time = 0.0;
    std::optional<double> t_hat_p;
    std::optional<double> abs_error;
    std::string note;
};

struct LeadTimeTable {
    std::vector<LeadTimeRow> rows;
    std::optional<double> max_admissible_lead;  // largest lead whose error is within the bound
};

[[nodiscard]] inline LeadTimeTable lead_time_curve(const MeasureSeries& measures, double t_p_reference,
                                                   const std::vector<double>& cutoffs, double accuracy_bound,
                                                   double horizon = 0.0) {
    if (cutoffs.empty()) throw ConfigError("lead_time_curve: no cutoffs given");
    LeadTimeTable out;
    const double t_end = measures.points.empty() ? 0.0 : measures.points.back().t_mid;
    if (horizon <= 0.0 && !measures.points.empty()) horizon = 2.0 * (t_end - measures.points.front().t_mid);
    for (const double c : cutoffs) {
        LeadTimeRow row;
        row.cutoff = c;
        row.lead_time = t_p_reference - c;
        if (c > t_end) {
            row.note = "cutoff beyond the last measure point";
        } else {
            try {
                const auto trend = fit_trend(measures, c, default_component(measures.kind, measures.mode));
                row.t_hat_p = predict_crossing(trend, critical_threshold(measures.kind, measures.mode), horizon);
                if (row.t_hat_p) row.abs_error = std::abs(t_p_reference - *row.t_hat_p);
                else row.note = "no threshold crossing within the horizon";
            } catch (const ConfigError& e) {
                row.note = e.what();
            }
        }
        if (row.abs_error && *row.abs_error <= accuracy_bound &&
            (!out.max_admissible_lead || row.lead_time > *out.max_admissible_lead))
            out.max_admissible_lead = row.lead_time;
        out.rows.push_back(std::move(row));
    }
    return out;
}

// -----------------------------------------------------------------------------
// Observed transition
// -----------------------------------------------------------------------------

/// Location of the largest shift in the running mean of one coordinate:
/// maximizes |mean(after) - mean(before)| over adjacent blocks of `block`
/// samples, then refines to the first crossing of the midpoint level of a
/// lightly smoothed series between the block centers. Returns a time.
[[nodiscard]] inline double detect_transition(const TimeSeries& series, std::size_t block, std::size_t coordinate = 0) {
    const std::size_t T = series.size();
    if (block < 2 || 2 * block > T) throw ConfigError("detect_transition: block must be in [2, T/2]");
    if (coordinate >= series.dimension()) throw ConfigError("detect_transition: coordinate out of range");
    const Vector x = series.column(coordinate);
    std::vector<double> prefix(T + 1, 0.0);
    for (std::size_t i = 0; i < T; ++i) prefix[i + 1] = prefix[i] + x(static_cast<Eigen::Index>(i));
    const auto mean = [&](std::size_t a, std::size_t b) { return (prefix[b] - prefix[a]) / static_cast<double>(b - a); };

    std::size_t best = block;
    double best_jump = -1.0;
    for (std::size_t s = block; s + block <= T; ++s) {
        const double jump = std::abs(mean(s, s + block) - mean(s - block, s));
        if (jump > best_jump) {
            best_jump = jump;
            best = s;
        }
    }
    const double before = mean(best - block, best);
    const double after = mean(best, best + block);
    const double level = 0.5 * (before + after);
    const std::size_t smooth = std::max<std::size_t>(1, block / 10);
    const std::size_t lo = best - block / 2;
    const std::size_t hi = std::min(T - smooth, best + block / 2);
    for (std::size_t i = lo; i < hi; ++i) {
        const double m = mean(i, i + smooth);
        if ((after > before) ? m > level : m < level) return series.time(i + smooth / 2);
    }
    return series.time(best);
}

}  // namespace tipping
