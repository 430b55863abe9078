#pragma once

// Classical early-warning indicators on sliding windows, ROC/AUC scoring of a
// measure series against a known transition, and a per-method comparison.

#include "tipping/pipeline.hpp"

#include <algorithm>
#include <cstdint>

namespace tipping {

// -----------------------------------------------------------------------------
// Rolling indicators
// -----------------------------------------------------------------------------

struct EwsOptions {
    std::optional<double> detrend_bandwidth;  // Gaussian kernel sigma as a fraction of d; off when empty
    std::size_t coordinate = 0;
};

namespace detail {

/// x minus its Gaussian-kernel smooth (sigma in samples, truncated at 4 sigma).
[[nodiscard]] inline Vector gaussian_detrend(const Vector& x, double sigma) {
    const auto n = x.size();
    const auto reach = static_cast<Eigen::Index>(std::ceil(4.0 * sigma));
    Vector out(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        double num = 0.0, den = 0.0;
        for (Eigen::Index j = std::max<Eigen::Index>(0, i - reach); j <= std::min(n - 1, i + reach); ++j) {
            const double u = static_cast<double>(j - i) / sigma;
            const double w = std::exp(-0.5 * u * u);
            num += w * x(j);
            den += w;
        }
        out(i) = x(i) - num / den;
    }
    return out;
}

[[nodiscard]] inline double sample_variance(const Vector& x) {
    const double m = x.mean();
    return (x.array() - m).square().sum() / static_cast<double>(x.size() - 1);
}

/// Pearson correlation of x[0, n-1) with x[1, n); NaN for a flat window.
[[nodiscard]] inline double lag1_autocorrelation(const Vector& x) {
    const auto n = x.size();
    const Vector a = x.head(n - 1).array() - x.head(n - 1).mean();
    const Vector b = x.tail(n - 1).array() - x.tail(n - 1).mean();
    const double den = std::sqrt(a.squaredNorm() * b.squaredNorm());
    if (!(den > 0.0)) return std::numeric_limits<double>::quiet_NaN();
    return a.dot(b) / den;
}

/// Adjusted Fisher-Pearson skewness G1; NaN for a flat window.
[[nodiscard]] inline double sample_skewness(const Vector& x) {
    const double n = static_cast<double>(x.size());
    const Vector c = x.array() - x.mean();
    const double m2 = c.squaredNorm() / n;
    if (!(m2 > 0.0)) return std::numeric_limits<double>::quiet_NaN();
    const double m3 = c.array().cube().sum() / n;
    return std::sqrt(n * (n - 1.0)) / (n - 2.0) * m3 / std::pow(m2, 1.5);
}

}  // namespace detail

/// One indicator value per window, stamped with the window midpoint. Flat
/// windows give flagged points for lag-1 AC and skewness.
[[nodiscard]] inline MeasureSeries rolling_ews(const TimeSeries& series, const WindowPlan& plan, MeasureKind indicator,
                                               const EwsOptions& options = {}) {
    if (is_reservoir_measure(indicator))
        throw ConfigError("rolling_ews: " + std::string(to_string(indicator)) + " is not an EWS indicator");
    plan.validate(series.size());
    const std::size_t min_d = indicator == MeasureKind::skewness ? 4 : 3;
    if (plan.d < min_d)
        throw ConfigError("rolling_ews: window length must be at least " + std::to_string(min_d) + " for " +
                          std::string(to_string(indicator)));
    if (options.coordinate >= series.dimension()) throw ConfigError("rolling_ews: coordinate out of range");
    if (options.detrend_bandwidth && !(*options.detrend_bandwidth > 0.0))
        throw ConfigError("rolling_ews: detrend bandwidth must be positive");

    MeasureSeries out;
    out.kind = indicator;
    out.mode = series.discrete ? ReservoirMode::discrete : ReservoirMode::continuous;
    const Vector x = series.column(options.coordinate);
    const std::size_t windows = plan.count(series.size());
    for (std::size_t w = 0; w < windows; ++w) {
        Vector seg = x.segment(static_cast<Eigen::Index>(w * plan.k), static_cast<Eigen::Index>(plan.d));
        if (options.detrend_bandwidth)
            seg = detail::gaussian_detrend(seg, *options.detrend_bandwidth * static_cast<double>(plan.d));
        MeasurePoint pt;
        pt.window = w;
        pt.kind = indicator;
        pt.t_mid = window_midpoint(series, plan, w);
        double v = 0.0;
        switch (indicator) {
            case MeasureKind::variance: v = detail::sample_variance(seg); break;
            case MeasureKind::lag1_ac: v = detail::lag1_autocorrelation(seg); break;
            case MeasureKind::skewness: v = detail::sample_skewness(seg); break;
            default: break;
        }
        pt.value = Complex(v, 0.0);
        if (!std::isfinite(v)) {
            pt.flags = quality::degenerate;
            pt.note = "zero within-window variance";
        }
        out.points.push_back(std::move(pt));
    }
    return out;
}

// -----------------------------------------------------------------------------
// ROC / AUC
// -----------------------------------------------------------------------------

enum class Direction { higher_is_warning, closer_to_threshold_is_warning };

[[nodiscard]] inline std::string_view to_string(Direction d) {
    return d == Direction::higher_is_warning ? "higher_is_warning" : "closer_to_threshold_is_warning";
}

/// Reservoir measures are scored by closeness to their critical value; EWS
/// indicators by their raw value.
[[nodiscard]] inline Direction default_direction(MeasureKind kind) {
    return is_reservoir_measure(kind) ? Direction::closer_to_threshold_is_warning : Direction::higher_is_warning;
}

struct RocResult {
    std::vector<double> thresholds;  // +inf first, then unique scores descending
    std::vector<double> tpr;
    std::vector<double> fpr;
    double auc = 0.0;
    double t_w = 0.0;
    double t_p = 0.0;
    Direction direction = Direction::higher_is_warning;
    std::size_t positives = 0;
    std::size_t negatives = 0;
    // Twice the Mann-Whitney count (ties count 1) over 2 * P * N; auc is their ratio.
    std::uint64_t auc_numerator = 0;
    std::uint64_t auc_denominator = 0;
};

/// Oriented score of one point; larger means more alarming.
[[nodiscard]] inline double warning_score(const MeasurePoint& p, ReservoirMode mode, Direction direction) {
    if (direction == Direction::higher_is_warning) return p.value.real();
    const auto c = default_component(p.kind, mode);
    return -std::abs(component_value(p.value, c) - critical_threshold(p.kind, mode));
}

/// Labels the last `warning_fraction` of the accepted points at or before t_p
/// as positives and sweeps a threshold over every distinct score.
[[nodiscard]] inline RocResult roc_auc(const MeasureSeries& measures, double t_p, double warning_fraction = 0.3,
                                       std::optional<Direction> direction = std::nullopt) {
    if (!(warning_fraction > 0.0 && warning_fraction < 1.0))
        throw ConfigError("roc_auc: warning_fraction must be in (0, 1)");
    RocResult out;
    out.t_p = t_p;
    out.direction = direction.value_or(default_direction(measures.kind));

    std::vector<std::pair<double, double>> pts;  // (t_mid, score)
    for (const auto& p : measures.points) {
        if (!p.accepted() || p.t_mid > t_p) continue;
        const double s = warning_score(p, measures.mode, out.direction);
        if (std::isfinite(s)) pts.emplace_back(p.t_mid, s);
    }
    if (pts.size() < 10)
        throw ConfigError("roc_auc: need at least 10 accepted points before t_p, got " + std::to_string(pts.size()));
    std::stable_sort(pts.begin(), pts.end(), [](const auto& a, const auto& b) { return a.first < b.first; });

    const std::size_t n = pts.size();
    const auto pos = static_cast<std::size_t>(std::llround(warning_fraction * static_cast<double>(n)));
    if (pos == 0 || pos == n) throw NumericError("roc_auc: all labels identical");
    out.positives = pos;
    out.negatives = n - pos;
    out.t_w = pts[n - pos].first;
    const auto positive = [&](std::size_t i) { return i >= n - pos; };

    const auto [lo, hi] = std::minmax_element(pts.begin(), pts.end(),
                                              [](const auto& a, const auto& b) { return a.second < b.second; });
    if (lo->second == hi->second) throw NumericError("roc_auc: all scores identical");

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return pts[a].second > pts[b].second; });

    out.thresholds.push_back(std::numeric_limits<double>::infinity());
    out.tpr.push_back(0.0);
    out.fpr.push_back(0.0);
    std::uint64_t tp = 0, fp = 0, twice_area = 0;
    for (std::size_t i = 0; i < n;) {
        const double s = pts[order[i]].second;
        std::uint64_t dtp = 0, dfp = 0;
        for (; i < n && pts[order[i]].second == s; ++i) (positive(order[i]) ? dtp : dfp) += 1;
        // Trapezoid in integer units: fp step times the summed tp heights.
        twice_area += dfp * (2 * tp + dtp);
        tp += dtp;
        fp += dfp;
        out.thresholds.push_back(s);
        out.tpr.push_back(static_cast<double>(tp) / static_cast<double>(out.positives));
        out.fpr.push_back(static_cast<double>(fp) / static_cast<double>(out.negatives));
    }
    out.auc_numerator = twice_area;
    out.auc_denominator = 2 * static_cast<std::uint64_t>(out.positives) * out.negatives;
    out.auc = static_cast<double>(out.auc_numerator) / static_cast<double>(out.auc_denominator);
    return out;
}

/// Threshold maximizing TPR - FPR (first on ties).
[[nodiscard]] inline double youden_threshold(const RocResult& roc) {
    std::size_t best = 0;
    double j = -2.0;
    for (std::size_t i = 1; i < roc.thresholds.size(); ++i) {
        const double v = roc.tpr[i] - roc.fpr[i];
        if (v > j) {
            j = v;
            best = i;
        }
    }
    return roc.thresholds[best];
}

// -----------------------------------------------------------------------------
// Method comparison
// -----------------------------------------------------------------------------

struct ComparisonRow {
    MeasureKind method = MeasureKind::dej;
    std::optional<double> auc;
    std::optional<double> warning_onset;
    std::optional<RocResult> roc;
    std::string notes;
};

struct ComparisonOptions {
    WindowPlan plan;
    ReservoirConfig reservoir;
    AnalysisOptions analysis;
    EwsOptions ews;
    double warning_fraction = 0.3;
    double epsilon_fraction = 0.15;
};

/// AUC and warning onset per method. Reservoir measures come precomputed
/// (one series per kind) and warn at the epsilon-from-range margin. EWS
/// indicators are computed from `series` and warn at the Youden threshold of
/// their own ROC curve. Failures become notes on their row.
[[nodiscard]] inline std::vector<ComparisonRow> compare_measures(const TimeSeries* series,
                                                                 const std::vector<MeasureSeries>& reservoir_measures,
                                                                 double t_p, const std::vector<MeasureKind>& methods,
                                                                 const ComparisonOptions& options) {
    std::vector<ComparisonRow> rows(methods.size());
    for (std::size_t i = 0; i < methods.size(); ++i) {
        auto& row = rows[i];
        row.method = methods[i];
        try {
            if (is_reservoir_measure(row.method)) {
                const auto it = std::find_if(reservoir_measures.begin(), reservoir_measures.end(),
                                             [&](const MeasureSeries& s) { return s.kind == row.method; });
                if (it == reservoir_measures.end())
                    throw ConfigError("no " + std::string(to_string(row.method)) + " measures available");
                MeasureSeries upto = *it;
                std::erase_if(upto.points, [&](const MeasurePoint& p) { return p.t_mid > t_p; });
                row.roc = roc_auc(upto, t_p, options.warning_fraction);
                row.auc = row.roc->auc;
                const WarningConfig warn{epsilon_from_range(upto, options.epsilon_fraction)};
                row.warning_onset = evaluate_warning(upto, warn).onset;
            } else {
                if (series == nullptr) throw ConfigError("EWS indicators need the raw series");
                const auto ews = rolling_ews(*series, options.plan, row.method, options.ews);
                row.roc = roc_auc(ews, t_p, options.warning_fraction);
                row.auc = row.roc->auc;
                const double thr = youden_threshold(*row.roc);
                for (const auto& p : ews.points) {
                    if (!p.accepted() || p.t_mid > t_p) continue;
                    if (warning_score(p, ews.mode, row.roc->direction) >= thr) {
                        row.warning_onset = p.t_mid;
                        break;
                    }
                }
            }
        } catch (const Error& e) {
            row.notes = e.what();
        }
    }
    return rows;
}

/// compare_measures with the reservoir measures computed in one shared
/// sliding analysis over `series`.
[[nodiscard]] inline std::vector<ComparisonRow> compare_methods(const TimeSeries& series, double t_p,
                                                                const std::vector<MeasureKind>& methods,
                                                                const ComparisonOptions& options) {
    std::vector<MeasureKind> rc_kinds;
    for (const auto m : methods)
        if (is_reservoir_measure(m) && std::find(rc_kinds.begin(), rc_kinds.end(), m) == rc_kinds.end())
            rc_kinds.push_back(m);

    std::vector<MeasureSeries> rc_series;
    std::string rc_failure;
    if (!rc_kinds.empty()) {
        auto analysis = options.analysis;
        analysis.kinds = rc_kinds;
        try {
            rc_series = run_sliding_analysis(series, options.plan, options.reservoir, analysis);
        } catch (const Error& e) {
            rc_failure = e.what();
        }
    }
    auto rows = compare_measures(&series, rc_series, t_p, methods, options);
    if (!rc_failure.empty())
        for (auto& row : rows)
            if (is_reservoir_measure(row.method)) row.notes = rc_failure;
    return rows;
}

}  // namespace tipping
