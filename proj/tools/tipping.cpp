// Command-line front end: simulate, analyze, evaluate, leadtime, presets.
//
// Every run writes run.json into its output directory. Passing that file back
// with --config repeats the run; options given on the command line win over
// the file.

#include "tipping/tipping.hpp"

#include "CLI11.hpp"

#include <cstdint>
#include <iostream>
#include <istream>
#include <optional>
#include <string>
#include <vector>

namespace {

using namespace tipping;
namespace fs = std::filesystem;

// -----------------------------------------------------------------------------
// JSON config files for CLI11
// -----------------------------------------------------------------------------

/// Keeps option values as the strings CLI11 parsed, so a replay sees exactly
/// the same text. Subcommands become nested objects.
class JsonConfig : public CLI::Config {
public:
    std::string to_config(const CLI::App* app, bool default_also, bool, std::string) const override {
        return collect(app, default_also).dump(2) + "\n";
    }

    std::vector<CLI::ConfigItem> from_config(std::istream& input) const override {
        Json j;
        try {
            j = Json::parse(input);
        } catch (const Json::exception& e) {
            throw CLI::ConversionError(std::string("config file: ") + e.what());
        }
        std::vector<CLI::ConfigItem> items;
        flatten(j, {}, items);
        return items;
    }

private:
    static Json collect(const CLI::App* app, bool default_also) {
        Json j = Json::object();
        for (const CLI::Option* opt : app->get_options()) {
            if (!opt->get_configurable() || opt->get_lnames().empty()) continue;
            const std::string& name = opt->get_lnames().front();
            if (name == "help") continue;
            std::vector<std::string> values;
            if (opt->count() > 0) values = opt->results();
            else if (default_also && !opt->get_default_str().empty()) values = {opt->get_default_str()};
            else continue;
            j[name] = values.size() == 1 ? Json(values.front()) : Json(values);
        }
        for (const CLI::App* sub : app->get_subcommands()) j[sub->get_name()] = collect(sub, default_also);
        return j;
    }

    static void flatten(const Json& j, const std::vector<std::string>& parents, std::vector<CLI::ConfigItem>& out) {
        if (!j.is_object()) throw CLI::ConversionError("config file: expected a JSON object");
        for (const auto& [key, value] : j.items()) {
            if (value.is_object()) {
                auto nested = parents;
                nested.push_back(key);
                // Section markers: "++" enters a subcommand, "--" leaves it.
                out.push_back(marker(nested, "++"));
                flatten(value, nested, out);
                out.push_back(marker(nested, "--"));
                continue;
            }
            CLI::ConfigItem item;
            item.parents = parents;
            item.name = key;
            if (value.is_array())
                for (const auto& v : value) item.inputs.push_back(scalar(v));
            else
                item.inputs.push_back(scalar(value));
            out.push_back(std::move(item));
        }
    }

    static CLI::ConfigItem marker(const std::vector<std::string>& parents, const std::string& name) {
        CLI::ConfigItem item;
        item.parents = parents;
        item.name = name;
        return item;
    }

    static std::string scalar(const Json& v) { return v.is_string() ? v.get<std::string>() : v.dump(); }
};

// -----------------------------------------------------------------------------
// Shared option bundles
// -----------------------------------------------------------------------------

struct Globals {
    std::uint64_t seed = 1;
    std::string out = "out";
    unsigned threads = 1;
    bool no_plots = false;
    CLI::Option* seed_option = nullptr;
};

struct SourceArgs {
    std::string input;
    std::string mode = "auto";
    std::string preset;
    std::string spec;
    std::string tuned_for;
};

struct ReservoirArgs {
    std::optional<std::size_t> n, d, k;
    std::optional<double> spectral_radius, density, input_scale, bias_scale, gamma, lambda, washout;
    std::vector<std::string> measures;
    std::string grid;
    bool no_standardize = false;
};

struct Loaded {
    TimeSeries series;
    std::optional<SystemSpec> spec;
    std::string preset;
};

void add_source_options(CLI::App* cmd, SourceArgs& a) {
    auto* input = cmd->add_option("--input", a.input, "series CSV with header t,x1,...,xN");
    cmd->add_option("--mode", a.mode, "how to read --input: auto (dt = 1 means a map), discrete, continuous")
        ->check(CLI::IsMember({"auto", "discrete", "continuous"}));
    auto* preset = cmd->add_option("--preset", a.preset, "simulate a preset in memory");
    auto* spec = cmd->add_option("--spec", a.spec, "simulate a system spec JSON file in memory");
    input->excludes(preset, spec);
    preset->excludes(spec);
    cmd->add_option("--tuned-for", a.tuned_for, "use the tuned settings of this preset for --input data");
}

void add_reservoir_options(CLI::App* cmd, ReservoirArgs& a) {
    cmd->add_option("--d", a.d, "window length in samples");
    cmd->add_option("--k", a.k, "window step in samples");
    cmd->add_option("--n", a.n, "reservoir size");
    cmd->add_option("--spectral-radius", a.spectral_radius);
    cmd->add_option("--density", a.density, "fraction of nonzero couplings");
    cmd->add_option("--input-scale", a.input_scale);
    cmd->add_option("--bias-scale", a.bias_scale);
    cmd->add_option("--gamma", a.gamma, "rate (flows) or leak (maps)");
    cmd->add_option("--lambda", a.lambda, "ridge penalty");
    cmd->add_option("--washout", a.washout, "fraction of each window discarded before fitting");
    cmd->add_option("--grid", a.grid, "JSON array of reservoir overrides; the best one by forecast error is used");
    cmd->add_flag("--no-standardize", a.no_standardize, "fit on raw instead of per-window z-scored data");
}

SystemSpec load_spec(const SourceArgs& a, const Globals& g) {
    SystemSpec spec;
    if (!a.preset.empty()) {
        spec = preset(a.preset);
        spec.seed = g.seed;
    } else {
        spec = spec_from_json(read_json(a.spec));
        if (g.seed_option->count() > 0) spec.seed = g.seed;
    }
    return spec;
}

Loaded load_series(const SourceArgs& a, const Globals& g) {
    Loaded out;
    if (!a.input.empty()) {
        out.series = read_series_csv(a.input, parse_input_mode(a.mode));
        out.preset = a.tuned_for;
    } else if (!a.preset.empty() || !a.spec.empty()) {
        out.spec = load_spec(a, g);
        out.series = simulate(*out.spec);
        out.preset = a.tuned_for.empty() ? a.preset : a.tuned_for;
    } else {
        throw ConfigError("no input: give --input, --preset or --spec");
    }
    return out;
}

AnalysisDefaults defaults_for(const Loaded& src) {
    if (!src.preset.empty()) return recommended_analysis(src.preset);
    AnalysisDefaults d;
    if (src.series.discrete) d.reservoir = map_dej_config();
    d.kinds = {MeasureKind::dej};
    return d;
}

std::vector<MeasureKind> parse_kinds(const std::vector<std::string>& names) {
    std::vector<MeasureKind> kinds;
    for (const auto& n : names) kinds.push_back(parse_measure_kind(n));
    return kinds;
}

struct Resolved {
    ReservoirConfig reservoir;
    WindowPlan plan;
    std::vector<MeasureKind> kinds;
    Json hyperparams;
};

Resolved resolve(const ReservoirArgs& a, const Loaded& src, const Globals& g) {
    const auto base = defaults_for(src);
    Resolved r;
    r.reservoir = base.reservoir;
    auto& c = r.reservoir;
    if (a.n) c.n = *a.n;
    if (a.spectral_radius) c.spectral_radius = *a.spectral_radius;
    if (a.density) c.density = *a.density;
    if (a.input_scale) c.input_scale = *a.input_scale;
    if (a.bias_scale) c.bias_scale = *a.bias_scale;
    if (a.gamma) c.gamma = *a.gamma;
    if (a.lambda) c.lambda = *a.lambda;
    if (a.washout) c.washout_fraction = *a.washout;
    c.mode = src.series.discrete ? ReservoirMode::discrete : ReservoirMode::continuous;
    c.seed = g.seed;
    c.validate();
    r.plan = {a.d.value_or(base.plan.d), a.k.value_or(base.plan.k)};
    r.plan.validate(src.series.size());
    r.kinds = a.measures.empty() ? base.kinds : parse_kinds(a.measures);

    r.hyperparams = Json{{"window", to_json(r.plan)}, {"standardize", !a.no_standardize}};
    if (!a.grid.empty()) {
        const Json grid_json = read_json(a.grid);
        if (!grid_json.is_array() || grid_json.empty()) throw ConfigError(a.grid + ": grid must be a non-empty array");
        std::vector<ReservoirConfig> grid;
        for (const auto& entry : grid_json) {
            auto cfg = reservoir_from_json(entry, c);
            cfg.mode = c.mode;
            cfg.seed = c.seed;
            grid.push_back(cfg);
        }
        const auto selection = select_hyperparameters(src.series, r.plan.d, r.plan.k, grid, !a.no_standardize, g.threads);
        c = selection.best;
        r.hyperparams["selection"] = to_json(selection);
    }
    r.hyperparams["reservoir"] = to_json(c);
    return r;
}

double resolve_t_p(const std::string& text, const Loaded* src) {
    if (text == "auto") {
        if (src == nullptr) throw ConfigError("--t-p auto needs the raw series");
        const std::size_t block = std::min<std::size_t>(500, src->series.size() / 4);
        return detect_transition(src->series, block);
    }
    const auto v = parse_double(text);
    if (!v || !std::isfinite(*v)) throw ConfigError("--t-p must be a number or 'auto', got '" + text + "'");
    return *v;
}

// -----------------------------------------------------------------------------
// Plots
// -----------------------------------------------------------------------------

std::string series_plot(const TimeSeries& ts, const std::string& title) {
    svg::Plot p{title, "t", "x", {}, {}, {}, {}};
    std::vector<double> t(ts.size());
    for (std::size_t i = 0; i < ts.size(); ++i) t[i] = ts.time(i);
    for (std::size_t c = 0; c < std::min<std::size_t>(ts.dimension(), 6); ++c) {
        const Vector col = ts.column(c);
        p.lines.push_back({"x" + std::to_string(c + 1), t, std::vector<double>(col.data(), col.data() + col.size()),
                           svg::kPalette[c]});
    }
    return svg::render(p);
}

std::string measures_plot(const MeasureSeries& m, const TippingForecast& f) {
    const auto c = default_component(m.kind, m.mode);
    const std::string label =
        std::string(c == Component::modulus ? "|" : "Re ") + std::string(to_string(m.kind)) + (c == Component::modulus ? "|" : "");
    svg::Plot p{std::string(to_string(m.kind)) + " per window", "window midpoint", label, {}, {}, {}, {}};
    svg::Line pts{label, {}, {}, svg::kPalette[0]};
    pts.markers = true;
    for (const auto& q : m.points) {
        if (!q.accepted()) continue;
        pts.x.push_back(q.t_mid);
        pts.y.push_back(component_value(q.value, c));
    }
    p.lines.push_back(std::move(pts));
    if (f.trend) {
        svg::Line trend{"trend", {}, {}, svg::kPalette[1], true};
        const double a = f.trend->t_first;
        const double b = f.t_hat_p ? *f.t_hat_p : (m.points.empty() ? a : m.points.back().t_mid);
        for (int i = 0; i <= 200; ++i) {
            const double t = a + (b - a) * i / 200.0;
            trend.x.push_back(t);
            trend.y.push_back((*f.trend)(t));
        }
        p.lines.push_back(std::move(trend));
    }
    p.hlines.push_back({f.threshold, "critical threshold"});
    p.bands.push_back({f.threshold - f.epsilon, f.threshold + f.epsilon});
    p.vlines.push_back({f.t_l, "t_l", "#7f7f7f"});
    if (f.t_hat_p) p.vlines.push_back({*f.t_hat_p, "predicted"});
    return svg::render(p);
}

std::string roc_plot(const std::vector<ComparisonRow>& rows) {
    svg::Plot p{"ROC", "false positive rate", "true positive rate", {}, {}, {}, {}};
    std::size_t i = 0;
    for (const auto& r : rows) {
        if (!r.roc) continue;
        p.lines.push_back({std::string(to_string(r.method)) + " AUC " + format_double(r.roc->auc), r.roc->fpr,
                           r.roc->tpr, svg::kPalette[i++ % std::size(svg::kPalette)]});
    }
    p.lines.push_back({"chance", {0.0, 1.0}, {0.0, 1.0}, "#999999", true});
    return svg::render(p);
}

std::string leadtime_plot(const LeadTimeTable& table, double bound) {
    svg::Plot p{"prediction error vs lead time", "lead time", "|t_p - predicted|", {}, {}, {}, {}};
    svg::Line l{"error", {}, {}, svg::kPalette[0]};
    l.markers = true;
    for (const auto& r : table.rows) {
        if (!r.abs_error) continue;
        l.x.push_back(r.lead_time);
        l.y.push_back(*r.abs_error);
    }
    p.lines.push_back(std::move(l));
    p.hlines.push_back({bound, "accuracy bound"});
    return svg::render(p);
}

// -----------------------------------------------------------------------------
// Commands
// -----------------------------------------------------------------------------

void run_simulate(const SourceArgs& a, const Globals& g, const fs::path& out) {
    if (a.preset.empty() && a.spec.empty()) throw ConfigError("simulate: give --preset or --spec");
    const auto spec = load_spec(a, g);
    const auto ts = simulate(spec);
    write_series_csv(out / "series.csv", ts);
    write_json(out / "spec.json", to_json(spec));
    if (!g.no_plots) {
        const std::string title = std::string(to_string(spec.id));
        atomic_write(out / "series.svg",
                     spec.id == SystemId::ks_pde ? svg::heatmap(ts.values, ts.t0, ts.dt, title) : series_plot(ts, title));
    }
    std::cout << "simulated " << ts.size() << " samples of " << to_string(spec.id) << " into " << out.string() << "\n";
}

/// Last window midpoint, or with a known t_p the last one whose window ends
/// by then.
double default_cutoff(const MeasureSeries& m, const WindowPlan& plan, double dt, std::optional<double> t_p) {
    double t_l = m.points.empty() ? 0.0 : m.points.front().t_mid;
    const double half = 0.5 * static_cast<double>(plan.d) * dt;
    for (const auto& p : m.points)
        if (!t_p || p.t_mid + half <= *t_p) t_l = std::max(t_l, p.t_mid);
    return t_l;
}

struct ForecastArgs {
    std::optional<double> t_l, epsilon, horizon;
    double epsilon_fraction = 0.15;
    std::string t_p;
};

void run_analyze(const SourceArgs& a, const ReservoirArgs& ra, const ForecastArgs& fa, const Globals& g,
                 const fs::path& out) {
    const auto src = load_series(a, g);
    const auto r = resolve(ra, src, g);

    AnalysisOptions opt;
    opt.kinds = r.kinds;
    opt.standardize = !ra.no_standardize;
    opt.threads = g.threads;
    const auto measures = run_sliding_analysis(src.series, r.plan, r.reservoir, opt);
    atomic_write(out / "measures.csv", measures_to_csv(measures));
    write_json(out / "hyperparams.json", r.hyperparams);

    std::optional<double> t_p;
    if (!fa.t_p.empty()) t_p = resolve_t_p(fa.t_p, &src);
    for (std::size_t i = 0; i < measures.size(); ++i) {
        const auto& m = measures[i];
        const double t_l = fa.t_l ? *fa.t_l : default_cutoff(m, r.plan, src.series.dt, t_p);
        double eps = 0.0;
        std::string eps_note;
        if (fa.epsilon) {
            eps = *fa.epsilon;
        } else {
            try {
                eps = epsilon_from_range(m, fa.epsilon_fraction);
            } catch (const ConfigError& e) {
                eps = std::numeric_limits<double>::min();
                eps_note = e.what();
            }
        }
        auto f = predict_tipping(m, t_l, WarningConfig{eps}, fa.horizon.value_or(0.0), t_p);
        if (!eps_note.empty() && f.note.empty()) f.note = eps_note;
        const std::string suffix = i == 0 ? "" : "_" + std::string(to_string(m.kind));
        write_json(out / ("forecast" + suffix + ".json"), to_json(f));
        if (!g.no_plots) atomic_write(out / ("measures" + suffix + ".svg"), measures_plot(m, f));

        std::size_t accepted = 0;
        for (const auto& p : m.points) accepted += p.accepted() ? 1 : 0;
        std::cout << to_string(m.kind) << ": " << accepted << "/" << m.points.size() << " windows accepted, warned "
                  << (f.warned ? "yes" : "no") << ", predicted crossing "
                  << (f.t_hat_p ? format_double(*f.t_hat_p) : std::string("none"));
        if (m.kind == MeasureKind::dej) std::cout << ", class " << to_string(f.bifurcation_class);
        std::cout << "\n";
    }
}

struct EvaluateArgs {
    std::string measures;
    std::vector<std::string> methods;
    std::string t_p = "auto";
    double warning_fraction = 0.3;
    double epsilon_fraction = 0.15;
    std::optional<double> detrend;
};

ReservoirMode measures_mode(const SourceArgs& a, const std::optional<Loaded>& src) {
    if (src) return src->series.discrete ? ReservoirMode::discrete : ReservoirMode::continuous;
    if (a.mode == "auto") throw ConfigError("--measures without a series needs --mode discrete or continuous");
    return parse_reservoir_mode(a.mode);
}

std::optional<Loaded> maybe_load(const SourceArgs& a, const Globals& g) {
    if (a.input.empty() && a.preset.empty() && a.spec.empty()) return std::nullopt;
    return load_series(a, g);
}

void run_evaluate(const SourceArgs& a, const ReservoirArgs& ra, const EvaluateArgs& ea, const Globals& g,
                  const fs::path& out) {
    const auto src = maybe_load(a, g);
    if (!src && ea.measures.empty()) throw ConfigError("evaluate: give a series (--input, --preset, --spec) or --measures");

    std::vector<MeasureKind> methods;
    std::optional<Resolved> r;
    if (src) r = resolve(ra, *src, g);
    if (ea.methods.empty()) {
        methods = r ? r->kinds : std::vector<MeasureKind>{MeasureKind::dej};
        for (const auto k : {MeasureKind::variance, MeasureKind::lag1_ac, MeasureKind::skewness}) methods.push_back(k);
    } else {
        methods = parse_kinds(ea.methods);
    }

    ComparisonOptions copt;
    copt.warning_fraction = ea.warning_fraction;
    copt.epsilon_fraction = ea.epsilon_fraction;
    copt.ews.detrend_bandwidth = ea.detrend;
    if (r) {
        copt.plan = r->plan;
        copt.reservoir = r->reservoir;
    }
    copt.analysis.standardize = !ra.no_standardize;
    copt.analysis.threads = g.threads;
    const double t_p = resolve_t_p(ea.t_p, src ? &*src : nullptr);

    std::vector<ComparisonRow> rows;
    if (!ea.measures.empty()) {
        const auto stored = measures_from_csv(read_text(ea.measures), measures_mode(a, src), ea.measures);
        rows = compare_measures(src ? &src->series : nullptr, stored, t_p, methods, copt);
    } else {
        rows = compare_methods(src->series, t_p, methods, copt);
    }

    atomic_write(out / "comparison.csv", comparison_to_csv(rows));
    write_json(out / "comparison.json", comparison_to_json(rows));
    for (std::size_t i = 0; i < rows.size(); ++i) {
        if (!rows[i].roc) continue;
        const std::string suffix = i == 0 ? "" : "_" + std::string(to_string(rows[i].method));
        atomic_write(out / ("roc" + suffix + ".csv"), roc_to_csv(*rows[i].roc));
    }
    if (!g.no_plots) atomic_write(out / "roc.svg", roc_plot(rows));

    std::cout << "t_p = " << format_double(t_p) << "\n";
    for (const auto& row : rows)
        std::cout << to_string(row.method) << ": AUC " << (row.auc ? format_double(*row.auc) : std::string("n/a"))
                  << (row.notes.empty() ? "" : " (" + row.notes + ")") << "\n";
    if (!rows.front().auc)
        throw NumericError("evaluate: " + std::string(to_string(rows.front().method)) + ": " + rows.front().notes);
}

struct LeadtimeArgs {
    std::string measures;
    std::string measure;
    std::string t_p = "auto";
    std::vector<double> cutoffs;
    std::size_t cutoff_count = 10;
    double accuracy = 0.1;
    std::optional<double> duration, horizon;
};

void run_leadtime(const SourceArgs& a, const ReservoirArgs& ra, const LeadtimeArgs& la, const Globals& g,
                  const fs::path& out) {
    const auto src = maybe_load(a, g);
    if (!src && la.measures.empty()) throw ConfigError("leadtime: give a series (--input, --preset, --spec) or --measures");

    MeasureSeries m;
    if (!la.measures.empty()) {
        const auto stored = measures_from_csv(read_text(la.measures), measures_mode(a, src), la.measures);
        const MeasureKind kind = la.measure.empty() ? stored.front().kind : parse_measure_kind(la.measure);
        const auto it = std::find_if(stored.begin(), stored.end(), [&](const MeasureSeries& s) { return s.kind == kind; });
        if (it == stored.end()) throw ConfigError(la.measures + ": no " + std::string(to_string(kind)) + " rows");
        m = *it;
    } else {
        const auto r = resolve(ra, *src, g);
        AnalysisOptions opt;
        opt.kinds = {la.measure.empty() ? r.kinds.front() : parse_measure_kind(la.measure)};
        opt.standardize = !ra.no_standardize;
        opt.threads = g.threads;
        m = run_sliding_analysis(src->series, r.plan, r.reservoir, opt).front();
    }

    const double t_p = resolve_t_p(la.t_p, src ? &*src : nullptr);
    std::vector<double> cutoffs = la.cutoffs;
    if (cutoffs.empty()) {
        const auto first = std::find_if(m.points.begin(), m.points.end(), [](const MeasurePoint& p) { return p.accepted(); });
        if (first == m.points.end()) throw NumericError("leadtime: no accepted measure points");
        for (std::size_t i = 1; i <= la.cutoff_count; ++i)
            cutoffs.push_back(first->t_mid + (t_p - first->t_mid) * static_cast<double>(i) / static_cast<double>(la.cutoff_count));
    }
    if (cutoffs.size() < 2) throw ConfigError("leadtime: need at least 2 cutoffs, got " + std::to_string(cutoffs.size()));

    double duration = 0.0;
    if (la.duration) duration = *la.duration;
    else if (src) duration = static_cast<double>(src->series.size()) * src->series.dt;
    else throw ConfigError("leadtime: --duration is required when only --measures is given");
    const double bound = la.accuracy * duration;

    const auto table = lead_time_curve(m, t_p, cutoffs, bound, la.horizon.value_or(0.0));
    atomic_write(out / "leadtime.csv", leadtime_to_csv(table));
    if (!g.no_plots) atomic_write(out / "leadtime.svg", leadtime_plot(table, bound));
    std::cout << "t_p = " << format_double(t_p) << ", accuracy bound " << format_double(bound)
              << ", max admissible lead time "
              << (table.max_admissible_lead ? format_double(*table.max_admissible_lead) : std::string("none")) << "\n";
}

int exit_code(ErrorKind k) { return static_cast<int>(k); }

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Tipping-point prediction with windowed reservoir computers"};
    app.option_defaults()->always_capture_default();
    app.config_formatter(std::make_shared<JsonConfig>());
    app.set_config("--config", "", "replay a run.json written by an earlier run");
    app.require_subcommand(1);

    Globals g;
    g.seed_option = app.add_option("--seed", g.seed, "random seed for simulation noise and reservoirs");
    app.add_option("--out", g.out, "output directory");
    app.add_option("--threads", g.threads, "worker threads")->check(CLI::Range(1u, 256u));
    app.add_flag("--no-plots", g.no_plots, "skip SVG output");

    SourceArgs src;
    ReservoirArgs res;
    ForecastArgs fc;
    EvaluateArgs ev;
    LeadtimeArgs lt;

    auto* simulate_cmd = app.add_subcommand("simulate", "simulate a preset or spec and write series.csv");
    simulate_cmd->add_option("--preset", src.preset, "preset name (see `presets`)");
    simulate_cmd->add_option("--spec", src.spec, "system spec JSON file")->excludes("--preset");

    auto* analyze_cmd = app.add_subcommand("analyze", "sliding-window measures and a tipping forecast");
    add_source_options(analyze_cmd, src);
    add_reservoir_options(analyze_cmd, res);
    analyze_cmd->add_option("--measures", res.measures, "dej, mfm, mle (comma separated)")->delimiter(',')->default_str("");
    analyze_cmd->add_option("--t-l", fc.t_l, "last window midpoint used for the trend (default: all)");
    analyze_cmd->add_option("--epsilon", fc.epsilon, "warning margin around the threshold");
    analyze_cmd->add_option("--epsilon-fraction", fc.epsilon_fraction, "margin as a fraction of the measure range");
    analyze_cmd->add_option("--horizon", fc.horizon, "how far past t_l to search for the crossing");
    analyze_cmd->add_option("--t-p", fc.t_p, "reference transition time or 'auto' for the lead time");

    auto* evaluate_cmd = app.add_subcommand("evaluate", "ROC/AUC of reservoir measures against EWS indicators");
    add_source_options(evaluate_cmd, src);
    add_reservoir_options(evaluate_cmd, res);
    evaluate_cmd->add_option("--measures", ev.measures, "measures.csv from an earlier analyze run");
    evaluate_cmd->add_option("--methods", ev.methods, "dej, mfm, mle, variance, lag1_ac, skewness")->delimiter(',')->default_str("");
    evaluate_cmd->add_option("--t-p", ev.t_p, "transition time or 'auto' to detect it in the series");
    evaluate_cmd->add_option("--warning-fraction", ev.warning_fraction, "share of pre-transition points labeled positive");
    evaluate_cmd->add_option("--epsilon-fraction", ev.epsilon_fraction);
    evaluate_cmd->add_option("--detrend", ev.detrend, "Gaussian detrending bandwidth as a fraction of d");

    auto* leadtime_cmd = app.add_subcommand("leadtime", "prediction error as a function of the cutoff");
    add_source_options(leadtime_cmd, src);
    add_reservoir_options(leadtime_cmd, res);
    leadtime_cmd->add_option("--measures", lt.measures, "measures.csv from an earlier analyze run");
    leadtime_cmd->add_option("--measure", lt.measure, "which measure to extrapolate");
    leadtime_cmd->add_option("--t-p", lt.t_p, "transition time or 'auto'");
    leadtime_cmd->add_option("--cutoffs", lt.cutoffs, "explicit cutoff times")->delimiter(',')->default_str("");
    leadtime_cmd->add_option("--cutoff-count", lt.cutoff_count, "evenly spaced cutoffs up to t_p");
    leadtime_cmd->add_option("--accuracy", lt.accuracy, "admissible error as a fraction of the series duration");
    leadtime_cmd->add_option("--duration", lt.duration, "series duration when only --measures is given");
    leadtime_cmd->add_option("--horizon", lt.horizon);

    auto* presets_cmd = app.add_subcommand("presets", "list the built-in presets");

    for (auto* cmd : {simulate_cmd, analyze_cmd, evaluate_cmd, leadtime_cmd}) cmd->configurable();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return exit_code(ErrorKind::config);
    }

    try {
        if (presets_cmd->parsed()) {
            for (const auto& p : kPresets) std::cout << p.name << "\n    " << p.description << "\n";
            return 0;
        }
        const fs::path out = g.out;
        atomic_write(out / "run.json", app.config_to_str(true, false));
        if (simulate_cmd->parsed()) run_simulate(src, g, out);
        else if (analyze_cmd->parsed()) run_analyze(src, res, fc, g, out);
        else if (evaluate_cmd->parsed()) run_evaluate(src, res, ev, g, out);
        else if (leadtime_cmd->parsed()) run_leadtime(src, res, lt, g, out);
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return exit_code(e.kind());
    } catch (const fs::filesystem_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return exit_code(ErrorKind::io);
    }
    return 0;
}
