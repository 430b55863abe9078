#pragma once

// Text formats: series and measure CSVs, JSON for specs, configs and reports,
// and trained models as a JSON header followed by row-major CSV blocks. Every
// file is written to a temporary sibling and renamed into place.

#include "tipping/ews.hpp"
#include "tipping/systems.hpp"

#include "json.hpp"

#include <charconv>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

namespace tipping {

using Json = nlohmann::ordered_json;

// -----------------------------------------------------------------------------
// Numbers and files
// -----------------------------------------------------------------------------

/// Shortest decimal that parses back to the same double; "nan", "inf", "-inf"
/// for non-finite values.
[[nodiscard]] inline std::string format_double(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[32];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

[[nodiscard]] inline std::optional<double> parse_double(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    if (s == "nan" || s == "NaN") return std::numeric_limits<double>::quiet_NaN();
    if (s == "inf") return std::numeric_limits<double>::infinity();
    if (s == "-inf") return -std::numeric_limits<double>::infinity();
    if (!s.empty() && s.front() == '+') s.remove_prefix(1);
    double v = 0.0;
    const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc{} || res.ptr != s.data() + s.size() || s.empty()) return std::nullopt;
    return v;
}

[[nodiscard]] inline std::string read_text(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open '" + path.string() + "' for reading");
    std::ostringstream ss;
    ss << in.rdbuf();
    if (in.bad()) throw IoError("failed reading '" + path.string() + "'");
    return ss.str();
}

/// Writes `text` to a temporary file next to `path`, then renames it over
/// `path`. Parent directories are created.
inline void atomic_write(const std::filesystem::path& path, std::string_view text) {
    std::error_code ec;
    if (path.has_parent_path()) {
        std::filesystem::create_directories(path.parent_path(), ec);
        if (ec) throw IoError("cannot create directory '" + path.parent_path().string() + "': " + ec.message());
    }
    auto tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw IoError("cannot open '" + tmp.string() + "' for writing");
        out.write(text.data(), static_cast<std::streamsize>(text.size()));
        out.flush();
        if (!out) throw IoError("failed writing '" + tmp.string() + "'");
    }
    std::filesystem::rename(tmp, path, ec);
    if (ec) {
        std::filesystem::remove(tmp);
        throw IoError("cannot rename '" + tmp.string() + "' to '" + path.string() + "': " + ec.message());
    }
}

namespace detail {

[[nodiscard]] inline std::vector<std::string_view> split_fields(std::string_view line, char sep = ',') {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    while (true) {
        const auto pos = line.find(sep, start);
        out.push_back(line.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start));
        if (pos == std::string_view::npos) break;
        start = pos + 1;
    }
    return out;
}

[[nodiscard]] inline std::vector<std::string_view> split_lines(std::string_view text) {
    std::vector<std::string_view> lines;
    std::size_t start = 0;
    while (start < text.size()) {
        auto end = text.find('\n', start);
        if (end == std::string_view::npos) end = text.size();
        auto line = text.substr(start, end - start);
        if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
        lines.push_back(line);
        start = end + 1;
    }
    while (!lines.empty() && lines.back().empty()) lines.pop_back();
    return lines;
}

[[nodiscard]] inline std::string trim(std::string_view s) {
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
    return std::string(s);
}

}  // namespace detail

// -----------------------------------------------------------------------------
// Time series CSV
// -----------------------------------------------------------------------------

/// How a series read from CSV is interpreted. `automatic` treats a unit time
/// step as a map and anything else as a sampled flow.
enum class InputMode { automatic, discrete, continuous };

[[nodiscard]] inline InputMode parse_input_mode(std::string_view s) {
    if (s == "auto") return InputMode::automatic;
    if (s == "discrete") return InputMode::discrete;
    if (s == "continuous") return InputMode::continuous;
    throw ConfigError("unknown input mode '" + std::string(s) + "' (expected auto, discrete or continuous)");
}

[[nodiscard]] inline std::string series_to_csv(const TimeSeries& ts) {
    std::string out = "t";
    for (std::size_t j = 0; j < ts.dimension(); ++j) out += ",x" + std::to_string(j + 1);
    out += '\n';
    for (std::size_t i = 0; i < ts.size(); ++i) {
        out += format_double(ts.time(i));
        for (std::size_t j = 0; j < ts.dimension(); ++j) {
            out += ',';
            out += format_double(ts.values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)));
        }
        out += '\n';
    }
    return out;
}

/// Parses `t,x1,...,xN`. The step is t[1] - t[0]; every t must match
/// t[0] + i * step to 1e-9 relative.
[[nodiscard]] inline TimeSeries series_from_csv(std::string_view text, InputMode mode = InputMode::automatic,
                                                const std::string& source = "input") {
    const auto lines = detail::split_lines(text);
    if (lines.empty()) throw IoError(source + ": empty file");
    const auto header = detail::split_fields(lines[0]);
    if (header.size() < 2 || detail::trim(header[0]) != "t")
        throw IoError(source + ": header must be t,x1,...,xN");
    for (std::size_t j = 1; j < header.size(); ++j)
        if (detail::trim(header[j]) != "x" + std::to_string(j))
            throw IoError(source + ": header column " + std::to_string(j + 1) + " must be x" + std::to_string(j));
    const std::size_t dim = header.size() - 1;
    const std::size_t rows = lines.size() - 1;
    if (rows < 2) throw IoError(source + ": need at least two data rows");

    Vector t(static_cast<Eigen::Index>(rows));
    Matrix values(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(dim));
    for (std::size_t i = 0; i < rows; ++i) {
        const auto fields = detail::split_fields(lines[i + 1]);
        if (fields.size() != dim + 1)
            throw IoError(source + ": line " + std::to_string(i + 2) + " has " + std::to_string(fields.size()) +
                          " fields, expected " + std::to_string(dim + 1));
        for (std::size_t j = 0; j <= dim; ++j) {
            const auto v = parse_double(fields[j]);
            if (!v || !std::isfinite(*v))
                throw IoError(source + ": line " + std::to_string(i + 2) + " field " + std::to_string(j + 1) +
                              " is not a finite number");
            if (j == 0) t(static_cast<Eigen::Index>(i)) = *v;
            else values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j - 1)) = *v;
        }
    }
    const double t0 = t(0);
    const double dt = t(1) - t(0);
    if (!(dt > 0.0)) throw IoError(source + ": time column must be strictly increasing");
    for (std::size_t i = 0; i < rows; ++i) {
        const double expect = t0 + static_cast<double>(i) * dt;
        const double scale = std::max({std::abs(expect), std::abs(dt) * static_cast<double>(rows), 1e-300});
        if (std::abs(t(static_cast<Eigen::Index>(i)) - expect) > 1e-9 * scale)
            throw IoError(source + ": non-uniform time spacing at line " + std::to_string(i + 2));
    }
    const bool discrete = mode == InputMode::discrete || (mode == InputMode::automatic && dt == 1.0);
    return TimeSeries(std::move(values), t0, dt, discrete);
}

[[nodiscard]] inline TimeSeries read_series_csv(const std::filesystem::path& path,
                                                InputMode mode = InputMode::automatic) {
    return series_from_csv(read_text(path), mode, path.string());
}

inline void write_series_csv(const std::filesystem::path& path, const TimeSeries& ts) {
    atomic_write(path, series_to_csv(ts));
}

// -----------------------------------------------------------------------------
// Measure CSV
// -----------------------------------------------------------------------------

/// `t_mid,kind,re,im,modulus,quality_flags`, window-major, kinds in the given
/// order.
[[nodiscard]] inline std::string measures_to_csv(const std::vector<MeasureSeries>& series) {
    std::string out = "t_mid,kind,re,im,modulus,quality_flags\n";
    std::size_t rows = 0;
    for (const auto& s : series) rows = std::max(rows, s.points.size());
    for (std::size_t i = 0; i < rows; ++i) {
        for (const auto& s : series) {
            if (i >= s.points.size()) continue;
            const auto& p = s.points[i];
            out += format_double(p.t_mid) + ',' + std::string(to_string(p.kind)) + ',' + format_double(p.value.real()) +
                   ',' + format_double(p.value.imag()) + ',' + format_double(std::abs(p.value)) + ',' +
                   quality::to_string(p.flags) + '\n';
        }
    }
    return out;
}

/// Inverse of measures_to_csv. The file does not record the reservoir mode,
/// so the caller supplies it.
[[nodiscard]] inline std::vector<MeasureSeries> measures_from_csv(std::string_view text, ReservoirMode mode,
                                                                  const std::string& source = "measures") {
    const auto lines = detail::split_lines(text);
    if (lines.empty() || detail::trim(lines[0]) != "t_mid,kind,re,im,modulus,quality_flags")
        throw IoError(source + ": header must be t_mid,kind,re,im,modulus,quality_flags");
    std::vector<MeasureSeries> out;
    for (std::size_t i = 1; i < lines.size(); ++i) {
        const auto f = detail::split_fields(lines[i]);
        if (f.size() != 6) throw IoError(source + ": line " + std::to_string(i + 1) + " must have 6 fields");
        MeasurePoint p;
        try {
            p.kind = parse_measure_kind(detail::trim(f[1]));
            p.flags = quality::parse(detail::trim(f[5]));
        } catch (const ConfigError& e) {
            throw IoError(source + ": line " + std::to_string(i + 1) + ": " + e.what());
        }
        const auto t = parse_double(f[0]), re = parse_double(f[2]), im = parse_double(f[3]);
        if (!t || !re || !im) throw IoError(source + ": line " + std::to_string(i + 1) + " has a malformed number");
        p.t_mid = *t;
        p.value = Complex(*re, *im);
        auto it = std::find_if(out.begin(), out.end(), [&](const MeasureSeries& s) { return s.kind == p.kind; });
        if (it == out.end()) {
            out.push_back(MeasureSeries{p.kind, mode, {}});
            it = std::prev(out.end());
        }
        p.window = it->points.size();
        it->points.push_back(std::move(p));
    }
    if (out.empty()) throw IoError(source + ": no measure rows");
    return out;
}

// -----------------------------------------------------------------------------
// JSON conversions
// -----------------------------------------------------------------------------

namespace detail {

/// Rejects keys outside `allowed` so typos in hand-written configs surface.
inline void check_keys(const Json& j, std::initializer_list<std::string_view> allowed, std::string_view what) {
    if (!j.is_object()) throw ConfigError(std::string(what) + ": expected a JSON object");
    for (const auto& [key, value] : j.items()) {
        if (std::find(allowed.begin(), allowed.end(), key) == allowed.end())
            throw ConfigError(std::string(what) + ": unknown key '" + key + "'");
    }
}

template <class T>
void read_key(const Json& j, const char* key, T& out, std::string_view what) {
    if (!j.contains(key)) return;
    try {
        out = j.at(key).get<T>();
    } catch (const nlohmann::json::exception&) {
        throw ConfigError(std::string(what) + ": key '" + key + "' has the wrong type");
    }
}

[[nodiscard]] inline Json vector_to_json(const Vector& v) {
    Json a = Json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v(i));
    return a;
}

[[nodiscard]] inline Vector vector_from_json(const Json& a, std::string_view what) {
    if (!a.is_array()) throw ConfigError(std::string(what) + ": expected an array of numbers");
    Vector v(static_cast<Eigen::Index>(a.size()));
    for (std::size_t i = 0; i < a.size(); ++i) {
        if (!a[i].is_number()) throw ConfigError(std::string(what) + ": expected an array of numbers");
        v(static_cast<Eigen::Index>(i)) = a[i].get<double>();
    }
    return v;
}

[[nodiscard]] inline Json optional_number(const std::optional<double>& v) {
    return v && std::isfinite(*v) ? Json(*v) : Json(nullptr);
}

}  // namespace detail

[[nodiscard]] inline Json to_json(const ParameterSchedule& s) {
    Json j;
    switch (s.form) {
        case ParameterSchedule::Form::constant:
            j["form"] = "constant";
            j["value"] = s.intercept;
            break;
        case ParameterSchedule::Form::linear:
            j["form"] = "linear";
            j["slope"] = s.slope;
            j["intercept"] = s.intercept;
            break;
        case ParameterSchedule::Form::stepwise: {
            j["form"] = "stepwise";
            Json levels = Json::array();
            for (const auto& l : s.levels) levels.push_back({{"value", l.value}, {"hold", l.hold}});
            j["levels"] = levels;
            break;
        }
    }
    return j;
}

[[nodiscard]] inline ParameterSchedule schedule_from_json(const Json& j) {
    constexpr std::string_view what = "schedule";
    detail::check_keys(j, {"form", "value", "slope", "intercept", "levels"}, what);
    std::string form = "constant";
    detail::read_key(j, "form", form, what);
    if (form == "constant") {
        double v = 0.0;
        detail::read_key(j, "value", v, what);
        return ParameterSchedule::constant(v);
    }
    if (form == "linear") {
        double k = 0.0, b = 0.0;
        detail::read_key(j, "slope", k, what);
        detail::read_key(j, "intercept", b, what);
        return ParameterSchedule::linear(k, b);
    }
    if (form == "stepwise") {
        if (!j.contains("levels") || !j["levels"].is_array()) throw ConfigError("schedule: stepwise needs 'levels'");
        std::vector<ParameterSchedule::Level> levels;
        for (const auto& l : j["levels"]) {
            detail::check_keys(l, {"value", "hold"}, "schedule level");
            ParameterSchedule::Level lv;
            detail::read_key(l, "value", lv.value, "schedule level");
            detail::read_key(l, "hold", lv.hold, "schedule level");
            levels.push_back(lv);
        }
        return ParameterSchedule::stepwise(std::move(levels));
    }
    throw ConfigError("schedule: unknown form '" + form + "' (expected constant, linear or stepwise)");
}

[[nodiscard]] inline Json to_json(const SystemSpec& s) {
    Json j;
    j["system"] = std::string(to_string(s.id));
    j["schedule"] = to_json(s.schedule);
    j["noise"] = s.noise;
    j["dt"] = s.dt;
    j["length"] = s.length;
    j["seed"] = s.seed;
    j["transient"] = s.transient;
    if (s.id == SystemId::ks_pde) {
        j["domain_size"] = s.domain_size;
        j["spatial_points"] = s.spatial_points;
        if (s.domain_schedule) j["domain_schedule"] = to_json(*s.domain_schedule);
    }
    if (s.initial_state.size() > 0) j["initial_state"] = detail::vector_to_json(s.initial_state);
    return j;
}

[[nodiscard]] inline SystemSpec spec_from_json(const Json& j) {
    constexpr std::string_view what = "system spec";
    detail::check_keys(j,
                       {"system", "schedule", "noise", "dt", "length", "seed", "transient", "domain_size",
                        "spatial_points", "domain_schedule", "initial_state"},
                       what);
    SystemSpec s;
    std::string id;
    detail::read_key(j, "system", id, what);
    if (id.empty()) throw ConfigError("system spec: missing 'system'");
    s.id = parse_system_id(id);
    if (j.contains("schedule")) s.schedule = schedule_from_json(j["schedule"]);
    detail::read_key(j, "noise", s.noise, what);
    detail::read_key(j, "dt", s.dt, what);
    detail::read_key(j, "length", s.length, what);
    detail::read_key(j, "seed", s.seed, what);
    detail::read_key(j, "transient", s.transient, what);
    detail::read_key(j, "domain_size", s.domain_size, what);
    detail::read_key(j, "spatial_points", s.spatial_points, what);
    if (j.contains("domain_schedule")) s.domain_schedule = schedule_from_json(j["domain_schedule"]);
    if (j.contains("initial_state")) s.initial_state = detail::vector_from_json(j["initial_state"], what);
    s.validate();
    return s;
}

[[nodiscard]] inline Json to_json(const ReservoirConfig& c) {
    return Json{{"n", c.n},
                {"spectral_radius", c.spectral_radius},
                {"density", c.density},
                {"input_scale", c.input_scale},
                {"bias_scale", c.bias_scale},
                {"gamma", c.gamma},
                {"lambda", c.lambda},
                {"washout_fraction", c.washout_fraction},
                {"seed", c.seed},
                {"mode", std::string(to_string(c.mode))}};
}

/// Keys absent from `j` keep their value in `base`.
[[nodiscard]] inline ReservoirConfig reservoir_from_json(const Json& j, ReservoirConfig base = {}) {
    constexpr std::string_view what = "reservoir";
    detail::check_keys(j,
                       {"n", "spectral_radius", "density", "input_scale", "bias_scale", "gamma", "lambda",
                        "washout_fraction", "seed", "mode"},
                       what);
    detail::read_key(j, "n", base.n, what);
    detail::read_key(j, "spectral_radius", base.spectral_radius, what);
    detail::read_key(j, "density", base.density, what);
    detail::read_key(j, "input_scale", base.input_scale, what);
    detail::read_key(j, "bias_scale", base.bias_scale, what);
    detail::read_key(j, "gamma", base.gamma, what);
    detail::read_key(j, "lambda", base.lambda, what);
    detail::read_key(j, "washout_fraction", base.washout_fraction, what);
    detail::read_key(j, "seed", base.seed, what);
    if (j.contains("mode")) {
        std::string m;
        detail::read_key(j, "mode", m, what);
        base.mode = parse_reservoir_mode(m);
    }
    base.validate();
    return base;
}

[[nodiscard]] inline Json to_json(const WindowPlan& p) { return Json{{"d", p.d}, {"k", p.k}}; }

[[nodiscard]] inline WindowPlan plan_from_json(const Json& j, WindowPlan base = {}) {
    detail::check_keys(j, {"d", "k"}, "window");
    detail::read_key(j, "d", base.d, "window");
    detail::read_key(j, "k", base.k, "window");
    return base;
}

[[nodiscard]] inline Json to_json(const TrendModel& t) {
    return Json{{"order", t.order},
                {"coefficients", std::vector<double>(t.coefficients.data(), t.coefficients.data() + t.coefficients.size())},
                {"standard_errors",
                 std::vector<double>(t.standard_errors.data(), t.standard_errors.data() + t.standard_errors.size())},
                {"t_first", t.t_first},
                {"t_l", t.t_l},
                {"rms_residual", t.rms_residual},
                {"points", t.points}};
}

[[nodiscard]] inline Json to_json(const TippingForecast& f) {
    Json j;
    j["kind"] = std::string(to_string(f.kind));
    j["threshold"] = f.threshold;
    j["epsilon"] = f.epsilon;
    j["t_hat_p"] = detail::optional_number(f.t_hat_p);
    j["t_l"] = f.t_l;
    j["lead_time"] = detail::optional_number(f.lead_time);
    j["warned"] = f.warned;
    j["warning_onset"] = detail::optional_number(f.warning_onset);
    j["bifurcation_class"] = std::string(to_string(f.bifurcation_class));
    j["trend"] = f.trend ? to_json(*f.trend) : Json(nullptr);
    if (!f.note.empty()) j["note"] = f.note;
    return j;
}

[[nodiscard]] inline Json to_json(const SelectionResult& r) {
    Json table = Json::array();
    for (const auto& row : r.table) {
        Json e = to_json(row.config);
        e["e_dyn"] = std::isfinite(row.e_dyn) ? Json(row.e_dyn) : Json(nullptr);
        e["windows"] = row.windows;
        if (!row.note.empty()) e["note"] = row.note;
        table.push_back(e);
    }
    return Json{{"best", to_json(r.best)}, {"best_index", r.best_index}, {"table", table}};
}

[[nodiscard]] inline std::string roc_to_csv(const RocResult& r) {
    std::string out = "threshold,fpr,tpr,auc\n";
    for (std::size_t i = 0; i < r.thresholds.size(); ++i)
        out += format_double(r.thresholds[i]) + ',' + format_double(r.fpr[i]) + ',' + format_double(r.tpr[i]) + ',' +
               format_double(r.auc) + '\n';
    return out;
}

namespace detail {

/// Quotes a CSV field when it contains a separator, quote or newline.
[[nodiscard]] inline std::string csv_field(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string out = "\"";
    for (const char c : s) {
        if (c == '"') out += '"';
        out += c == '\n' ? ' ' : c;
    }
    return out + '"';
}

[[nodiscard]] inline std::string optional_field(const std::optional<double>& v) {
    return v ? format_double(*v) : std::string();
}

}  // namespace detail

[[nodiscard]] inline std::string comparison_to_csv(const std::vector<ComparisonRow>& rows) {
    std::string out = "method,auc,warning_onset,notes\n";
    for (const auto& r : rows)
        out += std::string(to_string(r.method)) + ',' + detail::optional_field(r.auc) + ',' +
               detail::optional_field(r.warning_onset) + ',' + detail::csv_field(r.notes) + '\n';
    return out;
}

[[nodiscard]] inline Json comparison_to_json(const std::vector<ComparisonRow>& rows) {
    Json a = Json::array();
    for (const auto& r : rows)
        a.push_back({{"method", std::string(to_string(r.method))},
                     {"auc", detail::optional_number(r.auc)},
                     {"warning_onset", detail::optional_number(r.warning_onset)},
                     {"notes", r.notes}});
    return a;
}

[[nodiscard]] inline std::string leadtime_to_csv(const LeadTimeTable& table) {
    std::string out = "cutoff,lead_time,t_hat_p,abs_error,note\n";
    for (const auto& r : table.rows)
        out += format_double(r.cutoff) + ',' + format_double(r.lead_time) + ',' + detail::optional_field(r.t_hat_p) +
               ',' + detail::optional_field(r.abs_error) + ',' + detail::csv_field(r.note) + '\n';
    return out;
}

inline void write_json(const std::filesystem::path& path, const Json& j) { atomic_write(path, j.dump(2) + "\n"); }

[[nodiscard]] inline Json read_json(const std::filesystem::path& path) {
    const auto text = read_text(path);
    try {
        return Json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw ConfigError(path.string() + ": invalid JSON: " + e.what());
    }
}

// -----------------------------------------------------------------------------
// Trained models
// -----------------------------------------------------------------------------

/// A trained window without its training trajectory: enough to rebuild the
/// closed loop and to map hidden states back to original units.
struct SavedModel {
    ReservoirModel reservoir;
    ReadoutModel readout;
    Standardizer scaler;
    std::uint64_t seed = 0;
    double dt = 1.0;
};

namespace detail {

inline void append_block(std::string& out, const std::string& name, const Matrix& m) {
    out += "# " + name + '\n';
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        for (Eigen::Index j = 0; j < m.cols(); ++j) {
            if (j) out += ',';
            out += format_double(m(i, j));
        }
        out += '\n';
    }
}

}  // namespace detail

/// First line: JSON header with shapes, gamma, mode, seed and dt. Then one
/// `# name` line per block followed by its rows.
[[nodiscard]] inline std::string model_to_text(const SavedModel& m) {
    const Matrix A = Matrix(m.reservoir.A);
    const std::vector<std::pair<std::string, Matrix>> blocks{
        {"A", A},
        {"W_in", m.reservoir.W_in},
        {"b_r", m.reservoir.b_r},
        {"W_out", m.readout.W_out},
        {"b_s", m.readout.b_s},
        {"scale_mean", m.scaler.mean},
        {"scale_sd", m.scaler.scale},
    };
    Json header;
    header["format"] = "tipping-model";
    header["version"] = 1;
    header["n"] = m.reservoir.size();
    header["dimension"] = m.reservoir.input_dimension();
    header["gamma"] = m.reservoir.gamma;
    header["mode"] = std::string(to_string(m.reservoir.mode));
    header["seed"] = m.seed;
    header["dt"] = m.dt;
    Json shapes = Json::array();
    for (const auto& [name, mat] : blocks) shapes.push_back({{"name", name}, {"rows", mat.rows()}, {"cols", mat.cols()}});
    header["blocks"] = shapes;
    std::string out = header.dump() + '\n';
    for (const auto& [name, mat] : blocks) detail::append_block(out, name, mat);
    return out;
}

namespace detail {

[[nodiscard]] inline SavedModel parse_model(std::string_view text, const std::string& source) {
    const auto lines = detail::split_lines(text);
    if (lines.empty()) throw IoError(source + ": empty model file");
    Json header;
    try {
        header = Json::parse(lines[0]);
    } catch (const nlohmann::json::parse_error&) {
        throw IoError(source + ": first line is not a JSON header");
    }
    if (header.value("format", std::string()) != "tipping-model" || header.value("version", 0) != 1)
        throw IoError(source + ": not a version-1 tipping model");

    std::map<std::string, Matrix> blocks;
    std::size_t line = 1;
    for (const auto& shape : header.at("blocks")) {
        const auto name = shape.at("name").get<std::string>();
        const auto rows = shape.at("rows").get<Eigen::Index>();
        const auto cols = shape.at("cols").get<Eigen::Index>();
        if (line >= lines.size() || lines[line] != "# " + name)
            throw IoError(source + ": expected block '" + name + "' at line " + std::to_string(line + 1));
        ++line;
        Matrix m(rows, cols);
        for (Eigen::Index i = 0; i < rows; ++i, ++line) {
            if (line >= lines.size()) throw IoError(source + ": block '" + name + "' is truncated");
            const auto fields = detail::split_fields(lines[line]);
            if (static_cast<Eigen::Index>(fields.size()) != cols)
                throw IoError(source + ": block '" + name + "' row " + std::to_string(i) + " has the wrong width");
            for (Eigen::Index j = 0; j < cols; ++j) {
                const auto v = parse_double(fields[static_cast<std::size_t>(j)]);
                if (!v) throw IoError(source + ": malformed number in block '" + name + "'");
                m(i, j) = *v;
            }
        }
        blocks[name] = std::move(m);
    }
    for (const char* name : {"A", "W_in", "b_r", "W_out", "b_s", "scale_mean", "scale_sd"})
        if (!blocks.count(name)) throw IoError(source + ": missing block '" + name + "'");

    SavedModel m;
    m.reservoir.A = blocks["A"].sparseView(0.0, 0.0);
    m.reservoir.A.makeCompressed();
    m.reservoir.W_in = blocks["W_in"];
    m.reservoir.b_r = blocks["b_r"].col(0);
    m.reservoir.gamma = header.at("gamma").get<double>();
    m.reservoir.mode = parse_reservoir_mode(header.at("mode").get<std::string>());
    m.readout.W_out = blocks["W_out"];
    m.readout.b_s = blocks["b_s"].col(0);
    m.scaler.mean = blocks["scale_mean"].col(0);
    m.scaler.scale = blocks["scale_sd"].col(0);
    m.seed = header.at("seed").get<std::uint64_t>();
    m.dt = header.value("dt", 1.0);
    const auto n = m.reservoir.A.rows();
    if (m.reservoir.A.cols() != n || m.reservoir.W_in.rows() != n || m.reservoir.b_r.size() != n ||
        m.readout.W_out.cols() != n || m.readout.W_out.rows() != m.reservoir.W_in.cols())
        throw IoError(source + ": inconsistent block shapes");
    return m;
}

}  // namespace detail

[[nodiscard]] inline SavedModel model_from_text(std::string_view text, const std::string& source = "model") {
    try {
        return detail::parse_model(text, source);
    } catch (const nlohmann::json::exception& e) {
        throw IoError(source + ": malformed model header: " + e.what());
    } catch (const ConfigError& e) {
        throw IoError(source + ": " + e.what());
    }
}

inline void save_model(const std::filesystem::path& path, const SavedModel& m) { atomic_write(path, model_to_text(m)); }

[[nodiscard]] inline SavedModel load_model(const std::filesystem::path& path) {
    return model_from_text(read_text(path), path.string());
}

}  // namespace tipping
