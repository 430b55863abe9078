#pragma once

// Tuned reservoir and window settings for each preset, used as CLI defaults.

#include "tipping/measures.hpp"
#include "tipping/pipeline.hpp"
#include "tipping/reservoir.hpp"
#include "tipping/systems.hpp"

#include <string_view>
#include <vector>

namespace tipping {

struct AnalysisDefaults {
    ReservoirConfig reservoir;
    WindowPlan plan;
    std::vector<MeasureKind> kinds;
};

namespace detail {

// Small, weakly coupled leaky map with heavy ridge: the readout reproduces the
// map and the closed loop stays close to its linearization.
inline ReservoirConfig discrete_map_config() {
    ReservoirConfig c;
    c.mode = ReservoirMode::discrete;
    c.n = 50;
    c.gamma = 1.0;
    c.spectral_radius = 0.01;
    c.input_scale = 0.05;
    c.lambda = 0.1;
    return c;
}

inline ReservoirConfig planar_flow_config(double gamma, double lambda) {
    ReservoirConfig c;
    c.mode = ReservoirMode::continuous;
    c.n = 100;
    c.gamma = gamma;
    c.spectral_radius = 0.1;
    c.input_scale = 0.2;
    c.lambda = lambda;
    return c;
}

inline ReservoirConfig lorenz_config(double gamma, double spectral_radius, double lambda) {
    ReservoirConfig c;
    c.mode = ReservoirMode::continuous;
    c.n = 300;
    c.gamma = gamma;
    c.spectral_radius = spectral_radius;
    c.input_scale = 0.2;
    c.lambda = lambda;
    return c;
}

}  // namespace detail

/// Settings for the Lorenz DEJ near an equilibrium.
[[nodiscard]] inline ReservoirConfig lorenz_dej_config() { return detail::lorenz_config(20.0, 0.3, 1e-2); }

/// Settings for the Lorenz MLE on the chaotic attractor.
[[nodiscard]] inline ReservoirConfig lorenz_mle_config() { return detail::lorenz_config(10.0, 0.9, 1e-4); }

/// Settings for the MFM of planar limit cycles.
[[nodiscard]] inline ReservoirConfig cycle_mfm_config() { return detail::planar_flow_config(20.0, 1e-4); }

/// Settings for the DEJ of low-dimensional maps.
[[nodiscard]] inline ReservoirConfig map_dej_config() { return detail::discrete_map_config(); }

[[nodiscard]] inline AnalysisDefaults recommended_analysis(std::string_view preset_name) {
    using K = MeasureKind;
    if (preset_name == "fold_fig2") return {detail::discrete_map_config(), {1000, 250}, {K::dej}};
    if (preset_name == "period_doubling_fig2") return {detail::discrete_map_config(), {2000, 250}, {K::dej}};
    if (preset_name == "logistic_fig2c") return {detail::discrete_map_config(), {2000, 500}, {K::mfm}};
    if (preset_name == "pitchfork_fig2") return {detail::planar_flow_config(5.0, 1e-8), {2000, 500}, {K::dej}};
    if (preset_name == "hopf_fig2") return {detail::planar_flow_config(10.0, 1e-4), {2000, 250}, {K::dej}};
    if (preset_name == "hopf_cycle_to_eq") return {cycle_mfm_config(), {2000, 500}, {K::mfm}};
    if (preset_name == "lorenz_eq_to_chaos") return {lorenz_dej_config(), {1000, 500}, {K::dej}};
    if (preset_name == "lorenz_chaos_to_eq") return {lorenz_mle_config(), {5000, 1000}, {K::mle}};
    if (preset_name == "lorenz_near_eq") return {lorenz_dej_config(), {1000, 500}, {K::dej}};
    if (preset_name.rfind("ks_", 0) == 0) {
        ReservoirConfig c;
        c.n = 500;
        c.gamma = 5.0;
        c.spectral_radius = 0.4;
        c.input_scale = 0.1;
        c.lambda = 1e-4;
        return {c, {5000, 2500}, {K::mle}};
    }
    throw ConfigError("unknown preset '" + std::string(preset_name) + "'; available: " + preset_list());
}

}  // namespace tipping
