#pragma once

// Continuous- and discrete-time reservoir computers: construction, input
// drive, ridge readout, closed-loop (autonomous) dynamics, closed-loop
// forecasting and hyperparameter selection by forecast error.

#include "tipping/core.hpp"
#include "tipping/dynamics.hpp"

#include <Eigen/Cholesky>
#include <Eigen/SparseCore>

#include <optional>

namespace tipping {

using SparseMatrix = Eigen::SparseMatrix<double, Eigen::RowMajor>;

enum class ReservoirMode { continuous, discrete };

[[nodiscard]] inline std::string_view to_string(ReservoirMode m) {
    return m == ReservoirMode::continuous ? "continuous" : "discrete";
}

[[nodiscard]] inline ReservoirMode parse_reservoir_mode(std::string_view s) {
    if (s == "continuous") return ReservoirMode::continuous;
    if (s == "discrete") return ReservoirMode::discrete;
    throw ConfigError("unknown reservoir mode '" + std::string(s) + "' (expected continuous or discrete)");
}

struct ReservoirConfig {
    std::size_t n = 300;
    double spectral_radius = 0.9;
    double density = 0.05;
    double input_scale = 0.5;
    double bias_scale = 0.5;
    double gamma = 1.0;  // 1/time (continuous) or leak in (0, 1] (discrete)
    double lambda = 1e-6;
    double washout_fraction = 0.1;
    std::uint64_t seed = 1;
    ReservoirMode mode = ReservoirMode::continuous;

    void validate() const {
        if (n < 1) throw ConfigError("ReservoirConfig: n must be >= 1");
        if (!(density > 0.0 && density <= 1.0)) throw ConfigError("ReservoirConfig: density must be in (0, 1]");
        if (!(lambda >= 0.0)) throw ConfigError("ReservoirConfig: lambda must be >= 0");
        if (!(washout_fraction >= 0.0 && washout_fraction < 0.5))
            throw ConfigError("ReservoirConfig: washout_fraction must be in [0, 0.5)");
        if (!(spectral_radius > 0.0)) throw ConfigError("ReservoirConfig: spectral_radius must be positive");
        if (!(input_scale >= 0.0) || !(bias_scale >= 0.0)) throw ConfigError("ReservoirConfig: scales must be >= 0");
        if (!(gamma > 0.0)) throw ConfigError("ReservoirConfig: gamma must be positive");
        if (mode == ReservoirMode::discrete && gamma > 1.0)
            throw ConfigError("ReservoirConfig: discrete leak gamma must be in (0, 1]");
    }
};

/// Fixed random reservoir; never modified by training.
struct ReservoirModel {
    SparseMatrix A;
    Matrix W_in;  // n x N
    Vector b_r;
    double gamma = 1.0;
    ReservoirMode mode = ReservoirMode::continuous;

    [[nodiscard]] std::size_t size() const noexcept { return static_cast<std::size_t>(A.rows()); }
    [[nodiscard]] std::size_t input_dimension() const noexcept { return static_cast<std::size_t>(W_in.cols()); }
};

/// Samples A on a Bernoulli(density) mask with uniform [-1, 1] weights and
/// rescales it to the configured spectral radius (dense eigensolve). W_in and
/// b_r are uniform on [-input_scale, input_scale] and [-bias_scale, bias_scale].
[[nodiscard]] inline ReservoirModel build_reservoir(const ReservoirConfig& config, std::size_t input_dimension) {
    config.validate();
    if (input_dimension < 1) throw ConfigError("build_reservoir: input dimension must be >= 1");
    const auto n = static_cast<Eigen::Index>(config.n);
    const auto N = static_cast<Eigen::Index>(input_dimension);
    ReservoirModel model;
    model.gamma = config.gamma;
    model.mode = config.mode;

    constexpr int max_retries = 8;
    for (int attempt = 0;; ++attempt) {
        Rng rng(mix_seed(config.seed, 1 + static_cast<std::uint64_t>(attempt)));
        std::bernoulli_distribution keep(config.density);
        std::vector<Eigen::Triplet<double>> entries;
        entries.reserve(static_cast<std::size_t>(config.density * double(n) * double(n) * 1.1) + 8);
        for (Eigen::Index i = 0; i < n; ++i)
            for (Eigen::Index j = 0; j < n; ++j)
                if (keep(rng)) entries.emplace_back(i, j, uniform_symmetric(rng, 1.0));
        SparseMatrix A(n, n);
        A.setFromTriplets(entries.begin(), entries.end());
        const double rho = spectral_radius(Matrix(A));
        if (rho > 1e-12) {
            model.A = A * (config.spectral_radius / rho);
            model.A.makeCompressed();
            break;
        }
        if (attempt >= max_retries)
            throw NumericError("build_reservoir: sampled recurrent matrix has zero spectral radius after " +
                               std::to_string(max_retries) + " retries");
    }

    Rng in_rng(mix_seed(config.seed, 100));
    model.W_in.resize(n, N);
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j < N; ++j) model.W_in(i, j) = uniform_symmetric(in_rng, config.input_scale);
    Rng bias_rng(mix_seed(config.seed, 101));
    model.b_r.resize(n);
    for (Eigen::Index i = 0; i < n; ++i) model.b_r(i) = uniform_symmetric(bias_rng, config.bias_scale);
    return model;
}

// -----------------------------------------------------------------------------
// Drive
// -----------------------------------------------------------------------------

/// Hidden states aligned with the window samples: row j is r at sample j.
/// In discrete mode row j has seen inputs s_0..s_{j-1}, so the readout is a
/// one-step predictor; in continuous mode row j is r(t_j) after integrating
/// against the input up to t_j.
struct HiddenTrajectory {
    Matrix states;  // samples x n
    Vector next;    // discrete: state after consuming the last sample; continuous: copy of the last row
};

/// One controlled leaky-map update.
[[nodiscard]] inline Vector controlled_step(const ReservoirModel& model, const Vector& r, const Vector& s) {
    const Vector pre = model.A * r + model.W_in * s + model.b_r;
    return (1.0 - model.gamma) * r + model.gamma * pre.array().tanh().matrix();
}

/// Drives the reservoir from r = 0. Continuous mode uses RK4 at the window dt
/// with the input linearly interpolated inside each step.
[[nodiscard]] inline HiddenTrajectory drive(const ReservoirModel& model, const TimeSeries& window) {
    const auto T = static_cast<Eigen::Index>(window.size());
    if (T < 2) throw ConfigError("drive: window needs at least 2 samples");
    if (window.dimension() != model.input_dimension())
        throw ConfigError("drive: window dimension " + std::to_string(window.dimension()) +
                          " does not match reservoir input dimension " + std::to_string(model.input_dimension()));
    const auto n = static_cast<Eigen::Index>(model.size());
    HiddenTrajectory out;
    out.states.resize(T, n);
    // Input drive for every sample, n x T.
    const Matrix U = (model.W_in * window.values.transpose()).colwise() + model.b_r;
    Vector r = Vector::Zero(n);
    out.states.row(0).setZero();
    const double g = model.gamma;

    if (model.mode == ReservoirMode::discrete) {
        for (Eigen::Index j = 0; j < T; ++j) {
            const Vector pre = model.A * r + U.col(j);
            r = (1.0 - g) * r + g * pre.array().tanh().matrix();
            if (!r.allFinite()) throw NumericError("drive: non-finite hidden state", static_cast<std::size_t>(j + 1));
            if (j + 1 < T) out.states.row(j + 1) = r.transpose();
        }
        out.next = r;
        return out;
    }

    const double h = window.dt;
    const auto field = [&](const Vector& x, const Vector& u) -> Vector {
        const Vector pre = model.A * x + u;
        return g * (pre.array().tanh().matrix() - x);
    };
    for (Eigen::Index j = 0; j + 1 < T; ++j) {
        const Vector u0 = U.col(j);
        const Vector u1 = U.col(j + 1);
        const Vector um = 0.5 * (u0 + u1);
        const Vector k1 = field(r, u0);
        const Vector k2 = field(r + 0.5 * h * k1, um);
        const Vector k3 = field(r + 0.5 * h * k2, um);
        const Vector k4 = field(r + h * k3, u1);
        r += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        if (!r.allFinite()) throw NumericError("drive: non-finite hidden state", static_cast<std::size_t>(j + 1));
        out.states.row(j + 1) = r.transpose();
    }
    out.next = r;
    return out;
}

// -----------------------------------------------------------------------------
// Readout
// -----------------------------------------------------------------------------

struct ReadoutModel {
    Matrix W_out;  // N x n
    Vector b_s;    // N
};

struct ReadoutDiagnostics {
    std::size_t samples = 0;               // rows used in the regression
    double training_mse = 0.0;
    double normal_equation_residual = 0.0;  // ||G w - X^T y|| / (||G|| ||w|| + ||X^T y||)
    bool underdetermined = false;          // fewer than n + 1 samples
};

struct ReadoutFit {
    ReadoutModel readout;
    ReadoutDiagnostics diagnostics;
};

/// Ridge regression of targets on [hidden, 1] over the post-washout rows:
/// (X^T X + lambda I) w = X^T Y solved by Cholesky. Both W_out and b_s are
/// penalized.
[[nodiscard]] inline ReadoutFit train_readout(const Matrix& hidden, const Matrix& targets, double lambda,
                                              double washout_fraction) {
    if (hidden.rows() != targets.rows()) throw ConfigError("train_readout: hidden and target lengths differ");
    if (!(lambda >= 0.0)) throw ConfigError("train_readout: lambda must be >= 0");
    if (!(washout_fraction >= 0.0 && washout_fraction < 0.5))
        throw ConfigError("train_readout: washout_fraction must be in [0, 0.5)");
    const auto skip = static_cast<Eigen::Index>(washout_fraction * static_cast<double>(hidden.rows()));
    const Eigen::Index m = hidden.rows() - skip;
    const Eigen::Index n = hidden.cols();
    if (m < 1) throw ConfigError("train_readout: no samples left after washout");

    Matrix X(m, n + 1);
    X.leftCols(n) = hidden.bottomRows(m);
    X.col(n).setOnes();
    const Matrix Y = targets.bottomRows(m);

    Matrix G = Matrix::Zero(n + 1, n + 1);
    G.selfadjointView<Eigen::Lower>().rankUpdate(X.transpose());
    G.triangularView<Eigen::StrictlyUpper>() = G.transpose();
    G.diagonal().array() += lambda;
    const Matrix rhs = X.transpose() * Y;

    Eigen::LLT<Matrix> llt(G);
    const double rcond = llt.info() == Eigen::Success ? llt.rcond() : 0.0;
    if (llt.info() != Eigen::Success || rcond < 1e-15) {
        if (lambda == 0.0)
            throw NumericError("train_readout: Gram matrix is rank deficient with lambda = 0; use lambda > 0");
        throw NumericError("train_readout: regularized Gram matrix is not positive definite");
    }
    const Matrix w = llt.solve(rhs);  // (n+1) x N
    if (!w.allFinite()) throw NumericError("train_readout: non-finite readout weights");

    ReadoutFit fit;
    fit.readout.W_out = w.topRows(n).transpose();
    fit.readout.b_s = w.row(n).transpose();
    fit.diagnostics.samples = static_cast<std::size_t>(m);
    fit.diagnostics.underdetermined = m < n + 1;
    fit.diagnostics.training_mse = (X * w - Y).squaredNorm() / static_cast<double>(Y.size());
    const double scale = G.norm() * w.norm() + rhs.norm();
    fit.diagnostics.normal_equation_residual = scale > 0.0 ? (G * w - rhs).norm() / scale : 0.0;
    return fit;
}

// -----------------------------------------------------------------------------
// Autonomous reservoir
// -----------------------------------------------------------------------------

/// Closed-loop reservoir r' = gamma(-r + tanh(A~ r + b~)) (continuous) or
/// r+ = (1-gamma) r + gamma tanh(A~ r + b~) (discrete), with
/// A~ = A + W_in W_out and b~ = W_in b_s + b_r. A~ is kept factored for
/// matrix-vector work; `dense_a_tilde` materializes it for eigensolves.
class AutonomousRC {
public:
    AutonomousRC() = default;
    AutonomousRC(const ReservoirModel& model, const ReadoutModel& readout)
        : A_(model.A), W_in_(model.W_in), W_out_(readout.W_out), gamma_(model.gamma), mode_(model.mode) {
        if (readout.W_out.rows() != model.W_in.cols() || readout.W_out.cols() != model.A.rows() ||
            readout.b_s.size() != model.W_in.cols())
            throw ConfigError("close_loop: readout dimensions do not match the reservoir");
        b_tilde_ = model.W_in * readout.b_s + model.b_r;
    }

    [[nodiscard]] std::size_t size() const noexcept { return static_cast<std::size_t>(A_.rows()); }
    [[nodiscard]] double gamma() const noexcept { return gamma_; }
    [[nodiscard]] ReservoirMode mode() const noexcept { return mode_; }
    [[nodiscard]] const Vector& b_tilde() const noexcept { return b_tilde_; }
    [[nodiscard]] const Matrix& W_out() const noexcept { return W_out_; }

    [[nodiscard]] Matrix dense_a_tilde() const { return Matrix(A_) + W_in_ * W_out_; }

    /// A~ X without forming A~.
    template <typename Derived>
    [[nodiscard]] Matrix apply_a_tilde(const Eigen::MatrixBase<Derived>& X) const {
        return A_ * X + W_in_ * (W_out_ * X);
    }

    [[nodiscard]] Vector preactivation(const Vector& r) const { return apply_a_tilde(r) + b_tilde_; }

    /// g(r) = gamma(-r + tanh(A~ r + b~)); the continuous vector field and the
    /// discrete fixed-point residual map(r) - r coincide.
    [[nodiscard]] Vector residual(const Vector& r) const {
        return gamma_ * (preactivation(r).array().tanh().matrix() - r);
    }

    [[nodiscard]] Vector field(const Vector& r) const { return residual(r); }

    [[nodiscard]] Vector map(const Vector& r) const {
        return (1.0 - gamma_) * r + gamma_ * preactivation(r).array().tanh().matrix();
    }

    /// Slope of tanh at the preactivation, 1 - tanh^2.
    [[nodiscard]] Vector slopes(const Vector& r) const {
        return (1.0 - preactivation(r).array().tanh().square()).matrix();
    }

    /// Jacobian of the dynamics: the vector field (continuous) or the map (discrete).
    [[nodiscard]] Matrix jacobian(const Vector& r) const {
        const Matrix DA = slopes(r).asDiagonal() * dense_a_tilde();
        const auto n = static_cast<Eigen::Index>(size());
        if (mode_ == ReservoirMode::continuous) return gamma_ * (DA - Matrix::Identity(n, n));
        return (1.0 - gamma_) * Matrix::Identity(n, n) + gamma_ * DA;
    }

    /// Jacobian of g = residual; equals `jacobian` for continuous mode and
    /// `jacobian - I` for discrete mode.
    [[nodiscard]] Matrix residual_jacobian(const Vector& r) const {
        const auto n = static_cast<Eigen::Index>(size());
        return gamma_ * (slopes(r).asDiagonal() * dense_a_tilde() - Matrix::Identity(n, n));
    }

    /// J(r) V for a block of tangent vectors.
    [[nodiscard]] Matrix jvp(const Vector& r, const Matrix& V) const {
        const Matrix DAV = slopes(r).asDiagonal() * apply_a_tilde(V);
        if (mode_ == ReservoirMode::continuous) return gamma_ * (DAV - V);
        return (1.0 - gamma_) * V + gamma_ * DAV;
    }

    /// One step of the closed loop: RK4 over h (continuous) or one map iterate.
    [[nodiscard]] Vector step(const Vector& r, double h) const {
        if (mode_ == ReservoirMode::discrete) return map(r);
        return rk4_step([this](const Vector& x) { return field(x); }, r, h);
    }

private:
    SparseMatrix A_;
    Matrix W_in_;
    Matrix W_out_;
    Vector b_tilde_;
    double gamma_ = 1.0;
    ReservoirMode mode_ = ReservoirMode::continuous;
};

[[nodiscard]] inline AutonomousRC close_loop(const ReservoirModel& model, const ReadoutModel& readout) {
    return {model, readout};
}

/// Hidden-state trajectory of the closed loop, rows 0..steps with row 0 = r0.
[[nodiscard]] inline Matrix predict_autonomous(const AutonomousRC& rc, const Vector& r0, std::size_t steps, double h) {
    if (!r0.allFinite()) throw ConfigError("predict_autonomous: non-finite initial state");
    Matrix out(static_cast<Eigen::Index>(steps + 1), r0.size());
    Vector r = r0;
    out.row(0) = r.transpose();
    for (std::size_t i = 1; i <= steps; ++i) {
        r = rc.step(r, h);
        if (!r.allFinite()) throw NumericError("predict_autonomous: non-finite state", i);
        out.row(static_cast<Eigen::Index>(i)) = r.transpose();
    }
    return out;
}

// -----------------------------------------------------------------------------
// Window training
// -----------------------------------------------------------------------------

/// Per-coordinate affine map to zero mean and unit variance. Eigenvalues,
/// Floquet multipliers and Lyapunov exponents are invariant under it. Flat
/// coordinates pass through unchanged so the readout still sees their level.
struct Standardizer {
    Vector mean;
    Vector scale;

    [[nodiscard]] static Standardizer identity(std::size_t dim) {
        return {Vector::Zero(static_cast<Eigen::Index>(dim)), Vector::Ones(static_cast<Eigen::Index>(dim))};
    }

    [[nodiscard]] static Standardizer fit(const Matrix& values) {
        Standardizer s;
        s.mean = values.colwise().mean().transpose();
        const Matrix centered = values.rowwise() - s.mean.transpose();
        const double denom = std::max<double>(1.0, static_cast<double>(values.rows() - 1));
        s.scale = (centered.colwise().squaredNorm().array() / denom).sqrt().transpose();
        for (Eigen::Index i = 0; i < s.scale.size(); ++i) {
            const double floor = 1e-12 * std::max(1.0, std::abs(s.mean(i)));
            if (!(s.scale(i) > floor)) {
                s.mean(i) = 0.0;
                s.scale(i) = 1.0;
            }
        }
        return s;
    }

    [[nodiscard]] Matrix apply(const Matrix& values) const {
        return (values.rowwise() - mean.transpose()).array().rowwise() / scale.transpose().array();
    }
    [[nodiscard]] Matrix invert(const Matrix& values) const {
        return (values.array().rowwise() * scale.transpose().array()).matrix().rowwise() + mean.transpose();
    }
};

/// Everything produced by training on one data window.
struct TrainedWindow {
    Standardizer scaler;
    HiddenTrajectory hidden;
    ReadoutModel readout;
    ReadoutDiagnostics diagnostics;
    AutonomousRC autonomous;
    Vector forecast_start;  // hidden state whose readout predicts the first sample after the window
    Vector hidden_mean;     // post-washout average, the Newton start for equilibria
    double dt = 1.0;

    /// Observable (original units) for a block of hidden states, one per row.
    [[nodiscard]] Matrix observe(const Matrix& states) const {
        const Matrix z = (states * readout.W_out.transpose()).rowwise() + readout.b_s.transpose();
        return scaler.invert(z);
    }
};

[[nodiscard]] inline TrainedWindow train_window(const ReservoirModel& model, const TimeSeries& window, double lambda,
                                                double washout_fraction, bool standardize) {
    TrainedWindow out;
    out.dt = window.dt;
    out.scaler = standardize ? Standardizer::fit(window.values) : Standardizer::identity(window.dimension());
    const TimeSeries scaled(out.scaler.apply(window.values), window.t0, window.dt, window.discrete);
    out.hidden = drive(model, scaled);
    auto fit = train_readout(out.hidden.states, scaled.values, lambda, washout_fraction);
    out.readout = std::move(fit.readout);
    out.diagnostics = fit.diagnostics;
    out.autonomous = close_loop(model, out.readout);
    out.forecast_start = model.mode == ReservoirMode::discrete
                             ? out.hidden.next
                             : Vector(out.hidden.states.row(out.hidden.states.rows() - 1).transpose());
    const auto skip = static_cast<Eigen::Index>(washout_fraction * static_cast<double>(out.hidden.states.rows()));
    out.hidden_mean = out.hidden.states.bottomRows(out.hidden.states.rows() - skip).colwise().mean().transpose();
    return out;
}

/// Closed-loop forecast of the `steps` samples following the window, in
/// original units.
[[nodiscard]] inline Matrix forecast(const TrainedWindow& w, std::size_t steps) {
    if (steps == 0) return Matrix(0, w.readout.W_out.rows());
    Matrix states;
    if (w.autonomous.mode() == ReservoirMode::discrete) {
        states = predict_autonomous(w.autonomous, w.forecast_start, steps - 1, w.dt);
    } else {
        states = predict_autonomous(w.autonomous, w.forecast_start, steps, w.dt).bottomRows(
            static_cast<Eigen::Index>(steps));
    }
    return w.observe(states);
}

// -----------------------------------------------------------------------------
// Hyperparameter selection
// -----------------------------------------------------------------------------

struct SelectionRow {
    ReservoirConfig config;
    double e_dyn = std::numeric_limits<double>::infinity();
    std::size_t windows = 0;
    std::string note;
};

struct SelectionResult {
    ReservoirConfig best;
    std::size_t best_index = 0;
    std::vector<SelectionRow> table;  // grid order
};

/// For each config, trains on every window [ik, ik+d) that leaves k samples
/// after it, forecasts those k samples closed-loop and averages the squared
/// error. Ties go to smaller n, then to the earlier grid entry.
[[nodiscard]] inline SelectionResult select_hyperparameters(const TimeSeries& series, std::size_t d, std::size_t k,
                                                            const std::vector<ReservoirConfig>& grid,
                                                            bool standardize = true, unsigned threads = 1) {
    if (grid.empty()) throw ConfigError("select_hyperparameters: grid is empty");
    if (k < 1 || d < 2) throw ConfigError("select_hyperparameters: need d >= 2 and k >= 1");
    if (series.size() < d + k) throw ConfigError("select_hyperparameters: series shorter than one window plus k");
    const std::size_t windows = (series.size() - d - k) / k + 1;

    SelectionResult out;
    out.table.resize(grid.size());
    parallel_for(grid.size(), threads, [&](std::size_t g) {
        SelectionRow& row = out.table[g];
        row.config = grid[g];
        try {
            const auto model = build_reservoir(grid[g], series.dimension());
            double sum = 0.0;
            for (std::size_t i = 0; i < windows; ++i) {
                const auto tw = train_window(model, series.slice(i * k, d), grid[g].lambda,
                                             grid[g].washout_fraction, standardize);
                const Matrix pred = forecast(tw, k);
                const Matrix truth = series.values.middleRows(static_cast<Eigen::Index>(i * k + d),
                                                              static_cast<Eigen::Index>(k));
                sum += (pred - truth).squaredNorm() / static_cast<double>(series.dimension());
            }
            row.windows = windows;
            row.e_dyn = sum / static_cast<double>(windows * k);
            if (!std::isfinite(row.e_dyn)) {
                row.e_dyn = std::numeric_limits<double>::infinity();
                row.note = "non-finite forecast";
            }
        } catch (const Error& e) {
            row.e_dyn = std::numeric_limits<double>::infinity();
            row.note = e.what();
        }
    });

    bool any = false;
    for (std::size_t g = 0; g < out.table.size(); ++g) {
        const auto& row = out.table[g];
        if (!std::isfinite(row.e_dyn)) continue;
        const auto& best = out.table[out.best_index];
        if (!any || row.e_dyn < best.e_dyn || (row.e_dyn == best.e_dyn && row.config.n < best.config.n)) {
            out.best_index = g;
            any = true;
        }
    }
    if (!any) throw NumericError("select_hyperparameters: every configuration produced non-finite forecasts");
    out.best = out.table[out.best_index].config;
    return out;
}

}  // namespace tipping
