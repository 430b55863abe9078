#pragma once

// Generic numerical kernels for dynamical systems: fixed-step RK4 (with a
// variational companion), damped Newton, QR-reorthonormalized Lyapunov
// exponents and dominant-eigenvalue selection. Everything is templated on
// callables so the true benchmark systems and the autonomous reservoir share
// one implementation.

#include "tipping/core.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/QR>

#include <utility>

namespace tipping {

// -----------------------------------------------------------------------------
// Runge-Kutta
// -----------------------------------------------------------------------------

/// Classic 4th-order step of x' = f(x).
template <typename Field>
[[nodiscard]] Vector rk4_step(Field&& f, const Vector& x, double h) {
    const Vector k1 = f(x);
    const Vector k2 = f(x + 0.5 * h * k1);
    const Vector k3 = f(x + 0.5 * h * k2);
    const Vector k4 = f(x + h * k3);
    return x + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

/// One RK4 step of the joint system x' = f(x), V' = J(x) V.
/// `jvp(x, V)` must return J(x) * V for a block of tangent columns.
template <typename Field, typename Jvp>
void rk4_tangent_step(Field&& f, Jvp&& jvp, Vector& x, Matrix& tangents, double h) {
    const Vector k1 = f(x);
    const Matrix m1 = jvp(x, tangents);
    const Vector x2 = x + 0.5 * h * k1;
    const Matrix v2 = tangents + 0.5 * h * m1;
    const Vector k2 = f(x2);
    const Matrix m2 = jvp(x2, v2);
    const Vector x3 = x + 0.5 * h * k2;
    const Matrix v3 = tangents + 0.5 * h * m2;
    const Vector k3 = f(x3);
    const Matrix m3 = jvp(x3, v3);
    const Vector x4 = x + h * k3;
    const Matrix v4 = tangents + h * m3;
    const Vector k4 = f(x4);
    const Matrix m4 = jvp(x4, v4);
    x += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    tangents += (h / 6.0) * (m1 + 2.0 * m2 + 2.0 * m3 + m4);
}

// -----------------------------------------------------------------------------
// Damped Newton
// -----------------------------------------------------------------------------

struct NewtonResult {
    Vector x;
    double residual_norm = std::numeric_limits<double>::infinity();  // infinity norm of g(x)
    std::size_t iterations = 0;
    bool converged = false;
    bool singular_fallback = false;  // some step was solved in the least-squares sense
    std::vector<double> residual_trace;
};

/// Newton iteration on g(x) = 0. A full step is taken when it lowers ||g||_2,
/// otherwise the step is halved up to `max_halvings` times. Converged when
/// ||g||_inf < tol.
template <typename Residual, typename Jacobian>
[[nodiscard]] NewtonResult damped_newton(Residual&& g, Jacobian&& jac, Vector x, double tol, std::size_t max_iters,
                                         std::size_t max_halvings = 20) {
    NewtonResult out;
    Vector r = g(x);
    if (!r.allFinite()) throw NumericError("damped_newton: non-finite residual at the initial guess");
    for (;;) {
        out.residual_norm = r.cwiseAbs().maxCoeff();
        out.residual_trace.push_back(out.residual_norm);
        if (out.residual_norm < tol) {
            out.converged = true;
            break;
        }
        if (out.iterations >= max_iters) break;

        const Matrix J = jac(x);
        Vector step;
        Eigen::PartialPivLU<Matrix> lu(J);
        if (lu.rcond() > 1e-13) {
            step = lu.solve(-r);
        } else {
            step = Eigen::CompleteOrthogonalDecomposition<Matrix>(J).solve(-r);
            out.singular_fallback = true;
        }
        if (!step.allFinite()) break;

        const double current = r.norm();
        double scale = 1.0;
        bool accepted = false;
        for (std::size_t h = 0; h <= max_halvings; ++h, scale *= 0.5) {
            Vector trial = x + scale * step;
            Vector trial_r = g(trial);
            if (trial_r.allFinite() && trial_r.norm() < current) {
                x = std::move(trial);
                r = std::move(trial_r);
                accepted = true;
                break;
            }
        }
        ++out.iterations;
        if (!accepted) {
            out.residual_trace.push_back(out.residual_norm);
            break;
        }
    }
    out.x = std::move(x);
    return out;
}

// -----------------------------------------------------------------------------
// Lyapunov exponents (Benettin / QR)
// -----------------------------------------------------------------------------

struct LyapunovEstimate {
    std::vector<double> exponents;  // K leading exponents, descending by construction
    std::vector<double> trace;      // running estimate of the first exponent after each reorthonormalization
    std::size_t reorth_interval = 1;
    double spread = 0.0;            // max - min of the trace over its final decile
    bool converged = false;

    [[nodiscard]] double leading() const { return exponents.empty() ? 0.0 : exponents.front(); }
};

namespace detail {
inline double last_decile_spread(const std::vector<double>& trace) {
    if (trace.empty()) return std::numeric_limits<double>::infinity();
    const std::size_t tail = std::max<std::size_t>(1, trace.size() / 10);
    const auto first = trace.end() - static_cast<std::ptrdiff_t>(tail);
    const auto [lo, hi] = std::minmax_element(first, trace.end());
    return *hi - *lo;
}
}  // namespace detail

/// QR-reorthonormalized tangent propagation. `advance(x, Q)` advances the
/// state and its tangent block by one step of length `step_time`. Every
/// `reorth_interval` steps the tangents are re-factored as Q R and log|R_ii|
/// is accumulated once the burn-in fraction of steps has passed.
template <typename Advance>
[[nodiscard]] LyapunovEstimate benettin(Advance&& advance, Vector x, Matrix tangents, std::size_t total_steps,
                                        std::size_t reorth_interval, double step_time, double burn_fraction,
                                        double tol) {
    if (reorth_interval == 0) throw ConfigError("benettin: reorthonormalization interval must be positive");
    const auto K = tangents.cols();
    {
        Eigen::HouseholderQR<Matrix> qr(tangents);
        tangents = qr.householderQ() * Matrix::Identity(tangents.rows(), K);
    }
    const auto burn = static_cast<std::size_t>(burn_fraction * static_cast<double>(total_steps));
    Vector sums = Vector::Zero(K);
    double elapsed = 0.0;
    LyapunovEstimate out;
    out.reorth_interval = reorth_interval;
    for (std::size_t step = 1; step <= total_steps; ++step) {
        advance(x, tangents);
        if (step % reorth_interval != 0 && step != total_steps) continue;
        if (!tangents.allFinite() || !x.allFinite()) throw NumericError("benettin: non-finite tangent growth", step);
        Eigen::HouseholderQR<Matrix> qr(tangents);
        const Matrix R = qr.matrixQR().topRows(K).template triangularView<Eigen::Upper>();
        Matrix Q = qr.householderQ() * Matrix::Identity(tangents.rows(), K);
        for (Eigen::Index i = 0; i < K; ++i) {
            if (R(i, i) < 0.0) Q.col(i) *= -1.0;
        }
        const std::size_t since_last = (step % reorth_interval == 0) ? reorth_interval : step % reorth_interval;
        if (step > burn) {
            for (Eigen::Index i = 0; i < K; ++i) {
                const double diag = std::abs(R(i, i));
                if (diag == 0.0) throw NumericError("benettin: tangent collapsed to zero", step);
                sums(i) += std::log(diag);
            }
            elapsed += static_cast<double>(since_last) * step_time;
            out.trace.push_back(sums(0) / elapsed);
        }
        tangents = std::move(Q);
    }
    if (elapsed <= 0.0) throw ConfigError("benettin: no steps left after burn-in");
    out.exponents.resize(static_cast<std::size_t>(K));
    for (Eigen::Index i = 0; i < K; ++i) out.exponents[static_cast<std::size_t>(i)] = sums(i) / elapsed;
    out.spread = detail::last_decile_spread(out.trace);
    out.converged = out.spread < tol;
    return out;
}

// -----------------------------------------------------------------------------
// Dominant eigenvalue
// -----------------------------------------------------------------------------

/// Continuous-time stability is decided by the largest real part, discrete-time
/// (maps, monodromy) by the largest modulus.
enum class EigenConvention { max_real, max_modulus };

struct EigenPair {
    Complex value;
    ComplexVector vector;  // unit 2-norm
};

namespace detail {
inline double eigen_key(Complex z, EigenConvention c) { return c == EigenConvention::max_real ? z.real() : std::abs(z); }

/// Index of the dominant value; conjugate ties go to the positive imaginary part.
inline Eigen::Index dominant_index(const ComplexVector& values, EigenConvention c) {
    Eigen::Index best = 0;
    for (Eigen::Index i = 1; i < values.size(); ++i) {
        const double kb = eigen_key(values(best), c);
        const double ki = eigen_key(values(i), c);
        const double tie = 1e-10 * std::max({1.0, std::abs(kb), std::abs(ki)});
        if (ki > kb + tie || (std::abs(ki - kb) <= tie && values(i).imag() > values(best).imag())) best = i;
    }
    return best;
}
}  // namespace detail

/// Full dense non-symmetric eigensolve; returns every eigenpair.
struct EigenDecomposition {
    ComplexVector values;
    ComplexMatrix vectors;  // columns, unit norm
};

[[nodiscard]] inline EigenDecomposition eigen_decompose(const Matrix& J) {
    if (!J.allFinite()) throw NumericError("eigen_decompose: non-finite matrix");
    Eigen::EigenSolver<Matrix> solver(J, true);
    if (solver.info() != Eigen::Success) throw NumericError("eigen_decompose: eigensolver did not converge");
    EigenDecomposition out{solver.eigenvalues(), solver.eigenvectors()};
    for (Eigen::Index i = 0; i < out.vectors.cols(); ++i) {
        const double nrm = out.vectors.col(i).norm();
        if (nrm > 0.0) out.vectors.col(i) /= nrm;
    }
    return out;
}

[[nodiscard]] inline EigenPair dominant_eigenpair(const Matrix& J, EigenConvention convention) {
    const auto dec = eigen_decompose(J);
    const auto idx = detail::dominant_index(dec.values, convention);
    return {dec.values(idx), dec.vectors.col(idx)};
}

/// Largest eigenvalue modulus of a dense matrix.
[[nodiscard]] inline double spectral_radius(const Matrix& M) {
    if (M.size() == 0) return 0.0;
    Eigen::EigenSolver<Matrix> solver(M, false);
    if (solver.info() != Eigen::Success) throw NumericError("spectral_radius: eigensolver did not converge");
    return solver.eigenvalues().cwiseAbs().maxCoeff();
}

}  // namespace tipping
