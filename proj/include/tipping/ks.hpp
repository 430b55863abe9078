#pragma once

// Kuramoto-Sivashinsky equation  u_t = -u u_x - u_xx - p u_xxxx  on a periodic
// domain of length L, Fourier pseudo-spectral in space with 2/3 dealiasing
// of the quadratic term and ETDRK4 (Cox-Matthews, contour-integral
// coefficients after Kassam-Trefethen) in time.

#include "tipping/core.hpp"

#include <unsupported/Eigen/FFT>

#include <numbers>

namespace tipping {

class KuramotoSivashinsky {
public:
    KuramotoSivashinsky(std::size_t points, double length, double viscosity, double step)
        : n_(points), fft_() {
        if (points < 8 || (points & (points - 1)) != 0)
            throw ConfigError("KuramotoSivashinsky: spatial_points must be a power of two >= 8");
        if (!(step > 0.0)) throw ConfigError("KuramotoSivashinsky: step must be positive");
        h_ = step;
        configure(length, viscosity);
    }

    /// Recomputes the ETDRK4 coefficients; cheap enough to call every step.
    void configure(double length, double viscosity) {
        if (!(length > 0.0) || !(viscosity > 0.0))
            throw ConfigError("KuramotoSivashinsky: domain length and viscosity must be positive");
        if (length == length_ && viscosity == viscosity_) return;
        length_ = length;
        viscosity_ = viscosity;
        const auto n = static_cast<Eigen::Index>(n_);
        wave_.resize(n);
        dealias_.resize(n);
        E_.resize(n);
        E2_.resize(n);
        Q_.resize(n);
        f1_.resize(n);
        f2_.resize(n);
        f3_.resize(n);
        const double base = 2.0 * std::numbers::pi / length;
        const auto cutoff = static_cast<double>(n_) / 3.0;
        constexpr int contour = 32;
        for (Eigen::Index j = 0; j < n; ++j) {
            // FFT ordering: 0, 1, ..., n/2-1, -n/2, ..., -1; Nyquist mode zeroed.
            double m = static_cast<double>(j < n / 2 ? j : j - n);
            if (j == n / 2) m = 0.0;
            wave_(j) = base * m;
            dealias_(j) = std::abs(m) < cutoff ? 1.0 : 0.0;
            const double k = wave_(j);
            const double lin = k * k - viscosity * k * k * k * k;
            const double hl = h_ * lin;
            E_(j) = std::exp(hl);
            E2_(j) = std::exp(0.5 * hl);
            Complex q{}, a{}, b{}, c{};
            for (int c_i = 1; c_i <= contour; ++c_i) {
                const Complex root = std::exp(Complex(0.0, std::numbers::pi * (c_i - 0.5) / contour));
                const Complex r = hl + root;
                const Complex er = std::exp(r);
                const Complex er2 = std::exp(0.5 * r);
                q += (er2 - 1.0) / r;
                a += (-4.0 - r + er * (4.0 - 3.0 * r + r * r)) / (r * r * r);
                b += (2.0 + r + er * (r - 2.0)) / (r * r * r);
                c += (-4.0 - 3.0 * r - r * r + er * (4.0 - r)) / (r * r * r);
            }
            // The upper half circle suffices because the coefficients are real.
            Q_(j) = h_ * (q / double(contour)).real();
            f1_(j) = h_ * (a / double(contour)).real();
            f2_(j) = h_ * (b / double(contour)).real();
            f3_(j) = h_ * (c / double(contour)).real();
        }
    }

    /// Advances the physical-space field by one step of length h.
    void step(Vector& u) {
        ComplexVector v = forward(u);
        v(static_cast<Eigen::Index>(n_ / 2)) = 0.0;
        const ComplexVector Nv = nonlinear(v);
        const ComplexVector a = E2_.cwiseProduct(v) + Q_.cwiseProduct(Nv);
        const ComplexVector Na = nonlinear(a);
        const ComplexVector b = E2_.cwiseProduct(v) + Q_.cwiseProduct(Na);
        const ComplexVector Nb = nonlinear(b);
        const ComplexVector c = E2_.cwiseProduct(a) + Q_.cwiseProduct(2.0 * Nb - Nv);
        const ComplexVector Nc = nonlinear(c);
        v = E_.cwiseProduct(v) + f1_.cwiseProduct(Nv) + 2.0 * f2_.cwiseProduct(Na + Nb) + f3_.cwiseProduct(Nc);
        u = inverse(v);
    }

    [[nodiscard]] std::size_t points() const noexcept { return n_; }
    [[nodiscard]] double step_size() const noexcept { return h_; }

private:
    ComplexVector forward(const Vector& u) {
        std::vector<Complex> in(u.data(), u.data() + u.size()), out;
        fft_.fwd(out, in);
        return Eigen::Map<ComplexVector>(out.data(), static_cast<Eigen::Index>(out.size()));
    }

    Vector inverse(const ComplexVector& v) {
        std::vector<Complex> in(v.data(), v.data() + v.size()), out;
        fft_.inv(out, in);
        Vector u(static_cast<Eigen::Index>(out.size()));
        for (std::size_t i = 0; i < out.size(); ++i) u(static_cast<Eigen::Index>(i)) = out[i].real();
        return u;
    }

    /// -(1/2) d/dx (u^2) in spectral space, dealiased.
    ComplexVector nonlinear(const ComplexVector& v) {
        const Vector u = inverse(v);
        const ComplexVector sq = forward(u.cwiseProduct(u));
        ComplexVector out(sq.size());
        for (Eigen::Index j = 0; j < sq.size(); ++j)
            out(j) = Complex(0.0, -0.5 * wave_(j)) * sq(j) * dealias_(j);
        return out;
    }

    std::size_t n_;
    double h_ = 0.0;
    double length_ = -1.0;
    double viscosity_ = -1.0;
    Vector wave_, dealias_;
    ComplexVector E_, E2_, Q_, f1_, f2_, f3_;
    Eigen::FFT<double> fft_;
};

}  // namespace tipping
