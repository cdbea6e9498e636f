#pragma once

// Independent reference evaluations used as test oracles. Nothing here calls
// into the library's numerical kernels; each routine re-derives its quantity
// from the defining formula with plain loops.

#include <cmath>
#include <complex>
#include <functional>
#include <numbers>
#include <vector>

#include "oamspdc/crystal_optics.hpp"
#include "oamspdc/mode_array.hpp"
#include "oamspdc/spectrum.hpp"

namespace oracle {

using cd = std::complex<double>;
inline constexpr double pi = std::numbers::pi;

inline double deg(double degrees) { return degrees * pi / 180.0; }

// BBO dispersion typed in from the literature table rather than read from the
// shipped data file.
inline double bbo_index(double lambda_um, bool ordinary) {
  const double l2 = lambda_um * lambda_um;
  if (ordinary) return std::sqrt(2.7405 + 0.0184 / (l2 - 0.0179) - 0.0155 * l2);
  return std::sqrt(2.3730 + 0.0128 / (l2 - 0.0156) - 0.0044 * l2);
}

struct Anisotropy {
  double alpha, beta, gamma, eta;
};

inline Anisotropy anisotropy(double n_po, double n_pe, double theta) {
  const double s2 = std::sin(theta) * std::sin(theta);
  const double c2 = std::cos(theta) * std::cos(theta);
  const double d = n_po * n_po * s2 + n_pe * n_pe * c2;
  return {(n_po * n_po - n_pe * n_pe) * std::sin(theta) * std::cos(theta) / d, n_po * n_pe / d,
          n_po / std::sqrt(d), n_po * n_pe / std::sqrt(d)};
}

// Four-term mismatch in polar form: constant, paraxial, walk-off and
// elliptical quadratic contributions added one by one.
inline double delta_kz_terms(double rs, double ps, double ri, double pi_, const oamspdc::CrystalOpticalConstants& k) {
  const double constant = k.k_po * (k.n_so - k.eta);
  const double paraxial = -(rs * rs + ri * ri) / (k.n_so * k.k_po);
  const double walk_off = k.alpha * (rs * std::cos(ps) + ri * std::cos(pi_));
  const double x = rs * std::cos(ps) + ri * std::cos(pi_);
  const double y = rs * std::sin(ps) + ri * std::sin(pi_);
  const double quadratic = (k.beta * k.beta * x * x + k.gamma * k.gamma * y * y) / (2.0 * k.eta * k.k_po);
  return constant + paraxial + walk_off + quadratic;
}

// Riemann sum (1/M^2) sum f(phi_s, phi_i) e^{i(l_s phi_s + l_i phi_i)} on the
// grid phi = -pi + 2 pi m / M.
inline oamspdc::ModeArray<cd> riemann_fourier(const std::function<cd(double, double)>& f, int m, int n_max) {
  oamspdc::ModeArray<cd> out(n_max, cd{});
  std::vector<cd> samples(static_cast<std::size_t>(m) * m);
  for (int a = 0; a < m; ++a)
    for (int b = 0; b < m; ++b)
      samples[static_cast<std::size_t>(a) * m + b] = f(-pi + 2 * pi * a / m, -pi + 2 * pi * b / m);
  for (int ls = -n_max; ls <= n_max; ++ls)
    for (int li = -n_max; li <= n_max; ++li) {
      cd acc{};
      for (int a = 0; a < m; ++a)
        for (int b = 0; b < m; ++b) {
          const double ph = ls * (-pi + 2 * pi * a / m) + li * (-pi + 2 * pi * b / m);
          acc += samples[static_cast<std::size_t>(a) * m + b] * std::polar(1.0, ph);
        }
      out(ls, li) = acc / static_cast<double>(m * m);
    }
  return out;
}

// Gauss-Legendre rule from Newton iteration on the three-term recurrence.
inline void gauss_legendre(int n, std::vector<double>& x, std::vector<double>& w) {
  x.assign(static_cast<std::size_t>(n), 0.0);
  w.assign(static_cast<std::size_t>(n), 0.0);
  for (int i = 0; i < n; ++i) {
    double z = std::cos(pi * (i + 0.75) / (n + 0.5));
    double dp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0, p1 = z;
      for (int k = 2; k <= n; ++k) {
        const double p2 = ((2.0 * k - 1.0) * z * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      dp = n * (z * p1 - p0) / (z * z - 1.0);
      const double dz = p1 / dp;
      z -= dz;
      if (std::abs(dz) < 1e-16) break;
    }
    x[static_cast<std::size_t>(i)] = z;
    w[static_cast<std::size_t>(i)] = 2.0 / ((1.0 - z * z) * dp * dp);
  }
}

// Joint spectrum by brute force: for each Gauss-Legendre radial pair, sample
// V * Phi on a full M x M grid and take every coefficient with a direct
// double sum. Returns the unnormalized matrix of 4 pi^2 sum w |F|^2.
inline oamspdc::ModeArray<double> brute_joint_spectrum(const oamspdc::CrystalOpticalConstants& k, double length,
                                                        double w0, double rho_hi, int nodes, int m, int n_max) {
  std::vector<double> x, w;
  gauss_legendre(nodes, x, w);
  oamspdc::ModeArray<double> out(n_max, 0.0);
  for (int a = 0; a < nodes; ++a)
    for (int b = 0; b < nodes; ++b) {
      const double rs = 0.5 * rho_hi * (x[a] + 1.0);
      const double ri = 0.5 * rho_hi * (x[b] + 1.0);
      const double weight = 0.25 * rho_hi * rho_hi * w[a] * w[b] * rs * ri;
      auto f = [&](double ps, double pi_) {
        const double sx = rs * std::cos(ps) + ri * std::cos(pi_);
        const double sy = rs * std::sin(ps) + ri * std::sin(pi_);
        const double v = std::exp(-0.25 * w0 * w0 * (sx * sx + sy * sy));
        const double dk = delta_kz_terms(rs, ps, ri, pi_, k);
        const double h = 0.5 * dk * length;
        const double sinc = h == 0.0 ? 1.0 : std::sin(h) / h;
        return v * length * sinc * std::polar(1.0, h);
      };
      const auto coeff = riemann_fourier(f, m, n_max);
      for (int ls = -n_max; ls <= n_max; ++ls)
        for (int li = -n_max; li <= n_max; ++li)
          out(ls, li) += 4.0 * pi * pi * weight * std::norm(coeff(ls, li));
    }
  return out;
}

// Coincidence probability summed term by term.
inline double coincidence(const oamspdc::SpectrumMatrix& p, double ts, double ti, double delta, double k1, double k2,
                          double psi_s = 0.0, double psi_i = 0.0) {
  double s = 0.0;
  const int n = p.n_max();
  for (int ls = -n; ls <= n; ++ls)
    for (int li = -n; li <= n; ++li) s += p(ls, li) * std::cos(delta + 2.0 * ls * ts + 2.0 * li * ti);
  return k1 * k1 + k2 * k2 + 2.0 * k1 * k2 * std::cos(psi_s) * std::cos(psi_i) * s;
}

// Configuration used by the fast spectrum tests: BBO at the collinear angle
// with the experiment-scale pump waist.
inline oamspdc::SpdcConfig bbo_config(double length_um, double theta_deg = 28.66, double w0 = 388.0) {
  oamspdc::SpdcConfig cfg;
  cfg.crystal.theta_p_rad = deg(theta_deg);
  cfg.crystal.length_um = length_um;
  cfg.crystal.pump_wavelength_um = 0.405;
  cfg.crystal.sellmeier = oamspdc::bbo_eimerl1987();
  cfg.waist_um = w0;
  return cfg;
}

}  // namespace oracle
