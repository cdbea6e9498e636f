#pragma once

#include <complex>

#include "oamspdc/sellmeier.hpp"

namespace oamspdc {

/// Type-I crystal geometry. Lengths in micrometers, angles in radians.
struct CrystalConfig {
  double theta_p_rad = 0.0;         ///< angle between optic axis and pump wave vector
  double length_um = 0.0;           ///< crystal thickness L
  double pump_wavelength_um = 0.0;  ///< pump vacuum wavelength
  SellmeierData sellmeier;

  /// Throws ConfigError for theta_p outside (0, pi/2), L < 0 or lambda_p <= 0.
  void validate() const;
};

/// Indices and anisotropy coefficients entering the longitudinal phase mismatch.
/// k_po is the pump vacuum wavenumber 2*pi/lambda_p in rad/um.
struct CrystalOpticalConstants {
  double n_po = 0.0;  ///< ordinary index at lambda_p
  double n_pe = 0.0;  ///< principal extraordinary index at lambda_p
  double n_so = 0.0;  ///< ordinary index at the degenerate wavelength 2*lambda_p
  double k_po = 0.0;
  double alpha = 0.0;  ///< walk-off coefficient, tan(zeta)
  double beta = 0.0;
  double gamma = 0.0;
  double eta = 0.0;   ///< effective extraordinary pump index
  double zeta = 0.0;  ///< walk-off angle in radians

  /// Delta k_z at q_s = q_i = 0.
  double collinear_mismatch() const noexcept { return k_po * (n_so - eta); }
};

/// Builds the anisotropy coefficients from explicit indices.
CrystalOpticalConstants optical_constants_from_indices(double n_po, double n_pe, double n_so, double theta_p_rad,
                                                       double pump_wavelength_um);

CrystalOpticalConstants optical_constants(const CrystalConfig& cfg);

/// Polar transverse wave vector (rho in rad/um, phi in radians).
struct TransverseMomentum {
  double rho = 0.0;
  double phi = 0.0;

  double x() const noexcept;
  double y() const noexcept;
};

/// Builds a TransverseMomentum with phi wrapped into [-pi, pi).
/// Throws DomainError for negative rho.
TransverseMomentum polar(double rho, double phi);

/// Longitudinal phase mismatch from Cartesian transverse components. This is
/// the single place the mismatch polynomial is written down; the spectrum
/// kernels call it on every grid sample.
inline double delta_kz_cartesian(double qsx, double qsy, double qix, double qiy,
                                 const CrystalOpticalConstants& k) noexcept {
  const double sum_x = qsx + qix;
  const double sum_y = qsy + qiy;
  const double rho_sq = qsx * qsx + qsy * qsy + qix * qix + qiy * qiy;
  return k.k_po * (k.n_so - k.eta) - rho_sq / (k.n_so * k.k_po) + k.alpha * sum_x +
         (k.beta * k.beta * sum_x * sum_x + k.gamma * k.gamma * sum_y * sum_y) / (2.0 * k.eta * k.k_po);
}

/// Delta k_z(q_s, q_i) in rad/um.
double delta_kz(const TransverseMomentum& q_s, const TransverseMomentum& q_i, const CrystalOpticalConstants& k);

/// sin(x)/x with sinc(0) = 1.
double sinc(double x) noexcept;

/// L * sinc(dk L / 2) * exp(i dk L / 2).
std::complex<double> phase_matching_from_mismatch(double delta_kz, double length_um) noexcept;

std::complex<double> phase_matching_amplitude(const TransverseMomentum& q_s, const TransverseMomentum& q_i,
                                              const CrystalOpticalConstants& k, double length_um);

/// Gaussian pump angular spectrum exp(-w0^2 |q_s + q_i|^2 / 4), where
/// |q_s + q_i|^2 = rho_s^2 + rho_i^2 + 2 rho_s rho_i cos(phi_s - phi_i).
double pump_amplitude(const TransverseMomentum& q_s, const TransverseMomentum& q_i, double waist_um);

}  // namespace oamspdc
