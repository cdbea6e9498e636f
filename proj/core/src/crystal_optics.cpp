#include "oamspdc/crystal_optics.hpp"

#include <cmath>
#include <numbers>

#include "oamspdc/errors.hpp"

namespace oamspdc {

void CrystalConfig::validate() const {
  if (!(theta_p_rad > 0.0 && theta_p_rad < std::numbers::pi / 2)) {
    throw ConfigError("crystal.theta_p", "phase-matching angle must lie in (0, 90) degrees");
  }
  if (!(length_um >= 0.0) || !std::isfinite(length_um)) {
    throw ConfigError("crystal.thickness", "thickness must be finite and >= 0");
  }
  if (!(pump_wavelength_um > 0.0) || !std::isfinite(pump_wavelength_um)) {
    throw ConfigError("crystal.pump_wavelength", "pump wavelength must be > 0");
  }
}

CrystalOpticalConstants optical_constants_from_indices(double n_po, double n_pe, double n_so, double theta_p_rad,
                                                       double pump_wavelength_um) {
  const double s = std::sin(theta_p_rad);
  const double c = std::cos(theta_p_rad);
  const double denom = n_po * n_po * s * s + n_pe * n_pe * c * c;
  const double root = std::sqrt(denom);

  CrystalOpticalConstants k;
  k.n_po = n_po;
  k.n_pe = n_pe;
  k.n_so = n_so;
  k.k_po = 2.0 * std::numbers::pi / pump_wavelength_um;
  k.alpha = (n_po * n_po - n_pe * n_pe) * s * c / denom;
  k.beta = n_po * n_pe / denom;
  k.gamma = n_po / root;
  k.eta = n_po * n_pe / root;
  k.zeta = std::atan(k.alpha);
  return k;
}

CrystalOpticalConstants optical_constants(const CrystalConfig& cfg) {
  cfg.validate();
  const double lp = cfg.pump_wavelength_um;
  return optical_constants_from_indices(refractive_index(lp, Polarization::ordinary, cfg.sellmeier),
                                        refractive_index(lp, Polarization::extraordinary, cfg.sellmeier),
                                        refractive_index(2.0 * lp, Polarization::ordinary, cfg.sellmeier),
                                        cfg.theta_p_rad, lp);
}

double TransverseMomentum::x() const noexcept { return rho * std::cos(phi); }
double TransverseMomentum::y() const noexcept { return rho * std::sin(phi); }

TransverseMomentum polar(double rho, double phi) {
  if (!(rho >= 0.0)) throw DomainError("transverse momentum magnitude must be >= 0");
  constexpr double two_pi = 2.0 * std::numbers::pi;
  double wrapped = std::fmod(phi + std::numbers::pi, two_pi);
  if (wrapped < 0.0) wrapped += two_pi;
  return {rho, wrapped - std::numbers::pi};
}

double delta_kz(const TransverseMomentum& q_s, const TransverseMomentum& q_i, const CrystalOpticalConstants& k) {
  return delta_kz_cartesian(q_s.x(), q_s.y(), q_i.x(), q_i.y(), k);
}

double sinc(double x) noexcept {
  if (std::abs(x) < 1e-4) {
    const double x2 = x * x;
    return 1.0 - x2 / 6.0 + x2 * x2 / 120.0;
  }
  return std::sin(x) / x;
}

std::complex<double> phase_matching_from_mismatch(double delta_kz, double length_um) noexcept {
  const double half = 0.5 * delta_kz * length_um;
  const double s = std::sin(half);
  const double c = std::cos(half);
  const double amplitude = length_um * (std::abs(half) < 1e-4 ? sinc(half) : s / half);
  return {amplitude * c, amplitude * s};
}

std::complex<double> phase_matching_amplitude(const TransverseMomentum& q_s, const TransverseMomentum& q_i,
                                              const CrystalOpticalConstants& k, double length_um) {
  return phase_matching_from_mismatch(delta_kz(q_s, q_i, k), length_um);
}

double pump_amplitude(const TransverseMomentum& q_s, const TransverseMomentum& q_i, double waist_um) {
  if (!(waist_um > 0.0)) throw DomainError("pump waist must be > 0");
  const double sx = q_s.x() + q_i.x();
  const double sy = q_s.y() + q_i.y();
  return std::exp(-0.25 * waist_um * waist_um * (sx * sx + sy * sy));
}

}  // namespace oamspdc
