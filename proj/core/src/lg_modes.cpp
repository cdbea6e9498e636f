#include "oamspdc/lg_modes.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include "oamspdc/errors.hpp"

namespace oamspdc {

void LgModeSpec::validate() const {
  if (p < 0) throw ConfigError("mode.p", "radial index must be non-negative, got " + std::to_string(p));
  if (!(waist_um > 0.0) || !std::isfinite(waist_um))
    throw ConfigError("mode.waist_um", "mode waist must be positive");
}

double lg_radial_momentum(const LgModeSpec& spec, double rho) {
  spec.validate();
  if (rho < 0.0) throw DomainError("lg_radial_momentum: rho must be non-negative");
  const unsigned al = static_cast<unsigned>(std::abs(spec.l));
  const unsigned p = static_cast<unsigned>(spec.p);
  const double w = spec.waist_um;
  const double x = w * w * rho * rho / 2.0;
  // log of p!/(p+|l|)! keeps the prefactor finite for large indices.
  const double log_norm = std::lgamma(p + 1.0) - std::lgamma(p + al + 1.0);
  const double prefactor = w * std::sqrt(std::exp(log_norm) / (2.0 * std::numbers::pi));
  const double power = al == 0 ? 1.0 : std::pow(w * rho / std::numbers::sqrt2, static_cast<double>(al));
  return prefactor * power * std::assoc_laguerre(p, al, x) * std::exp(-x / 2.0);
}

double lg_support_radius(int abs_l, int p, double waist_um) noexcept {
  const double order = 2.0 * p + std::abs(abs_l) + 1.0;
  return 2.0 * (std::sqrt(40.0) + std::sqrt(2.0 * order)) / waist_um;
}

}  // namespace oamspdc
