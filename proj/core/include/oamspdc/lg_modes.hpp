#pragma once

namespace oamspdc {

/// Laguerre-Gaussian mode in the transverse-momentum representation.
/// `waist_um` is the position-space waist w; the momentum profile decays as
/// exp(-w^2 rho^2 / 4).
struct LgModeSpec {
  int l = 0;
  int p = 0;
  double waist_um = 0.0;

  /// Throws ConfigError for p < 0 or waist <= 0.
  void validate() const;
};

/// Radial factor R(rho) of the LG mode:
///
///   R = w sqrt(p! / (2 pi (p+|l|)!)) (w rho / sqrt 2)^|l| L_p^|l|(w^2 rho^2 / 2) exp(-w^2 rho^2 / 4)
///
/// normalized so that the integral of R^2 rho drho over [0, inf) equals 1/(2 pi).
/// The full mode is R(rho) exp(-i l phi). For p = 0 and |l| = 1 the peak sits
/// at rho = sqrt(2)/w. Throws DomainError for rho < 0.
double lg_radial_momentum(const LgModeSpec& spec, double rho);

/// Radius beyond which every LG profile with indices up to (|l|, p) is below
/// exp(-40) of its scale.
double lg_support_radius(int abs_l, int p, double waist_um) noexcept;

}  // namespace oamspdc
