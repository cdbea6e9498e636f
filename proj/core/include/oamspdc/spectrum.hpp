#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "oamspdc/crystal_optics.hpp"
#include "oamspdc/lg_modes.hpp"
#include "oamspdc/mode_array.hpp"
#include "oamspdc/parallel.hpp"
#include "oamspdc/quadrature.hpp"

namespace oamspdc {

/// Joint OAM spectrum P(l_s, l_i) over l_s, l_i in [-N, N].
struct SpectrumMatrix {
  ModeArray<double> values;
  bool normalized = false;

  SpectrumMatrix() = default;
  explicit SpectrumMatrix(int n_max) : values(n_max, 0.0) {}

  int n_max() const noexcept { return values.n_max(); }
  double operator()(int l_s, int l_i) const noexcept { return values(l_s, l_i); }
  double& operator()(int l_s, int l_i) noexcept { return values(l_s, l_i); }

  double total() const noexcept;

  /// Returns a copy scaled to unit sum. Throws NumericalError when the sum is
  /// not positive.
  SpectrumMatrix normalized_copy() const;

  /// Throws DomainError on negative or non-finite entries, or on a normalized
  /// flag whose sum differs from 1 by more than 1e-10.
  void validate() const;
};

/// Quadrature controls. A zero value selects the automatic choice reported
/// in QuadratureReport.
struct QuadratureSettings {
  int azimuthal_samples = 0;  ///< M_s, samples along phi_s (auto: at least 256)
  int relative_samples = 0;   ///< M_r, samples along phi_i - phi_s
  int radial_nodes = 0;       ///< nodes per radial axis
  double rho_hi = 0.0;        ///< unclipped radial cutoff in rad/um
  RadialScheme scheme = RadialScheme::gauss;
  /// Samples and radial pairs whose pump exponent w0^2 |q_s+q_i|^2 / 4
  /// exceeds this value are treated as zero.
  double pump_cutoff_exponent = 40.0;
  ParallelOptions parallel;
};

struct SpdcConfig {
  CrystalConfig crystal;
  double waist_um = 0.0;  ///< pump waist w0
  QuadratureSettings quadrature;
  std::optional<double> clip_ratio;  ///< rho_0 / sigma_s

  /// Throws ConfigError naming the offending field.
  void validate() const;
};

struct QuadratureReport {
  int azimuthal_samples = 0;
  int relative_samples = 0;
  int radial_nodes = 0;
  double rho_hi = 0.0;
  RadialScheme scheme = RadialScheme::gauss;
  bool clipped = false;
  std::optional<double> clip_ratio;
  std::optional<double> sigma_s;
  std::size_t pairs_total = 0;
  std::size_t pairs_evaluated = 0;
  std::size_t pairs_skipped = 0;
  std::size_t samples_evaluated = 0;
  double total_mass = 0.0;      ///< unnormalized sum of P over [-N, N]^2
  double full_mass = 0.0;       ///< integral of |V Phi|^2 over all OAM orders
  double boundary_ratio = 0.0;  ///< largest radial mass density on the outer node over the peak density
  std::vector<std::string> warnings;

  /// Share of the full two-photon mass carried by modes |l| <= N.
  double mode_capture() const noexcept { return full_mass > 0.0 ? total_mass / full_mass : 0.0; }
};

struct SpectrumResult {
  SpectrumMatrix spectrum;  ///< normalized
  QuadratureReport report;
};

/// Unclipped automatic radial cutoff: covers the phase-matching ring and its
/// sinc tails, bounded below by 8/w0.
double default_rho_hi(const CrystalOpticalConstants& k, double length_um, double waist_um);

/// Resolved grid sizes and cutoff for a given configuration and N.
struct ResolvedQuadrature {
  int azimuthal_samples = 0;
  int relative_samples = 0;
  int radial_nodes = 0;
  double rho_hi = 0.0;
  RadialScheme scheme = RadialScheme::gauss;
};

/// Fills every automatic setting. `rho_hi` overrides the configured or
/// default cutoff when positive (clipping passes rho_0 here).
ResolvedQuadrature resolve_quadrature(const SpdcConfig& cfg, const CrystalOpticalConstants& k, int n_max,
                                      double rho_hi = 0.0);

/// P(l_s, l_i) = (1/4 pi^2) integral of |integral of V Phi e^{i(l_s phi_s + l_i phi_i)} dphi_s dphi_i|^2
///               rho_s rho_i drho_s drho_i,
/// normalized to unit sum. With `clip_ratio` set the radial integrals stop at
/// rho_0 = clip_ratio * marginal_sigma(cfg).
SpectrumResult joint_oam_spectrum(const SpdcConfig& cfg, int n_max);

/// Same computation with explicit optical constants (used for surrogate
/// crystals that no (theta_p, Sellmeier) pair produces).
SpectrumResult joint_oam_spectrum(const SpdcConfig& cfg, const CrystalOpticalConstants& k, int n_max);

/// 100 * (1 - antidiagonal sum / total). Throws NumericalError for an
/// all-zero spectrum.
double nonconservation(const SpectrumMatrix& spec);

/// S_l = P(l, -l) for l = -N..N.
std::vector<double> schmidt_antidiagonal(const SpectrumMatrix& spec);

/// Standard deviation of l under the normalized S_l distribution.
double schmidt_width(std::span<const double> schmidt);

/// Signal radial intensity with the idler integrated out, at radius rho.
double marginal_intensity(const SpdcConfig& cfg, const CrystalOpticalConstants& k, double rho);

struct MarginalWidth {
  double sigma = 0.0;       ///< e^-2 radius in rad/um
  double peak_rho = 0.0;
  double peak_value = 0.0;
};

/// Radius where the marginal intensity falls to e^-2 of its peak. Throws
/// NumericalError if no crossing exists below the unclipped cutoff, or if the
/// intensity climbs back above the threshold further out.
MarginalWidth marginal_width(const SpdcConfig& cfg, const CrystalOpticalConstants& k);
double marginal_sigma(const SpdcConfig& cfg);

/// Share of the single-photon marginal power inside a circular aperture of
/// radius ratio * sigma_s.
double aperture_capture_fraction(const SpdcConfig& cfg, double ratio);

/// |C|^2 for one pair of LG modes, with C the overlap of V Phi with
/// LG*_s(q_s) LG*_i(q_i). Unnormalized.
double mode_projected_probability(const SpdcConfig& cfg, const LgModeSpec& signal, const LgModeSpec& idler);

/// Overlap coefficients C(p_s, p_i) for fixed (l_s, l_i), p_s, p_i <= p_max,
/// using one waist for both photons. Row index is p_s.
std::vector<std::vector<Complex>> radial_coefficients(const SpdcConfig& cfg, int l_s, int l_i, int p_max,
                                                      double waist_um);

struct ProjectedSpectrum {
  SpectrumMatrix spectrum;  ///< normalized |C(l_s,0; l_i,0)|^2
  double waist_um = 0.0;
  QuadratureReport report;
};

/// p = 0 projected spectrum. A non-positive waist selects
/// optimal_projection_waist(cfg).
ProjectedSpectrum mode_projected_spectrum(const SpdcConfig& cfg, int n_max, double waist_um = 0.0);

/// Mode waist maximizing |C(0,0; 0,0)|^2.
double optimal_projection_waist(const SpdcConfig& cfg);

enum class SweepAxis { thickness, angle };
enum class ModeSelection { all_p, p0 };

struct SweepPoint {
  double value = 0.0;  ///< um for thickness, radians for angle
  std::optional<double> nonconservation_percent;
  std::string error;
  QuadratureReport report;
};

struct SweepOptions {
  ModeSelection modes = ModeSelection::all_p;
  /// When false the first failing point throws an Error that names its index.
  bool continue_on_error = false;
};

std::vector<SweepPoint> sweep(const SpdcConfig& base, SweepAxis axis, std::span<const double> values, int n_max,
                              const SweepOptions& opts = {});

}  // namespace oamspdc
