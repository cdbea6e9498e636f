#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "oamspdc/parallel.hpp"
#include "oamspdc/quadrature.hpp"
#include "oamspdc/spectrum.hpp"

namespace oamspdc {

enum class ModeElement { mirror, rotator };

/// Action of a mirror or image rotator on |l, p>: the state becomes
/// phase * |l_out, p> with l_out = -l.
struct ModeTransform {
  int l_out = 0;
  Complex phase{1.0, 0.0};
};

/// mirror: e^{-i l pi}; rotator at angle theta: e^{-i l (pi + 2 theta)}.
ModeTransform mode_transform_phase(int l, double theta_rad, ModeElement element);

/// Polarization response psi(theta) of one detector arm, linearly
/// interpolated in theta. The default instance is ideal (psi = 0).
class PolarizationResponse {
 public:
  PolarizationResponse() = default;
  /// Throws ConfigError unless theta is strictly increasing and both vectors
  /// have the same length (>= 2).
  PolarizationResponse(std::vector<double> theta_deg, std::vector<double> psi_rad);

  /// CSV with header `theta_deg,psi_rad`.
  static PolarizationResponse parse_csv(std::string_view text);
  static PolarizationResponse load_csv(const std::filesystem::path& path);

  bool ideal() const noexcept { return theta_deg_.empty(); }
  /// True if the table spans [lo_deg, hi_deg] (always true when ideal).
  bool covers(double lo_deg, double hi_deg) const noexcept;

  /// psi at theta (radians). Throws DomainError outside the table.
  double psi(double theta_rad) const;

  const std::vector<double>& theta_deg() const noexcept { return theta_deg_; }
  const std::vector<double>& psi_rad() const noexcept { return psi_rad_; }

 private:
  std::vector<double> theta_deg_;
  std::vector<double> psi_rad_;
};

struct InterferometerParams {
  double k1 = 1.0;     ///< |k1|
  double k2 = 1.0;     ///< |k2|
  double delta = 0.0;  ///< global two-photon phase in radians
  PolarizationResponse psi_s;
  PolarizationResponse psi_i;

  /// Throws ConfigError for non-positive amplitudes.
  void validate() const;
  /// 2|k1||k2| / (|k1|^2 + |k2|^2)
  double visibility_prefactor() const noexcept { return 2.0 * k1 * k2 / (k1 * k1 + k2 * k2); }
};

/// Rate-level noise. Each measurement is f_n * (R_n + R), where
///   f_n = exp(sigma xi - sigma^2 / 2), xi ~ N(0, 1), sigma = flux_fluctuation
///   R_n = accidental_rate * (|k1|^2 + |k2|^2) * u, u ~ U[0, 2].
/// Draws are keyed on (seed, theta_s, theta_i[, delta]) so any evaluation
/// order gives the same values. With shared_flux one f_n serves every phase
/// setting of a point.
struct NoiseModel {
  double flux_fluctuation = 0.0;
  double accidental_rate = 0.0;
  std::uint64_t seed = 0;
  bool shared_flux = true;

  void validate() const;
  bool noiseless() const noexcept { return flux_fluctuation == 0.0 && accidental_rate == 0.0; }
};

/// A noisy coincidence reading, kept factored as flux * rate.
struct Measurement {
  double flux = 1.0;
  double rate = 0.0;
  double value() const noexcept { return flux * rate; }
};

/// |k1|^2 + |k2|^2 + 2|k1||k2| cos psi_s cos psi_i sum P cos(delta + 2 l_s theta_s + 2 l_i theta_i).
/// Throws DomainError for an unnormalized spectrum.
double coincidence_probability(const SpectrumMatrix& spec, double theta_s, double theta_i,
                               const InterferometerParams& params);

Measurement measured_coincidence(const SpectrumMatrix& spec, double theta_s, double theta_i,
                                 const InterferometerParams& params, const NoiseModel& noise);

struct ScanExtrema {
  Measurement max;
  Measurement min;
  double delta_at_max = 0.0;
  double delta_at_min = 0.0;
};

/// Scans delta = params.delta + k * step for k = 0..n_steps-1 and returns the
/// largest and smallest readings. Throws DomainError unless the scan covers 2 pi.
ScanExtrema delta_scan_extrema(const SpectrumMatrix& spec, double theta_s, double theta_i,
                               const InterferometerParams& params, const NoiseModel& noise, int n_steps = 40,
                               double step_rad = 9.0 * 3.14159265358979323846 / 180.0);

/// (r_c - r_d) / (r_c + r_d). Throws NumericalError when the sum is zero.
double visibility(double r_c, double r_d);
/// When both readings carry the same flux it cancels exactly.
double visibility(const Measurement& c, const Measurement& d);

/// Uniform grid theta = -90 + i * step (degrees), i = 0..K with K = 180/step.
struct AngularGrid {
  double step_deg = 0.0;
  int intervals = 0;  ///< K

  /// Throws ConfigError unless step > 0 divides 180 degrees.
  static AngularGrid from_step(double step_deg);
  std::size_t size() const noexcept { return static_cast<std::size_t>(intervals) + 1; }
  double theta_deg(std::size_t i) const noexcept { return -90.0 + step_deg * static_cast<double>(i); }
  double theta_rad(std::size_t i) const noexcept;
  /// Trapezoid weight: 1/2 at +-90 degrees, 1 elsewhere.
  double weight(std::size_t i) const noexcept { return i == 0 || i + 1 == size() ? 0.5 : 1.0; }
  friend bool operator==(const AngularGrid&, const AngularGrid&) = default;
};

/// Sampled surface over (theta_s, theta_i), row-major with theta_s rows.
struct VisibilitySurface {
  AngularGrid grid;
  std::vector<double> values;
  std::vector<std::uint8_t> valid;  ///< 0 marks points excluded from reconstruction

  VisibilitySurface() = default;
  explicit VisibilitySurface(const AngularGrid& g)
      : grid(g), values(g.size() * g.size(), 0.0), valid(g.size() * g.size(), 1) {}

  double& at(std::size_t is, std::size_t ii) noexcept { return values[is * grid.size() + ii]; }
  double at(std::size_t is, std::size_t ii) const noexcept { return values[is * grid.size() + ii]; }
  std::size_t invalid_count() const noexcept;
};

enum class ExtremaMethod { two_shot, delta_scan };

struct ForwardOptions {
  ExtremaMethod method = ExtremaMethod::two_shot;
  double delta_c = 0.0;
  double delta_d = 3.14159265358979323846;
  int scan_steps = 40;
  double scan_step_rad = 9.0 * 3.14159265358979323846 / 180.0;
  ParallelOptions parallel;
};

/// Coincidence surfaces at the two phase settings and the resulting
/// (uncorrected) visibility.
struct ForwardSurfaces {
  VisibilitySurface rate_c;
  VisibilitySurface rate_d;
  VisibilitySurface visibility;
};

ForwardSurfaces forward_visibility(const SpectrumMatrix& spec, const AngularGrid& grid,
                                   const InterferometerParams& params, const NoiseModel& noise,
                                   const ForwardOptions& opts = {});

/// Cosine surface from delta = (0, pi) and sine surface from (3 pi / 2, pi / 2).
struct FourShotSurfaces {
  ForwardSurfaces cosine;
  ForwardSurfaces sine;
};

FourShotSurfaces forward_four_shot(const SpectrumMatrix& spec, const AngularGrid& grid,
                                   const InterferometerParams& params, const NoiseModel& noise,
                                   const ParallelOptions& parallel = {});

/// V / (cos psi_s cos psi_i). Points with |cos psi_s cos psi_i| < min_factor
/// are marked invalid.
VisibilitySurface polarization_correct(const VisibilitySurface& measured, const PolarizationResponse& psi_s,
                                       const PolarizationResponse& psi_i, double min_factor = 1e-3);

double required_angular_step(int n_max);
int max_modes_for_step(double step_deg);

/// Throws NyquistError if the grid cannot resolve |l| <= n_max.
void check_nyquist(const AngularGrid& grid, int n_max);

struct Reconstruction {
  SpectrumMatrix spectrum;          ///< clamped and normalized
  std::vector<double> unclamped;    ///< signed values over the same sum, row-major
  double clamped_magnitude = 0.0;   ///< sum of |negative entries| over the signed total
  std::size_t excluded_points = 0;
  std::vector<std::string> warnings;
};

/// P(l_s, l_i) proportional to sum V cos(2 l_s theta_s + 2 l_i theta_i) over the grid.
Reconstruction reconstruct_symmetric(const VisibilitySurface& v, int n_max);

/// P(l_s, l_i) proportional to sum [V_cos cos(...) + V_sin sin(...)]. Throws
/// ConfigError when the two grids differ.
Reconstruction reconstruct_asymmetric(const VisibilitySurface& v_cos, const VisibilitySurface& v_sin, int n_max);

/// Coefficient of determination in percent:
///   100 (1 - sum (P_ob - P_in)^2 / sum (P_in - mean P_in)^2).
double r_squared(const SpectrumMatrix& observed, const SpectrumMatrix& input);

}  // namespace oamspdc
