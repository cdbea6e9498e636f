#pragma once

#include <filesystem>
#include <string>
#include <string_view>

namespace oamspdc {

enum class Polarization { ordinary, extraordinary };

/// Coefficients of n^2(lambda) = a + b / (lambda^2 - c) - d * lambda^2, lambda in um.
struct SellmeierCoefficients {
  double a = 0.0;
  double b = 0.0;
  double c = 0.0;
  double d = 0.0;

  double index_squared(double lambda_um) const noexcept {
    const double l2 = lambda_um * lambda_um;
    return a + b / (l2 - c) - d * l2;
  }
};

/// Dispersion data for a uniaxial crystal. Loaded from the JSON data files
/// shipped under core/data/; `source` carries the literature citation.
struct SellmeierData {
  std::string material;
  SellmeierCoefficients ordinary;
  SellmeierCoefficients extraordinary;
  double band_lo_um = 0.0;
  double band_hi_um = 0.0;
  std::string source;
  std::string data_version;

  const SellmeierCoefficients& coefficients(Polarization pol) const noexcept {
    return pol == Polarization::ordinary ? ordinary : extraordinary;
  }

  /// Throws ConfigError unless n > 1 for both polarizations over the band.
  void validate() const;

  /// True when n_e < n_o at every sampled wavelength of the band.
  bool is_negative_uniaxial() const;
};

/// Parses the JSON schema {material, form, polarization{ordinary,extraordinary},
/// valid_band_um, source}. Unknown keys are rejected.
SellmeierData parse_sellmeier_json(std::string_view text);
SellmeierData load_sellmeier(const std::filesystem::path& path);

/// BBO data compiled in from core/data/bbo_eimerl1987.json.
const SellmeierData& bbo_eimerl1987();
std::string_view bbo_eimerl1987_json();

/// n(lambda) for the given polarization. Throws DomainError outside the band.
double refractive_index(double lambda_um, Polarization pol, const SellmeierData& data);

}  // namespace oamspdc
