#include "oamspdc/sellmeier.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "oamspdc/errors.hpp"
#include "sellmeier_data.hpp"

namespace oamspdc {

namespace {

using nlohmann::json;

constexpr std::string_view kSupportedForm = "n^2 = A + B/(lambda^2 - C) - D*lambda^2";
constexpr int kBandSamples = 181;

void reject_unknown_keys(const json& obj, const std::set<std::string>& allowed, const std::string& where) {
  for (const auto& [key, value] : obj.items()) {
    if (!allowed.contains(key)) {
      throw ConfigError(where.empty() ? key : where + "." + key, "unknown key");
    }
  }
}

SellmeierCoefficients parse_coefficients(const json& arr, const std::string& field) {
  if (!arr.is_array() || arr.size() != 4) {
    throw ConfigError(field, "expected an array of four coefficients [A, B, C, D]");
  }
  for (const auto& v : arr) {
    if (!v.is_number()) throw ConfigError(field, "coefficients must be numbers");
  }
  return {arr[0].get<double>(), arr[1].get<double>(), arr[2].get<double>(), arr[3].get<double>()};
}

template <class F>
void for_each_band_sample(const SellmeierData& d, F&& f) {
  for (int i = 0; i < kBandSamples; ++i) {
    const double t = static_cast<double>(i) / (kBandSamples - 1);
    f(d.band_lo_um + t * (d.band_hi_um - d.band_lo_um));
  }
}

}  // namespace

void SellmeierData::validate() const {
  if (!(band_lo_um > 0.0) || !(band_hi_um > band_lo_um)) {
    throw ConfigError("valid_band_um", "band must satisfy 0 < lo < hi");
  }
  for_each_band_sample(*this, [&](double lambda) {
    for (auto pol : {Polarization::ordinary, Polarization::extraordinary}) {
      const double n2 = coefficients(pol).index_squared(lambda);
      if (!(n2 > 1.0) || !std::isfinite(n2)) {
        std::ostringstream msg;
        msg << "index must exceed 1 across the band (n^2 = " << n2 << " at " << lambda << " um)";
        throw ConfigError(pol == Polarization::ordinary ? "polarization.ordinary" : "polarization.extraordinary",
                          msg.str());
      }
    }
  });
}

bool SellmeierData::is_negative_uniaxial() const {
  bool negative = true;
  for_each_band_sample(*this, [&](double lambda) {
    negative = negative && extraordinary.index_squared(lambda) < ordinary.index_squared(lambda);
  });
  return negative;
}

SellmeierData parse_sellmeier_json(std::string_view text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError("sellmeier", std::string("malformed JSON: ") + e.what());
  }
  if (!doc.is_object()) throw ConfigError("sellmeier", "expected a JSON object");
  reject_unknown_keys(doc, {"schema_version", "material", "form", "polarization", "valid_band_um", "source", "data_version"},
                      "");

  for (const char* key : {"material", "form", "polarization", "valid_band_um", "source"}) {
    if (!doc.contains(key)) throw ConfigError(key, "missing required key");
  }
  if (doc.contains("schema_version") && doc["schema_version"] != 1) {
    throw ConfigError("schema_version", "unsupported schema version");
  }
  if (doc["form"] != kSupportedForm) {
    throw ConfigError("form", "unsupported dispersion form; expected \"" + std::string(kSupportedForm) + "\"");
  }

  SellmeierData out;
  out.material = doc["material"].get<std::string>();
  out.source = doc["source"].get<std::string>();
  out.data_version = doc.value("data_version", std::string{});

  const auto& pol = doc["polarization"];
  if (!pol.is_object()) throw ConfigError("polarization", "expected an object");
  reject_unknown_keys(pol, {"ordinary", "extraordinary"}, "polarization");
  if (!pol.contains("ordinary") || !pol.contains("extraordinary")) {
    throw ConfigError("polarization", "both ordinary and extraordinary coefficients are required");
  }
  out.ordinary = parse_coefficients(pol["ordinary"], "polarization.ordinary");
  out.extraordinary = parse_coefficients(pol["extraordinary"], "polarization.extraordinary");

  const auto& band = doc["valid_band_um"];
  if (!band.is_array() || band.size() != 2 || !band[0].is_number() || !band[1].is_number()) {
    throw ConfigError("valid_band_um", "expected [lo, hi]");
  }
  out.band_lo_um = band[0].get<double>();
  out.band_hi_um = band[1].get<double>();

  out.validate();
  return out;
}

SellmeierData load_sellmeier(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("sellmeier", "cannot open " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_sellmeier_json(buf.str());
}

std::string_view bbo_eimerl1987_json() { return detail::kBboEimerl1987Json; }

const SellmeierData& bbo_eimerl1987() {
  static const SellmeierData data = parse_sellmeier_json(bbo_eimerl1987_json());
  return data;
}

double refractive_index(double lambda_um, Polarization pol, const SellmeierData& data) {
  if (!(lambda_um >= data.band_lo_um && lambda_um <= data.band_hi_um)) {
    std::ostringstream msg;
    msg << "wavelength " << lambda_um << " um outside the supported band [" << data.band_lo_um << ", "
        << data.band_hi_um << "] um of " << data.material;
    throw DomainError(msg.str());
  }
  return std::sqrt(data.coefficients(pol).index_squared(lambda_um));
}

}  // namespace oamspdc
