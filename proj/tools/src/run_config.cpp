#include "run_config.hpp"

#include <cmath>
#include <fstream>
#include <numbers>
#include <set>
#include <sstream>

#include "oamspdc/errors.hpp"
#include "oamspdc/sellmeier.hpp"

namespace oamspdc::cli {

namespace {

using nlohmann::json;

constexpr double kDeg = std::numbers::pi / 180.0;

std::string join(const std::string& where, const std::string& key) { return where.empty() ? key : where + "." + key; }

// Typed access to one JSON object with dotted-path diagnostics.
class Section {
 public:
  Section(const json& j, std::string where, std::set<std::string> allowed) : j_(j), where_(std::move(where)) {
    if (!j_.is_object()) throw ConfigError(where_.empty() ? "config" : where_, "expected an object");
    for (const auto& [key, value] : j_.items())
      if (!allowed.contains(key)) throw ConfigError(join(where_, key), "unknown key");
  }

  bool has(const std::string& key) const { return j_.contains(key) && !j_.at(key).is_null(); }
  std::string path(const std::string& key) const { return join(where_, key); }
  const json& raw(const std::string& key) const { return j_.at(key); }

  double number(const std::string& key, double fallback) const {
    if (!has(key)) return fallback;
    const auto& v = j_.at(key);
    if (!v.is_number()) throw ConfigError(path(key), "expected a number");
    const double x = v.get<double>();
    if (!std::isfinite(x)) throw ConfigError(path(key), "must be finite");
    return x;
  }

  long long integer(const std::string& key, long long fallback) const {
    if (!has(key)) return fallback;
    const auto& v = j_.at(key);
    if (!v.is_number_integer()) throw ConfigError(path(key), "expected an integer");
    return v.get<long long>();
  }

  bool boolean(const std::string& key, bool fallback) const {
    if (!has(key)) return fallback;
    const auto& v = j_.at(key);
    if (!v.is_boolean()) throw ConfigError(path(key), "expected true or false");
    return v.get<bool>();
  }

  std::string string(const std::string& key, const std::string& fallback) const {
    if (!has(key)) return fallback;
    const auto& v = j_.at(key);
    if (!v.is_string()) throw ConfigError(path(key), "expected a string");
    return v.get<std::string>();
  }

 private:
  const json& j_;
  std::string where_;
};

double positive(double x, const std::string& field, const char* what) {
  if (!(x > 0.0)) throw ConfigError(field, std::string(what) + " must be > 0");
  return x;
}

int non_negative_int(long long x, const std::string& field) {
  if (x < 0 || x > 1'000'000'000) throw ConfigError(field, "must be a non-negative integer");
  return static_cast<int>(x);
}

std::filesystem::path resolve(const std::string& p, const std::filesystem::path& base_dir) {
  const std::filesystem::path path(p);
  return path.is_absolute() ? path : base_dir / path;
}

SellmeierData load_material(const std::string& ref, const std::filesystem::path& base_dir) {
  if (ref == "bbo_eimerl1987") return bbo_eimerl1987();
  const auto path = resolve(ref, base_dir);
  if (!std::filesystem::exists(path)) {
    throw ConfigError("crystal.sellmeier", "expected 'bbo_eimerl1987' or a readable JSON file, got '" + ref + "'");
  }
  try {
    return load_sellmeier(path);
  } catch (const ConfigError& e) {
    throw ConfigError("crystal.sellmeier." + e.field(), e.what());
  }
}

void parse_crystal(const json& j, const std::filesystem::path& base_dir, RunConfig& rc) {
  Section s(j, "crystal", {"theta_p_deg", "thickness_mm", "pump_wavelength_nm", "sellmeier"});
  for (const char* key : {"theta_p_deg", "thickness_mm"})
    if (!s.has(key)) throw ConfigError(s.path(key), "required");
  const double theta = s.number("theta_p_deg", 0.0);
  if (!(theta > 0.0 && theta < 90.0)) throw ConfigError(s.path("theta_p_deg"), "must lie in (0, 90) degrees");
  const double thickness = s.number("thickness_mm", 0.0);
  if (!(thickness >= 0.0)) throw ConfigError(s.path("thickness_mm"), "must be >= 0");
  const double lambda = positive(s.number("pump_wavelength_nm", 405.0), s.path("pump_wavelength_nm"), "wavelength");

  rc.sellmeier_ref = s.string("sellmeier", "bbo_eimerl1987");
  rc.spdc.crystal.theta_p_rad = theta * kDeg;
  rc.spdc.crystal.length_um = thickness * 1000.0;
  rc.spdc.crystal.pump_wavelength_um = lambda / 1000.0;
  rc.spdc.crystal.sellmeier = load_material(rc.sellmeier_ref, base_dir);
  const auto& band = rc.spdc.crystal.sellmeier;
  for (double l : {rc.spdc.crystal.pump_wavelength_um, 2.0 * rc.spdc.crystal.pump_wavelength_um}) {
    if (l < band.band_lo_um || l > band.band_hi_um) {
      std::ostringstream msg;
      msg << "pump and degenerate wavelengths must lie in the dispersion band [" << band.band_lo_um * 1000.0 << ", "
          << band.band_hi_um * 1000.0 << "] nm";
      throw ConfigError(s.path("pump_wavelength_nm"), msg.str());
    }
  }
}

void parse_quadrature(const json& j, RunConfig& rc) {
  Section s(j, "quadrature",
            {"azimuthal_samples", "relative_samples", "radial_nodes", "rho_hi", "scheme", "pump_cutoff"});
  auto& q = rc.spdc.quadrature;
  q.azimuthal_samples = non_negative_int(s.integer("azimuthal_samples", 0), s.path("azimuthal_samples"));
  q.relative_samples = non_negative_int(s.integer("relative_samples", 0), s.path("relative_samples"));
  q.radial_nodes = non_negative_int(s.integer("radial_nodes", 0), s.path("radial_nodes"));
  q.rho_hi = s.number("rho_hi", 0.0);
  if (q.rho_hi < 0.0) throw ConfigError(s.path("rho_hi"), "must be >= 0");
  q.pump_cutoff_exponent = positive(s.number("pump_cutoff", 40.0), s.path("pump_cutoff"), "cutoff exponent");
  const auto scheme = s.string("scheme", "gauss");
  if (scheme == "gauss") {
    q.scheme = RadialScheme::gauss;
  } else if (scheme == "trapezoid") {
    q.scheme = RadialScheme::trapezoid;
  } else {
    throw ConfigError(s.path("scheme"), "expected 'gauss' or 'trapezoid'");
  }
}

void parse_sweep(const json& j, RunConfig& rc) {
  Section s(j, "sweep", {"axis", "values", "p_modes"});
  SweepSpec sw;
  sw.axis = parse_sweep_axis(s.string("axis", "thickness"), s.path("axis"));
  sw.modes = parse_mode_selection(s.string("p_modes", "all"), s.path("p_modes"));
  if (s.has("values")) {
    const auto& v = s.raw("values");
    if (!v.is_array()) throw ConfigError(s.path("values"), "expected an array of numbers");
    for (std::size_t i = 0; i < v.size(); ++i) {
      if (!v[i].is_number()) throw ConfigError(s.path("values") + "[" + std::to_string(i) + "]", "expected a number");
      const double x = v[i].get<double>();
      sw.values.push_back(sw.axis == SweepAxis::thickness ? x * 1000.0 : x * kDeg);
    }
  }
  rc.sweep = std::move(sw);
}

void parse_detector(const json& j, const std::filesystem::path& base_dir, RunConfig& rc) {
  Section s(j, "detector",
            {"step_deg", "k1", "k2", "delta_deg", "extrema", "scan_steps", "four_shot", "psi_signal_csv",
             "psi_idler_csv", "input_spectrum_csv"});
  auto& d = rc.detector;
  d.step_deg = positive(s.number("step_deg", 0.9), s.path("step_deg"), "angular step");
  d.params.k1 = positive(s.number("k1", 1.0), s.path("k1"), "amplitude");
  d.params.k2 = positive(s.number("k2", 1.0), s.path("k2"), "amplitude");
  d.params.delta = s.number("delta_deg", 0.0) * kDeg;
  const auto extrema = s.string("extrema", "two_shot");
  if (extrema == "two_shot") {
    d.extrema = ExtremaMethod::two_shot;
  } else if (extrema == "delta_scan") {
    d.extrema = ExtremaMethod::delta_scan;
  } else {
    throw ConfigError(s.path("extrema"), "expected 'two_shot' or 'delta_scan'");
  }
  d.scan_steps = non_negative_int(s.integer("scan_steps", 40), s.path("scan_steps"));
  if (d.scan_steps < 40) throw ConfigError(s.path("scan_steps"), "a 9 degree scan needs at least 40 steps");
  d.four_shot = s.boolean("four_shot", false);

  auto psi = [&](const char* key, std::optional<std::filesystem::path>& where) -> PolarizationResponse {
    if (!s.has(key)) return {};
    where = resolve(s.string(key, ""), base_dir);
    try {
      return PolarizationResponse::load_csv(*where);
    } catch (const ConfigError& e) {
      throw ConfigError(s.path(key), e.what());
    }
  };
  d.params.psi_s = psi("psi_signal_csv", d.psi_signal_csv);
  d.params.psi_i = psi("psi_idler_csv", d.psi_idler_csv);
  if (s.has("input_spectrum_csv")) d.input_spectrum_csv = resolve(s.string("input_spectrum_csv", ""), base_dir);
}

void parse_noise(const json& j, RunConfig& rc) {
  Section s(j, "noise", {"flux_fluctuation", "accidental_rate", "shared_flux"});
  rc.noise.flux_fluctuation = s.number("flux_fluctuation", 0.0);
  rc.noise.accidental_rate = s.number("accidental_rate", 0.0);
  rc.noise.shared_flux = s.boolean("shared_flux", true);
}

json optional_path(const std::optional<std::filesystem::path>& p) { return p ? json(p->string()) : json(nullptr); }

}  // namespace

const char* to_string(SweepAxis axis) { return axis == SweepAxis::thickness ? "thickness" : "angle"; }
const char* to_string(ModeSelection modes) { return modes == ModeSelection::all_p ? "all" : "p0"; }

SweepAxis parse_sweep_axis(const std::string& s, const std::string& field) {
  if (s == "thickness") return SweepAxis::thickness;
  if (s == "angle") return SweepAxis::angle;
  throw ConfigError(field, "expected 'thickness' or 'angle'");
}

ModeSelection parse_mode_selection(const std::string& s, const std::string& field) {
  if (s == "all") return ModeSelection::all_p;
  if (s == "p0") return ModeSelection::p0;
  throw ConfigError(field, "expected 'all' or 'p0'");
}

void RunConfig::apply_threads() { spdc.quadrature.parallel.threads = threads; }

RunConfig parse_run_config(const json& j, const std::filesystem::path& base_dir) {
  Section top(j, "",
              {"crystal", "pump", "quadrature", "clip", "n_max", "seed", "threads", "output_dir", "p_modes", "sweep",
               "detector", "noise"});
  RunConfig rc;
  if (!top.has("crystal")) throw ConfigError("crystal", "required");
  if (!top.has("pump")) throw ConfigError("pump", "required");
  parse_crystal(top.raw("crystal"), base_dir, rc);

  Section pump(top.raw("pump"), "pump", {"waist_um"});
  if (!pump.has("waist_um")) throw ConfigError("pump.waist_um", "required");
  rc.spdc.waist_um = positive(pump.number("waist_um", 0.0), "pump.waist_um", "pump waist");

  if (top.has("quadrature")) parse_quadrature(top.raw("quadrature"), rc);
  if (top.has("clip")) {
    Section clip(top.raw("clip"), "clip", {"ratio"});
    if (clip.has("ratio")) rc.spdc.clip_ratio = positive(clip.number("ratio", 0.0), "clip.ratio", "clip ratio");
  }
  rc.n_max = non_negative_int(top.integer("n_max", 40), "n_max");
  const auto seed = top.integer("seed", 0);
  if (seed < 0) throw ConfigError("seed", "must be a non-negative integer");
  rc.seed = static_cast<std::uint64_t>(seed);
  rc.threads = static_cast<unsigned>(non_negative_int(top.integer("threads", 0), "threads"));
  rc.output_dir = resolve(top.string("output_dir", "out"), std::filesystem::current_path());
  rc.spectrum_modes = parse_mode_selection(top.string("p_modes", "all"), "p_modes");
  if (top.has("sweep")) parse_sweep(top.raw("sweep"), rc);
  if (top.has("detector")) parse_detector(top.raw("detector"), base_dir, rc);
  if (top.has("noise")) parse_noise(top.raw("noise"), rc);

  rc.noise.seed = rc.seed;
  rc.spdc.validate();
  rc.detector.params.validate();
  rc.noise.validate();
  rc.apply_threads();
  return rc;
}

RunConfig load_run_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config", "cannot read " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError("config", std::string("malformed JSON: ") + e.what());
  }
  return parse_run_config(j, path.parent_path());
}

json RunConfig::to_json() const {
  const auto& c = spdc.crystal;
  const auto& q = spdc.quadrature;
  json j;
  j["crystal"] = {{"theta_p_deg", c.theta_p_rad / kDeg},
                  {"thickness_mm", c.length_um / 1000.0},
                  {"pump_wavelength_nm", c.pump_wavelength_um * 1000.0},
                  {"sellmeier", sellmeier_ref}};
  j["pump"] = {{"waist_um", spdc.waist_um}};
  j["quadrature"] = {{"azimuthal_samples", q.azimuthal_samples},
                     {"relative_samples", q.relative_samples},
                     {"radial_nodes", q.radial_nodes},
                     {"rho_hi", q.rho_hi},
                     {"scheme", q.scheme == RadialScheme::gauss ? "gauss" : "trapezoid"},
                     {"pump_cutoff", q.pump_cutoff_exponent}};
  j["clip"] = {{"ratio", spdc.clip_ratio ? json(*spdc.clip_ratio) : json(nullptr)}};
  j["n_max"] = n_max;
  j["seed"] = seed;
  j["threads"] = threads;
  j["output_dir"] = output_dir.string();
  j["p_modes"] = to_string(spectrum_modes);
  if (sweep) {
    json values = json::array();
    for (double v : sweep->values) values.push_back(sweep->axis == SweepAxis::thickness ? v / 1000.0 : v / kDeg);
    j["sweep"] = {{"axis", to_string(sweep->axis)}, {"values", values}, {"p_modes", to_string(sweep->modes)}};
  }
  const auto& d = detector;
  j["detector"] = {{"step_deg", d.step_deg},
                   {"k1", d.params.k1},
                   {"k2", d.params.k2},
                   {"delta_deg", d.params.delta / kDeg},
                   {"extrema", d.extrema == ExtremaMethod::two_shot ? "two_shot" : "delta_scan"},
                   {"scan_steps", d.scan_steps},
                   {"four_shot", d.four_shot},
                   {"psi_signal_csv", optional_path(d.psi_signal_csv)},
                   {"psi_idler_csv", optional_path(d.psi_idler_csv)},
                   {"input_spectrum_csv", optional_path(d.input_spectrum_csv)}};
  j["noise"] = {{"flux_fluctuation", noise.flux_fluctuation},
                {"accidental_rate", noise.accidental_rate},
                {"shared_flux", noise.shared_flux}};
  return j;
}

}  // namespace oamspdc::cli
