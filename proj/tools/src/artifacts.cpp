#include "artifacts.hpp"

#include <openssl/evp.h>

#include <array>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <memory>
#include <sstream>
#include <stdexcept>

#include "oamspdc/errors.hpp"

namespace oamspdc::cli {

namespace {

using nlohmann::json;

std::vector<std::string> split(std::string_view line, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = line.find(sep, start);
    out.emplace_back(line.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

std::vector<std::string> lines_of(std::string_view text) {
  std::vector<std::string> out;
  std::istringstream in{std::string(text)};
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (!line.empty()) out.push_back(line);
  }
  return out;
}

template <class T>
T parse_number(const std::string& s, const std::string& field, std::size_t line_no) {
  T v{};
  const auto* end = s.data() + s.size();
  const auto [ptr, ec] = std::from_chars(s.data(), end, v);
  if (ec != std::errc() || ptr != end) {
    throw ConfigError(field, "line " + std::to_string(line_no) + ": malformed number '" + s + "'");
  }
  return v;
}

}  // namespace

std::string format_double(double x) {
  std::array<char, 32> buf{};
  const auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), x);
  if (ec != std::errc()) throw std::runtime_error("format_double: buffer too small");
  return {buf.data(), ptr};
}

std::string spectrum_csv(const SpectrumMatrix& spec) {
  std::string out = "l_s,l_i,P\n";
  const int n = spec.n_max();
  for (int a = -n; a <= n; ++a)
    for (int b = -n; b <= n; ++b)
      out += std::to_string(a) + "," + std::to_string(b) + "," + format_double(spec(a, b)) + "\n";
  return out;
}

SpectrumMatrix parse_spectrum_csv(std::string_view text, const std::string& field) {
  const auto lines = lines_of(text);
  if (lines.empty() || lines.front() != "l_s,l_i,P") throw ConfigError(field, "header must be 'l_s,l_i,P'");
  std::map<std::pair<int, int>, double> entries;
  int n_max = 0;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    const auto cols = split(lines[i], ',');
    if (cols.size() != 3) throw ConfigError(field, "line " + std::to_string(i + 1) + ": expected three columns");
    const int a = parse_number<int>(cols[0], field, i + 1);
    const int b = parse_number<int>(cols[1], field, i + 1);
    const double p = parse_number<double>(cols[2], field, i + 1);
    if (!(p >= 0.0) || !std::isfinite(p)) {
      throw ConfigError(field, "line " + std::to_string(i + 1) + ": probabilities must be finite and >= 0");
    }
    if (!entries.emplace(std::pair{a, b}, p).second) {
      throw ConfigError(field, "line " + std::to_string(i + 1) + ": duplicate entry");
    }
    n_max = std::max({n_max, std::abs(a), std::abs(b)});
  }
  const auto side = static_cast<std::size_t>(2 * n_max + 1);
  if (entries.size() != side * side) {
    throw ConfigError(field, "expected every (l_s, l_i) in [-" + std::to_string(n_max) + ", " +
                                 std::to_string(n_max) + "]^2");
  }
  SpectrumMatrix s(n_max);
  for (const auto& [key, p] : entries) s(key.first, key.second) = p;
  if (!(s.total() > 0.0)) throw ConfigError(field, "spectrum has no mass");
  return s.normalized_copy();
}

std::string surface_csv(const VisibilitySurface& s, const std::string& column) {
  std::string out = "theta_s_deg,theta_i_deg," + column + "\n";
  const auto n = s.grid.size();
  for (std::size_t is = 0; is < n; ++is)
    for (std::size_t ii = 0; ii < n; ++ii) {
      out += format_double(s.grid.theta_deg(is)) + "," + format_double(s.grid.theta_deg(ii)) + ",";
      if (s.valid[is * n + ii]) out += format_double(s.at(is, ii));
      out += "\n";
    }
  return out;
}

VisibilitySurface parse_surface_csv(std::string_view text, const std::string& field) {
  const auto lines = lines_of(text);
  if (lines.empty() || lines.front() != "theta_s_deg,theta_i_deg,V") {
    throw ConfigError(field, "header must be 'theta_s_deg,theta_i_deg,V'");
  }
  const std::size_t count = lines.size() - 1;
  const auto n = static_cast<std::size_t>(std::llround(std::sqrt(static_cast<double>(count))));
  if (n < 2 || n * n != count) throw ConfigError(field, "expected a complete square grid of samples");
  const auto grid = AngularGrid::from_step(180.0 / static_cast<double>(n - 1));
  VisibilitySurface s(grid);
  for (std::size_t k = 0; k < count; ++k) {
    const auto cols = split(lines[k + 1], ',');
    const std::size_t line_no = k + 2;
    if (cols.size() != 3) throw ConfigError(field, "line " + std::to_string(line_no) + ": expected three columns");
    const std::size_t is = k / n, ii = k % n;
    const double ts = parse_number<double>(cols[0], field, line_no);
    const double ti = parse_number<double>(cols[1], field, line_no);
    if (std::abs(ts - grid.theta_deg(is)) > 1e-9 || std::abs(ti - grid.theta_deg(ii)) > 1e-9) {
      throw ConfigError(field, "line " + std::to_string(line_no) + ": angles must follow the uniform grid from -90 "
                                                                     "to 90 degrees with theta_i varying fastest");
    }
    if (cols[2].empty()) {
      s.valid[k] = 0;
    } else {
      s.values[k] = parse_number<double>(cols[2], field, line_no);
    }
  }
  return s;
}

json surface_json(const VisibilitySurface& s, const std::string& quantity) {
  json values = json::array();
  const auto n = s.grid.size();
  for (std::size_t is = 0; is < n; ++is) {
    json row = json::array();
    for (std::size_t ii = 0; ii < n; ++ii) row.push_back(s.valid[is * n + ii] ? json(s.at(is, ii)) : json(nullptr));
    values.push_back(std::move(row));
  }
  return {{"schema_version", kSchemaVersion},
          {"quantity", quantity},
          {"grid", {{"theta_min_deg", -90.0}, {"theta_max_deg", 90.0}, {"step_deg", s.grid.step_deg},
                    {"points_per_axis", n}, {"row_axis", "theta_s"}}},
          {"invalid_points", s.invalid_count()},
          {"values", std::move(values)}};
}

json quadrature_json(const QuadratureReport& r) {
  return {{"azimuthal_samples", r.azimuthal_samples},
          {"relative_samples", r.relative_samples},
          {"radial_nodes", r.radial_nodes},
          {"rho_hi", r.rho_hi},
          {"scheme", r.scheme == RadialScheme::gauss ? "gauss" : "trapezoid"},
          {"clipped", r.clipped},
          {"clip_ratio", r.clip_ratio ? json(*r.clip_ratio) : json(nullptr)},
          {"sigma_s", r.sigma_s ? json(*r.sigma_s) : json(nullptr)},
          {"pairs_total", r.pairs_total},
          {"pairs_evaluated", r.pairs_evaluated},
          {"pairs_skipped", r.pairs_skipped},
          {"samples_evaluated", r.samples_evaluated},
          {"total_mass", r.total_mass},
          {"full_mass", r.full_mass},
          {"mode_capture", r.mode_capture()},
          {"boundary_ratio", r.boundary_ratio},
          {"warnings", r.warnings}};
}

json spectrum_json(const SpectrumMatrix& spec, const std::string& kind) {
  const int n = spec.n_max();
  json rows = json::array();
  for (int a = -n; a <= n; ++a) {
    json row = json::array();
    for (int b = -n; b <= n; ++b) row.push_back(spec(a, b));
    rows.push_back(std::move(row));
  }
  const auto schmidt = schmidt_antidiagonal(spec);
  return {{"schema_version", kSchemaVersion},
          {"kind", kind},
          {"n_max", n},
          {"row_axis", "l_s"},
          {"nonconservation_percent", nonconservation(spec)},
          {"schmidt", schmidt},
          {"schmidt_width", schmidt_width(schmidt)},
          {"P", std::move(rows)}};
}

std::string read_text(const std::filesystem::path& path, const std::string& field) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError(field, "cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string sha256_hex(std::string_view data) {
  std::array<unsigned char, EVP_MAX_MD_SIZE> md{};
  unsigned int len = 0;
  if (EVP_Digest(data.data(), data.size(), md.data(), &len, EVP_sha256(), nullptr) != 1) {
    throw std::runtime_error("SHA-256 digest failed");
  }
  static constexpr char kHex[] = "0123456789abcdef";
  std::string out;
  out.reserve(2 * len);
  for (unsigned int i = 0; i < len; ++i) {
    out += kHex[md[i] >> 4];
    out += kHex[md[i] & 0xF];
  }
  return out;
}

OutputSet::OutputSet(std::filesystem::path dir) : dir_(std::move(dir)) {
  std::error_code ec;
  std::filesystem::create_directories(dir_, ec);
  if (ec) throw ConfigError("output_dir", "cannot create " + dir_.string() + ": " + ec.message());
}

void OutputSet::write(const std::string& name, const std::string& content) {
  const auto path = dir_ / name;
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out << content;
  out.close();
  if (!out) throw std::runtime_error("cannot write " + path.string());
  entries_.push_back({name, content.size(), sha256_hex(content)});
}

void OutputSet::write_json(const std::string& name, const json& j) { write(name, j.dump(2) + "\n"); }

json OutputSet::digests() const {
  json out = json::array();
  for (const auto& e : entries_) out.push_back({{"file", e.name}, {"bytes", e.bytes}, {"sha256", e.sha256}});
  return out;
}

}  // namespace oamspdc::cli
