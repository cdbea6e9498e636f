#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "oamspdc/detector.hpp"
#include "oamspdc/spectrum.hpp"

namespace oamspdc::cli {

inline constexpr int kSchemaVersion = 1;

/// Shortest decimal form that reads back to the same double.
std::string format_double(double x);

/// `l_s,l_i,P`, rows ordered by l_s then l_i.
std::string spectrum_csv(const SpectrumMatrix& spec);
/// Square support [-N, N]^2 is required; the result is normalized. Throws
/// ConfigError on malformed input.
SpectrumMatrix parse_spectrum_csv(std::string_view text, const std::string& field);

/// `theta_s_deg,theta_i_deg,<column>`; invalid points leave the value empty.
std::string surface_csv(const VisibilitySurface& s, const std::string& column);
/// Accepts the layout written by surface_csv with a `V` column.
VisibilitySurface parse_surface_csv(std::string_view text, const std::string& field);

nlohmann::json surface_json(const VisibilitySurface& s, const std::string& quantity);
nlohmann::json quadrature_json(const QuadratureReport& r);
nlohmann::json spectrum_json(const SpectrumMatrix& spec, const std::string& kind);

std::string read_text(const std::filesystem::path& path, const std::string& field);

/// Writes files into one directory and remembers their SHA-256 digests.
class OutputSet {
 public:
  explicit OutputSet(std::filesystem::path dir);

  void write(const std::string& name, const std::string& content);
  void write_json(const std::string& name, const nlohmann::json& j);

  /// {file, bytes, sha256} for every file written so far.
  nlohmann::json digests() const;
  const std::filesystem::path& dir() const noexcept { return dir_; }

 private:
  struct Entry {
    std::string name;
    std::size_t bytes;
    std::string sha256;
  };
  std::filesystem::path dir_;
  std::vector<Entry> entries_;
};

std::string sha256_hex(std::string_view data);

}  // namespace oamspdc::cli
