#include "oamspdc/detector.hpp"

#include <algorithm>
#include <bit>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numbers>
#include <random>
#include <sstream>

#include "oamspdc/errors.hpp"

namespace oamspdc {

namespace {

constexpr double kPi = std::numbers::pi;

void require_normalized(const SpectrumMatrix& spec, const char* what) {
  spec.validate();
  if (std::abs(spec.total() - 1.0) > 1e-10)
    throw DomainError(std::string(what) + ": spectrum must be normalized to unit sum");
}

// Sum over modes of P(l_s, l_i) exp(i (2 l_s theta_s + 2 l_i theta_i)).
Complex mode_sum(const SpectrumMatrix& spec, double theta_s, double theta_i) {
  const int n = spec.n_max();
  Complex total{};
  for (int ls = -n; ls <= n; ++ls) {
    Complex row{};
    for (int li = -n; li <= n; ++li) row += spec(ls, li) * std::polar(1.0, 2.0 * li * theta_i);
    total += row * std::polar(1.0, 2.0 * ls * theta_s);
  }
  return total;
}

struct PointContext {
  double background;  // |k1|^2 + |k2|^2
  double coupling;    // 2 |k1||k2| cos psi_s cos psi_i
  Complex sum;
};

double rate(const PointContext& p, double delta) noexcept {
  return p.background + p.coupling * (std::polar(1.0, delta) * p.sum).real();
}

std::uint64_t bits(double x) noexcept { return std::bit_cast<std::uint64_t>(x); }

std::mt19937_64 keyed_engine(std::uint64_t seed, double theta_s, double theta_i, std::uint64_t tag,
                             const double* delta) {
  std::vector<std::uint32_t> key;
  auto push = [&](std::uint64_t v) {
    key.push_back(static_cast<std::uint32_t>(v));
    key.push_back(static_cast<std::uint32_t>(v >> 32));
  };
  push(seed);
  push(tag);
  push(bits(theta_s));
  push(bits(theta_i));
  if (delta != nullptr) push(bits(*delta));
  std::seed_seq seq(key.begin(), key.end());
  return std::mt19937_64(seq);
}

Measurement noisy(const PointContext& p, double theta_s, double theta_i, double delta, const NoiseModel& noise,
                  const InterferometerParams& params) {
  Measurement m;
  m.rate = rate(p, delta);
  if (noise.accidental_rate > 0.0) {
    auto eng = keyed_engine(noise.seed, theta_s, theta_i, 1, &delta);
    std::uniform_real_distribution<double> u(0.0, 2.0);
    m.rate += noise.accidental_rate * (params.k1 * params.k1 + params.k2 * params.k2) * u(eng);
  }
  if (noise.flux_fluctuation > 0.0) {
    auto eng = keyed_engine(noise.seed, theta_s, theta_i, 0, noise.shared_flux ? nullptr : &delta);
    std::normal_distribution<double> xi(0.0, 1.0);
    const double s = noise.flux_fluctuation;
    m.flux = std::exp(s * xi(eng) - 0.5 * s * s);
  }
  return m;
}

PointContext context(const SpectrumMatrix& spec, double theta_s, double theta_i, const InterferometerParams& p) {
  const double cs = std::cos(p.psi_s.psi(theta_s));
  const double ci = std::cos(p.psi_i.psi(theta_i));
  return {p.k1 * p.k1 + p.k2 * p.k2, 2.0 * p.k1 * p.k2 * cs * ci, mode_sum(spec, theta_s, theta_i)};
}

ScanExtrema scan(const PointContext& p, double theta_s, double theta_i, const InterferometerParams& params,
                 const NoiseModel& noise, int n_steps, double step) {
  if (n_steps < 1 || !(step > 0.0) || n_steps * step < 2.0 * kPi * (1.0 - 1e-12))
    throw DomainError("delta scan must cover a full 2 pi period");
  ScanExtrema out;
  for (int k = 0; k < n_steps; ++k) {
    const double delta = params.delta + step * k;
    const Measurement m = noisy(p, theta_s, theta_i, delta, noise, params);
    if (k == 0 || m.value() > out.max.value()) {
      out.max = m;
      out.delta_at_max = delta;
    }
    if (k == 0 || m.value() < out.min.value()) {
      out.min = m;
      out.delta_at_min = delta;
    }
  }
  return out;
}

std::vector<Complex> harmonics(const AngularGrid& grid, int n_max) {
  const int side = 2 * n_max + 1;
  std::vector<Complex> out(grid.size() * static_cast<std::size_t>(side));
  for (std::size_t i = 0; i < grid.size(); ++i)
    for (int l = -n_max; l <= n_max; ++l)
      out[i * side + static_cast<std::size_t>(l + n_max)] = std::polar(1.0, 2.0 * l * grid.theta_rad(i));
  return out;
}

// Mode sums for every grid point from the separable form
//   sum_{l_s} e^{2 i l_s theta_s} sum_{l_i} P(l_s, l_i) e^{2 i l_i theta_i}.
std::vector<Complex> grid_mode_sums(const SpectrumMatrix& spec, const AngularGrid& grid) {
  const int n = spec.n_max();
  const std::size_t side = static_cast<std::size_t>(2 * n + 1);
  const std::size_t g = grid.size();
  const auto e = harmonics(grid, n);
  std::vector<Complex> inner(side * g);  // inner[ls][ii]
  for (std::size_t a = 0; a < side; ++a)
    for (std::size_t ii = 0; ii < g; ++ii) {
      Complex acc{};
      for (std::size_t c = 0; c < side; ++c)
        acc += spec.values.data()[a * side + c] * e[ii * side + c];
      inner[a * g + ii] = acc;
    }
  std::vector<Complex> out(g * g);
  for (std::size_t is = 0; is < g; ++is)
    for (std::size_t ii = 0; ii < g; ++ii) {
      Complex acc{};
      for (std::size_t a = 0; a < side; ++a) acc += e[is * side + a] * inner[a * g + ii];
      out[is * g + ii] = acc;
    }
  return out;
}

void require_psi_coverage(const InterferometerParams& p) {
  if (!p.psi_s.covers(-90.0, 90.0)) throw ConfigError("detector.psi_s", "table must cover [-90, 90] degrees");
  if (!p.psi_i.covers(-90.0, 90.0)) throw ConfigError("detector.psi_i", "table must cover [-90, 90] degrees");
}

ForwardSurfaces forward_with(const SpectrumMatrix& spec, const AngularGrid& grid, const InterferometerParams& params,
                             const NoiseModel& noise, const ForwardOptions& opts) {
  require_normalized(spec, "forward model");
  params.validate();
  noise.validate();
  require_psi_coverage(params);
  const auto sums = grid_mode_sums(spec, grid);
  const std::size_t g = grid.size();
  std::vector<double> cos_s(g), cos_i(g);
  for (std::size_t i = 0; i < g; ++i) {
    cos_s[i] = std::cos(params.psi_s.psi(grid.theta_rad(i)));
    cos_i[i] = std::cos(params.psi_i.psi(grid.theta_rad(i)));
  }
  ForwardSurfaces out{VisibilitySurface(grid), VisibilitySurface(grid), VisibilitySurface(grid)};
  const double background = params.k1 * params.k1 + params.k2 * params.k2;
  const double coupling = 2.0 * params.k1 * params.k2;
  parallel_for(
      g * g,
      [&](std::size_t idx) {
        const std::size_t is = idx / g;
        const std::size_t ii = idx % g;
        const double ts = grid.theta_rad(is);
        const double ti = grid.theta_rad(ii);
        const PointContext p{background, coupling * cos_s[is] * cos_i[ii], sums[idx]};
        Measurement c, d;
        if (opts.method == ExtremaMethod::two_shot) {
          c = noisy(p, ts, ti, opts.delta_c, noise, params);
          d = noisy(p, ts, ti, opts.delta_d, noise, params);
        } else {
          const auto ex = scan(p, ts, ti, params, noise, opts.scan_steps, opts.scan_step_rad);
          c = ex.max;
          d = ex.min;
        }
        out.rate_c.values[idx] = c.value();
        out.rate_d.values[idx] = d.value();
        out.visibility.values[idx] = visibility(c, d);
      },
      opts.parallel);
  return out;
}

Reconstruction finish(std::vector<double> raw, int n_max, std::size_t excluded) {
  double total = 0.0;
  for (double v : raw) total += v;
  if (!(total > 0.0) || !std::isfinite(total))
    throw NumericalError("reconstructed spectrum has non-positive total weight");
  Reconstruction r;
  r.excluded_points = excluded;
  r.unclamped.resize(raw.size());
  SpectrumMatrix clamped(n_max);
  double negative = 0.0;
  for (std::size_t i = 0; i < raw.size(); ++i) {
    r.unclamped[i] = raw[i] / total;
    if (raw[i] < 0.0) negative += -raw[i];
    clamped.values.data()[i] = std::max(0.0, raw[i]);
  }
  r.clamped_magnitude = negative / total;
  if (negative > 0.0) {
    std::ostringstream os;
    os << "clamped negative reconstructed entries with total weight " << r.clamped_magnitude;
    r.warnings.push_back(os.str());
  }
  if (excluded > 0)
    r.warnings.push_back(std::to_string(excluded) + " grid points excluded after polarization correction");
  r.spectrum = clamped.normalized_copy();
  return r;
}

// sum_{is, ii} w V [cos or sin](2 l_s theta_s + 2 l_i theta_i), separable form.
std::vector<Complex> grid_transform(const VisibilitySurface& v, int n_max, std::size_t& excluded) {
  const auto& grid = v.grid;
  const std::size_t g = grid.size();
  const std::size_t side = static_cast<std::size_t>(2 * n_max + 1);
  const auto e = harmonics(grid, n_max);
  excluded = 0;
  std::vector<Complex> inner(g * side);  // inner[is][li]
  for (std::size_t is = 0; is < g; ++is)
    for (std::size_t ii = 0; ii < g; ++ii) {
      const std::size_t idx = is * g + ii;
      if (!v.valid[idx]) {
        ++excluded;
        continue;
      }
      const double w = grid.weight(ii) * v.values[idx];
      for (std::size_t c = 0; c < side; ++c) inner[is * side + c] += w * e[ii * side + c];
    }
  std::vector<Complex> out(side * side);
  for (std::size_t a = 0; a < side; ++a)
    for (std::size_t c = 0; c < side; ++c) {
      Complex acc{};
      for (std::size_t is = 0; is < g; ++is) acc += grid.weight(is) * e[is * side + a] * inner[is * side + c];
      out[a * side + c] = acc;
    }
  return out;
}

}  // namespace

ModeTransform mode_transform_phase(int l, double theta_rad, ModeElement element) {
  const double angle = element == ModeElement::mirror ? -l * kPi : -l * (kPi + 2.0 * theta_rad);
  return {-l, std::polar(1.0, angle)};
}

PolarizationResponse::PolarizationResponse(std::vector<double> theta_deg, std::vector<double> psi_rad)
    : theta_deg_(std::move(theta_deg)), psi_rad_(std::move(psi_rad)) {
  if (theta_deg_.size() != psi_rad_.size() || theta_deg_.size() < 2)
    throw ConfigError("psi_table", "needs at least two (theta_deg, psi_rad) rows");
  for (std::size_t i = 0; i < theta_deg_.size(); ++i) {
    if (!std::isfinite(theta_deg_[i]) || !std::isfinite(psi_rad_[i]))
      throw ConfigError("psi_table", "values must be finite");
    if (i > 0 && !(theta_deg_[i] > theta_deg_[i - 1]))
      throw ConfigError("psi_table", "theta_deg must be strictly increasing");
  }
}

PolarizationResponse PolarizationResponse::parse_csv(std::string_view text) {
  std::vector<double> theta, psi;
  std::istringstream in{std::string(text)};
  std::string line;
  bool header = false;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (!header) {
      if (line != "theta_deg,psi_rad") throw ConfigError("psi_table", "header must be 'theta_deg,psi_rad'");
      header = true;
      continue;
    }
    const auto comma = line.find(',');
    if (comma == std::string::npos) throw ConfigError("psi_table", "line " + std::to_string(line_no) + ": expected two columns");
    double a = 0.0, b = 0.0;
    const auto ra = std::from_chars(line.data(), line.data() + comma, a);
    const auto rb = std::from_chars(line.data() + comma + 1, line.data() + line.size(), b);
    if (ra.ec != std::errc{} || ra.ptr != line.data() + comma || rb.ec != std::errc{} ||
        rb.ptr != line.data() + line.size())
      throw ConfigError("psi_table", "line " + std::to_string(line_no) + ": malformed number");
    theta.push_back(a);
    psi.push_back(b);
  }
  return PolarizationResponse(std::move(theta), std::move(psi));
}

PolarizationResponse PolarizationResponse::load_csv(const std::filesystem::path& path) {
  std::ifstream f(path);
  if (!f) throw ConfigError("psi_table", "cannot open " + path.string());
  std::ostringstream ss;
  ss << f.rdbuf();
  return parse_csv(ss.str());
}

bool PolarizationResponse::covers(double lo_deg, double hi_deg) const noexcept {
  if (ideal()) return true;
  return theta_deg_.front() <= lo_deg + 1e-9 && theta_deg_.back() >= hi_deg - 1e-9;
}

double PolarizationResponse::psi(double theta_rad) const {
  if (ideal()) return 0.0;
  const double t = theta_rad * 180.0 / kPi;
  if (t < theta_deg_.front() - 1e-9 || t > theta_deg_.back() + 1e-9)
    throw DomainError("polarization response queried outside its table");
  const auto it = std::upper_bound(theta_deg_.begin(), theta_deg_.end(), t);
  std::size_t hi = static_cast<std::size_t>(it - theta_deg_.begin());
  hi = std::clamp<std::size_t>(hi, 1, theta_deg_.size() - 1);
  const std::size_t lo = hi - 1;
  const double u = (t - theta_deg_[lo]) / (theta_deg_[hi] - theta_deg_[lo]);
  return psi_rad_[lo] + u * (psi_rad_[hi] - psi_rad_[lo]);
}

void InterferometerParams::validate() const {
  if (!(k1 > 0.0) || !std::isfinite(k1)) throw ConfigError("detector.k1", "amplitude must be > 0");
  if (!(k2 > 0.0) || !std::isfinite(k2)) throw ConfigError("detector.k2", "amplitude must be > 0");
  if (!std::isfinite(delta)) throw ConfigError("detector.delta", "phase must be finite");
}

void NoiseModel::validate() const {
  if (!(flux_fluctuation >= 0.0) || !std::isfinite(flux_fluctuation))
    throw ConfigError("noise.flux_fluctuation", "must be >= 0");
  if (!(accidental_rate >= 0.0) || !std::isfinite(accidental_rate))
    throw ConfigError("noise.accidental_rate", "must be >= 0");
}

double coincidence_probability(const SpectrumMatrix& spec, double theta_s, double theta_i,
                               const InterferometerParams& params) {
  require_normalized(spec, "coincidence_probability");
  params.validate();
  return rate(context(spec, theta_s, theta_i, params), params.delta);
}

Measurement measured_coincidence(const SpectrumMatrix& spec, double theta_s, double theta_i,
                                 const InterferometerParams& params, const NoiseModel& noise) {
  require_normalized(spec, "measured_coincidence");
  params.validate();
  noise.validate();
  return noisy(context(spec, theta_s, theta_i, params), theta_s, theta_i, params.delta, noise, params);
}

ScanExtrema delta_scan_extrema(const SpectrumMatrix& spec, double theta_s, double theta_i,
                               const InterferometerParams& params, const NoiseModel& noise, int n_steps,
                               double step_rad) {
  require_normalized(spec, "delta_scan_extrema");
  params.validate();
  noise.validate();
  return scan(context(spec, theta_s, theta_i, params), theta_s, theta_i, params, noise, n_steps, step_rad);
}

double visibility(double r_c, double r_d) {
  const double denom = r_c + r_d;
  if (denom == 0.0 || !std::isfinite(denom)) throw NumericalError("visibility undefined: total extinction");
  return (r_c - r_d) / denom;
}

double visibility(const Measurement& c, const Measurement& d) {
  if (c.flux == d.flux) return visibility(c.rate, d.rate);
  return visibility(c.value(), d.value());
}

AngularGrid AngularGrid::from_step(double step_deg) {
  if (!(step_deg > 0.0) || step_deg > 180.0) throw ConfigError("detector.step", "step must lie in (0, 180] degrees");
  const double k = 180.0 / step_deg;
  const double rounded = std::round(k);
  if (std::abs(k - rounded) > 1e-9 * rounded)
    throw ConfigError("detector.step", "step must divide 180 degrees evenly");
  return {step_deg, static_cast<int>(rounded)};
}

double AngularGrid::theta_rad(std::size_t i) const noexcept { return theta_deg(i) * kPi / 180.0; }

std::size_t VisibilitySurface::invalid_count() const noexcept {
  return static_cast<std::size_t>(std::count(valid.begin(), valid.end(), std::uint8_t{0}));
}

ForwardSurfaces forward_visibility(const SpectrumMatrix& spec, const AngularGrid& grid,
                                   const InterferometerParams& params, const NoiseModel& noise,
                                   const ForwardOptions& opts) {
  return forward_with(spec, grid, params, noise, opts);
}

FourShotSurfaces forward_four_shot(const SpectrumMatrix& spec, const AngularGrid& grid,
                                   const InterferometerParams& params, const NoiseModel& noise,
                                   const ParallelOptions& parallel) {
  ForwardOptions cos_opts;
  cos_opts.parallel = parallel;
  ForwardOptions sin_opts = cos_opts;
  sin_opts.delta_c = 1.5 * kPi;
  sin_opts.delta_d = 0.5 * kPi;
  return {forward_with(spec, grid, params, noise, cos_opts), forward_with(spec, grid, params, noise, sin_opts)};
}

VisibilitySurface polarization_correct(const VisibilitySurface& measured, const PolarizationResponse& psi_s,
                                       const PolarizationResponse& psi_i, double min_factor) {
  VisibilitySurface out = measured;
  const auto& grid = measured.grid;
  const std::size_t g = grid.size();
  for (std::size_t is = 0; is < g; ++is) {
    const double cs = std::cos(psi_s.psi(grid.theta_rad(is)));
    for (std::size_t ii = 0; ii < g; ++ii) {
      const double factor = cs * std::cos(psi_i.psi(grid.theta_rad(ii)));
      const std::size_t idx = is * g + ii;
      if (std::abs(factor) < min_factor) {
        out.valid[idx] = 0;
        out.values[idx] = 0.0;
      } else {
        out.values[idx] = measured.values[idx] / factor;
      }
    }
  }
  return out;
}

double required_angular_step(int n_max) {
  if (n_max < 0) throw DomainError("mode cutoff must be non-negative");
  return 180.0 / (2.0 * n_max + 1.0);
}

int max_modes_for_step(double step_deg) {
  if (!(step_deg > 0.0)) throw DomainError("step must be positive");
  const double k = 180.0 / step_deg;
  return std::max(-1, static_cast<int>(std::floor((k - 1.0) / 2.0 + 1e-9)));
}

void check_nyquist(const AngularGrid& grid, int n_max) {
  if (n_max < 0) throw DomainError("mode cutoff must be non-negative");
  if (grid.intervals < 2 * n_max + 1) {
    std::ostringstream os;
    os << "angular step " << grid.step_deg << " deg cannot resolve |l| <= " << n_max << "; need step <= "
       << required_angular_step(n_max) << " deg (this step supports N <= " << max_modes_for_step(grid.step_deg)
       << ")";
    throw NyquistError(os.str(), required_angular_step(n_max), max_modes_for_step(grid.step_deg));
  }
}

Reconstruction reconstruct_symmetric(const VisibilitySurface& v, int n_max) {
  check_nyquist(v.grid, n_max);
  std::size_t excluded = 0;
  const auto t = grid_transform(v, n_max, excluded);
  std::vector<double> raw(t.size());
  for (std::size_t i = 0; i < t.size(); ++i) raw[i] = t[i].real();
  return finish(std::move(raw), n_max, excluded);
}

Reconstruction reconstruct_asymmetric(const VisibilitySurface& v_cos, const VisibilitySurface& v_sin, int n_max) {
  if (!(v_cos.grid == v_sin.grid) || v_cos.values.size() != v_sin.values.size())
    throw ConfigError("detector.grid", "cosine and sine surfaces must share one grid");
  check_nyquist(v_cos.grid, n_max);
  VisibilitySurface sin_masked = v_sin;
  VisibilitySurface cos_masked = v_cos;
  for (std::size_t i = 0; i < v_cos.valid.size(); ++i) {
    const std::uint8_t ok = v_cos.valid[i] && v_sin.valid[i];
    sin_masked.valid[i] = ok;
    cos_masked.valid[i] = ok;
  }
  std::size_t excluded = 0, unused = 0;
  const auto tc = grid_transform(cos_masked, n_max, excluded);
  const auto ts = grid_transform(sin_masked, n_max, unused);
  std::vector<double> raw(tc.size());
  for (std::size_t i = 0; i < tc.size(); ++i) raw[i] = tc[i].real() + ts[i].imag();
  return finish(std::move(raw), n_max, excluded);
}

double r_squared(const SpectrumMatrix& observed, const SpectrumMatrix& input) {
  if (observed.n_max() != input.n_max()) throw DomainError("r_squared: spectra must share N");
  for (const auto* s : {&observed, &input})
    if (std::abs(s->total() - 1.0) > 1e-8) throw DomainError("r_squared: spectra must be normalized");
  const auto& a = observed.values.data();
  const auto& b = input.values.data();
  double mean = 0.0;
  for (double v : b) mean += v;
  mean /= static_cast<double>(b.size());
  double ss_res = 0.0, ss_tot = 0.0, ss = 0.0;
  for (std::size_t i = 0; i < b.size(); ++i) {
    ss_res += (a[i] - b[i]) * (a[i] - b[i]);
    ss_tot += (b[i] - mean) * (b[i] - mean);
    ss += b[i] * b[i];
  }
  if (!(ss_tot > 1e-24 * ss)) throw NumericalError("r_squared undefined: input spectrum has zero variance");
  return 100.0 * (1.0 - ss_res / ss_tot);
}

}  // namespace oamspdc
