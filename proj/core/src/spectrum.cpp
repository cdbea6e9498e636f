#include "oamspdc/spectrum.hpp"

#include <algorithm>
#include <bit>
#include <boost/math/tools/minima.hpp>
#include <boost/math/tools/roots.hpp>
#include <cmath>
#include <cstdint>
#include <memory>
#include <numbers>
#include <sstream>
#include <string>
#include <type_traits>
#include <utility>

#include "oamspdc/errors.hpp"

namespace oamspdc {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kFourPiSq = 4.0 * kPi * kPi;
constexpr int kDefaultAzimuthalSamples = 256;
constexpr int kMinRadialNodes = 64;
constexpr double kNodesPerPumpWidth = 1.8;
constexpr double kSincTailPhase = 16.0 * kPi;
constexpr double kBoundaryTolerance = 1e-6;
constexpr double kModeCaptureWarning = 0.99;
constexpr int kMarginalNodes = 64;
constexpr int kMarginalScan = 96;

int next_pow2(double x) {
  if (!(x > 1.0)) return 1;
  if (x > static_cast<double>(1 << 24)) throw NumericalError("requested quadrature grid is too large");
  return static_cast<int>(std::bit_ceil(static_cast<std::uint32_t>(std::ceil(x))));
}

std::string format_double(double v) {
  std::ostringstream os;
  os.precision(6);
  os << v;
  return os.str();
}

// Evaluates V * Phi on the sheared lattice of one radial pair:
//   phi_s = -pi + 2 pi m / M_s,  phi_i = phi_s + pi + delta_j,  delta_j = 2 pi j / M_r.
// The pump exponent depends on j only, so whole rows are kept or dropped.
class PairSampler {
 public:
  PairSampler(const CrystalOpticalConstants& k, double length_um, double waist_um, double cutoff, int ms, int mr)
      : k_(k), length_(length_um), quarter_w2_(0.25 * waist_um * waist_um), cutoff_(cutoff), ms_(ms), mr_(mr) {
    cos_s_.resize(static_cast<std::size_t>(ms));
    sin_s_.resize(static_cast<std::size_t>(ms));
    for (int m = 0; m < ms; ++m) {
      const double a = AzimuthalGrid::angle(m, ms);
      cos_s_[static_cast<std::size_t>(m)] = std::cos(a);
      sin_s_[static_cast<std::size_t>(m)] = std::sin(a);
    }
    cos_r_.resize(static_cast<std::size_t>(mr));
    sin_r_.resize(static_cast<std::size_t>(mr));
    for (int j = -mr / 2; j < mr / 2; ++j) {
      const double a = 2.0 * kPi * static_cast<double>(j) / static_cast<double>(mr);
      cos_r_[static_cast<std::size_t>(j + mr / 2)] = std::cos(a);
      sin_r_[static_cast<std::size_t>(j + mr / 2)] = std::sin(a);
    }
  }

  int ms() const noexcept { return ms_; }
  int mr() const noexcept { return mr_; }

  bool active(double rho_s, double rho_i) const noexcept {
    const double d = rho_s - rho_i;
    return quarter_w2_ * d * d <= cutoff_;
  }

  double exponent(double rho_s, double rho_i, int j) const noexcept {
    const double c = cos_r_[static_cast<std::size_t>(j + mr_ / 2)];
    return quarter_w2_ * (rho_s * rho_s + rho_i * rho_i - 2.0 * rho_s * rho_i * c);
  }

  void rows(double rho_s, double rho_i, std::vector<int>& offsets) const {
    offsets.clear();
    if (!active(rho_s, rho_i)) return;
    for (int j = -mr_ / 2; j < mr_ / 2; ++j)
      if (exponent(rho_s, rho_i, j) <= cutoff_) offsets.push_back(j);
  }

  // Writes the samples of every listed row and returns the sum of |f|^2.
  double fill(double rho_s, double rho_i, std::span<const int> offsets, Complex* out) const {
    double mass = 0.0;
    for (std::size_t r = 0; r < offsets.size(); ++r) {
      const int j = offsets[r];
      const double v = std::exp(-exponent(rho_s, rho_i, j));
      const double cd = cos_r_[static_cast<std::size_t>(j + mr_ / 2)];
      const double sd = sin_r_[static_cast<std::size_t>(j + mr_ / 2)];
      Complex* row = out + r * static_cast<std::size_t>(ms_);
      for (int m = 0; m < ms_; ++m) {
        const double cs = cos_s_[static_cast<std::size_t>(m)];
        const double ss = sin_s_[static_cast<std::size_t>(m)];
        const double qix = -rho_i * (cs * cd - ss * sd);
        const double qiy = -rho_i * (ss * cd + cs * sd);
        const double dk = delta_kz_cartesian(rho_s * cs, rho_s * ss, qix, qiy, k_);
        const Complex f = v * phase_matching_from_mismatch(dk, length_);
        row[m] = f;
        mass += std::norm(f);
      }
    }
    return mass;
  }

  // Integral of |V Phi|^2 over both azimuthal angles.
  double angular_mass(double rho_s, double rho_i) const {
    if (!active(rho_s, rho_i)) return 0.0;
    double mass = 0.0;
    for (int j = -mr_ / 2; j < mr_ / 2; ++j) {
      const double e = exponent(rho_s, rho_i, j);
      if (e > cutoff_) continue;
      const double v2 = std::exp(-2.0 * e);
      const double cd = cos_r_[static_cast<std::size_t>(j + mr_ / 2)];
      const double sd = sin_r_[static_cast<std::size_t>(j + mr_ / 2)];
      double row = 0.0;
      for (int m = 0; m < ms_; ++m) {
        const double cs = cos_s_[static_cast<std::size_t>(m)];
        const double ss = sin_s_[static_cast<std::size_t>(m)];
        const double qix = -rho_i * (cs * cd - ss * sd);
        const double qiy = -rho_i * (ss * cd + cs * sd);
        const double dk = delta_kz_cartesian(rho_s * cs, rho_s * ss, qix, qiy, k_);
        const double s = length_ * sinc(0.5 * dk * length_);
        row += s * s;
      }
      mass += v2 * row;
    }
    return mass * kFourPiSq / (static_cast<double>(ms_) * static_cast<double>(mr_));
  }

 private:
  CrystalOpticalConstants k_;
  double length_;
  double quarter_w2_;
  double cutoff_;
  int ms_;
  int mr_;
  std::vector<double> cos_s_, sin_s_, cos_r_, sin_r_;
};

// Shared machinery for every quantity assembled from per-pair azimuthal
// coefficients F(l_s, l_i) on a tensor radial rule.
struct PairEngine {
  const PairSampler& sampler;
  const ShearedAzimuthalTransform& transform;
  const RadialRule& rule;
  std::vector<std::size_t> active;
  std::size_t skipped = 0;

  PairEngine(const PairSampler& s, const ShearedAzimuthalTransform& t, const RadialRule& r)
      : sampler(s), transform(t), rule(r) {
    active.reserve(rule.size());
    for (std::size_t i = 0; i < rule.size(); ++i) {
      const auto p = rule.pair(i);
      if (sampler.active(p.rho_s, p.rho_i))
        active.push_back(i);
      else
        ++skipped;
    }
  }

  // visit(acc, pair_index, node, F, angular_mass, samples)
  template <class Acc, class Visit, class Combine>
  Acc reduce(const Acc& identity, Visit&& visit, Combine&& combine, ParallelOptions opts) const {
    opts.block_size = std::max<std::size_t>(opts.block_size, (active.size() + 255) / 256);
    const int side = 2 * transform.n_max() + 1;
    auto make_worker = [&] {
      struct Worker {
        const PairEngine* engine;
        std::remove_reference_t<Visit>* visit;
        ShearedAzimuthalTransform::Workspace ws;
        std::vector<int> offsets;
        std::vector<Complex> coeffs;
        void operator()(Acc& acc, std::size_t item) {
          const std::size_t index = engine->active[item];
          const auto node = engine->rule.pair(index);
          engine->sampler.rows(node.rho_s, node.rho_i, offsets);
          auto rows = ws.reserve_rows(engine->transform, offsets.size());
          const double raw = engine->sampler.fill(node.rho_s, node.rho_i, offsets, rows.data());
          engine->transform.apply(ws, offsets, coeffs);
          const double mass =
              raw * kFourPiSq /
              (static_cast<double>(engine->sampler.ms()) * static_cast<double>(engine->sampler.mr()));
          (*visit)(acc, index, node, std::span<const Complex>(coeffs), mass,
                   offsets.size() * static_cast<std::size_t>(engine->sampler.ms()));
        }
      };
      return Worker{this, &visit, {}, {}, std::vector<Complex>(static_cast<std::size_t>(side) * side)};
    };
    return parallel_reduce(active.size(), identity, make_worker, combine, opts);
  }
};

struct JointAccumulator {
  std::vector<double> p;
  double full_mass = 0.0;
  double peak_density = 0.0;
  double boundary_density = 0.0;
  std::size_t samples = 0;
};

double rho_upper_unclipped(const SpdcConfig& cfg, const CrystalOpticalConstants& k) {
  return cfg.quadrature.rho_hi > 0.0 ? cfg.quadrature.rho_hi
                                     : default_rho_hi(k, cfg.crystal.length_um, cfg.waist_um);
}

struct Setup {
  ResolvedQuadrature rq;
  std::optional<double> sigma;
  bool clipped = false;
};

Setup prepare(const SpdcConfig& cfg, const CrystalOpticalConstants& k, int n_max) {
  cfg.validate();
  if (n_max < 0) throw ConfigError("n_max", "mode cutoff must be non-negative");
  Setup s;
  double rho_override = 0.0;
  if (cfg.clip_ratio) {
    s.sigma = marginal_width(cfg, k).sigma;
    rho_override = *cfg.clip_ratio * *s.sigma;
    s.clipped = true;
  }
  s.rq = resolve_quadrature(cfg, k, n_max, rho_override);
  return s;
}

QuadratureReport base_report(const SpdcConfig& cfg, const Setup& s) {
  QuadratureReport r;
  r.azimuthal_samples = s.rq.azimuthal_samples;
  r.relative_samples = s.rq.relative_samples;
  r.radial_nodes = s.rq.radial_nodes;
  r.rho_hi = s.rq.rho_hi;
  r.scheme = s.rq.scheme;
  r.clipped = s.clipped;
  r.clip_ratio = cfg.clip_ratio;
  r.sigma_s = s.sigma;
  return r;
}

double lg_profile(int l, int p, double w, double rho) { return lg_radial_momentum(LgModeSpec{l, p, w}, rho); }

}  // namespace

double SpectrumMatrix::total() const noexcept {
  double t = 0.0;
  for (double v : values.data()) t += v;
  return t;
}

SpectrumMatrix SpectrumMatrix::normalized_copy() const {
  const double t = total();
  if (!(t > 0.0) || !std::isfinite(t)) throw NumericalError("cannot normalize a spectrum with non-positive sum");
  SpectrumMatrix out = *this;
  for (double& v : out.values.data()) v /= t;
  out.normalized = true;
  return out;
}

void SpectrumMatrix::validate() const {
  for (double v : values.data()) {
    if (!(v >= 0.0) || !std::isfinite(v)) throw DomainError("spectrum entries must be finite and non-negative");
  }
  if (normalized && std::abs(total() - 1.0) > 1e-10) throw DomainError("normalized spectrum does not sum to 1");
}

void SpdcConfig::validate() const {
  crystal.validate();
  if (!(waist_um > 0.0) || !std::isfinite(waist_um)) throw ConfigError("pump.waist", "pump waist must be > 0");
  if (clip_ratio && (!(*clip_ratio > 0.0) || !std::isfinite(*clip_ratio)))
    throw ConfigError("clip.ratio", "clip ratio must be > 0");
  const auto& q = quadrature;
  if (q.azimuthal_samples < 0) throw ConfigError("quadrature.azimuthal_samples", "must be >= 0");
  if (q.relative_samples < 0 || q.relative_samples % 2 != 0)
    throw ConfigError("quadrature.relative_samples", "must be an even count >= 0");
  if (q.radial_nodes != 0 && q.radial_nodes < 2) throw ConfigError("quadrature.radial_nodes", "must be 0 or >= 2");
  if (!(q.rho_hi >= 0.0) || !std::isfinite(q.rho_hi)) throw ConfigError("quadrature.rho_hi", "must be >= 0");
  if (!(q.pump_cutoff_exponent > 0.0)) throw ConfigError("quadrature.pump_cutoff", "must be > 0");
}

double default_rho_hi(const CrystalOpticalConstants& k, double length_um, double waist_um) {
  const double c0 = std::abs(k.collinear_mismatch());
  const double lower = 8.0 / waist_um;
  const double ring = std::sqrt(0.5 * k.n_so * k.k_po * c0);
  const double upper = std::max(lower, ring + 128.0 / waist_um);
  if (!(length_um > 0.0)) return upper;
  const double tails = std::sqrt(0.5 * k.n_so * k.k_po * (c0 + 2.0 * kSincTailPhase / length_um));
  return std::clamp(tails, lower, upper);
}

ResolvedQuadrature resolve_quadrature(const SpdcConfig& cfg, const CrystalOpticalConstants& k, int n_max,
                                      double rho_hi) {
  const auto& q = cfg.quadrature;
  const double w0 = cfg.waist_um;
  const double length = cfg.crystal.length_um;
  ResolvedQuadrature r;
  r.scheme = q.scheme;
  r.rho_hi = rho_hi > 0.0 ? rho_hi : rho_upper_unclipped(cfg, k);
  r.radial_nodes = q.radial_nodes > 0
                       ? q.radial_nodes
                       : std::max(kMinRadialNodes, static_cast<int>(std::ceil(kNodesPerPumpWidth * w0 * r.rho_hi)));

  const double root_cut = std::sqrt(q.pump_cutoff_exponent);
  const double s_max = 2.0 * root_cut / w0;
  const double alpha = std::abs(k.alpha);
  const double aniso = std::abs(k.beta * k.beta - k.gamma * k.gamma) / (2.0 * k.eta * k.k_po);
  const int alias_floor = minimum_azimuthal_samples(n_max);

  if (q.azimuthal_samples > 0) {
    r.azimuthal_samples = q.azimuthal_samples;
  } else {
    const double band_s = alpha * s_max * length + aniso * s_max * s_max * length + 16.0;
    r.azimuthal_samples = std::max({kDefaultAzimuthalSamples, next_pow2(alias_floor),
                                    next_pow2(band_s + 2.0 * n_max + 1.0)});
  }
  if (q.relative_samples > 0) {
    r.relative_samples = q.relative_samples;
  } else {
    const double band_r = root_cut * w0 * r.rho_hi + alpha * r.rho_hi * length;
    r.relative_samples = std::max(next_pow2(alias_floor), next_pow2(band_r + n_max + 1.0));
  }
  require_alias_free(r.azimuthal_samples, n_max);
  require_alias_free(r.relative_samples, n_max);
  return r;
}

SpectrumResult joint_oam_spectrum(const SpdcConfig& cfg, int n_max) {
  cfg.validate();
  return joint_oam_spectrum(cfg, optical_constants(cfg.crystal), n_max);
}

SpectrumResult joint_oam_spectrum(const SpdcConfig& cfg, const CrystalOpticalConstants& k, int n_max) {
  const Setup setup = prepare(cfg, k, n_max);
  const auto& rq = setup.rq;
  const RadialRule rule = radial_rule(rq.radial_nodes, rq.rho_hi, rq.scheme);
  const PairSampler sampler(k, cfg.crystal.length_um, cfg.waist_um, cfg.quadrature.pump_cutoff_exponent,
                            rq.azimuthal_samples, rq.relative_samples);
  const ShearedAzimuthalTransform transform(rq.azimuthal_samples, rq.relative_samples, n_max);
  const PairEngine engine(sampler, transform, rule);
  const std::size_t outer = rule.nodes.size() - 1;
  const std::size_t n_nodes = rule.nodes.size();

  JointAccumulator identity;
  identity.p.assign(static_cast<std::size_t>(ModeArray<double>::side(n_max)) * ModeArray<double>::side(n_max), 0.0);

  auto visit = [&](JointAccumulator& acc, std::size_t index, const RadialNode& node, std::span<const Complex> f,
                   double mass, std::size_t samples) {
    const double scale = node.weight * kFourPiSq;
    for (std::size_t c = 0; c < f.size(); ++c) acc.p[c] += scale * std::norm(f[c]);
    acc.full_mass += node.weight * mass;
    acc.samples += samples;
    const double density = node.rho_s * node.rho_i * mass;
    acc.peak_density = std::max(acc.peak_density, density);
    if (index / n_nodes == outer || index % n_nodes == outer)
      acc.boundary_density = std::max(acc.boundary_density, density);
  };
  auto combine = [](JointAccumulator& into, const JointAccumulator& from) {
    for (std::size_t c = 0; c < into.p.size(); ++c) into.p[c] += from.p[c];
    into.full_mass += from.full_mass;
    into.samples += from.samples;
    into.peak_density = std::max(into.peak_density, from.peak_density);
    into.boundary_density = std::max(into.boundary_density, from.boundary_density);
  };
  const JointAccumulator acc = engine.reduce(identity, visit, combine, cfg.quadrature.parallel);

  SpectrumMatrix raw(n_max);
  raw.values.data() = acc.p;

  SpectrumResult result;
  result.report = base_report(cfg, setup);
  auto& report = result.report;
  report.pairs_total = rule.size();
  report.pairs_evaluated = engine.active.size();
  report.pairs_skipped = engine.skipped;
  report.samples_evaluated = acc.samples;
  report.total_mass = raw.total();
  report.full_mass = acc.full_mass;
  report.boundary_ratio = acc.peak_density > 0.0 ? acc.boundary_density / acc.peak_density : 0.0;

  if (!(report.total_mass > 0.0) || !std::isfinite(report.total_mass))
    throw NumericalError("joint spectrum vanished (zero two-photon amplitude on the quadrature grid)");
  if (!setup.clipped && report.boundary_ratio > kBoundaryTolerance)
    report.warnings.push_back("radial cutoff not converged: boundary mass density is " +
                              format_double(report.boundary_ratio) + " of peak at rho_hi = " +
                              format_double(rq.rho_hi) + " rad/um");
  if (report.mode_capture() < kModeCaptureWarning)
    report.warnings.push_back("modes with |l| > " + std::to_string(n_max) + " carry " +
                              format_double(100.0 * (1.0 - report.mode_capture())) + "% of the two-photon mass");

  result.spectrum = raw.normalized_copy();
  return result;
}

double nonconservation(const SpectrumMatrix& spec) {
  const int n = spec.n_max();
  double total = 0.0;
  double anti = 0.0;
  for (int ls = -n; ls <= n; ++ls) {
    for (int li = -n; li <= n; ++li) {
      const double v = spec(ls, li);
      if (v < 0.0 || !std::isfinite(v)) throw DomainError("spectrum entries must be finite and non-negative");
      total += v;
      if (ls + li == 0) anti += v;
    }
  }
  if (!(total > 0.0)) throw NumericalError("non-conservation is undefined for an all-zero spectrum");
  return 100.0 * (1.0 - anti / total);
}

std::vector<double> schmidt_antidiagonal(const SpectrumMatrix& spec) {
  const int n = spec.n_max();
  std::vector<double> s;
  s.reserve(static_cast<std::size_t>(2 * n + 1));
  for (int l = -n; l <= n; ++l) s.push_back(spec(l, -l));
  return s;
}

double schmidt_width(std::span<const double> schmidt) {
  if (schmidt.size() % 2 != 1) throw DomainError("Schmidt spectrum must have 2N+1 entries");
  const int n = static_cast<int>(schmidt.size() / 2);
  double total = 0.0, first = 0.0, second = 0.0;
  for (int l = -n; l <= n; ++l) {
    const double v = schmidt[static_cast<std::size_t>(l + n)];
    total += v;
    first += v * l;
    second += v * l * l;
  }
  if (!(total > 0.0)) throw NumericalError("Schmidt width is undefined for an all-zero antidiagonal");
  const double mean = first / total;
  return std::sqrt(std::max(0.0, second / total - mean * mean));
}

double marginal_intensity(const SpdcConfig& cfg, const CrystalOpticalConstants& k, double rho) {
  if (rho < 0.0) throw DomainError("marginal_intensity: rho must be non-negative");
  const auto rq = resolve_quadrature(cfg, k, 0, rho_upper_unclipped(cfg, k));
  const PairSampler sampler(k, cfg.crystal.length_um, cfg.waist_um, cfg.quadrature.pump_cutoff_exponent,
                            rq.azimuthal_samples, rq.relative_samples);
  const double reach = 2.0 * std::sqrt(cfg.quadrature.pump_cutoff_exponent) / cfg.waist_um;
  const double lo = std::max(0.0, rho - reach);
  const double hi = rho + reach;
  std::vector<double> x, w;
  gauss_legendre(kMarginalNodes, x, w);
  double total = 0.0;
  for (std::size_t b = 0; b < x.size(); ++b) {
    const double rho_i = lo + 0.5 * (hi - lo) * (x[b] + 1.0);
    total += 0.5 * (hi - lo) * w[b] * rho_i * sampler.angular_mass(rho, rho_i);
  }
  return total;
}

MarginalWidth marginal_width(const SpdcConfig& cfg, const CrystalOpticalConstants& k) {
  cfg.validate();
  const double rho_max = rho_upper_unclipped(cfg, k);
  const auto rq = resolve_quadrature(cfg, k, 0, rho_max);
  const PairSampler sampler(k, cfg.crystal.length_um, cfg.waist_um, cfg.quadrature.pump_cutoff_exponent,
                            rq.azimuthal_samples, rq.relative_samples);
  const double reach = 2.0 * std::sqrt(cfg.quadrature.pump_cutoff_exponent) / cfg.waist_um;
  std::vector<double> x, w;
  gauss_legendre(kMarginalNodes, x, w);
  auto intensity = [&](double rho) {
    const double lo = std::max(0.0, rho - reach);
    const double hi = rho + reach;
    double total = 0.0;
    for (std::size_t b = 0; b < x.size(); ++b) {
      const double rho_i = lo + 0.5 * (hi - lo) * (x[b] + 1.0);
      total += 0.5 * (hi - lo) * w[b] * rho_i * sampler.angular_mass(rho, rho_i);
    }
    return total;
  };

  std::vector<double> grid(kMarginalScan + 1), value(kMarginalScan + 1);
  for (int i = 0; i <= kMarginalScan; ++i) {
    grid[static_cast<std::size_t>(i)] = rho_max * i / kMarginalScan;
    value[static_cast<std::size_t>(i)] = intensity(grid[static_cast<std::size_t>(i)]);
  }
  const auto ip = static_cast<std::size_t>(std::max_element(value.begin(), value.end()) - value.begin());
  MarginalWidth out;
  out.peak_rho = grid[ip];
  out.peak_value = value[ip];
  if (ip > 0 && ip < grid.size() - 1) {
    const auto best = boost::math::tools::brent_find_minima([&](double r) { return -intensity(r); }, grid[ip - 1],
                                                            grid[ip + 1], 40);
    if (-best.second > out.peak_value) {
      out.peak_rho = best.first;
      out.peak_value = -best.second;
    }
  }
  if (!(out.peak_value > 0.0)) throw NumericalError("marginal intensity vanishes everywhere");

  const double threshold = out.peak_value * std::exp(-2.0);
  std::size_t cross = ip + 1;
  while (cross < grid.size() && value[cross] >= threshold) ++cross;
  if (cross >= grid.size())
    throw NumericalError("marginal intensity stays above e^-2 of its peak up to rho = " + format_double(rho_max));
  for (std::size_t i = cross + 1; i < grid.size(); ++i) {
    if (value[i] >= threshold)
      throw NumericalError("marginal intensity is non-monotone beyond its e^-2 radius (rises again at rho = " +
                           format_double(grid[i]) + ")");
  }
  const double a = std::max(out.peak_rho, grid[cross - 1]);
  const double b = grid[cross];
  std::uintmax_t iterations = 100;
  const auto root = boost::math::tools::toms748_solve([&](double r) { return intensity(r) - threshold; }, a, b,
                                                      boost::math::tools::eps_tolerance<double>(40), iterations);
  out.sigma = 0.5 * (root.first + root.second);
  return out;
}

double marginal_sigma(const SpdcConfig& cfg) {
  cfg.validate();
  return marginal_width(cfg, optical_constants(cfg.crystal)).sigma;
}

double aperture_capture_fraction(const SpdcConfig& cfg, double ratio) {
  if (!(ratio > 0.0)) throw DomainError("aperture ratio must be > 0");
  cfg.validate();
  const auto k = optical_constants(cfg.crystal);
  const double rho_max = rho_upper_unclipped(cfg, k);
  const double rho0 = ratio * marginal_width(cfg, k).sigma;
  std::vector<double> x, w;
  gauss_legendre(kMarginalNodes, x, w);
  auto power = [&](double lo, double hi) {
    double total = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
      const double r = lo + 0.5 * (hi - lo) * (x[i] + 1.0);
      total += 0.5 * (hi - lo) * w[i] * r * marginal_intensity(cfg, k, r);
    }
    return total;
  };
  const double inner = power(0.0, std::min(rho0, rho_max));
  const double outer = rho0 < rho_max ? power(rho0, rho_max) : 0.0;
  return inner / (inner + outer);
}

namespace {

struct ProjectionSetup {
  Setup setup;
  RadialRule rule;
  std::unique_ptr<PairSampler> sampler;
  std::unique_ptr<ShearedAzimuthalTransform> transform;
  std::unique_ptr<PairEngine> engine;
};

ProjectionSetup make_projection(const SpdcConfig& cfg, const CrystalOpticalConstants& k, int n_max) {
  ProjectionSetup p;
  p.setup = prepare(cfg, k, n_max);
  const auto& rq = p.setup.rq;
  p.rule = radial_rule(rq.radial_nodes, rq.rho_hi, rq.scheme);
  p.sampler = std::make_unique<PairSampler>(k, cfg.crystal.length_um, cfg.waist_um,
                                            cfg.quadrature.pump_cutoff_exponent, rq.azimuthal_samples,
                                            rq.relative_samples);
  p.transform = std::make_unique<ShearedAzimuthalTransform>(rq.azimuthal_samples, rq.relative_samples, n_max);
  p.engine = std::make_unique<PairEngine>(*p.sampler, *p.transform, p.rule);
  return p;
}

using ComplexVector = std::vector<Complex>;

void add_complex(ComplexVector& into, const ComplexVector& from) {
  for (std::size_t i = 0; i < into.size(); ++i) into[i] += from[i];
}

}  // namespace

std::vector<std::vector<Complex>> radial_coefficients(const SpdcConfig& cfg, int l_s, int l_i, int p_max,
                                                      double waist_um) {
  if (p_max < 0) throw DomainError("p_max must be non-negative");
  LgModeSpec{l_s, 0, waist_um}.validate();
  cfg.validate();
  const auto k = optical_constants(cfg.crystal);
  const int n_max = std::max(std::abs(l_s), std::abs(l_i));
  const auto proj = make_projection(cfg, k, n_max);
  const auto& nodes = proj.rule.nodes;
  const std::size_t np = static_cast<std::size_t>(p_max) + 1;
  std::vector<double> rs(nodes.size() * np), ri(nodes.size() * np);
  for (std::size_t a = 0; a < nodes.size(); ++a) {
    for (std::size_t p = 0; p < np; ++p) {
      rs[a * np + p] = lg_profile(l_s, static_cast<int>(p), waist_um, nodes[a]);
      ri[a * np + p] = lg_profile(l_i, static_cast<int>(p), waist_um, nodes[a]);
    }
  }
  const int side = 2 * n_max + 1;
  const std::size_t slot = static_cast<std::size_t>(l_s + n_max) * side + static_cast<std::size_t>(l_i + n_max);
  const std::size_t n_nodes = nodes.size();
  auto visit = [&](ComplexVector& acc, std::size_t index, const RadialNode& node, std::span<const Complex> f,
                   double, std::size_t) {
    const Complex base = node.weight * kFourPiSq * f[slot];
    const std::size_t a = index / n_nodes;
    const std::size_t b = index % n_nodes;
    for (std::size_t ps = 0; ps < np; ++ps)
      for (std::size_t pi = 0; pi < np; ++pi) acc[ps * np + pi] += base * rs[a * np + ps] * ri[b * np + pi];
  };
  const ComplexVector acc =
      proj.engine->reduce(ComplexVector(np * np), visit, add_complex, cfg.quadrature.parallel);
  std::vector<std::vector<Complex>> out(np, std::vector<Complex>(np));
  for (std::size_t ps = 0; ps < np; ++ps)
    for (std::size_t pi = 0; pi < np; ++pi) out[ps][pi] = acc[ps * np + pi];
  return out;
}

double mode_projected_probability(const SpdcConfig& cfg, const LgModeSpec& signal, const LgModeSpec& idler) {
  signal.validate();
  idler.validate();
  cfg.validate();
  const auto k = optical_constants(cfg.crystal);
  const int n_max = std::max(std::abs(signal.l), std::abs(idler.l));
  const auto proj = make_projection(cfg, k, n_max);
  const int side = 2 * n_max + 1;
  const std::size_t slot =
      static_cast<std::size_t>(signal.l + n_max) * side + static_cast<std::size_t>(idler.l + n_max);
  auto visit = [&](ComplexVector& acc, std::size_t, const RadialNode& node, std::span<const Complex> f, double,
                   std::size_t) {
    acc[0] += node.weight * kFourPiSq * f[slot] * lg_radial_momentum(signal, node.rho_s) *
              lg_radial_momentum(idler, node.rho_i);
  };
  const ComplexVector acc = proj.engine->reduce(ComplexVector(1), visit, add_complex, cfg.quadrature.parallel);
  return std::norm(acc[0]);
}

double optimal_projection_waist(const SpdcConfig& cfg) {
  cfg.validate();
  const auto k = optical_constants(cfg.crystal);
  const auto proj = make_projection(cfg, k, 0);
  struct Sample {
    double rho_s, rho_i, weight;
    Complex f00;
  };
  using Samples = std::vector<std::pair<std::size_t, Sample>>;
  auto visit = [](Samples& acc, std::size_t index, const RadialNode& node, std::span<const Complex> f, double,
                  std::size_t) { acc.push_back({index, {node.rho_s, node.rho_i, node.weight, f[0]}}); };
  auto join = [](Samples& into, const Samples& from) { into.insert(into.end(), from.begin(), from.end()); };
  Samples samples = proj.engine->reduce(Samples{}, visit, join, cfg.quadrature.parallel);
  std::sort(samples.begin(), samples.end(), [](const auto& a, const auto& b) { return a.first < b.first; });

  auto overlap = [&](double w) {
    Complex c{};
    for (const auto& [index, s] : samples)
      c += s.weight * s.f00 * lg_profile(0, 0, w, s.rho_s) * lg_profile(0, 0, w, s.rho_i);
    return std::norm(kFourPiSq * c);
  };
  const double lo = std::log(1.0 / proj.setup.rq.rho_hi);
  const double hi = std::log(4.0 * cfg.waist_um);
  constexpr int kScan = 48;
  int best = 0;
  double best_value = -1.0;
  for (int i = 0; i <= kScan; ++i) {
    const double v = overlap(std::exp(lo + (hi - lo) * i / kScan));
    if (v > best_value) {
      best_value = v;
      best = i;
    }
  }
  const double a = lo + (hi - lo) * std::max(0, best - 1) / kScan;
  const double b = lo + (hi - lo) * std::min(kScan, best + 1) / kScan;
  const auto r = boost::math::tools::brent_find_minima([&](double lw) { return -overlap(std::exp(lw)); }, a, b, 40);
  return std::exp(r.first);
}

ProjectedSpectrum mode_projected_spectrum(const SpdcConfig& cfg, int n_max, double waist_um) {
  cfg.validate();
  const auto k = optical_constants(cfg.crystal);
  const double w = waist_um > 0.0 ? waist_um : optimal_projection_waist(cfg);
  const auto proj = make_projection(cfg, k, n_max);
  const auto& nodes = proj.rule.nodes;
  const int side = 2 * n_max + 1;
  std::vector<double> radial(nodes.size() * static_cast<std::size_t>(side));
  for (std::size_t a = 0; a < nodes.size(); ++a)
    for (int l = -n_max; l <= n_max; ++l)
      radial[a * side + static_cast<std::size_t>(l + n_max)] = lg_profile(l, 0, w, nodes[a]);
  const std::size_t n_nodes = nodes.size();
  auto visit = [&](ComplexVector& acc, std::size_t index, const RadialNode& node, std::span<const Complex> f,
                   double, std::size_t) {
    const double* rs = radial.data() + (index / n_nodes) * side;
    const double* ri = radial.data() + (index % n_nodes) * side;
    const double scale = node.weight * kFourPiSq;
    for (int a = 0; a < side; ++a)
      for (int c = 0; c < side; ++c)
        acc[static_cast<std::size_t>(a) * side + c] += scale * rs[a] * ri[c] * f[static_cast<std::size_t>(a) * side + c];
  };
  const ComplexVector acc = proj.engine->reduce(ComplexVector(static_cast<std::size_t>(side) * side), visit,
                                                add_complex, cfg.quadrature.parallel);
  SpectrumMatrix raw(n_max);
  for (std::size_t i = 0; i < acc.size(); ++i) raw.values.data()[i] = std::norm(acc[i]);

  ProjectedSpectrum out;
  out.waist_um = w;
  out.report = base_report(cfg, proj.setup);
  out.report.pairs_total = proj.rule.size();
  out.report.pairs_evaluated = proj.engine->active.size();
  out.report.pairs_skipped = proj.engine->skipped;
  out.report.total_mass = raw.total();
  if (!(out.report.total_mass > 0.0)) throw NumericalError("projected spectrum vanished");
  out.spectrum = raw.normalized_copy();
  return out;
}

namespace {

std::string point_message(std::size_t index, double value, const char* what) {
  return "sweep point " + std::to_string(index) + " (value " + format_double(value) + "): " + what;
}

}  // namespace

std::vector<SweepPoint> sweep(const SpdcConfig& base, SweepAxis axis, std::span<const double> values, int n_max,
                              const SweepOptions& opts) {
  if (values.empty()) throw ConfigError("sweep.values", "at least one value is required");
  std::vector<SweepPoint> out;
  out.reserve(values.size());
  for (std::size_t i = 0; i < values.size(); ++i) {
    SweepPoint point;
    point.value = values[i];
    SpdcConfig cfg = base;
    if (axis == SweepAxis::thickness)
      cfg.crystal.length_um = values[i];
    else
      cfg.crystal.theta_p_rad = values[i];
    try {
      if (opts.modes == ModeSelection::all_p) {
        auto r = joint_oam_spectrum(cfg, n_max);
        point.nonconservation_percent = nonconservation(r.spectrum);
        point.report = std::move(r.report);
      } else {
        auto r = mode_projected_spectrum(cfg, n_max);
        point.nonconservation_percent = nonconservation(r.spectrum);
        point.report = std::move(r.report);
      }
    } catch (const ConfigError& e) {
      const std::string msg = point_message(i, values[i], e.what());
      if (!opts.continue_on_error) throw ConfigError(e.field(), msg);
      point.error = msg;
    } catch (const Error& e) {
      const std::string msg = point_message(i, values[i], e.what());
      if (!opts.continue_on_error) throw NumericalError(msg);
      point.error = msg;
    }
    out.push_back(std::move(point));
  }
  return out;
}

}  // namespace oamspdc
