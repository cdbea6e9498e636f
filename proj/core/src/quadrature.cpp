#include "oamspdc/quadrature.hpp"

#include <fftw3.h>

#include <algorithm>
#include <boost/math/special_functions/legendre.hpp>
#include <cmath>
#include <mutex>
#include <numbers>
#include <string>
#include <utility>

#include "oamspdc/errors.hpp"

namespace oamspdc {

namespace {

std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}

fftw_complex* as_fftw(Complex* p) noexcept { return reinterpret_cast<fftw_complex*>(p); }

Complex* allocate(std::size_t n) {
  auto* p = static_cast<Complex*>(fftw_malloc(sizeof(Complex) * n));
  if (p == nullptr) throw std::bad_alloc();
  return p;
}

int wrap_index(int l, int m) noexcept { return ((l % m) + m) % m; }

}  // namespace

double AzimuthalGrid::angle(int m, int samples) noexcept {
  return -std::numbers::pi + 2.0 * std::numbers::pi * static_cast<double>(m) / static_cast<double>(samples);
}

void require_alias_free(int samples, int n_max) {
  if (n_max < 0) throw DomainError("mode cutoff N must be non-negative, got " + std::to_string(n_max));
  if (samples <= 0 || samples < minimum_azimuthal_samples(n_max)) {
    throw AliasingError("azimuthal sample count M = " + std::to_string(samples) + " cannot resolve N = " +
                        std::to_string(n_max) + "; need M >= " + std::to_string(minimum_azimuthal_samples(n_max)));
  }
}

AzimuthalTransform::AzimuthalTransform(int samples, int n_max) : samples_(samples), n_max_(n_max) {
  require_alias_free(samples, n_max);
  const int m = samples;
  const int cols = 2 * n_max + 1;
  Complex* grid = allocate(static_cast<std::size_t>(m) * m);
  Complex* columns = allocate(static_cast<std::size_t>(cols) * m);
  {
    std::scoped_lock lock(planner_mutex());
    // Row transforms: m contiguous length-m rows, in place.
    row_plan_ = fftw_plan_many_dft(1, &m, m, as_fftw(grid), nullptr, 1, m, as_fftw(grid), nullptr, 1, m,
                                   FFTW_BACKWARD, FFTW_ESTIMATE);
    // Column transforms on the gathered (2N+1) columns, stored contiguously.
    column_plan_ = fftw_plan_many_dft(1, &m, cols, as_fftw(columns), nullptr, 1, m, as_fftw(columns), nullptr, 1,
                                      m, FFTW_BACKWARD, FFTW_ESTIMATE);
  }
  fftw_free(grid);
  fftw_free(columns);
  if (row_plan_ == nullptr || column_plan_ == nullptr) throw NumericalError("FFTW planning failed");
}

AzimuthalTransform::~AzimuthalTransform() {
  std::scoped_lock lock(planner_mutex());
  if (row_plan_ != nullptr) fftw_destroy_plan(static_cast<fftw_plan>(row_plan_));
  if (column_plan_ != nullptr) fftw_destroy_plan(static_cast<fftw_plan>(column_plan_));
}

AzimuthalTransform::Workspace::Workspace(const AzimuthalTransform& t)
    : grid_size_(static_cast<std::size_t>(t.samples_) * t.samples_) {
  grid_ = allocate(grid_size_);
  try {
    columns_ = allocate(static_cast<std::size_t>(2 * t.n_max_ + 1) * t.samples_);
  } catch (...) {
    fftw_free(grid_);
    throw;
  }
}

AzimuthalTransform::Workspace::~Workspace() {
  if (grid_ != nullptr) fftw_free(grid_);
  if (columns_ != nullptr) fftw_free(columns_);
}

AzimuthalTransform::Workspace::Workspace(Workspace&& other) noexcept
    : grid_(std::exchange(other.grid_, nullptr)),
      columns_(std::exchange(other.columns_, nullptr)),
      grid_size_(std::exchange(other.grid_size_, 0)) {}

AzimuthalTransform::Workspace& AzimuthalTransform::Workspace::operator=(Workspace&& other) noexcept {
  if (this != &other) {
    if (grid_ != nullptr) fftw_free(grid_);
    if (columns_ != nullptr) fftw_free(columns_);
    grid_ = std::exchange(other.grid_, nullptr);
    columns_ = std::exchange(other.columns_, nullptr);
    grid_size_ = std::exchange(other.grid_size_, 0);
  }
  return *this;
}

std::span<Complex> AzimuthalTransform::Workspace::grid() noexcept { return {grid_, grid_size_}; }

void AzimuthalTransform::apply(Workspace& ws, std::span<Complex> out) const {
  const int m = samples_;
  const int n = n_max_;
  const int side = 2 * n + 1;
  if (out.size() != static_cast<std::size_t>(side) * side)
    throw DomainError("output span must hold (2N+1)^2 coefficients");

  fftw_execute_dft(static_cast<fftw_plan>(row_plan_), as_fftw(ws.grid_), as_fftw(ws.grid_));

  for (int c = 0; c < side; ++c) {
    const int k = wrap_index(c - n, m);
    Complex* dst = ws.columns_ + static_cast<std::size_t>(c) * m;
    for (int r = 0; r < m; ++r) dst[r] = ws.grid_[static_cast<std::size_t>(r) * m + k];
  }
  fftw_execute_dft(static_cast<fftw_plan>(column_plan_), as_fftw(ws.columns_), as_fftw(ws.columns_));

  // phi_m = -pi + 2 pi m / M contributes the factor exp(-i pi (l_s + l_i)).
  const double scale = 1.0 / (static_cast<double>(m) * static_cast<double>(m));
  for (int a = 0; a < side; ++a) {
    const int l_s = a - n;
    const int k = wrap_index(l_s, m);
    for (int c = 0; c < side; ++c) {
      const int l_i = c - n;
      const double sign = ((l_s + l_i) & 1) != 0 ? -scale : scale;
      out[static_cast<std::size_t>(a) * side + c] = sign * ws.columns_[static_cast<std::size_t>(c) * m + k];
    }
  }
}

ModeArray<Complex> azimuthal_fourier_coefficients(const AzimuthalGrid& grid, int n_max) {
  require_alias_free(grid.samples, n_max);
  if (grid.values.size() != static_cast<std::size_t>(grid.samples) * grid.samples)
    throw DomainError("azimuthal grid must hold M*M samples");
  AzimuthalTransform transform(grid.samples, n_max);
  AzimuthalTransform::Workspace ws(transform);
  std::copy(grid.values.begin(), grid.values.end(), ws.grid().begin());
  ModeArray<Complex> out(n_max);
  transform.apply(ws, out.data());
  return out;
}

ShearedAzimuthalTransform::ShearedAzimuthalTransform(int samples_s, int samples_r, int n_max)
    : samples_s_(samples_s), samples_r_(samples_r), n_max_(n_max) {
  require_alias_free(samples_s, n_max);
  require_alias_free(samples_r, n_max);
  if (samples_r % 2 != 0) throw DomainError("relative sample count M_r must be even");
  roots_.resize(static_cast<std::size_t>(samples_r));
  for (int k = 0; k < samples_r; ++k) {
    const double a = 2.0 * std::numbers::pi * static_cast<double>(k) / static_cast<double>(samples_r);
    roots_[static_cast<std::size_t>(k)] = {std::cos(a), std::sin(a)};
  }
  std::vector<Complex> probe_s(static_cast<std::size_t>(samples_s));
  std::vector<Complex> probe_r(static_cast<std::size_t>(samples_r));
  {
    std::scoped_lock lock(planner_mutex());
    row_plan_ = fftw_plan_dft_1d(samples_s, as_fftw(probe_s.data()), as_fftw(probe_s.data()), FFTW_BACKWARD,
                                 FFTW_ESTIMATE | FFTW_UNALIGNED);
    rel_plan_ = fftw_plan_dft_1d(samples_r, as_fftw(probe_r.data()), as_fftw(probe_r.data()), FFTW_BACKWARD,
                                 FFTW_ESTIMATE | FFTW_UNALIGNED);
  }
  if (row_plan_ == nullptr || rel_plan_ == nullptr) throw NumericalError("FFTW planning failed");
}

ShearedAzimuthalTransform::~ShearedAzimuthalTransform() {
  std::scoped_lock lock(planner_mutex());
  if (row_plan_ != nullptr) fftw_destroy_plan(static_cast<fftw_plan>(row_plan_));
  if (rel_plan_ != nullptr) fftw_destroy_plan(static_cast<fftw_plan>(rel_plan_));
}

std::span<Complex> ShearedAzimuthalTransform::Workspace::reserve_rows(const ShearedAzimuthalTransform& t,
                                                                      std::size_t n_rows) {
  const std::size_t need = n_rows * static_cast<std::size_t>(t.samples_s_);
  if (rows.size() < need) rows.resize(need);
  return {rows.data(), need};
}

void ShearedAzimuthalTransform::apply(Workspace& ws, std::span<const int> row_offsets,
                                      std::span<Complex> out) const {
  const int ms = samples_s_;
  const int mr = samples_r_;
  const int n = n_max_;
  const int side = 2 * n + 1;
  const int k_count = 4 * n + 1;
  const std::size_t n_rows = row_offsets.size();
  if (out.size() != static_cast<std::size_t>(side) * side)
    throw DomainError("output span must hold (2N+1)^2 coefficients");
  if (ws.rows.size() < n_rows * static_cast<std::size_t>(ms)) throw DomainError("workspace holds too few rows");
  std::fill(out.begin(), out.end(), Complex{});
  if (n_rows == 0) return;

  for (std::size_t r = 0; r < n_rows; ++r) {
    Complex* row = ws.rows.data() + r * static_cast<std::size_t>(ms);
    fftw_execute_dft(static_cast<fftw_plan>(row_plan_), as_fftw(row), as_fftw(row));
  }

  // Direct summation over rows costs about n_rows (2N+1)^2 products; the
  // transform along j costs about (4N+1) M_r log2(M_r).
  const double direct_cost = static_cast<double>(n_rows) * side * side;
  const double fft_cost = 0.5 * k_count * mr * std::log2(static_cast<double>(mr));

  if (direct_cost <= fft_cost) {
    ws.phases.resize(static_cast<std::size_t>(side));
    for (std::size_t r = 0; r < n_rows; ++r) {
      const int j = row_offsets[r];
      for (int c = 0; c < side; ++c) {
        const long long idx = static_cast<long long>(c - n) * j;
        ws.phases[static_cast<std::size_t>(c)] = roots_[static_cast<std::size_t>(((idx % mr) + mr) % mr)];
      }
      const Complex* row = ws.rows.data() + r * static_cast<std::size_t>(ms);
      for (int a = 0; a < side; ++a) {
        const int l_s = a - n;
        Complex* dst = out.data() + static_cast<std::size_t>(a) * side;
        for (int c = 0; c < side; ++c) {
          const int kk = l_s + (c - n);
          dst[c] += row[wrap_index(kk, ms)] * ws.phases[static_cast<std::size_t>(c)];
        }
      }
    }
  } else {
    ws.sums.assign(static_cast<std::size_t>(k_count) * mr, Complex{});
    for (std::size_t r = 0; r < n_rows; ++r) {
      const int jj = wrap_index(row_offsets[r], mr);
      const Complex* row = ws.rows.data() + r * static_cast<std::size_t>(ms);
      for (int kk = -2 * n; kk <= 2 * n; ++kk)
        ws.sums[static_cast<std::size_t>(kk + 2 * n) * mr + jj] += row[wrap_index(kk, ms)];
    }
    for (int kk = 0; kk < k_count; ++kk) {
      Complex* line = ws.sums.data() + static_cast<std::size_t>(kk) * mr;
      fftw_execute_dft(static_cast<fftw_plan>(rel_plan_), as_fftw(line), as_fftw(line));
    }
    for (int a = 0; a < side; ++a) {
      const int l_s = a - n;
      for (int c = 0; c < side; ++c) {
        const int l_i = c - n;
        out[static_cast<std::size_t>(a) * side + c] =
            ws.sums[static_cast<std::size_t>(l_s + l_i + 2 * n) * mr + wrap_index(l_i, mr)];
      }
    }
  }

  // phi_s offset and the pi shift of phi_i combine into (-1)^{l_s}.
  const double scale = 1.0 / (static_cast<double>(ms) * static_cast<double>(mr));
  for (int a = 0; a < side; ++a) {
    const double sign = ((a - n) & 1) != 0 ? -scale : scale;
    for (int c = 0; c < side; ++c) out[static_cast<std::size_t>(a) * side + c] *= sign;
  }
}

std::vector<RadialNode> RadialRule::pairs() const {
  std::vector<RadialNode> out;
  out.reserve(size());
  for (std::size_t k = 0; k < size(); ++k) out.push_back(pair(k));
  return out;
}

void gauss_legendre(int n, std::vector<double>& nodes, std::vector<double>& weights) {
  if (n < 1) throw DomainError("Gauss-Legendre order must be positive");
  const auto positive = boost::math::legendre_p_zeros<double>(n);
  nodes.clear();
  weights.clear();
  nodes.reserve(static_cast<std::size_t>(n));
  weights.reserve(static_cast<std::size_t>(n));
  auto weight = [n](double x) {
    const double d = boost::math::legendre_p_prime<double>(n, x);
    return 2.0 / ((1.0 - x * x) * d * d);
  };
  // legendre_p_zeros returns the non-negative roots in ascending order,
  // including 0 for odd n.
  for (auto it = positive.rbegin(); it != positive.rend(); ++it) {
    if (*it == 0.0) continue;
    nodes.push_back(-*it);
    weights.push_back(weight(*it));
  }
  for (double x : positive) {
    nodes.push_back(x);
    weights.push_back(weight(x));
  }
}

RadialRule radial_rule(int n_nodes, double rho_hi, RadialScheme scheme) {
  if (n_nodes < 2) throw DomainError("radial rule needs at least 2 nodes per axis");
  if (!(rho_hi > 0.0) || !std::isfinite(rho_hi)) throw DomainError("radial cutoff rho_hi must be positive");
  RadialRule rule;
  rule.rho_hi = rho_hi;
  rule.scheme = scheme;
  rule.nodes.resize(static_cast<std::size_t>(n_nodes));
  rule.weights.resize(static_cast<std::size_t>(n_nodes));
  if (scheme == RadialScheme::gauss) {
    std::vector<double> x, w;
    gauss_legendre(n_nodes, x, w);
    const double half = 0.5 * rho_hi;
    for (std::size_t j = 0; j < x.size(); ++j) {
      const double rho = half * (x[j] + 1.0);
      rule.nodes[j] = rho;
      rule.weights[j] = half * w[j] * rho;
    }
  } else {
    const double h = rho_hi / n_nodes;
    for (int j = 1; j <= n_nodes; ++j) {
      const double rho = h * j;
      rule.nodes[static_cast<std::size_t>(j - 1)] = rho;
      rule.weights[static_cast<std::size_t>(j - 1)] = (j == n_nodes ? 0.5 * h : h) * rho;
    }
  }
  return rule;
}

}  // namespace oamspdc
