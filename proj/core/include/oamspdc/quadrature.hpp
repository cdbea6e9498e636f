#pragma once

#include <complex>
#include <cstddef>
#include <memory>
#include <span>
#include <vector>

#include "oamspdc/mode_array.hpp"

namespace oamspdc {

using Complex = std::complex<double>;

/// M x M samples of f(phi_s, phi_i) at phi = -pi + 2*pi*m/M, row-major with
/// phi_s selecting the row.
struct AzimuthalGrid {
  int samples = 0;
  std::vector<Complex> values;

  static double angle(int m, int samples) noexcept;

  /// Samples `f(phi_s, phi_i)` on an M x M grid.
  template <class F>
  static AzimuthalGrid sample(int samples, F&& f) {
    AzimuthalGrid g{samples, std::vector<Complex>(static_cast<std::size_t>(samples) * samples)};
    for (int m = 0; m < samples; ++m)
      for (int n = 0; n < samples; ++n)
        g.values[static_cast<std::size_t>(m) * samples + n] = f(angle(m, samples), angle(n, samples));
    return g;
  }
};

/// Smallest M accepted for mode cutoff N: 2(2N+1).
constexpr int minimum_azimuthal_samples(int n_max) noexcept { return 2 * (2 * n_max + 1); }

/// Throws AliasingError when M < 2(2N+1).
void require_alias_free(int samples, int n_max);

/// F(l_s, l_i) = (1/4pi^2) * double integral of f e^{i(l_s phi_s + l_i phi_i)},
/// evaluated with the periodic trapezoid rule through an FFT. Exact for
/// trigonometric polynomials of degree < M/2.
ModeArray<Complex> azimuthal_fourier_coefficients(const AzimuthalGrid& grid, int n_max);

/// Reusable FFT plan for repeated transforms of one (M, N) shape.
///
/// Construction is serialized internally and must happen before worker
/// threads start; `Workspace` objects are per-thread and make `apply`
/// safe to call concurrently on a shared transform.
class AzimuthalTransform {
 public:
  AzimuthalTransform(int samples, int n_max);
  ~AzimuthalTransform();
  AzimuthalTransform(const AzimuthalTransform&) = delete;
  AzimuthalTransform& operator=(const AzimuthalTransform&) = delete;

  int samples() const noexcept { return samples_; }
  int n_max() const noexcept { return n_max_; }

  class Workspace {
   public:
    explicit Workspace(const AzimuthalTransform& t);
    ~Workspace();
    Workspace(const Workspace&) = delete;
    Workspace& operator=(const Workspace&) = delete;
    Workspace(Workspace&&) noexcept;
    Workspace& operator=(Workspace&&) noexcept;

    /// M*M row-major input samples; overwritten by `apply`.
    std::span<Complex> grid() noexcept;

   private:
    friend class AzimuthalTransform;
    Complex* grid_ = nullptr;
    Complex* columns_ = nullptr;
    std::size_t grid_size_ = 0;
  };

  /// Transforms the workspace grid in place and writes the (2N+1)^2
  /// coefficients into `out` (row-major, l_s rows).
  void apply(Workspace& ws, std::span<Complex> out) const;

 private:
  int samples_;
  int n_max_;
  void* row_plan_ = nullptr;
  void* column_plan_ = nullptr;
};

/// Azimuthal transform on the sheared lattice
///   phi_s = -pi + 2 pi m / M_s,   phi_i = phi_s + pi + 2 pi j / M_r,
/// where only the rows j passed to `apply` carry samples and every other row
/// is treated as zero. With M_s = M_r = M and all M rows present this is the
/// same trapezoid rule as `azimuthal_fourier_coefficients`.
///
/// Coefficients with |l_s + l_i| <= 2N are exact when the samples along phi_s
/// are band-limited below M_s - 2N.
class ShearedAzimuthalTransform {
 public:
  ShearedAzimuthalTransform(int samples_s, int samples_r, int n_max);
  ~ShearedAzimuthalTransform();
  ShearedAzimuthalTransform(const ShearedAzimuthalTransform&) = delete;
  ShearedAzimuthalTransform& operator=(const ShearedAzimuthalTransform&) = delete;

  int samples_s() const noexcept { return samples_s_; }
  int samples_r() const noexcept { return samples_r_; }
  int n_max() const noexcept { return n_max_; }

  /// Per-thread scratch buffers.
  struct Workspace {
    std::vector<Complex> rows;    ///< row k occupies [k*M_s, (k+1)*M_s)
    std::vector<Complex> sums;    ///< (4N+1) x (2N+1) or (4N+1) x M_r
    std::vector<Complex> phases;  ///< per-row e^{i l_i 2 pi j / M_r}

    /// Returns storage for `n_rows` rows of M_s samples each.
    std::span<Complex> reserve_rows(const ShearedAzimuthalTransform& t, std::size_t n_rows);
  };

  /// `row_offsets[k]` is the j of row k, in [-M_r/2, M_r/2). The row samples
  /// in `ws.rows` are overwritten. Writes (2N+1)^2 coefficients to `out`.
  void apply(Workspace& ws, std::span<const int> row_offsets, std::span<Complex> out) const;

 private:
  int samples_s_;
  int samples_r_;
  int n_max_;
  std::vector<Complex> roots_;  ///< e^{2 pi i k / M_r}
  void* row_plan_ = nullptr;
  void* rel_plan_ = nullptr;
};

enum class RadialScheme { gauss, trapezoid };

struct RadialNode {
  double rho_s;
  double rho_i;
  double weight;  ///< includes the rho_s * rho_i Jacobian
};

/// Tensor-product rule on [0, rho_hi]^2 for integrals of the form
/// integral g(rho_s, rho_i) rho_s rho_i drho_s drho_i.
struct RadialRule {
  std::vector<double> nodes;    ///< 1-D abscissae in (0, rho_hi]
  std::vector<double> weights;  ///< 1-D weights times rho (Jacobian folded in)
  double rho_hi = 0.0;
  RadialScheme scheme = RadialScheme::gauss;

  std::size_t size() const noexcept { return nodes.size() * nodes.size(); }
  RadialNode pair(std::size_t index) const noexcept {
    const std::size_t n = nodes.size();
    const std::size_t a = index / n;
    const std::size_t b = index % n;
    return {nodes[a], nodes[b], weights[a] * weights[b]};
  }
  std::vector<RadialNode> pairs() const;

  template <class F>
  double integrate(F&& g) const {
    double total = 0.0;
    for (std::size_t k = 0; k < size(); ++k) {
      const auto p = pair(k);
      total += p.weight * g(p.rho_s, p.rho_i);
    }
    return total;
  }
};

/// Gauss-Legendre nodes and weights on [-1, 1].
void gauss_legendre(int n, std::vector<double>& nodes, std::vector<double>& weights);

/// Gauss: exact for polynomial g of degree <= 2n-3 in each variable
/// (2n-1 for the product with the rho Jacobian). Trapezoid: nodes at
/// j*rho_hi/n, j = 1..n, end node half-weighted; the rho = 0 node is dropped
/// because its Jacobian weight vanishes.
RadialRule radial_rule(int n_nodes, double rho_hi, RadialScheme scheme = RadialScheme::gauss);

}  // namespace oamspdc
