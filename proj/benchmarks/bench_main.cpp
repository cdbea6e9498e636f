#include <benchmark/benchmark.h>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <vector>

#include "oamspdc/crystal_optics.hpp"
#include "oamspdc/detector.hpp"
#include "oamspdc/quadrature.hpp"
#include "oamspdc/spectrum.hpp"

using namespace oamspdc;

namespace {

SpdcConfig bbo(double length_um) {
  SpdcConfig cfg;
  cfg.crystal = {28.66 * std::numbers::pi / 180.0, length_um, 0.405, bbo_eimerl1987()};
  cfg.waist_um = 388.0;
  return cfg;
}

void BM_SquareGridTransform(benchmark::State& state) {
  const int m = static_cast<int>(state.range(0));
  const int n = 40;
  const AzimuthalTransform t(m, n);
  AzimuthalTransform::Workspace ws(t);
  std::vector<Complex> out(static_cast<std::size_t>(2 * n + 1) * (2 * n + 1));
  std::mt19937_64 rng(1);
  std::normal_distribution<double> g;
  std::vector<Complex> input(static_cast<std::size_t>(m) * m);
  for (auto& v : input) v = {g(rng), g(rng)};
  for (auto _ : state) {
    std::copy(input.begin(), input.end(), ws.grid().begin());
    t.apply(ws, out);
    benchmark::DoNotOptimize(out.data());
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(m) * m);
}
BENCHMARK(BM_SquareGridTransform)->Arg(256)->Arg(512);

// Rows: sparse band of the sheared lattice, as the pump envelope leaves it.
void BM_ShearedTransform(benchmark::State& state) {
  const int ms = 256, mr = 4096, n = 40;
  const auto n_rows = static_cast<std::size_t>(state.range(0));
  const ShearedAzimuthalTransform t(ms, mr, n);
  ShearedAzimuthalTransform::Workspace ws;
  std::vector<int> offsets(n_rows);
  for (std::size_t k = 0; k < n_rows; ++k) offsets[k] = static_cast<int>(k) - static_cast<int>(n_rows / 2);
  std::vector<Complex> out(static_cast<std::size_t>(2 * n + 1) * (2 * n + 1));
  std::mt19937_64 rng(2);
  std::normal_distribution<double> g;
  std::vector<Complex> input(n_rows * ms);
  for (auto& v : input) v = {g(rng), g(rng)};
  for (auto _ : state) {
    auto rows = ws.reserve_rows(t, n_rows);
    std::copy(input.begin(), input.end(), rows.begin());
    t.apply(ws, offsets, out);
    benchmark::DoNotOptimize(out.data());
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(n_rows * ms));
}
BENCHMARK(BM_ShearedTransform)->Arg(16)->Arg(64)->Arg(256);

void BM_Integrand(benchmark::State& state) {
  const auto cfg = bbo(15000.0);
  const auto k = optical_constants(cfg.crystal);
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> rho(0.0, 0.03), phi(-std::numbers::pi, std::numbers::pi);
  std::vector<std::pair<TransverseMomentum, TransverseMomentum>> pts(1024);
  for (auto& p : pts) p = {polar(rho(rng), phi(rng)), polar(rho(rng), phi(rng))};
  for (auto _ : state) {
    Complex acc{};
    for (const auto& [qs, qi] : pts)
      acc += pump_amplitude(qs, qi, cfg.waist_um) * phase_matching_amplitude(qs, qi, k, cfg.crystal.length_um);
    benchmark::DoNotOptimize(acc);
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(pts.size()));
}
BENCHMARK(BM_Integrand);

void BM_SmallSpectrum(benchmark::State& state) {
  auto cfg = bbo(3000.0);
  cfg.waist_um = 200.0;
  cfg.quadrature.rho_hi = 0.06;
  cfg.quadrature.radial_nodes = 24;
  cfg.quadrature.parallel.threads = 1;
  for (auto _ : state) benchmark::DoNotOptimize(joint_oam_spectrum(cfg, static_cast<int>(state.range(0))));
}
BENCHMARK(BM_SmallSpectrum)->Arg(6)->Arg(20)->Unit(benchmark::kMillisecond);

void BM_ForwardAndReconstruct(benchmark::State& state) {
  const int n = 40;
  SpectrumMatrix s(n);
  for (int l = -n; l <= n; ++l) s(l, -l) = std::exp(-0.01 * l * l);
  s = s.normalized_copy();
  const auto grid = AngularGrid::from_step(0.9);
  for (auto _ : state) {
    const auto f = forward_visibility(s, grid, InterferometerParams{}, NoiseModel{});
    benchmark::DoNotOptimize(reconstruct_symmetric(f.visibility, n));
  }
}
BENCHMARK(BM_ForwardAndReconstruct)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
