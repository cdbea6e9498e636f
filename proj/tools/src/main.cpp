// oamspdc: command-line driver for the joint OAM spectrum, parameter sweeps
// and the interferometric detector pipeline.
//
// Exit status: 0 success, 2 invalid configuration or arguments (including an
// angular step too coarse for the mode cutoff), 3 numerical failure, 1 I/O or
// other unexpected errors.

#include <chrono>
#include <iostream>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include <CLI/CLI.hpp>
#include <nlohmann/json.hpp>

#include "artifacts.hpp"
#include "oamspdc/errors.hpp"
#include "run_config.hpp"

#ifndef OAMSPDC_VERSION
#define OAMSPDC_VERSION "unknown"
#endif

namespace {

using namespace oamspdc;
using namespace oamspdc::cli;
using nlohmann::json;

constexpr int kExitOk = 0;
constexpr int kExitOther = 1;
constexpr int kExitConfig = 2;
constexpr int kExitNumerical = 3;

struct CommonArgs {
  std::string config;
  std::optional<std::string> out;
  std::optional<unsigned> threads;
  std::optional<std::uint64_t> seed;
  std::optional<int> n_max;
  std::optional<double> clip;
};

void add_common(CLI::App* cmd, CommonArgs& a) {
  cmd->add_option("--config", a.config, "Run configuration (JSON)")->required()->check(CLI::ExistingFile);
  cmd->add_option("--out", a.out, "Output directory (overrides output_dir)");
  cmd->add_option("--threads", a.threads, "Worker threads; 0 uses every hardware thread");
  cmd->add_option("--seed", a.seed, "Noise seed (overrides seed)");
  cmd->add_option("--n-max", a.n_max, "Mode cutoff N (overrides n_max)")->check(CLI::NonNegativeNumber);
  cmd->add_option("--clip", a.clip, "Clip ratio rho_0 / sigma_s (overrides clip.ratio)");
}

RunConfig load(const CommonArgs& a) {
  RunConfig rc = load_run_config(a.config);
  if (a.out) rc.output_dir = *a.out;
  if (a.threads) rc.threads = *a.threads;
  if (a.seed) rc.seed = rc.noise.seed = *a.seed;
  if (a.n_max) rc.n_max = *a.n_max;
  if (a.clip) {
    if (!(*a.clip > 0.0)) throw ConfigError("clip.ratio", "clip ratio must be > 0");
    rc.spdc.clip_ratio = *a.clip;
  }
  rc.apply_threads();
  return rc;
}

class Run {
 public:
  Run(std::string command, const RunConfig& rc)
      : command_(std::move(command)), rc_(rc), out_(rc.output_dir), start_(std::chrono::steady_clock::now()) {}

  OutputSet& out() { return out_; }
  void note(json quadrature) { quadrature_ = std::move(quadrature); }
  void warn(const std::vector<std::string>& w) { warnings_.insert(warnings_.end(), w.begin(), w.end()); }

  void finish() {
    for (const auto& w : warnings_) std::cerr << "warning: " << w << "\n";
    const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    json manifest = {{"schema_version", kSchemaVersion},
                     {"tool", "oamspdc"},
                     {"version", OAMSPDC_VERSION},
                     {"command", command_},
                     {"config", rc_.to_json()},
                     {"seed", rc_.seed},
                     {"threads", rc_.threads},
                     {"quadrature", quadrature_},
                     {"warnings", warnings_},
                     {"wall_time_s", wall},
                     {"outputs", out_.digests()}};
    out_.write_json("manifest.json", manifest);
  }

 private:
  std::string command_;
  const RunConfig& rc_;
  OutputSet out_;
  std::chrono::steady_clock::time_point start_;
  json quadrature_ = nullptr;
  std::vector<std::string> warnings_;
};

struct SpectrumRun {
  SpectrumMatrix spectrum;
  QuadratureReport report;
  std::string kind;
};

SpectrumRun compute_spectrum(const RunConfig& rc, ModeSelection modes) {
  if (modes == ModeSelection::p0) {
    auto r = mode_projected_spectrum(rc.spdc, rc.n_max);
    return {std::move(r.spectrum), std::move(r.report), "p0_projected_oam_spectrum"};
  }
  auto r = joint_oam_spectrum(rc.spdc, rc.n_max);
  return {std::move(r.spectrum), std::move(r.report), "joint_oam_spectrum"};
}

int cmd_spectrum(const CommonArgs& a, const std::optional<std::string>& p_modes) {
  RunConfig rc = load(a);
  if (p_modes) rc.spectrum_modes = parse_mode_selection(*p_modes, "--p-modes");
  Run run("spectrum", rc);
  const auto s = compute_spectrum(rc, rc.spectrum_modes);
  run.out().write("spectrum.csv", spectrum_csv(s.spectrum));
  auto j = spectrum_json(s.spectrum, s.kind);
  j["quadrature"] = quadrature_json(s.report);
  run.out().write_json("spectrum.json", j);
  run.note(quadrature_json(s.report));
  run.warn(s.report.warnings);
  run.finish();
  std::cout << "nonconservation_percent " << format_double(nonconservation(s.spectrum)) << "\n";
  return kExitOk;
}

int cmd_sweep(const CommonArgs& a, const std::optional<std::string>& axis, const std::optional<std::vector<double>>& values,
              const std::optional<std::string>& p_modes) {
  RunConfig rc = load(a);
  SweepSpec sw = rc.sweep.value_or(SweepSpec{});
  if (axis) sw.axis = parse_sweep_axis(*axis, "--axis");
  if (p_modes) sw.modes = parse_mode_selection(*p_modes, "--p-modes");
  if (values) {
    sw.values.clear();
    for (double v : *values) sw.values.push_back(sw.axis == SweepAxis::thickness ? v * 1000.0 : v * std::numbers::pi / 180.0);
  }
  if (sw.values.empty()) throw ConfigError("sweep.values", "at least one value is required");
  rc.sweep = sw;

  Run run("sweep", rc);
  SweepOptions opts;
  opts.modes = sw.modes;
  opts.continue_on_error = true;
  const auto points = sweep(rc.spdc, sw.axis, sw.values, rc.n_max, opts);

  std::string csv = "axis_value,nonconservation_percent,error\n";
  json reports = json::array();
  bool failed = false;
  for (const auto& p : points) {
    const double shown = sw.axis == SweepAxis::thickness ? p.value / 1000.0 : p.value * 180.0 / std::numbers::pi;
    csv += format_double(shown) + ",";
    if (p.nonconservation_percent) csv += format_double(*p.nonconservation_percent);
    std::string err = p.error;
    for (char& c : err)
      if (c == ',' || c == '\n') c = ';';
    csv += "," + err + "\n";
    if (!p.error.empty()) {
      failed = true;
      std::cerr << "error: sweep point " << format_double(shown) << ": " << p.error << "\n";
    }
    reports.push_back({{"axis_value", shown}, {"quadrature", quadrature_json(p.report)}});
    run.warn(p.report.warnings);
  }
  run.out().write("sweep.csv", csv);
  run.note({{"axis", to_string(sw.axis)}, {"axis_unit", sw.axis == SweepAxis::thickness ? "mm" : "deg"},
            {"p_modes", to_string(sw.modes)}, {"points", reports}});
  run.finish();
  return failed ? kExitNumerical : kExitOk;
}

int cmd_detector(const CommonArgs& a, const std::optional<double>& step, bool four_shot_flag) {
  RunConfig rc = load(a);
  auto& d = rc.detector;
  if (step) {
    if (!(*step > 0.0)) throw ConfigError("detector.step_deg", "angular step must be > 0");
    d.step_deg = *step;
  }
  if (four_shot_flag) d.four_shot = true;

  AngularGrid grid;
  try {
    grid = AngularGrid::from_step(d.step_deg);
  } catch (const ConfigError& e) {
    throw ConfigError("detector.step_deg", e.what());
  }
  std::optional<SpectrumMatrix> given;
  if (d.input_spectrum_csv) {
    given = parse_spectrum_csv(read_text(*d.input_spectrum_csv, "detector.input_spectrum_csv"),
                               "detector.input_spectrum_csv");
  }
  check_nyquist(grid, given ? given->n_max() : rc.n_max);

  Run run("detector", rc);
  SpectrumMatrix input;
  if (given) {
    input = std::move(*given);
  } else {
    auto s = compute_spectrum(rc, rc.spectrum_modes);
    run.note(quadrature_json(s.report));
    run.warn(s.report.warnings);
    input = std::move(s.spectrum);
  }
  const int n = input.n_max();

  ParallelOptions par;
  par.threads = rc.threads;
  auto& o = run.out();
  o.write("input_spectrum.csv", spectrum_csv(input));

  Reconstruction rec;
  json surfaces = json::array();
  auto emit = [&](const ForwardSurfaces& f, const VisibilitySurface& corrected, const std::string& suffix,
                  const char* delta_c, const char* delta_d) {
    o.write("coincidence_delta_" + std::string(delta_c) + ".csv", surface_csv(f.rate_c, "R"));
    o.write("coincidence_delta_" + std::string(delta_d) + ".csv", surface_csv(f.rate_d, "R"));
    o.write("visibility" + suffix + ".csv", surface_csv(corrected, "V"));
    o.write_json("visibility" + suffix + ".json", surface_json(corrected, "visibility" + suffix));
  };
  if (d.four_shot) {
    const auto four = forward_four_shot(input, grid, d.params, rc.noise, par);
    const auto vc = polarization_correct(four.cosine.visibility, d.params.psi_s, d.params.psi_i);
    const auto vs = polarization_correct(four.sine.visibility, d.params.psi_s, d.params.psi_i);
    emit(four.cosine, vc, "", "0", "pi");
    emit(four.sine, vs, "_sine", "3pi_2", "pi_2");
    rec = reconstruct_asymmetric(vc, vs, n);
  } else {
    ForwardOptions fo;
    fo.method = d.extrema;
    fo.delta_c = d.params.delta;
    fo.delta_d = d.params.delta + std::numbers::pi;
    fo.scan_steps = d.scan_steps;
    fo.parallel = par;
    const auto f = forward_visibility(input, grid, d.params, rc.noise, fo);
    const auto v = polarization_correct(f.visibility, d.params.psi_s, d.params.psi_i);
    emit(f, v, "", d.extrema == ExtremaMethod::two_shot ? "c" : "scan_max", d.extrema == ExtremaMethod::two_shot ? "d" : "scan_min");
    rec = reconstruct_symmetric(v, n);
  }
  o.write("reconstructed_spectrum.csv", spectrum_csv(rec.spectrum));

  json r2 = nullptr;
  try {
    r2 = r_squared(rec.spectrum, input);
  } catch (const NumericalError& e) {
    rec.warnings.emplace_back(std::string("R^2 not reported: ") + e.what());
  }
  double max_err = 0.0;
  for (std::size_t i = 0; i < rec.unclamped.size(); ++i)
    max_err = std::max(max_err, std::abs(rec.unclamped[i] - input.values.data()[i]));
  o.write_json("report.json", {{"schema_version", kSchemaVersion},
                               {"n_max", n},
                               {"step_deg", d.step_deg},
                               {"four_shot", d.four_shot},
                               {"r_squared_percent", r2},
                               {"max_entry_error", max_err},
                               {"clamped_magnitude", rec.clamped_magnitude},
                               {"excluded_points", rec.excluded_points},
                               {"input_nonconservation_percent", nonconservation(input)},
                               {"reconstructed_nonconservation_percent", nonconservation(rec.spectrum)},
                               {"warnings", rec.warnings}});
  run.warn(rec.warnings);
  run.finish();
  if (!r2.is_null()) std::cout << "r_squared_percent " << format_double(r2.get<double>()) << "\n";
  return kExitOk;
}

struct ReconstructArgs {
  std::string visibility;
  std::optional<std::string> sine;
  std::optional<std::string> reference;
  int n_max = 0;
  std::string out = "out";
};

int cmd_reconstruct(const ReconstructArgs& a) {
  const auto vc = parse_surface_csv(read_text(a.visibility, "--visibility"), "--visibility");
  Reconstruction rec;
  if (a.sine) {
    rec = reconstruct_asymmetric(vc, parse_surface_csv(read_text(*a.sine, "--sine"), "--sine"), a.n_max);
  } else {
    rec = reconstruct_symmetric(vc, a.n_max);
  }
  OutputSet o(a.out);
  o.write("reconstructed_spectrum.csv", spectrum_csv(rec.spectrum));
  json report = {{"schema_version", kSchemaVersion},
                 {"n_max", a.n_max},
                 {"step_deg", vc.grid.step_deg},
                 {"four_shot", a.sine.has_value()},
                 {"clamped_magnitude", rec.clamped_magnitude},
                 {"excluded_points", rec.excluded_points},
                 {"warnings", rec.warnings}};
  if (a.reference) {
    const auto ref = parse_spectrum_csv(read_text(*a.reference, "--reference"), "--reference");
    if (ref.n_max() != a.n_max) throw ConfigError("--reference", "mode cutoff differs from --n-max");
    report["r_squared_percent"] = r_squared(rec.spectrum, ref);
  }
  o.write_json("report.json", report);
  json manifest = {{"schema_version", kSchemaVersion}, {"tool", "oamspdc"}, {"version", OAMSPDC_VERSION},
                   {"command", "reconstruct"},        {"outputs", o.digests()}};
  o.write_json("manifest.json", manifest);
  for (const auto& w : rec.warnings) std::cerr << "warning: " << w << "\n";
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Joint OAM spectrum of Type-I SPDC photon pairs and its interferometric detection"};
  app.set_version_flag("--version", OAMSPDC_VERSION);
  app.require_subcommand(1);

  CommonArgs spectrum_args, sweep_args, detector_args;
  std::optional<std::string> spectrum_modes, sweep_axis, sweep_modes;
  std::optional<std::vector<double>> sweep_values;
  std::optional<double> detector_step;
  bool four_shot = false;
  ReconstructArgs rec_args;

  auto* spectrum = app.add_subcommand("spectrum", "Joint OAM spectrum P(l_s, l_i)");
  add_common(spectrum, spectrum_args);
  spectrum->add_option("--p-modes", spectrum_modes, "Radial modes: all (joint spectrum) or p0");

  auto* sweep_cmd = app.add_subcommand("sweep", "Non-conservation over crystal thickness or pump angle");
  add_common(sweep_cmd, sweep_args);
  sweep_cmd->add_option("--axis", sweep_axis, "thickness (values in mm) or angle (values in degrees)");
  sweep_cmd->add_option("--values", sweep_values, "Comma-separated sweep values")->delimiter(',');
  sweep_cmd->add_option("--p-modes", sweep_modes, "Radial modes: all or p0");

  auto* detector = app.add_subcommand("detector", "Forward visibility model and Fourier reconstruction");
  add_common(detector, detector_args);
  detector->add_option("--step", detector_step, "Angular step in degrees; must divide 180");
  detector->add_flag("--four-shot", four_shot, "Add the sine-quadrature surface for asymmetric spectra");

  auto* reconstruct = app.add_subcommand("reconstruct", "Reconstruct a spectrum from visibility CSV files");
  reconstruct->add_option("--visibility", rec_args.visibility, "Cosine visibility surface CSV")
      ->required()
      ->check(CLI::ExistingFile);
  reconstruct->add_option("--sine", rec_args.sine, "Sine visibility surface CSV (four-shot)")->check(CLI::ExistingFile);
  reconstruct->add_option("--n-max", rec_args.n_max, "Mode cutoff N")->required()->check(CLI::NonNegativeNumber);
  reconstruct->add_option("--reference", rec_args.reference, "Spectrum CSV to score with R^2")
      ->check(CLI::ExistingFile);
  reconstruct->add_option("--out", rec_args.out, "Output directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitConfig;
  }

  try {
    if (*spectrum) return cmd_spectrum(spectrum_args, spectrum_modes);
    if (*sweep_cmd) return cmd_sweep(sweep_args, sweep_axis, sweep_values, sweep_modes);
    if (*detector) return cmd_detector(detector_args, detector_step, four_shot);
    return cmd_reconstruct(rec_args);
  } catch (const NyquistError& e) {
    std::cerr << "error: angular step: " << e.what() << "\n";
    return kExitConfig;
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const DomainError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return kExitNumerical;
  } catch (const AliasingError& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return kExitNumerical;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitOther;
  }
}
