// fadof_sim: command-line front end for the FADOF / OPO simulation library.

#include <CLI11.hpp>
#include <json.hpp>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "fadofsim/atomic_filter.hpp"
#include "fadofsim/config.hpp"
#include "fadofsim/cv_noise.hpp"
#include "fadofsim/montecarlo.hpp"
#include "fadofsim/opo.hpp"
#include "fadofsim/pair_statistics.hpp"
#include "fadofsim/parallel.hpp"

namespace fs = std::filesystem;
using json = nlohmann::json;
using namespace fadofsim;

namespace {

constexpr int kExitDirty = 1;
constexpr int kExitConfig = 2;
constexpr int kExitError = 3;

struct Run {
  ExperimentConfig cfg;
  atomic::AtomicLineTable lines;
  fs::path out;
};

std::ofstream open_csv(const Run& r, const std::string& name, const std::string& columns) {
  std::ofstream out(r.out / name);
  if (!out) throw std::runtime_error("cannot write " + (r.out / name).string());
  out.precision(12);
  out << "# config_hash=" << r.cfg.hash << '\n' << columns << '\n';
  return out;
}

void write_spectrum(const Run& r, const std::string& name, const Spectrum& s, const std::string& column) {
  std::ofstream out(r.out / name);
  if (!out) throw std::runtime_error("cannot write " + (r.out / name).string());
  write_spectrum_csv(out, s, column, "config_hash=" + r.cfg.hash);
}

void write_json(const Run& r, const std::string& name, json j) {
  j["config_hash"] = r.cfg.hash;
  std::ofstream out(r.out / name);
  if (!out) throw std::runtime_error("cannot write " + (r.out / name).string());
  out << j.dump(2) << '\n';
}

std::string rounded(double v, int digits = 6) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*g", digits, v);
  return buf;
}

/// FWHM of a sampled peak by linear interpolation at half maximum.
std::optional<double> sampled_fwhm(const std::vector<double>& x, const std::vector<double>& y) {
  std::size_t peak = 0;
  for (std::size_t i = 1; i < y.size(); ++i)
    if (y[i] > y[peak]) peak = i;
  const double half = 0.5 * y[peak];
  std::size_t l = peak, r = peak;
  while (l > 0 && y[l] > half) --l;
  while (r + 1 < y.size() && y[r] > half) ++r;
  if (y[l] > half || y[r] > half || l == peak || r == peak) return std::nullopt;
  const double xl = x[l] + (half - y[l]) * (x[l + 1] - x[l]) / (y[l + 1] - y[l]);
  const double xr = x[r - 1] + (half - y[r - 1]) * (x[r] - x[r - 1]) / (y[r] - y[r - 1]);
  return xr - xl;
}

opo::CombOptions comb_options(const ExperimentConfig& c) {
  opo::CombOptions o;
  o.cutoff = c.optimize.comb_cutoff;
  return o;
}

struct Blocking {
  double peak_frequency = 0.0;
  opo::ModeComb comb;
  pairs::PairTransmissionMap map;
  FrequencyGrid grid;
  Spectrum fadof;
};

/// FADOF spectrum on the comb grid with the degenerate mode locked to the filter peak.
Blocking pair_blocking(const Run& r, double degenerate_frequency) {
  Blocking b;
  b.peak_frequency = degenerate_frequency;
  auto o = r.cfg.opo;
  o.degenerate_frequency = degenerate_frequency;
  b.comb = opo::mode_comb(o, comb_options(r.cfg));
  b.grid = pairs::comb_grid(b.comb, r.cfg.grid_step);
  b.fadof = atomic::fadof_transmission(b.grid, r.cfg.filter, r.lines);
  b.map = pairs::pair_transmission_map(b.comb, b.fadof);
  return b;
}

json blocking_json(const pairs::PairTransmissionMap& map) {
  double worst = 0.0;
  int worst_n = 0;
  for (std::size_t n = 1; n < map.entries.size(); ++n)
    if (map.entries[n].pair() > worst) worst = map.entries[n].pair(), worst_n = map.entries[n].index;
  const double eta0_sq = map.degenerate().pair();
  return {{"eta0", map.degenerate().signal},
          {"eta0_squared", eta0_sq},
          {"max_nondegenerate_pair_transmission", worst},
          {"max_nondegenerate_index", worst_n},
          {"suppression_ratio", worst > 0.0 ? eta0_sq / worst : INFINITY},
          {"figure_of_merit", pairs::figure_of_merit(map)},
          {"resonant_degenerate_fraction", pairs::degenerate_fraction(map, 0.0).resonant}};
}

int cmd_spectrum(const Run& r) {
  const auto& c = r.cfg;
  const auto grid = FrequencyGrid::centered(r.lines.reference_frequency, c.grid_half_width, c.grid_step);
  const auto fadof = atomic::fadof_transmission(grid, c.filter, r.lines);
  json metrics;
  bool clean = true;
  double f0 = r.lines.reference_frequency;
  try {
    const auto m = atomic::filter_metrics(fadof);
    metrics["peak_transmission"] = m.peak_transmission;
    metrics["peak_frequency_Hz"] = m.peak_frequency;
    metrics["peak_offset_from_line_center_Hz"] = m.peak_frequency - r.lines.reference_frequency;
    metrics["fwhm_Hz"] = m.fwhm;
    metrics["out_of_band_floor"] = m.floor;
    metrics["rejection_dB"] = m.rejection_db;
    metrics["boundary_peak"] = false;
    f0 = m.peak_frequency;
  } catch (const atomic::BoundaryPeakError& e) {
    metrics["boundary_peak"] = true;
    metrics["error"] = e.what();
    clean = false;
  }
  if (c.filter.center_frequency != 0.0) f0 = c.filter.center_frequency;
  metrics["degenerate_frequency_Hz"] = f0;
  metrics["extinction"] = c.filter.extinction;

  const auto mirror = atomic::mirror_transmission(grid, f0, c.filter, r.lines);
  auto o = c.opo;
  o.degenerate_frequency = f0;
  const auto opo_out = opo::output_spectrum(opo::mode_comb(o, comb_options(c)), grid);
  metrics["opo_spectrum_under_resolved"] = opo_out.under_resolved;
  if (opo_out.under_resolved) clean = false;

  write_spectrum(r, "fadof_spectrum.csv", fadof, "transmission");
  write_spectrum(r, "mirror_spectrum.csv", mirror, "transmission");
  write_spectrum(r, "fadof_times_mirror.csv", multiply(fadof, mirror), "transmission");
  write_spectrum(r, "opo_output_spectrum.csv", opo_out, "density_per_Hz");
  write_spectrum(r, "filtered_opo_spectrum.csv", multiply(fadof, opo_out), "density_per_Hz");
  if (c.hot_cell.enabled) write_spectrum(r, "hot_cell_spectrum.csv", atomic::hot_cell_transmission(grid, c.hot_cell.cell, r.lines), "transmission");

  if (clean) metrics["pair_blocking"] = blocking_json(pair_blocking(r, f0).map);
  metrics["valid"] = clean;
  write_json(r, "filter_metrics.json", metrics);
  return clean ? 0 : kExitDirty;
}

json g2_mode(const Run& r, bool on) {
  const auto& c = r.cfg;
  const auto comb = opo::mode_comb(c.opo, comb_options(c));
  const auto model = on ? opo::single_mode_model(c.opo) : opo::comb_model(c.opo, comb.pairs);
  const int w = static_cast<int>(std::lround(c.simulation.window / c.detector.bin_width));
  const int k = c.detector.decompose_offset().bins;
  const auto bins = opo::detected_histogram(model, c.detector, c.opo, {k - w, k + w});
  const std::string tag = on ? "on" : "off";

  auto csv = open_csv(r, "g2_" + tag + ".csv", "bin_index,delay_ns,true_counts,accidental_counts,expected_counts");
  std::vector<double> x, y;
  for (const auto& b : bins) {
    csv << b.index << ',' << b.delay * 1e9 << ',' << b.true_counts << ',' << b.accidental_counts << ',' << b.expected() << '\n';
    x.push_back(b.delay);
    y.push_back(b.true_counts);
  }
  json j{{"mode", tag}, {"bin_width_ns", c.detector.bin_width * 1e9}, {"clock_offset_ns", c.detector.clock_offset * 1e9},
         {"accidental_rate_per_bin_per_s", opo::accidental_rate(c.detector.bin_width, c.detector.singles_rate_1 + c.opo.pair_rate,
                                                                c.detector.singles_rate_2 + c.opo.pair_rate)}};
  if (on) {
    j["fwhm_ns"] = opo::g2_single_fwhm(c.opo) * 1e9;
    const auto h = sampled_fwhm(x, y);
    j["histogram_fwhm_ns"] = h ? json(*h * 1e9) : json(nullptr);
    std::size_t peak = 0;
    for (std::size_t i = 0; i < y.size(); ++i)
      if (y[i] > y[peak]) peak = i;
    double worst = 0.0;
    for (std::size_t i = 1; i + 1 < y.size(); ++i) {
      if (i + 1 >= peak && i <= peak + 1) continue;
      worst = std::max(worst, std::abs(y[i - 1] - 2.0 * y[i] + y[i + 1]) / y[i]);
    }
    j["max_bin_modulation"] = worst;
  } else {
    const auto delta = opo::g2_multi_comb(c.opo, comb.pairs);
    auto teeth = open_csv(r, "comb_teeth.csv", "n,delay_ns,weight");
    for (const auto& t : delta.teeth) teeth << t.index << ',' << t.delay * 1e9 << ',' << t.weight << '\n';
    double even = 0.0, odd = 0.0;
    for (const auto& b : bins)
      if (std::abs(b.index - k) <= 4) ((b.index - k) % 2 == 0 ? even : odd) += b.true_counts;
    j["mode_pairs"] = comb.pairs;
    j["teeth"] = delta.teeth.size();
    j["delta_comb_valid"] = delta.valid;
    j["comb_period_ns"] = c.opo.round_trip_time * 1e9;
    j["even_odd_contrast_near_zero"] = (even - odd) / (even + odd);
  }
  return j;
}

int cmd_g2(const Run& r, const std::string& mode) {
  json summary;
  bool clean = true;
  if (mode == "on" || mode == "both") summary["on"] = g2_mode(r, true);
  if (mode == "off" || mode == "both") {
    summary["off"] = g2_mode(r, false);
    clean = summary["off"]["delta_comb_valid"].get<bool>();
  }
  summary["valid"] = clean;
  write_json(r, "g2_summary.json", summary);
  return clean ? 0 : kExitDirty;
}

int cmd_simulate(const Run& r) {
  const auto& c = r.cfg;
  const auto& sim = c.simulation;
  auto det = c.detector;
  det.acquisition_time = sim.duration;
  json report{{"rng", mc::rng_algorithm}, {"seed", c.seed}, {"duration_s", sim.duration}};
  bool clean = true;
  if (sim.write_streams) fs::create_directories(r.out / "streams");

  const auto comb = opo::mode_comb(c.opo, comb_options(c));
  for (int on = 1; on >= 0; --on) {
    const std::string tag = on ? "on" : "off";
    const std::uint64_t seed = c.seed + (on ? 0 : 1);
    mc::PairSource src{on ? mc::filtered_delay_law(c.opo) : mc::unfiltered_delay_law(c.opo), c.opo.pair_rate};
    const auto stream = mc::generate_pair_events(src, det, sim.duration, seed);
    const auto h = mc::histogram(stream, det.bin_width, sim.window);
    const auto model = on ? opo::single_mode_model(c.opo) : opo::comb_model(c.opo, comb.pairs);
    const auto expected = opo::detected_histogram(model, det, c.opo, {h.first_index, h.last_index()});
    const auto chi = mc::chi_square(h, expected);

    auto csv = open_csv(r, "mc_histogram_" + tag + ".csv", "bin_index,delay_ns,counts,expected_counts");
    for (std::size_t i = 0; i < h.counts.size(); ++i)
      csv << expected[i].index << ',' << expected[i].delay * 1e9 << ',' << h.counts[i] << ',' << expected[i].expected() << '\n';
    if (sim.write_streams) mc::write_stream(r.out / "streams", "fadof_" + tag, stream, c.hash, c.opo.pair_rate, det);

    const bool pass = chi.p_value > 1e-3;
    clean = clean && pass;
    report[tag] = {{"seed", seed},
                   {"pairs_emitted", stream.pairs_emitted},
                   {"signal_events", stream.timestamps[0].size()},
                   {"idler_events", stream.timestamps[1].size()},
                   {"histogram_total", h.total},
                   {"chi_square", chi.statistic},
                   {"degrees_of_freedom", chi.degrees_of_freedom},
                   {"p_value", chi.p_value},
                   {"pass", pass}};
  }
  report["valid"] = clean;
  write_json(r, "mc_report.json", report);

  json purity{{"enabled", c.hot_cell.enabled}};
  if (c.hot_cell.enabled) {
    auto pdet = det;
    pdet.singles_rate_1 = pdet.singles_rate_2 = sim.background_rate;
    mc::PairSource filtered{mc::filtered_delay_law(c.opo), c.opo.pair_rate,
                            {{"resonant", 1.0 - sim.contamination, 1.0, 1.0}, {"off_resonant", sim.contamination, 1.0, 1.0}}};
    auto blocked = filtered;
    blocked.classes[0].signal_transmission = blocked.classes[0].idler_transmission = 0.0;
    const auto a = mc::generate_pair_events(filtered, pdet, sim.duration, c.seed + 2);
    const auto b = mc::generate_pair_events(blocked, pdet, sim.duration, c.seed + 2);
    const double cf = static_cast<double>(mc::coincidences_in_window(mc::histogram(a, det.bin_width, sim.window), sim.purity_window));
    const double chc = static_cast<double>(mc::coincidences_in_window(mc::histogram(b, det.bin_width, sim.window), sim.purity_window));

    const auto grid = FrequencyGrid::centered(r.lines.reference_frequency, c.grid_half_width, c.grid_step);
    const auto m = atomic::filter_metrics(atomic::fadof_transmission(grid, c.filter, r.lines));
    const auto blocking = pair_blocking(r, c.filter.center_frequency != 0.0 ? c.filter.center_frequency : m.peak_frequency);
    const auto hot = atomic::hot_cell_transmission(blocking.grid, c.hot_cell.cell, r.lines);
    const auto through = pairs::pair_transmission_map(blocking.comb, multiply(blocking.fadof, hot));
    const double resonant = pairs::degenerate_fraction(blocking.map, 0.0).resonant;
    const auto result = pairs::purity_result(cf, chc, resonant);

    purity["coincidence_window_ns"] = sim.purity_window * 1e9;
    purity["c_F"] = cf;
    purity["c_HC"] = chc;
    purity["spectral_purity"] = result.spectral_purity;
    purity["spectral_purity_binomial_sigma"] = std::sqrt(std::max(0.0, result.spectral_purity * (1.0 - result.spectral_purity) / cf));
    purity["configured_contamination"] = sim.contamination;
    purity["resonant_degenerate_fraction"] = result.resonant_fraction;
    purity["overall_degenerate_fraction"] = result.overall_fraction;
    purity["model_hot_cell_leakage"] = pairs::hot_cell_leakage(blocking.map, through);
  }
  write_json(r, "purity.json", purity);
  return clean ? 0 : kExitDirty;
}

int cmd_optimize(const Run& r) {
  const auto& c = r.cfg;
  pairs::OptimizeOptions opt;
  opt.grid_step = c.optimize.grid_step;
  opt.peak_search_half_width = c.grid_half_width;
  opt.comb = comb_options(c);
  const auto result = pairs::optimize_filter(c.optimize.fields, c.optimize.temperatures, c.filter, c.opo, r.lines, opt);

  auto csv = open_csv(r, "fom_surface.csv", "B_T,temperature_K,fom,eta0,sum_nondegenerate,peak_offset_GHz,valid");
  for (const auto& p : result.surface)
    csv << p.magnetic_field << ',' << p.temperature << ',' << p.fom << ',' << p.eta0 << ',' << p.sum_nondegenerate << ','
        << (p.valid ? (p.peak_frequency - r.lines.reference_frequency) * 1e-9 : NAN) << ',' << (p.valid ? 1 : 0) << '\n';

  const auto& f = c.optimize.fields;
  const auto& t = c.optimize.temperatures;
  const auto& best = result.best;
  const bool interior = f.size() > 2 && t.size() > 2 && best.magnetic_field != f.front() && best.magnetic_field != f.back() &&
                        best.temperature != t.front() && best.temperature != t.back();
  json j{{"B_T", best.magnetic_field},
         {"temperature_K", best.temperature},
         {"fom", best.fom},
         {"eta0", best.eta0},
         {"sum_nondegenerate", best.sum_nondegenerate},
         {"peak_offset_GHz", (best.peak_frequency - r.lines.reference_frequency) * 1e-9},
         {"interior_maximum", interior},
         {"points", result.surface.size()},
         {"warnings", result.warnings}};
  for (const auto& w : result.warnings) std::cerr << "warning: " << w << '\n';
  write_json(r, "fom_argmax.json", j);
  return 0;
}

int cmd_noise(const Run& r) {
  const auto& c = r.cfg;
  const auto& s = c.noise_sweep;
  std::vector<cv::NoisePoint> points;
  auto csv = open_csv(r, "noise_sweep.csv", "t_nd,power_proxy_W,variance,variance_exact");
  for (double tnd : s.attenuations) {
    auto m = c.noise;
    m.attenuation = std::sqrt(tnd);
    const double v = cv::quadrature_variance_avg(m);
    const double power = tnd * s.probe_power;
    csv << tnd << ',' << power << ',' << v << ',' << cv::quadrature_variance_avg(m, cv::Expansion::exact) << '\n';
    points.push_back({power, v});
  }
  const auto fit = cv::noise_vs_power_fit(points);
  const double p_extrap = cv::power_for_flux(s.extrapolation_flux, s.wavelength);
  json loss = json::array();
  for (const auto& [sq, tr] : s.loss_table)
    loss.push_back({{"squeezing_in_dB", sq}, {"transmission", tr}, {"squeezing_out_dB", cv::squeezing_through_loss(sq, tr)},
                    {"squeezing_out_rounded_dB", std::stod(rounded(cv::squeezing_through_loss(sq, tr), 2))}});
  const double linear_at = fit.linear * p_extrap;
  json j{{"fit", {{"shot_noise", fit.shot_noise}, {"linear_per_W", fit.linear}, {"residuals", fit.residuals}}},
         {"probe_power_at_unit_attenuation_W", s.probe_power},
         {"probe_flux_at_unit_attenuation_per_s", cv::photon_flux(s.probe_power, s.wavelength)},
         {"extrapolation",
          {{"photon_flux_per_s", s.extrapolation_flux},
           {"power_W", p_extrap},
           {"power_dBm", cv::to_dbm(p_extrap)},
           {"filter_noise_relative_to_shot_noise", linear_at / fit.shot_noise},
           {"filter_noise_relative_to_shot_noise_dB", linear_at > 0.0 ? json(fit.excess_db(p_extrap)) : json(nullptr)},
           {"note", "formula-driven illustration from the fitted coefficients"}}},
         {"loss_table", loss}};
  write_json(r, "noise_fit.json", j);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"FADOF-filtered OPO simulation: spectra, correlation histograms, Monte Carlo, filter tuning and noise budgets"};
  app.require_subcommand(1);
  std::string config_path, out_dir;
  std::optional<std::uint64_t> seed;
  std::size_t threads = 1;
  app.add_option("--config", config_path, "Configuration file (sectioned key = value); built-in defaults if omitted");
  app.add_option("--out", out_dir, "Output directory (overrides [output] directory)");
  app.add_option("--seed", seed, "Random seed (overrides [output] seed)");
  app.add_option("--threads", threads, "Worker threads")->check(CLI::PositiveNumber);
  app.fallthrough();

  auto* spectrum = app.add_subcommand("spectrum", "FADOF, mirror and OPO spectra plus filter metrics");
  auto* g2 = app.add_subcommand("g2", "Analytic detected coincidence histograms");
  std::string mode = "both";
  g2->add_option("--mode", mode, "on (filtered), off (unfiltered) or both")->check(CLI::IsMember({"on", "off", "both"}));
  auto* simulate = app.add_subcommand("simulate", "Monte Carlo streams, histograms, chi-square report and purity");
  auto* optimize = app.add_subcommand("optimize", "Grid search of the pair-blocking figure of merit over B and T");
  auto* noise = app.add_subcommand("noise", "Quadrature-noise sweep, constant+linear fit and loss table");

  CLI11_PARSE(app, argc, argv);

  Run run;
  try {
    auto kv = config_path.empty() ? KeyValueConfig::parse(default_config_text(), "<defaults>") : KeyValueConfig::load(config_path);
    if (seed) kv.set("output", "seed", std::to_string(*seed));
    run.cfg = ExperimentConfig::from(kv, config_path.empty() ? fs::path{} : fs::path(config_path).parent_path());
    run.lines = atomic::AtomicLineTable::load(run.cfg.line_data);
  } catch (const std::exception& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  }
  run.out = out_dir.empty() ? run.cfg.output_dir : fs::path(out_dir);
  set_thread_count(threads);

  try {
    fs::create_directories(run.out);
    int status = 0;
    if (*spectrum) status = cmd_spectrum(run);
    if (*g2) status = cmd_g2(run, mode);
    if (*simulate) status = cmd_simulate(run);
    if (*optimize) status = cmd_optimize(run);
    if (*noise) status = cmd_noise(run);
    if (status != 0) std::cerr << "validity flags set; see the JSON outputs in " << run.out << '\n';
    return status;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitError;
  }
}
