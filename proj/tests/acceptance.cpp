// Acceptance suite: prints one PASS/FAIL line per criterion with the computed
// values and exits nonzero if any criterion fails.

#include <json.hpp>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <numbers>
#include <random>
#include <sstream>
#include <string>
#include <sys/wait.h>
#include <unistd.h>
#include <vector>

#include "fadofsim/cv_noise.hpp"
#include "fadofsim/faddeeva.hpp"
#include "fadofsim/opo.hpp"
#include "fadofsim/pair_statistics.hpp"
#include "oracles.hpp"

namespace fs = std::filesystem;
using json = nlohmann::json;
using namespace fadofsim;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

struct Criterion {
  int id;
  std::string title;
  bool pass = true;
  std::vector<std::string> notes;

  void check(bool ok, const std::string& note) {
    pass = pass && ok;
    notes.push_back(std::string(ok ? "" : "MISS ") + note);
  }
};

fs::path work_dir;

struct CliRun {
  int exit_code = -1;
  double seconds = 0.0;
};

CliRun cli(const std::string& args, const fs::path& out) {
  const std::string cmd = std::string(FADOFSIM_CLI_PATH) + " --out " + out.string() + " " + args + " > " +
                          (work_dir / "cli.log").string() + " 2>&1";
  const auto t0 = Clock::now();
  const int status = std::system(cmd.c_str());
  return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, seconds_since(t0)};
}

json read_json(const fs::path& p) {
  std::ifstream in(p);
  if (!in) throw std::runtime_error("missing " + p.string());
  return json::parse(in);
}

std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

void g2_envelope(Criterion& c) {
  const auto run = cli("g2 --mode on", work_dir / "c1");
  c.check(run.exit_code == 0, "exit " + std::to_string(run.exit_code));
  const auto s = read_json(work_dir / "c1" / "g2_summary.json");
  const double fwhm = s["on"]["fwhm_ns"].get<double>();
  const double target = 2.0 * std::log(2.0) / (2.0 * std::numbers::pi * 8.4e6) * 1e9;
  c.check(std::abs(fwhm - target) <= 0.5, "CLI fwhm " + fmt("%.3f", fwhm) + " ns vs 2ln2/(g1+g2) " + fmt("%.3f", target) + " ns (+/-0.5)");
  c.check(std::abs(fwhm - 26.3) < 0.05, "g2_single FWHM rounds to " + fmt("%.1f", fwhm) + " ns (26.3)");
  c.check(run.seconds < 1.0, "runtime " + fmt("%.2f", run.seconds) + " s (<1)");
}

void comb_consistency(Criterion& c) {
  opo::OpoConfig o;
  const double mismatch = std::abs(1.0 / o.round_trip_time - o.free_spectral_range) / o.free_spectral_range;
  c.check(mismatch <= 0.01, "|1/tau - FSR|/FSR = " + fmt("%.4f", mismatch) + " (<=0.01)");

  const auto run = cli("g2 --mode both", work_dir / "c2");
  c.check(run.exit_code == 0, "exit " + std::to_string(run.exit_code));
  const auto s = read_json(work_dir / "c2" / "g2_summary.json");
  const double modulation = s["on"]["max_bin_modulation"].get<double>();
  c.check(modulation < 0.01, "FADOF-on max bin-to-bin modulation " + fmt("%.2e", modulation) + " (<0.01)");

  const auto comb = opo::mode_comb(o);
  const auto delta = opo::g2_multi_comb(o, comb.pairs);
  double worst = 0.0;
  for (const auto& t : delta.teeth) worst = std::max(worst, std::abs(t.delay - t.index * o.round_trip_time));
  c.check(worst < 1e-18, "teeth at n*tau (max offset " + fmt("%.1e", worst) + " s)");

  auto contrast = [&](double delta_offset) {
    opo::DetectorConfig d;
    d.clock_offset = delta_offset;
    const auto bins = opo::detected_histogram(opo::comb_model(o, comb.pairs), d, o, {-10, 10});
    const int k = d.decompose_offset().bins;
    double even = 0.0, odd = 0.0;
    for (const auto& b : bins)
      if (std::abs(b.index - k) <= 4) ((b.index - k) % 2 == 0 ? even : odd) += b.true_counts;
    return (even - odd) / (even + odd);
  };
  const double c0 = contrast(0.0), c5 = contrast(0.5e-9);
  c.check(c0 > 0.9 && std::abs(c5) < 0.1,
          "FADOF-off even/odd contrast " + fmt("%.3f", c0) + " at delta=0, " + fmt("%.3f", c5) + " at delta=0.5 ns");
  c.check(run.seconds < 1.0, "runtime " + fmt("%.2f", run.seconds) + " s (<1)");
}

void dirichlet_vs_delta(Criterion& c) {
  const auto t0 = Clock::now();
  opo::OpoConfig o;
  const int pairs = 200;
  const double tau = o.round_trip_time;
  const double sub = tau / (2 * pairs + 1);
  double worst = 0.0;
  int checked = 0;
  for (const auto& tooth : opo::g2_multi_comb(o, pairs).teeth) {
    if (std::abs(tooth.index) > 20) continue;
    double area = 0.0;
    const double a = tooth.delay - 0.5 * tau;
    for (int j = 0; j < 2 * pairs + 1; ++j)
      area += oracle::integrate([&](double t) { return opo::g2_multi_exact(t, o, pairs); }, a + j * sub, a + (j + 1) * sub, 1e-10);
    worst = std::max(worst, std::abs(area / tau / tooth.weight - 1.0));
    ++checked;
  }
  const double dt = seconds_since(t0);
  c.check(checked == 41, std::to_string(checked) + " teeth with |n|<=20");
  c.check(worst < 0.01, "max relative tooth-weight error " + fmt("%.2e", worst) + " (<0.01)");
  c.check(dt < 10.0, "runtime " + fmt("%.2f", dt) + " s (<10)");
}

void montecarlo_equivalence(Criterion& c) {
  const auto a = cli("--seed 2024 simulate", work_dir / "c4a");
  const auto b = cli("--seed 2024 simulate", work_dir / "c4b");
  c.check(a.exit_code == 0, "exit " + std::to_string(a.exit_code));
  const auto r = read_json(work_dir / "c4a" / "mc_report.json");
  for (const char* mode : {"on", "off"}) {
    const double p = r[mode]["p_value"].get<double>();
    const auto pairs = r[mode]["pairs_emitted"].get<std::uint64_t>();
    c.check(p > 1e-3, std::string(mode) + ": " + std::to_string(pairs) + " pairs, chi2 " + fmt("%.1f", r[mode]["chi_square"].get<double>()) +
                          "/" + std::to_string(r[mode]["degrees_of_freedom"].get<int>()) + " dof, p " + fmt("%.3f", p));
    c.check(std::abs(static_cast<double>(pairs) - 1e6) < 5e3, std::string(mode) + " pair count near 1e6");
  }
  bool same = read_file(work_dir / "c4a" / "mc_report.json") == read_file(work_dir / "c4b" / "mc_report.json");
  for (const char* f : {"fadof_on_signal.u64", "fadof_on_idler.u64", "fadof_off_signal.u64", "fadof_off_idler.u64"})
    same = same && read_file(work_dir / "c4a" / "streams" / f) == read_file(work_dir / "c4b" / "streams" / f);
  c.check(same, "identical streams and report for a repeated seed");
  c.check(a.seconds < 60.0, "runtime " + fmt("%.1f", a.seconds) + " s (<60)");
}

void purity_arithmetic(Criterion& c) {
  const double ps = pairs::spectral_purity(100.0, 2.0);
  c.check(ps == 0.98, "spectral_purity(c_F=100, c_HC=2) = " + fmt("%.17g", ps));
  const auto r = pairs::purity_result(100.0, 2.0, 0.98);
  c.check(std::abs(r.overall_fraction - 0.9604) < 1e-12 && std::round(r.overall_fraction * 100.0) == 96.0,
          "overall fraction " + fmt("%.6f", r.overall_fraction) + " reported as " + fmt("%.2f", r.overall_fraction));
}

void squeezing_loss(Criterion& c) {
  const double s = cv::squeezing_through_loss(6.0, 0.70);
  c.check(std::abs(s - 3.22) <= 0.01, "(6 dB, T=0.70) -> " + fmt("%.4f", s) + " dB");
  std::mt19937_64 gen(6);
  std::uniform_real_distribution<double> su(0.0, 20.0), tu(0.0, 1.0);
  int fixed = 0, monotone = 0, composed = 0;
  for (int i = 0; i < 10000; ++i) {
    const double sin = su(gen), t1 = tu(gen), t2 = tu(gen);
    fixed += std::abs(cv::squeezing_through_loss(0.0, t1)) <= 1e-12;
    monotone += cv::squeezing_through_loss(sin, std::min(t1, t2)) <= cv::squeezing_through_loss(sin, std::max(t1, t2)) + 1e-12;
    composed += std::abs(cv::squeezing_through_loss(cv::squeezing_through_loss(sin, t1), t2) - cv::squeezing_through_loss(sin, t1 * t2)) <= 1e-9;
  }
  c.check(fixed == 10000 && monotone == 10000 && composed == 10000,
          "1e4 samples: fixed point " + std::to_string(fixed) + ", monotone " + std::to_string(monotone) + ", composition " +
              std::to_string(composed));
}

void scaling_identity(Criterion& c) {
  std::mt19937_64 gen(7);
  std::uniform_real_distribution<double> u(-1.0, 1.0), tu(0.01, 1.0);
  double worst = 0.0;
  for (int i = 0; i < 10000; ++i) {
    cv::NoiseModel m;
    do m.transmission = {u(gen), u(gen)};
    while (std::abs(m.transmission) > 1.0);
    m.transmission_noise = {0.1 * u(gen), 0.1 * u(gen)};
    m.probe = {5.0 * u(gen), 5.0 * u(gen)};
    m.probe_noise = {0.1 * u(gen), 0.1 * u(gen)};
    for (auto e : {cv::Expansion::first_order, cv::Expansion::exact}) {
      const double base = cv::quadrature_variance_avg(m, e) - 1.0;
      auto scaled = m;
      scaled.attenuation = tu(gen);
      const double k = scaled.attenuation * scaled.attenuation;
      worst = std::max(worst, std::abs(cv::quadrature_variance_avg(scaled, e) - 1.0 - k * base) / (1.0 + std::abs(base)));
    }
  }
  c.check(worst < 1e-12, "1e4 random models, both expansions: max |excess - t_ND^2 excess_1|/(1+|excess_1|) = " + fmt("%.2e", worst));
}

void photon_flux(Criterion& c) {
  const double f = cv::photon_flux(10e-9, 794.7e-9);
  c.check(std::abs(f / 4.0e10 - 1.0) <= 0.01, "10 nW at 794.7 nm -> " + fmt("%.4e", f) + " photons/s");
}

json spectrum_metrics;

void fadof_spectrum(Criterion& c) {
  const auto run = cli("spectrum", work_dir / "c9");
  c.check(run.exit_code == 0, "exit " + std::to_string(run.exit_code));
  spectrum_metrics = read_json(work_dir / "c9" / "filter_metrics.json");
  const auto& m = spectrum_metrics;
  const double offset = m["peak_offset_from_line_center_Hz"].get<double>() * 1e-9;
  const double peak = m["peak_transmission"].get<double>();
  const double fwhm = m["fwhm_Hz"].get<double>() * 1e-6;
  const double floor = m["out_of_band_floor"].get<double>();
  const double eps = m["extinction"].get<double>();
  c.check(std::abs(offset + 2.7) <= 0.5, "peak " + fmt("%.3f", -offset) + " GHz red of D1 center (2.7 +/- 0.5)");
  c.check(std::abs(peak - 0.70) <= 0.15, "peak transmission " + fmt("%.3f", peak) + " (0.70 +/- 0.15)");
  c.check(std::abs(fwhm - 445.0) <= 150.0, "FWHM " + fmt("%.0f", fwhm) + " MHz (445 +/- 150)");
  c.check(floor >= 0.5 * eps && floor <= 2.0 * eps,
          "out-of-band floor " + fmt("%.2e", floor) + " vs extinction " + fmt("%.1e", eps) + " (factor 2); rejection " +
              fmt("%.1f", m["rejection_dB"].get<double>()) + " dB");
}

void pair_blocking(Criterion& c) {
  const auto& b = spectrum_metrics.at("pair_blocking");
  const double ratio = b["suppression_ratio"].get<double>();
  const double resonant = b["resonant_degenerate_fraction"].get<double>();
  c.check(ratio >= 20.0, "eta0^2 / max_n eta_n eta_-n = " + fmt("%.1f", ratio) + " (>=20, worst n=" +
                             std::to_string(b["max_nondegenerate_index"].get<int>()) + ")");
  c.check(resonant >= 0.95, "resonant degenerate fraction " + fmt("%.4f", resonant) + " (>=0.95)");
}

void voigt_kernel(Criterion& c) {
  const auto t0 = Clock::now();
  // Natural-width (y ~ 0.009) and buffer-gas (y ~ 0.28) regimes, x over +/-10 Doppler widths.
  double worst = 0.0;
  const int n = 10000;
  for (int i = 0; i < n; ++i) {
    const double y = i % 2 == 0 ? 0.0087 : 0.28;
    const double x = -10.0 + 20.0 * (i / 2) / (n / 2 - 1);
    const auto w = faddeeva({x, y});
    const auto ref = oracle::faddeeva_by_quadrature(x, y);
    worst = std::max(worst, std::abs(w - ref) / std::abs(ref));
  }
  const double dt = seconds_since(t0);
  c.check(worst < 1e-6, "1e4 points: max relative error " + fmt("%.2e", worst) + " (<1e-6)");
  c.check(dt < 30.0, "runtime " + fmt("%.1f", dt) + " s (<30)");
}

}  // namespace

int main() {
  work_dir = fs::temp_directory_path() / ("fadofsim_acceptance_" + std::to_string(::getpid()));
  fs::create_directories(work_dir);

  const std::vector<std::pair<std::string, std::function<void(Criterion&)>>> suite{
      {"g2 envelope width", g2_envelope},
      {"comb consistency and tooth structure", comb_consistency},
      {"Dirichlet kernel vs delta comb", dirichlet_vs_delta},
      {"Monte Carlo vs analytic histogram", montecarlo_equivalence},
      {"spectral purity arithmetic", purity_arithmetic},
      {"squeezing through loss", squeezing_loss},
      {"quadrature-noise scaling identity", scaling_identity},
      {"photon flux", photon_flux},
      {"FADOF spectrum", fadof_spectrum},
      {"pair-blocking asymmetry", pair_blocking},
      {"Voigt kernel", voigt_kernel},
  };

  int failed = 0;
  for (std::size_t i = 0; i < suite.size(); ++i) {
    Criterion c{static_cast<int>(i + 1), suite[i].first};
    try {
      suite[i].second(c);
    } catch (const std::exception& e) {
      c.check(false, std::string("exception: ") + e.what());
    }
    std::ostringstream line;
    line << (c.pass ? "PASS" : "FAIL") << "  " << c.id << ". " << c.title << ": ";
    for (std::size_t k = 0; k < c.notes.size(); ++k) line << (k ? "; " : "") << c.notes[k];
    std::cout << line.str() << std::endl;
    failed += c.pass ? 0 : 1;
  }
  std::cout << (suite.size() - failed) << "/" << suite.size() << " criteria passed" << std::endl;
  fs::remove_all(work_dir);
  return failed == 0 ? 0 : 1;
}
