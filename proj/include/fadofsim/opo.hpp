#pragma once

#include <optional>
#include <span>
#include <variant>
#include <vector>

#include "fadofsim/constants.hpp"
#include "fadofsim/spectrum.hpp"

namespace fadofsim::opo {

struct OpoConfig {
  double gamma_out = phys::two_pi * 7.0e6;   // s^-1, output-coupler decay rate
  double gamma_loss = phys::two_pi * 1.4e6;  // s^-1, intracavity-loss decay rate
  double round_trip_time = 1.99e-9; // s
  double degenerate_frequency = 0.0;  // Hz
  double free_spectral_range = 501e6; // Hz
  double envelope_fwhm = 150e9;     // Hz, sinc^2 phase-matching FWHM
  double pair_rate = 1e5;           // s^-1, detected pair rate

  double total_decay() const { return gamma_out + gamma_loss; }
  /// Lorentzian FWHM of each cavity mode, (gamma_out + gamma_loss) / 2 pi.
  double mode_fwhm() const;
  void validate() const;
};

struct Mode {
  int index = 0;
  double frequency = 0.0;  // Hz
  double fwhm = 0.0;       // Hz
  double weight = 0.0;     // phase-matching weight, 1 at n = 0
};

struct ModeComb {
  std::vector<Mode> modes;  // ordered by index, -N..N
  int pairs = 0;            // N: non-degenerate pairs retained

  const Mode& mode(int index) const { return modes.at(static_cast<std::size_t>(index + pairs)); }
  double weight(int index) const { return mode(index).weight; }
};

struct CombOptions {
  double cutoff = 1e-3;          // stop at the first |n| whose weight falls below
  std::optional<int> max_pairs;  // hard cap on N
};

/// sinc^2 phase-matching weight of mode n relative to the degenerate mode.
double phase_matching_weight(int n, const OpoConfig& cfg);

ModeComb mode_comb(const OpoConfig& cfg, const CombOptions& opt = {});

/// Sum of unit-area Lorentzians scaled by weight. Flags the result if the
/// grid spacing exceeds FWHM / 4.
Spectrum output_spectrum(const ModeComb& comb, const FrequencyGrid& grid);

/// Single-mode relative coincidence rate exp(-|T| (g1 + g2)).
double g2_single(double delay, const OpoConfig& cfg);
/// FWHM of g2_single, 2 ln 2 / (g1 + g2).
double g2_single_fwhm(const OpoConfig& cfg);
/// Multimode form with the Dirichlet-kernel modulation for N mode pairs.
double g2_multi_exact(double delay, const OpoConfig& cfg, int pairs);

struct CombTooth {
  int index = 0;
  double delay = 0.0;   // n * tau
  double weight = 0.0;  // g2_single(n tau)
};

struct DeltaComb {
  std::vector<CombTooth> teeth;
  /// False when fewer than 50 mode pairs back the delta approximation.
  bool valid = true;
};

/// Delta-comb limit of g2_multi_exact, truncated below 1e-6 of the peak.
DeltaComb g2_multi_comb(const OpoConfig& cfg, int pairs, double truncation = 1e-6);

struct DetectorConfig {
  double bin_width = 1e-9;        // s
  double clock_offset = 0.0;      // s, T0 = k t_bin + delta
  double singles_rate_1 = 1e4;    // s^-1, uncorrelated background on detector 1
  double singles_rate_2 = 1e4;    // s^-1
  double acquisition_time = 10.0; // s

  struct Offset {
    int bins;
    double remainder;  // in [-t_bin / 2, t_bin / 2]
  };
  Offset decompose_offset() const;
  void validate() const;
};

/// Accidental coincidence rate per bin, t_bin R1 R2.
double accidental_rate(double bin_width, double rate_1, double rate_2);

/// Single-mode (filtered) delay law: two-sided exponential with this decay rate.
struct SingleModeModel {
  double decay_rate = 0.0;
};
/// Multimode (unfiltered) delay law: weighted delta comb.
struct CombModel {
  std::vector<CombTooth> teeth;
};
using CorrelationModel = std::variant<SingleModeModel, CombModel>;

CorrelationModel single_mode_model(const OpoConfig& cfg);
CorrelationModel comb_model(const OpoConfig& cfg, int pairs);

struct BinRange {
  int first = -100;
  int last = 100;
};

struct HistogramBin {
  int index = 0;
  double delay = 0.0;  // index * t_bin, s
  double true_counts = 0.0;
  double accidental_counts = 0.0;
  double expected() const { return true_counts + accidental_counts; }
};

/// Expected coincidence counts per bin for clock-digitized arrival times.
///
/// Each arrival is assigned to the clock bin containing it; averaging the
/// signal position over its bin turns a delay x into a tent of unit area
/// centered at x / t_bin. True counts sum to pair_rate * acquisition_time
/// over all bins; accidentals use total singles (background + pairs).
std::vector<HistogramBin> detected_histogram(const CorrelationModel& model,
                                             const DetectorConfig& det, const OpoConfig& cfg,
                                             BinRange range);

/// Bin range covering every tooth (or 30 decay lengths) plus one bin each side.
BinRange covering_range(const CorrelationModel& model, const DetectorConfig& det);

}  // namespace fadofsim::opo
