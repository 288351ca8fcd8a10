#pragma once

#include <string>
#include <vector>

#include "fadofsim/atomic_filter.hpp"
#include "fadofsim/opo.hpp"
#include "fadofsim/spectrum.hpp"

namespace fadofsim::pairs {

struct PairTransmission {
  int index = 0;           // n >= 0
  double signal = 0.0;     // eta_n
  double idler = 0.0;      // eta_-n
  double weight = 0.0;     // phase-matching weight w_n
  double pair() const { return signal * idler; }
};

struct PairTransmissionMap {
  std::vector<PairTransmission> entries;  // n = 0..N

  const PairTransmission& degenerate() const { return entries.front(); }
  /// Multiplies every single-photon transmission by sqrt(factor).
  PairTransmissionMap scaled(double factor) const;
};

/// Mode-averaged filter transmission for each conjugate mode pair. Each mode's
/// Lorentzian is truncated at +/- 50 FWHM and integrated with the trapezoid
/// rule on the filter grid. Throws if a mode window leaves the grid.
PairTransmissionMap pair_transmission_map(const opo::ModeComb& comb, const Spectrum& filter);

/// Resonant degenerate fraction w0 eta0^2 / sum_n w_n eta_n eta_-n and the
/// overall fraction after out-of-band leakage.
struct DegenerateFraction {
  double resonant = 0.0;
  double overall = 0.0;
};
DegenerateFraction degenerate_fraction(const PairTransmissionMap& map, double leakage);

/// Ratio of degenerate to non-degenerate pair flux, w0 eta0^2 / sum_{n>0} w_n eta_n eta_-n.
double figure_of_merit(const PairTransmissionMap& map);

/// P_S = 1 - c_HC / c_F.
double spectral_purity(double coincidences_filtered, double coincidences_hot_cell);

struct PurityResult {
  double coincidences_filtered = 0.0;
  double coincidences_hot_cell = 0.0;
  double spectral_purity = 0.0;
  double resonant_fraction = 0.0;
  double overall_fraction = 0.0;
};
/// Combines measured (or simulated) coincidences with the resonant fraction.
PurityResult purity_result(double c_filtered, double c_hot_cell, double resonant_fraction);

/// Fraction of filtered pairs that also survive the hot cell, i.e. lie outside
/// the atomic resonance. This is the leakage implied by the two spectra.
double hot_cell_leakage(const PairTransmissionMap& filtered, const PairTransmissionMap& filtered_then_hot_cell);

struct OptimizeOptions {
  double grid_step = 1e6;          // Hz, spectral grid spacing
  double peak_search_half_width = 20e9;
  opo::CombOptions comb;
};

struct FomPoint {
  double magnetic_field = 0.0;
  double temperature = 0.0;
  double fom = 0.0;
  double eta0 = 0.0;
  double sum_nondegenerate = 0.0;  // sum_{n>0} w_n eta_n eta_-n
  double peak_frequency = 0.0;
  bool valid = false;
  std::string error;
};

struct OptimizeResult {
  FomPoint best;
  std::vector<FomPoint> surface;   // fields outer, temperatures inner
  std::vector<std::string> warnings;
};

/// Evaluates one (B, T) point: locates the filter peak, centers the comb on it
/// and computes the pair-blocking figure of merit.
FomPoint evaluate_filter_point(const atomic::FilterConfig& cfg, const opo::OpoConfig& opo_cfg,
                               const atomic::AtomicLineTable& lines, const OptimizeOptions& opt);

/// Exhaustive grid search; first maximum in iteration order wins.
OptimizeResult optimize_filter(const std::vector<double>& fields, const std::vector<double>& temperatures,
                               const atomic::FilterConfig& base, const opo::OpoConfig& opo_cfg,
                               const atomic::AtomicLineTable& lines, const OptimizeOptions& opt = {});

/// Uniform grid covering every mode of `comb` with the +/- 50 FWHM windows.
FrequencyGrid comb_grid(const opo::ModeComb& comb, double step);

}  // namespace fadofsim::pairs
