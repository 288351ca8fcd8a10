#pragma once

#include <algorithm>
#include <array>
#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <variant>
#include <vector>

#include "fadofsim/opo.hpp"

namespace fadofsim::mc {

inline constexpr std::uint64_t picoseconds_per_second = 1'000'000'000'000ULL;
inline constexpr const char* rng_algorithm = "mt19937_64/splitmix64-slice-seeds";

/// Two-sided exponential delay law (filtered, single mode).
struct ExponentialDelay {
  double decay_rate = 0.0;
};
/// Comb delay law: tooth n at n * tau with weight exp(-|n| tau decay_rate).
struct CombDelay {
  double decay_rate = 0.0;
  double period = 0.0;
};
using DelayLaw = std::variant<ExponentialDelay, CombDelay>;

DelayLaw filtered_delay_law(const opo::OpoConfig& cfg);
DelayLaw unfiltered_delay_law(const opo::OpoConfig& cfg);

/// Pairs of one spectral class survive per photon with the given probabilities.
struct SpectralClass {
  std::string label;
  double probability = 1.0;
  double signal_transmission = 1.0;
  double idler_transmission = 1.0;
};

struct PairSource {
  DelayLaw delay;
  double pair_rate = 0.0;  // s^-1, emitted pairs
  std::vector<SpectralClass> classes{SpectralClass{"all", 1.0, 1.0, 1.0}};
};

struct EventStream {
  static constexpr std::size_t signal = 0;
  static constexpr std::size_t idler = 1;

  std::array<std::vector<std::uint64_t>, 2> timestamps;  // ps, ascending
  std::array<std::string, 2> labels{"signal", "idler"};
  std::uint64_t seed = 0;
  double duration = 0.0;  // s
  std::uint64_t pairs_emitted = 0;
  std::string rng = rng_algorithm;

  double seconds(std::size_t channel, std::size_t i) const;
  void validate() const;
};

struct GenerateOptions {
  double slice_duration = 1e-2;  // s, fixed partition for seed derivation
};

/// Synthetic time-tagger streams: Poisson pair emission, delay sampling,
/// per-photon Bernoulli thinning, independent background on each channel
/// and the idler channel offset T0. Deterministic for a fixed seed.
EventStream generate_pair_events(const PairSource& source, const opo::DetectorConfig& det,
                                 double duration, std::uint64_t seed,
                                 const GenerateOptions& opt = {});

enum class Binning {
  clock,       // floor(t_i / t_bin) - floor(t_s / t_bin)
  difference,  // floor((t_i - t_s) / t_bin)
};

struct Histogram {
  double bin_width = 0.0;  // s
  int first_index = 0;
  std::vector<std::uint64_t> counts;
  std::uint64_t total = 0;

  int last_index() const { return first_index + static_cast<int>(counts.size()) - 1; }
  std::uint64_t at(int index) const;
};

/// Start-multi-stop histogram of idler arrivals within +/- window of each
/// signal. `window` must be a multiple of `bin_width`.
Histogram histogram(const EventStream& stream, double bin_width, double window,
                    Binning binning = Binning::clock);

/// Coincidences within |delay| <= window of the peak bin.
std::uint64_t coincidences_in_window(const Histogram& h, double window);

struct ChiSquare {
  double statistic = 0.0;
  int degrees_of_freedom = 0;
  double p_value = 0.0;
};

/// Pearson chi-square of observed counts against expectations, over bins with
/// expectation >= min_expected.
ChiSquare chi_square(const Histogram& observed, const std::vector<opo::HistogramBin>& expected,
                     double min_expected = 5.0);

/// Kolmogorov-Smirnov distance and asymptotic p-value of a sample against a CDF.
struct KsResult {
  double statistic = 0.0;
  double p_value = 0.0;
};
template <class Cdf>
KsResult kolmogorov_smirnov(std::vector<double> sample, Cdf&& cdf);
double kolmogorov_p_value(double statistic, std::size_t n);

/// Binary channel files: little-endian u64 picosecond timestamps.
void write_timestamps(const std::filesystem::path& path, const std::vector<std::uint64_t>& ts);
std::vector<std::uint64_t> read_timestamps(const std::filesystem::path& path);

/// Writes <stem>_<label>.u64 per channel and a <stem>.json sidecar.
void write_stream(const std::filesystem::path& dir, const std::string& stem, const EventStream& s,
                  const std::string& config_hash, double pair_rate, const opo::DetectorConfig& det);

// --- implementation of the template -------------------------------------

template <class Cdf>
KsResult kolmogorov_smirnov(std::vector<double> sample, Cdf&& cdf) {
  std::sort(sample.begin(), sample.end());
  const double n = static_cast<double>(sample.size());
  double d = 0.0;
  for (std::size_t i = 0; i < sample.size(); ++i) {
    const double f = cdf(sample[i]);
    d = std::max({d, f - static_cast<double>(i) / n, static_cast<double>(i + 1) / n - f});
  }
  return {d, kolmogorov_p_value(d, sample.size())};
}

}  // namespace fadofsim::mc
