#include "fadofsim/opo.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace fadofsim::opo {
namespace {

// sin(x)/x = 1/sqrt(2): half-maximum point of sinc^2.
constexpr double kSincHalfMax = 1.3915573782515096;

double sinc(double x) { return std::abs(x) < 1e-8 ? 1.0 - x * x / 6.0 : std::sin(x) / x; }

}  // namespace

double OpoConfig::mode_fwhm() const { return total_decay() / phys::two_pi; }

void OpoConfig::validate() const {
  if (!(gamma_out > 0.0) || !(gamma_loss > 0.0)) throw std::invalid_argument("OPO decay rates must be > 0");
  if (!(round_trip_time > 0.0)) throw std::invalid_argument("OPO round-trip time must be > 0");
  if (!(free_spectral_range > 0.0)) throw std::invalid_argument("OPO free spectral range must be > 0");
  if (std::abs(free_spectral_range * round_trip_time - 1.0) > 0.01)
    throw std::invalid_argument("free spectral range and round-trip time disagree by more than 1%");
  if (!(envelope_fwhm > free_spectral_range)) throw std::invalid_argument("phase-matching envelope must be wider than the FSR");
  if (!(pair_rate >= 0.0)) throw std::invalid_argument("pair rate must be >= 0");
}

double phase_matching_weight(int n, const OpoConfig& cfg) {
  if (std::isinf(cfg.envelope_fwhm)) return 1.0;
  const double x = kSincHalfMax * n * cfg.free_spectral_range / (0.5 * cfg.envelope_fwhm);
  const double s = sinc(x);
  return s * s;
}

ModeComb mode_comb(const OpoConfig& cfg, const CombOptions& opt) {
  cfg.validate();
  if (!(opt.cutoff > 0.0 && opt.cutoff < 1.0)) throw std::invalid_argument("comb cutoff must lie in (0, 1)");
  const int cap = opt.max_pairs.value_or(std::numeric_limits<int>::max());
  if (cap < 0) throw std::invalid_argument("max_pairs must be >= 0");

  int pairs = 0;
  while (pairs < cap && phase_matching_weight(pairs + 1, cfg) >= opt.cutoff) {
    ++pairs;
    if (pairs > 1'000'000) throw std::invalid_argument("flat phase-matching envelope needs a max_pairs cap");
  }

  ModeComb comb;
  comb.pairs = pairs;
  comb.modes.reserve(static_cast<std::size_t>(2 * pairs + 1));
  const double fwhm = cfg.mode_fwhm();
  for (int n = -pairs; n <= pairs; ++n)
    comb.modes.push_back({n, cfg.degenerate_frequency + n * cfg.free_spectral_range, fwhm,
                          phase_matching_weight(std::abs(n), cfg)});
  return comb;
}

Spectrum output_spectrum(const ModeComb& comb, const FrequencyGrid& grid) {
  grid.validate();
  Spectrum s{grid, std::vector<double>(grid.size, 0.0), false};
  for (const auto& m : comb.modes) {
    const double hw = 0.5 * m.fwhm;
    if (grid.step > 0.25 * m.fwhm) s.under_resolved = true;
    for (std::size_t i = 0; i < grid.size; ++i) {
      const double d = grid[i] - m.frequency;
      s.values[i] += m.weight * hw / (phys::pi * (d * d + hw * hw));
    }
  }
  return s;
}

double g2_single(double delay, const OpoConfig& cfg) { return std::exp(-std::abs(delay) * cfg.total_decay()); }

double g2_single_fwhm(const OpoConfig& cfg) { return 2.0 * phys::ln2 / cfg.total_decay(); }

double g2_multi_exact(double delay, const OpoConfig& cfg, int pairs) {
  if (pairs < 0) throw std::invalid_argument("number of mode pairs must be >= 0");
  const double m = 2.0 * pairs + 1.0;
  const double x = delay / cfg.round_trip_time;
  const double r = x - std::round(x);  // kernel has unit period in x for odd m
  double kernel = m;
  if (std::abs(r) > 1e-12) {
    const double num = std::sin(m * phys::pi * r);
    const double den = std::sin(phys::pi * r);
    kernel = num * num / (m * den * den);
  }
  return g2_single(delay, cfg) * kernel;
}

DeltaComb g2_multi_comb(const OpoConfig& cfg, int pairs, double truncation) {
  if (!(truncation > 0.0 && truncation < 1.0)) throw std::invalid_argument("truncation must lie in (0, 1)");
  const double per_tooth = cfg.round_trip_time * cfg.total_decay();
  const int n_max = static_cast<int>(std::floor(std::log(1.0 / truncation) / per_tooth));
  DeltaComb comb;
  comb.valid = pairs >= 50;
  for (int n = -n_max; n <= n_max; ++n) {
    const double t = n * cfg.round_trip_time;
    comb.teeth.push_back({n, t, g2_single(t, cfg)});
  }
  return comb;
}

DetectorConfig::Offset DetectorConfig::decompose_offset() const {
  const double k = std::round(clock_offset / bin_width);
  return {static_cast<int>(k), clock_offset - k * bin_width};
}

void DetectorConfig::validate() const {
  if (!(bin_width > 0.0)) throw std::invalid_argument("bin width must be > 0");
  if (!(singles_rate_1 >= 0.0) || !(singles_rate_2 >= 0.0)) throw std::invalid_argument("singles rates must be >= 0");
  if (!(acquisition_time > 0.0)) throw std::invalid_argument("acquisition time must be > 0");
  if (!std::isfinite(clock_offset)) throw std::invalid_argument("clock offset is not finite");
}

double accidental_rate(double bin_width, double rate_1, double rate_2) { return bin_width * rate_1 * rate_2; }

CorrelationModel single_mode_model(const OpoConfig& cfg) { return SingleModeModel{cfg.total_decay()}; }

CorrelationModel comb_model(const OpoConfig& cfg, int pairs) { return CombModel{g2_multi_comb(cfg, pairs).teeth}; }

namespace {

// Integral of (alpha + beta s) exp(kappa s) over [a, b].
double linear_exp_integral(double alpha, double beta, double kappa, double a, double b) {
  auto anti = [&](double s) { return std::exp(kappa * s) * ((alpha + beta * s) / kappa - beta / (kappa * kappa)); };
  return anti(b) - anti(a);
}

// Probability mass of the two-sided exponential density (g/2) exp(-g |T|),
// shifted so that T = s + c, weighted by the unit tent on s in [-1, 1] * t_bin.
double tent_weighted_exponential(double decay, double c, double t_bin) {
  std::vector<double> cuts{-t_bin, 0.0, t_bin};
  if (-c > -t_bin && -c < t_bin && -c != 0.0) cuts.push_back(-c);
  std::sort(cuts.begin(), cuts.end());
  double total = 0.0;
  for (std::size_t j = 0; j + 1 < cuts.size(); ++j) {
    const double a = cuts[j];
    const double b = cuts[j + 1];
    const double mid = 0.5 * (a + b);
    const double sigma = (mid + c) >= 0.0 ? 1.0 : -1.0;
    const double alpha = 1.0;
    const double beta = mid < 0.0 ? 1.0 / t_bin : -1.0 / t_bin;
    const double kappa = -decay * sigma;
    total += 0.5 * decay * std::exp(-decay * sigma * c) * linear_exp_integral(alpha, beta, kappa, a, b);
  }
  return total;
}

}  // namespace

std::vector<HistogramBin> detected_histogram(const CorrelationModel& model, const DetectorConfig& det,
                                             const OpoConfig& cfg, BinRange range) {
  det.validate();
  if (range.last < range.first) throw std::invalid_argument("empty bin range");
  const double tb = det.bin_width;
  const double pairs_total = cfg.pair_rate * det.acquisition_time;
  const double acc = accidental_rate(tb, det.singles_rate_1 + cfg.pair_rate, det.singles_rate_2 + cfg.pair_rate) *
                     det.acquisition_time;

  std::vector<HistogramBin> bins;
  bins.reserve(static_cast<std::size_t>(range.last - range.first + 1));
  for (int i = range.first; i <= range.last; ++i) bins.push_back({i, i * tb, 0.0, acc});

  if (const auto* single = std::get_if<SingleModeModel>(&model)) {
    if (!(single->decay_rate > 0.0)) throw std::invalid_argument("decay rate must be > 0");
    for (auto& b : bins)
      b.true_counts = pairs_total * tent_weighted_exponential(single->decay_rate, b.index * tb - det.clock_offset, tb);
  } else {
    const auto& teeth = std::get<CombModel>(model).teeth;
    double norm = 0.0;
    for (const auto& t : teeth) norm += t.weight;
    if (!(norm > 0.0)) throw std::invalid_argument("comb model has no weight");
    for (const auto& t : teeth) {
      if (t.weight == 0.0) continue;
      const double u = (det.clock_offset + t.delay) / tb;
      const double lower = std::floor(u);
      const double frac = u - lower;
      const auto put = [&](double index, double share) {
        const long long i = static_cast<long long>(index);
        if (share <= 0.0 || i < range.first || i > range.last) return;
        bins[static_cast<std::size_t>(i - range.first)].true_counts += pairs_total * t.weight / norm * share;
      };
      put(lower, 1.0 - frac);
      put(lower + 1.0, frac);
    }
  }
  return bins;
}

BinRange covering_range(const CorrelationModel& model, const DetectorConfig& det) {
  const double tb = det.bin_width;
  if (const auto* single = std::get_if<SingleModeModel>(&model)) {
    const double reach = 30.0 / single->decay_rate;
    return {static_cast<int>(std::floor((det.clock_offset - reach) / tb)) - 1,
            static_cast<int>(std::ceil((det.clock_offset + reach) / tb)) + 1};
  }
  const auto& teeth = std::get<CombModel>(model).teeth;
  double lo = 0.0, hi = 0.0;
  for (const auto& t : teeth) {
    lo = std::min(lo, t.delay);
    hi = std::max(hi, t.delay);
  }
  return {static_cast<int>(std::floor((det.clock_offset + lo) / tb)) - 1,
          static_cast<int>(std::ceil((det.clock_offset + hi) / tb)) + 1};
}

}  // namespace fadofsim::opo
