#include <gtest/gtest.h>

#include <cmath>
#include <limits>

#include "fadofsim/opo.hpp"
#include "oracles.hpp"

using namespace fadofsim;
using namespace fadofsim::opo;

namespace {

double true_sum(const std::vector<HistogramBin>& h) {
  double s = 0.0;
  for (const auto& b : h) s += b.true_counts;
  return s;
}

double interpolated_fwhm(const std::vector<double>& x, const std::vector<double>& y) {
  std::size_t peak = 0;
  for (std::size_t i = 1; i < y.size(); ++i)
    if (y[i] > y[peak]) peak = i;
  const double half = 0.5 * y[peak];
  std::size_t l = peak, r = peak;
  while (l > 0 && y[l] > half) --l;
  while (r + 1 < y.size() && y[r] > half) ++r;
  const double xl = x[l] + (half - y[l]) * (x[l + 1] - x[l]) / (y[l + 1] - y[l]);
  const double xr = x[r - 1] + (half - y[r - 1]) * (x[r] - x[r - 1]) / (y[r] - y[r - 1]);
  return xr - xl;
}

}  // namespace

TEST(OpoConfig, DefaultIsConsistent) {
  OpoConfig c;
  EXPECT_NO_THROW(c.validate());
  EXPECT_NEAR(c.mode_fwhm(), 8.4e6, 1e-3);
}

TEST(OpoConfig, RejectsInconsistentCombPeriod) {
  OpoConfig c;
  c.free_spectral_range = 520e6;
  EXPECT_THROW(c.validate(), std::invalid_argument);
  c = OpoConfig{};
  c.envelope_fwhm = 400e6;
  EXPECT_THROW(c.validate(), std::invalid_argument);
  c = OpoConfig{};
  c.gamma_loss = 0.0;
  EXPECT_THROW(c.validate(), std::invalid_argument);
}

TEST(ModeComb, DefaultCutoffRetainsHundredsOfModes) {
  OpoConfig c;
  const auto comb = mode_comb(c);
  EXPECT_GT(comb.modes.size(), 200u);
  // Independent search for the first |n| whose sinc^2 weight drops below 1e-3.
  const double x_half = 1.3915573782515096;
  int n = 1;
  while (true) {
    const double x = x_half * n * c.free_spectral_range / (0.5 * c.envelope_fwhm);
    if (std::pow(std::sin(x) / x, 2) < 1e-3) break;
    ++n;
  }
  EXPECT_EQ(comb.pairs, n - 1);
  EXPECT_DOUBLE_EQ(comb.weight(0), 1.0);
  EXPECT_DOUBLE_EQ(comb.mode(0).frequency, c.degenerate_frequency);
  for (int k = 1; k <= comb.pairs; ++k) EXPECT_DOUBLE_EQ(comb.weight(k), comb.weight(-k));
}

TEST(ModeComb, EnvelopeHalfMaximumAtHalfWidth) {
  OpoConfig c;
  c.free_spectral_range = 1.0 / c.round_trip_time;
  c.envelope_fwhm = 200.0 * c.free_spectral_range;
  EXPECT_NEAR(phase_matching_weight(100, c), 0.5, 1e-12);
}

TEST(ModeComb, FlatEnvelopeWithCap) {
  OpoConfig c;
  c.envelope_fwhm = std::numeric_limits<double>::infinity();
  CombOptions opt;
  opt.max_pairs = 40;
  const auto comb = mode_comb(c, opt);
  EXPECT_EQ(comb.pairs, 40);
  for (const auto& m : comb.modes) EXPECT_DOUBLE_EQ(m.weight, 1.0);
}

TEST(OutputSpectrum, SingleModeLorentzianWidth) {
  OpoConfig c;
  CombOptions opt;
  opt.max_pairs = 0;
  const auto comb = mode_comb(c, opt);
  const auto grid = FrequencyGrid::centered(0.0, 200e6, 0.1e6);
  const auto s = output_spectrum(comb, grid);
  EXPECT_FALSE(s.under_resolved);
  EXPECT_NEAR(interpolated_fwhm(grid.points(), s.values), 8.4e6, 0.01e6);
  EXPECT_NEAR(s.values[grid.size / 2], 1.0 / (oracle::pi * 4.2e6), 1e-12 / 4.2e6);
}

TEST(OutputSpectrum, IntegralMatchesWeightSum) {
  OpoConfig c;
  const auto comb = mode_comb(c);
  const double reach = comb.pairs * c.free_spectral_range + 20e9;
  const auto s = output_spectrum(comb, FrequencyGrid::centered(0.0, reach, 2e6));
  double weights = 0.0;
  for (const auto& m : comb.modes) weights += m.weight;
  EXPECT_NEAR(s.integral() / weights, 1.0, 2e-3);
}

TEST(OutputSpectrum, FlagsCoarseGrid) {
  CombOptions opt;
  opt.max_pairs = 2;
  const auto s = output_spectrum(mode_comb(OpoConfig{}, opt), FrequencyGrid::centered(0.0, 2e9, 5e6));
  EXPECT_TRUE(s.under_resolved);
}

TEST(G2Single, NormalizedEvenWithExpectedWidth) {
  OpoConfig c;
  EXPECT_DOUBLE_EQ(g2_single(0.0, c), 1.0);
  for (double t : {1e-9, 7.3e-9, 40e-9}) EXPECT_DOUBLE_EQ(g2_single(t, c), g2_single(-t, c));
  // Half-maximum crossing by bisection.
  double lo = 0.0, hi = 100e-9;
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    (g2_single(mid, c) > 0.5 ? lo : hi) = mid;
  }
  EXPECT_NEAR(2.0 * lo, 2.0 * std::log(2.0) / (2.0 * oracle::pi * 8.4e6), 1e-15);
  EXPECT_NEAR(g2_single_fwhm(c), 26.3e-9, 0.05e-9);
}

TEST(G2MultiExact, KernelLimitsAndSpecialPoints) {
  OpoConfig c;
  const int n = 120;
  for (int k : {-3, 0, 1, 5}) {
    const double t = k * c.round_trip_time;
    EXPECT_NEAR(g2_multi_exact(t, c, n) / (g2_single(t, c) * (2 * n + 1)), 1.0, 1e-9) << k;
  }
  const double half = 0.5 * c.round_trip_time;
  EXPECT_NEAR(g2_multi_exact(half, c, n) / (g2_single(half, c) / (2 * n + 1)), 1.0, 1e-9);
}

TEST(G2MultiExact, PeriodAverageOfModulationIsOne) {
  OpoConfig c;
  const int n = 60;
  const double tau = c.round_trip_time;
  const double step = tau / (2 * n + 1);
  double sum = 0.0;
  for (int j = 0; j < 2 * n + 1; ++j)
    sum += oracle::integrate([&](double t) { return g2_multi_exact(t, c, n) / g2_single(t, c); }, 3 * tau + j * step,
                             3 * tau + (j + 1) * step);
  EXPECT_NEAR(sum / tau, 1.0, 1e-9);
}

TEST(G2MultiComb, TeethFollowExponentialLaw) {
  OpoConfig c;
  const auto comb = g2_multi_comb(c, 300);
  EXPECT_TRUE(comb.valid);
  const double q = std::exp(-c.round_trip_time * c.total_decay());
  double sum = 0.0, peak = 0.0;
  for (const auto& t : comb.teeth) {
    EXPECT_NEAR(t.weight, std::pow(q, std::abs(t.index)), 1e-14);
    EXPECT_NEAR(t.delay, t.index * c.round_trip_time, 1e-21);
    EXPECT_GE(t.weight, 1e-6);
    peak = std::max(peak, t.weight);
    sum += t.weight;
  }
  EXPECT_DOUBLE_EQ(peak, 1.0);
  EXPECT_NEAR(sum, (1.0 + q) / (1.0 - q), 1e-4);
  EXPECT_NEAR(sum / (2.0 / (c.round_trip_time * c.total_decay())), 1.0, 0.01);
  EXPECT_FALSE(g2_multi_comb(c, 49).valid);
}

TEST(G2MultiComb, BinnedDirichletMatchesTeeth) {
  OpoConfig c;
  const int pairs = 200;
  const double tau = c.round_trip_time;
  const double sub = tau / (2 * pairs + 1);
  for (const auto& tooth : g2_multi_comb(c, pairs).teeth) {
    if (std::abs(tooth.index) > 8) continue;
    double area = 0.0;
    const double a = tooth.delay - 0.5 * tau;
    for (int j = 0; j < 2 * pairs + 1; ++j)
      area += oracle::integrate([&](double t) { return g2_multi_exact(t, c, pairs); }, a + j * sub, a + (j + 1) * sub, 1e-10);
    EXPECT_NEAR(area / tau / tooth.weight, 1.0, 0.01) << tooth.index;
  }
}

TEST(Detector, AccidentalRateAndOffset) {
  EXPECT_NEAR(accidental_rate(1e-9, 1e4, 1e4), 0.1, 1e-15);
  DetectorConfig d;
  d.clock_offset = 3.3e-9;
  auto o = d.decompose_offset();
  EXPECT_EQ(o.bins, 3);
  EXPECT_NEAR(o.remainder, 0.3e-9, 1e-18);
  d.clock_offset = -3.6e-9;
  o = d.decompose_offset();
  EXPECT_EQ(o.bins, -4);
  EXPECT_NEAR(o.remainder, 0.4e-9, 1e-18);
  d.bin_width = 0.0;
  EXPECT_THROW(d.validate(), std::invalid_argument);
  EXPECT_THROW(detected_histogram(single_mode_model(OpoConfig{}), d, OpoConfig{}, {}), std::invalid_argument);
}

TEST(DetectedHistogram, NormalizationAndAccidentals) {
  OpoConfig c;
  DetectorConfig d;
  d.clock_offset = 2.37e-9;
  for (const auto& model : {single_mode_model(c), comb_model(c, 300)}) {
    const auto h = detected_histogram(model, d, c, covering_range(model, d));
    EXPECT_NEAR(true_sum(h) / (c.pair_rate * d.acquisition_time), 1.0, 1e-9);
    const double acc = 1e-9 * (1e4 + c.pair_rate) * (1e4 + c.pair_rate) * d.acquisition_time;
    for (const auto& b : h) EXPECT_DOUBLE_EQ(b.accidental_counts, acc);
  }
}

TEST(DetectedHistogram, CombMatchesClockBinningOracle) {
  OpoConfig c;
  DetectorConfig d;
  d.clock_offset = 0.31e-9;
  const auto model = comb_model(c, 300);
  const auto& teeth = std::get<CombModel>(model).teeth;
  double norm = 0.0;
  for (const auto& t : teeth) norm += t.weight;
  const auto h = detected_histogram(model, d, c, {-30, 30});
  for (const auto& b : h) {
    double p = 0.0;
    for (const auto& t : teeth) p += t.weight / norm * oracle::clock_bin_probability((t.delay + d.clock_offset) / d.bin_width, b.index);
    EXPECT_NEAR(b.true_counts, p * c.pair_rate * d.acquisition_time, 1e-7 * c.pair_rate * d.acquisition_time) << b.index;
  }
}

TEST(DetectedHistogram, SingleModeMatchesQuadratureOracle) {
  OpoConfig c;
  DetectorConfig d;
  for (double t0 : {0.0, 0.42e-9, -1.7e-9}) {
    d.clock_offset = t0;
    const auto h = detected_histogram(single_mode_model(c), d, c, {-40, 40});
    for (const auto& b : h) {
      const double p = oracle::single_mode_bin_fraction(c.total_decay(), t0, d.bin_width, b.index);
      EXPECT_NEAR(b.true_counts / (c.pair_rate * d.acquisition_time), p, 1e-12) << t0 << " " << b.index;
    }
  }
}

TEST(DetectedHistogram, SymmetricForZeroOffset) {
  OpoConfig c;
  DetectorConfig d;
  for (const auto& model : {single_mode_model(c), comb_model(c, 300)}) {
    const auto h = detected_histogram(model, d, c, {-50, 50});
    for (int m = 1; m <= 50; ++m)
      EXPECT_NEAR(h[static_cast<std::size_t>(50 + m)].true_counts, h[static_cast<std::size_t>(50 - m)].true_counts, 1e-9);
  }
}

TEST(DetectedHistogram, SingleToothSplitsAcrossTwoBins) {
  OpoConfig c;
  DetectorConfig d;
  d.clock_offset = 0.3e-9;
  const CorrelationModel model = CombModel{{{0, 0.0, 1.0}}};
  const auto h = detected_histogram(model, d, c, {-5, 5});
  int nonzero = 0;
  for (const auto& b : h) nonzero += b.true_counts > 0.0;
  EXPECT_EQ(nonzero, 2);
  EXPECT_NEAR(h[5].true_counts / (c.pair_rate * d.acquisition_time), 0.7, 1e-12);
  EXPECT_NEAR(h[6].true_counts / (c.pair_rate * d.acquisition_time), 0.3, 1e-12);
}

TEST(DetectedHistogram, CommensurateBinningHasNoBeat) {
  OpoConfig c;
  DetectorConfig d;
  d.bin_width = c.round_trip_time;
  const auto model = comb_model(c, 300);
  const auto h = detected_histogram(model, d, c, covering_range(model, d));
  std::size_t nonzero = 0;
  for (const auto& b : h) nonzero += b.true_counts > 0.0;
  EXPECT_EQ(nonzero, std::get<CombModel>(model).teeth.size());
}

TEST(DetectedHistogram, EvenOddContrastDependsOnSubBinOffset) {
  OpoConfig c;
  DetectorConfig d;
  auto contrast = [&](double delta) {
    d.clock_offset = delta;
    const auto h = detected_histogram(comb_model(c, 300), d, c, {-4, 4});
    double even = 0.0, odd = 0.0;
    for (const auto& b : h) (b.index % 2 == 0 ? even : odd) += b.true_counts;
    return (even - odd) / (even + odd);
  };
  EXPECT_GT(contrast(0.0), 0.9);
  EXPECT_LT(std::abs(contrast(0.5e-9)), 0.1);
}

TEST(DetectedHistogram, SingleModeHasNoTeeth) {
  OpoConfig c;
  DetectorConfig d;
  d.clock_offset = 0.27e-9;
  const auto h = detected_histogram(single_mode_model(c), d, c, {-80, 80});
  std::size_t peak = 0;
  for (std::size_t i = 0; i < h.size(); ++i)
    if (h[i].true_counts > h[peak].true_counts) peak = i;
  double worst = 0.0;
  for (std::size_t i = 1; i + 1 < h.size(); ++i) {
    if (i + 1 >= peak && i <= peak + 1) continue;
    const double second = h[i - 1].true_counts - 2.0 * h[i].true_counts + h[i + 1].true_counts;
    worst = std::max(worst, std::abs(second) / h[i].true_counts);
  }
  EXPECT_LT(worst, 0.01);
}

TEST(DetectedHistogram, SingleModeEnvelopeWidth) {
  OpoConfig c;
  DetectorConfig d;
  const auto h = detected_histogram(single_mode_model(c), d, c, {-100, 100});
  std::vector<double> x, y;
  for (const auto& b : h) x.push_back(b.delay), y.push_back(b.true_counts);
  EXPECT_NEAR(interpolated_fwhm(x, y), g2_single_fwhm(c), d.bin_width);
}
