#include "fadofsim/pair_statistics.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

#include "fadofsim/constants.hpp"

namespace fadofsim::pairs {
namespace {

constexpr double kWindowFwhm = 50.0;

double mode_average(const opo::Mode& mode, const Spectrum& filter) {
  const auto& g = filter.grid;
  const double reach = kWindowFwhm * mode.fwhm;
  if (mode.frequency - reach < g.front() || mode.frequency + reach > g.back())
    throw std::out_of_range("mode " + std::to_string(mode.index) + " lies outside the filter grid");
  const auto first = static_cast<std::size_t>(std::ceil((mode.frequency - reach - g.start) / g.step));
  const auto last = std::min(g.size - 1, static_cast<std::size_t>(std::floor((mode.frequency + reach - g.start) / g.step)));
  const double hw = 0.5 * mode.fwhm;
  double num = 0.0;
  double den = 0.0;
  for (std::size_t i = first; i <= last; ++i) {
    const double d = g[i] - mode.frequency;
    double w = hw * hw / (d * d + hw * hw);
    if (i == first || i == last) w *= 0.5;
    num += w * filter.values[i];
    den += w;
  }
  if (!(den > 0.0)) throw std::out_of_range("mode " + std::to_string(mode.index) + " is not resolved by the filter grid");
  return num / den;
}

double pair_sum(const PairTransmissionMap& map, std::size_t from) {
  double s = 0.0;
  for (std::size_t i = from; i < map.entries.size(); ++i) s += map.entries[i].weight * map.entries[i].pair();
  return s;
}

}  // namespace

PairTransmissionMap PairTransmissionMap::scaled(double factor) const {
  if (!(factor > 0.0)) throw std::invalid_argument("scale factor must be > 0");
  PairTransmissionMap out = *this;
  const double a = std::sqrt(factor);
  for (auto& e : out.entries) {
    e.signal *= a;
    e.idler *= a;
  }
  return out;
}

PairTransmissionMap pair_transmission_map(const opo::ModeComb& comb, const Spectrum& filter) {
  filter.grid.validate();
  PairTransmissionMap map;
  map.entries.reserve(static_cast<std::size_t>(comb.pairs) + 1);
  for (int n = 0; n <= comb.pairs; ++n) {
    const auto& sig = comb.mode(n);
    const auto& idl = comb.mode(-n);
    map.entries.push_back({n, mode_average(sig, filter), mode_average(idl, filter), sig.weight});
  }
  return map;
}

DegenerateFraction degenerate_fraction(const PairTransmissionMap& map, double leakage) {
  if (map.entries.empty()) throw std::invalid_argument("empty pair transmission map");
  if (!(leakage >= 0.0 && leakage <= 1.0)) throw std::invalid_argument("leakage must lie in [0, 1]");
  const double total = pair_sum(map, 0);
  if (!(total > 0.0)) throw std::domain_error("no pairs transmitted: degenerate fraction undefined");
  const auto& d = map.degenerate();
  const double resonant = d.weight * d.pair() / total;
  return {resonant, resonant * (1.0 - leakage)};
}

double figure_of_merit(const PairTransmissionMap& map) {
  if (map.entries.empty()) throw std::invalid_argument("empty pair transmission map");
  const double rest = pair_sum(map, 1);
  const auto& d = map.degenerate();
  if (!(rest > 0.0)) return std::numeric_limits<double>::infinity();
  return d.weight * d.pair() / rest;
}

double spectral_purity(double coincidences_filtered, double coincidences_hot_cell) {
  if (!(coincidences_filtered > 0.0)) throw std::domain_error("spectral purity undefined for c_F = 0");
  if (coincidences_hot_cell < 0.0) throw std::invalid_argument("c_HC must be >= 0");
  if (coincidences_hot_cell > coincidences_filtered) throw std::invalid_argument("c_HC exceeds c_F");
  return 1.0 - coincidences_hot_cell / coincidences_filtered;
}

PurityResult purity_result(double c_filtered, double c_hot_cell, double resonant_fraction) {
  PurityResult r;
  r.coincidences_filtered = c_filtered;
  r.coincidences_hot_cell = c_hot_cell;
  r.spectral_purity = spectral_purity(c_filtered, c_hot_cell);
  r.resonant_fraction = resonant_fraction;
  r.overall_fraction = resonant_fraction * r.spectral_purity;
  return r;
}

double hot_cell_leakage(const PairTransmissionMap& filtered, const PairTransmissionMap& filtered_then_hot_cell) {
  const double total = pair_sum(filtered, 0);
  if (!(total > 0.0)) throw std::domain_error("no pairs transmitted by the filter");
  return pair_sum(filtered_then_hot_cell, 0) / total;
}

FrequencyGrid comb_grid(const opo::ModeComb& comb, double step) {
  const auto& lo = comb.modes.front();
  const auto& hi = comb.modes.back();
  const double reach = kWindowFwhm * lo.fwhm + 2.0 * step;
  const auto count = static_cast<std::size_t>(std::ceil((hi.frequency - lo.frequency + 2.0 * reach) / step)) + 1;
  return FrequencyGrid{lo.frequency - reach, step, count};
}

FomPoint evaluate_filter_point(const atomic::FilterConfig& cfg, const opo::OpoConfig& opo_cfg,
                               const atomic::AtomicLineTable& lines, const OptimizeOptions& opt) {
  FomPoint p;
  p.magnetic_field = cfg.magnetic_field;
  p.temperature = cfg.temperature;

  const auto search = FrequencyGrid::centered(lines.reference_frequency, opt.peak_search_half_width, opt.grid_step);
  const auto metrics = atomic::filter_metrics(atomic::fadof_transmission(search, cfg, lines));
  p.peak_frequency = metrics.peak_frequency;

  auto locked = opo_cfg;
  locked.degenerate_frequency = metrics.peak_frequency;
  const auto comb = opo::mode_comb(locked, opt.comb);
  const auto spectrum = atomic::fadof_transmission(comb_grid(comb, opt.grid_step), cfg, lines);
  const auto map = pair_transmission_map(comb, spectrum);

  p.eta0 = map.degenerate().signal;
  p.sum_nondegenerate = pair_sum(map, 1);
  p.fom = figure_of_merit(map);
  p.valid = std::isfinite(p.fom);
  if (!p.valid) p.error = "no non-degenerate transmission";
  return p;
}

OptimizeResult optimize_filter(const std::vector<double>& fields, const std::vector<double>& temperatures,
                               const atomic::FilterConfig& base, const opo::OpoConfig& opo_cfg,
                               const atomic::AtomicLineTable& lines, const OptimizeOptions& opt) {
  if (fields.empty() || temperatures.empty()) throw std::invalid_argument("optimization ranges must be non-empty");
  OptimizeResult result;
  bool found = false;
  for (double b : fields) {
    for (double t : temperatures) {
      auto cfg = base;
      cfg.magnetic_field = b;
      cfg.temperature = t;
      FomPoint p;
      try {
        p = evaluate_filter_point(cfg, opo_cfg, lines, opt);
      } catch (const std::exception& e) {
        p = FomPoint{};
        p.magnetic_field = b;
        p.temperature = t;
        p.error = e.what();
      }
      if (!p.valid)
        result.warnings.push_back("B = " + std::to_string(b) + " T, T = " + std::to_string(t) + " K excluded: " + p.error);
      else if (!found || p.fom > result.best.fom * (1.0 + 1e-12)) {
        result.best = p;
        found = true;
      }
      result.surface.push_back(p);
    }
  }
  if (!found) throw std::runtime_error("no valid point in the optimization grid");
  return result;
}

}  // namespace fadofsim::pairs
