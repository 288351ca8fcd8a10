#include "fadofsim/atomic_filter.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>

#include "fadofsim/constants.hpp"
#include "fadofsim/faddeeva.hpp"
#include "fadofsim/parallel.hpp"
#include "fadofsim/wigner.hpp"

namespace fadofsim::atomic {

void FilterConfig::validate() const {
  if (!(temperature > 0.0)) throw std::invalid_argument("filter temperature must be > 0 K");
  if (!(cell_length > 0.0)) throw std::invalid_argument("filter cell length must be > 0 m");
  if (!(extinction >= 0.0 && extinction < 1.0)) throw std::invalid_argument("extinction must lie in [0, 1)");
  if (!(buffer_gas_width >= 0.0)) throw std::invalid_argument("buffer-gas width must be >= 0");
  if (!std::isfinite(magnetic_field)) throw std::invalid_argument("magnetic field is not finite");
  if (number_density && !(*number_density >= 0.0)) throw std::invalid_argument("number density must be >= 0");
}

double rubidium_number_density(double temperature) {
  if (!(temperature > 0.0)) throw std::invalid_argument("temperature must be > 0 K");
  // log10(P / torr); solid below the 312.46 K melting point, liquid above.
  const double t = temperature;
  const double log_p = t < 312.46
                           ? -94.04826 - 1961.258 / t - 0.03771687 * t + 42.57526 * std::log10(t)
                           : 15.88253 - 4529.635 / t + 0.00058663 * t - 2.99138 * std::log10(t);
  const double pressure = std::pow(10.0, log_p) * phys::torr;
  return pressure / (phys::boltzmann * t);
}

Vapor::Vapor(const FilterConfig& cfg, const AtomicLineTable& lines)
    : reference_(lines.reference_frequency), length_(cfg.cell_length) {
  cfg.validate();
  lines.validate();
  density_ = cfg.number_density ? *cfg.number_density : rubidium_number_density(cfg.temperature);
  lower_bound_ = reference_ - 200e9;
  upper_bound_ = reference_ + 200e9;

  const double omega = phys::two_pi * reference_;
  const double k = omega / phys::speed_of_light;
  const double j_factor = (2.0 * lines.j_excited + 1.0) / (2.0 * lines.j_ground + 1.0);

  std::map<std::string, double> ground_states;
  {
    std::map<std::string, std::set<int>> fg;
    for (const auto& l : lines.lines) fg[l.isotope].insert(l.f_ground);
    for (const auto& [iso, fs] : fg) {
      double g = 0.0;
      for (int f : fs) g += 2.0 * f + 1.0;
      ground_states[iso] = g;
    }
  }

  for (const auto& l : lines.lines) {
    const Isotope& iso = lines.isotope(l.isotope);
    const double gamma = phys::two_pi * iso.natural_width;
    // |<J||d||J'>|^2 from the natural decay rate.
    const double dipole_sq = 3.0 * phys::pi * phys::vacuum_permittivity * phys::hbar *
                             std::pow(phys::speed_of_light, 3) * gamma * j_factor / std::pow(omega, 3);
    const double doppler = k * std::sqrt(2.0 * phys::boltzmann * cfg.temperature / iso.mass);
    const double prefactor = density_ * iso.abundance * dipole_sq / (phys::vacuum_permittivity * phys::hbar) *
                             std::sqrt(phys::pi) / doppler;
    const double half_width = phys::pi * (iso.natural_width + cfg.buffer_gas_width);
    const double zeeman = phys::bohr_magneton * cfg.magnetic_field / phys::planck;
    const double norm = l.strength * (2.0 * l.f_ground + 1.0) / ground_states[l.isotope];

    for (int q : {+1, -1}) {
      auto& out = q > 0 ? plus_ : minus_;
      for (int mg = -l.f_ground; mg <= l.f_ground; ++mg) {
        const int me = mg + q;
        if (std::abs(me) > l.f_excited) continue;
        const double w3j = wigner_3j(l.f_excited, 1, l.f_ground, me, mg - me, -mg);
        const double frac = norm * w3j * w3j;
        if (frac == 0.0) continue;
        const double shift = zeeman * (l.g_excited * me - l.g_ground * mg);
        out.push_back({reference_ + l.offset + shift, prefactor * frac, 1.0 / doppler, half_width});
      }
    }
  }
}

std::complex<double> Vapor::susceptibility(double frequency, Polarization pol) const {
  if (!(frequency >= lower_bound_ && frequency <= upper_bound_))
    throw std::out_of_range("frequency more than 200 GHz from the line reference");
  const auto& comps = pol == Polarization::sigma_plus ? plus_ : minus_;
  std::complex<double> chi{0.0, 0.0};
  for (const auto& c : comps) {
    const std::complex<double> z{phys::two_pi * (frequency - c.frequency) * c.inv_doppler, c.half_width * c.inv_doppler};
    chi += c.weight * faddeeva(z);
  }
  return std::complex<double>{0.0, 1.0} * chi;
}

std::complex<double> Vapor::refractive_index(double frequency, Polarization pol) const {
  return std::sqrt(1.0 + susceptibility(frequency, pol));
}

std::complex<double> Vapor::amplitude(double frequency, Polarization pol) const {
  const double k = phys::two_pi * frequency / phys::speed_of_light;
  const std::complex<double> dn = refractive_index(frequency, pol) - 1.0;
  return std::exp(std::complex<double>{0.0, 1.0} * k * length_ * dn);
}

std::complex<double> complex_susceptibility(double frequency, Polarization pol, const FilterConfig& cfg,
                                            const AtomicLineTable& lines) {
  return Vapor(cfg, lines).susceptibility(frequency, pol);
}

namespace {

double crossed_polarizer(const Vapor& vapor, double f, double extinction) {
  const auto tp = vapor.amplitude(f, Polarization::sigma_plus);
  const auto tm = vapor.amplitude(f, Polarization::sigma_minus);
  const double rotated = 0.25 * std::norm(tp - tm);
  return std::clamp(rotated + extinction * (1.0 - rotated), 0.0, 1.0);
}

double absorption_only(const Vapor& vapor, double f) {
  const auto tp = vapor.amplitude(f, Polarization::sigma_plus);
  const auto tm = vapor.amplitude(f, Polarization::sigma_minus);
  return std::clamp(0.5 * (std::norm(tp) + std::norm(tm)), 0.0, 1.0);
}

template <class Eval>
std::vector<double> evaluate(std::span<const double> freqs, Eval&& eval) {
  std::vector<double> out(freqs.size());
  parallel_for(freqs.size(), [&](std::size_t b, std::size_t e) {
    for (std::size_t i = b; i < e; ++i) out[i] = eval(freqs[i]);
  });
  return out;
}

template <class Eval>
Spectrum evaluate(const FrequencyGrid& grid, Eval&& eval) {
  grid.validate();
  Spectrum s{grid, std::vector<double>(grid.size), false};
  parallel_for(grid.size, [&](std::size_t b, std::size_t e) {
    for (std::size_t i = b; i < e; ++i) s.values[i] = eval(grid[i]);
  });
  return s;
}

}  // namespace

std::vector<double> fadof_transmission(std::span<const double> frequencies, const FilterConfig& cfg,
                                       const AtomicLineTable& lines) {
  for (std::size_t i = 1; i < frequencies.size(); ++i)
    if (!(frequencies[i] > frequencies[i - 1]))
      throw std::invalid_argument("frequency grid is not strictly increasing at index " + std::to_string(i));
  const Vapor vapor(cfg, lines);
  return evaluate(frequencies, [&](double f) { return crossed_polarizer(vapor, f, cfg.extinction); });
}

Spectrum fadof_transmission(const FrequencyGrid& grid, const FilterConfig& cfg, const AtomicLineTable& lines) {
  const Vapor vapor(cfg, lines);
  return evaluate(grid, [&](double f) { return crossed_polarizer(vapor, f, cfg.extinction); });
}

Spectrum mirror_transmission(const FrequencyGrid& grid, double degenerate_frequency, const FilterConfig& cfg,
                             const AtomicLineTable& lines) {
  const Vapor vapor(cfg, lines);
  return evaluate(grid, [&](double f) { return crossed_polarizer(vapor, 2.0 * degenerate_frequency - f, cfg.extinction); });
}

Spectrum hot_cell_transmission(const FrequencyGrid& grid, const FilterConfig& cfg, const AtomicLineTable& lines) {
  if (!(cfg.buffer_gas_width > 0.0)) throw std::invalid_argument("hot cell needs a buffer-gas width > 0");
  const Vapor vapor(cfg, lines);
  return evaluate(grid, [&](double f) { return absorption_only(vapor, f); });
}

std::vector<double> hot_cell_transmission(std::span<const double> frequencies, const FilterConfig& cfg,
                                          const AtomicLineTable& lines) {
  if (!(cfg.buffer_gas_width > 0.0)) throw std::invalid_argument("hot cell needs a buffer-gas width > 0");
  const Vapor vapor(cfg, lines);
  return evaluate(frequencies, [&](double f) { return absorption_only(vapor, f); });
}

FrequencyGrid default_grid(const AtomicLineTable& lines) {
  return FrequencyGrid::centered(lines.reference_frequency, 20e9, 1e6);
}

FilterMetrics filter_metrics(const Spectrum& s) {
  s.grid.validate();
  const auto& v = s.values;
  const std::size_t n = v.size();
  if (n != s.grid.size) throw std::invalid_argument("spectrum size does not match its grid");

  const auto peak_it = std::max_element(v.begin(), v.end());  // first index on ties
  const auto peak = static_cast<std::size_t>(peak_it - v.begin());
  if (peak == 0 || peak == n - 1) throw BoundaryPeakError("peak at grid boundary: grid too narrow or spectrum degenerate");

  FilterMetrics m;
  m.peak_transmission = v[peak];
  m.peak_frequency = s.grid[peak];
  const double half = 0.5 * m.peak_transmission;

  std::size_t lo = peak;
  while (lo > 0 && v[lo] > half) --lo;
  std::size_t hi = peak;
  while (hi < n - 1 && v[hi] > half) ++hi;
  if (v[lo] > half || v[hi] > half) throw BoundaryPeakError("half-maximum crossing outside the grid");

  auto cross = [&](std::size_t a, std::size_t b) {
    const double fa = s.grid[a];
    const double fb = s.grid[b];
    if (v[b] == v[a]) return fa;
    return fa + (half - v[a]) / (v[b] - v[a]) * (fb - fa);
  };
  m.fwhm = cross(hi - 1, hi) - cross(lo, lo + 1);

  std::vector<double> outside;
  outside.reserve(n);
  for (std::size_t i = 0; i < n; ++i)
    if (std::abs(s.grid[i] - m.peak_frequency) > 5.0 * m.fwhm) outside.push_back(v[i]);
  if (outside.empty()) throw BoundaryPeakError("no grid points outside +/- 5 FWHM of the peak");
  const auto mid = outside.begin() + static_cast<std::ptrdiff_t>(outside.size() / 2);
  std::nth_element(outside.begin(), mid, outside.end());
  double median = *mid;
  if (outside.size() % 2 == 0) {
    const double lower = *std::max_element(outside.begin(), mid);
    median = 0.5 * (median + lower);
  }
  m.floor = median;
  m.rejection_db = 10.0 * std::log10(m.peak_transmission / m.floor);
  return m;
}

}  // namespace fadofsim::atomic
