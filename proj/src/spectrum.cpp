#include "fadofsim/spectrum.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <iomanip>
#include <ostream>
#include <stdexcept>

namespace fadofsim {

FrequencyGrid FrequencyGrid::span(double first, double last, std::size_t size) {
  if (size < 2) throw std::invalid_argument("frequency grid needs at least 2 points");
  FrequencyGrid g{first, (last - first) / static_cast<double>(size - 1), size};
  g.validate();
  return g;
}

FrequencyGrid FrequencyGrid::centered(double center, double half_width, double step) {
  if (!(step > 0.0) || !(half_width > 0.0)) throw std::invalid_argument("grid step and half width must be positive");
  const auto half = static_cast<std::size_t>(std::llround(half_width / step));
  FrequencyGrid g{center - static_cast<double>(half) * step, step, 2 * half + 1};
  g.validate();
  return g;
}

FrequencyGrid FrequencyGrid::from_points(std::span<const double> points) {
  if (points.size() < 2) throw std::invalid_argument("frequency grid needs at least 2 points");
  const double step = (points.back() - points.front()) / static_cast<double>(points.size() - 1);
  for (std::size_t i = 1; i < points.size(); ++i) {
    const double d = points[i] - points[i - 1];
    if (!(d > 0.0)) throw std::invalid_argument("frequency grid is not strictly increasing at index " + std::to_string(i));
    if (std::abs(d - step) > 1e-6 * step) throw std::invalid_argument("frequency grid is not uniform at index " + std::to_string(i));
  }
  return {points.front(), step, points.size()};
}

std::vector<double> FrequencyGrid::points() const {
  std::vector<double> p(size);
  for (std::size_t i = 0; i < size; ++i) p[i] = (*this)[i];
  return p;
}

void FrequencyGrid::validate() const {
  if (size < 2) throw std::invalid_argument("frequency grid needs at least 2 points");
  if (!(step > 0.0) || !std::isfinite(step)) throw std::invalid_argument("frequency grid is not strictly increasing");
  if (!std::isfinite(start)) throw std::invalid_argument("frequency grid start is not finite");
}

double Spectrum::at(double frequency) const {
  if (!grid.contains(frequency)) return 0.0;
  const double x = (frequency - grid.start) / grid.step;
  const auto i = std::min(static_cast<std::size_t>(x), values.size() - 2);
  const double frac = x - static_cast<double>(i);
  return values[i] + frac * (values[i + 1] - values[i]);
}

double Spectrum::integral() const {
  if (values.size() < 2) return 0.0;
  double sum = 0.5 * (values.front() + values.back());
  for (std::size_t i = 1; i + 1 < values.size(); ++i) sum += values[i];
  return sum * grid.step;
}

void Spectrum::validate_transmission() const {
  for (std::size_t i = 0; i < values.size(); ++i)
    if (!(values[i] >= 0.0 && values[i] <= 1.0))
      throw std::domain_error("transmission outside [0, 1] at index " + std::to_string(i));
}

Spectrum multiply(const Spectrum& a, const Spectrum& b) {
  if (a.size() != b.size() || a.grid.start != b.grid.start || a.grid.step != b.grid.step)
    throw std::invalid_argument("spectra are sampled on different grids");
  Spectrum out{a.grid, std::vector<double>(a.size()), a.under_resolved || b.under_resolved};
  for (std::size_t i = 0; i < a.size(); ++i) out.values[i] = a.values[i] * b.values[i];
  return out;
}

void write_spectrum_csv(std::ostream& out, const Spectrum& s, const std::string& value_column,
                        const std::string& header_comment) {
  if (!header_comment.empty()) out << "# " << header_comment << '\n';
  out << "frequency_Hz," << value_column << '\n';
  out << std::setprecision(17);
  for (std::size_t i = 0; i < s.size(); ++i) out << s.grid[i] << ',' << s.values[i] << '\n';
}

}  // namespace fadofsim
