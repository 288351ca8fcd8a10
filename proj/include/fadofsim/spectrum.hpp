#pragma once

#include <cstddef>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

namespace fadofsim {

/// Uniform, strictly increasing frequency grid (Hz).
struct FrequencyGrid {
  double start = 0.0;
  double step = 1.0;
  std::size_t size = 0;

  /// Grid of `size` points from `first` to `last` inclusive.
  static FrequencyGrid span(double first, double last, std::size_t size);
  /// Grid centered on `center` covering +/- `half_width` at `step` spacing.
  static FrequencyGrid centered(double center, double half_width, double step);
  /// Validates that `points` are strictly increasing and uniformly spaced.
  static FrequencyGrid from_points(std::span<const double> points);

  double operator[](std::size_t i) const { return start + step * static_cast<double>(i); }
  double front() const { return start; }
  double back() const { return (*this)[size - 1]; }
  bool contains(double f) const { return f >= front() && f <= back(); }
  std::vector<double> points() const;

  void validate() const;
};

/// Sampled transmission (power ratio) or spectral density on a uniform grid.
struct Spectrum {
  FrequencyGrid grid;
  std::vector<double> values;
  /// Set when the grid spacing is too coarse for the features it samples.
  bool under_resolved = false;

  std::size_t size() const { return values.size(); }
  /// Linear interpolation; zero outside the grid.
  double at(double frequency) const;
  /// Trapezoidal integral over the grid.
  double integral() const;
  /// Throws unless every value is in [0, 1].
  void validate_transmission() const;
};

/// Pointwise product of two spectra on the same grid.
Spectrum multiply(const Spectrum& a, const Spectrum& b);

/// Two-column CSV (frequency_Hz, <value_column>); optional `# key=value` header line.
void write_spectrum_csv(std::ostream& out, const Spectrum& s, const std::string& value_column,
                        const std::string& header_comment = {});

}  // namespace fadofsim
