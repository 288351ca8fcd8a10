#pragma once

#include <complex>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "fadofsim/spectrum.hpp"

namespace fadofsim::atomic {

struct Isotope {
  std::string label;
  double abundance = 0.0;         // fraction
  double mass = 0.0;              // kg
  double natural_width = 0.0;     // Hz, Lorentzian FWHM of the excited state
};

/// One hyperfine component Fg -> Fe of the line.
struct HyperfineLine {
  std::string isotope;
  int f_ground = 0;
  int f_excited = 0;
  double offset = 0.0;       // Hz from the reference frequency
  double strength = 0.0;     // relative hyperfine factor S(Fg, Fe)
  double g_ground = 0.0;     // Lande gF
  double g_excited = 0.0;
};

struct AtomicLineTable {
  int format_version = 1;
  double reference_frequency = 0.0;  // Hz, D-line centroid
  double j_ground = 0.5;
  double j_excited = 0.5;
  std::vector<Isotope> isotopes;
  std::vector<HyperfineLine> lines;

  static AtomicLineTable load(const std::filesystem::path& path);
  static AtomicLineTable parse(std::istream& in, const std::string& source = "<stream>");

  const Isotope& isotope(const std::string& label) const;
  void validate() const;
};

/// Path of the bundled Rb D1 table.
std::filesystem::path default_line_table_path();

enum class ZeemanModel { linear };

struct FilterConfig {
  double magnetic_field = 4.5e-3;     // T, along the propagation axis
  double temperature = 365.0;         // K
  double cell_length = 0.325;         // m
  double extinction = 1.8e-6;         // crossed-polarizer leakage (power ratio)
  double center_frequency = 0.0;      // Hz, absolute operating point
  double buffer_gas_width = 0.0;      // Hz, collisional Lorentzian FWHM
  std::optional<double> number_density;  // m^-3, overrides the vapor-pressure curve
  ZeemanModel zeeman = ZeemanModel::linear;

  void validate() const;
};

enum class Polarization { sigma_plus, sigma_minus };

/// Saturated rubidium vapor number density (m^-3) from the solid/liquid
/// vapor-pressure curves.
double rubidium_number_density(double temperature);

/// Precomputed Zeeman-resolved components for one (config, table) pair.
/// Evaluation is const and thread-safe.
class Vapor {
 public:
  Vapor(const FilterConfig& cfg, const AtomicLineTable& lines);

  std::complex<double> susceptibility(double frequency, Polarization pol) const;
  /// Refractive index sqrt(1 + chi).
  std::complex<double> refractive_index(double frequency, Polarization pol) const;
  /// Complex amplitude transmission through the cell for one circular component,
  /// with the vacuum propagation phase removed.
  std::complex<double> amplitude(double frequency, Polarization pol) const;

  double number_density() const { return density_; }
  double reference_frequency() const { return reference_; }
  std::size_t component_count() const { return plus_.size() + minus_.size(); }

 private:
  struct Component {
    double frequency;    // Hz, Zeeman shifted
    double weight;       // chi prefactor including sqrt(pi)/(k u)
    double inv_doppler;  // 1/(k u), s
    double half_width;   // rad/s, Lorentzian HWHM
  };
  std::vector<Component> plus_;
  std::vector<Component> minus_;
  double density_ = 0.0;
  double reference_ = 0.0;
  double length_ = 0.0;
  double lower_bound_ = 0.0;
  double upper_bound_ = 0.0;
};

/// Complex susceptibility of the vapor for circular polarization `pol`.
std::complex<double> complex_susceptibility(double frequency, Polarization pol,
                                            const FilterConfig& cfg,
                                            const AtomicLineTable& lines);

/// Crossed-polarizer FADOF transmission including the extinction floor.
Spectrum fadof_transmission(const FrequencyGrid& grid, const FilterConfig& cfg,
                            const AtomicLineTable& lines);
std::vector<double> fadof_transmission(std::span<const double> frequencies,
                                       const FilterConfig& cfg, const AtomicLineTable& lines);

/// Absorption-only transmission of a (buffer-gas broadened) reference cell.
Spectrum hot_cell_transmission(const FrequencyGrid& grid, const FilterConfig& cfg,
                               const AtomicLineTable& lines);
std::vector<double> hot_cell_transmission(std::span<const double> frequencies,
                                          const FilterConfig& cfg, const AtomicLineTable& lines);

/// FADOF transmission mirrored about `degenerate_frequency`: T(2 f0 - f).
Spectrum mirror_transmission(const FrequencyGrid& grid, double degenerate_frequency,
                             const FilterConfig& cfg, const AtomicLineTable& lines);

/// Default grid: +/- 20 GHz around the table reference at 1 MHz.
FrequencyGrid default_grid(const AtomicLineTable& lines);

struct FilterMetrics {
  double peak_transmission = 0.0;
  double peak_frequency = 0.0;  // Hz
  double fwhm = 0.0;            // Hz
  double floor = 0.0;           // median transmission outside +/- 5 FWHM
  double rejection_db = 0.0;
};

class BoundaryPeakError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Peak, FWHM and out-of-band rejection of a transmission spectrum.
/// Throws BoundaryPeakError if the peak or its half-maximum crossings reach
/// the grid edge.
FilterMetrics filter_metrics(const Spectrum& s);

}  // namespace fadofsim::atomic
