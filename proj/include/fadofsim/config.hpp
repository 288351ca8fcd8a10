#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "fadofsim/atomic_filter.hpp"
#include "fadofsim/cv_noise.hpp"
#include "fadofsim/opo.hpp"

namespace fadofsim {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Raw sectioned key/value text:
///
///   [section]
///   key_with_unit = value   # comment
///
/// Keys carry their unit as a suffix (magnetic_field_mT, cell_length_m, ...).
class KeyValueConfig {
 public:
  static KeyValueConfig parse(const std::string& text, const std::string& source = "<string>");
  static KeyValueConfig load(const std::filesystem::path& path);

  bool has(const std::string& section, const std::string& key) const;
  const std::string& raw(const std::string& section, const std::string& key) const;
  double number(const std::string& section, const std::string& key) const;
  double number_or(const std::string& section, const std::string& key, double fallback) const;
  std::string text_or(const std::string& section, const std::string& key, const std::string& fallback) const;
  std::vector<double> numbers(const std::string& section, const std::string& key) const;

  void set(const std::string& section, const std::string& key, const std::string& value);
  /// Rejects keys outside `schema` (section -> allowed keys).
  void check_schema(const std::map<std::string, std::vector<std::string>>& schema) const;
  /// FNV-1a hash over the canonical (sorted) content.
  std::string hash() const;

  const std::map<std::string, std::map<std::string, std::string>>& sections() const { return data_; }
  const std::string& source() const { return source_; }

 private:
  std::map<std::string, std::map<std::string, std::string>> data_;
  std::string source_;
};

struct HotCellConfig {
  bool enabled = true;
  atomic::FilterConfig cell;
};

struct SimulationConfig {
  double duration = 10.0;        // s
  double window = 200e-9;        // s, histogram half-width
  double purity_window = 50e-9;  // s
  double contamination = 0.02;   // fraction of filtered pairs outside resonance
  double background_rate = 1e2;  // s^-1, hot-cell path background
  bool write_streams = true;
};

struct OptimizeConfig {
  std::vector<double> fields;        // T
  std::vector<double> temperatures;  // K
  double grid_step = 2e6;            // Hz
  double comb_cutoff = 1e-3;
};

struct NoiseSweepConfig {
  std::vector<double> attenuations;  // T_ND power transmissions
  double probe_power = 1e-6;         // W at T_ND = 1
  std::vector<std::pair<double, double>> loss_table;  // (S_in dB, T)
  double extrapolation_flux = 1e7;   // photons/s
  double wavelength = 794.7e-9;      // m
};

struct ExperimentConfig {
  std::filesystem::path line_data;
  atomic::FilterConfig filter;
  HotCellConfig hot_cell;
  opo::OpoConfig opo;
  opo::DetectorConfig detector;
  cv::NoiseModel noise;
  SimulationConfig simulation;
  OptimizeConfig optimize;
  NoiseSweepConfig noise_sweep;
  double grid_half_width = 20e9;
  double grid_step = 1e6;
  std::uint64_t seed = 1;
  std::filesystem::path output_dir = "out";
  std::string hash;

  /// Converts and validates; errors name the offending section and key.
  static ExperimentConfig from(const KeyValueConfig& kv, const std::filesystem::path& base_dir = {});
  static ExperimentConfig load(const std::filesystem::path& path);
};

/// Built-in configuration: Rb D1 FADOF at 4.5 mT / 365 K and a 501 MHz FSR OPO.
std::string default_config_text();

}  // namespace fadofsim
