#include "fadofsim/config.hpp"

#include <cctype>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <set>
#include <sstream>

#include "fadofsim/constants.hpp"

namespace fadofsim {
namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::string where(const std::string& section, const std::string& key) { return "[" + section + "] " + key; }

double parse_double(const std::string& text, const std::string& context) {
  const std::string t = trim(text);
  if (t.empty()) throw ConfigError(context + ": empty value");
  char* end = nullptr;
  const double v = std::strtod(t.c_str(), &end);
  if (end != t.c_str() + t.size() || !std::isfinite(v)) throw ConfigError(context + ": not a finite number: '" + t + "'");
  return v;
}

bool parse_bool(const std::string& text, const std::string& context) {
  std::string t = trim(text);
  for (auto& c : t) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  if (t == "true" || t == "yes" || t == "1" || t == "on") return true;
  if (t == "false" || t == "no" || t == "0" || t == "off") return false;
  throw ConfigError(context + ": expected true or false, got '" + t + "'");
}

std::vector<double> linspace(double lo, double hi, int n) {
  if (n == 1) return {lo};
  std::vector<double> out;
  for (int i = 0; i < n; ++i) out.push_back(lo + (hi - lo) * i / (n - 1));
  return out;
}

const std::map<std::string, std::vector<std::string>>& schema() {
  static const std::map<std::string, std::vector<std::string>> s = {
      {"filter",
       {"line_data", "magnetic_field_mT", "temperature_K", "cell_length_m", "extinction", "buffer_gas_width_GHz",
        "number_density_per_m3", "operating_point_offset_GHz"}},
      {"grid", {"half_width_GHz", "step_MHz"}},
      {"hot_cell",
       {"enabled", "magnetic_field_mT", "temperature_K", "cell_length_m", "buffer_gas_width_GHz",
        "number_density_per_m3"}},
      {"opo",
       {"gamma_out_2pi_MHz", "gamma_loss_2pi_MHz", "round_trip_time_ns", "free_spectral_range_MHz",
        "envelope_fwhm_GHz", "pair_rate_per_s"}},
      {"detector",
       {"bin_width_ns", "clock_offset_ns", "singles_rate_1_per_s", "singles_rate_2_per_s", "acquisition_time_s"}},
      {"simulation",
       {"duration_s", "window_ns", "purity_window_ns", "contamination", "background_rate_per_s", "write_streams"}},
      {"optimize",
       {"field_min_mT", "field_max_mT", "field_points", "temperature_min_K", "temperature_max_K",
        "temperature_points", "grid_step_MHz", "comb_cutoff"}},
      {"noise",
       {"transmission_re", "transmission_im", "transmission_noise_re", "transmission_noise_im", "probe_re",
        "probe_im", "probe_noise_re", "probe_noise_im", "probe_power_uW", "attenuations", "loss_squeezing_dB", "loss_transmission",
        "extrapolation_flux_per_s", "wavelength_nm"}},
      {"output", {"directory", "seed"}},
  };
  return s;
}

template <class Fn>
void guarded(const std::string& section, Fn&& fn) {
  try {
    fn();
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception& e) {
    throw ConfigError("[" + section + "] " + e.what());
  }
}

}  // namespace

KeyValueConfig KeyValueConfig::parse(const std::string& text, const std::string& source) {
  KeyValueConfig kv;
  kv.source_ = source;
  std::istringstream in(text);
  std::string line;
  std::string section;
  int number = 0;
  while (std::getline(in, line)) {
    ++number;
    const auto hash = line.find_first_of("#;");
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const std::string at = source + ":" + std::to_string(number);
    if (line.front() == '[') {
      if (line.back() != ']') throw ConfigError(at + ": malformed section header");
      section = trim(line.substr(1, line.size() - 2));
      if (section.empty()) throw ConfigError(at + ": empty section name");
      kv.data_[section];
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError(at + ": expected key = value");
    if (section.empty()) throw ConfigError(at + ": key outside of a section");
    const std::string key = trim(line.substr(0, eq));
    if (key.empty()) throw ConfigError(at + ": empty key");
    auto& sec = kv.data_[section];
    if (sec.count(key)) throw ConfigError(at + ": duplicate key " + where(section, key));
    sec[key] = trim(line.substr(eq + 1));
  }
  return kv;
}

KeyValueConfig KeyValueConfig::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse(ss.str(), path.string());
}

bool KeyValueConfig::has(const std::string& section, const std::string& key) const {
  const auto s = data_.find(section);
  return s != data_.end() && s->second.count(key) > 0;
}

const std::string& KeyValueConfig::raw(const std::string& section, const std::string& key) const {
  const auto s = data_.find(section);
  if (s == data_.end() || !s->second.count(key)) throw ConfigError("missing key " + where(section, key));
  return s->second.at(key);
}

double KeyValueConfig::number(const std::string& section, const std::string& key) const {
  return parse_double(raw(section, key), where(section, key));
}

double KeyValueConfig::number_or(const std::string& section, const std::string& key, double fallback) const {
  return has(section, key) ? number(section, key) : fallback;
}

std::string KeyValueConfig::text_or(const std::string& section, const std::string& key,
                                    const std::string& fallback) const {
  return has(section, key) ? raw(section, key) : fallback;
}

std::vector<double> KeyValueConfig::numbers(const std::string& section, const std::string& key) const {
  std::string text = raw(section, key);
  for (auto& c : text)
    if (c == ',') c = ' ';
  std::istringstream in(text);
  std::vector<double> out;
  std::string token;
  while (in >> token) out.push_back(parse_double(token, where(section, key)));
  return out;
}

void KeyValueConfig::set(const std::string& section, const std::string& key, const std::string& value) {
  data_[section][key] = value;
}

void KeyValueConfig::check_schema(const std::map<std::string, std::vector<std::string>>& allowed) const {
  for (const auto& [section, keys] : data_) {
    const auto s = allowed.find(section);
    if (s == allowed.end()) throw ConfigError(source_ + ": unknown section [" + section + "]");
    const std::set<std::string> known(s->second.begin(), s->second.end());
    for (const auto& [key, value] : keys)
      if (!known.count(key)) throw ConfigError(source_ + ": unknown key " + where(section, key));
  }
}

std::string KeyValueConfig::hash() const {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  auto feed = [&h](const std::string& s) {
    for (unsigned char c : s) {
      h ^= c;
      h *= 0x100000001b3ULL;
    }
  };
  for (const auto& [section, keys] : data_)
    for (const auto& [key, value] : keys) feed(section + "." + key + "=" + value + "\n");
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

ExperimentConfig ExperimentConfig::from(const KeyValueConfig& kv, const std::filesystem::path& base_dir) {
  kv.check_schema(schema());
  ExperimentConfig c;
  c.hash = kv.hash();

  guarded("filter", [&] {
    const std::string lines = kv.text_or("filter", "line_data", "");
    if (lines.empty()) {
      c.line_data = atomic::default_line_table_path();
    } else {
      std::filesystem::path p(lines);
      c.line_data = p.is_relative() && !base_dir.empty() ? base_dir / p : p;
    }
    if (!std::filesystem::exists(c.line_data))
      throw ConfigError("[filter] line_data: file not found: " + c.line_data.string());
    auto& f = c.filter;
    f.magnetic_field = kv.number_or("filter", "magnetic_field_mT", f.magnetic_field * 1e3) * 1e-3;
    f.temperature = kv.number_or("filter", "temperature_K", f.temperature);
    f.cell_length = kv.number_or("filter", "cell_length_m", f.cell_length);
    f.extinction = kv.number_or("filter", "extinction", f.extinction);
    f.buffer_gas_width = kv.number_or("filter", "buffer_gas_width_GHz", 0.0) * 1e9;
    if (kv.has("filter", "number_density_per_m3")) f.number_density = kv.number("filter", "number_density_per_m3");
    if (kv.has("filter", "operating_point_offset_GHz")) {
      const auto table = atomic::AtomicLineTable::load(c.line_data);
      f.center_frequency = table.reference_frequency + kv.number("filter", "operating_point_offset_GHz") * 1e9;
    }
    f.validate();
  });

  guarded("grid", [&] {
    c.grid_half_width = kv.number_or("grid", "half_width_GHz", c.grid_half_width * 1e-9) * 1e9;
    c.grid_step = kv.number_or("grid", "step_MHz", c.grid_step * 1e-6) * 1e6;
    if (!(c.grid_half_width > 0.0)) throw ConfigError("[grid] half_width_GHz must be > 0");
    if (!(c.grid_step > 0.0) || c.grid_step > c.grid_half_width) throw ConfigError("[grid] step_MHz must lie in (0, half width]");
  });

  guarded("hot_cell", [&] {
    auto& h = c.hot_cell;
    h.enabled = kv.has("hot_cell", "enabled") ? parse_bool(kv.raw("hot_cell", "enabled"), "[hot_cell] enabled") : true;
    h.cell.magnetic_field = kv.number_or("hot_cell", "magnetic_field_mT", 0.0) * 1e-3;
    h.cell.temperature = kv.number_or("hot_cell", "temperature_K", 413.0);
    h.cell.cell_length = kv.number_or("hot_cell", "cell_length_m", 0.05);
    h.cell.buffer_gas_width = kv.number_or("hot_cell", "buffer_gas_width_GHz", 0.2) * 1e9;
    h.cell.extinction = 0.0;
    if (kv.has("hot_cell", "number_density_per_m3")) h.cell.number_density = kv.number("hot_cell", "number_density_per_m3");
    h.cell.validate();
    if (h.enabled && !(h.cell.buffer_gas_width > 0.0)) throw ConfigError("[hot_cell] buffer_gas_width_GHz must be > 0");
  });

  guarded("opo", [&] {
    auto& o = c.opo;
    o.gamma_out = phys::two_pi * kv.number_or("opo", "gamma_out_2pi_MHz", o.gamma_out / phys::two_pi * 1e-6) * 1e6;
    o.gamma_loss = phys::two_pi * kv.number_or("opo", "gamma_loss_2pi_MHz", o.gamma_loss / phys::two_pi * 1e-6) * 1e6;
    o.round_trip_time = kv.number_or("opo", "round_trip_time_ns", o.round_trip_time * 1e9) * 1e-9;
    o.free_spectral_range = kv.number_or("opo", "free_spectral_range_MHz", o.free_spectral_range * 1e-6) * 1e6;
    o.envelope_fwhm = kv.number_or("opo", "envelope_fwhm_GHz", o.envelope_fwhm * 1e-9) * 1e9;
    o.pair_rate = kv.number_or("opo", "pair_rate_per_s", o.pair_rate);
    for (const auto& [key, v] : {std::pair{"gamma_out_2pi_MHz", o.gamma_out}, {"gamma_loss_2pi_MHz", o.gamma_loss},
                                 {"round_trip_time_ns", o.round_trip_time}, {"free_spectral_range_MHz", o.free_spectral_range},
                                 {"envelope_fwhm_GHz", o.envelope_fwhm}})
      if (!(v > 0.0)) throw ConfigError(std::string("[opo] ") + key + " must be > 0");
    if (!(o.pair_rate >= 0.0)) throw ConfigError("[opo] pair_rate_per_s must be >= 0");
    o.validate();
  });

  guarded("detector", [&] {
    auto& d = c.detector;
    d.bin_width = kv.number_or("detector", "bin_width_ns", d.bin_width * 1e9) * 1e-9;
    d.clock_offset = kv.number_or("detector", "clock_offset_ns", d.clock_offset * 1e9) * 1e-9;
    d.singles_rate_1 = kv.number_or("detector", "singles_rate_1_per_s", d.singles_rate_1);
    d.singles_rate_2 = kv.number_or("detector", "singles_rate_2_per_s", d.singles_rate_2);
    d.acquisition_time = kv.number_or("detector", "acquisition_time_s", d.acquisition_time);
    if (!(d.bin_width > 0.0)) throw ConfigError("[detector] bin_width_ns must be > 0");
    if (!(d.acquisition_time > 0.0)) throw ConfigError("[detector] acquisition_time_s must be > 0");
    for (const auto& [key, v] : {std::pair{"singles_rate_1_per_s", d.singles_rate_1}, {"singles_rate_2_per_s", d.singles_rate_2}})
      if (!(v >= 0.0)) throw ConfigError(std::string("[detector] ") + key + " must be >= 0");
    d.validate();
  });

  guarded("simulation", [&] {
    auto& s = c.simulation;
    s.duration = kv.number_or("simulation", "duration_s", s.duration);
    s.window = kv.number_or("simulation", "window_ns", s.window * 1e9) * 1e-9;
    s.purity_window = kv.number_or("simulation", "purity_window_ns", s.purity_window * 1e9) * 1e-9;
    s.contamination = kv.number_or("simulation", "contamination", s.contamination);
    s.background_rate = kv.number_or("simulation", "background_rate_per_s", s.background_rate);
    if (kv.has("simulation", "write_streams"))
      s.write_streams = parse_bool(kv.raw("simulation", "write_streams"), "[simulation] write_streams");
    if (!(s.duration > 0.0)) throw ConfigError("[simulation] duration_s must be > 0");
    if (!(s.window > 0.0)) throw ConfigError("[simulation] window_ns must be > 0");
    const double ratio = s.window / c.detector.bin_width;
    if (std::abs(ratio - std::round(ratio)) > 1e-9 * ratio)
      throw ConfigError("[simulation] window_ns must be a multiple of [detector] bin_width_ns");
    if (!(s.purity_window >= 0.0 && s.purity_window <= s.window))
      throw ConfigError("[simulation] purity_window_ns must lie in [0, window_ns]");
    if (!(s.contamination >= 0.0 && s.contamination < 1.0)) throw ConfigError("[simulation] contamination must lie in [0, 1)");
    if (!(s.background_rate >= 0.0)) throw ConfigError("[simulation] background_rate_per_s must be >= 0");
  });

  guarded("optimize", [&] {
    auto range = [&](const std::string& lo_key, const std::string& hi_key, const std::string& n_key, double lo,
                     double hi, double n) {
      lo = kv.number_or("optimize", lo_key, lo);
      hi = kv.number_or("optimize", hi_key, hi);
      n = kv.number_or("optimize", n_key, n);
      if (lo > hi) throw ConfigError("[optimize] " + lo_key + " exceeds " + hi_key);
      if (!(n >= 1.0) || n != std::floor(n)) throw ConfigError("[optimize] " + n_key + " must be a positive integer");
      if (lo == hi && n != 1.0) throw ConfigError("[optimize] " + n_key + " must be 1 for an empty range");
      return linspace(lo, hi, static_cast<int>(n));
    };
    auto& o = c.optimize;
    o.fields = range("field_min_mT", "field_max_mT", "field_points", 3.0, 6.0, 7);
    for (auto& b : o.fields) b *= 1e-3;
    o.temperatures = range("temperature_min_K", "temperature_max_K", "temperature_points", 350.0, 380.0, 7);
    o.grid_step = kv.number_or("optimize", "grid_step_MHz", o.grid_step * 1e-6) * 1e6;
    o.comb_cutoff = kv.number_or("optimize", "comb_cutoff", o.comb_cutoff);
    if (!(o.grid_step > 0.0)) throw ConfigError("[optimize] grid_step_MHz must be > 0");
    if (!(o.comb_cutoff > 0.0 && o.comb_cutoff < 1.0)) throw ConfigError("[optimize] comb_cutoff must lie in (0, 1)");
  });

  guarded("noise", [&] {
    auto cplx = [&](const std::string& stem, std::complex<double> fallback) {
      return std::complex<double>(kv.number_or("noise", stem + "_re", fallback.real()),
                                  kv.number_or("noise", stem + "_im", fallback.imag()));
    };
    auto& m = c.noise;
    m.transmission = cplx("transmission", {0.8, 0.2});
    m.transmission_noise = cplx("transmission_noise", {1e-3, 5e-4});
    m.probe = cplx("probe", {3.0, 0.0});
    m.probe_noise = cplx("probe_noise", {2e-3, 1e-3});
    m.attenuation = 1.0;
    m.validate();
    auto& s = c.noise_sweep;
    s.attenuations = kv.has("noise", "attenuations") ? kv.numbers("noise", "attenuations")
                                                     : std::vector<double>{1.0, 0.8, 0.6, 0.4, 0.2, 0.1, 0.05};
    if (s.attenuations.size() < 3) throw ConfigError("[noise] attenuations needs at least 3 values");
    for (double t : s.attenuations)
      if (!(t > 0.0 && t <= 1.0)) throw ConfigError("[noise] attenuations must lie in (0, 1]");
    std::vector<double> sq = kv.has("noise", "loss_squeezing_dB") ? kv.numbers("noise", "loss_squeezing_dB")
                                                                   : std::vector<double>{6.0};
    std::vector<double> tr = kv.has("noise", "loss_transmission") ? kv.numbers("noise", "loss_transmission")
                                                                  : std::vector<double>{0.70};
    if (sq.size() != tr.size()) throw ConfigError("[noise] loss_squeezing_dB and loss_transmission differ in length");
    for (std::size_t i = 0; i < sq.size(); ++i) {
      if (!(sq[i] >= 0.0)) throw ConfigError("[noise] loss_squeezing_dB must be >= 0");
      if (!(tr[i] >= 0.0 && tr[i] <= 1.0)) throw ConfigError("[noise] loss_transmission must lie in [0, 1]");
      s.loss_table.emplace_back(sq[i], tr[i]);
    }
    s.probe_power = kv.number_or("noise", "probe_power_uW", s.probe_power * 1e6) * 1e-6;
    if (!(s.probe_power > 0.0)) throw ConfigError("[noise] probe_power_uW must be > 0");
    s.extrapolation_flux = kv.number_or("noise", "extrapolation_flux_per_s", s.extrapolation_flux);
    s.wavelength = kv.number_or("noise", "wavelength_nm", s.wavelength * 1e9) * 1e-9;
    if (!(s.extrapolation_flux >= 0.0)) throw ConfigError("[noise] extrapolation_flux_per_s must be >= 0");
    if (!(s.wavelength > 0.0)) throw ConfigError("[noise] wavelength_nm must be > 0");
  });

  guarded("output", [&] {
    c.output_dir = kv.text_or("output", "directory", c.output_dir.string());
    if (kv.has("output", "seed")) {
      const std::string t = kv.raw("output", "seed");
      char* end = nullptr;
      const unsigned long long v = std::strtoull(t.c_str(), &end, 10);
      if (t.empty() || end != t.c_str() + t.size() || t.front() == '-')
        throw ConfigError("[output] seed: expected an unsigned integer, got '" + t + "'");
      c.seed = v;
    }
  });
  return c;
}

ExperimentConfig ExperimentConfig::load(const std::filesystem::path& path) {
  return from(KeyValueConfig::load(path), path.parent_path());
}

std::string default_config_text() {
  return R"([filter]
magnetic_field_mT = 4.5
temperature_K = 365
cell_length_m = 0.325
extinction = 1.8e-6
buffer_gas_width_GHz = 0

[grid]
half_width_GHz = 20
step_MHz = 1

[hot_cell]
enabled = true
magnetic_field_mT = 0
temperature_K = 413
cell_length_m = 0.05
buffer_gas_width_GHz = 0.2

[opo]
gamma_out_2pi_MHz = 7.0
gamma_loss_2pi_MHz = 1.4
round_trip_time_ns = 1.99
free_spectral_range_MHz = 501
envelope_fwhm_GHz = 150
pair_rate_per_s = 1e5

[detector]
bin_width_ns = 1
clock_offset_ns = 0
singles_rate_1_per_s = 1e4
singles_rate_2_per_s = 1e4
acquisition_time_s = 10

[simulation]
duration_s = 10
window_ns = 200
purity_window_ns = 50
contamination = 0.02
background_rate_per_s = 100
write_streams = true

[optimize]
field_min_mT = 3
field_max_mT = 6
field_points = 7
temperature_min_K = 350
temperature_max_K = 380
temperature_points = 7
grid_step_MHz = 2
comb_cutoff = 1e-3

[noise]
transmission_re = 0.8
transmission_im = 0.2
transmission_noise_re = 1e-3
transmission_noise_im = 5e-4
probe_re = 3.0
probe_im = 0
probe_noise_re = 2e-3
probe_noise_im = 1e-3
probe_power_uW = 1.0
attenuations = 1.0, 0.8, 0.6, 0.4, 0.2, 0.1, 0.05
loss_squeezing_dB = 6
loss_transmission = 0.70
extrapolation_flux_per_s = 1e7
wavelength_nm = 794.7

[output]
directory = out
seed = 1
)";
}

}  // namespace fadofsim
