#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>

#include "fadofsim/atomic_filter.hpp"

#ifndef FADOFSIM_DEFAULT_LINE_FILE
#define FADOFSIM_DEFAULT_LINE_FILE "data/rb_d1.lines"
#endif

namespace fadofsim::atomic {
namespace {

[[noreturn]] void parse_error(const std::string& source, int line_no, const std::string& what) {
  throw std::runtime_error(source + ":" + std::to_string(line_no) + ": " + what);
}

}  // namespace

std::filesystem::path default_line_table_path() { return FADOFSIM_DEFAULT_LINE_FILE; }

AtomicLineTable AtomicLineTable::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open line data file: " + path.string());
  return parse(in, path.string());
}

AtomicLineTable AtomicLineTable::parse(std::istream& in, const std::string& source) {
  AtomicLineTable tab;
  bool have_format = false;
  bool have_center = false;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    std::istringstream ss(line);
    std::string tag;
    if (!(ss >> tag)) continue;

    if (tag == "format") {
      std::string name;
      if (!(ss >> name >> tab.format_version) || name != "fadofsim-lines")
        parse_error(source, line_no, "expected 'format fadofsim-lines <version>'");
      if (tab.format_version != 1) parse_error(source, line_no, "unsupported format version " + std::to_string(tab.format_version));
      have_format = true;
    } else if (tag == "d1_center_Hz") {
      if (!(ss >> tab.reference_frequency)) parse_error(source, line_no, "bad d1_center_Hz");
      have_center = true;
    } else if (tag == "j_ground") {
      if (!(ss >> tab.j_ground)) parse_error(source, line_no, "bad j_ground");
    } else if (tag == "j_excited") {
      if (!(ss >> tab.j_excited)) parse_error(source, line_no, "bad j_excited");
    } else if (tag == "isotope") {
      Isotope iso;
      if (!(ss >> iso.label)) parse_error(source, line_no, "isotope label missing");
      std::string key;
      std::set<std::string> seen;
      while (ss >> key) {
        double v = 0.0;
        if (!(ss >> v)) parse_error(source, line_no, "missing value for " + key);
        if (key == "abundance") iso.abundance = v;
        else if (key == "mass_kg") iso.mass = v;
        else if (key == "natural_width_Hz") iso.natural_width = v;
        else parse_error(source, line_no, "unknown isotope field " + key);
        seen.insert(key);
      }
      if (seen.size() != 3) parse_error(source, line_no, "isotope needs abundance, mass_kg and natural_width_Hz");
      tab.isotopes.push_back(iso);
    } else if (tag == "line") {
      HyperfineLine l;
      if (!(ss >> l.isotope >> l.f_ground >> l.f_excited >> l.offset >> l.strength >> l.g_ground >> l.g_excited))
        parse_error(source, line_no, "line record needs isotope Fg Fe offset_Hz strength gF_ground gF_excited");
      tab.lines.push_back(l);
    } else {
      parse_error(source, line_no, "unknown record '" + tag + "'");
    }
  }
  if (!have_format) throw std::runtime_error(source + ": missing format header");
  if (!have_center) throw std::runtime_error(source + ": missing d1_center_Hz");
  tab.validate();
  return tab;
}

const Isotope& AtomicLineTable::isotope(const std::string& label) const {
  for (const auto& iso : isotopes)
    if (iso.label == label) return iso;
  throw std::out_of_range("unknown isotope " + label);
}

void AtomicLineTable::validate() const {
  if (isotopes.empty()) throw std::invalid_argument("line table has no isotopes");
  if (lines.empty()) throw std::invalid_argument("line table has no lines");
  double total = 0.0;
  for (const auto& iso : isotopes) {
    if (!(iso.abundance >= 0.0)) throw std::invalid_argument("negative abundance for " + iso.label);
    if (!(iso.mass > 0.0)) throw std::invalid_argument("non-positive mass for " + iso.label);
    if (!(iso.natural_width > 0.0)) throw std::invalid_argument("non-positive natural width for " + iso.label);
    total += iso.abundance;
  }
  if (std::abs(total - 1.0) > 1e-9) throw std::invalid_argument("isotope abundances do not sum to 1");
  for (const auto& l : lines) {
    (void)isotope(l.isotope);
    if (!(l.strength > 0.0)) throw std::invalid_argument("non-positive line strength in " + l.isotope);
    if (!std::isfinite(l.offset)) throw std::invalid_argument("non-finite line offset in " + l.isotope);
    if (l.f_ground < 0 || l.f_excited < 0) throw std::invalid_argument("negative F in " + l.isotope);
  }
}

}  // namespace fadofsim::atomic
