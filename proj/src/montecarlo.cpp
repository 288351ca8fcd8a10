#include "fadofsim/montecarlo.hpp"

#include <boost/math/special_functions/gamma.hpp>
#include <cmath>
#include <fstream>
#include <map>
#include <random>
#include <stdexcept>

#include <json.hpp>

#include "fadofsim/parallel.hpp"

namespace fadofsim::mc {
namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

/// mt19937_64 with explicit transforms so that streams do not depend on the
/// standard library's distribution implementations.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}
  // [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  // (0, 1]
  double open_uniform() { return 1.0 - uniform(); }
  double exponential(double rate) { return -std::log(open_uniform()) / rate; }

 private:
  std::mt19937_64 engine_;
};

double sample_delay(const DelayLaw& law, Rng& rng) {
  const double u_sign = rng.uniform();
  const double u_mag = rng.open_uniform();
  if (const auto* e = std::get_if<ExponentialDelay>(&law)) {
    const double mag = -std::log(u_mag) / e->decay_rate;
    return u_sign < 0.5 ? -mag : mag;
  }
  const auto& c = std::get<CombDelay>(law);
  const double q = std::exp(-c.decay_rate * c.period);
  const double p_zero = (1.0 - q) / (1.0 + q);
  const double u_zero = rng.uniform();
  if (u_zero < p_zero) return 0.0;
  const double m = 1.0 + std::floor(std::log(u_mag) / std::log(q));
  return (u_sign < 0.5 ? -m : m) * c.period;
}

struct SliceEvents {
  std::array<std::vector<std::int64_t>, 2> ts;
  std::uint64_t pairs = 0;
};

std::int64_t to_ps(double seconds) { return std::llround(seconds * static_cast<double>(picoseconds_per_second)); }

}  // namespace

DelayLaw filtered_delay_law(const opo::OpoConfig& cfg) { return ExponentialDelay{cfg.total_decay()}; }

DelayLaw unfiltered_delay_law(const opo::OpoConfig& cfg) { return CombDelay{cfg.total_decay(), cfg.round_trip_time}; }

double EventStream::seconds(std::size_t channel, std::size_t i) const {
  return static_cast<double>(timestamps[channel][i]) / static_cast<double>(picoseconds_per_second);
}

void EventStream::validate() const {
  const auto limit = static_cast<std::uint64_t>(to_ps(duration));
  for (const auto& ch : timestamps) {
    if (!std::is_sorted(ch.begin(), ch.end())) throw std::logic_error("timestamps not sorted");
    if (!ch.empty() && ch.back() > limit) throw std::logic_error("timestamp beyond stream duration");
  }
}

EventStream generate_pair_events(const PairSource& source, const opo::DetectorConfig& det, double duration,
                                 std::uint64_t seed, const GenerateOptions& opt) {
  if (!(duration > 0.0)) throw std::invalid_argument("stream duration must be > 0");
  if (!(source.pair_rate >= 0.0)) throw std::invalid_argument("pair rate must be >= 0");
  if (!(det.singles_rate_1 >= 0.0) || !(det.singles_rate_2 >= 0.0)) throw std::invalid_argument("singles rates must be >= 0");
  if (source.pair_rate == 0.0 && det.singles_rate_1 == 0.0 && det.singles_rate_2 == 0.0)
    throw std::invalid_argument("all rates are zero");
  if (!(opt.slice_duration > 0.0)) throw std::invalid_argument("slice duration must be > 0");
  std::visit([](const auto& law) {
    if (!(law.decay_rate > 0.0)) throw std::invalid_argument("delay decay rate must be > 0");
  }, source.delay);
  if (const auto* c = std::get_if<CombDelay>(&source.delay); c && !(c->period > 0.0))
    throw std::invalid_argument("comb period must be > 0");

  std::vector<double> cumulative;
  double acc = 0.0;
  for (const auto& cls : source.classes) {
    if (!(cls.probability >= 0.0)) throw std::invalid_argument("class probability must be >= 0");
    if (!(cls.signal_transmission >= 0.0 && cls.signal_transmission <= 1.0) ||
        !(cls.idler_transmission >= 0.0 && cls.idler_transmission <= 1.0))
      throw std::invalid_argument("class transmissions must lie in [0, 1]");
    acc += cls.probability;
    cumulative.push_back(acc);
  }
  if (source.classes.empty() || std::abs(acc - 1.0) > 1e-9) throw std::invalid_argument("class probabilities must sum to 1");

  const auto slices = static_cast<std::size_t>(std::ceil(duration / opt.slice_duration));
  const std::int64_t limit = to_ps(duration);
  std::vector<SliceEvents> per_slice(slices);

  parallel_for(slices, [&](std::size_t b, std::size_t e) {
    for (std::size_t s = b; s < e; ++s) {
      Rng rng(splitmix64(seed ^ splitmix64(static_cast<std::uint64_t>(s))));
      const double t0 = static_cast<double>(s) * opt.slice_duration;
      const double t1 = std::min(duration, t0 + opt.slice_duration);
      auto& out = per_slice[s];
      auto keep = [&](std::size_t ch, double t) {
        const std::int64_t ps = to_ps(t);
        if (ps >= 0 && ps <= limit) out.ts[ch].push_back(ps);
      };

      if (source.pair_rate > 0.0) {
        for (double t = t0 + rng.exponential(source.pair_rate); t < t1; t += rng.exponential(source.pair_rate)) {
          ++out.pairs;
          const double u_class = rng.uniform();
          const auto cls_index = static_cast<std::size_t>(
              std::upper_bound(cumulative.begin(), cumulative.end(), u_class * acc) - cumulative.begin());
          const auto& cls = source.classes[std::min(cls_index, source.classes.size() - 1)];
          const double delay = sample_delay(source.delay, rng);
          const bool signal_ok = rng.uniform() < cls.signal_transmission;
          const bool idler_ok = rng.uniform() < cls.idler_transmission;
          if (signal_ok) keep(EventStream::signal, t);
          if (idler_ok) keep(EventStream::idler, t + delay + det.clock_offset);
        }
      }
      const double rates[2] = {det.singles_rate_1, det.singles_rate_2};
      for (std::size_t ch = 0; ch < 2; ++ch) {
        if (rates[ch] <= 0.0) continue;
        for (double t = t0 + rng.exponential(rates[ch]); t < t1; t += rng.exponential(rates[ch])) keep(ch, t);
      }
    }
  });

  EventStream stream;
  stream.seed = seed;
  stream.duration = duration;
  for (std::size_t ch = 0; ch < 2; ++ch) {
    std::size_t total = 0;
    for (const auto& s : per_slice) total += s.ts[ch].size();
    auto& dst = stream.timestamps[ch];
    dst.reserve(total);
    for (const auto& s : per_slice)
      for (auto v : s.ts[ch]) dst.push_back(static_cast<std::uint64_t>(v));
    std::sort(dst.begin(), dst.end());
  }
  for (const auto& s : per_slice) stream.pairs_emitted += s.pairs;
  return stream;
}

std::uint64_t Histogram::at(int index) const {
  if (index < first_index || index > last_index()) return 0;
  return counts[static_cast<std::size_t>(index - first_index)];
}

Histogram histogram(const EventStream& stream, double bin_width, double window, Binning binning) {
  if (!(bin_width > 0.0)) throw std::invalid_argument("bin width must be > 0");
  if (!(window >= 0.0)) throw std::invalid_argument("window must be >= 0");
  const double ratio = window / bin_width;
  const double half_bins = std::round(ratio);
  if (std::abs(ratio - half_bins) > 1e-9 * std::max(1.0, ratio)) throw std::invalid_argument("window must be a multiple of the bin width");
  const auto bin_ps = to_ps(bin_width);
  if (bin_ps <= 0) throw std::invalid_argument("bin width below 1 ps");

  const auto w = static_cast<std::int64_t>(half_bins);
  Histogram h;
  h.bin_width = bin_width;
  h.first_index = -static_cast<int>(w);
  h.counts.assign(static_cast<std::size_t>(2 * w + 1), 0);

  const auto& sig = stream.timestamps[EventStream::signal];
  const auto& idl = stream.timestamps[EventStream::idler];
  std::size_t start = 0;
  for (const auto ts_u : sig) {
    const auto ts = static_cast<std::int64_t>(ts_u);
    if (binning == Binning::clock) {
      const std::int64_t is = ts / bin_ps;
      while (start < idl.size() && static_cast<std::int64_t>(idl[start]) / bin_ps < is - w) ++start;
      for (std::size_t j = start; j < idl.size(); ++j) {
        const std::int64_t k = static_cast<std::int64_t>(idl[j]) / bin_ps - is;
        if (k > w) break;
        ++h.counts[static_cast<std::size_t>(k + w)];
      }
    } else {
      const std::int64_t lo = ts - w * bin_ps;
      while (start < idl.size() && static_cast<std::int64_t>(idl[start]) < lo) ++start;
      for (std::size_t j = start; j < idl.size(); ++j) {
        const std::int64_t d = static_cast<std::int64_t>(idl[j]) - ts;
        const std::int64_t k = d >= 0 ? d / bin_ps : -((-d + bin_ps - 1) / bin_ps);
        if (k > w) break;
        ++h.counts[static_cast<std::size_t>(k + w)];
      }
    }
  }
  for (auto c : h.counts) h.total += c;
  return h;
}

std::uint64_t coincidences_in_window(const Histogram& h, double window) {
  if (h.counts.empty()) return 0;
  const auto peak = static_cast<std::size_t>(std::max_element(h.counts.begin(), h.counts.end()) - h.counts.begin());
  const double reach = window / h.bin_width * (1.0 + 1e-12);
  std::uint64_t sum = 0;
  for (std::size_t i = 0; i < h.counts.size(); ++i) {
    const double offset = std::abs(static_cast<double>(i) - static_cast<double>(peak));
    if (offset <= reach) sum += h.counts[i];
  }
  return sum;
}

ChiSquare chi_square(const Histogram& observed, const std::vector<opo::HistogramBin>& expected, double min_expected) {
  ChiSquare r;
  for (const auto& b : expected) {
    const double e = b.expected();
    if (e < min_expected) continue;
    const double o = static_cast<double>(observed.at(b.index));
    r.statistic += (o - e) * (o - e) / e;
    ++r.degrees_of_freedom;
  }
  if (r.degrees_of_freedom == 0) throw std::invalid_argument("no bins above the minimum expectation");
  r.p_value = boost::math::gamma_q(0.5 * r.degrees_of_freedom, 0.5 * r.statistic);
  return r;
}

double kolmogorov_p_value(double statistic, std::size_t n) {
  const double sn = std::sqrt(static_cast<double>(n));
  const double lambda = (sn + 0.12 + 0.11 / sn) * statistic;
  if (lambda < 1e-3) return 1.0;
  double sum = 0.0;
  for (int k = 1; k <= 100; ++k) {
    const double term = std::exp(-2.0 * k * k * lambda * lambda);
    sum += (k % 2 ? 2.0 : -2.0) * term;
    if (term < 1e-16) break;
  }
  return std::clamp(sum, 0.0, 1.0);
}

void write_timestamps(const std::filesystem::path& path, const std::vector<std::uint64_t>& ts) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  std::vector<unsigned char> buf(ts.size() * 8);
  for (std::size_t i = 0; i < ts.size(); ++i)
    for (int b = 0; b < 8; ++b) buf[i * 8 + static_cast<std::size_t>(b)] = static_cast<unsigned char>(ts[i] >> (8 * b));
  out.write(reinterpret_cast<const char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
}

std::vector<std::uint64_t> read_timestamps(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  std::vector<unsigned char> buf((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (buf.size() % 8 != 0) throw std::runtime_error(path.string() + ": size is not a multiple of 8 bytes");
  std::vector<std::uint64_t> ts(buf.size() / 8);
  for (std::size_t i = 0; i < ts.size(); ++i) {
    std::uint64_t v = 0;
    for (int b = 7; b >= 0; --b) v = (v << 8) | buf[i * 8 + static_cast<std::size_t>(b)];
    ts[i] = v;
  }
  return ts;
}

void write_stream(const std::filesystem::path& dir, const std::string& stem, const EventStream& s,
                  const std::string& config_hash, double pair_rate, const opo::DetectorConfig& det) {
  nlohmann::json side;
  side["format"] = "u64-le-picoseconds";
  side["seed"] = s.seed;
  side["rng"] = s.rng;
  side["duration_s"] = s.duration;
  side["pairs_emitted"] = s.pairs_emitted;
  side["config_hash"] = config_hash;
  side["rates"] = {{"pair_per_s", pair_rate},
                   {"background_1_per_s", det.singles_rate_1},
                   {"background_2_per_s", det.singles_rate_2}};
  side["clock_offset_s"] = det.clock_offset;
  for (std::size_t ch = 0; ch < 2; ++ch) {
    const std::string file = stem + "_" + s.labels[ch] + ".u64";
    write_timestamps(dir / file, s.timestamps[ch]);
    side["channels"].push_back({{"label", s.labels[ch]}, {"file", file}, {"events", s.timestamps[ch].size()}});
  }
  std::ofstream out(dir / (stem + ".json"));
  out << side.dump(2) << '\n';
}

}  // namespace fadofsim::mc
