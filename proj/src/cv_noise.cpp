#include "fadofsim/cv_noise.hpp"

#include <cmath>
#include <stdexcept>

#include "fadofsim/constants.hpp"

namespace fadofsim::cv {
namespace {

bool finite(std::complex<double> z) { return std::isfinite(z.real()) && std::isfinite(z.imag()); }

}  // namespace

double NoiseModel::vacuum_amplitude() const { return std::sqrt(std::max(0.0, 1.0 - std::norm(transmission))); }

void NoiseModel::validate() const {
  if (!finite(transmission) || !finite(transmission_noise) || !finite(probe) || !finite(probe_noise))
    throw std::invalid_argument("noise model amplitudes must be finite");
  if (std::abs(transmission) > 1.0 + 1e-12) throw std::invalid_argument("|t| must be <= 1");
  if (!(attenuation > 0.0 && attenuation <= 1.0)) throw std::invalid_argument("attenuation amplitude must lie in (0, 1]");
}

NoiseModel NoiseModel::attenuated() const {
  NoiseModel m = *this;
  m.probe *= attenuation;
  m.probe_noise *= attenuation;
  m.attenuation = 1.0;
  return m;
}

double quadrature_variance_avg(const NoiseModel& model, Expansion e) {
  model.validate();
  const NoiseModel m = model.attenuated();
  const std::complex<double> mean = m.transmission * m.probe;
  const std::complex<double> linear = m.probe * m.transmission_noise + m.transmission * m.probe_noise;
  if (e == Expansion::first_order) return 1.0 + 2.0 * std::real(std::conj(mean) * linear);
  const std::complex<double> full = (m.transmission + m.transmission_noise) * (m.probe + m.probe_noise);
  return 1.0 + std::norm(full) - std::norm(mean);
}

double NoiseFit::excess_db(double power) const { return 10.0 * std::log10(linear * power / shot_noise); }

NoiseFit noise_vs_power_fit(std::span<const NoisePoint> points) {
  if (points.size() < 3) throw std::invalid_argument("noise fit needs at least 3 points");
  double sx = 0.0, sy = 0.0;
  for (const auto& p : points) {
    if (!(p.power >= 0.0)) throw std::invalid_argument("probe powers must be >= 0");
    if (!std::isfinite(p.noise)) throw std::invalid_argument("noise values must be finite");
    sx += p.power;
    sy += p.noise;
  }
  const double n = static_cast<double>(points.size());
  const double mx = sx / n, my = sy / n;
  double sxx = 0.0, sxy = 0.0;
  for (const auto& p : points) {
    sxx += (p.power - mx) * (p.power - mx);
    sxy += (p.power - mx) * (p.noise - my);
  }
  if (!(sxx > 0.0)) throw std::invalid_argument("noise fit is degenerate: all powers are equal");
  NoiseFit fit;
  fit.linear = sxy / sxx;
  fit.shot_noise = my - fit.linear * mx;
  for (const auto& p : points) fit.residuals.push_back(p.noise - fit.predict(p.power));
  if (!(fit.shot_noise > 0.0)) throw std::domain_error("fitted shot-noise constant is not positive");
  return fit;
}

double squeezing_through_loss(double squeezing_db, double transmission) {
  if (!(transmission >= 0.0 && transmission <= 1.0)) throw std::invalid_argument("transmission must lie in [0, 1]");
  if (!(squeezing_db >= 0.0)) throw std::invalid_argument("input squeezing must be >= 0 dB");
  const double variance = std::pow(10.0, -squeezing_db / 10.0);
  return -10.0 * std::log10(transmission * variance + (1.0 - transmission));
}

double photon_flux(double power, double wavelength) {
  if (!(power >= 0.0)) throw std::invalid_argument("power must be >= 0");
  if (!(wavelength > 0.0)) throw std::invalid_argument("wavelength must be > 0");
  return power * wavelength / (phys::planck * phys::speed_of_light);
}

double power_for_flux(double flux, double wavelength) {
  if (!(flux >= 0.0)) throw std::invalid_argument("flux must be >= 0");
  if (!(wavelength > 0.0)) throw std::invalid_argument("wavelength must be > 0");
  return flux * phys::planck * phys::speed_of_light / wavelength;
}

double to_dbm(double power) { return 10.0 * std::log10(power / 1e-3); }

}  // namespace fadofsim::cv
