#pragma once

#include <complex>
#include <span>
#include <vector>

namespace fadofsim::cv {

/// Squeezing is quoted as a positive number of dB below shot noise:
/// "x dB of squeezing" is a quadrature variance of 10^(-x/10) shot-noise units.

struct NoiseModel {
  std::complex<double> transmission{1.0, 0.0};       // mean amplitude transmission
  std::complex<double> transmission_noise{0.0, 0.0}; // fluctuation amplitude
  std::complex<double> probe{0.0, 0.0};              // mean coherent amplitude
  std::complex<double> probe_noise{0.0, 0.0};        // fluctuation amplitude
  double attenuation = 1.0;                          // t_ND = sqrt(T_ND), in (0, 1]

  /// Vacuum-port amplitude |r| = sqrt(1 - |t|^2).
  double vacuum_amplitude() const;
  void validate() const;
  /// Probe and probe noise scaled by the attenuation amplitude.
  NoiseModel attenuated() const;
};

enum class Expansion {
  first_order,  // drops the O(delta_alpha * delta_t) term
  exact,        // |(t + dt)(a + da)|^2 - |t a|^2, all orders
};

/// Phase-averaged quadrature variance in shot-noise units, evaluated on the
/// attenuated model.
double quadrature_variance_avg(const NoiseModel& m, Expansion e = Expansion::first_order);

struct NoisePoint {
  double power = 0.0;
  double noise = 0.0;
};

struct NoiseFit {
  double shot_noise = 0.0;  // constant term
  double linear = 0.0;      // per unit power proxy
  std::vector<double> residuals;

  double predict(double power) const { return shot_noise + linear * power; }
  /// Linear (filter) contribution relative to shot noise, in dB.
  double excess_db(double power) const;
};

/// Least-squares noise = a + b * power.
NoiseFit noise_vs_power_fit(std::span<const NoisePoint> points);

/// Output squeezing after a beamsplitter of power transmission T.
double squeezing_through_loss(double squeezing_db, double transmission);

/// Photon flux (s^-1) of a beam of the given power (W) and wavelength (m).
double photon_flux(double power, double wavelength);
/// Inverse of photon_flux.
double power_for_flux(double flux, double wavelength);

/// Power (W) in dBm.
double to_dbm(double power);

}  // namespace fadofsim::cv
