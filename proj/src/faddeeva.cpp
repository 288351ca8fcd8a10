#include "fadofsim/faddeeva.hpp"

#include <array>
#include <cmath>

#include "fadofsim/constants.hpp"

namespace fadofsim {
namespace {

constexpr int kTerms = 40;

struct WeidemanTable {
  double scale;  // L = sqrt(N / sqrt 2)
  std::array<double, kTerms> coeff;  // highest power first
};

// Coefficients of the expansion in Z = (L + iz) / (L - iz), obtained from a
// discrete Fourier transform of exp(-t^2)(L^2 + t^2) sampled at t = L tan(theta / 2).
WeidemanTable build_table() {
  WeidemanTable tab{};
  const int m = 2 * kTerms;
  const int m2 = 2 * m;
  tab.scale = std::sqrt(kTerms / std::sqrt(2.0));
  const double l = tab.scale;

  // f has m2 samples: f[0] = 0, then k = -m+1 .. m-1.
  std::array<double, 4 * kTerms> f{};
  f[0] = 0.0;
  for (int k = -m + 1; k <= m - 1; ++k) {
    const double theta = k * phys::pi / m;
    const double t = l * std::tan(theta / 2.0);
    f[static_cast<std::size_t>(k + m)] = std::exp(-t * t) * (l * l + t * t);
  }
  // fftshift then real DFT.
  std::array<double, 4 * kTerms> shifted{};
  for (int i = 0; i < m2; ++i) shifted[static_cast<std::size_t>(i)] = f[static_cast<std::size_t>((i + m2 / 2) % m2)];
  for (int j = 1; j <= kTerms; ++j) {
    double acc = 0.0;
    for (int i = 0; i < m2; ++i) acc += shifted[static_cast<std::size_t>(i)] * std::cos(phys::two_pi * i * j / m2);
    tab.coeff[static_cast<std::size_t>(kTerms - j)] = acc / m2;
  }
  return tab;
}

const WeidemanTable& table() {
  static const WeidemanTable tab = build_table();
  return tab;
}

std::complex<double> weideman(std::complex<double> z) {
  const auto& tab = table();
  const std::complex<double> iz{-z.imag(), z.real()};
  const std::complex<double> denom = tab.scale - iz;
  const std::complex<double> zz = (tab.scale + iz) / denom;
  std::complex<double> p = tab.coeff[0];
  for (std::size_t k = 1; k < tab.coeff.size(); ++k) p = p * zz + tab.coeff[k];
  constexpr double inv_sqrt_pi = 0.56418958354775628695;
  return 2.0 * p / (denom * denom) + inv_sqrt_pi / denom;
}

}  // namespace

std::complex<double> faddeeva(std::complex<double> z) {
  if (z.imag() >= 0.0) return weideman(z);
  return 2.0 * std::exp(-z * z) - weideman(-z);
}

}  // namespace fadofsim
