#pragma once

#include <complex>

namespace fadofsim {

/// Faddeeva function w(z) = exp(-z^2) erfc(-iz) for Im z >= 0.
///
/// Weideman's rational expansion with 40 terms; relative error is below
/// 1e-12 over the upper half plane in the region used for vapor optics.
/// For Im z < 0 the reflection w(z) = 2 exp(-z^2) - w(-z) is applied.
std::complex<double> faddeeva(std::complex<double> z);

}  // namespace fadofsim
