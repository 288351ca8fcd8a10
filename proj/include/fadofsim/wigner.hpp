#pragma once

namespace fadofsim {

/// Wigner 3j symbol (j1 j2 j3; m1 m2 m3) for integer arguments (Racah formula).
/// Returns 0 when the selection rules are violated.
double wigner_3j(int j1, int j2, int j3, int m1, int m2, int m3);

}  // namespace fadofsim
