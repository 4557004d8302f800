#pragma once

namespace randmeas {

/// Riemann zeta for real s > 1: explicit partial sum plus an Euler-Maclaurin
/// tail. Relative accuracy better than 1e-13 over s in (1, 64].
double riemann_zeta(double s);

/// Tail sum  sum_{j >= a} j^{-s}  for real s > 1 and a >= 1 (Hurwitz zeta at
/// integer offsets). Used for power-law tail masses.
double zeta_tail(double s, double a);

}  // namespace randmeas
