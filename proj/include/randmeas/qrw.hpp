#pragma once

#include <array>
#include <functional>
#include <utility>
#include <vector>

#include "randmeas/core.hpp"

namespace randmeas::qrw {

/// Coin rotation angle in radians, restricted to [0, pi].
///
/// Occupation probabilities are invariant under theta -> theta + pi, so any
/// real angle can be folded into the range with `CoinAngle::folded`.
class CoinAngle {
 public:
  explicit CoinAngle(double theta);
  /// Reduce an arbitrary angle modulo pi into [0, pi].
  static CoinAngle folded(double theta);

  double radians() const { return theta_; }
  double cos() const { return cos_; }
  double sin() const { return sin_; }
  /// True when the coin either never mixes (0, pi) or fully swaps (pi/2).
  bool singular() const;

 private:
  double theta_;
  double cos_;
  double sin_;
};

/// Initial spinor (a|up> + b|down>) on site n0, stored normalized.
struct SpinorInit {
  SpinorInit(Complex a, Complex b, int n0);

  Complex a;   // normalized up amplitude
  Complex b;   // normalized down amplitude
  int n0 = 0;
  Complex raw_a;
  Complex raw_b;
};

/// Walker state: two complex amplitudes per site.
struct QrwState {
  int n = 0;
  ComplexVector up;
  ComplexVector down;

  static QrwState zero(int n);
  static QrwState localized(int n, const SpinorInit& init);

  double squared_norm() const;
  bool well_formed() const;
};

/// A single walker step: coin C(theta) (x) I, then the conditional shift U.
QrwState step(const QrwState& state, const CoinAngle& coin);

/// Iterated `step`; the direct-evolution oracle.
QrwState step_n(QrwState state, const CoinAngle& coin, long t);

/// Map a storage index j in [0, N) to the signed mode index used by the
/// transform: [-(N-1)/2, (N-1)/2] for odd N, [-N/2, N/2 - 1] for even N.
int signed_mode(int j, int n);
/// Inverse of `signed_mode`.
int storage_index(int k, int n);

/// Eigen-structure of the per-mode transfer matrix M_k.
struct ModeEigen {
  int k = 0;  // signed mode index
  double omega = 0.0;
  double h_plus = 0.0;
  double h_minus = 0.0;
  Complex lambda1;
  Complex lambda2;
  std::array<Complex, 2> phi1{};
  std::array<Complex, 2> phi2{};
};

/// Eigen-decomposition of all N modes. Requires a non-degenerate coin
/// (sin theta != 0); storage follows `storage_index`.
struct QrwEigenSystem {
  int n = 0;
  std::vector<ModeEigen> modes;

  static QrwEigenSystem build(int n, const CoinAngle& coin);
  const ModeEigen& mode(int k) const { return modes[storage_index(k, n)]; }
};

/// 2x2 complex matrix in row-major order.
using Mat2 = std::array<Complex, 4>;

/// Transfer matrix M_k for wave number kappa = 2 pi k / N.
Mat2 transfer_matrix(double kappa, const CoinAngle& coin);

/// M_k^t by the SU(2) Chebyshev identity; stable for every theta,
/// including the degenerate coins.
Mat2 transfer_power(double kappa, const CoinAngle& coin, long t);

/// Propagate in Fourier space: forward transform, (M_k)^t per mode, inverse.
QrwState fourier_propagate(const QrwState& state, const CoinAngle& coin, long t);

/// Closed-form amplitudes (Psi_u(n, t), Psi_d(n, t)) for a localized spinor.
/// Even N carries the separate k = -N/2 contribution. Singular coins
/// (theta in {0, pi}) fall back to the exact ballistic expression.
std::pair<Complex, Complex> amplitude_closed_form(const SpinorInit& init, const CoinAngle& coin,
                                                  int n, int site, long t);

/// Full closed-form state at time t (O(N^2)).
QrwState closed_form_state(const SpinorInit& init, const CoinAngle& coin, int n, long t);

/// P_n = |Psi_u|^2 + |Psi_d|^2.
std::vector<double> site_occupation(const QrwState& state);

/// Return probability |<psi(0)| U^tau |psi(0)>|^2 via the closed form.
double q_return(const SpinorInit& init, const CoinAngle& coin, int n, long tau);

/// q_return with the per-mode constants computed once; for repeated
/// evaluation over many tau.
class ReturnProbability {
 public:
  ReturnProbability(const SpinorInit& init, const CoinAngle& coin, int n);
  double operator()(long tau) const;

 private:
  SpinorInit init_;
  CoinAngle coin_;
  int n_;
  std::vector<double> kappa_, omega_, h_plus_, weight_;
};

/// Sites that can carry nonzero occupation at time t.
///
/// A site is reachable when it is congruent (mod N) to n0 + j for some
/// j in {-t, -t+2, ..., t}. For even N this is the parity lock of the
/// standard occupation table; for odd N it opens to every site once t >= N-1.
class ParitySupport {
 public:
  ParitySupport(int n, int n0, long t);
  bool allows(int site) const { return allowed_[static_cast<size_t>(site)]; }
  bool operator()(int site) const { return allows(site); }
  int count() const;

 private:
  std::vector<bool> allowed_;
};

ParitySupport parity_support(int n, int n0, long t);

}  // namespace randmeas::qrw
