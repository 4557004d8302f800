#include "randmeas/qrw.hpp"

#include <algorithm>
#include <cmath>

#include "randmeas/dft.hpp"

namespace randmeas::qrw {
namespace {

long wrap(long x, long n) {
  long r = x % n;
  return r < 0 ? r + n : r;
}

// sin(omega) computed without cancellation: sqrt(sin^2 kappa + cos^2 kappa sin^2 theta).
double sin_omega(double kappa, const CoinAngle& coin) {
  const double sk = std::sin(kappa);
  const double ck = std::cos(kappa);
  return std::sqrt(sk * sk + ck * ck * coin.sin() * coin.sin());
}

// Exact amplitudes for theta in {0, pi}: each spin component moves ballistically.
std::pair<Complex, Complex> ballistic_amplitude(const SpinorInit& init, const CoinAngle& coin, int n,
                                                int site, long t) {
  const double sign = (coin.cos() < 0.0 && (t % 2 != 0)) ? -1.0 : 1.0;
  Complex up{}, down{};
  if (wrap(init.n0 + t, n) == site) up = sign * init.a;
  if (wrap(init.n0 - t, n) == site) down = sign * init.b;
  return {up, down};
}

}  // namespace

CoinAngle::CoinAngle(double theta) : theta_(theta) {
  if (!(theta >= 0.0 && theta <= kPi)) {
    throw DomainError("CoinAngle: theta must lie in [0, pi]; use CoinAngle::folded for other values");
  }
  // Snap the exact special angles so the degenerate cases are detected reliably.
  if (theta == 0.0) {
    cos_ = 1.0;
    sin_ = 0.0;
  } else if (theta == kPi) {
    cos_ = -1.0;
    sin_ = 0.0;
  } else if (theta == kPi / 2) {
    cos_ = 0.0;
    sin_ = 1.0;
  } else {
    cos_ = std::cos(theta);
    sin_ = std::sin(theta);
  }
}

CoinAngle CoinAngle::folded(double theta) {
  double r = std::fmod(theta, kPi);
  if (r < 0.0) r += kPi;
  return CoinAngle(r);
}

bool CoinAngle::singular() const { return sin_ == 0.0 || cos_ == 0.0; }

SpinorInit::SpinorInit(Complex a_in, Complex b_in, int n0_in) : n0(n0_in), raw_a(a_in), raw_b(b_in) {
  const double nrm = std::sqrt(std::norm(a_in) + std::norm(b_in));
  if (!(nrm > 0.0)) throw DomainError("SpinorInit: (a, b) must not both vanish");
  a = a_in / nrm;
  b = b_in / nrm;
}

QrwState QrwState::zero(int n) {
  if (n < 1) throw DomainError("QrwState: lattice size must be positive");
  return QrwState{n, ComplexVector(static_cast<size_t>(n)), ComplexVector(static_cast<size_t>(n))};
}

QrwState QrwState::localized(int n, const SpinorInit& init) {
  if (init.n0 < 0 || init.n0 >= n) throw DomainError("QrwState: n0 outside [0, N)");
  QrwState s = zero(n);
  s.up[init.n0] = init.a;
  s.down[init.n0] = init.b;
  return s;
}

double QrwState::squared_norm() const { return randmeas::squared_norm(up) + randmeas::squared_norm(down); }

bool QrwState::well_formed() const {
  return n >= 1 && static_cast<int>(up.size()) == n && static_cast<int>(down.size()) == n;
}

QrwState step(const QrwState& state, const CoinAngle& coin) {
  if (!state.well_formed()) throw DomainError("qrw::step: malformed state");
  const int n = state.n;
  const double c = coin.cos();
  const double s = coin.sin();
  QrwState out = QrwState::zero(n);
  for (int site = 0; site < n; ++site) {
    const Complex u = c * state.up[site] + s * state.down[site];
    const Complex d = -s * state.up[site] + c * state.down[site];
    out.up[(site + 1) % n] += u;
    out.down[(site - 1 + n) % n] += d;
  }
  return out;
}

QrwState step_n(QrwState state, const CoinAngle& coin, long t) {
  for (long i = 0; i < t; ++i) state = step(state, coin);
  return state;
}

int signed_mode(int j, int n) {
  // odd N: [-(N-1)/2, (N-1)/2]; even N: [-N/2, N/2 - 1]
  return j <= (n - 1) / 2 ? j : j - n;
}

int storage_index(int k, int n) { return k >= 0 ? k : k + n; }

Mat2 transfer_matrix(double kappa, const CoinAngle& coin) {
  const Complex e(std::cos(kappa), std::sin(kappa));
  const Complex ec = std::conj(e);
  return {e * coin.cos(), e * coin.sin(), -ec * coin.sin(), ec * coin.cos()};
}

Mat2 transfer_power(double kappa, const CoinAngle& coin, long t) {
  if (t < 0) throw DomainError("transfer_power: negative time");
  const Mat2 m = transfer_matrix(kappa, coin);
  const double cw = std::cos(kappa) * coin.cos();
  const double sw = sin_omega(kappa, coin);
  // M^t = U_{t-1}(cos w) M - U_{t-2}(cos w) I, U_n(cos w) = sin((n+1) w) / sin w.
  double u1, u2;
  if (sw == 0.0) {
    // M = +-I; U_n(+-1) = (n+1)(+-1)^n
    const double sgn = cw > 0 ? 1.0 : -1.0;
    u1 = static_cast<double>(t) * ((t - 1) % 2 == 0 ? 1.0 : sgn);
    u2 = static_cast<double>(t - 1) * ((t - 2) % 2 == 0 ? 1.0 : sgn);
  } else {
    const double w = std::atan2(sw, cw);
    const double wt = w * static_cast<double>(t);
    const double s_t = std::sin(wt);
    const double c_t = std::cos(wt);
    u1 = s_t / sw;
    u2 = (s_t * cw - c_t * sw) / sw;  // sin((t-1) w) / sin w
  }
  return {u1 * m[0] - u2, u1 * m[1], u1 * m[2], u1 * m[3] - u2};
}

QrwEigenSystem QrwEigenSystem::build(int n, const CoinAngle& coin) {
  if (coin.sin() == 0.0) throw DomainError("QrwEigenSystem: coin angle must not be 0 or pi");
  QrwEigenSystem sys;
  sys.n = n;
  sys.modes.resize(static_cast<size_t>(n));
  const double cot = coin.cos() / coin.sin();
  const double csc = 1.0 / coin.sin();
  for (int j = 0; j < n; ++j) {
    ModeEigen& me = sys.modes[j];
    me.k = signed_mode(j, n);
    const double kappa = kTwoPi * me.k / n;
    const double cw = std::cos(kappa) * coin.cos();
    const double sw = sin_omega(kappa, coin);
    me.omega = std::atan2(sw, cw);
    me.h_plus = cot * std::sin(kappa) + csc * sw;
    me.h_minus = cot * std::sin(kappa) - csc * sw;
    me.lambda1 = std::polar(1.0, me.omega);
    me.lambda2 = std::polar(1.0, -me.omega);
    const Complex pre = Complex(0.0, -1.0) * std::polar(1.0, kappa);
    const double n1 = 1.0 / std::sqrt(1.0 + me.h_plus * me.h_plus);
    const double n2 = 1.0 / std::sqrt(1.0 + me.h_minus * me.h_minus);
    me.phi1 = {pre * me.h_plus * n1, Complex(n1, 0.0)};
    me.phi2 = {pre * me.h_minus * n2, Complex(n2, 0.0)};
  }
  return sys;
}

QrwState fourier_propagate(const QrwState& state, const CoinAngle& coin, long t) {
  if (!state.well_formed()) throw DomainError("qrw::fourier_propagate: malformed state");
  if (t < 0) throw DomainError("qrw::fourier_propagate: negative time");
  if (t == 0) return state;
  const int n = state.n;
  const Dft dft(n, +1);
  ComplexVector up = dft.forward(state.up);
  ComplexVector down = dft.forward(state.down);
  for (int j = 0; j < n; ++j) {
    const Mat2 p = transfer_power(kTwoPi * j / n, coin, t);
    const Complex u = p[0] * up[j] + p[1] * down[j];
    const Complex d = p[2] * up[j] + p[3] * down[j];
    up[j] = u;
    down[j] = d;
  }
  return QrwState{n, dft.inverse(up), dft.inverse(down)};
}

namespace {

struct ModeConstants {
  double kappa;
  double omega;
  double h_plus;
  double weight;  // 2 / (N (1 + h_+^2)); the spinor normalization is already in (a, b)
};

std::vector<ModeConstants> closed_form_modes(int n, const CoinAngle& coin) {
  const double cot = coin.cos() / coin.sin();
  const double csc = 1.0 / coin.sin();
  const int k_lo = (n % 2 == 1) ? -(n - 1) / 2 : -n / 2 + 1;
  const int k_hi = (n % 2 == 1) ? (n - 1) / 2 : n / 2 - 1;
  std::vector<ModeConstants> out;
  out.reserve(static_cast<size_t>(k_hi - k_lo + 1));
  for (int k = k_lo; k <= k_hi; ++k) {
    const double kappa = kTwoPi * k / n;
    const double sw = sin_omega(kappa, coin);
    const double omega = std::atan2(sw, std::cos(kappa) * coin.cos());
    const double hp = cot * std::sin(kappa) + csc * sw;
    out.push_back({kappa, omega, hp, 2.0 / (n * (1.0 + hp * hp))});
  }
  return out;
}

std::pair<Complex, Complex> closed_form_sum(const std::vector<ModeConstants>& modes, const SpinorInit& init,
                                            const CoinAngle& coin, int n, int site, long t) {
  const Complex a = init.a;
  const Complex b = init.b;
  const double dn = static_cast<double>(site - init.n0);
  const double td = static_cast<double>(t);
  Complex up{}, down{};
  for (const auto& m : modes) {
    const double wt = m.omega * td;
    const double kd = m.kappa * dn;
    up += m.weight * (a * std::cos(kd + wt) + b * m.h_plus * std::sin(kd - m.kappa + wt));
    down += m.weight * (-a * m.h_plus * std::sin(-kd - m.kappa + wt) + b * std::cos(-kd + wt));
  }
  if (n % 2 == 0) {
    // k = -N/2: M = -C, so the mode contributes (-1)^{n - n0 + t} C(theta t)(a, b) / N
    const long parity = (static_cast<long>(site - init.n0) + t) % 2;
    const double sgn = (parity == 0) ? 1.0 : -1.0;
    const double th = coin.radians() * td;
    up += sgn * (a * std::cos(th) + b * std::sin(th)) / static_cast<double>(n);
    down += sgn * (-a * std::sin(th) + b * std::cos(th)) / static_cast<double>(n);
  }
  return {up, down};
}

}  // namespace

std::pair<Complex, Complex> amplitude_closed_form(const SpinorInit& init, const CoinAngle& coin, int n,
                                                  int site, long t) {
  if (n < 2) throw DomainError("amplitude_closed_form: N must be >= 2");
  if (t < 0) throw DomainError("amplitude_closed_form: negative time");
  if (site < 0 || site >= n) throw DomainError("amplitude_closed_form: site outside [0, N)");
  if (coin.sin() == 0.0) return ballistic_amplitude(init, coin, n, site, t);
  return closed_form_sum(closed_form_modes(n, coin), init, coin, n, site, t);
}

QrwState closed_form_state(const SpinorInit& init, const CoinAngle& coin, int n, long t) {
  if (n < 2) throw DomainError("closed_form_state: N must be >= 2");
  QrwState s = QrwState::zero(n);
  if (coin.sin() == 0.0) {
    for (int site = 0; site < n; ++site) std::tie(s.up[site], s.down[site]) = ballistic_amplitude(init, coin, n, site, t);
    return s;
  }
  const auto modes = closed_form_modes(n, coin);
  for (int site = 0; site < n; ++site) {
    std::tie(s.up[site], s.down[site]) = closed_form_sum(modes, init, coin, n, site, t);
  }
  return s;
}

std::vector<double> site_occupation(const QrwState& state) {
  std::vector<double> p(static_cast<size_t>(state.n));
  for (int i = 0; i < state.n; ++i) p[i] = std::norm(state.up[i]) + std::norm(state.down[i]);
  return p;
}

double q_return(const SpinorInit& init, const CoinAngle& coin, int n, long tau) {
  const auto [u, d] = amplitude_closed_form(init, coin, n, init.n0, tau);
  return std::min(1.0, std::norm(std::conj(init.a) * u + std::conj(init.b) * d));
}

ReturnProbability::ReturnProbability(const SpinorInit& init, const CoinAngle& coin, int n)
    : init_(init), coin_(coin), n_(n) {
  if (n < 2) throw DomainError("ReturnProbability: N must be >= 2");
  if (coin.sin() == 0.0) return;
  for (const auto& m : closed_form_modes(n, coin)) {
    kappa_.push_back(m.kappa);
    omega_.push_back(m.omega);
    h_plus_.push_back(m.h_plus);
    weight_.push_back(m.weight);
  }
}

double ReturnProbability::operator()(long tau) const {
  if (tau < 0) throw DomainError("ReturnProbability: negative time");
  if (coin_.sin() == 0.0) return q_return(init_, coin_, n_, tau);
  // At n = n0 the closed form reduces to two real sums: Psi_u = a C + b H, Psi_d = -a H + b C.
  const double td = static_cast<double>(tau);
  double c_sum = 0.0, h_sum = 0.0;
  for (size_t i = 0; i < omega_.size(); ++i) {
    const double wt = omega_[i] * td;
    c_sum += weight_[i] * std::cos(wt);
    h_sum += weight_[i] * h_plus_[i] * std::sin(wt - kappa_[i]);
  }
  Complex up = init_.a * c_sum + init_.b * h_sum;
  Complex down = -init_.a * h_sum + init_.b * c_sum;
  if (n_ % 2 == 0) {
    const double sgn = (tau % 2 == 0) ? 1.0 : -1.0;
    const double th = coin_.radians() * td;
    up += sgn * (init_.a * std::cos(th) + init_.b * std::sin(th)) / static_cast<double>(n_);
    down += sgn * (-init_.a * std::sin(th) + init_.b * std::cos(th)) / static_cast<double>(n_);
  }
  return std::min(1.0, std::norm(std::conj(init_.a) * up + std::conj(init_.b) * down));
}

ParitySupport::ParitySupport(int n, int n0, long t) : allowed_(static_cast<size_t>(n), false) {
  if (n < 1) throw DomainError("parity_support: N must be positive");
  if (t < 0) throw DomainError("parity_support: negative time");
  // The reachable offsets j = -t, -t+2, ..., t cover every residue once t + 1 >= N (odd N);
  // for even N they never leave the parity class of n0 + t.
  const long count = std::min<long>(t + 1, 2L * n);
  for (long i = 0; i < count; ++i) {
    const long j = -t + 2 * i;
    allowed_[static_cast<size_t>(wrap(n0 + j, n))] = true;
  }
}

int ParitySupport::count() const {
  int c = 0;
  for (bool b : allowed_) c += b ? 1 : 0;
  return c;
}

ParitySupport parity_support(int n, int n0, long t) { return ParitySupport(n, n0, t); }

}  // namespace randmeas::qrw
