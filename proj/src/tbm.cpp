#include "randmeas/tbm.hpp"

#include <algorithm>
#include <cmath>

#include "randmeas/dft.hpp"

namespace randmeas::tbm {

TbmParams::TbmParams(int n_in, double gamma_in) : n(n_in), gamma(gamma_in) {
  if (n < 2) throw DomainError("TbmParams: N must be >= 2");
  if (!(gamma > 0.0) || !std::isfinite(gamma)) throw DomainError("TbmParams: gamma must be positive");
}

double TbmParams::mode_frequency(int q) const { return 2.0 * gamma * std::cos(kTwoPi * q / n); }

TbmState TbmState::localized(int n, int n0) {
  if (n < 1) throw DomainError("TbmState: N must be positive");
  if (n0 < 0 || n0 >= n) throw DomainError("TbmState: n0 outside [0, N)");
  TbmState s{ComplexVector(static_cast<size_t>(n))};
  s.amplitudes[n0] = 1.0;
  return s;
}

Complex propagator_amplitude(const TbmParams& params, int n, int n0, double t) {
  if (t < 0.0) throw DomainError("tbm::propagator_amplitude: negative time");
  Complex acc{};
  for (int q = 0; q < params.n; ++q) {
    const double phase = params.mode_frequency(q) * t + kTwoPi * q * (n - n0) / params.n;
    acc += Complex(std::cos(phase), std::sin(phase));
  }
  return acc / static_cast<double>(params.n);
}

TbmState evolve(const TbmState& state, const TbmParams& params, double tau) {
  if (state.size() != params.n) throw DomainError("tbm::evolve: state size differs from N");
  if (tau < 0.0) throw DomainError("tbm::evolve: negative time");
  if (tau == 0.0) return state;
  const Dft dft(params.n, -1);
  ComplexVector modes = dft.forward(state.amplitudes);
  for (int q = 0; q < params.n; ++q) modes[q] *= std::polar(1.0, params.mode_frequency(q) * tau);
  return TbmState{dft.inverse(modes)};
}

TbmState integrate_rk4(const TbmState& state, const TbmParams& params, double t, double dt) {
  if (state.size() != params.n) throw DomainError("tbm::integrate_rk4: state size differs from N");
  if (t < 0.0 || !(dt > 0.0)) throw DomainError("tbm::integrate_rk4: need t >= 0 and dt > 0");
  const int n = params.n;
  const Complex ig(0.0, params.gamma);
  // d psi_j / dt = i gamma (psi_{j-1} + psi_{j+1}), periodic.
  auto rhs = [&](const ComplexVector& v, ComplexVector& out) {
    for (int j = 0; j < n; ++j) out[j] = ig * (v[(j + n - 1) % n] + v[(j + 1) % n]);
  };
  const long steps = std::max<long>(1, static_cast<long>(std::ceil(t / dt)));
  const double h = t / static_cast<double>(steps);
  ComplexVector psi = state.amplitudes, k1(n), k2(n), k3(n), k4(n), tmp(n);
  for (long s = 0; s < steps && t > 0.0; ++s) {
    rhs(psi, k1);
    for (int j = 0; j < n; ++j) tmp[j] = psi[j] + 0.5 * h * k1[j];
    rhs(tmp, k2);
    for (int j = 0; j < n; ++j) tmp[j] = psi[j] + 0.5 * h * k2[j];
    rhs(tmp, k3);
    for (int j = 0; j < n; ++j) tmp[j] = psi[j] + h * k3[j];
    rhs(tmp, k4);
    for (int j = 0; j < n; ++j) psi[j] += h / 6.0 * (k1[j] + 2.0 * k2[j] + 2.0 * k3[j] + k4[j]);
  }
  return TbmState{psi};
}

std::vector<double> site_occupation(const TbmState& state) {
  std::vector<double> p(state.amplitudes.size());
  for (size_t i = 0; i < p.size(); ++i) p[i] = std::norm(state.amplitudes[i]);
  return p;
}

double q_return(const TbmParams& params, double tau) {
  if (tau < 0.0) throw DomainError("tbm::q_return: negative time");
  Complex acc{};
  for (int q = 0; q < params.n; ++q) acc += std::polar(1.0, params.mode_frequency(q) * tau);
  return std::min(1.0, std::norm(acc / static_cast<double>(params.n)));
}

}  // namespace randmeas::tbm
