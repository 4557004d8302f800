#include "randmeas/dft.hpp"

#include <cmath>

namespace randmeas {

Dft::Dft(int n, int sign) : n_(n), sign_(sign >= 0 ? 1 : -1), twiddle_(static_cast<size_t>(n)) {
  if (n < 1) throw DomainError("Dft: size must be positive");
  for (int j = 0; j < n; ++j) {
    const double phase = sign_ * kTwoPi * j / n;
    twiddle_[j] = Complex(std::cos(phase), std::sin(phase));
  }
}

ComplexVector Dft::forward(std::span<const Complex> x) const {
  if (static_cast<int>(x.size()) != n_) throw DomainError("Dft::forward: size mismatch");
  ComplexVector out(static_cast<size_t>(n_));
  for (int k = 0; k < n_; ++k) {
    Complex acc{};
    long idx = 0;
    for (int n = 0; n < n_; ++n) {
      acc += x[n] * twiddle_[idx];
      idx += k;
      if (idx >= n_) idx -= n_;
    }
    out[k] = acc;
  }
  return out;
}

ComplexVector Dft::inverse(std::span<const Complex> x) const {
  if (static_cast<int>(x.size()) != n_) throw DomainError("Dft::inverse: size mismatch");
  ComplexVector out(static_cast<size_t>(n_));
  const double scale = 1.0 / n_;
  for (int n = 0; n < n_; ++n) {
    Complex acc{};
    long idx = 0;
    for (int k = 0; k < n_; ++k) {
      acc += x[k] * std::conj(twiddle_[idx]);
      idx += n;
      if (idx >= n_) idx -= n_;
    }
    out[n] = acc * scale;
  }
  return out;
}

}  // namespace randmeas
