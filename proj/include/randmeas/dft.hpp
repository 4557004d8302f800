#pragma once

#include <span>

#include "randmeas/core.hpp"

namespace randmeas {

/// Direct O(N^2) discrete Fourier transform with a precomputed twiddle table.
///
/// forward(x)[k] = sum_n x[n] exp(sign * i 2 pi k n / N)
/// inverse(X)[n] = (1/N) sum_k X[k] exp(-sign * i 2 pi k n / N)
///
/// The coined walk uses sign = +1, the hopping chain sign = -1.
class Dft {
 public:
  Dft(int n, int sign);

  int size() const { return n_; }
  ComplexVector forward(std::span<const Complex> x) const;
  ComplexVector inverse(std::span<const Complex> x) const;

 private:
  int n_;
  int sign_;
  ComplexVector twiddle_;  // exp(sign * i 2 pi j / N), j = 0..N-1
};

}  // namespace randmeas
