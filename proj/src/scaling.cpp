#include "randmeas/scaling.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numeric>

namespace randmeas {
namespace {

struct LineFit {
  double slope = 0.0;
  double intercept = 0.0;
  double slope_se = 0.0;
  double sse = 0.0;
};

LineFit ols(const std::vector<double>& x, const std::vector<double>& y) {
  const size_t n = x.size();
  if (n < 2) throw InconclusiveError("regression needs at least two points");
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double sxx = 0.0, sxy = 0.0;
  for (size_t i = 0; i < n; ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  if (sxx == 0.0) throw InconclusiveError("regression abscissae are all equal");
  LineFit f;
  f.slope = sxy / sxx;
  f.intercept = my - f.slope * mx;
  for (size_t i = 0; i < n; ++i) {
    const double r = y[i] - f.intercept - f.slope * x[i];
    f.sse += r * r;
  }
  f.slope_se = n > 2 ? std::sqrt(f.sse / (n - 2.0) / sxx) : 0.0;
  return f;
}

// Sum of squared deviations from the mean.
double centered_sse(const std::vector<double>& r, size_t lo, size_t hi) {
  if (hi <= lo) return 0.0;
  double mean = 0.0;
  for (size_t i = lo; i < hi; ++i) mean += r[i];
  mean /= static_cast<double>(hi - lo);
  double s = 0.0;
  for (size_t i = lo; i < hi; ++i) s += (r[i] - mean) * (r[i] - mean);
  return s;
}

double interp_log(const std::vector<double>& lx, const std::vector<double>& ly, double x) {
  const auto it = std::lower_bound(lx.begin(), lx.end(), x);
  if (it == lx.begin()) return ly.front();
  if (it == lx.end()) return ly.back();
  const size_t j = static_cast<size_t>(it - lx.begin());
  const double t = (x - lx[j - 1]) / (lx[j] - lx[j - 1]);
  return ly[j - 1] + t * (ly[j] - ly[j - 1]);
}

}  // namespace

FitWindow::FitWindow(double lo, double hi) : m_lo(lo), m_hi(hi) {
  if (!(lo > 0.0 && hi > lo)) throw DomainError("FitWindow: need 0 < m_lo < m_hi");
}

std::string regime_name(Regime r) {
  switch (r) {
    case Regime::Early:
      return "early";
    case Regime::Intermediate:
      return "intermediate";
    case Regime::Tail:
      return "tail";
    default:
      return "custom";
  }
}

std::vector<size_t> log_decimate(const std::vector<double>& m, double lo, double hi, int per_decade) {
  if (per_decade < 1) throw DomainError("log_decimate: per_decade must be positive");
  std::vector<size_t> out;
  if (m.empty() || !(lo > 0.0) || hi < lo) return out;
  const double l0 = std::log10(lo);
  const double l1 = std::log10(hi);
  const int targets = std::max(1, static_cast<int>(std::ceil((l1 - l0) * per_decade))) + 1;
  for (int i = 0; i < targets; ++i) {
    const double t = targets == 1 ? l0 : l0 + (l1 - l0) * i / (targets - 1);
    const double target = std::pow(10.0, t);
    auto it = std::lower_bound(m.begin(), m.end(), target);
    size_t best = m.size();
    double dist = std::numeric_limits<double>::infinity();
    for (auto cand : {it, it == m.begin() ? it : it - 1}) {
      if (cand == m.end()) continue;
      if (*cand < lo || *cand > hi) continue;
      const double d = std::abs(std::log(*cand / target));
      if (d < dist) {
        dist = d;
        best = static_cast<size_t>(cand - m.begin());
      }
    }
    if (best < m.size() && (out.empty() || out.back() != best)) out.push_back(best);
  }
  return out;
}

ScalingReport fit_power_law(const std::vector<double>& m, const std::vector<double>& value, FitWindow window,
                            int per_decade, Regime regime) {
  if (m.size() != value.size()) throw DomainError("fit_power_law: m and value differ in length");
  const auto idx = log_decimate(m, window.m_lo, window.m_hi, per_decade);
  std::vector<double> lx, ly;
  for (size_t i : idx) {
    if (!(value[i] > 0.0)) {
      throw DomainError("fit_power_law: nonpositive value at m = " + std::to_string(m[i]));
    }
    lx.push_back(std::log(m[i]));
    ly.push_back(std::log(value[i]));
  }
  if (static_cast<int>(lx.size()) < kMinFitPoints) {
    throw InconclusiveError("fit_power_law: window [" + std::to_string(window.m_lo) + ", " +
                            std::to_string(window.m_hi) + "] holds " + std::to_string(lx.size()) +
                            " decimated points, fewer than " + std::to_string(kMinFitPoints));
  }
  const LineFit f = ols(lx, ly);
  ScalingReport r;
  r.exponent = f.slope;
  r.stderr_ = f.slope_se;
  r.intercept = f.intercept;
  r.residual = std::sqrt(f.sse / lx.size());
  r.m_lo = window.m_lo;
  r.m_hi = window.m_hi;
  r.points = static_cast<int>(lx.size());
  r.regime = regime;
  return r;
}

BinnedSeries log_bin(const std::vector<double>& series, long lo, long hi, int per_decade, long min_width) {
  const long size = static_cast<long>(series.size());
  hi = std::min(hi, size);
  if (lo < 1 || hi < lo) throw DomainError("log_bin: need 1 <= lo <= hi <= series length");
  std::vector<double> prefix(static_cast<size_t>(size + 1), 0.0);
  for (long i = 0; i < size; ++i) prefix[i + 1] = prefix[i] + series[i];

  const double l0 = std::log10(static_cast<double>(lo));
  const double l1 = std::log10(static_cast<double>(hi + 1));
  const int nedges = std::max(2, static_cast<int>((l1 - l0) * per_decade) + 1);
  std::vector<long> edges;
  for (int i = 0; i < nedges; ++i) {
    const long e = std::lround(std::pow(10.0, l0 + (l1 - l0) * i / (nedges - 1)));
    if (edges.empty() || e > edges.back()) edges.push_back(e);
  }
  edges.front() = lo;
  edges.back() = hi + 1;

  BinnedSeries out;
  long a = edges.front();
  for (size_t i = 1; i < edges.size(); ++i) {
    const long b = edges[i];
    if (b - a < min_width && i + 1 < edges.size()) continue;
    if (b - a < min_width) break;  // ragged final bin
    out.m.push_back(std::sqrt(static_cast<double>(a) * static_cast<double>(b - 1)));
    out.value.push_back((prefix[b - 1] - prefix[a - 1]) / static_cast<double>(b - a));
    a = b;
  }
  return out;
}

BinnedSeries block_average(const std::vector<double>& series, long lo, long hi, long period) {
  if (period < 1) throw DomainError("block_average: period must be positive");
  const long size = static_cast<long>(series.size());
  hi = std::min(hi, size);
  if (lo < 1) throw DomainError("block_average: lo must be >= 1");
  BinnedSeries out;
  for (long a = lo; a + period - 1 <= hi; a += period) {
    double s = 0.0;
    for (long j = a; j < a + period; ++j) s += series[j - 1];
    out.m.push_back(std::sqrt(static_cast<double>(a) * static_cast<double>(a + period - 1)));
    out.value.push_back(s / static_cast<double>(period));
  }
  return out;
}

CrossoverM1 detect_crossover_m1(const std::vector<double>& detection, int n, double mean_tau, M1Options opts) {
  const long hi = opts.m_max > 0 ? std::min<long>(opts.m_max, static_cast<long>(detection.size()))
                                 : static_cast<long>(detection.size());
  if (hi <= opts.m_min) throw InconclusiveError("detect_crossover_m1: series too short");
  const BinnedSeries bins = log_bin(detection, opts.m_min, hi, opts.per_decade, opts.min_width);
  std::vector<double> lx, ly;
  for (size_t i = 0; i < bins.m.size(); ++i) {
    if (bins.value[i] > 0.0) {
      lx.push_back(std::log(bins.m[i]));
      ly.push_back(std::log(bins.value[i]));
    }
  }
  const size_t k = lx.size();
  const size_t side = static_cast<size_t>(std::max(2, opts.min_side_bins));
  if (k < 2 * side + 1) throw InconclusiveError("detect_crossover_m1: too few positive bins");

  std::vector<double> r3(k), r52(k);
  for (size_t i = 0; i < k; ++i) {
    r3[i] = ly[i] + 3.0 * lx[i];
    r52[i] = ly[i] + 2.5 * lx[i];
  }
  double best_sse = std::numeric_limits<double>::infinity();
  size_t best_c = 0;
  for (size_t c = side; c + side <= k; ++c) {
    const double sse = centered_sse(r3, 0, c) + centered_sse(r52, c, k);
    if (sse < best_sse) {
      best_sse = sse;
      best_c = c;
    }
  }
  const double single = ols(lx, ly).sse;
  if (!(best_sse < 0.25 * single)) {
    throw InconclusiveError("detect_crossover_m1: two-branch model does not beat a single power law");
  }
  const double a3 = std::accumulate(r3.begin(), r3.begin() + best_c, 0.0) / best_c;
  const double a52 = std::accumulate(r52.begin() + best_c, r52.end(), 0.0) / (k - best_c);
  CrossoverM1 out;
  out.bracket_lo = std::exp(lx[best_c - 1]);
  out.bracket_hi = std::exp(lx[best_c]);
  // Branches A m^-3 and B m^-5/2 meet at m = (A / B)^2.
  const double crossing = std::exp(2.0 * (a3 - a52));
  out.m1 = (crossing >= out.bracket_lo && crossing <= out.bracket_hi)
               ? crossing
               : std::sqrt(out.bracket_lo * out.bracket_hi);
  out.jump = (ly[best_c] - ly[best_c - 1]) + 2.75 * (lx[best_c] - lx[best_c - 1]);
  out.rescaled = out.m1 * mean_tau / n;
  return out;
}

double locate_revival(const std::vector<double>& detection, M1Options opts, double min_rise) {
  const long hi = opts.m_max > 0 ? std::min<long>(opts.m_max, static_cast<long>(detection.size()))
                                 : static_cast<long>(detection.size());
  if (hi <= opts.m_min) throw InconclusiveError("locate_revival: series too short");
  const BinnedSeries bins = log_bin(detection, opts.m_min, hi, opts.per_decade, opts.min_width);
  // Rise across a fifth of a decade, so a revival spread over a few bins counts once.
  const size_t span = static_cast<size_t>(std::max(1, opts.per_decade / 5));
  double best = std::log(min_rise);
  double at = 0.0;
  for (size_t i = span; i < bins.m.size(); ++i) {
    const size_t j = i - span;
    if (!(bins.value[j] > 0.0 && bins.value[i] > 0.0)) continue;
    const double rise = std::log(bins.value[i] / bins.value[j]) + 3.0 * std::log(bins.m[i] / bins.m[j]);
    if (rise > best) {
      best = rise;
      at = std::sqrt(bins.m[j] * bins.m[i]);
    }
  }
  if (at == 0.0) throw InconclusiveError("locate_revival: no revival rise in m^3 F");
  return at;
}

double locate_m2(const std::vector<double>& m, const std::vector<double>& s, double m_lo, M2Options opts) {
  if (m.size() != s.size() || m.empty()) throw DomainError("locate_m2: m and s must match and be nonempty");
  const auto idx = log_decimate(m, m.front(), m.back(), opts.per_decade);
  std::vector<double> dm, ds;
  for (size_t i : idx) {
    if (s[i] > 0.0) {
      dm.push_back(m[i]);
      ds.push_back(s[i]);
    }
  }
  double hi = dm.back();
  double m2 = 0.0;
  for (int it = 0; it < opts.max_iterations; ++it) {
    double acc = 0.0;
    int cnt = 0;
    for (size_t i = 0; i < dm.size(); ++i) {
      if (dm[i] >= m_lo && dm[i] <= hi) {
        acc += std::log(ds[i]) + 1.5 * std::log(dm[i]);
        ++cnt;
      }
    }
    if (cnt < opts.consecutive) throw InconclusiveError("locate_m2: fit window [m_lo, m2/3] holds too few points");
    const double amp = std::exp(acc / cnt);
    int run = 0;
    double found = 0.0;
    for (size_t i = 0; i < dm.size(); ++i) {
      if (dm[i] < m_lo) continue;
      const double ratio = ds[i] / (amp * std::pow(dm[i], -1.5));
      if (ratio < opts.drop) {
        if (++run == opts.consecutive) {
          found = dm[i - static_cast<size_t>(opts.consecutive) + 1];
          break;
        }
      } else {
        run = 0;
      }
    }
    if (found == 0.0) throw InconclusiveError("locate_m2: the series never departs from the m^-3/2 fit");
    m2 = found;
    const double new_hi = m2 / 3.0;
    if (std::abs(new_hi - hi) <= 1e-9 * hi) break;
    hi = new_hi;
  }
  return m2;
}

M2Scaling detect_crossover_m2(const std::vector<int>& sizes, const std::vector<std::vector<double>>& m,
                              const std::vector<std::vector<double>>& s, const std::vector<double>& m_lo,
                              M2Options opts) {
  if (sizes.size() < 2 || m.size() != sizes.size() || s.size() != sizes.size() || m_lo.size() != sizes.size()) {
    throw DomainError("detect_crossover_m2: need matching data for at least two lattice sizes");
  }
  M2Scaling out;
  out.sizes = sizes;
  std::vector<double> lx, ly;
  for (size_t i = 0; i < sizes.size(); ++i) {
    out.m2.push_back(locate_m2(m[i], s[i], m_lo[i], opts));
    lx.push_back(std::log(static_cast<double>(sizes[i])));
    ly.push_back(std::log(out.m2.back()));
  }
  const LineFit f = ols(lx, ly);
  out.delta = f.slope;
  const double mx = std::accumulate(lx.begin(), lx.end(), 0.0) / lx.size();
  double sxx = 0.0;
  for (double x : lx) sxx += (x - mx) * (x - mx);
  // Each m2 is only known to within one decimation step (uniform in log m).
  const double grid_sd = std::log(10.0) / opts.per_decade / std::sqrt(12.0);
  out.delta_stderr = std::max(f.slope_se, grid_sd / std::sqrt(sxx));
  return out;
}

double collapse_residual(const std::vector<Curve>& curves, bool apply_scale, int grid_points) {
  if (curves.size() < 2) throw DomainError("collapse_residual: need at least two curves");
  std::vector<std::vector<double>> lx(curves.size()), ly(curves.size());
  double lo = -std::numeric_limits<double>::infinity();
  double hi = std::numeric_limits<double>::infinity();
  for (size_t c = 0; c < curves.size(); ++c) {
    const Curve& cv = curves[c];
    if (cv.m.size() != cv.value.size()) throw DomainError("collapse_residual: curve arrays differ in length");
    const double sc = apply_scale ? cv.scale : 1.0;
    for (size_t i = 0; i < cv.m.size(); ++i) {
      if (cv.value[i] > 0.0 && cv.m[i] > 0.0) {
        lx[c].push_back(std::log(cv.m[i] * sc));
        ly[c].push_back(std::log(cv.value[i]));
      }
    }
    if (lx[c].size() < 2) throw DomainError("collapse_residual: curve has fewer than two positive points");
    lo = std::max(lo, lx[c].front());
    hi = std::min(hi, lx[c].back());
  }
  if (!(hi > lo)) throw DomainError("collapse_residual: curves have no common support");
  double total = 0.0;
  for (int g = 0; g < grid_points; ++g) {
    const double x = lo + (hi - lo) * g / (grid_points - 1);
    double mean = 0.0;
    std::vector<double> v(curves.size());
    for (size_t c = 0; c < curves.size(); ++c) {
      v[c] = interp_log(lx[c], ly[c], x);
      mean += v[c];
    }
    mean /= static_cast<double>(curves.size());
    double var = 0.0;
    for (double y : v) var += (y - mean) * (y - mean);
    total += var / static_cast<double>(curves.size());
  }
  return total / grid_points;
}

CollapseScore collapse_score(const std::vector<Curve>& curves, int grid_points) {
  return {collapse_residual(curves, true, grid_points), collapse_residual(curves, false, grid_points)};
}

double oscillation_amplitude(const std::vector<double>& detection, long lo, long hi) {
  hi = std::min<long>(hi, static_cast<long>(detection.size()));
  if (lo < 1 || hi - lo + 1 < 5) throw DomainError("oscillation_amplitude: need at least five points");
  // Least squares for y = c0 + c1 x + c2 x^2 via the 3x3 normal equations.
  std::vector<double> xs, ys;
  for (long m = lo; m <= hi; ++m) {
    const double f = detection[m - 1];
    if (!(f > 0.0)) throw DomainError("oscillation_amplitude: nonpositive F in window");
    xs.push_back(std::log(static_cast<double>(m)));
    ys.push_back(std::log(f));
  }
  const double xm = std::accumulate(xs.begin(), xs.end(), 0.0) / xs.size();
  std::array<double, 9> a{};
  std::array<double, 3> b{};
  for (size_t i = 0; i < xs.size(); ++i) {
    const double x = xs[i] - xm;
    const double p[3] = {1.0, x, x * x};
    for (int r = 0; r < 3; ++r) {
      b[r] += p[r] * ys[i];
      for (int c = 0; c < 3; ++c) a[3 * r + c] += p[r] * p[c];
    }
  }
  // Gaussian elimination; the centred system is well conditioned.
  for (int col = 0; col < 3; ++col) {
    for (int r = col + 1; r < 3; ++r) {
      const double f = a[3 * r + col] / a[3 * col + col];
      for (int c = col; c < 3; ++c) a[3 * r + c] -= f * a[3 * col + c];
      b[r] -= f * b[col];
    }
  }
  std::array<double, 3> c{};
  for (int r = 2; r >= 0; --r) {
    double s = b[r];
    for (int k = r + 1; k < 3; ++k) s -= a[3 * r + k] * c[k];
    c[r] = s / a[3 * r + r];
  }
  double sse = 0.0;
  for (size_t i = 0; i < xs.size(); ++i) {
    const double x = xs[i] - xm;
    const double r = ys[i] - (c[0] + c[1] * x + c[2] * x * x);
    sse += r * r;
  }
  return std::sqrt(sse / xs.size());
}

std::vector<double> planted_detection(long m_max, double m1, double oscillation) {
  if (m_max < 1 || !(m1 > 0.0) || oscillation < 0.0 || oscillation >= 1.0) {
    throw DomainError("planted_detection: need m_max >= 1, m1 > 0, 0 <= oscillation < 1");
  }
  std::vector<double> f(static_cast<size_t>(m_max));
  const double late = 1.0 / std::sqrt(m1);  // A m^-3 = B m^-5/2 at m1 with A = 1
  for (long m = 1; m <= m_max; ++m) {
    const double x = static_cast<double>(m);
    f[m - 1] = x < m1 ? std::pow(x, -3.0) * (1.0 + oscillation * ((m % 2 == 0) ? 1.0 : -1.0))
                      : late * std::pow(x, -2.5);
  }
  return f;
}

std::vector<double> planted_survival(long m_max, double exponent, double m2) {
  if (m_max < 1 || !(m2 > 0.0)) throw DomainError("planted_survival: need m_max >= 1 and m2 > 0");
  std::vector<double> s(static_cast<size_t>(m_max));
  for (long m = 1; m <= m_max; ++m) {
    const double x = static_cast<double>(m);
    s[m - 1] = std::exp(exponent * std::log(x) - (x > m2 ? (x - m2) / m2 : 0.0));
  }
  return s;
}

}  // namespace randmeas
