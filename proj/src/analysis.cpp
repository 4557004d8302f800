#include "randmeas/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace randmeas {
namespace {

std::vector<double> index_axis(size_t n) {
  std::vector<double> m(n);
  std::iota(m.begin(), m.end(), 1.0);
  return m;
}

template <typename Fn>
void attempt(Fn&& fn, std::optional<ScalingReport>& out, std::string& note) {
  try {
    out = fn();
  } catch (const InconclusiveError& e) {
    note = e.what();
  } catch (const DomainError& e) {
    note = e.what();
  }
}

}  // namespace

bool FamilyReport::inconclusive() const {
  if (!collapse_note.empty() || !m2_note.empty()) return true;
  for (const auto& s : sizes) {
    if (!s.m1_note.empty() || !s.m2_note.empty()) return true;
    for (const RegimeFits* r : {&s.early, &s.intermediate}) {
      if (!r->survival_note.empty() || !r->detection_note.empty()) return true;
    }
  }
  return false;
}

ScalingReport fit_detection(const std::vector<double>& detection, double lo, double hi, int per_decade,
                            long min_width, Regime regime) {
  const long a = std::max(1L, static_cast<long>(std::ceil(lo)));
  const long b = std::min(static_cast<long>(detection.size()), static_cast<long>(std::floor(hi)));
  if (b <= a) throw InconclusiveError("fit_detection: window [" + std::to_string(lo) + ", " + std::to_string(hi) +
                                      "] is empty within the series");
  BinnedSeries bins = log_bin(detection, a, b, per_decade, min_width);
  if (static_cast<int>(bins.m.size()) < kMinFitPoints) bins = log_bin(detection, a, b, 2 * per_decade, min_width);
  if (static_cast<int>(bins.m.size()) < kMinFitPoints) {
    throw InconclusiveError("fit_detection: window [" + std::to_string(lo) + ", " + std::to_string(hi) +
                            "] yields only " + std::to_string(bins.m.size()) + " bins");
  }
  // Keep every bin: the decimation grid is finer than the bins.
  const double span = std::log10(bins.m.back() / bins.m.front());
  const int dense = static_cast<int>(std::ceil(4.0 * bins.m.size() / std::max(span, 1e-9)));
  ScalingReport r = fit_power_law(bins.m, bins.value, FitWindow(bins.m.front(), bins.m.back()), dense, regime);
  r.m_lo = static_cast<double>(a);
  r.m_hi = static_cast<double>(b);
  return r;
}

ScalingReport fit_survival(const std::vector<double>& survival, double lo, double hi, Regime regime) {
  hi = std::min(hi, static_cast<double>(survival.size()));
  if (!(hi > lo)) throw InconclusiveError("fit_survival: window is empty within the series");
  return fit_power_law(index_axis(survival.size()), survival, FitWindow(lo, hi), 40, regime);
}

SizeReport analyze_size(const SeriesInput& series, const AnalysisOptions& opts) {
  if (series.survival.size() != series.detection.size() || series.survival.empty()) {
    throw DomainError("analyze_size: survival and detection series must match and be nonempty");
  }
  SizeReport rep;
  rep.n = series.n;
  rep.mean_tau = series.mean_tau;
  rep.m_max = static_cast<long>(series.survival.size());
  const double natural = series.n / series.mean_tau;

  M1Options o;
  o.m_max = std::min(rep.m_max, static_cast<long>(std::ceil(opts.m1_range * natural)));
  try {
    rep.m1 = detect_crossover_m1(series.detection, series.n, series.mean_tau, o);
  } catch (const InconclusiveError& e) {
    rep.m1_note = e.what();
  }

  if (opts.m2) {
    try {
      // Small lattices do not resolve the two F slopes, but the first revival
      // still marks the start of the m^-3/2 regime.
      rep.m2_anchor = 3.0 * (rep.m1 ? rep.m1->m1 : locate_revival(series.detection, o));
      rep.m2 = locate_m2(index_axis(series.survival.size()), series.survival, rep.m2_anchor);
    } catch (const InconclusiveError& e) {
      rep.m2_note = e.what();
    }
  }

  // Early regime.
  std::optional<std::pair<double, double>> early = opts.early_window;
  if (!early && rep.m1) early = std::make_pair(rep.m1->m1 / 10.0, rep.m1->m1 / 2.0);
  if (early) {
    const long width = std::max(opts.detection_period, 2L);
    attempt([&] { return fit_detection(series.detection, early->first, early->second, 20, width, Regime::Early); },
            rep.early.detection, rep.early.detection_note);
    attempt([&] { return fit_survival(series.survival, early->first, early->second, Regime::Early); },
            rep.early.survival, rep.early.survival_note);
  } else {
    rep.early.survival_note = rep.early.detection_note = "no early window: crossover m1 unavailable";
  }

  // Intermediate regime.
  std::optional<std::pair<double, double>> mid = opts.intermediate_window;
  if (!mid && rep.m1) {
    double hi = static_cast<double>(rep.m_max);
    if (rep.m2) hi = std::min(hi, *rep.m2 / 3.0);
    mid = std::make_pair(3.0 * rep.m1->m1, hi);
  }
  if (mid) {
    const long width = std::max(opts.detection_period, rep.m1 ? std::lround(rep.m1->m1) : 1L);
    attempt([&] { return fit_detection(series.detection, mid->first, mid->second, 10, width, Regime::Intermediate); },
            rep.intermediate.detection, rep.intermediate.detection_note);
    attempt([&] { return fit_survival(series.survival, mid->first, mid->second, Regime::Intermediate); },
            rep.intermediate.survival, rep.intermediate.survival_note);
  } else {
    rep.intermediate.survival_note = rep.intermediate.detection_note =
        "no intermediate window: crossover m1 unavailable";
  }
  return rep;
}

FamilyReport analyze_family(const std::vector<SeriesInput>& family, const AnalysisOptions& opts) {
  FamilyReport out;
  for (const auto& s : family) out.sizes.push_back(analyze_size(s, opts));

  std::vector<double> rescaled;
  for (const auto& s : out.sizes) {
    if (s.m1) rescaled.push_back(s.m1->rescaled);
  }
  if (rescaled.size() >= 2) {
    const auto [lo, hi] = std::minmax_element(rescaled.begin(), rescaled.end());
    const double mean = std::accumulate(rescaled.begin(), rescaled.end(), 0.0) / rescaled.size();
    out.m1_rescaled_spread = (*hi - *lo) / mean;
  } else {
    out.m1_rescaled_spread = std::numeric_limits<double>::quiet_NaN();
  }

  if (opts.m2) {
    std::vector<int> sizes;
    std::vector<double> m2;
    for (const auto& s : out.sizes) {
      if (s.m2) {
        sizes.push_back(s.n);
        m2.push_back(*s.m2);
      }
    }
    if (sizes.size() == out.sizes.size() && sizes.size() >= 2) {
      // Reuse the regression and its error model on the located points.
      std::vector<std::vector<double>> ms, ss;
      std::vector<double> lo;
      for (size_t i = 0; i < family.size(); ++i) {
        ms.push_back(index_axis(family[i].survival.size()));
        ss.push_back(family[i].survival);
        lo.push_back(out.sizes[i].m2_anchor);
      }
      try {
        out.m2 = detect_crossover_m2(sizes, ms, ss, lo);
      } catch (const InconclusiveError& e) {
        out.m2_note = e.what();
      }
    } else {
      out.m2_note = "m2 unavailable for some lattice sizes";
    }
  }

  if (opts.collapse && family.size() >= 2) {
    std::vector<Curve> curves;
    for (const auto& s : family) {
      Curve c;
      c.scale = s.mean_tau / s.n;
      size_t len = s.survival.size();
      if (opts.collapse_range > 0.0) {
        len = std::min(len, static_cast<size_t>(std::ceil(opts.collapse_range * s.n / s.mean_tau)));
      }
      c.m = index_axis(len);
      c.value.assign(s.survival.begin(), s.survival.begin() + static_cast<long>(len));
      curves.push_back(std::move(c));
    }
    try {
      out.collapse = collapse_score(curves);
    } catch (const DomainError& e) {
      out.collapse_note = e.what();
    }
  }
  return out;
}

}  // namespace randmeas
