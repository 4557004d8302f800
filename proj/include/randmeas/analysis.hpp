#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "randmeas/scaling.hpp"

namespace randmeas {

/// Survival and first-detection series of one lattice size.
struct SeriesInput {
  int n = 0;
  double mean_tau = 1.0;
  std::vector<double> survival;   // S_1 .. S_M
  std::vector<double> detection;  // F_1 .. F_M
};

struct AnalysisOptions {
  std::optional<std::pair<double, double>> early_window;         // default [m1/10, m1/2]
  std::optional<std::pair<double, double>> intermediate_window;  // default [3 m1, min(M, m2/3)]
  bool m2 = false;
  bool collapse = true;
  long detection_period = 1;  // oscillation period of F; early bins are at least max(period, 2) wide
  double m1_range = 70.0;     // crossover search stops at m1_range * N / <tau>
  // Collapse compares S curves up to this multiple of N / <tau>; 0 uses the
  // whole common support.
  double collapse_range = 0.0;
};

struct RegimeFits {
  std::optional<ScalingReport> survival;
  std::optional<ScalingReport> detection;
  std::string survival_note;  // why a fit is missing
  std::string detection_note;
};

struct SizeReport {
  int n = 0;
  double mean_tau = 1.0;
  long m_max = 0;
  std::optional<CrossoverM1> m1;
  std::string m1_note;
  std::optional<double> m2;
  std::string m2_note;
  double m2_anchor = 0.0;  // start of the m^-3/2 fit: 3 m1, or 3 x first revival when m1 is inconclusive
  RegimeFits early;
  RegimeFits intermediate;
};

struct FamilyReport {
  std::vector<SizeReport> sizes;
  std::optional<CollapseScore> collapse;
  std::string collapse_note;
  std::optional<M2Scaling> m2;
  std::string m2_note;
  /// (max - min) / mean of m1 <tau> / N across sizes; NaN with fewer than two.
  double m1_rescaled_spread = 0.0;

  /// True if any requested quantity could not be determined.
  bool inconclusive() const;
};

/// Exponent fit of F over [lo, hi] on log bins (20 per decade, 40 if that
/// leaves fewer than kMinFitPoints bins), each at least `min_width` wide.
ScalingReport fit_detection(const std::vector<double>& detection, double lo, double hi, int per_decade,
                            long min_width, Regime regime);

/// Exponent fit of S over [lo, hi] on the log-decimated series.
ScalingReport fit_survival(const std::vector<double>& survival, double lo, double hi, Regime regime);

SizeReport analyze_size(const SeriesInput& series, const AnalysisOptions& opts);

/// Runs `analyze_size` per member, then the family-level quantities: the m2
/// scaling (when requested), the collapse score and the spread of the
/// rescaled crossover. Inconclusive parts are recorded in the notes.
FamilyReport analyze_family(const std::vector<SeriesInput>& family, const AnalysisOptions& opts);

}  // namespace randmeas
