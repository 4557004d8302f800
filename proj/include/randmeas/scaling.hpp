#pragma once

#include <optional>
#include <string>
#include <vector>

#include "randmeas/core.hpp"

namespace randmeas {

/// Raised when an analysis cannot reach a verdict from the data it was given.
class InconclusiveError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct FitWindow {
  FitWindow(double lo, double hi);
  double m_lo;
  double m_hi;
};

enum class Regime { Early, Intermediate, Tail, Custom };
std::string regime_name(Regime r);

struct ScalingReport {
  double exponent = 0.0;
  double stderr_ = 0.0;
  double intercept = 0.0;  // log amplitude
  double residual = 0.0;   // RMS of log residuals
  double m_lo = 0.0;
  double m_hi = 0.0;
  int points = 0;
  Regime regime = Regime::Custom;
};

inline constexpr int kMinFitPoints = 10;

/// Least-squares slope of log value against log m on points picked from a
/// log-uniform grid with `per_decade` targets. Throws DomainError for
/// nonpositive values in the window and InconclusiveError when fewer than
/// kMinFitPoints remain after decimation.
ScalingReport fit_power_law(const std::vector<double>& m, const std::vector<double>& value, FitWindow window,
                            int per_decade = 40, Regime regime = Regime::Custom);

/// Points (m_i, v_i) closest to a log-uniform grid over [lo, hi].
std::vector<size_t> log_decimate(const std::vector<double>& m, double lo, double hi, int per_decade);

struct BinnedSeries {
  std::vector<double> m;      // geometric bin centre sqrt(a (b - 1))
  std::vector<double> value;  // mean of the series over the bin
};

/// Averages a 1-based series v_1..v_M over log-spaced bins [a, b) covering
/// [lo, hi], each at least `min_width` wide.
BinnedSeries log_bin(const std::vector<double>& series, long lo, long hi, int per_decade, long min_width = 1);

/// Averages over consecutive blocks of `period` measurements starting at lo.
BinnedSeries block_average(const std::vector<double>& series, long lo, long hi, long period);

struct CrossoverM1 {
  double m1 = 0.0;
  double rescaled = 0.0;  // m1 <tau> / N
  double bracket_lo = 0.0;
  double bracket_hi = 0.0;
  double jump = 0.0;  // log amplitude change of F m^3 -> F m^{5/2} at the crossover
};

struct M1Options {
  long m_min = 4;
  long m_max = 0;  // 0: whole series
  int per_decade = 20;
  int min_side_bins = 3;
  long min_width = 2;  // merges isolated near-zeros of an oscillating F
};

/// Locates the m^-3 -> m^-5/2 crossover of a first-detection series F_1..F_M
/// by segmented regression with the two slopes fixed and a free changepoint.
/// A continuous join returns the intersection of the two branches; a jump
/// (revival) returns the geometric centre of the bracketing bins. Throws
/// InconclusiveError if the two-branch model is not clearly better than a
/// single power law.
CrossoverM1 detect_crossover_m1(const std::vector<double>& detection, int n, double mean_tau,
                                M1Options opts = {});

/// First ballistic revival of F: the centre of the steepest rise of m^3 F
/// across a fifth of a decade of log bins in [m_min, m_max], so the estimate
/// is good to about 0.1 decade. Throws InconclusiveError if no rise reaches a
/// factor `min_rise`.
double locate_revival(const std::vector<double>& detection, M1Options opts = {}, double min_rise = 10.0);

struct M2Options {
  int per_decade = 40;
  int consecutive = 5;
  double drop = 0.36787944117144233;  // 1/e
  int max_iterations = 30;
};

/// Departure point of S_m below a fixed-slope m^-3/2 fit. `m` and `s` are
/// matching arrays (any spacing); the fit window starts at `m_lo` and is
/// shrunk to [m_lo, m2/3] until stable.
double locate_m2(const std::vector<double>& m, const std::vector<double>& s, double m_lo, M2Options opts = {});

struct M2Scaling {
  std::vector<int> sizes;
  std::vector<double> m2;
  double delta = 0.0;
  double delta_stderr = 0.0;
};

/// m2 for each lattice size, then delta from log m2 against log N. The
/// stderr is the larger of the regression error and the error implied by the
/// decimation grid resolution.
M2Scaling detect_crossover_m2(const std::vector<int>& sizes, const std::vector<std::vector<double>>& m,
                              const std::vector<std::vector<double>>& s, const std::vector<double>& m_lo,
                              M2Options opts = {});

struct Curve {
  double scale = 1.0;  // abscissa multiplier, e.g. <tau> / N
  std::vector<double> m;
  std::vector<double> value;
};

struct CollapseScore {
  double rescaled = 0.0;
  double unrescaled = 0.0;
};

/// Mean squared log deviation between curves on their common support, with
/// and without the abscissa rescaling. Throws DomainError on empty overlap.
CollapseScore collapse_score(const std::vector<Curve>& curves, int grid_points = 200);

/// Variance of log v across curves at shared abscissae `x` (each curve
/// already rescaled), averaged over a log grid of the common support.
double collapse_residual(const std::vector<Curve>& curves, bool apply_scale, int grid_points = 200);

/// RMS deviation of log F_m from a quadratic in log m over [lo, hi]. Zero
/// for a smooth (curved) power law; grows with measurement-scale oscillations.
double oscillation_amplitude(const std::vector<double>& detection, long lo, long hi);

/// Planted first-detection series F_1..F_M: m^-3 up to `m1`, then the
/// continuous m^-5/2 branch. `oscillation` adds a period-2 wiggle of that
/// relative size below m1.
std::vector<double> planted_detection(long m_max, double m1, double oscillation = 0.0);

/// Planted survival series S_1..S_M: m^exponent up to m2, then damped by
/// exp(-(m - m2) / m2). The departure point therefore scales exactly with m2.
std::vector<double> planted_survival(long m_max, double exponent, double m2);

}  // namespace randmeas
