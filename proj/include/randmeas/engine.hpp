#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "randmeas/intervals.hpp"
#include "randmeas/qrw.hpp"
#include "randmeas/rng.hpp"
#include "randmeas/tbm.hpp"

namespace randmeas {

enum class Scheme { Projected, Leftover };

std::string scheme_name(Scheme s);
Scheme parse_scheme(const std::string& name);

struct QrwModel {
  int n;
  qrw::CoinAngle coin;
  qrw::SpinorInit init;
};

struct TbmModel {
  tbm::TbmParams params;
  int n0 = 0;
};

using Model = std::variant<QrwModel, TbmModel>;

/// Thrown when a model/law combination cannot be run.
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Rejects combinations that would silently produce meaningless output, e.g.
/// a continuous law on the discrete-time walk.
void check_compatible(const Model& model, const IntervalLaw& law);

/// Single-measurement return probability q(tau) for either model.
double return_probability(const Model& model, double tau);

struct MeasureResult {
  double weight = 0.0;  // squared norm of the post-measurement state
  ComplexVector post;
};

/// Projective measurement against `init`. `inner_scale` multiplies every inner
/// product, which lets the same routine run on unnormalized Fourier
/// coefficients (scale 1/N). Post-states whose squared norm falls below
/// kZeroStateFloor are returned as exact zeros.
MeasureResult measure(const ComplexVector& state, const ComplexVector& init, Scheme scheme,
                      double inner_scale = 1.0);

inline constexpr double kZeroStateFloor = 1e-28;

struct Trajectory {
  std::vector<double> taus;
  std::vector<double> survival;         // S_1 .. S_m
  std::vector<double> first_detection;  // F_1 .. F_m
};

/// F_m = S_{m-1} - S_m with S_0 = 1. Throws NumericalError if S rises by
/// more than the monotonicity tolerance.
std::vector<double> first_detection(const std::vector<double>& survival);

/// Mode-space simulator for one model. Immutable after construction and safe
/// to share between threads.
class Simulator {
 public:
  Simulator(Model model, IntervalLaw law);

  const Model& model() const { return model_; }
  const IntervalLaw& law() const { return law_; }
  int lattice_size() const;

  /// Initial state in mode space.
  const ComplexVector& initial_modes() const { return init_; }
  /// Evolve mode-space state in place for time tau.
  void propagate(ComplexVector& modes, double tau) const;
  /// Inner-product scale for mode-space vectors (1/N).
  double inner_scale() const { return inner_scale_; }

  Trajectory run(Scheme scheme, long m, Rng& rng) const;
  /// Same protocol driven by a given interval sequence.
  Trajectory run_with_taus(Scheme scheme, const std::vector<double>& taus) const;

 private:
  struct CachedPropagator {
    double tau;
    ComplexVector coeffs;  // QRW: 4 per mode (row-major M^tau); TBM: 1 phase per mode
  };
  ComplexVector coefficients(double tau) const;
  const ComplexVector* cached(double tau) const;

  Model model_;
  IntervalLaw law_;
  ComplexVector init_;
  double inner_scale_ = 1.0;
  std::vector<CachedPropagator> cache_;
};

Trajectory run_trajectory(const Model& model, Scheme scheme, const IntervalLaw& law, long m, Rng& rng);

/// Per-m running statistics of one observable across realizations.
struct SeriesStats {
  std::vector<double> sum;
  std::vector<double> sum_sq;
  std::vector<double> log_sum;  // over positive values only
  std::vector<double> log_sum_sq;
  std::vector<long> positive;

  void resize(size_t n);
  void add(const std::vector<double>& values);
  void merge(const SeriesStats& other);
};

struct EnsembleOptions {
  int workers = 1;
  int keep_traces = 5;
  int block_size = 16;  // realizations per deterministic merge unit
  std::string checkpoint_path;  // empty disables checkpointing
  double checkpoint_interval_s = 60.0;  // 0 writes after every block
  long stop_after_blocks = -1;  // testing hook: simulate an interruption
};

struct EnsembleResult {
  long m = 0;
  long realizations = 0;
  std::uint64_t master_seed = 0;
  std::string model_desc;
  std::string law_desc;
  Scheme scheme = Scheme::Projected;
  SeriesStats survival;  // index 0 .. m-1 for measurement 1 .. m
  SeriesStats detection;
  std::vector<Trajectory> traces;
  bool complete = true;

  double mean_survival(long mi) const;      // mi is 1-based
  double typical_survival(long mi) const;   // exp(<log S>) over S > 0
  double survival_stderr(long mi) const;
  double mean_detection(long mi) const;
  double typical_detection(long mi) const;
  double typical_survival_stderr(long mi) const;  // stderr of exp(<log S>) by the delta method
};

EnsembleResult run_ensemble(const Model& model, Scheme scheme, const IntervalLaw& law, long m, long realizations,
                            std::uint64_t master_seed, const EnsembleOptions& opts = {});

std::string describe(const Model& model);
std::string describe(const IntervalLaw& law);

}  // namespace randmeas
