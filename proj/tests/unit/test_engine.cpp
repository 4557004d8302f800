#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>

#include "randmeas/engine.hpp"
#include "randmeas/scheme1.hpp"

using namespace randmeas;

namespace {

const double kTheta80 = 80.0 * kPi / 180.0;

QrwModel walk(int n, double theta = kTheta80, int n0 = 0) {
  return QrwModel{n, qrw::CoinAngle(theta), qrw::SpinorInit(1.0, Complex(0.0, 1.0), n0)};
}

TbmModel chain(int n, double gamma = 1.0, int n0 = 0) { return TbmModel{tbm::TbmParams(n, gamma), n0}; }

}  // namespace

TEST(Measure, ProjectorActions) {
  const ComplexVector init{Complex(0.6, 0.0), Complex(0.0, 0.8)};
  const auto same_p = measure(init, init, Scheme::Projected);
  EXPECT_NEAR(same_p.weight, 1.0, 1e-15);
  for (size_t i = 0; i < init.size(); ++i) EXPECT_NEAR(std::abs(same_p.post[i] - init[i]), 0.0, 1e-15);

  const auto same_l = measure(init, init, Scheme::Leftover);
  EXPECT_EQ(same_l.weight, 0.0);
  for (const auto& z : same_l.post) EXPECT_EQ(z, Complex{});

  const ComplexVector orth{Complex(0.0, 0.4), Complex(0.3, 0.0)};  // <init|orth> = 0
  const auto o = measure(orth, init, Scheme::Leftover);
  EXPECT_NEAR(o.weight, 0.25, 1e-15);
  for (size_t i = 0; i < init.size(); ++i) EXPECT_NEAR(std::abs(o.post[i] - orth[i]), 0.0, 1e-15);
}

TEST(FirstDetection, Definition) {
  const auto f = first_detection({0.9, 0.7});
  EXPECT_NEAR(f[0], 0.1, 1e-15);
  EXPECT_NEAR(f[1], 0.2, 1e-15);
  for (double v : first_detection({1.0, 1.0, 1.0})) EXPECT_EQ(v, 0.0);
  const auto c = first_detection({0.5, 0.5, 0.5});
  EXPECT_EQ(c[1], 0.0);
  EXPECT_EQ(c[2], 0.0);
  EXPECT_THROW(first_detection({0.5, 0.6}), NumericalError);
  EXPECT_NO_THROW(first_detection({0.5, 0.5 + 1e-13}));
}

TEST(Compatibility, WalkRejectsContinuousAndOddLaws) {
  EXPECT_THROW(check_compatible(walk(10), IntervalLaw(ContinuousExponential{1.0})), ConfigError);
  EXPECT_THROW(check_compatible(walk(9), IntervalLaw(ContinuousDelta{2.0})), ConfigError);
  EXPECT_NO_THROW(check_compatible(walk(10), IntervalLaw(DiscreteDelta{2})));
  EXPECT_NO_THROW(check_compatible(chain(10), IntervalLaw(ContinuousExponential{1.0})));
  try {
    check_compatible(walk(10), IntervalLaw(HalfNormal{0.0, 1.0}));
    FAIL() << "expected ConfigError";
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("odd"), std::string::npos);
  }
}

TEST(Trajectory, ProjectedSchemeIsProductOfReturnProbabilities) {
  Rng rng(5);
  for (const Model& model : {Model(walk(17)), Model(walk(12, 1.1, 4)), Model(chain(15, 0.7, 3))}) {
    const IntervalLaw law = std::holds_alternative<QrwModel>(model) ? IntervalLaw(DiscreteExponential{0.3})
                                                                   : IntervalLaw(ContinuousExponential{0.8});
    const Trajectory tr = run_trajectory(model, Scheme::Projected, law, 40, rng);
    double prod = 1.0;
    for (size_t i = 0; i < tr.taus.size(); ++i) {
      prod *= return_probability(model, tr.taus[i]);
      ASSERT_NEAR(tr.survival[i], prod, 1e-10 * std::max(1.0, prod)) << "m=" << i + 1;
      if (i > 0) {
        ASSERT_NEAR(tr.first_detection[i], (1.0 - return_probability(model, tr.taus[i])) * tr.survival[i - 1], 1e-10);
      }
    }
  }
}

TEST(Trajectory, FullMixingCoin) {
  Rng rng(1);
  const Model m = walk(8, kPi / 2);
  const IntervalLaw law(DiscreteDelta{4});
  const Trajectory p = run_trajectory(m, Scheme::Projected, law, 20, rng);
  for (double s : p.survival) EXPECT_NEAR(s, 1.0, 1e-12);
  const Trajectory l = run_trajectory(m, Scheme::Leftover, law, 20, rng);
  for (double s : l.survival) EXPECT_EQ(s, 0.0);
}

TEST(Trajectory, TwoSiteChain) {
  Rng rng(1);
  const double tau0 = 0.3;
  const Trajectory tr = run_trajectory(chain(2, 1.2), Scheme::Projected, IntervalLaw(ContinuousDelta{tau0}), 25, rng);
  for (size_t i = 0; i < tr.survival.size(); ++i) {
    EXPECT_NEAR(tr.survival[i], std::pow(std::cos(2 * 1.2 * tau0), 2.0 * (i + 1)), 1e-12);
  }
}

TEST(Trajectory, FirstMeasurementSchemesAreComplementary) {
  for (const Model& model : {Model(walk(21)), Model(chain(9))}) {
    const IntervalLaw law = std::holds_alternative<QrwModel>(model) ? IntervalLaw(Poisson{2.0})
                                                                   : IntervalLaw(HalfNormal{0.0, 2.0});
    const Simulator sim(model, law);
    Rng rng(77);
    for (int i = 0; i < 20; ++i) {
      const std::vector<double> taus{law.sample(rng)};
      const double s1 = sim.run_with_taus(Scheme::Projected, taus).survival[0];
      const double s2 = sim.run_with_taus(Scheme::Leftover, taus).survival[0];
      EXPECT_NEAR(s1 + s2, 1.0, 1e-12);
    }
  }
}

TEST(Trajectory, LeftoverSeriesInvariants) {
  Rng rng(9);
  const Trajectory tr = run_trajectory(walk(30), Scheme::Leftover, IntervalLaw(DiscreteExponential{0.5}), 500, rng);
  double sum_f = 0.0;
  for (size_t i = 0; i < tr.survival.size(); ++i) {
    EXPECT_GE(tr.first_detection[i], 0.0);
    if (i > 0) EXPECT_LE(tr.survival[i], tr.survival[i - 1] + tol::kMonotone);
    sum_f += tr.first_detection[i];
    EXPECT_NEAR(sum_f, 1.0 - tr.survival[i], 1e-12);
  }
  EXPECT_LE(sum_f, 1.0 + 1e-12);
}

TEST(Simulator, ModeSpaceMatchesSiteSpaceMeasurement) {
  // Oracle: site-space evolution by direct stepping with the projector built
  // from the localized initial spinor.
  const int n = 10;
  const QrwModel m = walk(n, 0.8, 2);
  const Simulator sim(m, IntervalLaw(DiscreteExponential{0.4}));
  const std::vector<double> taus{2, 6, 4, 2, 10, 8, 2};
  const Trajectory tr = sim.run_with_taus(Scheme::Leftover, taus);
  qrw::QrwState s = qrw::QrwState::localized(n, m.init);
  for (size_t i = 0; i < taus.size(); ++i) {
    s = qrw::step_n(s, m.coin, static_cast<long>(taus[i]));
    const Complex c = std::conj(m.init.a) * s.up[2] + std::conj(m.init.b) * s.down[2];
    s.up[2] -= c * m.init.a;
    s.down[2] -= c * m.init.b;
    EXPECT_NEAR(tr.survival[i], s.squared_norm(), 1e-12) << "m=" << i + 1;
  }
}

TEST(Ensemble, SingleRealizationAndDeltaLaw) {
  const Model model = walk(14);
  const IntervalLaw law(DiscreteExponential{0.5});
  const EnsembleResult one = run_ensemble(model, Scheme::Leftover, law, 30, 1, 42);
  Rng rng = derive_stream(42, 0);
  const Trajectory tr = run_trajectory(model, Scheme::Leftover, law, 30, rng);
  for (long m = 1; m <= 30; ++m) EXPECT_EQ(one.mean_survival(m), tr.survival[m - 1]);

  const EnsembleResult delta = run_ensemble(chain(11), Scheme::Projected, IntervalLaw(ContinuousDelta{0.4}), 30, 20, 3);
  for (long m = 1; m <= 30; ++m) {
    EXPECT_NEAR(delta.mean_survival(m), delta.typical_survival(m), 1e-14 * delta.mean_survival(m));
  }
}

TEST(Ensemble, DeterministicAcrossWorkerCounts) {
  const Model model = walk(20);
  const IntervalLaw law(Poisson{1.5});
  const EnsembleResult a = run_ensemble(model, Scheme::Leftover, law, 50, 70, 1234, {.workers = 1});
  const EnsembleResult b = run_ensemble(model, Scheme::Leftover, law, 50, 70, 1234, {.workers = 3});
  EXPECT_EQ(a.survival.sum, b.survival.sum);
  EXPECT_EQ(a.survival.log_sum, b.survival.log_sum);
  EXPECT_EQ(a.detection.sum, b.detection.sum);
  ASSERT_EQ(a.traces.size(), b.traces.size());
  for (size_t i = 0; i < a.traces.size(); ++i) EXPECT_EQ(a.traces[i].survival, b.traces[i].survival);
}

TEST(Ensemble, CheckpointResumeReproducesUninterruptedRun) {
  const auto path = (std::filesystem::temp_directory_path() / "randmeas_ckpt_test.bin").string();
  std::filesystem::remove(path);
  const Model model = walk(16);
  const IntervalLaw law(DiscreteExponential{0.5});
  EnsembleOptions opts;
  opts.checkpoint_path = path;
  opts.checkpoint_interval_s = 0.0;
  opts.stop_after_blocks = 2;
  const EnsembleResult partial = run_ensemble(model, Scheme::Leftover, law, 40, 100, 9, opts);
  EXPECT_FALSE(partial.complete);
  EXPECT_TRUE(std::filesystem::exists(path));

  opts.stop_after_blocks = -1;
  const EnsembleResult resumed = run_ensemble(model, Scheme::Leftover, law, 40, 100, 9, opts);
  EXPECT_TRUE(resumed.complete);
  EXPECT_FALSE(std::filesystem::exists(path));

  const EnsembleResult straight = run_ensemble(model, Scheme::Leftover, law, 40, 100, 9);
  EXPECT_EQ(resumed.survival.sum, straight.survival.sum);
  EXPECT_EQ(resumed.survival.log_sum_sq, straight.survival.log_sum_sq);
  EXPECT_EQ(resumed.detection.sum, straight.detection.sum);
  EXPECT_EQ(resumed.traces.size(), straight.traces.size());
}

TEST(Ensemble, CheckpointFromDifferentRunIsIgnored) {
  const auto path = (std::filesystem::temp_directory_path() / "randmeas_ckpt_other.bin").string();
  std::filesystem::remove(path);
  EnsembleOptions opts;
  opts.checkpoint_path = path;
  opts.checkpoint_interval_s = 0.0;
  opts.stop_after_blocks = 1;
  run_ensemble(walk(16), Scheme::Leftover, IntervalLaw(DiscreteExponential{0.5}), 40, 100, 9, opts);
  opts.stop_after_blocks = -1;
  const EnsembleResult other = run_ensemble(walk(16), Scheme::Leftover, IntervalLaw(DiscreteExponential{0.5}), 40,
                                            100, 10, opts);
  const EnsembleResult fresh = run_ensemble(walk(16), Scheme::Leftover, IntervalLaw(DiscreteExponential{0.5}), 40,
                                            100, 10);
  EXPECT_EQ(other.survival.sum, fresh.survival.sum);
}

TEST(Ensemble, MonteCarloMeanApproachesClosedForm) {
  const QrwModel model = walk(40);
  const IntervalLaw law(DiscreteExponential{0.5});
  const qrw::ReturnProbability q(model.init, model.coin, model.n);
  const double mean_q = law.expect([&](double t) { return q(static_cast<long>(t)); });
  for (long r : {100L, 1000L, 10000L}) {
    const EnsembleResult res = run_ensemble(model, Scheme::Projected, law, 8, r, 2718);
    for (long m = 1; m <= 8; ++m) {
      const double exact = std::pow(mean_q, static_cast<double>(m));
      EXPECT_NEAR(res.mean_survival(m), exact, 3.0 * res.survival_stderr(m) + 1e-15) << "R=" << r << " m=" << m;
    }
  }
}

TEST(Ensemble, JensenOrdering) {
  const EnsembleResult res =
      run_ensemble(walk(30), Scheme::Projected, IntervalLaw(DiscreteExponential{0.5}), 20, 10000, 31);
  for (long m = 1; m <= 20; ++m) EXPECT_GT(res.mean_survival(m), res.typical_survival(m));
}

TEST(Rng, StreamDerivationIsStable) {
  Rng a = derive_stream(123, 4);
  Rng b(splitmix64(123 ^ splitmix64(4)));
  for (int i = 0; i < 10; ++i) EXPECT_EQ(a(), b());
  Rng c = derive_stream(123, 5);
  Rng d = derive_stream(123, 4);
  EXPECT_NE(c(), d());
  Rng e(0);
  for (int i = 0; i < 1000; ++i) {
    const double u = uniform_open01(e);
    EXPECT_GT(u, 0.0);
    EXPECT_LT(u, 1.0);
  }
}
