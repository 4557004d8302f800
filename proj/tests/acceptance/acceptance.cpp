// Acceptance runs: one PASS/FAIL line per criterion. Arguments select a
// subset by number; no arguments runs all twelve.

#include <algorithm>
#include <boost/math/distributions/chi_squared.hpp>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <functional>
#include <numeric>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "randmeas/analysis.hpp"
#include "randmeas/engine.hpp"
#include "randmeas/qrw.hpp"
#include "randmeas/runner.hpp"
#include "randmeas/scaling.hpp"
#include "randmeas/scheme1.hpp"
#include "randmeas/tbm.hpp"

using namespace randmeas;

namespace {

struct Outcome {
  bool pass = true;
  std::ostringstream detail;

  void require(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      detail << " [failed: " << what << "]";
    }
  }
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt(double v, int prec = 4) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*g", prec, v);
  return buf;
}

constexpr double kTheta80 = 80.0 * kPi / 180.0;

Model walk(int n) { return QrwModel{n, qrw::CoinAngle(kTheta80), qrw::SpinorInit(1.0, Complex(0.0, 1.0), 0)}; }
Model chain(int n) { return TbmModel{tbm::TbmParams(n, 1.0), 0}; }

EnsembleOptions quiet() {
  EnsembleOptions o;
  o.keep_traces = 0;
  return o;
}

std::vector<double> series(const EnsembleResult& r, bool detection) {
  std::vector<double> v(static_cast<size_t>(r.m));
  for (long m = 1; m <= r.m; ++m) v[m - 1] = detection ? r.mean_detection(m) : r.mean_survival(m);
  return v;
}

SeriesInput series_input(const EnsembleResult& r, int n, double mean_tau) {
  return SeriesInput{n, mean_tau, series(r, false), series(r, true)};
}

// 1. Closed-form walk occupation against direct stepping.
void criterion1(Outcome& out) {
  const auto t0 = Clock::now();
  double worst = 0.0;
  const qrw::SpinorInit init(1.0, Complex(0.0, 1.0), 0);
  const qrw::CoinAngle coin(kTheta80);
  for (int n : {6, 7}) {
    const auto closed = qrw::site_occupation(qrw::closed_form_state(init, coin, n, 20));
    const auto direct = qrw::site_occupation(qrw::step_n(qrw::QrwState::localized(n, init), coin, 20));
    for (int j = 0; j < n; ++j) worst = std::max(worst, std::abs(closed[j] - direct[j]));
  }
  const double elapsed = seconds_since(t0);
  out.detail << "max |dP| = " << fmt(worst) << ", " << fmt(elapsed, 3) << " s";
  out.require(worst < 1e-10, "max |dP| < 1e-10");
  out.require(elapsed < 1.0, "runtime < 1 s");
}

// 2. Spectral chain propagator against RK4 integration.
void criterion2(Outcome& out) {
  const auto t0 = Clock::now();
  const tbm::TbmParams params(50, 1.0);
  const auto ode = tbm::site_occupation(tbm::integrate_rk4(tbm::TbmState::localized(50, 0), params, 10.0, 1e-3));
  double worst = 0.0, total = 0.0;
  for (int n = 0; n < 50; ++n) {
    const double p = std::norm(tbm::propagator_amplitude(params, n, 0, 10.0));
    worst = std::max(worst, std::abs(p - ode[n]));
    total += p;
  }
  const double elapsed = seconds_since(t0);
  out.detail << "max |dP| = " << fmt(worst) << ", |norm - 1| = " << fmt(std::abs(total - 1.0)) << ", "
             << fmt(elapsed, 3) << " s";
  out.require(worst < 1e-6, "max |dP| < 1e-6");
  out.require(std::abs(total - 1.0) < 1e-12, "norm 1 +/- 1e-12");
  out.require(elapsed < 5.0, "runtime < 5 s");
}

struct Scheme1Case {
  std::string name;
  Model model;
  IntervalLaw law;
  long realizations;
};

std::vector<Scheme1Case> scheme1_cases() {
  return {
      {"walk/discrete_exponential", walk(500), IntervalLaw(DiscreteExponential{0.5}), 3000},
      {"walk/discrete_power_law(2.5)", walk(500), IntervalLaw(DiscretePowerLaw{2.5}), 3000},
      {"walk/discrete_power_law(3.5)", walk(500), IntervalLaw(DiscretePowerLaw{3.5}), 3000},
      {"chain/exponential", chain(200), IntervalLaw(ContinuousExponential{2.0}), 10000},
      {"chain/power_law(2.5)", chain(200), IntervalLaw(ContinuousPowerLaw{2.5, 1.0}), 10000},
      {"chain/power_law(3.5)", chain(200), IntervalLaw(ContinuousPowerLaw{3.5, 1.0}), 10000},
  };
}

// 3. Ensemble averages of the projected scheme against the closed forms.
//
// The standard error of the mean is the exact one, sqrt(((E q^2)^m - (E q)^2m) / R).
// Once the relative variance per sample, (E q^2 / (E q)^2)^m - 1, exceeds R
// the sample mean is dominated by rare realizations and the sample SE
// underestimates the error, so the sample-SE check is applied only where the
// relative variance over R is at most 0.1.
void criterion3(Outcome& out) {
  const long m_max = 30;
  double worst_exact = 0.0, worst_sample = 0.0, worst_typ = 0.0;
  for (const auto& c : scheme1_cases()) {
    const ReturnFn q = make_return_function(c.model);
    const ExpectOptions eo = expect_options(c.model);
    const auto res = run_ensemble(c.model, Scheme::Projected, c.law, m_max, c.realizations, 20240601, quiet());
    const double e1 = c.law.expect(q, eo);
    const double e2 = c.law.expect([&](double t) { return q(t) * q(t); }, eo);
    const double log_avg = std::log(average_survival(c.law, q, 1, eo));
    const double log_typ = std::log(typical_survival(c.law, q, 1, eo));
    const double r = static_cast<double>(c.realizations);
    double case_exact = 0.0, case_sample = 0.0, case_typ = 0.0;
    long clt_limit = 0;
    for (long m = 1; m <= m_max; ++m) {
      const double expected = std::exp(m * log_avg);
      const double dev = std::abs(res.mean_survival(m) - expected);
      const double rel_var = std::expm1(m * std::log(e2 / (e1 * e1)));
      case_exact = std::max(case_exact, dev / (expected * std::sqrt(rel_var / r)));
      if (rel_var / r <= 0.1) {
        case_sample = std::max(case_sample, dev / res.survival_stderr(m));
        clt_limit = m;
      }
      const double zt = std::abs(res.typical_survival(m) - std::exp(m * log_typ)) / res.typical_survival_stderr(m);
      case_typ = std::max(case_typ, zt);
    }
    worst_exact = std::max(worst_exact, case_exact);
    worst_sample = std::max(worst_sample, case_sample);
    worst_typ = std::max(worst_typ, case_typ);
    out.require(case_exact <= 3.0, c.name + " mean within 3 exact SE (max " + fmt(case_exact, 3) + ")");
    out.require(case_sample <= 3.0, c.name + " mean within 3 sample SE for m <= " + std::to_string(clt_limit) +
                                        " (max " + fmt(case_sample, 3) + ")");
    out.require(case_typ <= 3.0, c.name + " typical within 3 SE (max " + fmt(case_typ, 3) + ")");
    if (clt_limit < m_max) out.detail << c.name << " sample-SE check to m = " << clt_limit << "; ";
  }
  out.detail << "max |z| mean = " << fmt(worst_exact, 3) << " (exact SE), " << fmt(worst_sample, 3)
             << " (sample SE), typical = " << fmt(worst_typ, 3) << " over " << scheme1_cases().size()
             << " laws, m <= " << m_max;
}

// 4. Average dominates typical; equal for delta laws.
void criterion4(Outcome& out) {
  long checked = 0;
  double min_gap = 1.0;
  for (const auto& c : scheme1_cases()) {
    const ReturnFn q = make_return_function(c.model);
    const ExpectOptions eo = expect_options(c.model);
    const double log_avg = std::log(average_survival(c.law, q, 1, eo));
    const double log_typ = std::log(typical_survival(c.law, q, 1, eo));
    for (long m = 1; m <= 30; ++m) {
      const double avg = std::exp(m * log_avg);
      const double typ = std::exp(m * log_typ);
      out.require(avg >= typ, c.name + " average >= typical at m = " + std::to_string(m));
      min_gap = std::min(min_gap, avg - typ);
      ++checked;
    }
    // The sample estimators obey the same order by the AM-GM inequality.
    const auto res = run_ensemble(c.model, Scheme::Projected, c.law, 30, 200, 7, quiet());
    for (long m = 1; m <= 30; ++m) {
      out.require(res.mean_survival(m) >= res.typical_survival(m) * (1.0 - 1e-14), c.name + " sample order");
    }
  }
  double worst_delta = 0.0;
  const std::vector<std::pair<Model, IntervalLaw>> deltas{{walk(500), IntervalLaw(DiscreteDelta{4})},
                                                          {chain(200), IntervalLaw(ContinuousDelta{0.7})}};
  for (const auto& [model, law] : deltas) {
    const ReturnFn q = make_return_function(model);
    for (long m = 1; m <= 30; ++m) {
      worst_delta = std::max(worst_delta, std::abs(average_survival(law, q, m) - typical_survival(law, q, m)));
    }
  }
  out.require(worst_delta < 1e-12, "delta-law gap < 1e-12");
  out.detail << checked << " (law, m) pairs, min gap " << fmt(min_gap) << ", delta-law gap " << fmt(worst_delta);
}

// Scheme-2 runs shared by criteria 5 and 6.
struct Scheme2Run {
  std::string name;
  SizeReport report;
};

const std::vector<Scheme2Run>& scheme2_runs() {
  static const std::vector<Scheme2Run> runs = [] {
    std::vector<Scheme2Run> out;
    const long m_max = 100000;
    const std::vector<std::tuple<std::string, Model, IntervalLaw, double, long>> cases{
        {"walk", walk(150), IntervalLaw(DiscreteDelta{2}), 2.0, 2},
        {"chain", chain(150), IntervalLaw(ContinuousDelta{1.0}), 1.0, 1},
    };
    for (const auto& [name, model, law, mean_tau, period] : cases) {
      const auto res = run_ensemble(model, Scheme::Leftover, law, m_max, 50, 99, quiet());
      AnalysisOptions opts;
      opts.collapse = false;
      opts.detection_period = period;
      out.push_back({name, analyze_size(series_input(res, 150, mean_tau), opts)});
    }
    return out;
  }();
  return runs;
}

void require_fit(Outcome& out, const std::string& label, const std::optional<ScalingReport>& fit,
                 const std::string& note, double target, double tol) {
  if (!fit) {
    out.require(false, label + " unavailable: " + note);
    return;
  }
  out.detail << label << " " << fmt(fit->exponent, 4) << " on [" << fmt(fit->m_lo, 4) << ", " << fmt(fit->m_hi, 4)
             << "]; ";
  out.require(std::abs(fit->exponent - target) <= tol, label + " = " + fmt(target) + " +/- " + fmt(tol));
}

// 5. Intermediate exponents of the leftover scheme.
void criterion5(Outcome& out) {
  for (const auto& run : scheme2_runs()) {
    const auto& r = run.report;
    out.detail << run.name << ": m1 = " << (r.m1 ? fmt(r.m1->m1, 4) : "n/a") << ", ";
    require_fit(out, run.name + " S", r.intermediate.survival, r.intermediate.survival_note, -1.5, 0.15);
    require_fit(out, run.name + " F", r.intermediate.detection, r.intermediate.detection_note, -2.5, 0.25);
  }
}

// 6. Early detection exponent of the same runs.
void criterion6(Outcome& out) {
  for (const auto& run : scheme2_runs()) {
    const auto& r = run.report;
    require_fit(out, run.name + " F", r.early.detection, r.early.detection_note, -3.0, 0.3);
  }
}

// 7. m1 linear in N / <tau>, and the collapse of S under m <tau> / N.
void criterion7(Outcome& out) {
  const std::vector<int> sizes{100, 150, 200};
  struct LawCase {
    std::string name;
    IntervalLaw law;
    long realizations;
  };
  const std::vector<LawCase> laws{{"delta(2)", IntervalLaw(DiscreteDelta{2}), 16},
                                  {"poisson(1.5)", IntervalLaw(Poisson{1.5}), 40}};
  std::vector<double> constants;
  for (const auto& lc : laws) {
    const double mean_tau = lc.law.mean();
    std::vector<SeriesInput> family;
    for (int n : sizes) {
      const long m_max = static_cast<long>(std::ceil(70.0 * n / mean_tau));
      const auto res = run_ensemble(walk(n), Scheme::Leftover, lc.law, m_max, lc.realizations, 4242 + n, quiet());
      family.push_back(series_input(res, n, mean_tau));
    }
    AnalysisOptions opts;
    opts.detection_period = 2;
    const FamilyReport rep = analyze_family(family, opts);
    // Least-squares slope of m1 against N through the origin.
    double sxy = 0.0, sxx = 0.0;
    out.detail << lc.name << " m1 =";
    bool all = true;
    for (const auto& s : rep.sizes) {
      if (!s.m1) {
        out.require(false, lc.name + " N = " + std::to_string(s.n) + " m1: " + s.m1_note);
        all = false;
        continue;
      }
      out.detail << " " << fmt(s.m1->m1, 4);
      sxy += s.n * s.m1->m1;
      sxx += static_cast<double>(s.n) * s.n;
    }
    if (all) {
      const double c = sxy / sxx * mean_tau;
      constants.push_back(c);
      out.detail << " (m1 <tau>/N = " << fmt(c, 4) << ", spread " << fmt(rep.m1_rescaled_spread, 3) << ")";
      out.require(rep.m1_rescaled_spread <= 0.2, lc.name + " m1 linear in N within 20%");
    }
    if (rep.collapse) {
      const double gain = rep.collapse->unrescaled / rep.collapse->rescaled;
      out.detail << ", collapse gain " << fmt(gain, 3) << "; ";
      out.require(gain >= 5.0, lc.name + " collapse gain >= 5");
    } else {
      out.require(false, lc.name + " collapse: " + rep.collapse_note);
    }
  }
  if (constants.size() == 2) {
    const double rel = std::abs(constants[0] - constants[1]) / (0.5 * (constants[0] + constants[1]));
    out.detail << "slope constants differ by " << fmt(100.0 * rel, 3) << "%";
    out.require(rel <= 0.2, "slope consistent with 1/<tau> within 20%");
  }
}

// 8. m2 ~ N^delta from small lattices run past the exponential onset.
void criterion8(Outcome& out) {
  const std::vector<int> sizes{16, 24, 32};
  std::vector<M2Scaling> found;
  const std::vector<std::tuple<std::string, std::function<Model(int)>, IntervalLaw, double, long>> cases{
      {"walk", walk, IntervalLaw(DiscreteDelta{2}), 2.0, 2},
      {"chain", chain, IntervalLaw(ContinuousDelta{1.0}), 1.0, 1},
  };
  for (const auto& [name, make, law, mean_tau, period] : cases) {
    std::vector<SeriesInput> family;
    for (int n : sizes) {
      const long m_max = 31L * n * n * n;
      const auto res = run_ensemble(make(n), Scheme::Leftover, law, m_max, 1, 8, quiet());
      family.push_back(series_input(res, n, mean_tau));
    }
    AnalysisOptions opts;
    opts.m2 = true;
    opts.collapse = false;
    opts.detection_period = period;
    const FamilyReport rep = analyze_family(family, opts);
    if (!rep.m2) {
      for (const auto& s : rep.sizes) {
        if (!s.m2) out.detail << name << " N=" << s.n << ": " << s.m2_note << "; ";
      }
      out.require(false, name + " m2 scaling: " + rep.m2_note);
      continue;
    }
    out.detail << name << " m2 =";
    for (double v : rep.m2->m2) out.detail << " " << fmt(v, 4);
    out.detail << ", delta = " << fmt(rep.m2->delta, 4) << " +/- " << fmt(rep.m2->delta_stderr, 2) << "; ";
    found.push_back(*rep.m2);
  }
  if (found.size() == 2) {
    out.require(std::abs(found[0].delta - 3.0) <= 0.4, "walk delta = 3.0 +/- 0.4");
    const double gap = std::abs(found[0].delta - found[1].delta);
    out.require(gap <= found[0].delta_stderr + found[1].delta_stderr, "chain delta within joint error bars");
  }
}

// 9. Zeno limit: 1 - S at fixed total time T = m tau0 scales like tau0.
void criterion9(Outcome& out) {
  const Model model = chain(100);
  const ReturnFn q = make_return_function(model);
  std::vector<double> dev;
  for (double tau0 : {1e-2, 5e-3, 2.5e-3}) {
    const long m = std::lround(1.0 / tau0);
    const auto res = run_ensemble(model, Scheme::Projected, IntervalLaw(ContinuousDelta{tau0}), m, 1, 1, quiet());
    const double simulated = 1.0 - res.mean_survival(m);
    const double closed = zeno_deviation(q, tau0, m);
    out.require(std::abs(simulated - closed) <= 1e-9 * closed + 1e-15, "simulation matches the closed form");
    dev.push_back(simulated);
  }
  out.detail << "1 - S = " << fmt(dev[0]) << ", " << fmt(dev[1]) << ", " << fmt(dev[2]) << "; ratios";
  for (size_t i = 1; i < dev.size(); ++i) {
    const double ratio = dev[i - 1] / dev[i];
    out.detail << " " << fmt(ratio, 4);
    out.require(std::abs(ratio / 2.0 - 1.0) <= 0.15, "halving tau0 halves 1 - S within 15%");
  }
}

// 10. Rate-function properties on random Bernoulli laws.
void criterion10(Outcome& out) {
  std::mt19937_64 rng(10);
  std::uniform_real_distribution<double> u(0.02, 1.0);
  double worst_zero = 0.0, worst_typ = 0.0, min_rate = 0.0;
  for (int trial = 0; trial < 20; ++trial) {
    const int d = 1 + static_cast<int>(rng() % 6);
    std::vector<double> taus, p, q;
    for (int a = 0; a < d; ++a) {
      taus.push_back(2.0 * (a + 1));
      p.push_back(u(rng));
      q.push_back(u(rng));
    }
    const double total = std::accumulate(p.begin(), p.end(), 0.0);
    for (double& v : p) v /= total;
    p.back() = 1.0 - std::accumulate(p.begin(), p.end() - 1, 0.0);
    const BernoulliLaw bern(taus, p);
    const int points = 401;
    const auto curve = ld_rate_curve(bern, q, points);
    const double xs = ld_typical_point(bern, q);
    double best = curve.front().rate, best_x = curve.front().x;
    for (const auto& s : curve) {
      min_rate = std::min(min_rate, s.rate);
      if (s.rate < best) {
        best = s.rate;
        best_x = s.x;
      }
    }
    worst_zero = std::max(worst_zero, ld_rate_function(bern, q, xs));
    const auto [lo, hi] = ld_domain(q);
    if (hi > lo) out.require(std::abs(best_x - xs) <= (hi - lo) / (points - 1) + 1e-12, "grid minimizer at x*");
    double direct = 0.0;
    for (int a = 0; a < d; ++a) direct += p[a] * std::log(q[a]);
    for (long m : {1L, 10L, 100L}) {
      const double expected = std::exp(m * direct);
      worst_typ = std::max(worst_typ, std::abs(typical_from_ld(bern, q, m) - expected));
    }
  }
  out.detail << "min I = " << fmt(min_rate) << ", max I(x*) = " << fmt(worst_zero)
             << ", max |typical difference| = " << fmt(worst_typ);
  out.require(min_rate >= 0.0, "I >= 0 on the grid");
  out.require(worst_zero < 1e-12, "I(x*) < 1e-12");
  out.require(worst_typ < 1e-12, "typical from LDT equals exp(m <log q>)");
}

// Independent CDFs for the goodness-of-fit tests.
double continuous_cdf(const IntervalLaw::Params& p, double t) {
  if (const auto* e = std::get_if<ContinuousExponential>(&p)) return t <= 0 ? 0.0 : 1.0 - std::exp(-e->r * t);
  if (const auto* w = std::get_if<ContinuousPowerLaw>(&p)) {
    return t <= w->tau_ch ? 0.0 : 1.0 - std::pow(t / w->tau_ch, -w->alpha);
  }
  const auto& h = std::get<HalfNormal>(p);
  return t <= h.tau_hn ? 0.0 : std::erf((t - h.tau_hn) / (h.sigma * std::sqrt(2.0)));
}

double discrete_mass(const IntervalLaw::Params& p, long k) {  // k = tau / 2
  if (const auto* e = std::get_if<DiscreteExponential>(&p)) return e->r * std::pow(1.0 - e->r, k - 1);
  if (const auto* s = std::get_if<DiscretePowerLaw>(&p)) {
    double z = 0.0;  // direct zeta sum with an integral tail
    for (long j = 100000; j >= 1; --j) z += std::pow(static_cast<double>(j), -s->s);
    z += std::pow(100000.5, 1.0 - s->s) / (s->s - 1.0);
    return std::pow(static_cast<double>(k), -s->s) / z;
  }
  const auto& po = std::get<Poisson>(p);
  return std::exp(-po.lambda + (k - 1) * std::log(po.lambda) - std::lgamma(static_cast<double>(k)));
}

// 11. Sampler fidelity for all eight laws.
void criterion11(Outcome& out) {
  const long n = 1000000;
  const double alpha = 0.001;
  const std::vector<IntervalLaw::Params> params{
      DiscreteExponential{0.5}, DiscretePowerLaw{3.5},  DiscreteDelta{4},   Poisson{1.5},
      ContinuousExponential{2.0}, ContinuousPowerLaw{2.5, 1.0}, ContinuousDelta{0.7}, HalfNormal{0.5, 1.0}};
  for (const auto& prm : params) {
    const IntervalLaw law(prm);
    Rng rng(derive_stream(11, std::hash<std::string>{}(law.kind())));
    std::vector<double> x(static_cast<size_t>(n));
    for (double& v : x) v = law.sample(rng);

    // Identical seeds give identical streams.
    Rng again(derive_stream(11, std::hash<std::string>{}(law.kind())));
    bool same = true;
    for (double v : x) {
      const double w = law.sample(again);
      same = same && std::memcmp(&v, &w, sizeof v) == 0;
    }
    out.require(same, law.kind() + " bit-identical stream");

    double s = 0.0, s2 = 0.0;
    for (double v : x) {
      s += v;
      s2 += v * v;
    }
    const double mean = s / n;
    const double se = std::sqrt(std::max(0.0, s2 / n - mean * mean) / n);
    out.require(std::abs(mean - law.mean()) <= 3.0 * se + 1e-12 * law.mean(), law.kind() + " mean within 3 SE");

    if (law.is_delta()) {
      const bool constant = std::all_of(x.begin(), x.end(), [&](double v) { return v == law.mean(); });
      out.require(constant, law.kind() + " constant");
      continue;
    }

    // Chi-squared on cells with at least 20 expected counts; the rest pooled.
    std::vector<double> expected, observed;
    if (law.is_discrete()) {
      std::vector<double> counts;
      for (double v : x) {
        const auto k = static_cast<size_t>(v / 2.0);
        if (counts.size() <= k) counts.resize(k + 1, 0.0);
        counts[k] += 1.0;
      }
      double tail_p = 1.0, tail_o = static_cast<double>(n);
      for (long k = 1;; ++k) {
        const double e = n * discrete_mass(prm, k);
        if (e < 20.0 || tail_p * n - e < 20.0) break;
        const double o = static_cast<size_t>(k) < counts.size() ? counts[k] : 0.0;
        expected.push_back(e);
        observed.push_back(o);
        tail_p -= e / n;
        tail_o -= o;
      }
      expected.push_back(tail_p * n);
      observed.push_back(tail_o);
    } else {
      const int cells = 200;
      std::vector<double> counts(cells, 0.0);
      for (double v : x) {
        const int c = std::min(cells - 1, static_cast<int>(continuous_cdf(prm, v) * cells));
        counts[c] += 1.0;
      }
      expected.assign(cells, static_cast<double>(n) / cells);
      observed = counts;
    }
    double chi2 = 0.0;
    for (size_t i = 0; i < expected.size(); ++i) chi2 += std::pow(observed[i] - expected[i], 2) / expected[i];
    const double dof = static_cast<double>(expected.size() - 1);
    const double crit = boost::math::quantile(boost::math::complement(boost::math::chi_squared(dof), alpha));
    out.detail << law.kind() << " chi2 " << fmt(chi2, 4) << "/" << fmt(crit, 4);
    out.require(chi2 <= crit, law.kind() + " chi-squared at 0.001");

    // Kolmogorov-Smirnov for continuous laws, asymptotic critical value.
    if (!law.is_discrete()) {
      std::sort(x.begin(), x.end());
      double d = 0.0;
      for (long i = 0; i < n; ++i) {
        const double f = continuous_cdf(prm, x[i]);
        d = std::max({d, f - static_cast<double>(i) / n, static_cast<double>(i + 1) / n - f});
      }
      const double d_crit = 1.94947 / std::sqrt(static_cast<double>(n));
      out.detail << ", KS " << fmt(d, 3) << "/" << fmt(d_crit, 3);
      out.require(d <= d_crit, law.kind() + " KS at 0.001");
    }
    out.detail << "; ";
  }
}

// 12. Small-m oscillations of F weaken as the Poisson rate grows.
void criterion12(Outcome& out) {
  const int n = 100;
  std::vector<double> amps;
  for (double lambda : {0.5, 1.5, 5.0}) {
    const IntervalLaw law(Poisson{lambda});
    const double mean_tau = law.mean();
    const long m_max = static_cast<long>(std::ceil(70.0 * n / mean_tau));
    const auto res = run_ensemble(walk(n), Scheme::Leftover, law, m_max, 200, 1212, quiet());
    const auto f = series(res, true);
    M1Options o;
    const auto c = detect_crossover_m1(f, n, mean_tau, o);
    const double amp = oscillation_amplitude(f, 2, static_cast<long>(c.m1 / 2.0));
    out.detail << "lambda " << fmt(lambda, 2) << ": m1 " << fmt(c.m1, 4) << ", amplitude " << fmt(amp, 4) << "; ";
    amps.push_back(amp);
  }
  out.require(amps[0] > amps[1] && amps[1] > amps[2], "amplitude decreasing in lambda");
}

struct Criterion {
  int id;
  const char* title;
  std::function<void(Outcome&)> run;
};

}  // namespace

int main(int argc, char** argv) {
  const std::vector<Criterion> all{
      {1, "walk propagator equivalence", criterion1},    {2, "chain propagator equivalence", criterion2},
      {3, "projected-scheme closed forms", criterion3},  {4, "Jensen ordering", criterion4},
      {5, "leftover intermediate exponents", criterion5}, {6, "leftover early exponent", criterion6},
      {7, "m1 scaling and collapse", criterion7},        {8, "m2 scaling", criterion8},
      {9, "Zeno limit", criterion9},                     {10, "rate-function properties", criterion10},
      {11, "sampler fidelity", criterion11},             {12, "small-m oscillations", criterion12},
  };
  std::set<int> selected;
  for (int i = 1; i < argc; ++i) selected.insert(std::atoi(argv[i]));

  int failures = 0;
  for (const auto& c : all) {
    if (!selected.empty() && !selected.count(c.id)) continue;
    Outcome out;
    const auto t0 = Clock::now();
    try {
      c.run(out);
    } catch (const std::exception& e) {
      out.require(false, std::string("exception: ") + e.what());
    }
    if (!out.pass) ++failures;
    std::printf("%s %2d %s (%.1f s): %s\n", out.pass ? "PASS" : "FAIL", c.id, c.title, seconds_since(t0),
                out.detail.str().c_str());
    std::fflush(stdout);
  }
  return failures == 0 ? 0 : 1;
}
