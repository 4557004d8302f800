#include "randmeas/engine.hpp"

#include <chrono>
#include <cmath>
#include <condition_variable>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <map>
#include <mutex>
#include <sstream>
#include <thread>

namespace randmeas {
namespace {

constexpr double kCacheMaxTau = 512.0;
constexpr int kCacheMaxModes = 1024;

double inner_norm(const ComplexVector& v, double scale) { return scale * squared_norm(v); }

Complex inner(const ComplexVector& a, const ComplexVector& b, double scale) {
  Complex acc{};
  for (size_t i = 0; i < a.size(); ++i) acc += std::conj(a[i]) * b[i];
  return scale * acc;
}

// In-place measurement; returns the post-measurement weight.
double measure_in_place(ComplexVector& state, const ComplexVector& init, Scheme scheme, double scale) {
  const double before = inner_norm(state, scale);
  const Complex c = inner(init, state, scale);
  if (scheme == Scheme::Projected) {
    for (size_t i = 0; i < state.size(); ++i) state[i] = c * init[i];
  } else {
    for (size_t i = 0; i < state.size(); ++i) state[i] -= c * init[i];
  }
  const double weight = inner_norm(state, scale);
  if (weight <= kZeroStateFloor * before) {
    std::fill(state.begin(), state.end(), Complex{});
    return 0.0;
  }
  return weight;
}

std::string fmt(double x) {
  std::ostringstream os;
  os << std::setprecision(17) << x;
  return os.str();
}

std::string fmt(Complex z) { return "(" + fmt(z.real()) + "," + fmt(z.imag()) + ")"; }

}  // namespace

std::string scheme_name(Scheme s) { return s == Scheme::Projected ? "projected" : "leftover"; }

Scheme parse_scheme(const std::string& name) {
  if (name == "projected") return Scheme::Projected;
  if (name == "leftover") return Scheme::Leftover;
  throw ConfigError("unknown scheme '" + name + "' (expected 'projected' or 'leftover')");
}

void check_compatible(const Model& model, const IntervalLaw& law) {
  if (const auto* q = std::get_if<QrwModel>(&model)) {
    if (!law.is_discrete()) {
      std::string msg = "law '" + law.kind() + "' produces non-integer intervals but the walk evolves in integer steps";
      if (q->n % 2 == 0) {
        msg += "; with even N the occupation at n0 vanishes for odd t, so measurements at odd times would give q = 0";
      }
      throw ConfigError(msg);
    }
    if (q->n % 2 == 0 && !law.even_support()) {
      throw ConfigError("even N locks the parity of occupied sites to that of n0 + t; the law must be supported on even times");
    }
    if (q->init.n0 < 0 || q->init.n0 >= q->n) throw ConfigError("qrw n0 outside [0, N)");
  } else {
    const auto& t = std::get<TbmModel>(model);
    if (t.n0 < 0 || t.n0 >= t.params.n) throw ConfigError("tbm n0 outside [0, N)");
  }
}

double return_probability(const Model& model, double tau) {
  if (const auto* q = std::get_if<QrwModel>(&model)) {
    if (tau != std::floor(tau) || tau < 0) throw DomainError("return_probability: walk times must be nonnegative integers");
    return qrw::q_return(q->init, q->coin, q->n, static_cast<long>(tau));
  }
  return tbm::q_return(std::get<TbmModel>(model).params, tau);
}

MeasureResult measure(const ComplexVector& state, const ComplexVector& init, Scheme scheme, double inner_scale) {
  if (state.size() != init.size()) throw DomainError("measure: state and initial state differ in size");
  MeasureResult r{0.0, state};
  r.weight = measure_in_place(r.post, init, scheme, inner_scale);
  return r;
}

std::vector<double> first_detection(const std::vector<double>& survival) {
  std::vector<double> f(survival.size());
  double prev = 1.0;
  for (size_t i = 0; i < survival.size(); ++i) {
    f[i] = prev - survival[i];
    if (f[i] < -tol::kMonotone) {
      throw NumericalError("first_detection: survival increases at m = " + std::to_string(i + 1) + " by " +
                           fmt(-f[i]));
    }
    prev = survival[i];
  }
  return f;
}

Simulator::Simulator(Model model, IntervalLaw law) : model_(std::move(model)), law_(std::move(law)) {
  check_compatible(model_, law_);
  const int n = lattice_size();
  inner_scale_ = 1.0 / n;
  if (const auto* q = std::get_if<QrwModel>(&model_)) {
    init_.resize(2 * static_cast<size_t>(n));
    for (int j = 0; j < n; ++j) {
      const Complex ph = std::polar(1.0, kTwoPi * j * q->init.n0 / n);
      init_[j] = q->init.a * ph;
      init_[n + j] = q->init.b * ph;
    }
  } else {
    const auto& t = std::get<TbmModel>(model_);
    init_.resize(static_cast<size_t>(n));
    for (int j = 0; j < n; ++j) init_[j] = std::polar(1.0, -kTwoPi * j * t.n0 / n);
  }
  // Interval values that recur often get their propagator tabulated once.
  if (const auto* d = std::get_if<DiscreteDelta>(&law_.params())) {
    cache_.push_back({static_cast<double>(d->tau0), coefficients(static_cast<double>(d->tau0))});
  } else if (const auto* d = std::get_if<ContinuousDelta>(&law_.params())) {
    cache_.push_back({d->tau0, coefficients(d->tau0)});
  } else if (law_.is_discrete() && n <= kCacheMaxModes) {
    for (double tau = 2.0; tau <= kCacheMaxTau; tau += 2.0) cache_.push_back({tau, coefficients(tau)});
  }
}

int Simulator::lattice_size() const {
  if (const auto* q = std::get_if<QrwModel>(&model_)) return q->n;
  return std::get<TbmModel>(model_).params.n;
}

ComplexVector Simulator::coefficients(double tau) const {
  const int n = lattice_size();
  ComplexVector c;
  if (const auto* q = std::get_if<QrwModel>(&model_)) {
    c.resize(4 * static_cast<size_t>(n));
    for (int j = 0; j < n; ++j) {
      const auto m = qrw::transfer_power(kTwoPi * j / n, q->coin, static_cast<long>(tau));
      std::copy(m.begin(), m.end(), c.begin() + 4 * j);
    }
  } else {
    const auto& p = std::get<TbmModel>(model_).params;
    c.resize(static_cast<size_t>(n));
    for (int j = 0; j < n; ++j) c[j] = std::polar(1.0, p.mode_frequency(j) * tau);
  }
  return c;
}

const ComplexVector* Simulator::cached(double tau) const {
  if (cache_.size() == 1) return cache_[0].tau == tau ? &cache_[0].coeffs : nullptr;
  if (!cache_.empty() && tau >= 2.0 && tau <= kCacheMaxTau) {
    const auto idx = static_cast<size_t>(tau / 2.0) - 1;
    if (idx < cache_.size() && cache_[idx].tau == tau) return &cache_[idx].coeffs;
  }
  return nullptr;
}

void Simulator::propagate(ComplexVector& modes, double tau) const {
  if (tau < 0.0) throw DomainError("propagate: negative time");
  if (tau == 0.0) return;
  const ComplexVector* table = cached(tau);
  ComplexVector fresh;
  if (table == nullptr) {
    fresh = coefficients(tau);
    table = &fresh;
  }
  const int n = lattice_size();
  const ComplexVector& c = *table;
  if (std::holds_alternative<QrwModel>(model_)) {
    for (int j = 0; j < n; ++j) {
      const Complex u = modes[j];
      const Complex d = modes[n + j];
      modes[j] = c[4 * j] * u + c[4 * j + 1] * d;
      modes[n + j] = c[4 * j + 2] * u + c[4 * j + 3] * d;
    }
  } else {
    for (int j = 0; j < n; ++j) modes[j] *= c[j];
  }
}

Trajectory Simulator::run_with_taus(Scheme scheme, const std::vector<double>& taus) const {
  Trajectory tr;
  tr.taus = taus;
  tr.survival.reserve(taus.size());
  ComplexVector psi = init_;
  bool zero = false;
  for (double tau : taus) {
    if (zero) {
      tr.survival.push_back(0.0);
      continue;
    }
    propagate(psi, tau);
    const double w = measure_in_place(psi, init_, scheme, inner_scale_);
    zero = (w == 0.0);
    tr.survival.push_back(w);
  }
  tr.first_detection = first_detection(tr.survival);
  return tr;
}

Trajectory Simulator::run(Scheme scheme, long m, Rng& rng) const {
  if (m < 0) throw DomainError("run: negative measurement count");
  std::vector<double> taus(static_cast<size_t>(m));
  for (auto& t : taus) t = law_.sample(rng);
  return run_with_taus(scheme, taus);
}

Trajectory run_trajectory(const Model& model, Scheme scheme, const IntervalLaw& law, long m, Rng& rng) {
  return Simulator(model, law).run(scheme, m, rng);
}

void SeriesStats::resize(size_t n) {
  sum.assign(n, 0.0);
  sum_sq.assign(n, 0.0);
  log_sum.assign(n, 0.0);
  log_sum_sq.assign(n, 0.0);
  positive.assign(n, 0);
}

void SeriesStats::add(const std::vector<double>& values) {
  for (size_t i = 0; i < values.size(); ++i) {
    const double v = values[i];
    sum[i] += v;
    sum_sq[i] += v * v;
    if (v > 0.0) {
      const double l = std::log(v);
      log_sum[i] += l;
      log_sum_sq[i] += l * l;
      ++positive[i];
    }
  }
}

void SeriesStats::merge(const SeriesStats& other) {
  for (size_t i = 0; i < sum.size(); ++i) {
    sum[i] += other.sum[i];
    sum_sq[i] += other.sum_sq[i];
    log_sum[i] += other.log_sum[i];
    log_sum_sq[i] += other.log_sum_sq[i];
    positive[i] += other.positive[i];
  }
}

double EnsembleResult::mean_survival(long mi) const { return survival.sum.at(mi - 1) / realizations; }

double EnsembleResult::typical_survival(long mi) const {
  const long c = survival.positive.at(mi - 1);
  return c == 0 ? 0.0 : std::exp(survival.log_sum[mi - 1] / c);
}

double EnsembleResult::survival_stderr(long mi) const {
  if (realizations < 2) return 0.0;
  const double mean = mean_survival(mi);
  const double var = std::max(0.0, (survival.sum_sq[mi - 1] / realizations - mean * mean)) * realizations /
                     (realizations - 1.0);
  return std::sqrt(var / realizations);
}

double EnsembleResult::typical_survival_stderr(long mi) const {
  const long c = survival.positive.at(mi - 1);
  if (c < 2) return 0.0;
  const double mu = survival.log_sum[mi - 1] / c;
  const double var = std::max(0.0, survival.log_sum_sq[mi - 1] / c - mu * mu) * c / (c - 1.0);
  return std::exp(mu) * std::sqrt(var / c);
}

double EnsembleResult::mean_detection(long mi) const { return detection.sum.at(mi - 1) / realizations; }

double EnsembleResult::typical_detection(long mi) const {
  const long c = detection.positive.at(mi - 1);
  return c == 0 ? 0.0 : std::exp(detection.log_sum[mi - 1] / c);
}

std::string describe(const Model& model) {
  if (const auto* q = std::get_if<QrwModel>(&model)) {
    return "qrw(N=" + std::to_string(q->n) + ",theta=" + fmt(q->coin.radians()) + ",a=" + fmt(q->init.raw_a) +
           ",b=" + fmt(q->init.raw_b) + ",n0=" + std::to_string(q->init.n0) + ")";
  }
  const auto& t = std::get<TbmModel>(model);
  return "tbm(N=" + std::to_string(t.params.n) + ",gamma=" + fmt(t.params.gamma) + ",n0=" + std::to_string(t.n0) +
         ")";
}

std::string describe(const IntervalLaw& law) {
  std::string args = std::visit(
      [](const auto& p) -> std::string {
        using T = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<T, DiscreteExponential> || std::is_same_v<T, ContinuousExponential>) {
          return "r=" + fmt(p.r);
        } else if constexpr (std::is_same_v<T, DiscretePowerLaw>) {
          return "s=" + fmt(p.s);
        } else if constexpr (std::is_same_v<T, DiscreteDelta>) {
          return "tau0=" + std::to_string(p.tau0);
        } else if constexpr (std::is_same_v<T, Poisson>) {
          return "lambda=" + fmt(p.lambda);
        } else if constexpr (std::is_same_v<T, ContinuousPowerLaw>) {
          return "alpha=" + fmt(p.alpha) + ",tau_ch=" + fmt(p.tau_ch);
        } else if constexpr (std::is_same_v<T, ContinuousDelta>) {
          return "tau0=" + fmt(p.tau0);
        } else {
          return "tau_hn=" + fmt(p.tau_hn) + ",sigma=" + fmt(p.sigma);
        }
      },
      law.params());
  return law.kind() + "(" + args + ")";
}

namespace {

struct Block {
  SeriesStats survival;
  SeriesStats detection;
  std::vector<Trajectory> traces;
};

// Binary checkpoint: header key, merged block count, then the accumulators.
template <class T>
void put(std::ostream& os, const T& v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}
template <class T>
void get(std::istream& is, T& v) {
  is.read(reinterpret_cast<char*>(&v), sizeof(T));
}
template <class T>
void put_vec(std::ostream& os, const std::vector<T>& v) {
  put(os, static_cast<std::uint64_t>(v.size()));
  os.write(reinterpret_cast<const char*>(v.data()), static_cast<std::streamsize>(v.size() * sizeof(T)));
}
template <class T>
void get_vec(std::istream& is, std::vector<T>& v) {
  std::uint64_t n = 0;
  get(is, n);
  v.resize(n);
  is.read(reinterpret_cast<char*>(v.data()), static_cast<std::streamsize>(n * sizeof(T)));
}

void put_stats(std::ostream& os, const SeriesStats& s) {
  put_vec(os, s.sum);
  put_vec(os, s.sum_sq);
  put_vec(os, s.log_sum);
  put_vec(os, s.log_sum_sq);
  put_vec(os, s.positive);
}
void get_stats(std::istream& is, SeriesStats& s) {
  get_vec(is, s.sum);
  get_vec(is, s.sum_sq);
  get_vec(is, s.log_sum);
  get_vec(is, s.log_sum_sq);
  get_vec(is, s.positive);
}

constexpr char kCheckpointMagic[8] = {'R', 'M', 'C', 'K', 'P', 'T', '0', '1'};

void write_checkpoint(const std::string& path, const std::string& key, long blocks_done, const EnsembleResult& r) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream os(tmp, std::ios::binary | std::ios::trunc);
    if (!os) throw std::runtime_error("cannot write checkpoint " + tmp);
    os.write(kCheckpointMagic, sizeof kCheckpointMagic);
    put_vec(os, std::vector<char>(key.begin(), key.end()));
    put(os, blocks_done);
    put_stats(os, r.survival);
    put_stats(os, r.detection);
    put(os, static_cast<std::uint64_t>(r.traces.size()));
    for (const auto& t : r.traces) {
      put_vec(os, t.taus);
      put_vec(os, t.survival);
      put_vec(os, t.first_detection);
    }
  }
  std::filesystem::rename(tmp, path);
}

// Returns the number of merged blocks restored, or 0 if no usable checkpoint.
long read_checkpoint(const std::string& path, const std::string& key, EnsembleResult& r) {
  std::ifstream is(path, std::ios::binary);
  if (!is) return 0;
  char magic[8];
  is.read(magic, sizeof magic);
  if (!is || !std::equal(magic, magic + 8, kCheckpointMagic)) return 0;
  std::vector<char> stored;
  get_vec(is, stored);
  if (std::string(stored.begin(), stored.end()) != key) return 0;
  long blocks = 0;
  get(is, blocks);
  get_stats(is, r.survival);
  get_stats(is, r.detection);
  std::uint64_t nt = 0;
  get(is, nt);
  r.traces.resize(nt);
  for (auto& t : r.traces) {
    get_vec(is, t.taus);
    get_vec(is, t.survival);
    get_vec(is, t.first_detection);
  }
  if (!is) throw NumericalError("checkpoint " + path + " is truncated");
  return blocks;
}

}  // namespace

EnsembleResult run_ensemble(const Model& model, Scheme scheme, const IntervalLaw& law, long m, long realizations,
                            std::uint64_t master_seed, const EnsembleOptions& opts) {
  if (realizations < 1) throw DomainError("run_ensemble: need at least one realization");
  if (m < 1) throw DomainError("run_ensemble: need at least one measurement");
  const Simulator sim(model, law);
  EnsembleResult res;
  res.m = m;
  res.realizations = realizations;
  res.master_seed = master_seed;
  res.model_desc = describe(model);
  res.law_desc = describe(law);
  res.scheme = scheme;
  res.survival.resize(static_cast<size_t>(m));
  res.detection.resize(static_cast<size_t>(m));

  const long bs = std::max(1, opts.block_size);
  const long nblocks = (realizations + bs - 1) / bs;
  const std::string key = res.model_desc + "|" + res.law_desc + "|" + scheme_name(scheme) + "|m=" +
                          std::to_string(m) + "|R=" + std::to_string(realizations) + "|seed=" +
                          std::to_string(master_seed) + "|bs=" + std::to_string(bs) + "|K=" +
                          std::to_string(opts.keep_traces);
  long merged = 0;
  if (!opts.checkpoint_path.empty()) merged = read_checkpoint(opts.checkpoint_path, key, res);

  auto process = [&](long b) {
    Block blk;
    blk.survival.resize(static_cast<size_t>(m));
    blk.detection.resize(static_cast<size_t>(m));
    const long lo = b * bs;
    const long hi = std::min(realizations, lo + bs);
    for (long i = lo; i < hi; ++i) {
      Rng rng = derive_stream(master_seed, static_cast<std::uint64_t>(i));
      Trajectory tr = sim.run(scheme, m, rng);
      blk.survival.add(tr.survival);
      blk.detection.add(tr.first_detection);
      if (i < opts.keep_traces) blk.traces.push_back(std::move(tr));
    }
    return blk;
  };

  auto last_write = std::chrono::steady_clock::now();
  auto absorb = [&](Block&& blk) {
    res.survival.merge(blk.survival);
    res.detection.merge(blk.detection);
    for (auto& t : blk.traces) res.traces.push_back(std::move(t));
    ++merged;
    if (!opts.checkpoint_path.empty() && merged < nblocks) {
      const auto now = std::chrono::steady_clock::now();
      if (std::chrono::duration<double>(now - last_write).count() >= opts.checkpoint_interval_s) {
        write_checkpoint(opts.checkpoint_path, key, merged, res);
        last_write = now;
      }
    }
  };

  const long start = merged;
  const long stop = opts.stop_after_blocks >= 0 ? std::min(nblocks, start + opts.stop_after_blocks) : nblocks;
  const int workers = std::max(1, opts.workers);
  if (workers == 1 || stop - start <= 1) {
    for (long b = start; b < stop; ++b) absorb(process(b));
  } else {
    // Workers claim blocks in order; the calling thread merges them strictly
    // by block index so the sums do not depend on scheduling.
    std::mutex mu;
    std::condition_variable cv;
    std::map<long, Block> done;
    long next = start;
    std::exception_ptr failure;
    std::vector<std::thread> pool;
    for (int w = 0; w < workers; ++w) {
      pool.emplace_back([&] {
        for (;;) {
          long b;
          {
            std::lock_guard<std::mutex> lk(mu);
            if (next >= stop || failure) return;
            b = next++;
          }
          try {
            Block blk = process(b);
            std::lock_guard<std::mutex> lk(mu);
            done.emplace(b, std::move(blk));
          } catch (...) {
            std::lock_guard<std::mutex> lk(mu);
            failure = std::current_exception();
          }
          cv.notify_all();
        }
      });
    }
    for (long b = start; b < stop; ++b) {
      Block blk;
      {
        std::unique_lock<std::mutex> lk(mu);
        cv.wait(lk, [&] { return failure || done.count(b) > 0; });
        if (failure) break;
        blk = std::move(done[b]);
        done.erase(b);
      }
      absorb(std::move(blk));
    }
    for (auto& t : pool) t.join();
    if (failure) std::rethrow_exception(failure);
  }

  res.complete = (merged == nblocks);
  if (!opts.checkpoint_path.empty()) {
    if (res.complete) {
      std::error_code ec;
      std::filesystem::remove(opts.checkpoint_path, ec);
    } else {
      write_checkpoint(opts.checkpoint_path, key, merged, res);
    }
  }
  return res;
}

}  // namespace randmeas
