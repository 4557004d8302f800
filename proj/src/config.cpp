#include "randmeas/config.hpp"

#include <openssl/evp.h>

#include <cmath>
#include <fstream>
#include <iomanip>
#include <set>
#include <sstream>

#include "json.hpp"

namespace randmeas {
namespace {

using nlohmann::json;

int line_at_offset(const std::string& text, size_t offset) {
  offset = std::min(offset, text.size());
  return 1 + static_cast<int>(std::count(text.begin(), text.begin() + static_cast<long>(offset), '\n'));
}

// Walks the object keys of `pointer` through the raw text, each search
// starting after the previous hit. Good enough to point at the right line of
// a hand-written file; array indices are skipped.
int approximate_line(const std::string& text, const std::string& pointer) {
  size_t pos = 0;
  size_t found = std::string::npos;
  std::stringstream ss(pointer);
  std::string token;
  while (std::getline(ss, token, '/')) {
    if (token.empty() || std::all_of(token.begin(), token.end(), ::isdigit)) continue;
    const size_t hit = text.find("\"" + token + "\"", pos);
    if (hit == std::string::npos) break;
    found = hit;
    pos = hit + 1;
  }
  return found == std::string::npos ? 1 : line_at_offset(text, found);
}

class Reader {
 public:
  Reader(const std::string& text, std::string source) : text_(text), source_(std::move(source)) {}

  [[noreturn]] void fail(const std::string& pointer, const std::string& what) const {
    throw ConfigError(source_ + ":" + std::to_string(approximate_line(text_, pointer)) + ": " +
                      (pointer.empty() ? "/" : pointer) + ": " + what);
  }

  // Object access with strict key checking.
  class Obj {
   public:
    Obj(const Reader& r, const json& j, std::string ptr) : r_(r), j_(j), ptr_(std::move(ptr)) {
      if (!j_.is_object()) r_.fail(ptr_, "expected an object");
    }
    ~Obj() = default;

    bool has(const std::string& key) {
      seen_.insert(key);
      return j_.contains(key);
    }
    const json& at(const std::string& key) {
      if (!has(key)) r_.fail(ptr_ + "/" + key, "missing required key");
      return j_.at(key);
    }
    std::string path(const std::string& key) const { return ptr_ + "/" + key; }

    double number(const std::string& key) {
      const json& v = at(key);
      if (!v.is_number()) r_.fail(path(key), "expected a number");
      const double d = v.get<double>();
      if (!std::isfinite(d)) r_.fail(path(key), "expected a finite number");
      return d;
    }
    double number_or(const std::string& key, double def) { return has(key) ? number(key) : def; }

    long integer(const std::string& key) {
      const json& v = at(key);
      if (!v.is_number_integer()) r_.fail(path(key), "expected an integer");
      return v.get<long>();
    }
    long integer_or(const std::string& key, long def) { return has(key) ? integer(key) : def; }

    std::uint64_t unsigned64(const std::string& key) {
      const json& v = at(key);
      if (!v.is_number_integer() || (v.is_number_integer() && !v.is_number_unsigned() && v.get<long long>() < 0)) {
        r_.fail(path(key), "expected a nonnegative 64-bit integer");
      }
      return v.get<std::uint64_t>();
    }

    std::string string(const std::string& key) {
      const json& v = at(key);
      if (!v.is_string()) r_.fail(path(key), "expected a string");
      return v.get<std::string>();
    }

    bool boolean_or(const std::string& key, bool def) {
      if (!has(key)) return def;
      const json& v = j_.at(key);
      if (!v.is_boolean()) r_.fail(path(key), "expected true or false");
      return v.get<bool>();
    }

    Complex complex(const std::string& key, Complex def) {
      if (!has(key)) return def;
      const json& v = j_.at(key);
      if (v.is_number()) return {v.get<double>(), 0.0};
      if (v.is_array() && v.size() == 2 && v[0].is_number() && v[1].is_number()) {
        return {v[0].get<double>(), v[1].get<double>()};
      }
      r_.fail(path(key), "expected a number or a [re, im] pair");
    }

    std::vector<double> numbers(const std::string& key) {
      if (!has(key)) return {};
      const json& v = j_.at(key);
      if (!v.is_array()) r_.fail(path(key), "expected an array of numbers");
      std::vector<double> out;
      for (size_t i = 0; i < v.size(); ++i) {
        if (!v[i].is_number()) r_.fail(path(key) + "/" + std::to_string(i), "expected a number");
        out.push_back(v[i].get<double>());
      }
      return out;
    }

    std::vector<int> integers(const std::string& key) {
      if (!has(key)) return {};
      const json& v = j_.at(key);
      if (!v.is_array()) r_.fail(path(key), "expected an array of integers");
      std::vector<int> out;
      for (size_t i = 0; i < v.size(); ++i) {
        if (!v[i].is_number_integer()) r_.fail(path(key) + "/" + std::to_string(i), "expected an integer");
        out.push_back(v[i].get<int>());
      }
      return out;
    }

    std::optional<std::pair<double, double>> window(const std::string& key) {
      if (!has(key)) return std::nullopt;
      const auto v = numbers(key);
      if (v.size() != 2 || !(v[0] > 0.0 && v[1] > v[0])) r_.fail(path(key), "expected [m_lo, m_hi] with 0 < m_lo < m_hi");
      return std::make_pair(v[0], v[1]);
    }

    Obj child(const std::string& key) { return Obj(r_, at(key), path(key)); }

    /// Call after all reads: rejects keys nobody asked for.
    void finish() const {
      for (const auto& item : j_.items()) {
        if (!seen_.count(item.key())) r_.fail(ptr_ + "/" + item.key(), "unknown key");
      }
    }

   private:
    const Reader& r_;
    const json& j_;
    std::string ptr_;
    std::set<std::string> seen_;
  };

 private:
  const std::string& text_;
  std::string source_;
};

IntervalLaw::Params read_law(Reader::Obj& o, const Reader& r, const std::string& ptr) {
  const std::string kind = o.string("kind");
  IntervalLaw::Params p;
  if (kind == "discrete_exponential") {
    p = DiscreteExponential{o.number("r")};
  } else if (kind == "discrete_power_law") {
    p = DiscretePowerLaw{o.number("s")};
  } else if (kind == "discrete_delta") {
    p = DiscreteDelta{o.integer("tau0")};
  } else if (kind == "poisson") {
    p = Poisson{o.number("lambda")};
  } else if (kind == "exponential") {
    p = ContinuousExponential{o.number("r")};
  } else if (kind == "power_law") {
    p = ContinuousPowerLaw{o.number("alpha"), o.number_or("tau_ch", 1.0)};
  } else if (kind == "delta") {
    p = ContinuousDelta{o.number("tau0")};
  } else if (kind == "half_normal") {
    p = HalfNormal{o.number_or("tau_hn", 0.0), o.number("sigma")};
  } else {
    r.fail(ptr + "/kind", "unknown law kind '" + kind + "'");
  }
  o.finish();
  try {
    IntervalLaw law(p);
  } catch (const DomainError& e) {
    r.fail(ptr, e.what());
  }
  return p;
}

json law_to_json(const IntervalLaw::Params& params) {
  json j;
  j["kind"] = law_kind(params);
  std::visit(
      [&](const auto& p) {
        using T = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<T, DiscreteExponential> || std::is_same_v<T, ContinuousExponential>) {
          j["r"] = p.r;
        } else if constexpr (std::is_same_v<T, DiscretePowerLaw>) {
          j["s"] = p.s;
        } else if constexpr (std::is_same_v<T, DiscreteDelta> || std::is_same_v<T, ContinuousDelta>) {
          j["tau0"] = p.tau0;
        } else if constexpr (std::is_same_v<T, Poisson>) {
          j["lambda"] = p.lambda;
        } else if constexpr (std::is_same_v<T, ContinuousPowerLaw>) {
          j["alpha"] = p.alpha;
          j["tau_ch"] = p.tau_ch;
        } else {
          j["tau_hn"] = p.tau_hn;
          j["sigma"] = p.sigma;
        }
      },
      params);
  return j;
}

json complex_to_json(Complex z) { return json::array({z.real(), z.imag()}); }

}  // namespace

Model RunConfig::build_model(std::optional<int> n_override) const {
  try {
    if (qrw) {
      const int n = n_override.value_or(qrw->n);
      return QrwModel{n, qrw::CoinAngle(qrw->theta), qrw::SpinorInit(qrw->a, qrw->b, qrw->n0)};
    }
    if (tbm) {
      const int n = n_override.value_or(tbm->n);
      return TbmModel{tbm::TbmParams(n, tbm->gamma), tbm->n0};
    }
  } catch (const DomainError& e) {
    throw ConfigError(std::string("model: ") + e.what());
  }
  throw ConfigError("config has no model section");
}

IntervalLaw RunConfig::build_law() const {
  if (!law) throw ConfigError("config has no law section");
  try {
    return IntervalLaw(*law);
  } catch (const DomainError& e) {
    throw ConfigError(std::string("law: ") + e.what());
  }
}

int RunConfig::lattice_size() const {
  if (qrw) return qrw->n;
  if (tbm) return tbm->n;
  throw ConfigError("config has no model section");
}

RunConfig parse_config(const std::string& text, const std::string& source) {
  json root;
  try {
    root = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(source + ":" + std::to_string(line_at_offset(text, e.byte == 0 ? 0 : e.byte - 1)) +
                      ": malformed JSON: " + e.what());
  }
  const Reader reader(text, source);
  Reader::Obj top(reader, root, "");
  RunConfig cfg;

  if (top.has("model")) {
    Reader::Obj m = top.child("model");
    const std::string kind = m.string("kind");
    if (kind == "qrw") {
      QrwModelConfig q;
      q.n = static_cast<int>(m.integer("N"));
      const bool rad = m.has("theta");
      const bool deg = m.has("theta_deg");
      if (rad == deg) reader.fail("/model/theta", "give exactly one of theta (radians) or theta_deg");
      q.theta = rad ? m.number("theta") : m.number("theta_deg") * kPi / 180.0;
      q.a = m.complex("a", {1.0, 0.0});
      q.b = m.complex("b", {0.0, 0.0});
      q.n0 = static_cast<int>(m.integer_or("n0", 0));
      m.finish();
      if (q.n < 2) reader.fail("/model/N", "N must be >= 2");
      if (!(q.theta >= 0.0 && q.theta <= kPi)) reader.fail("/model/theta", "theta must lie in [0, pi]");
      if (q.n0 < 0 || q.n0 >= q.n) reader.fail("/model/n0", "n0 must lie in [0, N)");
      if (std::norm(q.a) + std::norm(q.b) == 0.0) reader.fail("/model/a", "a and b must not both vanish");
      cfg.qrw = q;
    } else if (kind == "tbm") {
      TbmModelConfig t;
      t.n = static_cast<int>(m.integer("N"));
      t.gamma = m.number_or("gamma", 1.0);
      t.n0 = static_cast<int>(m.integer_or("n0", 0));
      m.finish();
      if (t.n < 2) reader.fail("/model/N", "N must be >= 2");
      if (!(t.gamma > 0.0)) reader.fail("/model/gamma", "gamma must be positive");
      if (t.n0 < 0 || t.n0 >= t.n) reader.fail("/model/n0", "n0 must lie in [0, N)");
      cfg.tbm = t;
    } else {
      reader.fail("/model/kind", "unknown model kind '" + kind + "' (expected 'qrw' or 'tbm')");
    }
  }
  if (top.has("scheme")) {
    try {
      cfg.scheme = parse_scheme(top.string("scheme"));
    } catch (const ConfigError& e) {
      reader.fail("/scheme", e.what());
    }
  }
  if (top.has("law")) {
    Reader::Obj l = top.child("law");
    cfg.law = read_law(l, reader, "/law");
  }
  cfg.m_max = top.integer_or("m_max", 0);
  if (cfg.m_max < 0) reader.fail("/m_max", "m_max must be >= 0");
  cfg.realizations = top.integer_or("realizations", 1);
  if (cfg.realizations < 1) reader.fail("/realizations", "realizations must be >= 1");
  if (top.has("master_seed")) cfg.master_seed = top.unsigned64("master_seed");
  if (top.has("output_dir")) cfg.output_dir = top.string("output_dir");
  cfg.keep_traces = static_cast<int>(top.integer_or("keep_traces", 5));
  if (cfg.keep_traces < 0) reader.fail("/keep_traces", "keep_traces must be >= 0");
  cfg.checkpoint_interval_s = top.number_or("checkpoint_interval_s", 60.0);
  if (cfg.checkpoint_interval_s < 0) reader.fail("/checkpoint_interval_s", "must be >= 0");

  if (top.has("propagate")) {
    Reader::Obj p = top.child("propagate");
    PropagateConfig pc;
    pc.t = p.number("t");
    pc.ode_step = p.number_or("ode_step", 1e-4);
    p.finish();
    if (pc.t < 0) reader.fail("/propagate/t", "t must be >= 0");
    if (!(pc.ode_step > 0)) reader.fail("/propagate/ode_step", "ode_step must be positive");
    if (cfg.qrw && pc.t != std::floor(pc.t)) reader.fail("/propagate/t", "the walk needs an integer t");
    cfg.propagate = pc;
  }
  if (top.has("analysis")) {
    Reader::Obj a = top.child("analysis");
    AnalysisConfig ac;
    ac.sizes = a.integers("sizes");
    ac.early_window = a.window("early_window");
    ac.intermediate_window = a.window("intermediate_window");
    ac.m2 = a.boolean_or("m2", false);
    ac.collapse = a.boolean_or("collapse", true);
    a.finish();
    for (size_t i = 0; i < ac.sizes.size(); ++i) {
      if (ac.sizes[i] < 2) reader.fail("/analysis/sizes/" + std::to_string(i), "lattice sizes must be >= 2");
    }
    cfg.analysis = ac;
  }
  if (top.has("rate_function")) {
    Reader::Obj rf = top.child("rate_function");
    RateFunctionConfig rc;
    rc.taus = rf.numbers("taus");
    rc.probs = rf.numbers("probs");
    rc.q_values = rf.numbers("q_values");
    rc.points = static_cast<int>(rf.integer_or("points", 101));
    rc.m = rf.integer_or("m", 100);
    rf.finish();
    if (rc.taus.empty() || rc.taus.size() != rc.probs.size()) {
      reader.fail("/rate_function/taus", "taus and probs must be nonempty and of equal length");
    }
    if (!rc.q_values.empty() && rc.q_values.size() != rc.taus.size()) {
      reader.fail("/rate_function/q_values", "q_values must match taus in length");
    }
    if (rc.points < 2) reader.fail("/rate_function/points", "points must be >= 2");
    cfg.rate_function = rc;
  }
  if (top.has("synthetic")) {
    Reader::Obj s = top.child("synthetic");
    SyntheticConfig sc;
    sc.exponent = s.number_or("exponent", sc.exponent);
    sc.m1 = s.number_or("m1", sc.m1);
    sc.oscillation = s.number_or("oscillation", sc.oscillation);
    if (s.has("sizes")) sc.sizes = s.integers("sizes");
    sc.m2_constant = s.number_or("m2_constant", sc.m2_constant);
    sc.m_max = s.integer_or("m_max", 0);
    s.finish();
    if (!(sc.m1 > 4.0)) reader.fail("/synthetic/m1", "m1 must exceed 4");
    if (sc.oscillation < 0.0 || sc.oscillation >= 1.0) reader.fail("/synthetic/oscillation", "must lie in [0, 1)");
    if (sc.sizes.size() < 2) reader.fail("/synthetic/sizes", "need at least two sizes");
    cfg.synthetic = sc;
  }
  top.finish();

  if (cfg.qrw && cfg.tbm) reader.fail("/model", "only one model may be given");
  if ((cfg.qrw || cfg.tbm) && cfg.law) {
    try {
      check_compatible(cfg.build_model(), cfg.build_law());
    } catch (const ConfigError& e) {
      reader.fail("/law", e.what());
    }
  }
  return cfg;
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(path + ": cannot open config file");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), path);
}

std::string dump_config(const RunConfig& cfg) {
  json j = json::object();
  if (cfg.qrw) {
    j["model"] = {{"kind", "qrw"},          {"N", cfg.qrw->n},
                  {"theta", cfg.qrw->theta}, {"a", complex_to_json(cfg.qrw->a)},
                  {"b", complex_to_json(cfg.qrw->b)}, {"n0", cfg.qrw->n0}};
  } else if (cfg.tbm) {
    j["model"] = {{"kind", "tbm"}, {"N", cfg.tbm->n}, {"gamma", cfg.tbm->gamma}, {"n0", cfg.tbm->n0}};
  }
  j["scheme"] = scheme_name(cfg.scheme);
  if (cfg.law) j["law"] = law_to_json(*cfg.law);
  j["m_max"] = cfg.m_max;
  j["realizations"] = cfg.realizations;
  j["master_seed"] = cfg.master_seed;
  j["output_dir"] = cfg.output_dir;
  j["keep_traces"] = cfg.keep_traces;
  j["checkpoint_interval_s"] = cfg.checkpoint_interval_s;
  if (cfg.propagate) j["propagate"] = {{"t", cfg.propagate->t}, {"ode_step", cfg.propagate->ode_step}};
  if (cfg.analysis) {
    json a = {{"sizes", cfg.analysis->sizes}, {"m2", cfg.analysis->m2}, {"collapse", cfg.analysis->collapse}};
    if (cfg.analysis->early_window) {
      a["early_window"] = {cfg.analysis->early_window->first, cfg.analysis->early_window->second};
    }
    if (cfg.analysis->intermediate_window) {
      a["intermediate_window"] = {cfg.analysis->intermediate_window->first, cfg.analysis->intermediate_window->second};
    }
    j["analysis"] = a;
  }
  if (cfg.rate_function) {
    const auto& r = *cfg.rate_function;
    j["rate_function"] = {{"taus", r.taus}, {"probs", r.probs}, {"points", r.points}, {"m", r.m}};
    if (!r.q_values.empty()) j["rate_function"]["q_values"] = r.q_values;
  }
  if (cfg.synthetic) {
    const auto& s = *cfg.synthetic;
    j["synthetic"] = {{"exponent", s.exponent},   {"m1", s.m1},
                      {"oscillation", s.oscillation}, {"sizes", s.sizes},
                      {"m2_constant", s.m2_constant}, {"m_max", s.m_max}};
  }
  return j.dump(2) + "\n";
}

std::string sha256_hex(const std::string& bytes) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), digest, &len, EVP_sha256(), nullptr) != 1) {
    throw std::runtime_error("sha256: digest failed");
  }
  std::ostringstream os;
  for (unsigned int i = 0; i < len; ++i) os << std::hex << std::setw(2) << std::setfill('0') << int(digest[i]);
  return os.str();
}

std::string sha256_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return sha256_hex(ss.str());
}

std::string config_hash(const RunConfig& cfg) { return sha256_hex(dump_config(cfg)); }

}  // namespace randmeas
