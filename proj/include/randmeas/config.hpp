#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "randmeas/engine.hpp"

namespace randmeas {

struct QrwModelConfig {
  int n = 0;
  double theta = 0.0;  // radians; "theta_deg" is accepted on input
  Complex a{1.0, 0.0};
  Complex b{0.0, 0.0};
  int n0 = 0;

  bool operator==(const QrwModelConfig&) const = default;
};

struct TbmModelConfig {
  int n = 0;
  double gamma = 1.0;
  int n0 = 0;

  bool operator==(const TbmModelConfig&) const = default;
};

struct PropagateConfig {
  double t = 0.0;
  double ode_step = 1e-4;  // step of the reference integrator (hopping chain)

  bool operator==(const PropagateConfig&) const = default;
};

struct AnalysisConfig {
  std::vector<int> sizes;  // lattice-size family for scans
  std::optional<std::pair<double, double>> early_window;
  std::optional<std::pair<double, double>> intermediate_window;
  bool m2 = false;  // also locate the exponential onset and fit delta
  bool collapse = true;

  bool operator==(const AnalysisConfig&) const = default;
};

struct RateFunctionConfig {
  std::vector<double> taus;
  std::vector<double> probs;
  std::vector<double> q_values;  // optional; computed from the model when empty
  int points = 101;
  long m = 100;  // for the typical value

  bool operator==(const RateFunctionConfig&) const = default;
};

struct SyntheticConfig {
  double exponent = -1.5;
  double m1 = 75.0;
  double oscillation = 0.0;  // relative amplitude of a period-2 wiggle
  std::vector<int> sizes{16, 24, 32};
  double m2_constant = 1.4;  // m2 = m2_constant * N^3
  long m_max = 0;            // 0: derived from the planted scales

  bool operator==(const SyntheticConfig&) const = default;
};

struct RunConfig {
  std::optional<QrwModelConfig> qrw;
  std::optional<TbmModelConfig> tbm;
  Scheme scheme = Scheme::Projected;
  std::optional<IntervalLaw::Params> law;
  long m_max = 0;
  long realizations = 1;
  std::uint64_t master_seed = 0;
  std::string output_dir = "out";
  int keep_traces = 5;
  double checkpoint_interval_s = 60.0;
  std::optional<PropagateConfig> propagate;
  std::optional<AnalysisConfig> analysis;
  std::optional<RateFunctionConfig> rate_function;
  std::optional<SyntheticConfig> synthetic;

  /// Model with the lattice size optionally replaced (for family scans).
  Model build_model(std::optional<int> n_override = std::nullopt) const;
  IntervalLaw build_law() const;
  int lattice_size() const;

  bool operator==(const RunConfig&) const = default;
};

/// Parses JSON text. Throws ConfigError whose message starts with
/// "<source>:<line>:" and names the offending JSON pointer.
RunConfig parse_config(const std::string& text, const std::string& source = "<config>");
RunConfig load_config(const std::string& path);

/// Canonical JSON serialization (stable key order, full precision).
std::string dump_config(const RunConfig& cfg);

/// Hex SHA-256 of the canonical serialization.
std::string config_hash(const RunConfig& cfg);

std::string sha256_hex(const std::string& bytes);
std::string sha256_file(const std::string& path);

}  // namespace randmeas
