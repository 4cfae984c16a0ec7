#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

namespace goalseq {

struct BaselineMode {
  enum class Kind { fixed, running_mean };
  Kind kind = Kind::running_mean;
  double value = 0.0;  // only meaningful for Kind::fixed

  static BaselineMode fixed(double b) { return {Kind::fixed, b}; }
  static BaselineMode running_mean() { return {Kind::running_mean, 0.0}; }
  bool operator==(const BaselineMode&) const = default;
};

/// Exponential anneal tau(s) = start * (end/start)^min(s/steps, 1).
struct TemperatureSchedule {
  double start = 2.0;
  double end = 0.5;
  long anneal_steps = 1000;

  double at(long step) const;
  bool operator==(const TemperatureSchedule&) const = default;
};

struct TrainConfig {
  double lambda_gan = 1.0;
  double alpha_rl = 2.0;
  double gamma = 0.9;
  int rollouts_k = 3;
  BaselineMode baseline_mode = BaselineMode::running_mean();
  double grad_clip = 10.0;
  TemperatureSchedule gumbel_temperature_schedule{};
  std::uint64_t seed = 0;
  double sigma_sample = 0.0;
  double sigma_train = 1.0;

  /// Throws ValidationError naming the first violated bound.
  void validate() const;
  bool operator==(const TrainConfig&) const = default;
};

/// Flat `key = value` text; keys are exactly the TrainConfig field names.
/// `#` starts a comment. Unknown keys are rejected.
///   baseline_mode               = running_mean | fixed:<b>
///   gumbel_temperature_schedule = <start>,<end>,<anneal_steps>
TrainConfig parse_config(const std::string& text);
TrainConfig load_config(const std::filesystem::path& path);
std::string to_string(const TrainConfig& config);

}  // namespace goalseq
