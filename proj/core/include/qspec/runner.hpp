#pragma once

// Executes an experiment plan end to end and writes <kind>_<seed>.csv,
// <kind>_<seed>.json and, on request, an SVG plot and Ulam matrix dumps.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "qspec/config.hpp"

namespace qspec {

struct Check {
  std::string name;
  double value = 0.0;
  double tolerance = 0.0;
  bool passed = false;
  std::string detail;
};

struct RunSummary {
  ExperimentKind kind = ExperimentKind::lambda;
  std::uint64_t seed = 0;
  std::string plan_echo;
  double wall_seconds = 0.0;
  std::vector<Check> checks;
  std::vector<std::string> artifacts;
  std::vector<std::string> warnings;
  std::string error_code;  // empty on success
  std::string error_message;
  /// Kind-specific results copied into the JSON summary.
  std::vector<std::pair<std::string, double>> metrics;

  /// No error and every check passed.
  [[nodiscard]] bool passed() const noexcept;
};

/// CSV text for the run; byte-identical across reruns and worker counts.
struct RunOutput {
  RunSummary summary;
  std::string csv;
};

/// Runs the plan without touching the file system. Module errors are
/// caught and reported in the summary.
[[nodiscard]] RunOutput execute(const ExperimentPlan& plan);

/// execute() plus artifact files in plan.output.dir.
RunSummary run(const ExperimentPlan& plan);

[[nodiscard]] std::string summary_json(const RunSummary& summary);

/// Seed of the Monte-Carlo stream for batch `tag` of a plan seeded with `seed`.
[[nodiscard]] std::uint64_t sample_seed(std::uint64_t seed, std::uint64_t tag) noexcept;

}  // namespace qspec
