#pragma once

// INI experiment plans: [model] [discretization] [observable] [experiment]
// [output]. Keys are lowercase snake_case; '#' and ';' start comments.

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "qspec/limit_theorems.hpp"

namespace qspec {

enum class ExperimentKind { density, lambda, variance, ldp, clt, lclt, aperiodicity, validate };

[[nodiscard]] std::string to_string(ExperimentKind kind);
/// Throws InvalidArgument.
[[nodiscard]] ExperimentKind parse_kind(const std::string& s);
[[nodiscard]] const std::vector<ExperimentKind>& all_kinds();

struct ModelConfig {
  /// Map specs: "doubling", "tripling", "k_fold:<k>", "affine: a,b,s,c; ...".
  std::vector<std::string> maps{"doubling"};
  std::string driving = "bernoulli";    // bernoulli | rotation
  std::vector<double> probabilities;    // empty: uniform
  std::optional<double> alpha;          // rotation; default golden conjugate
  std::vector<double> boundaries;       // rotation cells; empty: equal cells
  double start_point = 0.0;
  std::optional<std::uint64_t> seed;
};

struct ObservableConfig {
  std::string kind = "cosine";  // cosine | indicator | table | zero
  std::vector<CosineTerm> terms{{1, 1.0}};
  double threshold = 0.5;
  double amplitude = 1.0;
  double offset = 0.0;
  std::vector<std::vector<double>> table;
  bool centered = true;
};

struct ExperimentConfig {
  ExperimentKind kind = ExperimentKind::lambda;
  // spectral
  Axis axis = Axis::real;
  std::vector<double> thetas;  // default linspace(-0.3, 0.3, 41)
  double h = 1e-2;
  std::size_t n_orbit = 20000;
  std::size_t n_burn = 256;
  std::int64_t t_end = 0;
  std::int64_t t = 0;           // density fiber
  double theta = 0.0;           // density twist (real)
  std::size_t j_max = 64;
  std::size_t variance_orbit = 2000;
  bool compare_curve = false;
  std::optional<double> expect_sigma2;
  // Monte Carlo
  std::int64_t t0 = 0;
  std::vector<double> epsilons{0.05, 0.1};
  double theta_plus = 0.0;
  std::vector<std::size_t> ns{200, 400};
  std::size_t n = 2000;
  std::size_t count = 100000;
  StartLaw start_law = StartLaw::mu_omega;
  std::optional<double> sigma2;
  Interval J{-0.25, 0.25};
  std::size_t s_points = 25;
  double s_span = 3.0;          // s grid spans +-s_span * sqrt(n sigma2)
  std::vector<double> s_grid;   // explicit grid overrides s_points/s_span
  std::string periodic = "auto";  // auto | true | false
  // aperiodicity
  std::vector<double> t_grid;   // default linspace(0.5, pi, 20)
  std::string expect;           // expected classification, empty: none
  // validate
  std::size_t horizon = 64;
  int k_max = 10;
  int mesh_log2 = 6;
  /// Overrides of the per-kind check tolerances, keyed without "tol_".
  std::map<std::string, double> tolerances;
};

struct OutputConfig {
  std::string dir = "out";
  bool plot = false;
  bool dump_matrices = false;
  unsigned workers = 1;
};

struct ExperimentPlan {
  ModelConfig model;
  std::size_t n_cells = 4096;
  ObservableConfig observable;
  ExperimentConfig experiment;
  OutputConfig output;
  /// Unknown keys tolerated in lenient mode.
  std::vector<std::string> warnings;

  [[nodiscard]] std::uint64_t seed() const;
};

/// Default tolerances of the checks run for `kind`.
[[nodiscard]] std::map<std::string, double> default_tolerances(ExperimentKind kind);

/// Throws ParseError (with line), UnknownKey (strict mode), MissingRequired(seed).
/// `kind` supplies the experiment kind when the text has none; a different
/// kind in the text is a ParseError.
[[nodiscard]] ExperimentPlan parse_config(std::string_view text, bool strict = true,
                                          std::optional<ExperimentKind> kind = std::nullopt);

/// Canonical INI text; parse_config(serialize(p)) reproduces p.
[[nodiscard]] std::string serialize(const ExperimentPlan& plan);

/// "linspace(a, b, n)" or a comma list; entries may be "pi" or "<x>*pi".
/// Throws InvalidArgument.
[[nodiscard]] std::vector<double> parse_grid(std::string_view text);

/// Builds the model objects named by a plan. Throws module errors.
[[nodiscard]] MapFamily build_family(const ModelConfig& model);
[[nodiscard]] DrivingSystem build_driving(const ModelConfig& model, std::size_t n_maps);
[[nodiscard]] Observable build_observable(const ObservableConfig& cfg);

}  // namespace qspec
