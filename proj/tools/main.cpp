// qspec <kind> --config plan.ini [--out DIR] [--workers K] [--seed S] [--strict|--lenient]
// qspec plot --csv FILE --kind KIND --svg FILE
//
// Exit status: 0 when every check passes, 1 when a check fails or a module
// error is reported, 2 on usage or configuration errors.

#include <cmath>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "qspec/plot.hpp"
#include "qspec/runner.hpp"
#include "qspec/util.hpp"

namespace {

std::string read_file(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw qspec::InvalidArgument("cannot read " + path);
  std::ostringstream os;
  os << f.rdbuf();
  return os.str();
}

struct RunFlags {
  std::string config;
  std::string out;
  unsigned workers = 0;
  std::int64_t seed = -1;
  bool strict = true;
};

int run_kind(qspec::ExperimentKind kind, const RunFlags& flags) {
  auto plan = qspec::parse_config(read_file(flags.config), flags.strict, kind);
  if (!flags.out.empty()) plan.output.dir = flags.out;
  if (flags.workers > 0) plan.output.workers = flags.workers;
  if (flags.seed >= 0) plan.model.seed = static_cast<std::uint64_t>(flags.seed);

  const auto summary = qspec::run(plan);
  for (const auto& c : summary.checks) {
    std::cout << (c.passed ? "PASS " : "FAIL ") << c.name << " value=" << qspec::format_double(c.value)
              << " tol=" << qspec::format_double(c.tolerance);
    if (!c.detail.empty()) std::cout << " (" << c.detail << ")";
    std::cout << '\n';
  }
  for (const auto& w : summary.warnings) std::cout << "warning: " << w << '\n';
  if (!summary.error_code.empty()) std::cout << "error: " << summary.error_message << '\n';
  for (const auto& a : summary.artifacts) std::cout << "wrote " << a << '\n';
  std::cout << (summary.passed() ? "OK" : "FAILED") << " " << qspec::to_string(kind) << " in "
            << qspec::format_double(std::round(summary.wall_seconds * 1000.0) / 1000.0) << " s\n";
  return summary.passed() ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"qspec: quenched spectral experiments on random piecewise-linear expanding maps"};
  app.require_subcommand(1);

  RunFlags flags;
  qspec::ExperimentKind chosen = qspec::ExperimentKind::lambda;
  bool plot_mode = false;
  for (auto kind : qspec::all_kinds()) {
    auto* sub = app.add_subcommand(qspec::to_string(kind), "run a " + qspec::to_string(kind) + " experiment");
    sub->add_option("--config", flags.config, "INI experiment plan")->required()->check(CLI::ExistingFile);
    sub->add_option("--out", flags.out, "output directory (overrides [output] dir)");
    sub->add_option("--workers", flags.workers, "worker threads (overrides [output] workers)")->check(CLI::PositiveNumber);
    sub->add_option("--seed", flags.seed, "seed override")->check(CLI::NonNegativeNumber);
    auto* strict = sub->add_flag("--strict", "unknown keys are errors (default)");
    auto* lenient = sub->add_flag_callback("--lenient", [&flags] { flags.strict = false; }, "unknown keys are warnings");
    strict->excludes(lenient);
    sub->callback([&chosen, kind] { chosen = kind; });
  }
  std::string csv_path, svg_path, plot_kind;
  auto* plot = app.add_subcommand("plot", "render an SVG from a CSV artifact");
  plot->add_option("--csv", csv_path, "CSV artifact")->required()->check(CLI::ExistingFile);
  plot->add_option("--kind", plot_kind, "lambda, ldp or lclt")->required();
  plot->add_option("--svg", svg_path, "output SVG path")->required();
  plot->callback([&plot_mode] { plot_mode = true; });

  CLI11_PARSE(app, argc, argv);
  try {
    if (plot_mode) {
      const auto svg = qspec::emit_plot(read_file(csv_path), qspec::parse_kind(plot_kind));
      std::ofstream(svg_path, std::ios::binary) << svg;
      std::cout << "wrote " << svg_path << '\n';
      return 0;
    }
    return run_kind(chosen, flags);
  } catch (const qspec::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
}
