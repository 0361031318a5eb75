#include "qspec/runner.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>

#include "json.hpp"
#include "qspec/plot.hpp"
#include "qspec/rng.hpp"
#include "qspec/util.hpp"

namespace qspec {

namespace {

// Centering must cover every fiber a pull-back or forward push can reach.
constexpr std::int64_t kMargin = (std::int64_t{1} << 14) + 64;

class CsvWriter {
 public:
  explicit CsvWriter(const std::vector<std::string>& header) {
    for (std::size_t i = 0; i < header.size(); ++i) os_ << (i ? "," : "") << header[i];
    os_ << '\n';
  }
  template <class... Ts>
  void row(const Ts&... cells) {
    bool first = true;
    ((os_ << (first ? "" : ",") << cell(cells), first = false), ...);
    os_ << '\n';
  }
  [[nodiscard]] std::string str() const { return os_.str(); }

 private:
  static std::string cell(double v) { return format_double(v); }
  static std::string cell(std::size_t v) { return std::to_string(v); }
  static std::string cell(std::int64_t v) { return std::to_string(v); }
  static std::string cell(int v) { return std::to_string(v); }
  static std::string cell(bool v) { return v ? "1" : "0"; }
  static std::string cell(const std::string& v) { return v; }
  static std::string cell(const char* v) { return v; }
  std::ostringstream os_;
};

class Runner {
 public:
  explicit Runner(const ExperimentPlan& plan)
      : plan_(plan),
        e_(plan.experiment),
        family_(build_family(plan.model)),
        driving_(build_driving(plan.model, family_.size())),
        raw_(family_, driving_, build_observable(plan.observable), plan.n_cells),
        tolerances_(default_tolerances(plan.experiment.kind)) {
    for (const auto& [k, v] : e_.tolerances) tolerances_[k] = v;
  }

  void execute(RunOutput& out) {
    summary_ = &out.summary;
    switch (e_.kind) {
      case ExperimentKind::density:
        out.csv = density();
        break;
      case ExperimentKind::lambda:
        out.csv = lambda();
        break;
      case ExperimentKind::variance:
        out.csv = variance_run();
        break;
      case ExperimentKind::ldp:
        out.csv = ldp();
        break;
      case ExperimentKind::clt:
        out.csv = clt();
        break;
      case ExperimentKind::lclt:
        out.csv = lclt();
        break;
      case ExperimentKind::aperiodicity:
        out.csv = aperiodicity();
        break;
      case ExperimentKind::validate:
        out.csv = validate();
        break;
    }
  }

 private:
  const ExperimentPlan& plan_;
  const ExperimentConfig& e_;
  MapFamily family_;
  DrivingSystem driving_;
  TwistedCocycle raw_;
  std::map<std::string, double> tolerances_;
  RunSummary* summary_ = nullptr;

  [[nodiscard]] unsigned workers() const { return plan_.output.workers; }

  [[nodiscard]] TwistedCocycle centered(std::int64_t lo, std::int64_t hi) const {
    if (!plan_.observable.centered) return raw_;
    return raw_.with_observable(center_observable(raw_, {lo - kMargin, hi + kMargin}));
  }

  void check_le(const std::string& name, double value, const std::string& detail = {}) {
    const double tol = tolerances_.at(name);
    summary_->checks.push_back({name, value, tol, value <= tol, detail});
  }

  void metric(const std::string& name, double value) { summary_->metrics.emplace_back(name, value); }

  [[nodiscard]] std::int64_t curve_start() const {
    return e_.t_end - static_cast<std::int64_t>(e_.n_orbit + e_.n_burn);
  }

  [[nodiscard]] CurveParams curve_params() const {
    return CurveParams{e_.n_orbit, e_.n_burn, e_.h, workers(), e_.t_end};
  }

  std::string density() {
    const auto c = centered(e_.t, e_.t + 1);
    const Complex theta = e_.axis == Axis::real ? Complex(e_.theta, 0.0) : Complex(0.0, e_.theta);
    const auto data = equivariant_density(c, e_.t, theta);
    const auto phi = dual_functional(c, e_.t, theta, data.v);
    CsvWriter csv(csv_schema(ExperimentKind::density));
    for (std::size_t i = 0; i < data.v.size(); ++i) {
      csv.row(i, GridFunction::midpoint(data.v.size(), i), data.v[i].real(), data.v[i].imag(), phi[i].real(),
              phi[i].imag());
    }
    metric("lambda_re", data.lambda.real());
    metric("lambda_im", data.lambda.imag());
    metric("burn_in_used", static_cast<double>(data.burn_in_used));
    metric("min_cell", data.min_cell);
    check_le("residual", data.residual);
    check_le("mass", std::abs(data.v.integral() - 1.0));
    return csv.str();
  }

  std::string lambda() {
    const auto c = centered(curve_start(), e_.t_end);
    const auto curve = lambda_curve(c, e_.axis, e_.thetas, curve_params());
    CsvWriter csv(csv_schema(ExperimentKind::lambda));
    for (std::size_t i = 0; i < curve.thetas.size(); ++i) csv.row(curve.thetas[i], curve.values[i]);
    metric("lambda_at_0", curve.value_at_0);
    metric("d1_at_0", curve.d1_at_0);
    metric("d2_at_0", curve.d2_at_0);
    check_le("lambda0", std::abs(curve.value_at_0));
    if (e_.axis == Axis::real) {
      check_le("convexity", static_cast<double>(curve.convexity_violations), "chord test violations");
      if (plan_.observable.centered) check_le("d1", std::abs(curve.d1_at_0), "|Lambda'(0)| by Richardson");
      if (e_.expect_sigma2) {
        check_le("d2", std::abs(curve.d2_at_0 - *e_.expect_sigma2) / *e_.expect_sigma2,
                 "relative error of Lambda''(0) against expect_sigma2");
      }
    }
    return csv.str();
  }

  VarianceEstimate series(const TwistedCocycle& c) const {
    return variance(c, VarianceParams{e_.j_max, e_.variance_orbit, e_.t0});
  }

  [[nodiscard]] std::int64_t variance_end() const {
    return e_.t0 + static_cast<std::int64_t>(e_.variance_orbit + e_.j_max + 1);
  }

  std::string variance_run() {
    std::int64_t lo = e_.t0, hi = variance_end();
    if (e_.compare_curve) {
      lo = std::min(lo, curve_start());
      hi = std::max(hi, e_.t_end);
    }
    const auto c = centered(lo, hi);
    if (!c.observable().centered()) throw InvalidArgument("variance needs observable.centered = true");
    auto est = series(c);
    CsvWriter csv(csv_schema(ExperimentKind::variance));
    for (std::size_t j = 0; j < est.terms.size(); ++j) csv.row(j, est.terms[j]);
    for (const auto& w : est.warnings) summary_->warnings.push_back(w);
    metric("sigma2_series", est.sigma2_series);
    metric("decay_rate", est.decay_rate);
    metric("truncation_j", static_cast<double>(est.truncation_j));
    if (e_.expect_sigma2) check_le("sigma2", std::abs(est.sigma2_series - *e_.expect_sigma2), "|series - expect_sigma2|");
    if (e_.compare_curve) {
      const auto curve = lambda_curve(c, Axis::real, {0.0}, curve_params());
      metric("sigma2_curve", curve.d2_at_0);
      const double denom = std::max(std::abs(est.sigma2_series), 1e-300);
      check_le("curve", std::abs(curve.d2_at_0 - est.sigma2_series) / denom, "relative series/curve disagreement");
    }
    return csv.str();
  }

  double resolve_sigma2(const TwistedCocycle& c) {
    if (e_.sigma2) return *e_.sigma2;
    const auto est = series(c);
    for (const auto& w : est.warnings) summary_->warnings.push_back(w);
    metric("sigma2_series", est.sigma2_series);
    return est.sigma2_series;
  }

  SampleBatch batch(const TwistedCocycle& c, std::size_t n, std::uint64_t tag) const {
    return birkhoff_samples(c, SampleParams{e_.t0, n, e_.count, sample_seed(plan_.seed(), tag), e_.start_law, workers()});
  }

  std::string ldp() {
    std::size_t n_max = 0;
    for (auto n : e_.ns) n_max = std::max(n_max, n);
    const auto c = centered(std::min(curve_start(), e_.t0), std::max(e_.t_end, e_.t0 + static_cast<std::int64_t>(n_max)));
    const auto curve = lambda_curve(c, Axis::real, e_.thetas, curve_params());
    const auto rate = legendre_rate(curve, e_.epsilons, e_.theta_plus);
    for (const auto& w : rate.warnings) summary_->warnings.push_back(w);
    std::vector<SampleBatch> batches;
    for (auto n : e_.ns) batches.push_back(batch(c, n, n));
    const auto rep = ldp_experiment(batches, rate, &curve);
    CsvWriter csv(csv_schema(ExperimentKind::ldp));
    double worst = 0.0;
    for (const auto& r : rep.rows) {
      csv.row(r.epsilon, r.n, r.p_hat, r.rate_hat, r.c_eps, r.rel_gap, r.low_stat);
      worst = std::max(worst, r.low_stat ? std::numeric_limits<double>::infinity() : r.rel_gap);
      metric("rate_prefactor_corrected[eps=" + format_double(r.epsilon) + ",n=" + std::to_string(r.n) + "]",
             r.rate_prefactor_corrected);
      if (r.low_stat) {
        summary_->warnings.push_back("low_stat: p_hat*count < 50 at eps=" + format_double(r.epsilon) +
                                     ", n=" + std::to_string(r.n));
      }
    }
    std::size_t bad_trends = 0;
    for (const auto& t : rep.trends) bad_trends += t.gap_shrinks ? 0 : 1;
    metric("epsilon0", rate.epsilon0);
    check_le("ldp_gap", worst, "max relative gap |rate_hat - c| / c");
    check_le("ldp_trend", static_cast<double>(bad_trends), "epsilons whose gap grows with n");
    return csv.str();
  }

  std::string clt() {
    const auto c = centered(e_.t0, std::max(e_.t0 + static_cast<std::int64_t>(e_.n), variance_end()));
    const double sigma2 = resolve_sigma2(c);
    const auto b = batch(c, e_.n, 0);
    const auto r = clt_experiment(b, sigma2);
    CsvWriter csv(csv_schema(ExperimentKind::clt));
    csv.row(r.n, r.count, r.ks, r.var_emp, r.sigma2);
    check_le("ks", r.ks, "Kolmogorov-Smirnov distance to N(0, sigma2)");
    check_le("var", std::abs(r.var_emp - sigma2) / sigma2, "relative error of mean S_n^2 / n");
    return csv.str();
  }

  std::string lclt() {
    const auto c = centered(e_.t0, std::max(e_.t0 + static_cast<std::int64_t>(e_.n), variance_end()));
    const double sigma2 = resolve_sigma2(c);
    if (!(sigma2 > 0.0)) throw DegenerateVariance("LCLT refused: sigma2 = " + format_double(sigma2));
    std::optional<LatticeInfo> lattice;
    if (e_.periodic != "false") {
      const std::size_t n_sym = std::max({c.observable().symbol_count(), driving_.num_symbols(), std::size_t{1}});
      lattice = lattice_detect(c.observable(), n_sym, plan_.n_cells);
      if (lattice && lattice->span == 0.0) lattice.reset();
      if (!lattice && e_.periodic == "true") throw NoLattice("periodic = true but the observable has no lattice form");
    }
    std::vector<double> s = e_.s_grid;
    if (s.empty()) {
      const double half = e_.s_span * std::sqrt(static_cast<double>(e_.n) * sigma2);
      s = parse_grid("linspace(" + format_double(-half) + ", " + format_double(half) + ", " +
                     std::to_string(e_.s_points) + ")");
    }
    const auto b = batch(c, e_.n, 0);
    LcltReport rep;
    if (lattice) {
      const double eta = eta_bar(*lattice, c, e_.t0, e_.n);
      rep = lclt_periodic_experiment(b, sigma2, e_.J, s, eta, lattice->span);
      metric("eta_bar_n", eta);
      metric("lattice_span", lattice->span);
    } else {
      rep = lclt_experiment(b, sigma2, e_.J, s);
      summary_->warnings.push_back("aperiodic LCLT target used without an aperiodicity scan in this run");
    }
    CsvWriter csv(csv_schema(ExperimentKind::lclt));
    for (std::size_t i = 0; i < rep.s_grid.size(); ++i) {
      csv.row(rep.s_grid[i], rep.statistic[i], rep.target[i], std::abs(rep.statistic[i] - rep.target[i]));
    }
    metric("mass_ratio", rep.mass_ratio);
    check_le("lclt", rep.sup_error, "sup over s of |statistic - target|");
    if (rep.periodic) check_le("off_lattice", rep.off_lattice_mass, "fraction of sums off eta_bar + span Z");
    return csv.str();
  }

  std::string aperiodicity() {
    const auto c = centered(curve_start() - 64, e_.t_end);
    ScanParams sp;
    sp.n_orbit = e_.n_orbit;
    sp.n_burn = e_.n_burn;
    sp.t_end = e_.t_end;
    sp.workers = workers();
    sp.lattice_cells = plan_.n_cells;
    sp.seed = sample_seed(plan_.seed(), 0xa9e);
    const auto rep = aperiodicity_scan(c, e_.t_grid, sp);
    CsvWriter csv(csv_schema(ExperimentKind::aperiodicity));
    for (std::size_t i = 0; i < rep.t_grid.size(); ++i) csv.row(rep.t_grid[i], rep.lambda_it[i], rep.rho_fit[i]);
    for (const auto& w : rep.warnings) summary_->warnings.push_back(w);
    if (rep.lattice) metric("lattice_span", rep.lattice->span);
    if (rep.lambda_at_lattice) metric("lambda_at_lattice", *rep.lambda_at_lattice);
    summary_->warnings.push_back("classification: " + to_string(rep.classification) +
                                 (rep.degenerate ? " (degenerate)" : ""));
    if (!e_.expect.empty()) {
      const bool ok = to_string(rep.classification) == e_.expect;
      summary_->checks.push_back({"classification", ok ? 0.0 : 1.0, tolerances_.at("classification"), ok,
                                  "got " + to_string(rep.classification) + ", expected " + e_.expect});
    }
    return csv.str();
  }

  std::string validate() {
    const auto rep = validate_family(family_, driving_, ValidateOptions{e_.t0, e_.horizon, e_.mesh_log2, e_.k_max});
    CsvWriter csv(csv_schema(ExperimentKind::validate));
    csv.row("delta", rep.delta);
    csv.row("b_max", rep.b_max);
    csv.row("iterate_n", rep.iterate_n);
    csv.row("min_regularity_length", rep.min_regularity_length);
    csv.row("mesh", rep.mesh);
    csv.row("k_max", rep.k_max);
    csv.row("covering_k", rep.covering_k);
    csv.row("covering_ok", rep.covering_ok);
    csv.row("admissible_evidence", rep.admissible_evidence);
    for (const auto& n : rep.notes) summary_->warnings.push_back(n);
    summary_->checks.push_back({"admissible", rep.admissible_evidence ? 0.0 : 1.0, tolerances_.at("admissible"),
                                rep.admissible_evidence, "admissible_evidence"});
    return csv.str();
  }
};

void write_file(const std::filesystem::path& p, const std::string& text) {
  std::ofstream f(p, std::ios::binary);
  if (!f) throw InvalidArgument("cannot write " + p.string());
  f << text;
}

}  // namespace

bool RunSummary::passed() const noexcept {
  if (!error_code.empty()) return false;
  return std::all_of(checks.begin(), checks.end(), [](const Check& c) { return c.passed; });
}

std::uint64_t sample_seed(std::uint64_t seed, std::uint64_t tag) noexcept {
  return stream_key(seed ^ 0x243f6a8885a308d3ULL, tag);
}

RunOutput execute(const ExperimentPlan& plan) {
  RunOutput out;
  auto& s = out.summary;
  s.kind = plan.experiment.kind;
  s.plan_echo = serialize(plan);
  s.warnings = plan.warnings;
  const auto start = std::chrono::steady_clock::now();
  try {
    s.seed = plan.seed();
    Runner runner(plan);
    runner.execute(out);
  } catch (const Error& e) {
    s.error_code = e.code();
    s.error_message = e.what();
    out.csv.clear();
  } catch (const std::exception& e) {
    s.error_code = "InternalError";
    s.error_message = e.what();
    out.csv.clear();
  }
  s.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return out;
}

RunSummary run(const ExperimentPlan& plan) {
  RunOutput out = execute(plan);
  auto& s = out.summary;
  namespace fs = std::filesystem;
  const fs::path dir(plan.output.dir);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) {
    s.error_code = "InvalidArgument";
    s.error_message = "cannot create output directory " + dir.string() + ": " + ec.message();
    return s;
  }
  const std::string stem = to_string(plan.experiment.kind) + "_" + std::to_string(s.seed);
  try {
    if (!out.csv.empty()) {
      write_file(dir / (stem + ".csv"), out.csv);
      s.artifacts.push_back((dir / (stem + ".csv")).string());
      if (plan.output.plot) {
        const auto k = plan.experiment.kind;
        if (k == ExperimentKind::lambda || k == ExperimentKind::ldp || k == ExperimentKind::lclt) {
          write_file(dir / (stem + ".svg"), emit_plot(out.csv, k));
          s.artifacts.push_back((dir / (stem + ".svg")).string());
        } else {
          s.warnings.push_back("no plot defined for kind " + to_string(k));
        }
      }
    }
    if (plan.output.dump_matrices && s.error_code.empty()) {
      const auto family = build_family(plan.model);
      for (std::size_t k = 0; k < family.size(); ++k) {
        std::ostringstream os;
        write_ulam_dump(os, build_ulam(family[k], plan.n_cells), k);
        const auto p = dir / ("ulam_" + std::to_string(s.seed) + "_map" + std::to_string(k) + ".txt");
        write_file(p, os.str());
        s.artifacts.push_back(p.string());
      }
    }
  } catch (const Error& e) {
    s.error_code = e.code();
    s.error_message = e.what();
  }
  s.artifacts.push_back((dir / (stem + ".json")).string());
  write_file(dir / (stem + ".json"), summary_json(s));
  return s;
}

std::string summary_json(const RunSummary& s) {
  nlohmann::ordered_json j;
  j["kind"] = to_string(s.kind);
  j["seed"] = s.seed;
  j["passed"] = s.passed();
  j["wall_seconds"] = s.wall_seconds;
  auto& checks = j["checks"] = nlohmann::ordered_json::array();
  for (const auto& c : s.checks) {
    nlohmann::ordered_json cj;
    cj["name"] = c.name;
    cj["value"] = std::isfinite(c.value) ? nlohmann::ordered_json(c.value) : nlohmann::ordered_json(format_double(c.value));
    cj["tolerance"] = c.tolerance;
    cj["passed"] = c.passed;
    if (!c.detail.empty()) cj["detail"] = c.detail;
    checks.push_back(cj);
  }
  auto& metrics = j["metrics"] = nlohmann::ordered_json::object();
  for (const auto& [k, v] : s.metrics) {
    metrics[k] = std::isfinite(v) ? nlohmann::ordered_json(v) : nlohmann::ordered_json(format_double(v));
  }
  j["artifacts"] = s.artifacts;
  j["warnings"] = s.warnings;
  if (!s.error_code.empty()) {
    j["error"] = {{"code", s.error_code}, {"message", s.error_message}};
  }
  j["plan"] = s.plan_echo;
  return j.dump(2) + "\n";
}

}  // namespace qspec
