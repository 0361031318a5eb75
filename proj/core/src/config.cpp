#include "qspec/config.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numbers>
#include <sstream>

#include "qspec/util.hpp"

namespace qspec {

namespace {

struct KindName {
  ExperimentKind kind;
  const char* name;
};

constexpr KindName kKinds[] = {
    {ExperimentKind::density, "density"},   {ExperimentKind::lambda, "lambda"},
    {ExperimentKind::variance, "variance"}, {ExperimentKind::ldp, "ldp"},
    {ExperimentKind::clt, "clt"},           {ExperimentKind::lclt, "lclt"},
    {ExperimentKind::aperiodicity, "aperiodicity"}, {ExperimentKind::validate, "validate"},
};

std::string join(const std::vector<double>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) out += ", ";
    out += format_double(v[i]);
  }
  return out;
}

std::string unquote(std::string s) {
  if (s.size() >= 2 && ((s.front() == '"' && s.back() == '"') || (s.front() == '\'' && s.back() == '\''))) {
    return s.substr(1, s.size() - 2);
  }
  return s;
}

bool parse_bool(const std::string& s) {
  if (s == "true" || s == "1" || s == "yes" || s == "on") return true;
  if (s == "false" || s == "0" || s == "no" || s == "off") return false;
  throw InvalidArgument("not a boolean: '" + s + "'");
}

std::size_t parse_count(const std::string& s) {
  const double v = parse_double(s);
  if (!(v >= 0.0) || v != std::floor(v) || v > 9.0e15) throw InvalidArgument("not a non-negative integer: '" + s + "'");
  return static_cast<std::size_t>(v);
}

double parse_scalar(const std::string& raw) {
  std::string s = trim(raw);
  double sign = 1.0;
  if (!s.empty() && s.front() == '-') {
    sign = -1.0;
    s = trim(s.substr(1));
  }
  if (s == "pi") return sign * std::numbers::pi;
  if (s.size() > 3 && s.compare(s.size() - 3, 3, "*pi") == 0) {
    return sign * parse_double(s.substr(0, s.size() - 3)) * std::numbers::pi;
  }
  return sign * parse_double(s);
}

std::vector<double> default_thetas() { return parse_grid("linspace(-0.3, 0.3, 41)"); }
std::vector<double> default_t_grid() { return parse_grid("linspace(0.5, pi, 20)"); }

}  // namespace

std::string to_string(ExperimentKind kind) {
  for (const auto& k : kKinds) {
    if (k.kind == kind) return k.name;
  }
  return "unknown";
}

ExperimentKind parse_kind(const std::string& s) {
  for (const auto& k : kKinds) {
    if (s == k.name) return k.kind;
  }
  throw InvalidArgument("unknown experiment kind '" + s + "'");
}

const std::vector<ExperimentKind>& all_kinds() {
  static const std::vector<ExperimentKind> kinds = [] {
    std::vector<ExperimentKind> v;
    for (const auto& k : kKinds) v.push_back(k.kind);
    return v;
  }();
  return kinds;
}

std::vector<double> parse_grid(std::string_view text) {
  const std::string s = trim(text);
  if (s.rfind("linspace(", 0) == 0) {
    if (s.back() != ')') throw InvalidArgument("unterminated linspace: '" + s + "'");
    const auto args = split(std::string_view(s).substr(9, s.size() - 10), ',');
    if (args.size() != 3) throw InvalidArgument("linspace needs (start, stop, count)");
    const double a = parse_scalar(args[0]);
    const double b = parse_scalar(args[1]);
    const std::size_t n = parse_count(args[2]);
    if (n == 0) throw InvalidArgument("linspace count must be positive");
    std::vector<double> out(n);
    for (std::size_t i = 0; i < n; ++i) {
      out[i] = n == 1 ? a : a + (b - a) * static_cast<double>(i) / static_cast<double>(n - 1);
    }
    // Exact mirror images keep symmetric grids symmetric.
    for (std::size_t i = 0; i < n / 2; ++i) {
      if (a == -b) out[n - 1 - i] = -out[i];
    }
    if (n % 2 == 1 && a == -b) out[n / 2] = 0.0;
    return out;
  }
  std::vector<double> out;
  for (const auto& item : split(s, ',')) {
    if (!item.empty()) out.push_back(parse_scalar(item));
  }
  return out;
}

std::uint64_t ExperimentPlan::seed() const {
  if (!model.seed) throw MissingRequired("seed");
  return *model.seed;
}

std::map<std::string, double> default_tolerances(ExperimentKind kind) {
  switch (kind) {
    case ExperimentKind::density:
      return {{"residual", 1e-9}, {"mass", 1e-12}};
    case ExperimentKind::lambda:
      return {{"lambda0", 1e-10}, {"convexity", 0.0}, {"d1", 1e-3}, {"d2", 0.02}};
    case ExperimentKind::variance:
      return {{"sigma2", 1e-6}, {"curve", 0.05}};
    case ExperimentKind::ldp:
      return {{"ldp_gap", 0.25}, {"ldp_trend", 0.0}};
    case ExperimentKind::clt:
      return {{"ks", 0.02}, {"var", 0.03}};
    case ExperimentKind::lclt:
      return {{"lclt", 0.05}, {"off_lattice", 0.0}};
    case ExperimentKind::aperiodicity:
      return {{"classification", 0.0}};
    case ExperimentKind::validate:
      return {{"admissible", 0.0}};
  }
  return {};
}

ExperimentPlan parse_config(std::string_view text, bool strict, std::optional<ExperimentKind> kind) {
  ExperimentPlan plan;
  if (kind) plan.experiment.kind = *kind;
  auto& m = plan.model;
  auto& o = plan.observable;
  auto& e = plan.experiment;
  auto& out = plan.output;
  bool thetas_set = false;
  bool t_grid_set = false;
  std::vector<std::pair<std::string, std::size_t>> tol_keys;

  using Handler = std::function<void(const std::string&)>;
  const std::map<std::string, std::map<std::string, Handler>> sections = {
      {"model",
       {
           {"maps", [&](const std::string& v) {
              m.maps.clear();
              for (const auto& s : split(v, '|')) {
                const std::string spec = unquote(trim(s));
                m.maps.push_back(PiecewiseLinearMap::from_spec(spec).spec());
              }
            }},
           {"driving", [&](const std::string& v) {
              if (v != "bernoulli" && v != "rotation") throw InvalidArgument("driving must be bernoulli or rotation");
              m.driving = v;
            }},
           {"probabilities", [&](const std::string& v) { m.probabilities = parse_double_list(v); }},
           {"alpha", [&](const std::string& v) { m.alpha = parse_double(v); }},
           {"boundaries", [&](const std::string& v) { m.boundaries = parse_double_list(v); }},
           {"start_point", [&](const std::string& v) { m.start_point = parse_double(v); }},
           {"seed", [&](const std::string& v) {
              const auto s = parse_int(v);
              if (s < 0) throw InvalidArgument("seed must be non-negative");
              m.seed = static_cast<std::uint64_t>(s);
            }},
       }},
      {"discretization",
       {
           {"n_cells", [&](const std::string& v) {
              plan.n_cells = parse_count(v);
              if (plan.n_cells < 2 || !is_power_of_two(plan.n_cells))
                throw InvalidArgument("n_cells must be a power of two >= 2");
            }},
       }},
      {"observable",
       {
           {"kind", [&](const std::string& v) {
              if (v != "cosine" && v != "indicator" && v != "table" && v != "zero")
                throw InvalidArgument("observable kind must be cosine, indicator, table or zero");
              o.kind = v;
            }},
           {"terms", [&](const std::string& v) {
              o.terms.clear();
              for (const auto& item : split(v, ',')) {
                if (item.empty()) continue;
                const auto parts = split(item, ':');
                if (parts.size() > 2) throw InvalidArgument("cosine term must be k or k:amplitude");
                o.terms.push_back({static_cast<int>(parse_int(parts[0])), parts.size() == 2 ? parse_double(parts[1]) : 1.0});
              }
            }},
           {"threshold", [&](const std::string& v) { o.threshold = parse_double(v); }},
           {"amplitude", [&](const std::string& v) { o.amplitude = parse_double(v); }},
           {"offset", [&](const std::string& v) { o.offset = parse_double(v); }},
           {"table", [&](const std::string& v) {
              o.table.clear();
              for (const auto& row : split(v, ';')) {
                if (!row.empty()) o.table.push_back(parse_double_list(row));
              }
            }},
           {"centered", [&](const std::string& v) { o.centered = parse_bool(v); }},
       }},
      {"experiment",
       {
           {"kind", [&](const std::string& v) {
              e.kind = parse_kind(v);
              if (kind && *kind != e.kind)
                throw InvalidArgument("config kind " + v + " differs from requested kind " + to_string(*kind));
            }},
           {"axis", [&](const std::string& v) {
              if (v == "real") e.axis = Axis::real;
              else if (v == "imaginary") e.axis = Axis::imaginary;
              else throw InvalidArgument("axis must be real or imaginary");
            }},
           {"thetas", [&](const std::string& v) {
              e.thetas = parse_grid(v);
              thetas_set = true;
            }},
           {"h", [&](const std::string& v) { e.h = parse_double(v); }},
           {"n_orbit", [&](const std::string& v) { e.n_orbit = parse_count(v); }},
           {"n_burn", [&](const std::string& v) { e.n_burn = parse_count(v); }},
           {"t_end", [&](const std::string& v) { e.t_end = parse_int(v); }},
           {"t", [&](const std::string& v) { e.t = parse_int(v); }},
           {"theta", [&](const std::string& v) { e.theta = parse_scalar(v); }},
           {"j_max", [&](const std::string& v) { e.j_max = parse_count(v); }},
           {"variance_orbit", [&](const std::string& v) { e.variance_orbit = parse_count(v); }},
           {"compare_curve", [&](const std::string& v) { e.compare_curve = parse_bool(v); }},
           {"expect_sigma2", [&](const std::string& v) { e.expect_sigma2 = parse_double(v); }},
           {"t0", [&](const std::string& v) { e.t0 = parse_int(v); }},
           {"epsilons", [&](const std::string& v) { e.epsilons = parse_double_list(v); }},
           {"theta_plus", [&](const std::string& v) { e.theta_plus = parse_double(v); }},
           {"ns", [&](const std::string& v) {
              e.ns.clear();
              for (const auto& item : split(v, ',')) {
                if (!item.empty()) e.ns.push_back(parse_count(item));
              }
            }},
           {"n", [&](const std::string& v) { e.n = parse_count(v); }},
           {"count", [&](const std::string& v) { e.count = parse_count(v); }},
           {"start_law", [&](const std::string& v) { e.start_law = parse_start_law(v); }},
           {"sigma2", [&](const std::string& v) { e.sigma2 = parse_double(v); }},
           {"j", [&](const std::string& v) {
              // Accepts "lo, hi" and the closed-interval form "[lo, hi]".
              std::string body = trim(v);
              if (body.size() >= 2 && body.front() == '[' && body.back() == ']') body = body.substr(1, body.size() - 2);
              const auto ends = parse_double_list(body);
              if (ends.size() != 2) throw InvalidArgument("J needs two endpoints");
              e.J = {ends[0], ends[1]};
            }},
           {"s_points", [&](const std::string& v) { e.s_points = parse_count(v); }},
           {"s_span", [&](const std::string& v) { e.s_span = parse_double(v); }},
           {"s_grid", [&](const std::string& v) { e.s_grid = parse_grid(v); }},
           {"periodic", [&](const std::string& v) {
              if (v != "auto" && v != "true" && v != "false") throw InvalidArgument("periodic must be auto, true or false");
              e.periodic = v;
            }},
           {"t_grid", [&](const std::string& v) {
              e.t_grid = parse_grid(v);
              t_grid_set = true;
            }},
           {"expect", [&](const std::string& v) {
              if (v != "aperiodic_evidence" && v != "periodic_lattice" && v != "inconclusive")
                throw InvalidArgument("expect must be aperiodic_evidence, periodic_lattice or inconclusive");
              e.expect = v;
            }},
           {"horizon", [&](const std::string& v) { e.horizon = parse_count(v); }},
           {"k_max", [&](const std::string& v) { e.k_max = static_cast<int>(parse_int(v)); }},
           {"mesh_log2", [&](const std::string& v) { e.mesh_log2 = static_cast<int>(parse_int(v)); }},
       }},
      {"output",
       {
           {"dir", [&](const std::string& v) { out.dir = unquote(v); }},
           {"plot", [&](const std::string& v) { out.plot = parse_bool(v); }},
           {"dump_matrices", [&](const std::string& v) { out.dump_matrices = parse_bool(v); }},
           {"workers", [&](const std::string& v) {
              const auto w = parse_count(v);
              if (w == 0) throw InvalidArgument("workers must be positive");
              out.workers = static_cast<unsigned>(w);
            }},
       }},
  };

  std::string section;
  std::size_t line_no = 0;
  std::istringstream in{std::string(text)};
  std::string line;
  std::map<std::string, std::size_t> seen;
  while (std::getline(in, line)) {
    ++line_no;
    // '#' starts a comment anywhere; ';' only at line start (it separates items in values).
    std::string s = line.substr(0, line.find('#'));
    if (const auto t = trim(s); !t.empty() && t.front() == ';') s.clear();
    s = trim(s);
    if (s.empty()) continue;
    if (s.front() == '[') {
      if (s.back() != ']') throw ParseError(line_no, "malformed section header '" + s + "'");
      section = trim(std::string_view(s).substr(1, s.size() - 2));
      if (!sections.count(section)) throw ParseError(line_no, "unknown section [" + section + "]");
      continue;
    }
    const auto eq = s.find('=');
    if (eq == std::string::npos) throw ParseError(line_no, "expected key = value, got '" + s + "'");
    const std::string key = trim(std::string_view(s).substr(0, eq));
    const std::string value = trim(std::string_view(s).substr(eq + 1));
    if (section.empty()) throw ParseError(line_no, "key '" + key + "' outside any section");
    const std::string full = section + "." + key;
    if (section == "experiment" && key.rfind("tol_", 0) == 0) {
      try {
        plan.experiment.tolerances[key.substr(4)] = parse_double(value);
      } catch (const Error& err) {
        throw ParseError(line_no, key + ": " + err.what());
      }
      tol_keys.emplace_back(key, line_no);
      continue;
    }
    const auto& handlers = sections.at(section);
    const auto it = handlers.find(key == "map" && section == "model" ? "maps" : key == "J" ? "j" : key);
    if (it == handlers.end()) {
      const std::string msg = "line " + std::to_string(line_no) + ": unknown key '" + key + "' in [" + section + "]";
      if (strict) throw UnknownKey(msg);
      plan.warnings.push_back(msg);
      continue;
    }
    if (seen.count(full)) throw ParseError(line_no, "duplicate key '" + key + "' (first on line " + std::to_string(seen[full]) + ")");
    seen[full] = line_no;
    try {
      it->second(value);
    } catch (const ParseError&) {
      throw;
    } catch (const Error& err) {
      throw ParseError(line_no, key + ": " + err.what());
    }
  }
  if (!m.seed) throw MissingRequired("seed: [model] seed is required (no entropy is drawn from the environment)");
  if (!thetas_set) e.thetas = default_thetas();
  if (!t_grid_set) e.t_grid = default_t_grid();
  const auto defaults = default_tolerances(e.kind);
  for (const auto& [key, line] : tol_keys) {
    if (!defaults.count(key.substr(4))) {
      const std::string msg = "line " + std::to_string(line) + ": unknown tolerance '" + key + "' for kind " + to_string(e.kind);
      if (strict) throw UnknownKey(msg);
      plan.warnings.push_back(msg);
      plan.experiment.tolerances.erase(key.substr(4));
    }
  }
  try {
    const auto family = build_family(m);
    (void)build_driving(m, family.size());
    (void)build_observable(o);
  } catch (const Error& err) {
    throw ParseError(line_no, std::string("invalid plan: ") + err.what());
  }
  return plan;
}

std::string serialize(const ExperimentPlan& p) {
  std::ostringstream os;
  const auto& m = p.model;
  os << "[model]\n";
  os << "maps = ";
  for (std::size_t i = 0; i < m.maps.size(); ++i) os << (i ? " | " : "") << m.maps[i];
  os << "\ndriving = " << m.driving << "\n";
  if (!m.probabilities.empty()) os << "probabilities = " << join(m.probabilities) << "\n";
  if (m.alpha) os << "alpha = " << format_double(*m.alpha) << "\n";
  if (!m.boundaries.empty()) os << "boundaries = " << join(m.boundaries) << "\n";
  os << "start_point = " << format_double(m.start_point) << "\n";
  if (m.seed) os << "seed = " << *m.seed << "\n";

  os << "\n[discretization]\nn_cells = " << p.n_cells << "\n";

  const auto& o = p.observable;
  os << "\n[observable]\nkind = " << o.kind << "\nterms = ";
  for (std::size_t i = 0; i < o.terms.size(); ++i) {
    os << (i ? ", " : "") << o.terms[i].k << ":" << format_double(o.terms[i].amplitude);
  }
  os << "\nthreshold = " << format_double(o.threshold) << "\namplitude = " << format_double(o.amplitude)
     << "\noffset = " << format_double(o.offset) << "\n";
  if (!o.table.empty()) {
    os << "table = ";
    for (std::size_t i = 0; i < o.table.size(); ++i) os << (i ? "; " : "") << join(o.table[i]);
    os << "\n";
  }
  os << "centered = " << (o.centered ? "true" : "false") << "\n";

  const auto& e = p.experiment;
  os << "\n[experiment]\nkind = " << to_string(e.kind) << "\n";
  os << "axis = " << (e.axis == Axis::real ? "real" : "imaginary") << "\n";
  os << "thetas = " << join(e.thetas) << "\n";
  os << "h = " << format_double(e.h) << "\n";
  os << "n_orbit = " << e.n_orbit << "\nn_burn = " << e.n_burn << "\nt_end = " << e.t_end << "\n";
  os << "t = " << e.t << "\ntheta = " << format_double(e.theta) << "\n";
  os << "j_max = " << e.j_max << "\nvariance_orbit = " << e.variance_orbit << "\n";
  os << "compare_curve = " << (e.compare_curve ? "true" : "false") << "\n";
  if (e.expect_sigma2) os << "expect_sigma2 = " << format_double(*e.expect_sigma2) << "\n";
  os << "t0 = " << e.t0 << "\nepsilons = " << join(e.epsilons) << "\ntheta_plus = " << format_double(e.theta_plus) << "\n";
  os << "ns = ";
  for (std::size_t i = 0; i < e.ns.size(); ++i) os << (i ? ", " : "") << e.ns[i];
  os << "\nn = " << e.n << "\ncount = " << e.count << "\nstart_law = " << to_string(e.start_law) << "\n";
  if (e.sigma2) os << "sigma2 = " << format_double(*e.sigma2) << "\n";
  os << "J = [" << format_double(e.J.lo) << ", " << format_double(e.J.hi) << "]\n";
  os << "s_points = " << e.s_points << "\ns_span = " << format_double(e.s_span) << "\n";
  if (!e.s_grid.empty()) os << "s_grid = " << join(e.s_grid) << "\n";
  os << "periodic = " << e.periodic << "\n";
  os << "t_grid = " << join(e.t_grid) << "\n";
  if (!e.expect.empty()) os << "expect = " << e.expect << "\n";
  os << "horizon = " << e.horizon << "\nk_max = " << e.k_max << "\nmesh_log2 = " << e.mesh_log2 << "\n";
  for (const auto& [k, v] : e.tolerances) os << "tol_" << k << " = " << format_double(v) << "\n";

  const auto& out = p.output;
  os << "\n[output]\ndir = " << out.dir << "\nplot = " << (out.plot ? "true" : "false")
     << "\ndump_matrices = " << (out.dump_matrices ? "true" : "false") << "\nworkers = " << out.workers << "\n";
  return os.str();
}

MapFamily build_family(const ModelConfig& model) {
  if (model.maps.empty()) throw InvalidMap("model needs at least one map");
  std::vector<PiecewiseLinearMap> maps;
  for (const auto& s : model.maps) maps.push_back(PiecewiseLinearMap::from_spec(s));
  return MapFamily(std::move(maps));
}

DrivingSystem build_driving(const ModelConfig& model, std::size_t n_maps) {
  const std::uint64_t seed = model.seed.value_or(0);
  if (model.driving == "rotation") {
    std::vector<double> cells = model.boundaries;
    if (cells.empty()) {
      for (std::size_t i = 0; i < n_maps; ++i) cells.push_back(static_cast<double>(i) / static_cast<double>(n_maps));
    }
    return DrivingSystem::rotation(model.alpha.value_or(DrivingSystem::default_alpha()), std::move(cells),
                                   model.start_point);
  }
  std::vector<double> probs = model.probabilities;
  if (probs.empty()) probs.assign(n_maps, 1.0 / static_cast<double>(n_maps));
  if (probs.size() == n_maps && n_maps > 1) {
    double partial = 0.0;
    for (std::size_t i = 0; i + 1 < probs.size(); ++i) partial += probs[i];
    if (std::abs(partial + probs.back() - 1.0) <= 1e-12) probs.back() = 1.0 - partial;
  }
  return DrivingSystem::bernoulli(std::move(probs), seed);
}

Observable build_observable(const ObservableConfig& cfg) {
  if (cfg.kind == "zero") return Observable::zero();
  if (cfg.kind == "indicator") return Observable::indicator(cfg.threshold, cfg.amplitude, cfg.offset);
  if (cfg.kind == "table") return Observable::table(cfg.table);
  return Observable::trig(cfg.terms);
}

}  // namespace qspec
