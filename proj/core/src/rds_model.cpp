#include "qspec/rds_model.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <functional>
#include <limits>
#include <numeric>
#include <sstream>

#include "qspec/rng.hpp"
#include "qspec/util.hpp"

namespace qspec {

namespace {

constexpr double kEndpointTol = 1e-12;

std::vector<Interval> merge_intervals(std::vector<Interval> pieces) {
  std::sort(pieces.begin(), pieces.end(),
            [](const Interval& a, const Interval& b) { return a.lo < b.lo; });
  std::vector<Interval> out;
  for (const auto& p : pieces) {
    if (p.hi - p.lo <= 0.0) continue;
    if (!out.empty() && p.lo <= out.back().hi + kEndpointTol) {
      out.back().hi = std::max(out.back().hi, p.hi);
    } else {
      out.push_back(p);
    }
  }
  return out;
}

bool covers_unit(std::span<const Interval> merged) {
  return merged.size() == 1 && merged[0].lo <= kEndpointTol && merged[0].hi >= 1.0 - kEndpointTol;
}

bool is_integer(double v) { return std::isfinite(v) && v == std::round(v); }

struct AffinePiece {
  Interval domain;
  double slope = 1.0;
  double intercept = 0.0;
};

// Partition of [0,1) into intervals on which the composition of `maps` is affine.
std::vector<AffinePiece> compose_partition(const std::vector<const PiecewiseLinearMap*>& maps) {
  std::vector<AffinePiece> pieces{{Interval{0.0, 1.0}, 1.0, 0.0}};
  for (const auto* map : maps) {
    std::vector<AffinePiece> next;
    for (const auto& p : pieces) {
      const double y0 = p.slope * p.domain.lo + p.intercept;
      const double y1 = p.slope * p.domain.hi + p.intercept;
      const Interval img{std::min(y0, y1), std::max(y0, y1)};
      for (const auto& b : map->branches()) {
        const double lo = std::max(img.lo, b.domain.lo);
        const double hi = std::min(img.hi, b.domain.hi);
        if (hi - lo <= kEndpointTol) continue;
        const double x0 = (lo - p.intercept) / p.slope;
        const double x1 = (hi - p.intercept) / p.slope;
        next.push_back({Interval{std::min(x0, x1), std::max(x0, x1)}, b.slope * p.slope,
                        b.slope * p.intercept + b.intercept});
      }
    }
    pieces = std::move(next);
  }
  return pieces;
}

}  // namespace

Interval Branch::image() const noexcept {
  const double a = apply(domain.lo);
  const double b = apply(domain.hi);
  return {std::min(a, b), std::max(a, b)};
}

PiecewiseLinearMap::PiecewiseLinearMap(std::vector<Branch> branches, std::string name)
    : branches_(std::move(branches)), name_(std::move(name)) {
  if (branches_.empty()) throw InvalidMap("map has no branches");
  std::sort(branches_.begin(), branches_.end(),
            [](const Branch& a, const Branch& b) { return a.domain.lo < b.domain.lo; });
  if (std::abs(branches_.front().domain.lo) > kEndpointTol)
    throw InvalidMap("branch domains must start at 0");
  if (std::abs(branches_.back().domain.hi - 1.0) > kEndpointTol)
    throw InvalidMap("branch domains must end at 1");
  branches_.front().domain.lo = 0.0;
  branches_.back().domain.hi = 1.0;
  for (std::size_t i = 0; i < branches_.size(); ++i) {
    const auto& b = branches_[i];
    if (!(b.domain.hi > b.domain.lo)) throw InvalidMap("empty branch domain");
    if (!std::isfinite(b.slope) || !std::isfinite(b.intercept) || b.slope == 0.0)
      throw InvalidMap("branch slope must be finite and non-zero");
    if (i + 1 < branches_.size() &&
        std::abs(b.domain.hi - branches_[i + 1].domain.lo) > kEndpointTol) {
      std::ostringstream os;
      os << "branch domains must partition [0,1): gap or overlap at " << b.domain.hi;
      throw InvalidMap(os.str());
    }
    const Interval img = b.image();
    if (img.lo < -kEndpointTol || img.hi > 1.0 + kEndpointTol)
      throw InvalidMap("branch image leaves [0,1]");
  }
}

PiecewiseLinearMap PiecewiseLinearMap::k_fold(int k) {
  if (k < 2) throw InvalidMap("k_fold needs k >= 2");
  std::vector<Branch> branches;
  branches.reserve(static_cast<std::size_t>(k));
  for (int i = 0; i < k; ++i) {
    const double lo = static_cast<double>(i) / k;
    const double hi = i + 1 == k ? 1.0 : static_cast<double>(i + 1) / k;
    branches.push_back({Interval{lo, hi}, static_cast<double>(k), -static_cast<double>(i)});
  }
  std::string name = k == 2 ? "doubling" : k == 3 ? "tripling" : "k_fold:" + std::to_string(k);
  return PiecewiseLinearMap(std::move(branches), std::move(name));
}

PiecewiseLinearMap PiecewiseLinearMap::from_spec(const std::string& raw) {
  const std::string spec = trim(raw);
  if (spec == "doubling") return doubling();
  if (spec == "tripling") return tripling();
  if (spec.rfind("k_fold:", 0) == 0) return k_fold(static_cast<int>(parse_int(spec.substr(7))));
  if (spec.rfind("affine:", 0) == 0) {
    std::vector<Branch> branches;
    for (const auto& quad : split(spec.substr(7), ';')) {
      if (trim(quad).empty()) continue;
      const auto nums = parse_double_list(quad, ',');
      if (nums.size() != 4) throw InvalidMap("affine branch needs a,b,slope,intercept: '" + quad + "'");
      branches.push_back({Interval{nums[0], nums[1]}, nums[2], nums[3]});
    }
    return PiecewiseLinearMap(std::move(branches));
  }
  throw InvalidMap("unknown map spec '" + spec + "'");
}

std::string PiecewiseLinearMap::spec() const {
  if (!name_.empty()) return name_;
  std::string out = "affine: ";
  for (std::size_t i = 0; i < branches_.size(); ++i) {
    const auto& b = branches_[i];
    if (i) out += "; ";
    out += format_double(b.domain.lo) + "," + format_double(b.domain.hi) + "," +
           format_double(b.slope) + "," + format_double(b.intercept);
  }
  return out;
}

std::size_t PiecewiseLinearMap::branch_index(double x) const noexcept {
  auto it = std::upper_bound(branches_.begin(), branches_.end(), x,
                             [](double v, const Branch& b) { return v < b.domain.lo; });
  if (it == branches_.begin()) return 0;
  return static_cast<std::size_t>(std::distance(branches_.begin(), it)) - 1;
}

double PiecewiseLinearMap::apply(double x) const noexcept {
  const double y = branches_[branch_index(x)].apply(x);
  if (y < 0.0) return 0.0;
  if (y >= 1.0) return std::nextafter(1.0, 0.0);
  return y;
}

std::vector<Preimage> PiecewiseLinearMap::inverse_branches(double y) const {
  std::vector<Preimage> out;
  for (const auto& b : branches_) {
    const double x = (y - b.intercept) / b.slope;
    if (b.domain.contains(x)) out.push_back({x, 1.0 / std::abs(b.slope)});
  }
  return out;
}

double PiecewiseLinearMap::min_expansion() const noexcept {
  double m = std::numeric_limits<double>::infinity();
  for (const auto& b : branches_) m = std::min(m, std::abs(b.slope));
  return m;
}

bool PiecewiseLinearMap::full_branch() const noexcept {
  return std::all_of(branches_.begin(), branches_.end(), [](const Branch& b) {
    const Interval img = b.image();
    return std::abs(img.lo) <= kEndpointTol && std::abs(img.hi - 1.0) <= kEndpointTol;
  });
}

std::optional<std::uint64_t> PiecewiseLinearMap::uniform_integer_slope() const noexcept {
  const double s = branches_.front().slope;
  if (!is_integer(s) || s < 2.0 || s > 1e9) return std::nullopt;
  for (const auto& b : branches_) {
    if (b.slope != s || !is_integer(b.intercept)) return std::nullopt;
  }
  return static_cast<std::uint64_t>(s);
}

bool operator==(const PiecewiseLinearMap& a, const PiecewiseLinearMap& b) noexcept {
  if (a.branches_.size() != b.branches_.size()) return false;
  for (std::size_t i = 0; i < a.branches_.size(); ++i) {
    const auto& x = a.branches_[i];
    const auto& y = b.branches_[i];
    if (x.domain.lo != y.domain.lo || x.domain.hi != y.domain.hi || x.slope != y.slope ||
        x.intercept != y.intercept)
      return false;
  }
  return true;
}

MapFamily::MapFamily(std::vector<PiecewiseLinearMap> maps) : maps_(std::move(maps)) {
  if (maps_.empty()) throw InvalidArgument("map family must be non-empty");
  delta_ = std::numeric_limits<double>::infinity();
  for (const auto& m : maps_) {
    delta_ = std::min(delta_, m.min_expansion());
    b_max_ = std::max(b_max_, m.branches().size());
  }
  if (delta_ > 1.0) {
    iterate_n_ = 1;
    while (std::pow(delta_, iterate_n_) <= 2.0) ++iterate_n_;
  }
}

void MapFamily::require_expanding() const {
  if (!(delta_ > 1.0)) {
    throw NotExpanding("minimum |slope| is " + format_double(delta_) + " (must exceed 1)");
  }
}

DrivingSystem::DrivingSystem(Variant v) : v_(std::move(v)) {
  if (auto* b = std::get_if<BernoulliShift>(&v_)) {
    if (b->probabilities.empty()) throw InvalidDriving("no symbol probabilities");
    double total = 0.0;
    for (double p : b->probabilities) {
      if (!(p > 0.0)) throw InvalidDriving("symbol probabilities must be positive");
      total += p;
      cumulative_.push_back(total);
    }
    if (std::abs(total - 1.0) > 1e-12) throw InvalidDriving("symbol probabilities must sum to 1");
    cumulative_.back() = 1.0;
  } else {
    auto& r = std::get<IrrationalRotation>(v_);
    if (!(r.alpha > 0.0 && r.alpha < 1.0)) throw InvalidDriving("rotation alpha must lie in (0,1)");
    if (r.cell_boundaries.empty() || r.cell_boundaries.front() != 0.0)
      throw InvalidDriving("rotation cell boundaries must start at 0");
    for (std::size_t i = 0; i < r.cell_boundaries.size(); ++i) {
      const double c = r.cell_boundaries[i];
      if (c < 0.0 || c >= 1.0) throw InvalidDriving("rotation cell boundaries must lie in [0,1)");
      if (i && !(c > r.cell_boundaries[i - 1]))
        throw InvalidDriving("rotation cell boundaries must be strictly increasing");
    }
  }
}

DrivingSystem DrivingSystem::bernoulli(std::vector<double> probabilities, std::uint64_t seed) {
  return DrivingSystem(BernoulliShift{std::move(probabilities), seed});
}

DrivingSystem DrivingSystem::rotation(double alpha, std::vector<double> cell_boundaries,
                                      double start_point) {
  return DrivingSystem(IrrationalRotation{alpha, std::move(cell_boundaries), start_point});
}

double DrivingSystem::default_alpha() noexcept { return 0.5 * (std::sqrt(5.0) - 1.0); }

std::size_t DrivingSystem::symbol_at(std::int64_t t) const noexcept {
  if (const auto* b = std::get_if<BernoulliShift>(&v_)) {
    const double u = to_unit(stream_key(b->seed, static_cast<std::uint64_t>(t)));
    const auto it = std::upper_bound(cumulative_.begin(), cumulative_.end(), u);
    return std::min<std::size_t>(static_cast<std::size_t>(it - cumulative_.begin()),
                                 cumulative_.size() - 1);
  }
  const auto& r = std::get<IrrationalRotation>(v_);
  const long double x = static_cast<long double>(r.start_point) +
                        static_cast<long double>(t) * static_cast<long double>(r.alpha);
  const double frac = static_cast<double>(x - std::floor(x));
  const auto it = std::upper_bound(r.cell_boundaries.begin(), r.cell_boundaries.end(), frac);
  return static_cast<std::size_t>(it - r.cell_boundaries.begin()) - 1;
}

std::size_t DrivingSystem::num_symbols() const noexcept {
  if (const auto* b = std::get_if<BernoulliShift>(&v_)) return b->probabilities.size();
  return std::get<IrrationalRotation>(v_).cell_boundaries.size();
}

std::size_t OrbitWindow::symbol(std::int64_t t) const {
  if (t < first_time() || t >= end_time())
    throw OutOfWindow("time " + std::to_string(t) + " outside orbit window");
  return symbols[static_cast<std::size_t>(t - first_time())];
}

OrbitWindow make_window(const DrivingSystem& d, std::int64_t t0, std::int64_t past,
                        std::int64_t future) {
  if (past < 0 || future < 0) throw InvalidArgument("window extents must be non-negative");
  OrbitWindow w{t0, past, future, {}};
  w.symbols.reserve(static_cast<std::size_t>(past + future));
  for (std::int64_t t = t0 - past; t < t0 + future; ++t) w.symbols.push_back(d.symbol_at(t));
  return w;
}

const PiecewiseLinearMap& map_at(const MapFamily& family, const DrivingSystem& d, std::int64_t t) {
  const std::size_t s = d.symbol_at(t);
  if (s >= family.size()) {
    throw SymbolOutOfRange("symbol " + std::to_string(s) + " at time " + std::to_string(t) +
                           " has no map (family size " + std::to_string(family.size()) + ")");
  }
  return family[s];
}

std::vector<double> trajectory(const MapFamily& family, const DrivingSystem& d, std::int64_t t0,
                               std::size_t n, double x) {
  std::vector<double> out;
  out.reserve(n + 1);
  out.push_back(x);
  for (std::size_t i = 0; i < n; ++i) {
    x = map_at(family, d, t0 + static_cast<std::int64_t>(i)).apply(x);
    out.push_back(x);
  }
  return out;
}

std::vector<Interval> image_of(const PiecewiseLinearMap& map, std::span<const Interval> pieces) {
  std::vector<Interval> out;
  for (const auto& p : pieces) {
    for (const auto& b : map.branches()) {
      const double lo = std::max(p.lo, b.domain.lo);
      const double hi = std::min(p.hi, b.domain.hi);
      if (hi <= lo) continue;
      const double y0 = b.apply(lo);
      const double y1 = b.apply(hi);
      out.push_back({std::clamp(std::min(y0, y1), 0.0, 1.0), std::clamp(std::max(y0, y1), 0.0, 1.0)});
    }
  }
  return merge_intervals(std::move(out));
}

AdmissibilityReport validate_family(const MapFamily& family, const DrivingSystem& d,
                                    const ValidateOptions& opts) {
  family.require_expanding();
  AdmissibilityReport rep;
  rep.delta = family.delta();
  rep.b_max = family.b_max();
  rep.iterate_n = family.iterate_n();
  rep.k_max = opts.k_max;
  rep.mesh = std::ldexp(1.0, -opts.mesh_log2);

  rep.min_regularity_length = std::numeric_limits<double>::infinity();
  for (std::size_t h = 0; h < opts.horizon; ++h) {
    std::vector<const PiecewiseLinearMap*> word;
    for (int i = 0; i < rep.iterate_n; ++i) {
      word.push_back(&map_at(family, d, opts.horizon_start + static_cast<std::int64_t>(h) + i));
    }
    for (const auto& p : compose_partition(word)) {
      rep.min_regularity_length = std::min(rep.min_regularity_length, p.domain.length());
    }
  }

  // Depth-first over symbol words; a branch of the search stops as soon as
  // its image chain covers [0,1).
  const std::size_t cells = std::size_t{1} << opts.mesh_log2;
  int worst = 0;
  bool ok = true;
  std::function<void(const std::vector<Interval>&, int)> explore =
      [&](const std::vector<Interval>& set, int depth) {
        if (!ok) return;
        if (covers_unit(set)) {
          worst = std::max(worst, depth);
          return;
        }
        if (depth == opts.k_max) {
          ok = false;
          return;
        }
        for (const auto& map : family.maps()) explore(image_of(map, set), depth + 1);
      };
  for (std::size_t i = 0; i < cells && ok; ++i) {
    explore({Interval{static_cast<double>(i) * rep.mesh, static_cast<double>(i + 1) * rep.mesh}}, 0);
  }
  rep.covering_ok = ok;
  rep.covering_k = ok ? worst : -1;
  rep.admissible_evidence = rep.delta > 1.0 && rep.covering_ok && rep.min_regularity_length > 0.0;
  rep.notes.push_back("covering checked on the dyadic mesh of width " + format_double(rep.mesh) +
                      " only; arbitrary subintervals are not certified");
  if (!rep.covering_ok) {
    rep.notes.push_back("some mesh interval failed to cover [0,1) within k_max=" +
                        std::to_string(opts.k_max) + " steps");
  }
  return rep;
}

FixedPointMap::FixedPointMap(const PiecewiseLinearMap& map) {
  if (auto s = map.uniform_integer_slope()) integer_slope_ = *s;
  for (const auto& b : map.branches()) {
    const long double start = std::ceil(std::ldexp(static_cast<long double>(b.domain.lo), 64));
    branches_.push_back({start >= 0x1.0p64L ? std::numeric_limits<std::uint64_t>::max()
                                            : static_cast<std::uint64_t>(start),
                         static_cast<long double>(b.slope), static_cast<long double>(b.intercept)});
  }
  branches_.front().start = 0;
}

std::uint64_t FixedPointMap::step_general(std::uint64_t m, std::uint64_t sub_bits) const noexcept {
  std::size_t k = 0;
  while (k + 1 < branches_.size() && m >= branches_[k + 1].start) ++k;
  const auto& b = branches_[k];
  // Scaled by 2^64; the sub-bit term keeps the carry into the last unit.
  const long double scaled = b.slope * static_cast<long double>(m) +
                             b.slope * std::ldexp(static_cast<long double>(sub_bits), -64) +
                             std::ldexp(b.intercept, 64);
  if (!(scaled > 0.0L)) return 0;
  if (scaled >= 0x1.0p64L) return std::numeric_limits<std::uint64_t>::max();
  return static_cast<std::uint64_t>(scaled);
}

std::uint64_t double_to_fixed(double x) noexcept {
  if (!(x > 0.0)) return 0;
  const long double scaled = std::ldexp(static_cast<long double>(x), 64);
  if (scaled >= 0x1.0p64L) return std::numeric_limits<std::uint64_t>::max();
  return static_cast<std::uint64_t>(scaled);
}

}  // namespace qspec
