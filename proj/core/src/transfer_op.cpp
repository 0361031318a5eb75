#include "qspec/transfer_op.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <ostream>

#include "qspec/rng.hpp"
#include "qspec/util.hpp"

namespace qspec {

namespace {

// Overlaps shorter than this fraction of a cell are roundoff slivers.
constexpr double kSliverFraction = 1e-11;

}  // namespace

double UlamMatrix::max_row_sum_error() const noexcept {
  double worst = 0.0;
  for (std::size_t i = 0; i < n_cells_; ++i) {
    double s = 0.0;
    for (const auto& e : row(i)) s += e.weight;
    worst = std::max(worst, std::abs(s - 1.0));
  }
  return worst;
}

void UlamMatrix::push_forward(std::span<const Complex> in, std::span<Complex> out) const noexcept {
  std::fill(out.begin(), out.end(), Complex(0.0));
  if (dense()) {
    for (std::size_t i = 0; i < n_cells_; ++i) {
      const Complex v = in[i];
      const double* r = dense_.data() + i * n_cells_;
      for (std::size_t j = 0; j < n_cells_; ++j) out[j] += v * r[j];
    }
    return;
  }
  for (std::size_t i = 0; i < n_cells_; ++i) {
    const Complex v = in[i];
    for (std::size_t k = row_ptr_[i]; k < row_ptr_[i + 1]; ++k) out[entries_[k].col] += v * entries_[k].weight;
  }
}

void UlamMatrix::pull_back(std::span<const Complex> in, std::span<Complex> out) const noexcept {
  for (std::size_t i = 0; i < n_cells_; ++i) {
    Complex s = 0.0;
    for (std::size_t k = row_ptr_[i]; k < row_ptr_[i + 1]; ++k) s += entries_[k].weight * in[entries_[k].col];
    out[i] = s;
  }
}

UlamMatrix build_ulam(const PiecewiseLinearMap& map, std::size_t n_cells) {
  if (n_cells < 2 || !is_power_of_two(n_cells)) {
    throw InvalidGrid("n_cells must be a power of two >= 2, got " + std::to_string(n_cells));
  }
  UlamMatrix m;
  m.n_cells_ = n_cells;
  m.row_ptr_.reserve(n_cells + 1);
  m.row_ptr_.push_back(0);
  const double n = static_cast<double>(n_cells);
  const double cell = 1.0 / n;
  std::map<std::size_t, double> acc;
  for (std::size_t i = 0; i < n_cells; ++i) {
    acc.clear();
    const double a = static_cast<double>(i) * cell;
    const double b = static_cast<double>(i + 1) * cell;
    for (const auto& br : map.branches()) {
      const double lo = std::max(a, br.domain.lo);
      const double hi = std::min(b, br.domain.hi);
      if (hi - lo <= kSliverFraction * cell) continue;
      const double y0 = br.apply(lo);
      const double y1 = br.apply(hi);
      const double ylo = std::clamp(std::min(y0, y1), 0.0, 1.0);
      const double yhi = std::clamp(std::max(y0, y1), 0.0, 1.0);
      const double inv_slope = 1.0 / std::abs(br.slope);
      auto j = static_cast<std::size_t>(std::floor(ylo * n));
      const auto j_end = std::min(n_cells, static_cast<std::size_t>(std::ceil(yhi * n)));
      for (; j < j_end; ++j) {
        const double clo = static_cast<double>(j) * cell;
        const double chi = static_cast<double>(j + 1) * cell;
        const double overlap = std::min(yhi, chi) - std::max(ylo, clo);
        if (overlap <= kSliverFraction * cell * std::abs(br.slope)) continue;
        acc[j] += overlap * inv_slope * n;
      }
    }
    double total = 0.0;
    for (const auto& [col, w] : acc) total += w;
    for (const auto& [col, w] : acc) m.entries_.push_back({col, w / total});
    m.row_ptr_.push_back(m.entries_.size());
  }
  if (n_cells <= 4096 && static_cast<double>(m.entries_.size()) > 0.25 * n * n) {
    m.dense_.assign(n_cells * n_cells, 0.0);
    for (std::size_t i = 0; i < n_cells; ++i) {
      for (const auto& e : m.row(i)) m.dense_[i * n_cells + e.col] = e.weight;
    }
  }
  return m;
}

GridFunction apply_density(const UlamMatrix& matrix, const GridFunction& d) {
  if (d.size() != matrix.n_cells()) throw GridMismatch("density grid does not match matrix");
  auto out = GridFunction::zeros(d.size());
  matrix.push_forward(d.values(), out.values());
  return out;
}

TwistedOperator make_twisted(std::shared_ptr<const UlamMatrix> base, const GridFunction& g,
                             Complex theta) {
  if (g.size() != base->n_cells()) throw GridMismatch("observable grid does not match matrix");
  return TwistedOperator{std::move(base), exp_twist(g, theta), theta};
}

GridFunction apply_twisted(const TwistedOperator& op, const GridFunction& d) {
  return apply_density(*op.base, combine(op.twist_diag, d, CombineOp::multiply));
}

GridFunction apply_adjoint(const TwistedOperator& op, const GridFunction& phi) {
  if (phi.size() != op.base->n_cells()) throw GridMismatch("functional grid does not match matrix");
  auto pulled = GridFunction::zeros(phi.size());
  op.base->pull_back(phi.values(), pulled.values());
  return combine(op.twist_diag, pulled, CombineOp::multiply);
}

void write_ulam_dump(std::ostream& os, const UlamMatrix& matrix, std::size_t map_index) {
  os << "ulam N=" << matrix.n_cells() << " map=" << map_index << '\n';
  for (std::size_t i = 0; i < matrix.n_cells(); ++i) {
    for (const auto& e : matrix.row(i)) os << i << ' ' << e.col << ' ' << format_double(e.weight) << '\n';
  }
}

TwistedCocycle::TwistedCocycle(MapFamily family, DrivingSystem driving, Observable observable,
                               std::size_t n_cells)
    : family_(std::make_shared<const MapFamily>(std::move(family))),
      driving_(std::make_shared<const DrivingSystem>(std::move(driving))),
      observable_(std::move(observable)),
      n_cells_(n_cells) {
  family_->require_expanding();
  if (driving_->num_symbols() > family_->size()) {
    throw SymbolOutOfRange("driving emits " + std::to_string(driving_->num_symbols()) +
                           " symbols but the family has " + std::to_string(family_->size()) + " maps");
  }
  auto matrices = std::make_shared<std::vector<UlamMatrix>>();
  auto grids = std::make_shared<std::vector<std::vector<double>>>();
  for (std::size_t s = 0; s < family_->size(); ++s) {
    matrices->push_back(build_ulam((*family_)[s], n_cells));
    grids->push_back(observable_.raw_grid(s, n_cells));
  }
  matrices_ = std::move(matrices);
  raw_grids_ = std::move(grids);
}

std::size_t TwistedCocycle::symbol(std::int64_t t) const {
  const std::size_t s = driving_->symbol_at(t);
  if (s >= family_->size()) {
    throw SymbolOutOfRange("symbol " + std::to_string(s) + " at time " + std::to_string(t));
  }
  return s;
}

std::shared_ptr<const UlamMatrix> TwistedCocycle::shared_matrix(std::size_t symbol) const {
  return {matrices_, &(*matrices_)[symbol]};
}

GridFunction TwistedCocycle::observable_grid(std::int64_t t) const {
  const auto raw = raw_grid(symbol(t));
  const double c = observable_.offset(t);
  std::vector<Complex> v(raw.size());
  for (std::size_t i = 0; i < raw.size(); ++i) v[i] = raw[i] - c;
  return GridFunction(std::move(v));
}

TwistedCocycle TwistedCocycle::with_observable(Observable observable) const {
  TwistedCocycle out = *this;
  out.observable_ = std::move(observable);
  auto grids = std::make_shared<std::vector<std::vector<double>>>();
  for (std::size_t s = 0; s < family_->size(); ++s) grids->push_back(out.observable_.raw_grid(s, n_cells_));
  out.raw_grids_ = std::move(grids);
  return out;
}

TwistedCocycle::Slice TwistedCocycle::at(Complex theta) const {
  Slice s;
  s.owner_ = this;
  s.theta_ = theta;
  s.scratch_.resize(n_cells_);
  if (theta != Complex(0.0)) {
    for (std::size_t sym = 0; sym < family_->size(); ++sym) {
      const auto g = raw_grid(sym);
      std::vector<Complex> tw(g.size());
      for (std::size_t i = 0; i < g.size(); ++i) tw[i] = std::exp(theta * g[i]);
      s.twist_.push_back(std::move(tw));
    }
  }
  return s;
}

void TwistedCocycle::Slice::step(std::int64_t t, std::span<const Complex> in,
                                 std::span<Complex> out) const {
  const std::size_t sym = owner_->symbol(t);
  const auto& P = owner_->matrix(sym);
  if (twist_.empty()) {
    P.push_forward(in, out);
    return;
  }
  const Complex shift = std::exp(-theta_ * owner_->observable_.offset(t));
  const auto& tw = twist_[sym];
  for (std::size_t i = 0; i < in.size(); ++i) scratch_[i] = in[i] * tw[i] * shift;
  P.push_forward(scratch_, out);
}

void TwistedCocycle::Slice::step_adjoint(std::int64_t t, std::span<const Complex> in,
                                         std::span<Complex> out) const {
  const std::size_t sym = owner_->symbol(t);
  owner_->matrix(sym).pull_back(in, out);
  if (twist_.empty()) return;
  const Complex shift = std::exp(-theta_ * owner_->observable_.offset(t));
  const auto& tw = twist_[sym];
  for (std::size_t i = 0; i < out.size(); ++i) out[i] *= tw[i] * shift;
}

GridFunction TwistedCocycle::Slice::twist(std::int64_t t) const {
  if (twist_.empty()) return GridFunction::constant(owner_->n_cells_, 1.0);
  const std::size_t sym = owner_->symbol(t);
  const Complex shift = std::exp(-theta_ * owner_->observable_.offset(t));
  std::vector<Complex> v(twist_[sym]);
  for (auto& x : v) x *= shift;
  return GridFunction(std::move(v));
}

TwistedOperator TwistedCocycle::Slice::op(std::int64_t t) const {
  return TwistedOperator{owner_->shared_matrix(owner_->symbol(t)), twist(t), theta_};
}

CocycleResult cocycle_apply(const TwistedCocycle& cocycle, std::int64_t t0, std::size_t n,
                            Complex theta, const GridFunction& d) {
  if (d.size() != cocycle.n_cells()) throw GridMismatch("density grid does not match cocycle");
  CocycleResult res{d, {}};
  if (n == 0) return res;
  const auto slice = cocycle.at(theta);
  auto next = GridFunction::zeros(d.size());
  for (std::size_t k = 0; k < n; ++k) {
    slice.step(t0 + static_cast<std::int64_t>(k), res.result.values(), next.values());
    std::swap(res.result, next);
    res.integrals.push_back(res.result.integral());
  }
  return res;
}

LasotaYorkeFit fit_lasota_yorke(const TwistedCocycle& cocycle, Complex theta, std::int64_t t0,
                                int steps, std::size_t trials, std::uint64_t seed) {
  const std::size_t n = cocycle.n_cells();
  struct Sample {
    double bv_in, l1_in, bv_out;
  };
  std::vector<Sample> rough;
  std::vector<Sample> all;
  for (std::size_t k = 0; k < trials; ++k) {
    GridFunction f;
    const bool is_rough = k % 2 == 0;
    if (is_rough) {
      // Cellwise white noise: l1(f) / bv(f) = O(1/N).
      CounterRng rng(seed, k);
      std::vector<Complex> v(n);
      for (auto& x : v) x = rng.uniform(-1.0, 1.0);
      f = GridFunction(std::move(v));
    } else {
      f = random_step_function(n, seed, k, 0.0, 2.0);
    }
    const auto t = t0 + static_cast<std::int64_t>(k);
    const auto out = cocycle_apply(cocycle, t, static_cast<std::size_t>(steps), theta, f).result;
    const Sample s{bv_norm(f), l1_norm(f), bv_norm(out)};
    all.push_back(s);
    if (is_rough) rough.push_back(s);
  }
  LasotaYorkeFit fit;
  fit.trials = trials;
  for (const auto& s : rough) fit.alpha = std::max(fit.alpha, s.bv_out / s.bv_in);
  for (const auto& s : all) {
    fit.beta = std::max(fit.beta, (s.bv_out - fit.alpha * s.bv_in) / s.l1_in);
  }
  fit.beta = std::max(fit.beta, 0.0);
  return fit;
}

}  // namespace qspec
