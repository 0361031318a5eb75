#include "qspec/observable.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "qspec/bv_calculus.hpp"
#include "qspec/util.hpp"

namespace qspec {

namespace {

const std::vector<double>& table_for(const TableSpec& t, std::size_t symbol) {
  if (t.per_symbol.size() == 1) return t.per_symbol.front();
  if (symbol >= t.per_symbol.size()) {
    throw SymbolOutOfRange("observable table has no entry for symbol " + std::to_string(symbol));
  }
  return t.per_symbol[symbol];
}

}  // namespace

Observable::Observable(Spec spec) : spec_(std::move(spec)) {
  if (const auto* t = std::get_if<TableSpec>(&spec_)) {
    if (t->per_symbol.empty()) throw InvalidArgument("table observable needs at least one table");
    for (const auto& row : t->per_symbol) {
      if (row.size() < 2 || !is_power_of_two(row.size()))
        throw InvalidArgument("observable table length must be a power of two >= 2");
      for (double v : row) {
        if (!std::isfinite(v)) throw InvalidArgument("observable table value not finite");
      }
    }
  }
  if (const auto* ind = std::get_if<IndicatorSpec>(&spec_)) {
    if (!(ind->threshold >= 0.0 && ind->threshold <= 1.0))
      throw InvalidArgument("indicator threshold must lie in [0,1]");
  }
}

Observable Observable::cosine(int k, double amplitude) { return trig({{k, amplitude}}); }

Observable Observable::trig(std::vector<CosineTerm> terms) { return Observable(TrigSpec{std::move(terms)}); }

Observable Observable::indicator(double threshold, double amplitude, double offset) {
  return Observable(IndicatorSpec{threshold, amplitude, offset});
}

Observable Observable::table(std::vector<std::vector<double>> per_symbol) {
  return Observable(TableSpec{std::move(per_symbol)});
}

double Observable::raw(std::size_t symbol, double x) const {
  if (const auto* t = std::get_if<TrigSpec>(&spec_)) {
    double s = 0.0;
    for (const auto& term : t->terms) s += term.amplitude * std::cos(2.0 * std::numbers::pi * term.k * x);
    return s;
  }
  if (const auto* ind = std::get_if<IndicatorSpec>(&spec_)) {
    return (x >= ind->threshold ? ind->amplitude : 0.0) - ind->offset;
  }
  const auto& row = table_for(std::get<TableSpec>(spec_), symbol);
  const auto idx = std::min(row.size() - 1, static_cast<std::size_t>(x * static_cast<double>(row.size())));
  return row[idx];
}

std::vector<double> Observable::raw_grid(std::size_t symbol, std::size_t n_cells) const {
  std::vector<double> out(n_cells);
  for (std::size_t i = 0; i < n_cells; ++i) out[i] = raw(symbol, GridFunction::midpoint(n_cells, i));
  return out;
}

double Observable::raw_sup() const {
  if (const auto* t = std::get_if<TrigSpec>(&spec_)) {
    double s = 0.0;
    for (const auto& term : t->terms) s += std::abs(term.amplitude);
    return s;
  }
  if (const auto* ind = std::get_if<IndicatorSpec>(&spec_)) {
    return std::max(std::abs(ind->amplitude - ind->offset), std::abs(ind->offset));
  }
  double s = 0.0;
  for (const auto& row : std::get<TableSpec>(spec_).per_symbol) {
    for (double v : row) s = std::max(s, std::abs(v));
  }
  return s;
}

double Observable::sup_bound() const {
  double shift = 0.0;
  for (double o : offsets_) shift = std::max(shift, std::abs(o));
  return raw_sup() + shift;
}

double Observable::offset(std::int64_t t) const {
  if (!centered_) return 0.0;
  if (t < window_begin() || t >= window_end()) {
    throw OutOfWindow("fiber time " + std::to_string(t) + " outside centering window [" +
                      std::to_string(window_begin()) + ", " + std::to_string(window_end()) + ")");
  }
  return offsets_[static_cast<std::size_t>(t - window_begin_)];
}

Observable Observable::with_offsets(std::int64_t window_begin, std::vector<double> offsets) const {
  Observable out(spec_);
  out.centered_ = true;
  out.window_begin_ = window_begin;
  out.offsets_ = std::move(offsets);
  return out;
}

std::size_t Observable::symbol_count() const noexcept {
  if (const auto* t = std::get_if<TableSpec>(&spec_)) {
    return t->per_symbol.size() == 1 ? 0 : t->per_symbol.size();
  }
  return 0;
}

std::string Observable::describe() const {
  std::string out;
  if (const auto* t = std::get_if<TrigSpec>(&spec_)) {
    out = "cosine(";
    for (std::size_t i = 0; i < t->terms.size(); ++i) {
      if (i) out += ", ";
      out += std::to_string(t->terms[i].k) + ":" + format_double(t->terms[i].amplitude);
    }
    out += ")";
  } else if (const auto* ind = std::get_if<IndicatorSpec>(&spec_)) {
    out = "indicator(threshold=" + format_double(ind->threshold) + ", amplitude=" +
          format_double(ind->amplitude) + ", offset=" + format_double(ind->offset) + ")";
  } else {
    out = "table(" + std::to_string(std::get<TableSpec>(spec_).per_symbol.size()) + " symbols)";
  }
  if (centered_) out += " centered";
  return out;
}

}  // namespace qspec
