#pragma once

// Fiber observables g(t, x) = g_{symbol(t)}(x) - offset(t). Offsets are set
// by fiberwise centering and are only known on a finite window of times.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "qspec/errors.hpp"

namespace qspec {

struct CosineTerm {
  int k = 1;
  double amplitude = 1.0;

  friend bool operator==(const CosineTerm&, const CosineTerm&) = default;
};

/// sum_k a_k cos(2 pi k x), identical on every fiber.
struct TrigSpec {
  std::vector<CosineTerm> terms;
};

/// amplitude * 1_[threshold, 1)(x) - offset, identical on every fiber.
struct IndicatorSpec {
  double threshold = 0.5;
  double amplitude = 1.0;
  double offset = 0.0;
};

/// Piecewise-constant values per symbol; each table length a power of two >= 2.
/// A single table is shared by all symbols.
struct TableSpec {
  std::vector<std::vector<double>> per_symbol;
};

class Observable {
 public:
  using Spec = std::variant<TrigSpec, IndicatorSpec, TableSpec>;

  explicit Observable(Spec spec);

  [[nodiscard]] static Observable cosine(int k = 1, double amplitude = 1.0);
  [[nodiscard]] static Observable trig(std::vector<CosineTerm> terms);
  [[nodiscard]] static Observable indicator(double threshold, double amplitude = 1.0,
                                            double offset = 0.0);
  [[nodiscard]] static Observable table(std::vector<std::vector<double>> per_symbol);
  [[nodiscard]] static Observable zero() { return trig({}); }

  [[nodiscard]] const Spec& spec() const noexcept { return spec_; }

  /// Uncentered value g_s(x).
  [[nodiscard]] double raw(std::size_t symbol, double x) const;
  /// g_s sampled at the midpoints of an n_cells grid.
  [[nodiscard]] std::vector<double> raw_grid(std::size_t symbol, std::size_t n_cells) const;
  /// sup_x |g_s(x)| over all symbols, before centering.
  [[nodiscard]] double raw_sup() const;
  /// Bound M on |g(t, x)| including the centering offsets.
  [[nodiscard]] double sup_bound() const;

  [[nodiscard]] bool centered() const noexcept { return centered_; }
  [[nodiscard]] std::int64_t window_begin() const noexcept { return window_begin_; }
  [[nodiscard]] std::int64_t window_end() const noexcept { return window_begin_ + static_cast<std::int64_t>(offsets_.size()); }
  /// Centering offset at fiber time t; 0 when uncentered. Throws OutOfWindow.
  [[nodiscard]] double offset(std::int64_t t) const;
  [[nodiscard]] const std::vector<double>& offsets() const noexcept { return offsets_; }

  /// g(t, x) = raw(symbol, x) - offset(t).
  [[nodiscard]] double value(std::size_t symbol, std::int64_t t, double x) const {
    return raw(symbol, x) - offset(t);
  }

  /// Copy with centering offsets for times [window_begin, window_begin + offsets.size()).
  [[nodiscard]] Observable with_offsets(std::int64_t window_begin, std::vector<double> offsets) const;

  /// Largest symbol + 1 this observable distinguishes (0: any symbol).
  [[nodiscard]] std::size_t symbol_count() const noexcept;

  [[nodiscard]] std::string describe() const;

 private:
  Spec spec_;
  bool centered_ = false;
  std::int64_t window_begin_ = 0;
  std::vector<double> offsets_;
};

}  // namespace qspec
