#pragma once

// Self-contained SVG plots of CSV artifacts.

#include <string>
#include <string_view>
#include <vector>

#include "qspec/config.hpp"

namespace qspec {

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  /// Throws SchemaMismatch when the column is absent.
  [[nodiscard]] std::vector<double> column(const std::string& name) const;
};

/// Throws SchemaMismatch on an empty document or ragged rows.
[[nodiscard]] CsvTable parse_csv(std::string_view text);

/// Column names written for each kind.
[[nodiscard]] const std::vector<std::string>& csv_schema(ExperimentKind kind);

/// lambda: Lambda(theta) polyline, zero line and tangent at 0; ldp: measured
/// rate against c(eps); lclt: statistic and target overlay.
/// Throws SchemaMismatch if the header does not match the kind, there are no
/// data rows, or the kind has no plot.
[[nodiscard]] std::string emit_plot(std::string_view csv_text, ExperimentKind kind);

}  // namespace qspec
