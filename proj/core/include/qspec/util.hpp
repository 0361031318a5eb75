#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <string>
#include <string_view>
#include <vector>

namespace qspec {

[[nodiscard]] std::string trim(std::string_view s);
[[nodiscard]] std::vector<std::string> split(std::string_view s, char sep);
/// Throws InvalidArgument on malformed input.
[[nodiscard]] double parse_double(std::string_view s);
[[nodiscard]] std::int64_t parse_int(std::string_view s);
[[nodiscard]] std::vector<double> parse_double_list(std::string_view s, char sep = ',');

/// Shortest round-trip decimal form; locale independent, so artifacts are
/// byte-identical across runs.
[[nodiscard]] std::string format_double(double v);

/// Runs body(i) for i in [0, n) on up to `workers` threads with a static
/// partition. Callers write results into index-addressed slots, which keeps
/// output independent of scheduling.
void parallel_for(std::size_t n, unsigned workers, const std::function<void(std::size_t)>& body);

}  // namespace qspec
