#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace groupcf {

enum class Errc {
  duplicate_feature_name,
  empty_bins,
  non_monotone_bin_edges,
  unknown_category_level,
  missing_field,
  io_failure,
  header_mismatch,
  row_encoding,
  invalid_instance,
  dimension_mismatch,
  unbounded_activation,
  single_class_data,
  invalid_model,
  numerical_breakdown,
  not_negative,
  infeasible_encoding,
  infeasible,
  no_negative_instances,
  invalid_config,
};

std::string_view to_string(Errc code);

// Single exception type for the library. `ids` carries the offending
// instance indices (for infeasibility / negativity errors) or the CSV line
// number (for row encoding errors).
class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what, std::vector<std::size_t> ids = {});

  Errc code() const noexcept { return code_; }
  const std::vector<std::size_t>& ids() const noexcept { return ids_; }

 private:
  Errc code_;
  std::vector<std::size_t> ids_;
};

}  // namespace groupcf
