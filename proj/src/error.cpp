#include "groupcf/error.hpp"

namespace groupcf {

std::string_view to_string(Errc code) {
  switch (code) {
    case Errc::duplicate_feature_name: return "DuplicateFeatureName";
    case Errc::empty_bins: return "EmptyBins";
    case Errc::non_monotone_bin_edges: return "NonMonotoneBinEdges";
    case Errc::unknown_category_level: return "UnknownCategoryLevel";
    case Errc::missing_field: return "MissingField";
    case Errc::io_failure: return "IoFailure";
    case Errc::header_mismatch: return "HeaderMismatch";
    case Errc::row_encoding: return "RowEncodingError";
    case Errc::invalid_instance: return "InvalidInstance";
    case Errc::dimension_mismatch: return "DimensionMismatch";
    case Errc::unbounded_activation: return "UnboundedActivation";
    case Errc::single_class_data: return "SingleClassData";
    case Errc::invalid_model: return "InvalidModel";
    case Errc::numerical_breakdown: return "NumericalBreakdown";
    case Errc::not_negative: return "NotNegative";
    case Errc::infeasible_encoding: return "InfeasibleEncoding";
    case Errc::infeasible: return "Infeasible";
    case Errc::no_negative_instances: return "NoNegativeInstances";
    case Errc::invalid_config: return "InvalidConfig";
  }
  return "Unknown";
}

Error::Error(Errc code, const std::string& what, std::vector<std::size_t> ids)
    : std::runtime_error(std::string(to_string(code)) + ": " + what),
      code_(code),
      ids_(std::move(ids)) {}

}  // namespace groupcf
