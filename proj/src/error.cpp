#include "mbs/error.hpp"

namespace mbs {

std::string_view category_name(ErrorCategory category) {
  switch (category) {
    case ErrorCategory::kSchema:
      return "schema";
    case ErrorCategory::kChain:
      return "chain-inconsistency";
    case ErrorCategory::kPartition:
      return "partition";
    case ErrorCategory::kCycle:
      return "cycle";
    case ErrorCategory::kFingerprint:
      return "fingerprint-mismatch";
    case ErrorCategory::kMissingLayer:
      return "missing-layer";
    case ErrorCategory::kOutOfRange:
      return "out-of-range";
    case ErrorCategory::kPlanMismatch:
      return "plan-mismatch";
    case ErrorCategory::kBudget:
      return "budget-exceeded";
    case ErrorCategory::kIo:
      return "io";
    case ErrorCategory::kDegenerate:
      return "degenerate";
  }
  return "unknown";
}

}  // namespace mbs
