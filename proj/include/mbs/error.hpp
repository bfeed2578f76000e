#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace mbs {

// Failure categories surfaced to callers and mapped onto CLI exit codes.
enum class ErrorCategory {
  kSchema,            // document does not match the published schema
  kChain,             // spatial/channel sizes disagree along an edge
  kPartition,         // macroblocks do not partition the conv layers
  kCycle,             // an edge points at itself or at a later layer
  kFingerprint,       // stats/plan were produced for another model
  kMissingLayer,      // stats do not cover every conv layer
  kOutOfRange,        // numeric argument outside its domain
  kPlanMismatch,      // plan and graph disagree on macroblocks
  kBudget,            // simulation would exceed the activation budget
  kIo,                // file could not be read or written
  kDegenerate,        // planner fell back on all-zero activations
};

std::string_view category_name(ErrorCategory category);

class Error : public std::runtime_error {
 public:
  Error(ErrorCategory category, const std::string& detail)
      : std::runtime_error(std::string(category_name(category)) + ": " + detail),
        category_(category),
        detail_(detail) {}

  ErrorCategory category() const noexcept { return category_; }
  const std::string& detail() const noexcept { return detail_; }

 private:
  ErrorCategory category_;
  std::string detail_;
};

}  // namespace mbs
