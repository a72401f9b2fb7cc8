#pragma once

#include <stdexcept>
#include <string>

namespace lus {

/// Invalid or inconsistent input data: manifests, image files, fold plans.
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Model/weight problems: shape mismatches, missing parameter slots,
/// malformed weight archives.
class ModelError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace lus
