#pragma once

#include <stdexcept>
#include <string>

namespace mdp_tcm {

// Bad or missing data: empty datasets, IO failures, dimension mismatches
// between a model and the frames it is applied to.
class DataError : public std::runtime_error {
 public:
  explicit DataError(const std::string& what) : std::runtime_error(what) {}
};

// Training produced a non-finite parameter or loss.
class NumericError : public std::runtime_error {
 public:
  explicit NumericError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace mdp_tcm
