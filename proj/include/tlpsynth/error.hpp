#pragma once

#include <stdexcept>
#include <string>

namespace tlpsynth {

/// Thrown on any domain, format, or dimension violation. The CLI maps this
/// to exit code 1; usage problems are handled separately by the parser.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace tlpsynth
