#pragma once

#include <stdexcept>
#include <string>

namespace scorecard {

// Runtime failure inside a pipeline stage (bad data, numerical breakdown).
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Invalid configuration or input that fails validation. The CLI maps this
// to exit code 2.
class ConfigError : public Error {
 public:
  using Error::Error;
};

}  // namespace scorecard
