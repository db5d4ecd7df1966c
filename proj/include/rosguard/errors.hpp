#pragma once

#include <stdexcept>
#include <string>

namespace rosguard {

struct RankDeficientError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct DimMismatchError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

struct UnboundedSetError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct InfeasibleDualError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct TooLargeError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

struct DivergedError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct AlreadyFiredError : std::logic_error {
  using std::logic_error::logic_error;
};

struct RankRetryExhaustedError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace rosguard
