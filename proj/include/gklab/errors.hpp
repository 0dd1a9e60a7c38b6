#pragma once

#include <stdexcept>
#include <string>

namespace gk {

/// Input outside an operation's domain (bad density value, malformed table).
class DomainError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A numerical procedure could not meet its contract (step bound, Newton
/// divergence, iteration cap, broken invariant).
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid or unreadable experiment configuration.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace gk
