#pragma once

#include <stdexcept>
#include <string>

namespace pbwpcn {

// Argument outside an operation's mathematical domain. Alias kept so call
// sites read as intent rather than as a std type.
using DomainError = std::domain_error;

/// An iterative solver exhausted its iteration budget.
class ConvergenceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A distributed-protocol invariant was broken (e.g. an AP tried to message
/// another AP). Always an implementation bug, never a user error.
class ProtocolViolation : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

}  // namespace pbwpcn
