#pragma once

#include <stdexcept>
#include <string>

namespace stochchain {

// Input outside an operation's domain (empty chain, missing per-level data,
// mismatched sample lengths).
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

// Caller broke a documented precondition (n < 2, bad bracket, too few trials).
class PreconditionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// A numerical invariant failed: negative level data, non-convex CGF,
// a bound ordering that must hold but did not.
class InvariantViolation : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

}  // namespace stochchain
