#pragma once

#include <stdexcept>
#include <string>

namespace qkdfs {

/// Input outside an operation's mathematical domain (bad counts, invalid
/// probabilities, violated intensity ordering, ...).
class DomainError : public std::domain_error {
 public:
  explicit DomainError(const std::string& what) : std::domain_error(what) {}
};

/// An iterative numeric routine failed to converge or produced a non-finite
/// intermediate.
class NumericError : public std::runtime_error {
 public:
  explicit NumericError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace qkdfs
