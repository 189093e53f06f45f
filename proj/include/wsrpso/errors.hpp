#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace wsrpso {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Configuration or input that violates a documented invariant. Carries every
/// violation found, not just the first.
class ValidationError : public Error {
 public:
  explicit ValidationError(std::vector<std::string> messages)
      : Error(join(messages)), messages_(std::move(messages)) {}
  explicit ValidationError(const std::string& message)
      : ValidationError(std::vector<std::string>{message}) {}

  const std::vector<std::string>& messages() const noexcept { return messages_; }

 private:
  static std::string join(const std::vector<std::string>& parts) {
    std::string out;
    for (const auto& p : parts) {
      if (!out.empty()) out += "; ";
      out += p;
    }
    return out;
  }

  std::vector<std::string> messages_;
};

class NumericalError : public Error {
 public:
  using Error::Error;
};

/// A factorization met a non-positive pivot.
class SingularityError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

/// The interference-plus-noise covariance seen through a decoder is singular
/// while the signal term is not.
class DegenerateDecoderError : public NumericalError {
 public:
  explicit DegenerateDecoderError(std::size_t user)
      : NumericalError("degenerate decoder for user " + std::to_string(user) +
                       ": interference-plus-noise covariance is singular"),
        user_(user) {}
  std::size_t user() const noexcept { return user_; }

 private:
  std::size_t user_;
};

/// The closed-form block-diagonalization rate was requested for a system whose
/// interference is not nulled.
class InfeasibleError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace wsrpso
