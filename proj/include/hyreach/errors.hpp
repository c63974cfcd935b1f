#pragma once

#include <stdexcept>
#include <string>

namespace hyreach {

/// Base class for all library errors.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// Formula frontend.
class SyntaxError : public Error {
 public:
  SyntaxError(const std::string& msg, std::size_t position)
      : Error(msg + " (at position " + std::to_string(position) + ")"),
        position(position) {}
  std::size_t position;
};

class UnknownObservation : public Error {
 public:
  using Error::Error;
};

class NegationOfNonObservation : public Error {
 public:
  using Error::Error;
};

class EmptyWord : public Error {
 public:
  using Error::Error;
};

// Automaton.
class EmptyLanguage : public Error {
 public:
  using Error::Error;
};

class EmptyPolicySet : public Error {
 public:
  using Error::Error;
};

// Numerics.
class RankDeficient : public Error {
 public:
  using Error::Error;
};

class BarrierDomain : public Error {
 public:
  using Error::Error;
};

class WindowTooShort : public Error {
 public:
  using Error::Error;
};

class GammaNotSPD : public Error {
 public:
  using Error::Error;
};

class NumericalBlowup : public Error {
 public:
  using Error::Error;
};

// Configuration and I/O.
class ParseError : public Error {
 public:
  using Error::Error;
};

class ValidationError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace hyreach
