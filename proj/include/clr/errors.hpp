#ifndef CLR_ERRORS_HPP
#define CLR_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace clr {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ShapeMismatch : public Error {
 public:
  using Error::Error;
};

/// P or Q (or A) failed to factorize as symmetric positive definite.
class FactorizationError : public Error {
 public:
  using Error::Error;
};

class RankDeficiencyError : public Error {
 public:
  using Error::Error;
};

class InvalidParams : public Error {
 public:
  using Error::Error;
};

class DegenerateData : public Error {
 public:
  using Error::Error;
};

class NonFiniteObjective : public Error {
 public:
  using Error::Error;
};

class ConstantTruth : public Error {
 public:
  using Error::Error;
};

class TooFewSamples : public Error {
 public:
  using Error::Error;
};

class ZeroBeta : public Error {
 public:
  using Error::Error;
};

/// Input file could not be parsed; the message names file and line.
class MalformedInput : public Error {
 public:
  using Error::Error;
};

}  // namespace clr

#endif  // CLR_ERRORS_HPP
