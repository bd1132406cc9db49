#pragma once

#include <stdexcept>
#include <string>

namespace aerotraj {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

#define AEROTRAJ_DEFINE_ERROR(Name)       \
  class Name : public Error {             \
  public:                                 \
    using Error::Error;                   \
  }

// geometry
AEROTRAJ_DEFINE_ERROR(DegenerateProjection);
AEROTRAJ_DEFINE_ERROR(SingularResult);
AEROTRAJ_DEFINE_ERROR(NonConvexInput);

// registration
AEROTRAJ_DEFINE_ERROR(MissingDistances);
AEROTRAJ_DEFINE_ERROR(DegenerateConfiguration);
AEROTRAJ_DEFINE_ERROR(InsufficientPoints);
AEROTRAJ_DEFINE_ERROR(NoModelFound);

// georeference
AEROTRAJ_DEFINE_ERROR(UnknownVideo);
AEROTRAJ_DEFINE_ERROR(UnknownIntersection);

// dimensions
AEROTRAJ_DEFINE_ERROR(EmptyVisibilitySet);
AEROTRAJ_DEFINE_ERROR(DivisionByZero);
AEROTRAJ_DEFINE_ERROR(EmptySet);

// kinematics
AEROTRAJ_DEFINE_ERROR(TooShort);

// metrics
AEROTRAJ_DEFINE_ERROR(DegenerateSegment);

// dataio / configuration
AEROTRAJ_DEFINE_ERROR(IoFailure);
AEROTRAJ_DEFINE_ERROR(ConfigError);

#undef AEROTRAJ_DEFINE_ERROR

/// A homography was required for a frame but none was supplied.
class MissingHomography : public Error {
public:
  explicit MissingHomography(int frame)
      : Error("missing homography for frame " + std::to_string(frame)), frame_(frame) {}
  int frame() const noexcept { return frame_; }

private:
  int frame_;
};

/// Errors tied to a line of an input file (1-based, header is line 1).
class LineError : public Error {
public:
  LineError(const std::string& kind, std::size_t line, const std::string& what)
      : Error(kind + " at line " + std::to_string(line) + ": " + what), line_(line) {}
  std::size_t line() const noexcept { return line_; }

private:
  std::size_t line_;
};

class ParseError : public LineError {
public:
  ParseError(std::size_t line, const std::string& what) : LineError("parse error", line, what) {}
};

class InvariantViolation : public LineError {
public:
  InvariantViolation(std::size_t line, const std::string& what)
      : LineError("invariant violation", line, what) {}
};

}  // namespace aerotraj
