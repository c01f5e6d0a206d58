#ifndef SNOWFUSE_ERROR_HPP
#define SNOWFUSE_ERROR_HPP

#include <stdexcept>
#include <string>

namespace snowfuse {

/**
 * Base of every error raised by the library. The CLI maps the concrete
 * subclass onto a process exit code.
 */
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid scalar argument (non-positive factor, sigma <= 0, unknown name).
class ArgumentError : public Error {
 public:
  using Error::Error;
};

/// Raster dimensions unsuitable for the operation.
class DimensionError : public Error {
 public:
  using Error::Error;
};

/// Two rasters (or a raster and a mask) that do not share a GridSpec.
class GridMismatchError : public Error {
 public:
  using Error::Error;
};

/// Tensor shapes that do not agree.
class ShapeError : public Error {
 public:
  using Error::Error;
};

/// Malformed or truncated file content. Message names the file and field.
class ParseError : public Error {
 public:
  using Error::Error;
};

/// File could not be opened, read or written.
class IoError : public Error {
 public:
  using Error::Error;
};

/// Weather series lacks one or more days of a requested window.
class GapError : public Error {
 public:
  using Error::Error;
};

/// Inconsistent model/training/CLI configuration.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Nothing left to score after masking.
class EmptyEvaluationError : public Error {
 public:
  using Error::Error;
};

/// Required measurements are absent (e.g. no station reporting).
class NoDataError : public Error {
 public:
  using Error::Error;
};

/// Sample whose year falls in none of the configured splits.
class UnassignedYearError : public Error {
 public:
  using Error::Error;
};

/// Training produced a non-finite loss.
class NumericalError : public Error {
 public:
  using Error::Error;
};

}  // namespace snowfuse

#endif  // SNOWFUSE_ERROR_HPP
