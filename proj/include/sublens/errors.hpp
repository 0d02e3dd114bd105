#pragma once

#include <stdexcept>
#include <string>

namespace sublens {

// Base for every error raised by the library. The CLI maps these to exit code 1.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ShapeError : public Error {
 public:
  using Error::Error;
};

// Zero-norm vector handed to cosine; metrics turn this into a flagged sample.
class DegenerateVectorError : public Error {
 public:
  using Error::Error;
};

class InsufficientSamplesError : public Error {
 public:
  using Error::Error;
};

class IndexError : public Error {
 public:
  using Error::Error;
};

class LengthError : public Error {
 public:
  using Error::Error;
};

class LoadError : public Error {
 public:
  using Error::Error;
};

class NumericError : public Error {
 public:
  using Error::Error;
};

// WESim requested for a sub-layer whose width differs from the static embedding.
class DimensionalityMismatchError : public Error {
 public:
  using Error::Error;
};

class CorpusError : public Error {
 public:
  using Error::Error;
};

class EmptyCorpusError : public CorpusError {
 public:
  using CorpusError::CorpusError;
};

}  // namespace sublens
