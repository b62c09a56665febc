#pragma once

#include <stdexcept>
#include <string>

namespace cpcone {

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct DimensionMismatch : Error {
  using Error::Error;
};
struct NonHermitian : Error {
  using Error::Error;
};
struct NoConvergence : Error {
  using Error::Error;
};
struct BadProgram : Error {
  using Error::Error;
};
struct BadParameter : Error {
  using Error::Error;
};
struct ParameterOutOfRange : Error {
  using Error::Error;
};
struct ZeroVector : Error {
  using Error::Error;
};
struct NotUnitNorm : Error {
  using Error::Error;
};
struct NotQubit : Error {
  using Error::Error;
};
struct NotDensityMatrix : Error {
  using Error::Error;
};
struct NotDnn : Error {
  using Error::Error;
};
struct NotCp : Error {
  using Error::Error;
};
struct NotPsd : Error {
  using Error::Error;
};
struct NotUnitalCpcp : Error {
  using Error::Error;
};
struct NonHermiticityPreserving : Error {
  using Error::Error;
};
struct DimensionTooLarge : Error {
  using Error::Error;
};
struct SolverStalled : Error {
  using Error::Error;
};
struct JsonFormat : Error {
  using Error::Error;
};

}  // namespace cpcone
