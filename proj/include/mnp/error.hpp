#pragma once

#include <stdexcept>
#include <string>

namespace mnp {

class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

class InvalidParameter : public Error {
public:
  using Error::Error;
};

class InvalidInput : public Error {
public:
  using Error::Error;
};

class InvalidMesh : public Error {
public:
  using Error::Error;
};

class OutOfRange : public Error {
public:
  using Error::Error;
};

class ConvergenceError : public Error {
public:
  using Error::Error;
};

// integration failures remember where they happened
class StiffnessFailure : public Error {
public:
  StiffnessFailure(const std::string& what, double t) : Error(what), time(t) {}
  double time;
};

class DivergenceError : public Error {
public:
  DivergenceError(const std::string& what, double t) : Error(what), time(t) {}
  double time;
};

}  // namespace mnp
