#pragma once

#include <stdexcept>
#include <string>

namespace pcons {

/// Exit-code classes used by the CLI. Library errors carry the class so the
/// front end maps outcomes to process exit codes without string matching.
enum class ErrorClass : int {
  verification = 1,  // a requested certificate failed
  input = 2,         // malformed file, bad parameter, dimension mismatch
  invariant = 3,     // a domain invariant was violated (e.g. A not Metzler)
  infeasible = 4,    // synthesis could not reach a feasible point
  integration = 5,   // simulation blew up
};

class Error : public std::runtime_error {
 public:
  Error(ErrorClass cls, const std::string& what) : std::runtime_error(what), cls_(cls) {}
  ErrorClass error_class() const { return cls_; }
  int exit_code() const { return static_cast<int>(cls_); }

 private:
  ErrorClass cls_;
};

struct DimensionError : Error {
  explicit DimensionError(const std::string& what) : Error(ErrorClass::input, what) {}
};

struct ParameterError : Error {
  explicit ParameterError(const std::string& what) : Error(ErrorClass::input, what) {}
};

struct ParseError : Error {
  explicit ParseError(const std::string& what) : Error(ErrorClass::input, what) {}
};

struct InvariantError : Error {
  explicit InvariantError(const std::string& what) : Error(ErrorClass::invariant, what) {}
};

/// Graph-structure failures (not strongly connected, defective null space, ...).
struct StructureError : Error {
  explicit StructureError(const std::string& what) : Error(ErrorClass::invariant, what) {}
};

struct InfeasibleError : Error {
  explicit InfeasibleError(const std::string& what) : Error(ErrorClass::infeasible, what) {}
};

class IntegrationError : public Error {
 public:
  IntegrationError(double last_valid_time, const std::string& what)
      : Error(ErrorClass::integration, what), last_valid_time_(last_valid_time) {}
  double last_valid_time() const { return last_valid_time_; }

 private:
  double last_valid_time_;
};

}  // namespace pcons
