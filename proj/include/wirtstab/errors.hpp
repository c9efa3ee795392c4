#pragma once

#include <stdexcept>
#include <string>

namespace wirtstab {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

// casemodel
class SyntaxError : public Error {
  public:
    SyntaxError(std::size_t position, std::string token, const std::string& what)
        : Error("syntax error at offset " + std::to_string(position) + " near '" + token + "': " + what),
          position_(position), token_(std::move(token)) {}
    std::size_t position() const noexcept { return position_; }
    const std::string& token() const noexcept { return token_; }

  private:
    std::size_t position_;
    std::string token_;
};

class SemanticError : public Error {
  public:
    using Error::Error;
};

// numerics
class SingularMatrix : public Error {
  public:
    using Error::Error;
};

class NoConvergence : public Error {
  public:
    using Error::Error;
};

class DimensionMismatch : public Error {
  public:
    using Error::Error;
};

// thevenin
class SingularReducedAdmittance : public Error {
  public:
    using Error::Error;
};

// powerflow
class SingularJacobianAtIterate : public Error {
  public:
    SingularJacobianAtIterate(int iteration, const std::string& what)
        : Error("singular Jacobian at iteration " + std::to_string(iteration) + ": " + what), iteration_(iteration) {}
    int iteration() const noexcept { return iteration_; }

  private:
    int iteration_;
};

class ModeOscillation : public Error {
  public:
    using Error::Error;
};

// wirtinger
class DegenerateInput : public Error {
  public:
    DegenerateInput(int bus, const std::string& what)
        : Error(bus >= 0 ? "bus " + std::to_string(bus) + ": " + what : what), bus_(bus) {}
    /// Bus id the degeneracy was detected at, or -1 when not bus specific.
    int bus() const noexcept { return bus_; }

  private:
    int bus_;
};

// indices
class SingularLoadBlock : public Error {
  public:
    using Error::Error;
};

// sweep
class InvalidBracket : public Error {
  public:
    using Error::Error;
};

// equivalence
class SingularColumnMap : public Error {
  public:
    using Error::Error;
};

} // namespace wirtstab
