#pragma once

#include <stdexcept>
#include <string>

namespace qgraph {

enum class ErrorKind {
  Input,         // malformed or invalid user data
  Precondition,  // valid data, but the requested method does not apply
  Numerical,     // a numerical certificate could not be met
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

inline Error input_error(const std::string& what) { return Error(ErrorKind::Input, what); }
inline Error precondition_error(const std::string& what) {
  return Error(ErrorKind::Precondition, what);
}
inline Error numerical_error(const std::string& what) { return Error(ErrorKind::Numerical, what); }

// Raised when a DtN block is requested at (or numerically next to) a
// Dirichlet eigenvalue of an edge.
class DirichletSingularity : public Error {
 public:
  DirichletSingularity(std::string edge, double nearest)
      : Error(ErrorKind::Precondition,
              "Dirichlet singularity on edge '" + edge + "' (nearest Dirichlet eigenvalue " +
                  std::to_string(nearest) +
                  "); use the dotted or intersection backend"),
        edge_(std::move(edge)),
        nearest_(nearest) {}

  const std::string& edge() const noexcept { return edge_; }
  double nearest() const noexcept { return nearest_; }

 private:
  std::string edge_;
  double nearest_;
};

}  // namespace qgraph
