#pragma once

#include <complex>
#include <functional>
#include <iostream>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace hfcert {

using Cplx = std::complex<double>;
using CMat = Eigen::MatrixXcd;
using RMat = Eigen::MatrixXd;
using CVec = Eigen::VectorXcd;
using RVec = Eigen::VectorXd;
using Index = Eigen::Index;

// Invalid or inconsistent input data. The CLI maps this to exit code 3.
struct InvalidInput : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

// Numerical breakdown inside a solver (singular system, no convergence).
// The CLI maps this to exit code 4.
struct SolverFailure : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Two evaluation paths that must agree disagreed beyond tolerance.
struct ConsistencyError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// A constructive routine could not produce an object satisfying its
// contract (e.g. no admissible weight matrix exists for given points).
struct ConstructionFailed : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Hook for non-fatal numerical warnings; tests may swap it out.
inline std::function<void(const std::string&)>& warn_handler() {
  static std::function<void(const std::string&)> h = [](const std::string& m) {
    std::cerr << "warning: " << m << "\n";
  };
  return h;
}

inline void warn(const std::string& m) { warn_handler()(m); }

}  // namespace hfcert
