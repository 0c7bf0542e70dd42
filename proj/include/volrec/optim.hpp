#pragma once

#include "volrec/matrix.hpp"

#include <functional>
#include <string>

namespace volrec::optim {

using Objective = std::function<double(const Vector&)>;

struct Options {
    int max_iterations = 500;
    /// Stop once |f_k - f_{k-1}| <= rel_tol * (|f_k| + rel_tol).
    double rel_tol = 1e-8;
    /// Nelder-Mead initial simplex edge / BFGS first trial step.
    double initial_step = 0.1;
    /// Nelder-Mead also stops when the simplex characteristic size falls below this.
    double size_tol = 1e-7;
};

struct Result {
    Vector x;
    double value = 0.0;
    int iterations = 0;
    bool converged = false;
    std::string message;
};

/// Derivative-free simplex minimization (GSL nmsimplex2).
Result nelder_mead(const Objective& f, const Vector& x0, const Options& options = {});

/// Quasi-Newton minimization (GSL vector_bfgs2) with central finite-difference gradients.
Result bfgs(const Objective& f, const Vector& x0, const Options& options = {});

/// Central-difference gradient with step h * max(1, |x_i|).
Vector numerical_gradient(const Objective& f, const Vector& x, double h = 1e-6);

}  // namespace volrec::optim
