#pragma once

#include "volrec/matrix.hpp"

namespace volrec::qp {

/// min 0.5 x'Gx + g'x  s.t.  E'x + e = 0,  I'x + i >= 0.
/// Constraints are stored column-wise: E is n x me, I is n x mi.
struct Problem {
    Matrix g_mat;
    Vector g_vec;
    Matrix eq;
    Vector eq0;
    Matrix ineq;
    Vector ineq0;
};

struct Solution {
    Vector x;
    double value = 0.0;
    Vector eq_multipliers;
    Vector ineq_multipliers;  // zero for inactive constraints
    int iterations = 0;
};

/// Dual active-set method of Goldfarb and Idnani for strictly convex problems.
/// Throws NumericalFailure when G is not positive definite or the active set
/// becomes degenerate, InfeasibleReconciliation when the constraints admit no
/// point.
Solution solve(const Problem& p, int max_iterations = 1000);

}  // namespace volrec::qp
