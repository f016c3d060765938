#pragma once

#include <string>

#include "finslerlab/types.hpp"

// Finite-difference kernels shared by the Hessian, jet and Levi-form code.
namespace finslerlab::numdiff {

/// Three-point central Hessian, O(h^2), symmetrized. `steps[i]` is the step for x_i.
RMat hessian_central(const RealScalarFn& f, const RVec& x, const RVec& steps);

/// Five-point Hessian, O(h^4), symmetrized. Mixed partials use the tensor product
/// of fourth-order first-derivative stencils (16 evaluations per pair).
RMat hessian_fourth_order(const RealScalarFn& f, const RVec& x, const RVec& steps);

/// Fourth-order central gradient.
RVec gradient_fourth_order(const RealScalarFn& f, const RVec& x, const RVec& steps);

/// Converts a real Hessian in the [x..., y...] layout into the complex Hessian
/// M_ij = d^2 f / du_i-bar du_j, so that the Levi form on v is v^* M v (for
/// f = u^* H u this returns H). The result is exactly Hermitian.
CMat complex_hessian_from_real(const RMat& real_hessian);

/// Complex Hessian of f at u. `steps[i]` is the real step used for both Re u_i and Im u_i.
CMat complex_hessian(const ComplexScalarFn& f, const CVec& u, const RVec& steps);

/// Evaluates f and throws EvaluationError naming the probe point if the value is not finite.
double checked_eval(const RealScalarFn& f, const RVec& x);

std::string format_point(const RVec& x);
std::string format_point(const CVec& u);

}  // namespace finslerlab::numdiff
