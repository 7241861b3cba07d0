#pragma once

#include <functional>
#include <vector>

#include "itpl/numerics.hpp"

namespace itpl {

/// Gauss-Legendre rule on [-1, 1].
struct GaussRule {
    std::vector<double> nodes;
    std::vector<double> weights;
    /// integration[k][j] = integral over [-1, x_k] of the j-th Lagrange basis
    /// polynomial on the nodes; integrates an interpolant up to a node.
    std::vector<std::vector<double>> integration;
};

/// Rule with n points; cached per n, thread-safe.
const GaussRule& gauss_legendre(int n);

/// Order of the panels used by integrate_adaptive and the path engine.
inline constexpr int kPanelOrder = 15;

/// Adaptive Gauss-Legendre quadrature with bisection and an absolute tolerance.
/// Each panel is compared with its two halves; the finer value is kept.
/// Throws AccuracyError (carrying the best estimate) if max_panels is exceeded.
EvalResult integrate_adaptive(const std::function<Complex(double)>& f, double a, double b,
                              double tol, int max_panels = 4000);

}  // namespace itpl
