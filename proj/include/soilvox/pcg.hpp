#pragma once

#include <functional>
#include <span>
#include <vector>

namespace soilvox {

/// y = B x for a symmetric positive definite B.
using LinearOperator = std::function<void(std::span<const double> x, std::span<double> y)>;

struct PcgOptions {
    double tol = 1e-10;   // on ||b - Bx||_2 / ||b||_2
    int max_iter = 1000;
    bool record_history = false;
};

struct PcgResult {
    std::vector<double> x;
    int iterations = 0;
    double residual = 0.0;              // relative, true residual at exit
    std::vector<double> history;        // relative residual per iteration, if requested
};

/// Jacobi-preconditioned conjugate gradient from x0 = 0.
///
/// `inv_diag` holds 1/b_ii. A zero right-hand side returns x = 0 after zero
/// iterations. Convergence is confirmed against the true residual, not just
/// the recurrence. Throws ConvergenceError when max_iter is exhausted.
PcgResult pcg_solve(const LinearOperator& op, std::span<const double> inv_diag, std::span<const double> b,
                    const PcgOptions& opts);

/// Reusable-buffer variant for time loops: solves into `x`, returns the
/// iteration count and writes the achieved relative residual to `residual`.
class PcgWorkspace {
public:
    int solve(const LinearOperator& op, std::span<const double> inv_diag, std::span<const double> b,
              std::span<double> x, const PcgOptions& opts, double& residual,
              std::vector<double>* history = nullptr);

private:
    std::vector<double> r_, z_, p_, q_;
};

}  // namespace soilvox
