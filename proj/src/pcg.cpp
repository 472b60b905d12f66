#include "soilvox/pcg.hpp"

#include <algorithm>
#include <string>

#include "soilvox/error.hpp"
#include "soilvox/parallel.hpp"

namespace soilvox {

int PcgWorkspace::solve(const LinearOperator& op, std::span<const double> inv_diag, std::span<const double> b,
                        std::span<double> x, const PcgOptions& opts, double& residual,
                        std::vector<double>* history) {
    const std::size_t n = b.size();
    if (inv_diag.size() != n || x.size() != n) throw InputError("pcg_solve: length mismatch");
    if (!(opts.tol > 0.0) || opts.max_iter < 1) throw InputError("pcg_solve: tol must be > 0 and max_iter >= 1");

    std::fill(x.begin(), x.end(), 0.0);
    residual = 0.0;
    const double bnorm = parallel::norm2(b);
    if (bnorm == 0.0) return 0;

    r_.assign(b.begin(), b.end());
    z_.resize(n);
    p_.resize(n);
    q_.resize(n);
    const auto sn = static_cast<std::ptrdiff_t>(n);

    auto precondition = [&] {
#pragma omp parallel for schedule(static)
        for (std::ptrdiff_t i = 0; i < sn; ++i) z_[i] = inv_diag[i] * r_[i];
    };

    precondition();
    p_ = z_;
    double rz = parallel::dot(r_, z_);
    double rel = 1.0;
    int it = 0;
    while (true) {
        if (rel <= opts.tol) {
            // Check the true residual; rounding in the recurrence can hide drift.
            op(x, q_);
#pragma omp parallel for schedule(static)
            for (std::ptrdiff_t i = 0; i < sn; ++i) r_[i] = b[i] - q_[i];
            rel = parallel::norm2(r_) / bnorm;
            if (rel <= opts.tol) break;
            precondition();
            p_ = z_;
            rz = parallel::dot(r_, z_);
        }
        if (it >= opts.max_iter) {
            residual = rel;
            throw ConvergenceError("PCG did not converge in " + std::to_string(it) +
                                       " iterations (relative residual " + std::to_string(rel) + ")",
                                   it, rel);
        }
        op(p_, q_);
        const double pq = parallel::dot(p_, q_);
        if (!(pq > 0.0)) throw ConvergenceError("PCG breakdown: operator not positive definite", it, rel);
        const double alpha = rz / pq;
#pragma omp parallel for schedule(static)
        for (std::ptrdiff_t i = 0; i < sn; ++i) {
            x[i] += alpha * p_[i];
            r_[i] -= alpha * q_[i];
        }
        ++it;
        rel = parallel::norm2(r_) / bnorm;
        if (history) history->push_back(rel);
        precondition();
        const double rz_next = parallel::dot(r_, z_);
        const double beta = rz_next / rz;
        rz = rz_next;
#pragma omp parallel for schedule(static)
        for (std::ptrdiff_t i = 0; i < sn; ++i) p_[i] = z_[i] + beta * p_[i];
    }
    residual = rel;
    return it;
}

PcgResult pcg_solve(const LinearOperator& op, std::span<const double> inv_diag, std::span<const double> b,
                    const PcgOptions& opts) {
    PcgResult res;
    res.x.resize(b.size());
    PcgWorkspace ws;
    res.iterations = ws.solve(op, inv_diag, b, res.x, opts, res.residual,
                              opts.record_history ? &res.history : nullptr);
    return res;
}

}  // namespace soilvox
