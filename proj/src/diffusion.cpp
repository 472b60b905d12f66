#include "soilvox/diffusion.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include <Eigen/Dense>

#include "soilvox/error.hpp"
#include "soilvox/parallel.hpp"

namespace soilvox {

void DiffusionConfig::validate() const {
    if (!(d_coeff >= 0.0)) throw InputError("diffusion coefficient must be >= 0");
    if (!(dt > 0.0)) throw InputError("diffusion time step must be > 0");
    if (!(pcg_tol > 0.0)) throw InputError("pcg_tol must be > 0");
    if (pcg_max_iter < 1) throw InputError("pcg_max_iter must be >= 1");
}

namespace {

// out = in - s * L in
void apply_explicit(const VoxelGraph& g, std::span<const double> in, std::span<double> out, double s) {
    const auto off = g.offsets();
    const auto tgt = g.targets();
    const auto n = static_cast<std::ptrdiff_t>(g.size());
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t i = 0; i < n; ++i) {
        const auto lo = off[i], hi = off[i + 1];
        double acc = 0.0;
        for (auto e = lo; e < hi; ++e) acc += in[tgt[e]];
        out[i] = in[i] - s * (static_cast<double>(hi - lo) * in[i] - acc);
    }
}

// out = in + s * L in
void apply_implicit_operator(const VoxelGraph& g, std::span<const double> in, std::span<double> out, double s) {
    apply_explicit(g, in, out, -s);
}

// out = m - s * L y. Row sums of L vanish, so sum(out) = sum(m) up to rounding
// whatever y is.
void apply_flux_update(const VoxelGraph& g, std::span<const double> m, std::span<const double> y,
                       std::span<double> out, double s) {
    const auto off = g.offsets();
    const auto tgt = g.targets();
    const auto n = static_cast<std::ptrdiff_t>(g.size());
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t i = 0; i < n; ++i) {
        const auto lo = off[i], hi = off[i + 1];
        double acc = 0.0;
        for (auto e = lo; e < hi; ++e) acc += y[tgt[e]];
        out[i] = m[i] - s * (static_cast<double>(hi - lo) * y[i] - acc);
    }
}

// Smallest relative tolerance requested from PCG.
constexpr double kTolFloor = 1e-14;

// Implicit step in flux form. With y the PCG solution of (I + sL) y = m and
// r its residual, m' = m - sLy = y + r conserves mass exactly and has
// residual sL r, so y is solved to tol / (1 + 2 s deg_max) to keep the
// residual of m' within tol. If that bound would need a tolerance below the
// floor and m' misses tol, the plain solution y is returned instead.
int implicit_solve(const VoxelGraph& g, PcgWorkspace& ws, std::span<const double> inv_diag,
                   std::span<const double> m, std::span<double> out, std::vector<double>& y,
                   std::vector<double>& tmp, double s, const DiffusionConfig& cfg, double& residual) {
    const LinearOperator op = [&](std::span<const double> x, std::span<double> bx) {
        apply_implicit_operator(g, x, bx, s);
    };
    const double amplification = 1.0 + 2.0 * s * g.max_degree();
    const double tol_y = std::max(cfg.pcg_tol / amplification, std::min(cfg.pcg_tol, kTolFloor));
    y.resize(m.size());
    tmp.resize(m.size());
    const int it = ws.solve(op, inv_diag, m, y, {tol_y, cfg.pcg_max_iter, false}, residual);
    if (residual == 0.0 && it == 0) {
        std::copy(y.begin(), y.end(), out.begin());
        return 0;
    }
    apply_flux_update(g, m, y, out, s);
    op(out, tmp);
    for (std::size_t i = 0; i < m.size(); ++i) tmp[i] -= m[i];
    const double rel = parallel::norm2(tmp) / parallel::norm2(m);
    if (rel <= cfg.pcg_tol) {
        residual = rel;
    } else {
        std::copy(y.begin(), y.end(), out.begin());
    }
    return it;
}

void fill_inv_diag(const VoxelGraph& g, double s, std::vector<double>& inv_diag) {
    inv_diag.resize(g.size());
    for (std::size_t i = 0; i < g.size(); ++i)
        inv_diag[i] = 1.0 / (1.0 + s * g.degree(static_cast<NodeId>(i)));
}

}  // namespace

std::vector<double> explicit_step(const VoxelGraph& g, std::span<const double> m, const DiffusionConfig& cfg) {
    cfg.validate();
    if (m.size() != g.size()) throw InputError("explicit_step: length mismatch");
    std::vector<double> out(g.size());
    apply_explicit(g, m, out, cfg.d_coeff * cfg.dt);
    return out;
}

double max_stable_dt(const VoxelGraph& g, double d_coeff) {
    if (!(d_coeff > 0.0)) throw InputError("max_stable_dt: diffusion coefficient must be > 0");
    if (g.empty()) throw InputError("max_stable_dt: empty graph");
    const int deg_max = g.max_degree();
    if (deg_max == 0) return std::numeric_limits<double>::infinity();
    return 1.0 / (d_coeff * deg_max);
}

ImplicitStep implicit_step(const VoxelGraph& g, std::span<const double> m, const DiffusionConfig& cfg) {
    cfg.validate();
    if (m.size() != g.size()) throw InputError("implicit_step: length mismatch");
    const double s = cfg.d_coeff * cfg.dt;
    std::vector<double> inv_diag;
    fill_inv_diag(g, s, inv_diag);
    ImplicitStep out;
    out.m.resize(g.size());
    PcgWorkspace ws;
    std::vector<double> y, tmp;
    out.iterations = implicit_solve(g, ws, inv_diag, m, out.m, y, tmp, s, cfg, out.residual);
    return out;
}

std::vector<double> analytic_solution(const VoxelGraph& g, std::span<const double> m0, double d_coeff,
                                      double t) {
    const auto n = g.size();
    if (n > kAnalyticMaxNodes)
        throw InputError("analytic_solution: graph has " + std::to_string(n) + " nodes, cap is " +
                         std::to_string(kAnalyticMaxNodes));
    if (m0.size() != n) throw InputError("analytic_solution: length mismatch");
    if (n == 0) return {};
    const auto sn = static_cast<Eigen::Index>(n);
    Eigen::MatrixXd lap = Eigen::MatrixXd::Zero(sn, sn);
    for (std::size_t i = 0; i < n; ++i) {
        const auto ii = static_cast<Eigen::Index>(i);
        lap(ii, ii) = g.degree(static_cast<NodeId>(i));
        for (NodeId j : g.neighbors(static_cast<NodeId>(i))) lap(ii, static_cast<Eigen::Index>(j)) = -1.0;
    }
    // L = Gamma Psi Gamma^T with orthonormal Gamma, so Gamma^-1 = Gamma^T.
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(lap);
    if (eig.info() != Eigen::Success) throw Error("analytic_solution: eigendecomposition failed");
    const Eigen::MatrixXd& gamma = eig.eigenvectors();
    const Eigen::Map<const Eigen::VectorXd> m(m0.data(), sn);
    Eigen::VectorXd y = gamma.transpose() * m;
    for (Eigen::Index k = 0; k < sn; ++k) y(k) *= std::exp(-d_coeff * t * eig.eigenvalues()(k));
    const Eigen::VectorXd mt = gamma * y;
    return {mt.data(), mt.data() + sn};
}

DiffusionStepper::DiffusionStepper(const VoxelGraph& g, Scheme scheme, DiffusionConfig cfg)
    : g_(g), scheme_(scheme), cfg_(cfg) {
    cfg_.validate();
    scratch_.resize(g.size());
}

int DiffusionStepper::step(std::span<double> m, double dt) {
    if (m.size() != g_.size()) throw InputError("diffusion step: length mismatch");
    if (!(dt > 0.0)) throw InputError("diffusion step: dt must be > 0");
    const double s = cfg_.d_coeff * dt;
    if (scheme_ == Scheme::Explicit) {
        apply_explicit(g_, m, scratch_, s);
        std::copy(scratch_.begin(), scratch_.end(), m.begin());
        return 0;
    }
    if (dt != inv_diag_dt_) {
        fill_inv_diag(g_, s, inv_diag_);
        inv_diag_dt_ = dt;
    }
    double residual = 0.0;
    const int it = implicit_solve(g_, ws_, inv_diag_, m, scratch_, solution_, flux_, s, cfg_, residual);
    std::copy(scratch_.begin(), scratch_.end(), m.begin());
    pcg_iterations_ += it;
    return it;
}

}  // namespace soilvox
