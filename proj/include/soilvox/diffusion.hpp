#pragma once

#include <span>
#include <vector>

#include "soilvox/pcg.hpp"
#include "soilvox/voxel_graph.hpp"

namespace soilvox {

inline constexpr double kSecondsPerDay = 86400.0;

struct DiffusionConfig {
    double d_coeff = 100950.0;  // voxel^2 / day
    double dt = 0.1 / kSecondsPerDay;  // days
    double pcg_tol = 1e-10;
    int pcg_max_iter = 1000;

    void validate() const;
};

enum class Scheme { Explicit, Implicit };

/// (I - D dt L) m, one Laplacian application. No stability check here.
std::vector<double> explicit_step(const VoxelGraph& g, std::span<const double> m, const DiffusionConfig& cfg);

/// Largest dt keeping every diagonal entry of I - D dt L nonnegative:
/// 1 / (D * deg_max). +infinity when no node has a neighbor.
double max_stable_dt(const VoxelGraph& g, double d_coeff);

struct ImplicitStep {
    std::vector<double> m;
    int iterations = 0;
    double residual = 0.0;
};

/// Solves (I + D dt L) m' = m by Jacobi-preconditioned CG. The result is
/// returned in flux form, m - D dt L y with y the PCG solution, so total mass
/// is conserved to rounding; `residual` is the relative residual of that
/// returned vector.
ImplicitStep implicit_step(const VoxelGraph& g, std::span<const double> m, const DiffusionConfig& cfg);

/// Exact solution exp(-D t L) m0 by dense symmetric eigendecomposition of L.
/// Test oracle for small graphs only (at most kAnalyticMaxNodes nodes).
inline constexpr std::size_t kAnalyticMaxNodes = 2000;
std::vector<double> analytic_solution(const VoxelGraph& g, std::span<const double> m0, double d_coeff, double t);

/// Stateful stepper for long time loops: keeps scratch buffers and the PCG
/// workspace between steps. `dt` is passed per step (days) so the last step
/// of a run can be shortened.
class DiffusionStepper {
public:
    DiffusionStepper(const VoxelGraph& g, Scheme scheme, DiffusionConfig cfg);

    /// Advances `m` in place by dt days. Returns PCG iterations (0 for explicit).
    int step(std::span<double> m, double dt);

    Scheme scheme() const { return scheme_; }
    const DiffusionConfig& config() const { return cfg_; }
    long long total_pcg_iterations() const { return pcg_iterations_; }

private:
    const VoxelGraph& g_;
    Scheme scheme_;
    DiffusionConfig cfg_;
    std::vector<double> scratch_;
    std::vector<double> solution_;
    std::vector<double> flux_;
    std::vector<double> inv_diag_;
    double inv_diag_dt_ = -1.0;
    PcgWorkspace ws_;
    long long pcg_iterations_ = 0;
};

}  // namespace soilvox
