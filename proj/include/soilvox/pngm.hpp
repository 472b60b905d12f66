#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "soilvox/diffusion.hpp"
#include "soilvox/image.hpp"
#include "soilvox/voxel_graph.hpp"

namespace soilvox {

using BallId = std::uint32_t;

/// Contact between two intersecting balls, i < j.
struct BallEdge {
    BallId i = 0;
    BallId j = 0;
    double contact_area = 0.0;  // S_ij, area of the sphere-sphere intersection disk
    double distance = 0.0;      // d_ij, center distance
};

struct Incidence {
    BallId neighbor;
    std::uint32_t edge;
};

/// Ball network covering the pore space. Every pore voxel belongs to exactly
/// one ball: the covering ball with the nearest center, lowest index on ties.
struct BallNetwork {
    std::vector<Ball> balls;
    std::vector<double> volumes;                     // voxels owned per ball
    std::vector<BallEdge> edges;                     // sorted by (i, j)
    std::vector<std::vector<Incidence>> incident;    // per ball
    std::vector<std::vector<NodeId>> voxel_map;      // per ball, ascending node ids
    std::vector<BallId> owner;                       // per voxel-graph node

    std::size_t size() const { return balls.size(); }
};

/// Per-edge diffusional conductance, aligned with BallNetwork::edges.
struct ConductanceParams {
    std::vector<double> theta;
};

BallNetwork build_ball_network(std::span<const Ball> balls, const VoxelGraph& g);

/// Area of the intersection disk of two spheres with center distance d.
/// When one ball contains the other, the smaller ball's great-circle area.
double sphere_contact_area(double r1, double r2, double d);

/// theta_ij = S_ij / d_ij for every edge.
ConductanceParams initial_conductance(const BallNetwork& net);

std::vector<double> voxel_to_ball(std::span<const double> voxel_masses, const BallNetwork& net);
std::vector<double> ball_to_voxel_by_concentration(std::span<const double> ball_masses, const BallNetwork& net);

/// m'_i = m_i - D dt sum_j theta_ij (m_i/v_i - m_j/v_j); dt in days.
std::vector<double> pngm_explicit_step(const BallNetwork& net, const ConductanceParams& theta,
                                       std::span<const double> m, double d_coeff, double dt);

/// Solves m = m' + D dt sum_j theta_ij (m'_i/v_i - m'_j/v_j) for m'. In terms
/// of concentrations c' = m'/v the system (V + D dt L_theta) c' = m is SPD.
std::vector<double> pngm_implicit_step(const BallNetwork& net, const ConductanceParams& theta,
                                       std::span<const double> m, double d_coeff, double dt, double tol,
                                       int max_iter = 1000);

/// Largest explicit dt keeping every ball's self-coefficient nonnegative:
/// min_i v_i / (D sum_j theta_ij). +infinity when no edge conducts.
double pngm_max_stable_dt(const BallNetwork& net, const ConductanceParams& theta, double d_coeff);

// ---------------------------------------------------------------------------
// Calibration

struct DistributionPair {
    std::vector<double> x;
    std::vector<double> y;
};

/// Ball mass distributions separated by a fixed diffusion interval.
struct CalibDataset {
    std::size_t q = 0;
    double dt_seconds = 0.0;
    double d_coeff = 0.0;  // voxel^2 / day used by the generator
    std::vector<DistributionPair> pairs;

    double dt_days() const { return dt_seconds / kSecondsPerDay; }
};

struct CalibGenOptions {
    int n_scenarios = 30;
    double record_interval_s = 10.0;
    double horizon_s = 1200.0;
    double voxel_dt_s = 0.1;
    double mass_min = 100.0;
    double mass_max = 1000.0;
    std::uint64_t rng_seed = 0;
};

/// Random voxel scenarios diffused with the explicit voxel scheme; snapshots
/// every record interval, mapped onto balls, consecutive snapshots paired.
CalibDataset generate_calib_data(const BallNetwork& net, const VoxelGraph& g, const DiffusionConfig& cfg,
                                 const CalibGenOptions& opts);

void save_calib_data(const CalibDataset& ds, const std::filesystem::path& path);
CalibDataset load_calib_data(const std::filesystem::path& path);

enum class Objective {
    L1,  // explicit-scheme residual: y - x + D dt sum theta (x_i/v_i - x_j/v_j)
    L2,  // implicit-scheme residual: x - y - D dt sum theta (y_i/v_i - y_j/v_j)
};

/// Mean over pairs of the mean over balls of the squared residual.
double loss(const BallNetwork& net, const ConductanceParams& theta, std::span<const DistributionPair> pairs,
            Objective objective, double d_coeff, double dt);

/// Exact per-edge derivative of `loss` over the given batch.
std::vector<double> loss_gradient(const BallNetwork& net, const ConductanceParams& theta,
                                  std::span<const DistributionPair> batch, Objective objective, double d_coeff,
                                  double dt);

struct CalibConfig {
    Objective objective = Objective::L2;
    int epochs = 1000;
    int batch_size = 4;
    double lr0 = 0.1;
    int halve_every = 10;
    std::uint64_t rng_seed = 0;

    void validate() const;
    double learning_rate(int epoch) const;
};

struct LossRecord {
    int epoch;
    double lr;
    double loss;  // batch loss before that epoch's update
};

struct CalibrationResult {
    ConductanceParams theta;
    std::vector<LossRecord> history;
};

/// Normalized-gradient SGD from theta = S/d (or `start` when given): each
/// edge with a nonzero gradient moves by exactly lr against its sign, then is
/// clamped at zero. Batches are drawn uniformly with replacement.
CalibrationResult sgd_calibrate(const BallNetwork& net, const CalibDataset& dataset, const CalibConfig& cfg,
                                const ConductanceParams* start = nullptr);

// Files.
void save_conductance(const BallNetwork& net, const ConductanceParams& theta, const std::filesystem::path& path);
ConductanceParams load_conductance(const BallNetwork& net, const std::filesystem::path& path);
void save_loss_history(const std::vector<LossRecord>& history, const std::filesystem::path& path);

}  // namespace soilvox
