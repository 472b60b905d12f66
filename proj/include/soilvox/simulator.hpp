#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <vector>

#include "soilvox/biology.hpp"
#include "soilvox/diffusion.hpp"
#include "soilvox/voxel_graph.hpp"

namespace soilvox {

enum class SeedKind {
    UniformLayers,  // DOM spread over the pore voxels of selected layers
    RandomSpots,    // DOM spread over all pore voxels, biomass on random spots
    FromFile,       // full state read from a per-node CSV
};

/// Initial condition. Masses in the state unit (ugC by default).
struct Scenario {
    SeedKind seed_kind = SeedKind::RandomSpots;
    double dom_total = 0.0;
    Axis layer_axis = Axis::Z;
    std::vector<int> layer_ids{0, 1};
    int n_spots = 0;
    double mb_total = 0.0;
    std::uint64_t rng_seed = 0;
    double som_total = 0.0;
    double fom_total = 0.0;
    std::filesystem::path state_file;

    void validate() const;
};

/// Time control, all values in days.
struct Schedule {
    double t_end = 1.0;
    double dt_transform = 0.43 / kSecondsPerDay;
    double dt_diffusion = 0.1 / kSecondsPerDay;
    Scheme scheme = Scheme::Explicit;
    TransformVariant transform_variant = TransformVariant::Sequential;
    double record_every = 1.0 / 24.0;

    void validate() const;
};

/// Each pore voxel of the chosen layers gets total_mass / (their count).
std::vector<double> seed_layers(const VoxelGraph& g, Axis axis, std::span<const int> layer_ids, double total_mass);

/// n_spots distinct voxels drawn uniformly without replacement, each holding
/// total_mass / n_spots.
std::vector<double> seed_spots(const VoxelGraph& g, int n_spots, double total_mass, std::uint64_t rng_seed);

StateField initial_state(const VoxelGraph& g, const Scenario& scenario);

struct LayerProfiles {
    Axis axis = Axis::Z;
    std::vector<double> times;                  // days, exact step times
    std::vector<std::vector<double>> profiles;  // [record][layer] summed mass
    std::vector<double> final_dom;
};

/// Per-layer mass of `m` along `axis`; one entry per image slice.
std::vector<double> layer_profile(const VoxelGraph& g, std::span<const double> m, Axis axis);

/// Pure DOM diffusion from the scenario's DOM seeding to t_end.
LayerProfiles run_diffusion_experiment(const VoxelGraph& g, const Scenario& scenario, const Schedule& schedule,
                                       const DiffusionConfig& cfg);

struct DecompositionResult {
    std::vector<double> times;
    std::vector<NodeMasses> totals;
    StateField final_state;
    long long pcg_iterations = 0;
};

/// Coupled transformation and DOM diffusion. Each coarse step (the larger of
/// the two dts) runs transformation first, then diffusion; the process with
/// the smaller dt is sub-stepped so that both cover the same physical time,
/// the last sub-step being shortened when the ratio is not an integer.
/// Advances `dom` in place by dt days.
using DiffusionOperator = std::function<void(std::vector<double>& dom, double dt)>;
/// Called with the exact time after every recorded step (and at t = 0).
using RecordCallback = std::function<void(double t, const StateField& state)>;

/// Generic transformation/diffusion coupling loop shared by the voxel and
/// ball-network engines. `params == nullptr` disables transformation.
void run_coupled(StateField& state, const Schedule& schedule, const BioParams* params,
                 const DiffusionOperator& diffuse, const RecordCallback& on_record);

DecompositionResult run_decomposition(const VoxelGraph& g, const StateField& initial, const Schedule& schedule,
                                      const DiffusionConfig& cfg, const BioParams& params);

DecompositionResult run_decomposition(const VoxelGraph& g, const Scenario& scenario, const Schedule& schedule,
                                      const DiffusionConfig& cfg, const BioParams& params);

// Output files.
void write_layer_profiles(const std::filesystem::path& path, const LayerProfiles& lp);
void write_totals(const std::filesystem::path& path, const std::vector<double>& times,
                  const std::vector<NodeMasses>& totals);
void write_state(const std::filesystem::path& path, const VoxelGraph& g, const StateField& state);
StateField load_state(const std::filesystem::path& path, const VoxelGraph& g);

}  // namespace soilvox
