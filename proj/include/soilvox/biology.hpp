#pragma once

#include <array>
#include <span>
#include <vector>

namespace soilvox {

/// Microbial decomposition parameters, rates per day. Defaults are the
/// Arthrobacter sp. 9R calibration. k_dom is in the same mass unit as the
/// state (ugC per voxel).
struct BioParams {
    double rho = 0.2;     // respiration
    double mu = 0.5;      // mortality
    double beta = 0.55;   // fraction of dead biomass returning to DOM (rest to SOM)
    double v_som = 0.01;  // SOM hydrolysis
    double v_fom = 0.3;   // FOM hydrolysis
    double v_dom = 9.6;   // maximum growth rate on DOM
    double k_dom = 0.001; // Monod half-saturation

    void validate() const;
};

enum class Compound { MB = 0, DOM = 1, SOM = 2, FOM = 3, CO2 = 4 };
inline constexpr int kCompounds = 5;

/// Masses of one node: MB, DOM, SOM, FOM, CO2.
using NodeMasses = std::array<double, kCompounds>;

/// Per-node compound masses over a graph (voxels or balls).
struct StateField {
    std::vector<double> mb, dom, som, fom, co2;

    StateField() = default;
    explicit StateField(std::size_t n) : mb(n, 0.0), dom(n, 0.0), som(n, 0.0), fom(n, 0.0), co2(n, 0.0) {}

    std::size_t size() const { return mb.size(); }
    std::vector<double>& operator[](Compound c);
    const std::vector<double>& operator[](Compound c) const;

    NodeMasses node(std::size_t i) const { return {mb[i], dom[i], som[i], fom[i], co2[i]}; }
    void set_node(std::size_t i, const NodeMasses& x);

    friend bool operator==(const StateField&, const StateField&) = default;
};

/// Which node-update procedure to use for the transformation step.
///  - Batch: every flux computed from the pre-step masses, then applied at once.
///  - Sequential: growth, mortality, respiration, SOM then FOM turnover, each
///    stage seeing the previous stage's result.
enum class TransformVariant { Batch, Sequential };

// Single-node kernels; `dt` in days.
void transform_node_batch(NodeMasses& x, const BioParams& p, double dt);
void transform_node_sequential(NodeMasses& x, const BioParams& p, double dt);

StateField transform_batch(const StateField& state, const BioParams& p, double dt);
StateField transform_sequential(const StateField& state, const BioParams& p, double dt);

// In-place versions used by the time loops.
void transform_in_place(StateField& state, const BioParams& p, double dt, TransformVariant variant);

NodeMasses total_masses(const StateField& state);

}  // namespace soilvox
