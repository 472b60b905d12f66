#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <vector>

#include "soilvox/image.hpp"

namespace soilvox {

using NodeId = std::uint32_t;

enum class Axis { X = 0, Y = 1, Z = 2 };

/// 6-connected adjacency graph over the pore voxels of an image.
///
/// Nodes are numbered in ascending voxel linear index (x fastest), so node
/// order is stable across runs. Adjacency is stored CSR-style; the Laplacian
/// is only ever applied, never assembled. Isolated pore voxels are kept as
/// degree-0 nodes.
class VoxelGraph {
public:
    VoxelGraph() = default;
    explicit VoxelGraph(const BinaryImage3D& img);

    std::size_t size() const { return coords_.size(); }
    bool empty() const { return coords_.empty(); }
    std::size_t edge_count() const { return targets_.size() / 2; }
    const Dims& dims() const { return dims_; }

    const Index3& coord(NodeId i) const { return coords_[i]; }
    std::span<const Index3> coords() const { return coords_; }
    std::span<const NodeId> neighbors(NodeId i) const {
        return {targets_.data() + offsets_[i], targets_.data() + offsets_[i + 1]};
    }
    int degree(NodeId i) const { return static_cast<int>(offsets_[i + 1] - offsets_[i]); }
    int max_degree() const;

    std::span<const std::uint64_t> offsets() const { return offsets_; }
    std::span<const NodeId> targets() const { return targets_; }

    /// Node at voxel (i,j,k), if that voxel is pore.
    std::optional<NodeId> find(const Index3& ijk) const;

    /// Writes a binary cache (magic, version, dims, coords, CSR arrays).
    void save_cache(const std::filesystem::path& path) const;
    static VoxelGraph load_cache(const std::filesystem::path& path);

    friend bool operator==(const VoxelGraph&, const VoxelGraph&) = default;

private:
    Dims dims_{};
    std::vector<Index3> coords_;
    std::vector<std::uint64_t> offsets_{0};
    std::vector<NodeId> targets_;
};

inline VoxelGraph build_graph(const BinaryImage3D& img) { return VoxelGraph(img); }

// out_i = deg(i) m_i - sum_{j ~ i} m_j
void laplacian_apply(const VoxelGraph& g, std::span<const double> m, std::span<double> out);
std::vector<double> laplacian_apply(const VoxelGraph& g, std::span<const double> m);

std::vector<int> layer_index(const VoxelGraph& g, Axis axis);

}  // namespace soilvox
