#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "soilvox/image.hpp"
#include "soilvox/pngm.hpp"
#include "soilvox/voxel_graph.hpp"

namespace soilvox::test {

// i.i.d. pore voxels with probability `porosity`.
BinaryImage3D random_image(Dims dims, double porosity, std::uint64_t seed);

// Keeps only the largest 6-connected pore component (flood fill on the image,
// independent of VoxelGraph).
BinaryImage3D largest_component(const BinaryImage3D& img);

// All-pore line of n voxels along x.
BinaryImage3D pore_line(int n);

// Dense Laplacian product computed straight from the image lattice.
std::vector<double> lattice_laplacian(const BinaryImage3D& img, std::span<const double> m);

std::vector<double> random_vector(std::size_t n, double lo, double hi, std::uint64_t seed);

double sum(std::span<const double> v);
double max_abs_diff(std::span<const double> a, std::span<const double> b);
double max_abs(std::span<const double> v);

// Fresh empty directory under the system temp dir.
std::filesystem::path scratch_dir(const std::string& name);

std::string read_file(const std::filesystem::path& p);
void write_file(const std::filesystem::path& p, const std::string& text);

// Ball network built directly from a ball list: rasterize on the bounding
// grid, build the voxel graph, then the network.
struct BallFixture {
    std::vector<Ball> balls;
    BinaryImage3D image;
    VoxelGraph graph;
    BallNetwork net;
};
BallFixture ball_fixture(std::vector<Ball> balls, Dims dims);

// Random overlapping chain-ish cluster of balls; retries until the network
// builds and every ball owns a voxel.
BallFixture random_ball_fixture(int n_balls, int max_edges, std::uint64_t seed);

}  // namespace soilvox::test
