#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

namespace soilvox {

/// Voxel tags: pore (water-filled void) is 0, solid is 1.
enum class Tag : std::uint8_t { Pore = 0, Solid = 1 };

struct Dims {
    int nx = 0;
    int ny = 0;
    int nz = 0;

    std::size_t count() const {
        return static_cast<std::size_t>(nx) * static_cast<std::size_t>(ny) * static_cast<std::size_t>(nz);
    }
    bool positive() const { return nx > 0 && ny > 0 && nz > 0; }
    int extent(int axis) const { return axis == 0 ? nx : axis == 1 ? ny : nz; }
    friend bool operator==(const Dims&, const Dims&) = default;
};

using Index3 = std::array<int, 3>;

/// Dense 3D binary image, x-fastest then y then z.
class BinaryImage3D {
public:
    BinaryImage3D() = default;
    BinaryImage3D(Dims dims, Tag fill);
    BinaryImage3D(Dims dims, std::vector<std::uint8_t> tags);

    const Dims& dims() const { return dims_; }
    std::span<const std::uint8_t> data() const { return data_; }

    std::size_t linear(int i, int j, int k) const {
        return static_cast<std::size_t>(i) +
               static_cast<std::size_t>(dims_.nx) *
                   (static_cast<std::size_t>(j) + static_cast<std::size_t>(dims_.ny) * static_cast<std::size_t>(k));
    }
    bool in_bounds(int i, int j, int k) const {
        return i >= 0 && j >= 0 && k >= 0 && i < dims_.nx && j < dims_.ny && k < dims_.nz;
    }
    bool is_pore(int i, int j, int k) const { return data_[linear(i, j, k)] == 0; }
    void set(int i, int j, int k, Tag t) { data_[linear(i, j, k)] = static_cast<std::uint8_t>(t); }

    std::size_t pore_count() const;
    double porosity() const;

    friend bool operator==(const BinaryImage3D&, const BinaryImage3D&) = default;

private:
    Dims dims_{};
    std::vector<std::uint8_t> data_;
};

/// Sphere in voxel units; voxel (i,j,k) has its center at (i+0.5, j+0.5, k+0.5).
struct Ball {
    std::array<double, 3> center{};
    double radius = 0.0;
};

// Raw file: one byte per voxel, no header. Any nonzero byte is solid.
BinaryImage3D load_image(const std::filesystem::path& raw, const std::filesystem::path& meta);
void save_image(const BinaryImage3D& img, const std::filesystem::path& raw, const std::filesystem::path& meta);

// Sidecar with `nx = <int>` lines (ny, nz likewise); '#' starts a comment.
Dims read_meta(const std::filesystem::path& meta);

BinaryImage3D rasterize_balls(std::span<const Ball> balls, Dims dims);

BinaryImage3D extract_subvolume(const BinaryImage3D& img, Index3 origin, Dims dims);

// Ball list CSV, header `cx,cy,cz,r`.
std::vector<Ball> load_balls(const std::filesystem::path& path);
void save_balls(std::span<const Ball> balls, const std::filesystem::path& path);

// Smallest grid containing every ball's bounding box (rounded up).
Dims bounding_dims(std::span<const Ball> balls);

}  // namespace soilvox
