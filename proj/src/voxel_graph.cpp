#include "soilvox/voxel_graph.hpp"

#include <algorithm>
#include <array>
#include <cstring>
#include <fstream>
#include <limits>
#include <string>

#include "soilvox/error.hpp"

namespace soilvox {

namespace {

constexpr std::array<Index3, 6> kFaceSteps{{
    {0, 0, -1}, {0, -1, 0}, {-1, 0, 0}, {1, 0, 0}, {0, 1, 0}, {0, 0, 1},
}};

constexpr char kCacheMagic[4] = {'S', 'V', 'X', 'G'};
constexpr std::uint32_t kCacheVersion = 1;

template <typename T>
void write_pod(std::ofstream& out, const T& v) {
    out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
void write_array(std::ofstream& out, const std::vector<T>& v) {
    const std::uint64_t n = v.size();
    write_pod(out, n);
    out.write(reinterpret_cast<const char*>(v.data()), static_cast<std::streamsize>(n * sizeof(T)));
}

template <typename T>
T read_pod(std::ifstream& in) {
    T v{};
    in.read(reinterpret_cast<char*>(&v), sizeof(T));
    if (!in) throw InputError("graph cache truncated");
    return v;
}

template <typename T>
std::vector<T> read_array(std::ifstream& in) {
    const auto n = read_pod<std::uint64_t>(in);
    if (n > (std::uint64_t{1} << 40)) throw InputError("graph cache corrupt");
    std::vector<T> v(n);
    in.read(reinterpret_cast<char*>(v.data()), static_cast<std::streamsize>(n * sizeof(T)));
    if (!in) throw InputError("graph cache truncated");
    return v;
}

std::uint64_t linear_key(const Dims& d, const Index3& c) {
    return static_cast<std::uint64_t>(c[0]) +
           static_cast<std::uint64_t>(d.nx) *
               (static_cast<std::uint64_t>(c[1]) + static_cast<std::uint64_t>(d.ny) * static_cast<std::uint64_t>(c[2]));
}

}  // namespace

VoxelGraph::VoxelGraph(const BinaryImage3D& img) : dims_(img.dims()) {
    const Dims& d = dims_;
    const auto pores = img.pore_count();
    if (pores >= std::numeric_limits<NodeId>::max()) throw InputError("too many pore voxels for 32-bit node ids");

    // Node id per pore voxel in ascending linear order; kNone elsewhere.
    constexpr NodeId kNone = std::numeric_limits<NodeId>::max();
    std::vector<NodeId> id_of(d.count(), kNone);
    coords_.reserve(pores);
    for (int k = 0; k < d.nz; ++k)
        for (int j = 0; j < d.ny; ++j)
            for (int i = 0; i < d.nx; ++i)
                if (img.is_pore(i, j, k)) {
                    id_of[img.linear(i, j, k)] = static_cast<NodeId>(coords_.size());
                    coords_.push_back({i, j, k});
                }

    // kFaceSteps is ordered by linear offset, so neighbor lists come out sorted.
    offsets_.assign(coords_.size() + 1, 0);
    targets_.reserve(coords_.size() * 6);
    for (std::size_t n = 0; n < coords_.size(); ++n) {
        const auto& c = coords_[n];
        for (const auto& s : kFaceSteps) {
            const int i = c[0] + s[0], j = c[1] + s[1], k = c[2] + s[2];
            if (!img.in_bounds(i, j, k)) continue;
            const NodeId nb = id_of[img.linear(i, j, k)];
            if (nb != kNone) targets_.push_back(nb);
        }
        offsets_[n + 1] = targets_.size();
    }
    targets_.shrink_to_fit();
}

int VoxelGraph::max_degree() const {
    int m = 0;
    for (std::size_t i = 0; i < size(); ++i) m = std::max(m, degree(static_cast<NodeId>(i)));
    return m;
}

std::optional<NodeId> VoxelGraph::find(const Index3& ijk) const {
    for (int a = 0; a < 3; ++a)
        if (ijk[a] < 0 || ijk[a] >= dims_.extent(a)) return std::nullopt;
    const auto key = linear_key(dims_, ijk);
    auto it = std::lower_bound(coords_.begin(), coords_.end(), key,
                               [&](const Index3& c, std::uint64_t k) { return linear_key(dims_, c) < k; });
    if (it == coords_.end() || *it != ijk) return std::nullopt;
    return static_cast<NodeId>(it - coords_.begin());
}

void VoxelGraph::save_cache(const std::filesystem::path& path) const {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write " + path.string());
    out.write(kCacheMagic, sizeof(kCacheMagic));
    write_pod(out, kCacheVersion);
    write_pod(out, dims_.nx);
    write_pod(out, dims_.ny);
    write_pod(out, dims_.nz);
    write_array(out, coords_);
    write_array(out, offsets_);
    write_array(out, targets_);
    if (!out) throw Error("failed writing " + path.string());
}

VoxelGraph VoxelGraph::load_cache(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InputError("cannot read graph cache " + path.string());
    char magic[4];
    in.read(magic, sizeof(magic));
    if (!in || std::memcmp(magic, kCacheMagic, sizeof(magic)) != 0)
        throw InputError(path.string() + " is not a voxel graph cache");
    if (const auto version = read_pod<std::uint32_t>(in); version != kCacheVersion)
        throw InputError("unsupported graph cache version " + std::to_string(version));
    VoxelGraph g;
    g.dims_.nx = read_pod<int>(in);
    g.dims_.ny = read_pod<int>(in);
    g.dims_.nz = read_pod<int>(in);
    g.coords_ = read_array<Index3>(in);
    g.offsets_ = read_array<std::uint64_t>(in);
    g.targets_ = read_array<NodeId>(in);
    if (g.offsets_.size() != g.coords_.size() + 1 || g.offsets_.back() != g.targets_.size())
        throw InputError("graph cache inconsistent");
    for (NodeId t : g.targets_)
        if (t >= g.coords_.size()) throw InputError("graph cache inconsistent");
    return g;
}

void laplacian_apply(const VoxelGraph& g, std::span<const double> m, std::span<double> out) {
    if (m.size() != g.size() || out.size() != g.size()) throw InputError("laplacian_apply: length mismatch");
    const auto off = g.offsets();
    const auto tgt = g.targets();
    const auto n = static_cast<std::ptrdiff_t>(g.size());
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t i = 0; i < n; ++i) {
        const auto lo = off[i], hi = off[i + 1];
        double acc = 0.0;
        for (auto e = lo; e < hi; ++e) acc += m[tgt[e]];
        out[i] = static_cast<double>(hi - lo) * m[i] - acc;
    }
}

std::vector<double> laplacian_apply(const VoxelGraph& g, std::span<const double> m) {
    std::vector<double> out(g.size());
    laplacian_apply(g, m, out);
    return out;
}

std::vector<int> layer_index(const VoxelGraph& g, Axis axis) {
    const auto a = static_cast<int>(axis);
    std::vector<int> ids(g.size());
    for (std::size_t i = 0; i < g.size(); ++i) ids[i] = g.coords()[i][a];
    return ids;
}

}  // namespace soilvox
