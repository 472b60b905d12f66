#include "support.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <queue>
#include <sstream>

#include "soilvox/error.hpp"
#include "soilvox/random.hpp"

namespace soilvox::test {

BinaryImage3D random_image(Dims dims, double porosity, std::uint64_t seed) {
    Rng rng = make_rng(seed, 7);
    std::vector<std::uint8_t> tags(dims.count());
    for (auto& t : tags) t = uniform01(rng) < porosity ? 0 : 1;
    return BinaryImage3D(dims, std::move(tags));
}

BinaryImage3D largest_component(const BinaryImage3D& img) {
    const Dims d = img.dims();
    std::vector<int> label(d.count(), -1);
    std::vector<std::size_t> sizes;
    const int steps[6][3] = {{1, 0, 0}, {-1, 0, 0}, {0, 1, 0}, {0, -1, 0}, {0, 0, 1}, {0, 0, -1}};
    for (int k = 0; k < d.nz; ++k)
        for (int j = 0; j < d.ny; ++j)
            for (int i = 0; i < d.nx; ++i) {
                if (!img.is_pore(i, j, k) || label[img.linear(i, j, k)] >= 0) continue;
                const int id = static_cast<int>(sizes.size());
                std::size_t count = 0;
                std::queue<Index3> todo;
                todo.push({i, j, k});
                label[img.linear(i, j, k)] = id;
                while (!todo.empty()) {
                    const auto [a, b, c] = todo.front();
                    todo.pop();
                    ++count;
                    for (const auto& s : steps) {
                        const int x = a + s[0], y = b + s[1], z = c + s[2];
                        if (!img.in_bounds(x, y, z) || !img.is_pore(x, y, z)) continue;
                        auto& l = label[img.linear(x, y, z)];
                        if (l >= 0) continue;
                        l = id;
                        todo.push({x, y, z});
                    }
                }
                sizes.push_back(count);
            }
    BinaryImage3D out(d, Tag::Solid);
    if (sizes.empty()) return out;
    const int best = static_cast<int>(std::max_element(sizes.begin(), sizes.end()) - sizes.begin());
    for (int k = 0; k < d.nz; ++k)
        for (int j = 0; j < d.ny; ++j)
            for (int i = 0; i < d.nx; ++i)
                if (label[img.linear(i, j, k)] == best) out.set(i, j, k, Tag::Pore);
    return out;
}

BinaryImage3D pore_line(int n) { return BinaryImage3D({n, 1, 1}, Tag::Pore); }

std::vector<double> lattice_laplacian(const BinaryImage3D& img, std::span<const double> m) {
    const Dims d = img.dims();
    // Dense pore numbering in linear order.
    std::vector<long> id(d.count(), -1);
    long n = 0;
    for (std::size_t v = 0; v < d.count(); ++v)
        if (img.data()[v] == 0) id[v] = n++;
    std::vector<double> out(static_cast<std::size_t>(n), 0.0);
    const int steps[6][3] = {{1, 0, 0}, {-1, 0, 0}, {0, 1, 0}, {0, -1, 0}, {0, 0, 1}, {0, 0, -1}};
    for (int k = 0; k < d.nz; ++k)
        for (int j = 0; j < d.ny; ++j)
            for (int i = 0; i < d.nx; ++i) {
                const long a = id[img.linear(i, j, k)];
                if (a < 0) continue;
                for (const auto& s : steps) {
                    const int x = i + s[0], y = j + s[1], z = k + s[2];
                    if (!img.in_bounds(x, y, z)) continue;
                    const long b = id[img.linear(x, y, z)];
                    if (b < 0) continue;
                    out[a] += m[a] - m[b];
                }
            }
    return out;
}

std::vector<double> random_vector(std::size_t n, double lo, double hi, std::uint64_t seed) {
    Rng rng = make_rng(seed, 11);
    std::vector<double> v(n);
    for (auto& x : v) x = uniform(rng, lo, hi);
    return v;
}

double sum(std::span<const double> v) {
    long double s = 0.0L;
    for (double x : v) s += x;
    return static_cast<double>(s);
}

double max_abs_diff(std::span<const double> a, std::span<const double> b) {
    double m = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
    return m;
}

double max_abs(std::span<const double> v) {
    double m = 0.0;
    for (double x : v) m = std::max(m, std::abs(x));
    return m;
}

std::filesystem::path scratch_dir(const std::string& name) {
    const auto p = std::filesystem::temp_directory_path() / ("soilvox_test_" + name);
    std::filesystem::remove_all(p);
    std::filesystem::create_directories(p);
    return p;
}

std::string read_file(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_file(const std::filesystem::path& p, const std::string& text) {
    std::ofstream out(p, std::ios::binary);
    out << text;
}

BallFixture ball_fixture(std::vector<Ball> balls, Dims dims) {
    BallFixture f;
    f.balls = std::move(balls);
    f.image = rasterize_balls(f.balls, dims);
    f.graph = build_graph(f.image);
    f.net = build_ball_network(f.balls, f.graph);
    return f;
}

BallFixture random_ball_fixture(int n_balls, int max_edges, std::uint64_t seed) {
    Rng rng = make_rng(seed, 3);
    for (int attempt = 0; attempt < 1000; ++attempt) {
        std::vector<Ball> balls;
        // Random walk of centers; each step is shorter than the two radii so
        // consecutive balls overlap.
        std::array<double, 3> c{0.0, 0.0, 0.0};
        double prev_r = 0.0;
        for (int b = 0; b < n_balls; ++b) {
            const double r = uniform(rng, 1.6, 3.0);
            if (b > 0) {
                std::array<double, 3> dir{};
                double len = 0.0;
                while (len < 1e-3) {
                    for (auto& x : dir) x = uniform(rng, -1.0, 1.0);
                    len = std::sqrt(dir[0] * dir[0] + dir[1] * dir[1] + dir[2] * dir[2]);
                }
                const double step = uniform(rng, 0.55, 0.9) * (prev_r + r);
                for (int a = 0; a < 3; ++a) c[a] += step * dir[a] / len;
            }
            balls.push_back({c, r});
            prev_r = r;
        }
        std::array<double, 3> lo{1e300, 1e300, 1e300};
        for (const auto& b : balls)
            for (int a = 0; a < 3; ++a) lo[a] = std::min(lo[a], b.center[a] - b.radius);
        for (auto& b : balls)
            for (int a = 0; a < 3; ++a) b.center[a] += 1.0 - lo[a];
        try {
            BallFixture f = ball_fixture(balls, bounding_dims(balls));
            if (static_cast<int>(f.net.edges.size()) <= max_edges) return f;
        } catch (const Error&) {
            // a ball swallowed by its neighbours owns no voxel; draw again
        }
    }
    throw Error("random_ball_fixture: no valid network drawn");
}

}  // namespace soilvox::test
