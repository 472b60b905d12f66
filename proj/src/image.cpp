#include "soilvox/image.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iterator>
#include <map>
#include <string>

#include "soilvox/csv.hpp"
#include "soilvox/error.hpp"

namespace soilvox {

BinaryImage3D::BinaryImage3D(Dims dims, Tag fill) : dims_(dims) {
    if (!dims.positive()) throw InputError("image dims must be positive");
    data_.assign(dims.count(), static_cast<std::uint8_t>(fill));
}

BinaryImage3D::BinaryImage3D(Dims dims, std::vector<std::uint8_t> tags) : dims_(dims), data_(std::move(tags)) {
    if (!dims.positive()) throw InputError("image dims must be positive");
    if (data_.size() != dims.count())
        throw InputError("image data has " + std::to_string(data_.size()) + " voxels, dims require " +
                         std::to_string(dims.count()));
    for (auto& t : data_) t = t != 0 ? 1 : 0;
}

std::size_t BinaryImage3D::pore_count() const {
    return static_cast<std::size_t>(std::count(data_.begin(), data_.end(), std::uint8_t{0}));
}

double BinaryImage3D::porosity() const {
    return data_.empty() ? 0.0 : static_cast<double>(pore_count()) / static_cast<double>(data_.size());
}

Dims read_meta(const std::filesystem::path& meta) {
    std::ifstream in(meta);
    if (!in) throw InputError("cannot read image metadata " + meta.string());
    std::map<std::string, long long> kv;
    std::string line;
    while (std::getline(in, line)) {
        if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        auto body = csv::trim(line);
        if (body.empty()) continue;
        const auto eq = body.find('=');
        if (eq == std::string_view::npos) throw InputError(meta.string() + ": malformed line '" + line + "'");
        const auto key = std::string(csv::trim(body.substr(0, eq)));
        if (key != "nx" && key != "ny" && key != "nz")
            throw InputError(meta.string() + ": unknown key '" + key + "'");
        kv[key] = csv::parse_int(body.substr(eq + 1));
    }
    for (const char* k : {"nx", "ny", "nz"})
        if (!kv.contains(k)) throw InputError(meta.string() + ": missing " + k);
    Dims d{static_cast<int>(kv["nx"]), static_cast<int>(kv["ny"]), static_cast<int>(kv["nz"])};
    if (!d.positive()) throw InputError(meta.string() + ": dims must be positive");
    return d;
}

BinaryImage3D load_image(const std::filesystem::path& raw, const std::filesystem::path& meta) {
    const Dims dims = read_meta(meta);
    std::ifstream in(raw, std::ios::binary);
    if (!in) throw InputError("cannot read raw image " + raw.string());
    std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    if (bytes.size() != dims.count())
        throw InputError("raw image " + raw.string() + " holds " + std::to_string(bytes.size()) +
                         " bytes but metadata declares " + std::to_string(dims.count()));
    return BinaryImage3D(dims, std::move(bytes));
}

void save_image(const BinaryImage3D& img, const std::filesystem::path& raw, const std::filesystem::path& meta) {
    {
        std::ofstream out(raw, std::ios::binary);
        if (!out) throw Error("cannot write " + raw.string());
        auto data = img.data();
        out.write(reinterpret_cast<const char*>(data.data()), static_cast<std::streamsize>(data.size()));
    }
    std::ofstream out(meta);
    if (!out) throw Error("cannot write " + meta.string());
    out << "nx = " << img.dims().nx << "\nny = " << img.dims().ny << "\nnz = " << img.dims().nz << '\n';
}

BinaryImage3D rasterize_balls(std::span<const Ball> balls, Dims dims) {
    BinaryImage3D img(dims, Tag::Solid);
    for (const Ball& b : balls) {
        if (!(b.radius > 0.0)) throw InputError("ball radius must be positive");
        std::array<int, 3> lo{}, hi{};
        for (int a = 0; a < 3; ++a) {
            lo[a] = std::max(0, static_cast<int>(std::floor(b.center[a] - b.radius - 0.5)));
            hi[a] = std::min(dims.extent(a) - 1, static_cast<int>(std::ceil(b.center[a] + b.radius - 0.5)));
        }
        const double r2 = b.radius * b.radius;
        for (int k = lo[2]; k <= hi[2]; ++k)
            for (int j = lo[1]; j <= hi[1]; ++j)
                for (int i = lo[0]; i <= hi[0]; ++i) {
                    const double dx = i + 0.5 - b.center[0];
                    const double dy = j + 0.5 - b.center[1];
                    const double dz = k + 0.5 - b.center[2];
                    if (dx * dx + dy * dy + dz * dz <= r2) img.set(i, j, k, Tag::Pore);
                }
    }
    return img;
}

BinaryImage3D extract_subvolume(const BinaryImage3D& img, Index3 origin, Dims dims) {
    if (!dims.positive()) throw InputError("subvolume dims must be positive");
    for (int a = 0; a < 3; ++a)
        if (origin[a] < 0 || origin[a] + dims.extent(a) > img.dims().extent(a))
            throw InputError("subvolume exceeds image bounds along axis " + std::to_string(a));
    std::vector<std::uint8_t> tags(dims.count());
    std::size_t n = 0;
    for (int k = 0; k < dims.nz; ++k)
        for (int j = 0; j < dims.ny; ++j)
            for (int i = 0; i < dims.nx; ++i)
                tags[n++] = img.data()[img.linear(origin[0] + i, origin[1] + j, origin[2] + k)];
    return BinaryImage3D(dims, std::move(tags));
}

std::vector<Ball> load_balls(const std::filesystem::path& path) {
    std::vector<Ball> balls;
    for (const auto& row : csv::read_table(path, {"cx", "cy", "cz", "r"})) {
        Ball b{{csv::parse_double(row[0]), csv::parse_double(row[1]), csv::parse_double(row[2])},
               csv::parse_double(row[3])};
        if (!(b.radius > 0.0)) throw InputError(path.string() + ": ball radius must be positive");
        balls.push_back(b);
    }
    return balls;
}

void save_balls(std::span<const Ball> balls, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw Error("cannot write " + path.string());
    out << "cx,cy,cz,r\n";
    for (const Ball& b : balls)
        out << csv::format(b.center[0]) << ',' << csv::format(b.center[1]) << ',' << csv::format(b.center[2])
            << ',' << csv::format(b.radius) << '\n';
}

Dims bounding_dims(std::span<const Ball> balls) {
    if (balls.empty()) throw InputError("empty ball list");
    std::array<int, 3> ext{1, 1, 1};
    for (const Ball& b : balls)
        for (int a = 0; a < 3; ++a)
            ext[a] = std::max(ext[a], static_cast<int>(std::ceil(b.center[a] + b.radius)));
    return {ext[0], ext[1], ext[2]};
}

}  // namespace soilvox
