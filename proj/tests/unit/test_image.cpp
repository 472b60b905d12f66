#include <doctest.h>

#include "soilvox/error.hpp"
#include "soilvox/image.hpp"
#include "support.hpp"

using namespace soilvox;

namespace {

std::filesystem::path write_raw(const std::filesystem::path& dir, const std::string& bytes, Dims d) {
    test::write_file(dir / "img.raw", bytes);
    test::write_file(dir / "img.meta", "nx = " + std::to_string(d.nx) + "\nny = " + std::to_string(d.ny) +
                                           "\nnz = " + std::to_string(d.nz) + "\n");
    return dir;
}

// Voxel-center membership, enumerated without any shortcut.
std::size_t count_covered(const std::vector<Ball>& balls, Dims d) {
    std::size_t n = 0;
    for (int k = 0; k < d.nz; ++k)
        for (int j = 0; j < d.ny; ++j)
            for (int i = 0; i < d.nx; ++i)
                for (const auto& b : balls) {
                    const double dx = i + 0.5 - b.center[0], dy = j + 0.5 - b.center[1], dz = k + 0.5 - b.center[2];
                    if (dx * dx + dy * dy + dz * dz <= b.radius * b.radius) {
                        ++n;
                        break;
                    }
                }
    return n;
}

}  // namespace

TEST_CASE("load_image: 8 zero bytes give 8 pore voxels") {
    const auto dir = write_raw(test::scratch_dir("img_zero"), std::string(8, '\0'), {2, 2, 2});
    const auto img = load_image(dir / "img.raw", dir / "img.meta");
    CHECK(img.dims() == Dims{2, 2, 2});
    CHECK(img.pore_count() == 8);
    CHECK(img.porosity() == 1.0);
}

TEST_CASE("load_image: 8 one bytes give no pore voxel") {
    const auto dir = write_raw(test::scratch_dir("img_one"), std::string(8, '\1'), {2, 2, 2});
    CHECK(load_image(dir / "img.raw", dir / "img.meta").pore_count() == 0);
}

TEST_CASE("load_image: any nonzero byte is solid") {
    const auto dir = write_raw(test::scratch_dir("img_nz"), std::string("\0\xff\x02\0", 4), {4, 1, 1});
    const auto img = load_image(dir / "img.raw", dir / "img.meta");
    CHECK(img.is_pore(0, 0, 0));
    CHECK_FALSE(img.is_pore(1, 0, 0));
    CHECK_FALSE(img.is_pore(2, 0, 0));
    CHECK(img.data()[1] == 1);
    CHECK(img.data()[2] == 1);
}

TEST_CASE("load_image: 7-byte file for 2x2x2 is a size mismatch") {
    const auto dir = write_raw(test::scratch_dir("img_short"), std::string(7, '\0'), {2, 2, 2});
    CHECK_THROWS_AS(load_image(dir / "img.raw", dir / "img.meta"), InputError);
}

TEST_CASE("load_image: missing meta and malformed meta are rejected") {
    const auto dir = write_raw(test::scratch_dir("img_meta"), std::string(8, '\0'), {2, 2, 2});
    CHECK_THROWS_AS(load_image(dir / "img.raw", dir / "nope.meta"), InputError);
    test::write_file(dir / "bad.meta", "nx = 2\nny = two\nnz = 2\n");
    CHECK_THROWS_AS(load_image(dir / "img.raw", dir / "bad.meta"), InputError);
    test::write_file(dir / "partial.meta", "nx = 2\nny = 2\n");
    CHECK_THROWS_AS(load_image(dir / "img.raw", dir / "partial.meta"), InputError);
    test::write_file(dir / "neg.meta", "nx = 2\nny = 0\nnz = 2\n");
    CHECK_THROWS_AS(load_image(dir / "img.raw", dir / "neg.meta"), InputError);
}

TEST_CASE("save then load is the identity") {
    const auto dir = test::scratch_dir("img_roundtrip");
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        const auto img = test::random_image({7, 5, 3}, 0.4, seed);
        save_image(img, dir / "a.raw", dir / "a.meta");
        CHECK(load_image(dir / "a.raw", dir / "a.meta") == img);
    }
}

TEST_CASE("raw layout is x fastest, then y, then z") {
    BinaryImage3D img({3, 2, 2}, Tag::Solid);
    img.set(2, 1, 1, Tag::Pore);
    CHECK(img.linear(2, 1, 1) == 2 + 3 * (1 + 2 * 1));
    const auto dir = test::scratch_dir("img_layout");
    save_image(img, dir / "a.raw", dir / "a.meta");
    const auto bytes = test::read_file(dir / "a.raw");
    REQUIRE(bytes.size() == 12);
    CHECK(bytes[11] == '\0');
    CHECK(bytes[10] == '\1');
}

TEST_CASE("image constructor rejects wrong tag count") {
    CHECK_THROWS_AS(BinaryImage3D({2, 2, 2}, std::vector<std::uint8_t>(7, 0)), InputError);
}

TEST_CASE("rasterize_balls: ball at a lattice corner with r = 0.6 covers no voxel center") {
    const std::vector<Ball> balls{{{2.0, 2.0, 2.0}, 0.6}};
    const auto img = rasterize_balls(balls, {4, 4, 4});
    CHECK(img.pore_count() == 0);
    CHECK(count_covered(balls, {4, 4, 4}) == 0);
}

TEST_CASE("rasterize_balls: tiny ball on a voxel center covers exactly that voxel") {
    const std::vector<Ball> balls{{{2.5, 2.5, 2.5}, 0.1}};
    const auto img = rasterize_balls(balls, {5, 5, 5});
    CHECK(img.pore_count() == 1);
    CHECK(img.is_pore(2, 2, 2));
}

TEST_CASE("rasterize_balls: empty list gives an all-solid image") {
    const auto img = rasterize_balls({}, {3, 4, 5});
    CHECK(img.dims() == Dims{3, 4, 5});
    CHECK(img.pore_count() == 0);
}

TEST_CASE("rasterize_balls: boundary distance equal to radius is inside") {
    // Center (0.5,0.5,0.5) to voxel center (1.5,0.5,0.5) is exactly 1.
    const auto img = rasterize_balls(std::vector<Ball>{{{0.5, 0.5, 0.5}, 1.0}}, {3, 3, 3});
    CHECK(img.pore_count() == 4);
}

TEST_CASE("rasterize_balls: pore count matches brute-force enumeration") {
    const std::vector<Ball> balls{{{4.2, 3.9, 5.1}, 2.7}, {{7.0, 6.0, 5.0}, 3.1}, {{2.0, 8.0, 2.0}, 1.4}};
    const Dims d{11, 10, 9};
    CHECK(rasterize_balls(balls, d).pore_count() == count_covered(balls, d));
}

TEST_CASE("rasterize_balls is monotone in the ball set") {
    std::vector<Ball> balls{{{4.0, 4.0, 4.0}, 2.5}};
    const Dims d{12, 12, 12};
    auto before = rasterize_balls(balls, d);
    balls.push_back({{7.0, 6.5, 5.0}, 3.0});
    const auto after = rasterize_balls(balls, d);
    for (int k = 0; k < d.nz; ++k)
        for (int j = 0; j < d.ny; ++j)
            for (int i = 0; i < d.nx; ++i)
                if (before.is_pore(i, j, k)) CHECK(after.is_pore(i, j, k));
    CHECK(after.pore_count() > before.pore_count());
}

TEST_CASE("rasterize_balls rejects non-positive dims and radii") {
    CHECK_THROWS_AS(rasterize_balls({}, {0, 1, 1}), InputError);
    CHECK_THROWS_AS(rasterize_balls(std::vector<Ball>{{{1, 1, 1}, 0.0}}, {2, 2, 2}), InputError);
}

TEST_CASE("extract_subvolume: full crop is the identity") {
    const auto img = test::random_image({6, 5, 4}, 0.5, 3);
    CHECK(extract_subvolume(img, {0, 0, 0}, img.dims()) == img);
}

TEST_CASE("extract_subvolume: 2x2x2 crop of all-pore image") {
    const BinaryImage3D img({5, 5, 5}, Tag::Pore);
    const auto sub = extract_subvolume(img, {1, 2, 3}, {2, 2, 2});
    CHECK(sub == BinaryImage3D({2, 2, 2}, Tag::Pore));
}

TEST_CASE("extract_subvolume copies the right voxels") {
    const auto img = test::random_image({6, 5, 4}, 0.5, 9);
    const auto sub = extract_subvolume(img, {2, 1, 1}, {3, 3, 2});
    for (int k = 0; k < 2; ++k)
        for (int j = 0; j < 3; ++j)
            for (int i = 0; i < 3; ++i) CHECK(sub.is_pore(i, j, k) == img.is_pore(i + 2, j + 1, k + 1));
}

TEST_CASE("extract_subvolume: out-of-range crops are rejected") {
    const BinaryImage3D img({4, 4, 4}, Tag::Pore);
    CHECK_THROWS_AS(extract_subvolume(img, {5, 0, 0}, {1, 1, 1}), InputError);
    CHECK_THROWS_AS(extract_subvolume(img, {-1, 0, 0}, {1, 1, 1}), InputError);
    CHECK_THROWS_AS(extract_subvolume(img, {2, 2, 2}, {3, 1, 1}), InputError);
    CHECK_THROWS_AS(extract_subvolume(img, {0, 0, 0}, {0, 1, 1}), InputError);
}

TEST_CASE("ball list CSV round trip and validation") {
    const auto dir = test::scratch_dir("balls");
    const std::vector<Ball> balls{{{1.5, 2.25, 3.0}, 0.75}, {{10.0, 0.1, 7.125}, 4.0}};
    save_balls(balls, dir / "b.csv");
    CHECK(test::read_file(dir / "b.csv").rfind("cx,cy,cz,r\n", 0) == 0);
    const auto back = load_balls(dir / "b.csv");
    REQUIRE(back.size() == 2);
    for (std::size_t b = 0; b < 2; ++b) {
        CHECK(back[b].center == balls[b].center);
        CHECK(back[b].radius == balls[b].radius);
    }
    test::write_file(dir / "bad.csv", "cx,cy,cz,r\n1,2,3,-1\n");
    CHECK_THROWS_AS(load_balls(dir / "bad.csv"), InputError);
    test::write_file(dir / "hdr.csv", "x,y,z,r\n1,2,3,1\n");
    CHECK_THROWS_AS(load_balls(dir / "hdr.csv"), InputError);
}
