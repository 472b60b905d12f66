#include <doctest.h>

#include <cmath>
#include <limits>

#include "soilvox/diffusion.hpp"
#include "soilvox/error.hpp"
#include "support.hpp"

using namespace soilvox;

namespace {

DiffusionConfig with_ddt(double d, double dt) {
    DiffusionConfig c;
    c.d_coeff = d;
    c.dt = dt;
    return c;
}

VoxelGraph two_nodes() { return build_graph(BinaryImage3D({2, 1, 1}, Tag::Pore)); }

}  // namespace

TEST_CASE("explicit_step: uniform mass is unchanged") {
    const auto g = build_graph(test::random_image({8, 8, 8}, 0.5, 1));
    const std::vector<double> m(g.size(), 2.0);
    CHECK(test::max_abs_diff(explicit_step(g, m, with_ddt(100950.0, 1e-6)), m) < 1e-15);
}

TEST_CASE("explicit_step: 2-node hand step") {
    const auto out = explicit_step(two_nodes(), std::vector<double>{1.0, 0.0}, with_ddt(1.0, 0.05));
    CHECK(out[0] == doctest::Approx(0.95).epsilon(1e-15));
    CHECK(out[1] == doctest::Approx(0.05).epsilon(1e-15));
}

TEST_CASE("explicit_step: zero diffusion is the identity") {
    const auto g = build_graph(test::random_image({6, 6, 6}, 0.5, 2));
    const auto m = test::random_vector(g.size(), 0.0, 1.0, 3);
    CHECK(explicit_step(g, m, with_ddt(0.0, 1.0)) == m);
}

TEST_CASE("explicit_step matches the lattice operator and conserves mass") {
    const auto img = test::random_image({10, 10, 10}, 0.5, 4);
    const auto g = build_graph(img);
    const auto m = test::random_vector(g.size(), 0.0, 1.0, 5);
    const auto cfg = with_ddt(100950.0, 0.9 * max_stable_dt(g, 100950.0));
    const auto out = explicit_step(g, m, cfg);
    const auto lm = test::lattice_laplacian(img, m);
    for (std::size_t i = 0; i < m.size(); ++i) {
        CHECK(out[i] == doctest::Approx(m[i] - cfg.d_coeff * cfg.dt * lm[i]).epsilon(1e-13));
        CHECK(out[i] >= 0.0);
    }
    CHECK(std::abs(test::sum(out) - test::sum(m)) <= 1e-12 * test::sum(m));
}

TEST_CASE("max_stable_dt") {
    CHECK(max_stable_dt(build_graph(BinaryImage3D({3, 3, 3}, Tag::Pore)), 100950.0) ==
          doctest::Approx(1.0 / (6.0 * 100950.0)));
    const double seconds = max_stable_dt(build_graph(BinaryImage3D({3, 3, 3}, Tag::Pore)), 100950.0) * 86400.0;
    CHECK(seconds == doctest::Approx(0.1426).epsilon(1e-3));
    CHECK(max_stable_dt(two_nodes(), 1.0) == 1.0);

    BinaryImage3D isolated({3, 1, 1}, Tag::Pore);
    isolated.set(1, 0, 0, Tag::Solid);
    CHECK(max_stable_dt(build_graph(isolated), 1.0) == std::numeric_limits<double>::infinity());
    CHECK_THROWS_AS(max_stable_dt(VoxelGraph{}, 1.0), InputError);
}

TEST_CASE("implicit_step: 2-node hand solve") {
    auto cfg = with_ddt(1.0, 0.05);
    cfg.pcg_tol = 1e-14;
    const auto r = implicit_step(two_nodes(), std::vector<double>{1.0, 0.0}, cfg);
    CHECK(r.m[0] == doctest::Approx(1.05 / 1.1).epsilon(1e-13));
    CHECK(r.m[1] == doctest::Approx(0.05 / 1.1).epsilon(1e-12));
}

TEST_CASE("implicit_step: uniform and zero inputs") {
    const auto g = build_graph(test::random_image({8, 8, 8}, 0.5, 6));
    const std::vector<double> u(g.size(), 1.5);
    CHECK(test::max_abs_diff(implicit_step(g, u, with_ddt(100950.0, 1e-4)).m, u) <= 1.5e-10);
    const auto z = implicit_step(g, std::vector<double>(g.size(), 0.0), with_ddt(100950.0, 1e-4));
    CHECK(z.iterations == 0);
    CHECK(test::max_abs(z.m) == 0.0);
}

TEST_CASE("implicit_step: relative residual within tolerance, mass drift within 10 tol") {
    const auto g = build_graph(test::random_image({12, 12, 12}, 0.5, 7));
    const auto m = test::random_vector(g.size(), 0.0, 1.0, 8);
    const auto cfg = with_ddt(100950.0, 50.0 * max_stable_dt(g, 100950.0));
    const auto r = implicit_step(g, m, cfg);
    CHECK(r.residual <= cfg.pcg_tol);
    // independent residual check
    auto lm = laplacian_apply(g, r.m);
    double res = 0.0, nb = 0.0;
    for (std::size_t i = 0; i < m.size(); ++i) {
        const double bi = r.m[i] + cfg.d_coeff * cfg.dt * lm[i] - m[i];
        res += bi * bi;
        nb += m[i] * m[i];
    }
    CHECK(std::sqrt(res / nb) <= cfg.pcg_tol);
    CHECK(std::abs(test::sum(r.m) - test::sum(m)) <= 10.0 * cfg.pcg_tol * test::sum(m));
}

TEST_CASE("implicit_step reports non-convergence") {
    const auto g = build_graph(BinaryImage3D({40, 1, 1}, Tag::Pore));
    auto cfg = with_ddt(1.0, 1e4);
    cfg.pcg_max_iter = 1;
    std::vector<double> m(g.size(), 0.0);
    m[0] = 1.0;
    CHECK_THROWS_AS(implicit_step(g, m, cfg), ConvergenceError);
}

TEST_CASE("analytic_solution: t = 0 and uniform inputs") {
    const auto g = build_graph(test::random_image({5, 5, 5}, 0.6, 9));
    const auto m = test::random_vector(g.size(), 0.0, 1.0, 10);
    CHECK(test::max_abs_diff(analytic_solution(g, m, 100950.0, 0.0), m) < 1e-12);
    const std::vector<double> u(g.size(), 0.7);
    CHECK(test::max_abs_diff(analytic_solution(g, u, 100950.0, 0.3), u) < 1e-10 * 0.7);
}

TEST_CASE("analytic_solution: 2-node closed form") {
    const double d = 3.0;
    for (double t : {0.01, 0.1, 1.0}) {
        const auto out = analytic_solution(two_nodes(), std::vector<double>{1.0, 0.0}, d, t);
        const double e = std::exp(-2.0 * d * t);
        CHECK(out[0] == doctest::Approx(0.5 + 0.5 * e).epsilon(1e-13));
        CHECK(out[1] == doctest::Approx(0.5 - 0.5 * e).epsilon(1e-12));
    }
}

TEST_CASE("analytic_solution: path graph closed form via cosine modes") {
    // Path of n nodes: eigenvectors cos(pi k (i + 1/2) / n), eigenvalues 2 - 2 cos(pi k / n).
    const int n = 9;
    const auto g = build_graph(test::pore_line(n));
    const auto m0 = test::random_vector(n, 0.0, 1.0, 13);
    const double d = 1.0, t = 0.37;
    std::vector<double> expect(n, 0.0);
    for (int k = 0; k < n; ++k) {
        double norm = 0.0, proj = 0.0;
        std::vector<double> v(n);
        for (int i = 0; i < n; ++i) {
            v[i] = std::cos(M_PI * k * (i + 0.5) / n);
            norm += v[i] * v[i];
            proj += v[i] * m0[i];
        }
        const double lambda = 2.0 - 2.0 * std::cos(M_PI * k / n);
        for (int i = 0; i < n; ++i) expect[i] += std::exp(-d * t * lambda) * proj / norm * v[i];
    }
    CHECK(test::max_abs_diff(analytic_solution(g, m0, d, t), expect) < 1e-12);
}

TEST_CASE("analytic_solution: equilibrates to the mean on a connected graph") {
    const auto g = build_graph(test::largest_component(test::random_image({7, 7, 7}, 0.6, 14)));
    const auto m = test::random_vector(g.size(), 0.0, 1.0, 15);
    const double mean = test::sum(m) / static_cast<double>(g.size());
    const auto out = analytic_solution(g, m, 1.0, 1e4);
    for (double x : out) CHECK(x == doctest::Approx(mean).epsilon(1e-9));
}

TEST_CASE("analytic_solution rejects graphs above the cap") {
    const auto g = build_graph(BinaryImage3D({13, 13, 13}, Tag::Pore));
    REQUIRE(g.size() > kAnalyticMaxNodes);
    CHECK_THROWS_AS(analytic_solution(g, std::vector<double>(g.size(), 0.0), 1.0, 1.0), InputError);
}

TEST_CASE("DiffusionStepper agrees with the one-shot steps") {
    const auto g = build_graph(test::random_image({9, 9, 9}, 0.5, 16));
    const auto m0 = test::random_vector(g.size(), 0.0, 1.0, 17);
    const double dt = 0.5 * max_stable_dt(g, 100950.0);
    const auto cfg = with_ddt(100950.0, dt);

    std::vector<double> a = m0;
    DiffusionStepper ex(g, Scheme::Explicit, cfg);
    CHECK(ex.step(a, dt) == 0);
    CHECK(test::max_abs_diff(a, explicit_step(g, m0, cfg)) < 1e-15);

    std::vector<double> b = m0;
    DiffusionStepper im(g, Scheme::Implicit, cfg);
    const int it = im.step(b, dt);
    CHECK(it > 0);
    CHECK(im.total_pcg_iterations() == it);
    CHECK(test::max_abs_diff(b, implicit_step(g, m0, cfg).m) < 1e-12);
}

TEST_CASE("DiffusionConfig validation") {
    CHECK_THROWS_AS(with_ddt(-1.0, 1.0).validate(), InputError);
    CHECK_THROWS_AS(with_ddt(1.0, 0.0).validate(), InputError);
    auto c = with_ddt(1.0, 1.0);
    c.pcg_tol = 0.0;
    CHECK_THROWS_AS(c.validate(), InputError);
    c.pcg_tol = 1e-8;
    c.pcg_max_iter = 0;
    CHECK_THROWS_AS(c.validate(), InputError);
}
