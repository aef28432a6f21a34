#include "quench/geometry.hpp"

#include "helpers.hpp"

#include <doctest.h>

#include <cmath>
#include <set>

using namespace quench;

TEST_CASE("interval grid basics") {
    const Grid g = build_grid(8, 1.0);
    CHECK(g.num_nodes == 9);
    CHECK(g.num_boundary() == 2);
    CHECK(g.chain_nodes[0] == 0);
    CHECK(g.chain_nodes[1] == 8);
    CHECK(g.volume == doctest::Approx(1.0));
    CHECK(g.volume_weights.sum() == doctest::Approx(1.0).epsilon(1e-13));
    CHECK(g.boundary_measure == doctest::Approx(2.0));
}

TEST_CASE("rectangle boundary chain is a single closed loop") {
    const Grid g = build_grid(2, {4, 4}, {1.0, 1.0});
    CHECK(g.num_boundary() == 16);
    std::set<int> seen(g.chain_nodes.begin(), g.chain_nodes.end());
    CHECK(seen.size() == g.chain_nodes.size()); // each boundary node exactly once
    const int nx = g.nodes_per_axis[0];
    const int ny = g.nodes_per_axis[1];
    for (int c = 0; c < g.num_boundary(); ++c) {
        const int a = g.chain_nodes[c];
        const int b = g.chain_nodes[(c + 1) % g.num_boundary()];
        const double dist = std::abs(g.coords(a, 0) - g.coords(b, 0)) +
                            std::abs(g.coords(a, 1) - g.coords(b, 1));
        CHECK(dist == doctest::Approx(0.25)); // consecutive neighbors on the perimeter
    }
    // Every perimeter node is in the chain.
    int perimeter = 0;
    for (int i = 0; i < g.num_nodes; ++i) {
        const int ix = i % nx, iy = i / nx;
        if (ix == 0 || ix == nx - 1 || iy == 0 || iy == ny - 1) ++perimeter;
    }
    CHECK(perimeter == g.num_boundary());
}

TEST_CASE("cell volume sum matches the rectangle area") {
    const Grid g = build_grid(2, {4, 4}, {2.0, 1.0});
    CHECK(g.volume_weights.sum() == doctest::Approx(2.0).epsilon(1e-12));
    const double cells = g.cells[0] * g.cells[1];
    CHECK(cells * g.cell_volume == doctest::Approx(2.0).epsilon(1e-12));
}

TEST_CASE("build_grid rejects bad input") {
    CHECK_THROWS_AS(build_grid(3, {8, 8}, {1, 1}), std::invalid_argument);
    CHECK_THROWS_AS(build_grid(3, 1.0), std::invalid_argument);
    CHECK_THROWS_AS(build_grid(1, {8, 0}, {0.0, 0.0}), std::invalid_argument);
}

TEST_CASE("laplacian annihilates constants and is exact on quadratics") {
    const Grid g = build_grid(16, 1.0);
    const Vector ones = Vector::Ones(g.num_nodes);
    const Vector flux0 = Vector::Zero(2);
    CHECK(g.apply_laplacian(ones, flux0).cwiseAbs().maxCoeff() <= 1e-13);

    Vector sq(g.num_nodes);
    for (int i = 0; i < g.num_nodes; ++i) sq(i) = std::pow(g.coords(i, 0), 2);
    const Vector lap = g.apply_laplacian(sq, flux0);
    for (int i = 1; i + 1 < g.num_nodes; ++i) CHECK(lap(i) == doctest::Approx(2.0).epsilon(1e-10));

    // With the exact flux data the boundary rows are second-order exact too.
    Vector flux(2);
    flux << 0.0, 2.0; // outward derivative of x^2 at x=0 and x=1
    const Vector lap2 = g.apply_laplacian(sq, flux);
    CHECK(lap2(0) == doctest::Approx(2.0).epsilon(1e-9));
    CHECK(lap2(g.num_nodes - 1) == doctest::Approx(2.0).epsilon(1e-9));
}

TEST_CASE("laplacian of cos(pi x) converges at second order") {
    auto err = [](int cells) {
        const Grid g = build_grid(cells, 1.0);
        Vector f(g.num_nodes);
        for (int i = 0; i < g.num_nodes; ++i) f(i) = std::cos(M_PI * g.coords(i, 0));
        const Vector lap = g.apply_laplacian(f, Vector::Zero(2));
        double e = 0.0;
        for (int i = 0; i < g.num_nodes; ++i)
            e = std::max(e, std::abs(lap(i) + M_PI * M_PI * f(i)));
        return e;
    };
    const double ratio = err(32) / err(64);
    CHECK(ratio > 3.5);
    CHECK(ratio < 4.5);
}

TEST_CASE("laplace-beltrami") {
    SUBCASE("dim 1 is identically zero") {
        const Grid g = build_grid(8, 1.0);
        const Vector tr = testing::random_field(2, 7);
        CHECK(g.apply_laplace_beltrami(tr).cwiseAbs().maxCoeff() == 0.0);
    }
    SUBCASE("constants on the square perimeter") {
        const Grid g = build_grid(2, {8, 8}, {1.0, 1.0});
        const Vector tr = Vector::Constant(g.num_boundary(), 3.25);
        CHECK(g.apply_laplace_beltrami(tr).cwiseAbs().maxCoeff() <= 1e-13);
    }
    SUBCASE("periodic eigenfunction converges at second order") {
        auto err = [](int cells) {
            const Grid g = build_grid(2, {cells, cells}, {1.0, 1.0});
            const double L = g.boundary_measure;
            Vector tr(g.num_boundary());
            for (int c = 0; c < g.num_boundary(); ++c)
                tr(c) = std::cos(2.0 * M_PI * g.chain_arclength(c) / L);
            const Vector lb = g.apply_laplace_beltrami(tr);
            const double k2 = std::pow(2.0 * M_PI / L, 2);
            double e = 0.0;
            for (int c = 0; c < g.num_boundary(); ++c)
                e = std::max(e, std::abs(lb(c) + k2 * tr(c)));
            return e;
        };
        const double ratio = err(8) / err(16);
        CHECK(ratio > 3.5);
        CHECK(ratio < 4.5);
    }
}

TEST_CASE("normal derivative") {
    const Grid g = build_grid(16, 1.0);
    SUBCASE("zero for constants") {
        CHECK(g.normal_derivative(Vector::Constant(g.num_nodes, 2.0)).cwiseAbs().maxCoeff() <=
              1e-13);
    }
    SUBCASE("exact for linears with outward orientation") {
        Vector f(g.num_nodes);
        for (int i = 0; i < g.num_nodes; ++i) f(i) = g.coords(i, 0);
        const Vector nd = g.normal_derivative(f);
        CHECK(nd(0) == doctest::Approx(-1.0).epsilon(1e-12));
        CHECK(nd(1) == doctest::Approx(1.0).epsilon(1e-12));
    }
    SUBCASE("exact on quadratics, second-order beyond") {
        Vector sq(g.num_nodes);
        for (int i = 0; i < g.num_nodes; ++i) sq(i) = std::pow(g.coords(i, 0), 2);
        CHECK(g.normal_derivative(sq)(1) == doctest::Approx(2.0).epsilon(1e-12));

        auto err = [](int cells) {
            const Grid gc = build_grid(cells, 1.0);
            Vector f(gc.num_nodes);
            for (int i = 0; i < gc.num_nodes; ++i) f(i) = std::pow(gc.coords(i, 0), 3);
            return std::abs(gc.normal_derivative(f)(1) - 3.0);
        };
        const double ratio = err(16) / err(32);
        CHECK(ratio > 3.0);
        CHECK(ratio < 5.0);
    }
}

TEST_CASE("2d laplacian of a product eigenfunction converges at second order") {
    auto err = [](int cells) {
        const Grid g = build_grid(2, {cells, cells}, {1.0, 1.0});
        Vector f(g.num_nodes);
        for (int i = 0; i < g.num_nodes; ++i)
            f(i) = std::cos(M_PI * g.coords(i, 0)) * std::cos(M_PI * g.coords(i, 1));
        const Vector lap = g.apply_laplacian(f, Vector::Zero(g.num_boundary()));
        double e = 0.0;
        for (int i = 0; i < g.num_nodes; ++i)
            e = std::max(e, std::abs(lap(i) + 2.0 * M_PI * M_PI * f(i)));
        return e;
    };
    const double ratio = err(8) / err(16);
    CHECK(ratio > 3.5);
    CHECK(ratio < 4.5);
}

TEST_CASE("integrals and means") {
    const Grid g = build_grid(32, 1.0);
    CHECK(g.mean_value(Vector::Constant(g.num_nodes, 4.5)) == doctest::Approx(4.5));
    Vector lin(g.num_nodes);
    for (int i = 0; i < g.num_nodes; ++i) lin(i) = g.coords(i, 0);
    CHECK(g.mean_value(lin) == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(g.boundary_integrate(Vector::Ones(2)) == doctest::Approx(2.0));

    const Grid g2 = build_grid(2, {6, 4}, {2.0, 1.0});
    CHECK(g2.boundary_integrate(Vector::Ones(g2.num_boundary())) ==
          doctest::Approx(6.0).epsilon(1e-12)); // perimeter of 2 x 1
}

TEST_CASE("integration by parts: stiffness matches the edge Dirichlet form") {
    for (int trial = 0; trial < 4; ++trial) {
        const Grid g = trial < 2 ? build_grid(17, 1.3) : build_grid(2, {6, 5}, {1.5, 0.7});
        const Vector u = testing::random_field(g.num_nodes, 100 + trial);
        const Vector v = testing::random_field(g.num_nodes, 200 + trial);
        const double lhs = -(g.volume_weights.cwiseProduct(g.apply_laplacian(u))).dot(v);
        const double rhs = g.dirichlet_form(u, v);
        CHECK(lhs == doctest::Approx(rhs).epsilon(1e-10));
    }
}

TEST_CASE("stiffness operators are symmetric and annihilate constants") {
    const Grid g = build_grid(2, {5, 7}, {1.0, 2.0});
    const Vector ones = Vector::Ones(g.num_nodes);
    CHECK((g.stiffness * ones).cwiseAbs().maxCoeff() <= 1e-12);
    const Vector u = testing::random_field(g.num_nodes, 5);
    const Vector v = testing::random_field(g.num_nodes, 6);
    CHECK(u.dot(g.stiffness * v) == doctest::Approx(v.dot(g.stiffness * u)).epsilon(1e-12));

    const Vector bones = Vector::Ones(g.num_boundary());
    CHECK((g.boundary_stiffness * bones).cwiseAbs().maxCoeff() <= 1e-12);
    const Vector bu = testing::random_field(g.num_boundary(), 7);
    const Vector bv = testing::random_field(g.num_boundary(), 8);
    CHECK(bu.dot(g.boundary_stiffness * bv) ==
          doctest::Approx(bv.dot(g.boundary_stiffness * bu)).epsilon(1e-12));
}

TEST_CASE("field pair trace compatibility") {
    const Grid g = build_grid(2, {4, 4}, {1.0, 1.0});
    const FieldPair p = FieldPair::from_bulk(g, testing::random_field(g.num_nodes, 11));
    CHECK(p.compatible(g));
    FieldPair raw{testing::random_field(g.num_nodes, 12), testing::random_field(g.num_boundary(), 13)};
    CHECK(!raw.compatible(g));
}
