#include "quench/geometry.hpp"

#include "quench/errors.hpp"

#include <cmath>
#include <stdexcept>

namespace quench {

namespace {

void check_bulk_size(const Grid& grid, const Vector& field, const char* what) {
    if (field.size() != grid.num_nodes)
        throw std::invalid_argument(std::string(what) + ": bulk field has size " +
                                    std::to_string(field.size()) + ", grid has " +
                                    std::to_string(grid.num_nodes) + " nodes");
}

void check_boundary_size(const Grid& grid, const Vector& field, const char* what) {
    if (field.size() != grid.num_boundary())
        throw std::invalid_argument(std::string(what) + ": boundary field has size " +
                                    std::to_string(field.size()) + ", chain has " +
                                    std::to_string(grid.num_boundary()) + " nodes");
}

// 1D trapezoid weights on n+1 nodes with spacing h.
Vector trapezoid_weights_1d(int n_nodes, double h) {
    Vector w = Vector::Constant(n_nodes, h);
    w(0) = 0.5 * h;
    w(n_nodes - 1) = 0.5 * h;
    return w;
}

} // namespace

FieldPair FieldPair::from_bulk(const Grid& grid, Vector bulk_values) {
    check_bulk_size(grid, bulk_values, "FieldPair::from_bulk");
    FieldPair pair;
    pair.trace = grid.trace_of(bulk_values);
    pair.bulk = std::move(bulk_values);
    return pair;
}

bool FieldPair::compatible(const Grid& grid, double tol) const {
    if (bulk.size() != grid.num_nodes || trace.size() != grid.num_boundary()) return false;
    for (int j = 0; j < grid.num_boundary(); ++j) {
        if (std::abs(trace(j) - bulk(grid.chain_nodes[j])) > tol) return false;
    }
    return true;
}

Vector Grid::trace_of(const Vector& bulk) const {
    check_bulk_size(*this, bulk, "trace_of");
    Vector t(num_boundary());
    for (int j = 0; j < num_boundary(); ++j) t(j) = bulk(chain_nodes[j]);
    return t;
}

Vector Grid::lift_trace(const Vector& boundary) const {
    check_boundary_size(*this, boundary, "lift_trace");
    Vector out = Vector::Zero(num_nodes);
    for (int j = 0; j < num_boundary(); ++j) out(chain_nodes[j]) += boundary(j);
    return out;
}

Vector Grid::apply_laplacian(const Vector& field, const Vector& flux) const {
    check_bulk_size(*this, field, "apply_laplacian");
    check_boundary_size(*this, flux, "apply_laplacian");
    // W * Lap(u; g) = -A u + T' (W_Gamma g); see the stiffness assembly below.
    Vector weighted = -(stiffness * field);
    for (int j = 0; j < num_boundary(); ++j)
        weighted(chain_nodes[j]) += boundary_weights(j) * flux(j);
    return weighted.cwiseQuotient(volume_weights);
}

Vector Grid::apply_laplacian(const Vector& field) const {
    check_bulk_size(*this, field, "apply_laplacian");
    Vector weighted = -(stiffness * field);
    return weighted.cwiseQuotient(volume_weights);
}

Vector Grid::apply_laplace_beltrami(const Vector& trace) const {
    check_boundary_size(*this, trace, "apply_laplace_beltrami");
    if (dim == 1) return Vector::Zero(num_boundary());
    Vector weighted = -(boundary_stiffness * trace);
    return weighted.cwiseQuotient(boundary_weights);
}

Vector Grid::normal_derivative(const Vector& field) const {
    check_bulk_size(*this, field, "normal_derivative");
    const int nx = nodes_per_axis[0];
    Vector out(num_boundary());
    if (dim == 1) {
        const double h = spacing[0];
        out(0) = (3.0 * field(0) - 4.0 * field(1) + field(2)) / (2.0 * h);
        out(1) = (3.0 * field(nx - 1) - 4.0 * field(nx - 2) + field(nx - 3)) / (2.0 * h);
        return out;
    }
    const int ny = nodes_per_axis[1];
    const double hx = spacing[0], hy = spacing[1];
    auto id = [nx](int i, int j) { return j * nx + i; };
    // One-sided 3-point stencil into the domain along the face normal.
    auto face_x = [&](int i, int j, int dir) { // dir = +1 at i=0 (inward +x), -1 at i=nx-1
        return (3.0 * field(id(i, j)) - 4.0 * field(id(i + dir, j)) + field(id(i + 2 * dir, j))) /
               (2.0 * hx);
    };
    auto face_y = [&](int i, int j, int dir) {
        return (3.0 * field(id(i, j)) - 4.0 * field(id(i, j + dir)) + field(id(i, j + 2 * dir))) /
               (2.0 * hy);
    };
    for (int c = 0; c < num_boundary(); ++c) {
        const int node = chain_nodes[c];
        const int i = node % nx;
        const int j = node / nx;
        double val = 0.0;
        int faces = 0;
        if (i == 0) { val += face_x(i, j, +1); ++faces; }
        if (i == nx - 1) { val += face_x(i, j, -1); ++faces; }
        if (j == 0) { val += face_y(i, j, +1); ++faces; }
        if (j == ny - 1) { val += face_y(i, j, -1); ++faces; }
        out(c) = val / faces; // corners: average of the two face derivatives
    }
    return out;
}

double Grid::integrate(const Vector& field) const {
    check_bulk_size(*this, field, "integrate");
    return volume_weights.dot(field);
}

double Grid::mean_value(const Vector& field) const { return integrate(field) / volume; }

double Grid::boundary_integrate(const Vector& trace) const {
    check_boundary_size(*this, trace, "boundary_integrate");
    return boundary_weights.dot(trace);
}

double Grid::dirichlet_form(const Vector& u, const Vector& v) const {
    check_bulk_size(*this, u, "dirichlet_form");
    check_bulk_size(*this, v, "dirichlet_form");
    const int nx = nodes_per_axis[0];
    double sum = 0.0;
    if (dim == 1) {
        const double h = spacing[0];
        for (int i = 0; i + 1 < nx; ++i)
            sum += (u(i + 1) - u(i)) * (v(i + 1) - v(i)) / h;
        return sum;
    }
    const int ny = nodes_per_axis[1];
    const double hx = spacing[0], hy = spacing[1];
    const Vector wx = trapezoid_weights_1d(nx, hx);
    const Vector wy = trapezoid_weights_1d(ny, hy);
    auto id = [nx](int i, int j) { return j * nx + i; };
    for (int j = 0; j < ny; ++j)
        for (int i = 0; i + 1 < nx; ++i)
            sum += wy(j) / hx * (u(id(i + 1, j)) - u(id(i, j))) * (v(id(i + 1, j)) - v(id(i, j)));
    for (int j = 0; j + 1 < ny; ++j)
        for (int i = 0; i < nx; ++i)
            sum += wx(i) / hy * (u(id(i, j + 1)) - u(id(i, j))) * (v(id(i, j + 1)) - v(id(i, j)));
    return sum;
}

double Grid::boundary_dirichlet_form(const Vector& u, const Vector& v) const {
    check_boundary_size(*this, u, "boundary_dirichlet_form");
    check_boundary_size(*this, v, "boundary_dirichlet_form");
    if (dim == 1) return 0.0;
    const int nb = num_boundary();
    double sum = 0.0;
    for (int c = 0; c < nb; ++c) {
        const int next = (c + 1) % nb;
        sum += (u(next) - u(c)) * (v(next) - v(c)) / chain_segment(c);
    }
    return sum;
}

Grid build_grid(int dim, std::array<int, 2> cells, std::array<double, 2> lengths) {
    if (dim != 1 && dim != 2)
        throw std::invalid_argument("build_grid: dim must be 1 or 2, got " + std::to_string(dim));
    for (int d = 0; d < dim; ++d) {
        if (cells[d] < 4)
            throw std::invalid_argument("build_grid: need at least 4 cells per axis (stencils), got " +
                                        std::to_string(cells[d]));
        if (!(lengths[d] > 0.0))
            throw std::invalid_argument("build_grid: lengths must be positive");
    }

    Grid g;
    g.dim = dim;
    g.cells = cells;
    g.lengths = lengths;

    const int nx = cells[0] + 1;
    g.nodes_per_axis[0] = nx;
    g.spacing[0] = lengths[0] / cells[0];

    if (dim == 1) {
        g.nodes_per_axis[1] = 1;
        g.num_nodes = nx;
        g.cell_volume = g.spacing[0];
        g.volume = lengths[0];

        g.coords.resize(nx, 1);
        for (int i = 0; i < nx; ++i) g.coords(i, 0) = i * g.spacing[0];

        g.chain_nodes = {0, nx - 1};
        g.node_to_chain.assign(nx, -1);
        g.node_to_chain[0] = 0;
        g.node_to_chain[nx - 1] = 1;
        g.chain_segment = Vector();
        g.chain_arclength = Vector(2);
        g.chain_arclength << 0.0, lengths[0];

        g.volume_weights = trapezoid_weights_1d(nx, g.spacing[0]);
        g.boundary_weights = Vector::Ones(2); // counting measure over the endpoints
        g.boundary_measure = 2.0;

        std::vector<Eigen::Triplet<double>> trip;
        const double c = 1.0 / g.spacing[0];
        for (int i = 0; i + 1 < nx; ++i) {
            trip.emplace_back(i, i, c);
            trip.emplace_back(i + 1, i + 1, c);
            trip.emplace_back(i, i + 1, -c);
            trip.emplace_back(i + 1, i, -c);
        }
        g.stiffness.resize(nx, nx);
        g.stiffness.setFromTriplets(trip.begin(), trip.end());

        g.boundary_stiffness.resize(2, 2);
        g.boundary_stiffness.setZero();
        return g;
    }

    const int ny = cells[1] + 1;
    g.nodes_per_axis[1] = ny;
    g.spacing[1] = lengths[1] / cells[1];
    g.num_nodes = nx * ny;
    g.cell_volume = g.spacing[0] * g.spacing[1];
    g.volume = lengths[0] * lengths[1];

    const double hx = g.spacing[0], hy = g.spacing[1];
    auto id = [nx](int i, int j) { return j * nx + i; };

    g.coords.resize(g.num_nodes, 2);
    for (int j = 0; j < ny; ++j)
        for (int i = 0; i < nx; ++i) {
            g.coords(id(i, j), 0) = i * hx;
            g.coords(id(i, j), 1) = j * hy;
        }

    // Closed counter-clockwise chain: bottom, right, top, left.
    g.node_to_chain.assign(g.num_nodes, -1);
    for (int i = 0; i < nx; ++i) g.chain_nodes.push_back(id(i, 0));
    for (int j = 1; j < ny; ++j) g.chain_nodes.push_back(id(nx - 1, j));
    for (int i = nx - 2; i >= 0; --i) g.chain_nodes.push_back(id(i, ny - 1));
    for (int j = ny - 2; j >= 1; --j) g.chain_nodes.push_back(id(0, j));
    const int nb = static_cast<int>(g.chain_nodes.size());
    for (int c = 0; c < nb; ++c) g.node_to_chain[g.chain_nodes[c]] = c;

    g.chain_segment = Vector(nb);
    for (int c = 0; c < nb; ++c) {
        const int a = g.chain_nodes[c];
        const int b = g.chain_nodes[(c + 1) % nb];
        const double dx = g.coords(b, 0) - g.coords(a, 0);
        const double dy = g.coords(b, 1) - g.coords(a, 1);
        g.chain_segment(c) = std::sqrt(dx * dx + dy * dy);
    }
    g.chain_arclength = Vector(nb);
    g.chain_arclength(0) = 0.0;
    for (int c = 1; c < nb; ++c)
        g.chain_arclength(c) = g.chain_arclength(c - 1) + g.chain_segment(c - 1);
    g.boundary_measure = g.chain_segment.sum();

    const Vector wx = trapezoid_weights_1d(nx, hx);
    const Vector wy = trapezoid_weights_1d(ny, hy);
    g.volume_weights = Vector(g.num_nodes);
    for (int j = 0; j < ny; ++j)
        for (int i = 0; i < nx; ++i) g.volume_weights(id(i, j)) = wx(i) * wy(j);

    g.boundary_weights = Vector(nb);
    for (int c = 0; c < nb; ++c) {
        const double prev = g.chain_segment((c + nb - 1) % nb);
        const double next = g.chain_segment(c);
        g.boundary_weights(c) = 0.5 * (prev + next);
    }

    // Tensor-product stiffness: x-edges weighted by transverse trapezoid
    // weights and vice versa. Symmetric, annihilates constants, and satisfies
    // <A u, v> = dirichlet_form(u, v) exactly.
    std::vector<Eigen::Triplet<double>> trip;
    for (int j = 0; j < ny; ++j)
        for (int i = 0; i + 1 < nx; ++i) {
            const double c = wy(j) / hx;
            trip.emplace_back(id(i, j), id(i, j), c);
            trip.emplace_back(id(i + 1, j), id(i + 1, j), c);
            trip.emplace_back(id(i, j), id(i + 1, j), -c);
            trip.emplace_back(id(i + 1, j), id(i, j), -c);
        }
    for (int j = 0; j + 1 < ny; ++j)
        for (int i = 0; i < nx; ++i) {
            const double c = wx(i) / hy;
            trip.emplace_back(id(i, j), id(i, j), c);
            trip.emplace_back(id(i, j + 1), id(i, j + 1), c);
            trip.emplace_back(id(i, j), id(i, j + 1), -c);
            trip.emplace_back(id(i, j + 1), id(i, j), -c);
        }
    g.stiffness.resize(g.num_nodes, g.num_nodes);
    g.stiffness.setFromTriplets(trip.begin(), trip.end());

    std::vector<Eigen::Triplet<double>> btrip;
    for (int c = 0; c < nb; ++c) {
        const int next = (c + 1) % nb;
        const double w = 1.0 / g.chain_segment(c);
        btrip.emplace_back(c, c, w);
        btrip.emplace_back(next, next, w);
        btrip.emplace_back(c, next, -w);
        btrip.emplace_back(next, c, -w);
    }
    g.boundary_stiffness.resize(nb, nb);
    g.boundary_stiffness.setFromTriplets(btrip.begin(), btrip.end());

    return g;
}

} // namespace quench
