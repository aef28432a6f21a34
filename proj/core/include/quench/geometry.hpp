#pragma once

#include <Eigen/Core>
#include <Eigen/SparseCore>

#include <array>
#include <vector>

namespace quench {

using Vector = Eigen::VectorXd;
using SparseMatrix = Eigen::SparseMatrix<double>;

/// Space-time field on the boundary chain: one row per time node, one column
/// per chain node.
using BoundaryField = Eigen::MatrixXd;

class Grid;

/// A bulk field together with its trace on the boundary chain.
///
/// `from_bulk` restricts a bulk field to the chain and therefore always
/// produces a compatible pair; the raw aggregate constructor is for dual
/// objects whose trace component is an independent unknown.
struct FieldPair {
    Vector bulk;
    Vector trace;

    static FieldPair from_bulk(const Grid& grid, Vector bulk_values);
    bool compatible(const Grid& grid, double tol = 0.0) const;
};

/// Uniform tensor grid on an interval (dim 1) or a rectangle (dim 2) with an
/// ordered boundary chain, trapezoidal volume weights, arclength boundary
/// weights (counting measure in 1D) and pre-assembled stiffness operators.
///
/// Immutable after construction; all operators are pure functions of their
/// inputs, so a Grid may be shared freely across threads.
class Grid {
public:
    int dim = 0;
    std::array<int, 2> cells{0, 0};
    std::array<double, 2> lengths{0.0, 0.0};
    std::array<double, 2> spacing{0.0, 0.0};
    std::array<int, 2> nodes_per_axis{0, 0};

    int num_nodes = 0;
    double cell_volume = 0.0;
    double volume = 0.0;           // |Omega|
    double boundary_measure = 0.0; // |Gamma| (2.0 in 1D: counting measure)

    Eigen::MatrixXd coords; // num_nodes x dim

    // Ordered boundary chain: closed loop in 2D, the two endpoints in 1D.
    std::vector<int> chain_nodes;       // chain position -> bulk node
    std::vector<int> node_to_chain;     // bulk node -> chain position or -1
    Vector chain_segment;               // arclength of segment (i, i+1 mod NB); empty in 1D
    Vector chain_arclength;             // s-coordinate per chain node; {0, L} in 1D

    Vector volume_weights;   // W: trapezoidal quadrature weights per bulk node
    Vector boundary_weights; // W_Gamma: arclength weights (1 per endpoint in 1D)

    SparseMatrix stiffness;          // A  = -W * Laplacian (zero flux); SPD on zero-mean
    SparseMatrix boundary_stiffness; // A_Gamma = -W_Gamma * LaplaceBeltrami; zero in 1D

    int num_boundary() const { return static_cast<int>(chain_nodes.size()); }

    // -- restriction / extension along the chain ------------------------------
    Vector trace_of(const Vector& bulk) const;
    /// Transpose of the trace map: scatter a chain field into a bulk-sized
    /// vector (zero at interior nodes).
    Vector lift_trace(const Vector& boundary) const;

    // -- discrete differential operators --------------------------------------
    /// Second-order discrete Laplacian; ghost nodes eliminated with the given
    /// outward-normal flux data (mirror for zero flux). At 2D corners the same
    /// flux value is applied on both faces.
    Vector apply_laplacian(const Vector& field, const Vector& flux) const;
    Vector apply_laplacian(const Vector& field) const; // zero flux

    /// Laplace-Beltrami along the chain: periodic second difference in
    /// arclength for dim 2 (corner curvature ignored), identically zero for
    /// dim 1 (the boundary is two points).
    Vector apply_laplace_beltrami(const Vector& trace) const;

    /// One-sided second-order outward normal derivative per chain node; at 2D
    /// corners the two face values are averaged.
    Vector normal_derivative(const Vector& field) const;

    // -- integrals -------------------------------------------------------------
    double integrate(const Vector& field) const;
    double mean_value(const Vector& field) const;
    double boundary_integrate(const Vector& trace) const;

    /// Discrete Dirichlet form <grad u, grad v> assembled edge-wise; equals
    /// <-W Lap u, v> for zero-flux data.
    double dirichlet_form(const Vector& u, const Vector& v) const;
    double boundary_dirichlet_form(const Vector& u, const Vector& v) const;
};

/// Builds a grid. `cells`/`lengths` use only the first entry for dim 1.
/// Rejects dim outside {1,2}, fewer than 4 cells per axis, or nonpositive
/// lengths.
Grid build_grid(int dim, std::array<int, 2> cells, std::array<double, 2> lengths);

inline Grid build_grid(int cells, double length) {
    return build_grid(1, {cells, 0}, {length, 0.0});
}

} // namespace quench
