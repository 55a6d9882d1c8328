#pragma once

#include <cmath>
#include <numbers>
#include <span>
#include <vector>

#include "dmp/linalg.hpp"
#include "dmp/mesh.hpp"

namespace dmp {

// P1 assembly for the Laplacian: stiffness by two independent routes
// (constant-gradient element integration and the closed-form cotangent
// formulas), consistent mass, reaction C = c~ M, and load vectors.

namespace detail {

inline double triangle_area_checked(const Mesh& mesh, int t) {
    const double area = mesh.signed_area(t);
    const double floor = 1e-14 * mesh.bbox_diameter() * mesh.bbox_diameter();
    if (area < floor)
        throw NumericalError("assembly: triangle " + std::to_string(t) + " is degenerate (area " +
                             std::to_string(area) + ")");
    return area;
}

}  // namespace detail

/// Stiffness by direct integration of the constant barycentric gradients:
/// per triangle, grad(phi_i) = rot90(p_k - p_j) / (2 sigma).
inline Matrix stiffness_laplace(const Mesh& mesh) {
    const int n = mesh.vertex_count();
    Matrix a(n, n);
    for (int t = 0; t < mesh.triangle_count(); ++t) {
        const double area = detail::triangle_area_checked(mesh, t);
        const Triangle& tr = mesh.triangle(t);
        Vec2 grad[3];
        for (int e = 0; e < 3; ++e) {
            const Vec2 opp = mesh.vertex(tr[(e + 2) % 3]) - mesh.vertex(tr[(e + 1) % 3]);
            grad[e] = {-opp.y / (2.0 * area), opp.x / (2.0 * area)};
        }
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j) a(tr[i], tr[j]) += area * dot(grad[i], grad[j]);
    }
    return a;
}

/// Closed-form off-diagonal entry for an interior edge with opposite angles
/// theta1, theta2: -sin(theta1+theta2) / (2 sin(theta1) sin(theta2)).
inline double offdiag_two_triangles(double theta1, double theta2) {
    if (!(theta1 > 0.0 && theta1 < std::numbers::pi && theta2 > 0.0 && theta2 < std::numbers::pi))
        throw std::invalid_argument("offdiag_two_triangles: angles must be in (0, pi)");
    return -std::sin(theta1 + theta2) / (2.0 * std::sin(theta1) * std::sin(theta2));
}

namespace detail {

inline std::array<double, 3> triangle_angles(const Mesh& mesh, int t) {
    const Triangle& tr = mesh.triangle(t);
    std::array<double, 3> th;
    for (int e = 0; e < 3; ++e) {
        const Vec2 u = mesh.vertex(tr[(e + 1) % 3]) - mesh.vertex(tr[e]);
        const Vec2 v = mesh.vertex(tr[(e + 2) % 3]) - mesh.vertex(tr[e]);
        th[e] = std::atan2(std::abs(cross(u, v)), dot(u, v));
    }
    return th;
}

}  // namespace detail

/// Stiffness by the cotangent formulas: diagonal contribution
/// sin(theta_i) / (2 sin(theta_j) sin(theta_k)) per triangle, off-diagonal
/// -cot(theta_opposite)/2 per triangle. Cross-check path for
/// stiffness_laplace; kept deliberately independent of it.
inline Matrix stiffness_cotangent(const Mesh& mesh) {
    const int n = mesh.vertex_count();
    Matrix a(n, n);
    for (int t = 0; t < mesh.triangle_count(); ++t) {
        detail::triangle_area_checked(mesh, t);
        const Triangle& tr = mesh.triangle(t);
        const std::array<double, 3> th = detail::triangle_angles(mesh, t);
        for (int e = 0; e < 3; ++e) {
            a(tr[e], tr[e]) += std::sin(th[e]) / (2.0 * std::sin(th[(e + 1) % 3]) * std::sin(th[(e + 2) % 3]));
            const int i = tr[(e + 1) % 3], j = tr[(e + 2) % 3];
            const double off = -0.5 / std::tan(th[e]);
            a(i, j) += off;
            a(j, i) += off;
        }
    }
    return a;
}

/// Largest relative disagreement between the two stiffness routes.
inline double stiffness_paths_max_rel_diff(const Mesh& mesh) {
    const Matrix g = stiffness_laplace(mesh);
    const Matrix c = stiffness_cotangent(mesh);
    const double scale = std::max(max_abs(g), 1e-300);
    return max_abs_diff(g, c) / scale;
}

/// Consistent (non-lumped) P1 mass matrix: per triangle sigma/6 on the
/// diagonal and sigma/12 off the diagonal.
inline Matrix mass_matrix(const Mesh& mesh) {
    const int n = mesh.vertex_count();
    Matrix m(n, n);
    for (int t = 0; t < mesh.triangle_count(); ++t) {
        const double area = detail::triangle_area_checked(mesh, t);
        const Triangle& tr = mesh.triangle(t);
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j) m(tr[i], tr[j]) += (i == j ? area / 6.0 : area / 12.0);
    }
    return m;
}

/// Reaction matrix for constant reaction coefficient: C = c~ M. Negative c~
/// is allowed only for perturbation studies and must be flagged explicitly.
inline Matrix reaction_matrix(const Matrix& mass, double c_tilde, bool allow_negative = false) {
    if (c_tilde < 0.0 && !allow_negative)
        throw std::invalid_argument("reaction_matrix: negative c~ requires allow_negative");
    return c_tilde * mass;
}

/// Load vector from nodal values via the consistent mass matrix: F = M f.
inline std::vector<double> load_vector_nodal(const Matrix& mass, std::span<const double> f_nodal) {
    if (mass.cols != static_cast<int>(f_nodal.size()))
        throw std::invalid_argument("load_vector_nodal: length mismatch");
    return matvec(mass, f_nodal);
}

/// Nonnegativity of a dual-vector source: <f, phi_i> >= 0 for every nodal
/// basis function, up to tolerance.
inline bool source_is_nonnegative(std::span<const double> f, double tol = 0.0) {
    for (double v : f)
        if (v < -tol) return false;
    return true;
}

/// Stiffness, mass, reaction and partition bundled for the solvers and the
/// certification checks.
struct AssembledSystem {
    Matrix A;
    Matrix M;
    Matrix C;
    std::vector<double> F;
    IndexPartition partition;
    double h = 0.0;
    double c_tilde = 0.0;
};

inline AssembledSystem assemble(const Mesh& mesh, double c_tilde = 0.0, bool allow_negative_reaction = false) {
    AssembledSystem s;
    s.A = stiffness_laplace(mesh);
    s.M = mass_matrix(mesh);
    s.C = reaction_matrix(s.M, c_tilde, allow_negative_reaction);
    s.F.assign(mesh.vertex_count(), 0.0);
    s.partition = classify_boundary(mesh);
    s.h = mesh.mesh_size();
    s.c_tilde = c_tilde;
    return s;
}

}  // namespace dmp
