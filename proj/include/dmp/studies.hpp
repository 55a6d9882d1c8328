#pragma once

#include <array>
#include <cmath>
#include <limits>
#include <numbers>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "dmp/assembly.hpp"
#include "dmp/certify.hpp"
#include "dmp/generators.hpp"
#include "dmp/linalg.hpp"
#include "dmp/solve.hpp"

namespace dmp {

// Scripted reproductions of the computational evidence: the G_k(theta)
// smallest-inverse-entry sweeps, the degenerate-patch S(alpha)^{-1} sweep,
// the hierarchical-basis matrix bundle with its exact limit blocks, and the
// Green's function comparison for the two degenerate placements.

struct SweepRecord {
    double parameter = 0.0;
    double min_entry = 0.0;
    int row = -1;
    int col = -1;
    bool certified = false;
};

struct SweepFailure {
    double parameter = 0.0;
    std::string message;
};

namespace detail {

/// Smallest entry of the interior-block inverse of the Laplacian stiffness.
inline SweepRecord interior_inverse_min(const Mesh& mesh, double parameter) {
    const AssembledSystem sys = assemble(mesh);
    const Matrix a_aa = submatrix(sys.A, sys.partition.alpha, sys.partition.alpha);
    const Matrix inv = invert(a_aa).inverse;
    const SignReport s = sign_test(inv, SignMode::Positive);
    SweepRecord rec;
    rec.parameter = parameter;
    rec.min_entry = s.min_entry;
    rec.row = s.argmin_row;
    rec.col = s.argmin_col;
    return rec;
}

}  // namespace detail

struct GkSweep {
    int k = 0;
    std::vector<SweepRecord> records;                  // sorted by theta
    std::optional<std::pair<double, double>> bracket;  // sign-change interval, width <= bisect_tol
    std::vector<SweepFailure> failures;
};

/// Per k: assemble G_k(theta) over the grid, record the smallest entry of
/// the interior inverse, and bracket the sign change by bisection between
/// the first grid pair with opposite signs. No monotonicity is assumed; the
/// bracket is the reproducible statement.
inline std::vector<GkSweep> sweep_gk(std::span<const int> k_list, std::span<const double> theta_grid,
                                     double bisect_tol = 1e-4) {
    std::vector<GkSweep> out;
    for (int k : k_list) {
        GkSweep sweep;
        sweep.k = k;
        for (double theta : theta_grid) {
            try {
                const Mesh mesh = gk_patch(k, theta);
                SweepRecord rec = detail::interior_inverse_min(mesh, theta);
                rec.certified = check_sdmp_a(assemble(mesh)).holds;
                sweep.records.push_back(rec);
            } catch (const NumericalError& err) {
                sweep.failures.push_back({theta, err.what()});
            }
        }
        for (size_t i = 1; i < sweep.records.size() && !sweep.bracket; ++i) {
            double lo = sweep.records[i - 1].parameter, hi = sweep.records[i].parameter;
            double flo = sweep.records[i - 1].min_entry, fhi = sweep.records[i].min_entry;
            if (flo == 0.0 || flo * fhi >= 0.0) continue;
            while (hi - lo > bisect_tol) {
                const double mid = 0.5 * (lo + hi);
                const double fmid = detail::interior_inverse_min(gk_patch(k, mid), mid).min_entry;
                if (fmid == 0.0) { lo = hi = mid; break; }
                if ((fmid < 0.0) == (flo < 0.0)) { lo = mid; flo = fmid; }
                else hi = mid;
            }
            sweep.bracket = std::make_pair(lo, hi);
        }
        out.push_back(std::move(sweep));
    }
    return out;
}

struct DegenerateSweep {
    std::vector<SweepRecord> records;
    std::vector<SweepFailure> failures;
};

/// Smallest entry of S(alpha)^{-1} for the patch E, over an alpha grid.
/// The per-alpha "certified" flag is the relaxed patch test (inverse
/// positive, boundary coupling nonpositive).
inline DegenerateSweep sweep_degenerate(std::span<const double> alpha_grid) {
    DegenerateSweep out;
    for (double alpha : alpha_grid) {
        try {
            const DegeneratePatch dp = degenerate_patch(alpha);
            const AssembledSystem sys = assemble(dp.patch.mesh);
            const Matrix s = submatrix(sys.A, dp.interior_order, dp.interior_order);
            const Matrix inv = invert(s).inverse;
            const SignReport rep = sign_test(inv, SignMode::Positive);
            SweepRecord rec;
            rec.parameter = alpha;
            rec.min_entry = rep.min_entry;
            rec.row = rep.argmin_row;
            rec.col = rep.argmin_col;
            const Matrix s_ab = submatrix(sys.A, dp.interior_order, sys.partition.beta);
            rec.certified = rep.passed(SignMode::Positive) &&
                            sign_test(s_ab, SignMode::Nonpositive).passed(SignMode::Nonpositive);
            out.records.push_back(rec);
        } catch (const NumericalError& err) {
            out.failures.push_back({alpha, err.what()});
        }
    }
    return out;
}

/// Logarithmic alpha grid matching the published sweep range.
inline std::vector<double> default_alpha_grid(int points = 50, double lo = 2.36e-4,
                                              double hi = std::numbers::pi / 6) {
    std::vector<double> grid(points);
    for (int i = 0; i < points; ++i)
        grid[i] = lo * std::pow(hi / lo, static_cast<double>(i) / (points - 1));
    return grid;
}

/// Everything the hierarchical-basis computation produces at one alpha:
/// the patch stiffness S in the nodal basis (order B, C, A, M, N, P), the
/// hierarchical-basis stiffness S~ with its blocks, the change of basis E,
/// the Schur complement, and the exact limit matrices.
struct AppendixBundle {
    Matrix S;          // nodal-basis interior stiffness of patch E
    Matrix S_tilde;    // hierarchical-basis stiffness
    Matrix E;          // change of basis, S = E S~ E^T
    Matrix R;          // coarse-hat values at M, N, P (rows B, C, A)
    Matrix A_blk, B_blk, C_blk;  // S~ = [[A, B], [B^T, C]]
    Matrix schur;                // A - B C^{-1} B^T
    Matrix S_tilde_inv_direct;   // direct inverse
    Matrix S_tilde_inv_blocks;   // via the block-inversion formula
    Matrix A_inv;                // computed from A_blk
    Matrix C0, C0_inv, R0, D0;   // exact limit references
    Matrix A_inv_R0, R0t_A_inv_R0;
    Matrix T0;                   // [[A^{-1}, A^{-1}R0], [R0^T A^{-1}, R0^T A^{-1} R0]]
    double hierarchical_identity_rel_err = 0.0;  // ||S - E S~ E^T|| / ||S||
};

namespace detail {

inline Matrix exact_c0() {
    Matrix c(3, 3);
    c(0, 0) = 1.5;  c(0, 1) = -1.0;  c(0, 2) = -1.0;
    c(1, 0) = -1.0; c(1, 1) = 1.25;  c(1, 2) = 0.25;
    c(2, 0) = -1.0; c(2, 1) = 0.25;  c(2, 2) = 1.25;
    return c;
}

inline Matrix exact_r0() {
    Matrix r(3, 3);
    r(0, 0) = 0.5; r(0, 1) = 0.75; r(0, 2) = 0.25;
    r(1, 0) = 0.5; r(1, 1) = 0.25; r(1, 2) = 0.75;
    return r;
}

inline Matrix exact_d0() {
    Matrix d(3, 3);
    d(0, 0) = -3.0; d(0, 1) = -2.0; d(0, 2) = -2.0;
    d(1, 0) = -3.0; d(1, 1) = -2.0; d(1, 2) = -2.0;
    d(2, 0) = 3.0;  d(2, 1) = 2.0;  d(2, 2) = 2.0;
    return d;
}

/// Barycentric coordinates of p with respect to triangle (q0, q1, q2).
inline std::array<double, 3> barycentric(Vec2 p, Vec2 q0, Vec2 q1, Vec2 q2) {
    const double det = cross(q1 - q0, q2 - q0);
    const double l1 = cross(p - q0, q2 - q0) / det;
    const double l2 = cross(q1 - q0, p - q0) / det;
    return {1.0 - l1 - l2, l1, l2};
}

}  // namespace detail

inline AppendixBundle appendix_matrices(double alpha) {
    const DegeneratePatch dp = degenerate_patch(alpha);
    const Mesh& pm = dp.patch.mesh;
    const Matrix a_full = stiffness_laplace(pm);

    AppendixBundle bundle;
    const std::array<int, 6>& ord = dp.interior_order;  // B C A M N P
    bundle.S = submatrix(a_full, ord, ord);

    // Coarse-hat values at the added points: barycentric coordinates of
    // M, N, P inside triangle (B, C, A) of the embedded geometry.
    bundle.R = Matrix(3, 3);
    for (int col = 0; col < 3; ++col) {
        const std::array<double, 3> lam = detail::barycentric(
            pm.vertex(ord[3 + col]), pm.vertex(ord[0]), pm.vertex(ord[1]), pm.vertex(ord[2]));
        for (int row = 0; row < 3; ++row) bundle.R(row, col) = lam[row];
    }

    // Hierarchical basis: coarse hats at B, C, A (fine hat plus R-weighted
    // fine hats at M, N, P), fine hats at M, N, P.
    const int n = pm.vertex_count();
    Matrix basis(6, n);
    for (int k = 0; k < 6; ++k) basis(k, ord[k]) = 1.0;
    for (int row = 0; row < 3; ++row)
        for (int col = 0; col < 3; ++col) basis(row, ord[3 + col]) += bundle.R(row, col);
    bundle.S_tilde = basis * a_full * transpose(basis);

    bundle.E = Matrix::identity(6);
    for (int row = 0; row < 3; ++row)
        for (int col = 0; col < 3; ++col) bundle.E(row, 3 + col) = -bundle.R(row, col);

    const Matrix reconstructed = bundle.E * bundle.S_tilde * transpose(bundle.E);
    bundle.hierarchical_identity_rel_err = max_abs_diff(bundle.S, reconstructed) / max_abs(bundle.S);

    bundle.A_blk = Matrix(3, 3);
    bundle.B_blk = Matrix(3, 3);
    bundle.C_blk = Matrix(3, 3);
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) {
            bundle.A_blk(i, j) = bundle.S_tilde(i, j);
            bundle.B_blk(i, j) = bundle.S_tilde(i, 3 + j);
            bundle.C_blk(i, j) = bundle.S_tilde(3 + i, 3 + j);
        }

    const Matrix c_inv = invert(bundle.C_blk).inverse;
    bundle.schur = bundle.A_blk - bundle.B_blk * c_inv * transpose(bundle.B_blk);

    // Block inversion of S~: with D = -B C^{-1} and Shat the Schur
    // complement of C, S~^{-1} = [[Shat^{-1}, Shat^{-1} D],
    //                             [D^T Shat^{-1}, C^{-1} + D^T Shat^{-1} D]].
    const Matrix d = -1.0 * (bundle.B_blk * c_inv);
    const Matrix schur_inv = invert(bundle.schur).inverse;
    const Matrix top_right = schur_inv * d;
    const Matrix bottom = c_inv + transpose(d) * schur_inv * d;
    bundle.S_tilde_inv_blocks = Matrix(6, 6);
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) {
            bundle.S_tilde_inv_blocks(i, j) = schur_inv(i, j);
            bundle.S_tilde_inv_blocks(i, 3 + j) = top_right(i, j);
            bundle.S_tilde_inv_blocks(3 + i, j) = top_right(j, i);
            bundle.S_tilde_inv_blocks(3 + i, 3 + j) = bottom(i, j);
        }
    bundle.S_tilde_inv_direct = invert(bundle.S_tilde).inverse;

    bundle.A_inv = invert(bundle.A_blk).inverse;
    bundle.C0 = detail::exact_c0();
    bundle.C0_inv = invert(bundle.C0).inverse;
    bundle.R0 = detail::exact_r0();
    bundle.D0 = detail::exact_d0();
    bundle.A_inv_R0 = bundle.A_inv * bundle.R0;
    bundle.R0t_A_inv_R0 = transpose(bundle.R0) * bundle.A_inv_R0;

    bundle.T0 = Matrix(6, 6);
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) {
            bundle.T0(i, j) = bundle.A_inv(i, j);
            bundle.T0(i, 3 + j) = bundle.A_inv_R0(i, j);
            bundle.T0(3 + i, j) = bundle.A_inv_R0(j, i);
            bundle.T0(3 + i, 3 + j) = bundle.R0t_A_inv_R0(i, j);
        }
    return bundle;
}

/// Green's functions for the two degenerate placements: one layer inside
/// (all interior values positive) versus at the boundary (negative value at
/// N). Source is the construction vertex P.
struct GreenComparison {
    Mesh inside_mesh;
    Mesh boundary_mesh;
    DiscreteSolution inside;
    DiscreteSolution boundary;
    double inside_min_interior = 0.0;
    double boundary_value_at_n = 0.0;
};

inline GreenComparison reproduce_green_comparison(double alpha = 0.05, int n = 8) {
    DegenerateSpec inside_spec{alpha, DegeneratePlacement::OneLayerInside, n, {-1, -1}};
    DegenerateSpec boundary_spec{alpha, DegeneratePlacement::AtBoundary, n, {-1, -1}};
    Mesh inside_mesh = embed_degenerate(inside_spec);
    Mesh boundary_mesh = embed_degenerate(boundary_spec);

    const AssembledSystem sys_in = assemble(inside_mesh);
    const AssembledSystem sys_bd = assemble(boundary_mesh);
    DiscreteSolution g_in = greens_column(sys_in, inside_mesh.label("P"));
    DiscreteSolution g_bd = greens_column(sys_bd, boundary_mesh.label("P"));

    double min_interior = std::numeric_limits<double>::infinity();
    for (int v : sys_in.partition.alpha) min_interior = std::min(min_interior, g_in.u[v]);

    GreenComparison cmp{std::move(inside_mesh), std::move(boundary_mesh), std::move(g_in), std::move(g_bd),
                        min_interior, 0.0};
    cmp.boundary_value_at_n = cmp.boundary.u[cmp.boundary_mesh.label("N")];
    return cmp;
}

}  // namespace dmp
