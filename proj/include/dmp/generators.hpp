#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <numbers>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "dmp/mesh.hpp"

namespace dmp {

// ---------------------------------------------------------------------------
// Structured generators for the mesh families used throughout: three-line
// square meshes, rhombus meshes with per-cell diagonal choice, G_k(theta)
// defect patches and defect-embedded domains, and the degenerate-triangle
// constructions.
//
// Grid numbering convention, used by every lattice generator here: vertex
// (i,j) gets index i + j*(n+1), i.e. lexicographic with i fastest. For the
// unit-square mesh at n=5 this places the figure labels P6 = vertex (1,0)
// and P31 = vertex (0,1) (1-based).
// ---------------------------------------------------------------------------

enum class DiagonalCut { Short, Long };

/// Classical three-line mesh on the unit square: n x n cells, each cut by
/// the diagonal parallel to y = x. (n+1)^2 vertices, 2n^2 triangles.
inline Mesh three_line_mesh(int n) {
    if (n < 1) throw MeshError("three_line_mesh: n must be >= 1");
    const int np = n + 1;
    std::vector<Vec2> verts(static_cast<size_t>(np) * np);
    for (int j = 0; j < np; ++j)
        for (int i = 0; i < np; ++i)
            verts[static_cast<size_t>(j) * np + i] = {static_cast<double>(i) / n, static_cast<double>(j) / n};
    auto id = [np](int i, int j) { return j * np + i; };
    std::vector<Triangle> tris;
    tris.reserve(2 * static_cast<size_t>(n) * n);
    for (int j = 0; j < n; ++j)
        for (int i = 0; i < n; ++i) {
            tris.push_back({id(i, j), id(i + 1, j), id(i + 1, j + 1)});
            tris.push_back({id(i, j), id(i + 1, j + 1), id(i, j + 1)});
        }
    return Mesh(std::move(verts), std::move(tris));
}

/// Rhombus mesh specification. Two coordinate conventions, chosen by theta:
///   theta >= pi/2: D(theta) spanned by v0=(1,0) and (cos theta, sin theta),
///     "short" diagonal is the main one (cell corner to far corner); the
///     square case theta = pi/2 reproduces three_line_mesh exactly.
///   theta <  pi/2: rhombus centered at the origin with the long diagonal on
///     the x-axis and acute angle theta; "short" cell diagonal is vertical,
///     "long" is horizontal (the defective cut).
/// trim_corners removes the two triangles containing the sharp corners on
/// the long axis, which otherwise carry basis functions supported in a
/// single triangle.
struct RhombusSpec {
    double theta = std::numbers::pi / 2;
    int n = 1;
    std::vector<DiagonalCut> cut_rule;  // n*n entries, cell (i,j) at i + j*n; empty = all Short
    bool trim_corners = false;

    DiagonalCut cut(int i, int j) const {
        if (cut_rule.empty()) return DiagonalCut::Short;
        return cut_rule[static_cast<size_t>(j) * n + i];
    }
};

namespace detail {

struct LatticeMeshResult {
    Mesh mesh;
    std::vector<int> grid_to_vertex;  // (i,j) -> vertex id, -1 if dropped; index i + j*(n+1)
    std::vector<int> cell_first_tri;  // cell (i,j) -> first of its (1 or 2) triangles
    std::vector<int> cell_tri_count;
};

/// Shared lattice mesher: grid points p(i,j) = origin + i*d1 + j*d2, cells
/// cut per rule, with an optional set of removed triangles given as
/// (cell, which-half) pairs. main_is_short tells which geometric diagonal
/// the Short rule refers to in the active convention.
inline LatticeMeshResult lattice_mesh(int n, Vec2 origin, Vec2 d1, Vec2 d2, bool main_is_short,
                                      const std::function<DiagonalCut(int, int)>& rule,
                                      const std::set<std::pair<int, int>>& removed_corner_vertices) {
    const int np = n + 1;
    auto gi = [np](int i, int j) { return j * np + i; };

    std::vector<char> vertex_used(static_cast<size_t>(np) * np, 0);
    struct CellTris {
        Triangle t[2];
        int count = 0;
    };
    std::vector<CellTris> cells(static_cast<size_t>(n) * n);

    for (int j = 0; j < n; ++j)
        for (int i = 0; i < n; ++i) {
            const DiagonalCut cut = rule(i, j);
            const bool main_cut = (cut == DiagonalCut::Short) == main_is_short;
            CellTris& ct = cells[static_cast<size_t>(j) * n + i];
            if (main_cut) {
                // diagonal p(i,j) -- p(i+1,j+1)
                ct.t[0] = {gi(i, j), gi(i + 1, j), gi(i + 1, j + 1)};
                ct.t[1] = {gi(i, j), gi(i + 1, j + 1), gi(i, j + 1)};
            } else {
                // diagonal p(i+1,j) -- p(i,j+1)
                ct.t[0] = {gi(i, j), gi(i + 1, j), gi(i, j + 1)};
                ct.t[1] = {gi(i + 1, j), gi(i + 1, j + 1), gi(i, j + 1)};
            }
            ct.count = 2;
        }

    // Drop the triangles containing the listed sharp-corner grid points.
    for (auto [ci, cj] : removed_corner_vertices) {
        const int corner = gi(ci, cj);
        for (auto& ct : cells) {
            int w = 0;
            for (int k = 0; k < ct.count; ++k) {
                const Triangle& tr = ct.t[k];
                if (tr[0] != corner && tr[1] != corner && tr[2] != corner) ct.t[w++] = ct.t[k];
            }
            ct.count = w;
        }
    }

    for (const auto& ct : cells)
        for (int k = 0; k < ct.count; ++k)
            for (int v : ct.t[k]) vertex_used[v] = 1;

    std::vector<int> grid_to_vertex(static_cast<size_t>(np) * np, -1);
    std::vector<Vec2> verts;
    for (int j = 0; j < np; ++j)
        for (int i = 0; i < np; ++i)
            if (vertex_used[gi(i, j)]) {
                grid_to_vertex[gi(i, j)] = static_cast<int>(verts.size());
                verts.push_back(origin + static_cast<double>(i) * d1 + static_cast<double>(j) * d2);
            }

    std::vector<Triangle> tris;
    std::vector<int> cell_first(static_cast<size_t>(n) * n, -1), cell_count(static_cast<size_t>(n) * n, 0);
    for (int j = 0; j < n; ++j)
        for (int i = 0; i < n; ++i) {
            const CellTris& ct = cells[static_cast<size_t>(j) * n + i];
            cell_first[static_cast<size_t>(j) * n + i] = static_cast<int>(tris.size());
            cell_count[static_cast<size_t>(j) * n + i] = ct.count;
            for (int k = 0; k < ct.count; ++k)
                tris.push_back({grid_to_vertex[ct.t[k][0]], grid_to_vertex[ct.t[k][1]], grid_to_vertex[ct.t[k][2]]});
        }

    return LatticeMeshResult{Mesh(std::move(verts), std::move(tris)), std::move(grid_to_vertex),
                             std::move(cell_first), std::move(cell_count)};
}

}  // namespace detail

inline detail::LatticeMeshResult rhombus_lattice(const RhombusSpec& spec) {
    if (!(spec.theta > 0.0 && spec.theta < std::numbers::pi))
        throw MeshError("rhombus_mesh: theta must be in (0, pi)");
    if (spec.n < 1) throw MeshError("rhombus_mesh: n must be >= 1");
    if (!spec.cut_rule.empty() && spec.cut_rule.size() != static_cast<size_t>(spec.n) * spec.n)
        throw MeshError("rhombus_mesh: cut_rule must have n*n entries");

    const double th = spec.theta;
    const int n = spec.n;
    Vec2 d1, d2, origin;
    bool main_is_short;
    if (th >= std::numbers::pi / 2) {
        // sides along (1,0) and (cos th, sin th); main diagonal |d1+d2| is
        // the short one for th > pi/2 (and ties at the square).
        d1 = {1.0 / n, 0.0};
        d2 = {std::cos(th) / n, std::sin(th) / n};
        origin = {0.0, 0.0};
        main_is_short = true;
    } else {
        // centered at the origin, long diagonal on the x-axis
        const double c = std::cos(th / 2), s = std::sin(th / 2);
        d1 = {c / n, -s / n};
        d2 = {c / n, s / n};
        origin = {-c, 0.0};  // grid point (0,0) is the left sharp corner
        main_is_short = false;
    }

    std::set<std::pair<int, int>> removed;
    if (spec.trim_corners) {
        // sharp corners on the long axis: grid (n,0) for the first convention,
        // grid (0,0) and (n,n) for the centered one
        if (th >= std::numbers::pi / 2) {
            removed.insert({n, 0});
            removed.insert({0, n});
        } else {
            removed.insert({0, 0});
            removed.insert({n, n});
        }
    }
    auto rule = [&spec](int i, int j) { return spec.cut(i, j); };
    return detail::lattice_mesh(n, origin, d1, d2, main_is_short, rule, removed);
}

inline Mesh rhombus_mesh(const RhombusSpec& spec) { return rhombus_lattice(spec).mesh; }

/// The G_k(theta) defect patch: a (k+2) x (k+2) block of elemental rhombi
/// where the central k x k cells are cut along their long (defective)
/// diagonal, the one-layer lining is cut short, and the two sharp corner
/// triangles on the x-axis are removed. Contains exactly k^2 edges violating
/// the angle condition for theta < pi/2. theta = pi/2 is the square limit.
inline Mesh gk_patch(int k, double theta) {
    if (k < 1) throw MeshError("gk_patch: k must be >= 1");
    if (!(theta > 0.0 && theta <= std::numbers::pi / 2))
        throw MeshError("gk_patch: theta must be in (0, pi/2]");
    const int m = k + 2;
    const double c = std::cos(theta / 2), s = std::sin(theta / 2);
    Vec2 d1{c / m, -s / m}, d2{c / m, s / m};
    std::set<std::pair<int, int>> removed{{0, 0}, {m, m}};
    auto rule = [k](int i, int j) {
        const bool central = i >= 1 && i <= k && j >= 1 && j <= k;
        return central ? DiagonalCut::Long : DiagonalCut::Short;
    };
    return detail::lattice_mesh(m, Vec2{-c, 0.0}, d1, d2, /*main_is_short=*/false, rule, removed).mesh;
}

/// Placement of a G_l defect block inside a rhombus partition: the l x l
/// cells anchored at `anchor` (cell coordinates) are cut along their long
/// diagonal. Only scale 1 is geometrically realizable in a uniform
/// partition; the surrounding patch footprint is (l+2)^2 cells.
struct DefectPlacement {
    int block_k = 1;
    std::pair<int, int> anchor = {1, 1};
    int scale = 1;
};

struct DefectMesh {
    Mesh mesh;
    std::vector<Subdomain> block_patches;  // K_i, each similar to G_l(theta)
    std::vector<Subdomain> star_patches;   // stars of the remaining interior vertices
    std::vector<std::pair<int, int>> defect_edges;  // vertex pairs
};

/// D~(theta) with embedded defect blocks. Validates the separation rule
/// (blocks pairwise separated, and separated from the boundary, by at least
/// one full ring of short-cut cells) and returns the patch cover: the K_i
/// blocks plus the stars of every other interior vertex.
inline DefectMesh defect_mesh(const RhombusSpec& base, const std::vector<DefectPlacement>& placements) {
    if (base.theta >= std::numbers::pi / 2)
        throw MeshError("defect_mesh: requires the centered convention (theta < pi/2)");
    const int n = base.n;
    for (size_t i = 0; i < placements.size(); ++i) {
        const auto& p = placements[i];
        if (p.scale != 1)
            throw MeshError("defect_mesh: only scale=1 blocks are realizable in a uniform partition");
        if (p.block_k < 1) throw MeshError("defect_mesh: block order must be >= 1");
        const auto [ax, ay] = p.anchor;
        if (ax < 1 || ay < 1 || ax + p.block_k > n - 1 || ay + p.block_k > n - 1)
            throw MeshError("defect_mesh: block " + std::to_string(i) +
                            " violates the one-cell separation from the boundary");
        for (size_t j = 0; j < i; ++j) {
            const auto& q = placements[j];
            const auto [bx, by] = q.anchor;
            const bool sep_x = ax + p.block_k < bx || bx + q.block_k < ax;
            const bool sep_y = ay + p.block_k < by || by + q.block_k < ay;
            if (!(sep_x || sep_y))
                throw MeshError("defect_mesh: blocks " + std::to_string(j) + " and " + std::to_string(i) +
                                " violate the one-cell separation rule");
        }
    }

    RhombusSpec spec = base;
    spec.trim_corners = true;
    if (spec.cut_rule.empty()) spec.cut_rule.assign(static_cast<size_t>(n) * n, DiagonalCut::Short);
    for (const auto& p : placements)
        for (int j = p.anchor.second; j < p.anchor.second + p.block_k; ++j)
            for (int i = p.anchor.first; i < p.anchor.first + p.block_k; ++i)
                spec.cut_rule[static_cast<size_t>(j) * n + i] = DiagonalCut::Long;

    detail::LatticeMeshResult lat = rhombus_lattice(spec);
    DefectMesh out{std::move(lat.mesh), {}, {}, {}};

    const int np = n + 1;
    auto gv = [&](int i, int j) { return lat.grid_to_vertex[static_cast<size_t>(j) * np + i]; };

    for (const auto& p : placements) {
        const auto [ax, ay] = p.anchor;
        for (int j = ay; j < ay + p.block_k; ++j)
            for (int i = ax; i < ax + p.block_k; ++i)
                out.defect_edges.push_back({gv(i, j), gv(i + 1, j + 1)});

        // K patch: the (l+2)^2 surrounding cells minus the two x-extreme
        // corner triangles, so the patch is a scaled copy of G_l(theta).
        std::vector<int> tri_ids;
        for (int j = ay - 1; j <= ay + p.block_k; ++j)
            for (int i = ax - 1; i <= ax + p.block_k; ++i) {
                const size_t cell = static_cast<size_t>(j) * n + i;
                for (int t = 0; t < lat.cell_tri_count[cell]; ++t) tri_ids.push_back(lat.cell_first_tri[cell] + t);
            }
        const int lo_corner = gv(ax - 1, ay - 1);
        const int hi_corner = gv(ax + p.block_k + 1, ay + p.block_k + 1);
        std::erase_if(tri_ids, [&](int t) {
            const Triangle& tr = out.mesh.triangle(t);
            for (int v : tr)
                if (v == lo_corner || v == hi_corner) return true;
            return false;
        });
        out.block_patches.push_back(extract_subdomain(out.mesh, tri_ids));
    }

    // Residual stars: interior vertices not strictly interior to any block.
    const IndexPartition part = classify_boundary(out.mesh);
    std::vector<char> in_block(out.mesh.vertex_count(), 0);
    for (const Subdomain& k : out.block_patches) {
        const IndexPartition sp = classify_boundary(k.mesh);
        for (int lv : sp.alpha) in_block[k.to_parent[lv]] = 1;
    }
    for (int v : part.alpha)
        if (!in_block[v]) out.star_patches.push_back(star(out.mesh, v));
    return out;
}

// ---------------------------------------------------------------------------
// Degenerate-triangle constructions.
//
// Unit construction: right triangle with corners B=(0,0), C=(1,0), A=(0,1),
// refined by M=(1/2,0), N=(1/4,t), P=(3/4,t) with t = tan(alpha)/4 into six
// triangles BMN, NMP, MCP, BNA, NPA, PCA. The edge N-P violates the angle
// condition for small alpha. When embedded, the neighbor triangle below the
// base (apex A' one lattice step below C) is split by M into two halves so
// the mesh stays conforming.
// ---------------------------------------------------------------------------

enum class DegeneratePlacement { Standalone, AtBoundary, OneLayerInside };

struct DegenerateSpec {
    double alpha = 0.1;
    DegeneratePlacement placement = DegeneratePlacement::OneLayerInside;
    int n = 8;                       // ambient three-line grid size
    std::pair<int, int> cell = {-1, -1};  // target cell; default picked per placement
    bool trim_corners = false;       // drop the two corner triangles not met by diagonals
};

namespace detail {

/// Height of N and P above the base. Rejects alpha for which the refined
/// triangles fold over the hypotenuse (tan(alpha)/4 >= 1/4) or degenerate.
inline double degenerate_height(double alpha) {
    if (!(alpha > 0.0 && alpha < std::numbers::pi / 2))
        throw MeshError("degenerate construction: alpha must be in (0, pi/2)");
    const double t = std::tan(alpha) / 4.0;
    if (!(t > 0.0 && t < 0.25))
        throw MeshError("degenerate construction: alpha leaves no positive-area triangulation");
    return t;
}

}  // namespace detail

/// Standalone refined triangle, unit scale.
inline Mesh degenerate_triangle_mesh(double alpha) {
    const double t = detail::degenerate_height(alpha);
    std::vector<Vec2> verts = {
        {0.0, 0.0},   // B
        {1.0, 0.0},   // C
        {0.0, 1.0},   // A
        {0.5, 0.0},   // M
        {0.25, t},    // N
        {0.75, t},    // P
    };
    std::vector<Triangle> tris = {
        {0, 3, 4},  // B M N
        {4, 3, 5},  // N M P
        {3, 1, 5},  // M C P
        {0, 4, 2},  // B N A
        {4, 5, 2},  // N P A
        {5, 1, 2},  // P C A
    };
    std::map<std::string, int> labels{{"B", 0}, {"C", 1}, {"A", 2}, {"M", 3}, {"N", 4}, {"P", 5}};
    return Mesh(std::move(verts), std::move(tris), std::move(labels));  // throws if alpha degenerates areas
}

/// Three-line mesh with one cell's lower triangle replaced by a scaled copy
/// of the unit construction. AtBoundary puts the refined base on the domain
/// boundary (the classical counterexample); OneLayerInside keeps it one cell
/// ring away and also splits the triangle below the base. Labels B, C, A, M,
/// N, P (and A_prime when present) name the mapped construction vertices.
inline Mesh embed_degenerate(const DegenerateSpec& spec) {
    if (spec.placement == DegeneratePlacement::Standalone) return degenerate_triangle_mesh(spec.alpha);
    const double t = detail::degenerate_height(spec.alpha);
    const int n = spec.n;
    if (n < 2) throw MeshError("embed_degenerate: n must be >= 2");

    int ci = spec.cell.first, cj = spec.cell.second;
    if (ci < 0 || cj < 0) {
        if (spec.placement == DegeneratePlacement::AtBoundary) { ci = (n - 1) / 2; cj = 0; }
        else { ci = 1; cj = 2; }
    }
    if (spec.placement == DegeneratePlacement::AtBoundary) {
        if (cj != 0 || ci < 0 || ci >= n)
            throw MeshError("embed_degenerate: AtBoundary needs a bottom-row cell");
    } else {
        // The partitioned region spans the refined cell and the split half of
        // the cell below it; one layer of unpartitioned triangles must
        // separate all of it from the boundary, so A' stays interior.
        if (ci < 1 || cj < 2 || ci > n - 2 || cj > n - 2)
            throw MeshError("embed_degenerate: OneLayerInside block violates the one-layer separation");
    }

    const int np = n + 1;
    const double h = 1.0 / n;
    auto id = [np](int i, int j) { return j * np + i; };

    std::vector<Vec2> verts(static_cast<size_t>(np) * np);
    for (int j = 0; j < np; ++j)
        for (int i = 0; i < np; ++i) verts[id(i, j)] = {i * h, j * h};

    // Similarity map of the unit construction onto the lower triangle of
    // cell (ci,cj): B -> (ci+1,cj), C -> (ci,cj), A -> (ci+1,cj+1),
    // A' -> (ci,cj-1). Reflections leave the Laplacian stiffness unchanged.
    auto map = [&](Vec2 p) { return Vec2{(ci + 1 - p.x) * h, (cj + p.y) * h}; };
    const int vB = id(ci + 1, cj), vC = id(ci, cj), vA = id(ci + 1, cj + 1);
    const int vM = static_cast<int>(verts.size());
    verts.push_back(map({0.5, 0.0}));
    const int vN = static_cast<int>(verts.size());
    verts.push_back(map({0.25, t}));
    const int vP = static_cast<int>(verts.size());
    verts.push_back(map({0.75, t}));

    std::vector<Triangle> tris;
    for (int j = 0; j < n; ++j)
        for (int i = 0; i < n; ++i) {
            const bool refined = (i == ci && j == cj);
            const bool split_below = spec.placement == DegeneratePlacement::OneLayerInside &&
                                     (i == ci && j == cj - 1);
            // the diagonals miss the corners (1,0) and (0,1); trimming their
            // single triangles removes the boundary vertices with no
            // interior neighbor
            const bool trim_lo = spec.trim_corners && i == n - 1 && j == 0;
            const bool trim_hi = spec.trim_corners && i == 0 && j == n - 1;
            if (refined && (trim_lo || trim_hi))
                throw MeshError("embed_degenerate: refined cell collides with a trimmed corner");
            if (!refined && !trim_lo) tris.push_back({id(i, j), id(i + 1, j), id(i + 1, j + 1)});
            if (refined) {
                tris.push_back({vB, vM, vN});
                tris.push_back({vN, vM, vP});
                tris.push_back({vM, vC, vP});
                tris.push_back({vB, vN, vA});
                tris.push_back({vN, vP, vA});
                tris.push_back({vP, vC, vA});
            }
            if (split_below) {
                // upper half of the cell below the base, split by M-A'
                tris.push_back({vB, vM, id(ci, cj - 1)});
                tris.push_back({vM, vC, id(ci, cj - 1)});
            } else if (!trim_hi) {
                tris.push_back({id(i, j), id(i + 1, j + 1), id(i, j + 1)});
            }
        }

    std::map<std::string, int> labels{{"B", vB}, {"C", vC}, {"A", vA}, {"M", vM}, {"N", vN}, {"P", vP}};
    if (spec.placement == DegeneratePlacement::OneLayerInside) labels["A_prime"] = id(ci, cj - 1);

    if (spec.trim_corners) {  // drop the now-unused corner vertices, keep index order
        std::vector<char> used(verts.size(), 0);
        for (const Triangle& tr : tris)
            for (int v : tr) used[v] = 1;
        std::vector<int> remap(verts.size(), -1);
        std::vector<Vec2> kept;
        for (size_t v = 0; v < verts.size(); ++v)
            if (used[v]) {
                remap[v] = static_cast<int>(kept.size());
                kept.push_back(verts[v]);
            }
        for (Triangle& tr : tris)
            for (int& v : tr) v = remap[v];
        for (auto& [name, v] : labels) v = remap[v];
        verts = std::move(kept);
    }
    return Mesh(std::move(verts), std::move(tris), std::move(labels));
}

struct DegeneratePatch {
    Mesh mesh;                        // the embedding
    Subdomain patch;                  // E = union of supports of the six basis functions
    std::array<int, 6> interior_order;  // local ids of B, C, A, M, N, P in that order
};

/// The patch E around the embedded construction: union of the supports of
/// the nodal basis functions at B, C, A, M, N, P. Its interior vertices are
/// exactly those six, in that order.
inline DegeneratePatch degenerate_patch(double alpha, int n = 4) {
    DegenerateSpec spec;
    spec.alpha = alpha;
    spec.placement = DegeneratePlacement::OneLayerInside;
    spec.n = std::max(n, 4);
    Mesh mesh = embed_degenerate(spec);

    const char* names[6] = {"B", "C", "A", "M", "N", "P"};
    std::vector<int> tri_ids;
    for (const char* name : names) {
        const int v = mesh.label(name);
        for (int t : mesh.vertex_triangles()[v]) tri_ids.push_back(t);
    }
    Subdomain patch = extract_subdomain(mesh, tri_ids);

    const IndexPartition part = classify_boundary(patch.mesh);
    if (part.alpha.size() != 6)
        throw MeshError("degenerate_patch: patch interior is not the six construction vertices");
    std::array<int, 6> order{};
    for (int k = 0; k < 6; ++k) {
        order[k] = patch.local(mesh.label(names[k]));
        if (part.boundary(order[k]))
            throw MeshError("degenerate_patch: construction vertex not interior to the patch");
    }
    return DegeneratePatch{std::move(mesh), std::move(patch), order};
}

}  // namespace dmp
