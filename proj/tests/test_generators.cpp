#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <numbers>

#include "dmp/assembly.hpp"
#include "dmp/certify.hpp"
#include "dmp/generators.hpp"
#include "support/oracles.hpp"

using namespace dmp;
using std::numbers::pi;

TEST_CASE("three_line_mesh counts and geometry") {
    const Mesh m1 = three_line_mesh(1);
    CHECK(m1.vertex_count() == 4);
    CHECK(m1.triangle_count() == 2);

    const Mesh m5 = three_line_mesh(5);
    CHECK(m5.vertex_count() == 36);
    CHECK(m5.triangle_count() == 50);

    const Mesh m2 = three_line_mesh(2);
    CHECK(m2.vertex_count() == 9);
    CHECK(m2.triangle_count() == 8);

    CHECK_THROWS_AS(three_line_mesh(0), MeshError);

    // the cell diagonals run parallel to y = x: every diagonal-length edge
    // has direction (1,1)
    for (const auto& e : m2.edges()) {
        const Vec2 d = m2.vertex(e.b) - m2.vertex(e.a);
        if (std::abs(norm(d) - std::hypot(0.5, 0.5)) < 1e-12)
            CHECK(std::abs(std::abs(d.x) - std::abs(d.y)) < 1e-12);
    }
}

TEST_CASE("rhombus_mesh: square case equals the three-line mesh") {
    RhombusSpec spec;
    spec.theta = pi / 2;
    spec.n = 4;
    const Mesh rh = rhombus_mesh(spec);
    const Mesh tl = three_line_mesh(4);
    REQUIRE(rh.vertex_count() == tl.vertex_count());
    REQUIRE(rh.triangle_count() == tl.triangle_count());
    for (int v = 0; v < rh.vertex_count(); ++v) {
        CHECK(rh.vertex(v).x == Catch::Approx(tl.vertex(v).x).margin(1e-15));
        CHECK(rh.vertex(v).y == Catch::Approx(tl.vertex(v).y).margin(1e-15));
    }
    CHECK(rh.triangles() == tl.triangles());
}

TEST_CASE("rhombus_mesh: obtuse convention trim removes the sharp-corner triangles") {
    RhombusSpec spec;
    spec.theta = 0.6 * pi;
    spec.n = 5;
    const Mesh full = rhombus_mesh(spec);
    CHECK(full.vertex_count() == 36);
    CHECK(full.triangle_count() == 50);

    spec.trim_corners = true;
    const Mesh trimmed = rhombus_mesh(spec);
    CHECK(trimmed.vertex_count() == 34);
    CHECK(trimmed.triangle_count() == 48);
    // sharp corners (1,0) and (cos theta, sin theta) are gone
    for (int v = 0; v < trimmed.vertex_count(); ++v) {
        CHECK(norm(trimmed.vertex(v) - Vec2{1.0, 0.0}) > 1e-6);
        CHECK(norm(trimmed.vertex(v) - Vec2{std::cos(spec.theta), std::sin(spec.theta)}) > 1e-6);
    }
}

TEST_CASE("rhombus_mesh: acute short-cut mesh is equilateral at theta = pi/3") {
    RhombusSpec spec;
    spec.theta = pi / 3;
    spec.n = 4;
    const Mesh m = rhombus_mesh(spec);
    const AngleAudit audit = angle_condition_audit(m);
    CHECK(audit.defects.empty());
    CHECK(audit.borderline.empty());
    for (int t = 0; t < m.triangle_count(); ++t) {
        const Triangle& tr = m.triangle(t);
        for (int e = 0; e < 3; ++e) {
            const Vec2 u = m.vertex(tr[(e + 1) % 3]) - m.vertex(tr[e]);
            const Vec2 w = m.vertex(tr[(e + 2) % 3]) - m.vertex(tr[e]);
            const double ang = std::atan2(std::abs(cross(u, w)), dot(u, w));
            CHECK(ang == Catch::Approx(pi / 3).margin(1e-12));
        }
    }
}

TEST_CASE("gk_patch: counts, defect edges, and star sizes") {
    const Mesh g1 = gk_patch(1, pi / 3);
    CHECK(g1.vertex_count() == 14);   // 4x4 grid minus the two trimmed corners
    CHECK(g1.triangle_count() == 16);
    const AngleAudit a1 = angle_condition_audit(g1);
    CHECK(a1.defects.size() == 1);
    CHECK(a1.borderline.empty());

    const Mesh g2 = gk_patch(2, 2 * pi / 5);
    CHECK(angle_condition_audit(g2).defects.size() == 4);

    for (int k : {1, 2, 3}) {
        const Mesh gk = gk_patch(k, 0.45 * pi);
        const AngleAudit audit = angle_condition_audit(gk);
        CHECK(audit.defects.size() == static_cast<size_t>(k) * k);
        // the defective edges are exactly the horizontal long-diagonal cuts
        for (auto [va, vb] : audit.defects)
            CHECK(std::abs(gk.vertex(va).y - gk.vertex(vb).y) < 1e-12);
    }

    // Construction audit of the defect-edge endpoint stars in G_1: the trim
    // takes one triangle off each corner cell, leaving 7 incident triangles.
    const IndexPartition part = classify_boundary(g1);
    for (auto [va, vb] : a1.defects) {
        CHECK(part.interior(va));
        CHECK(part.interior(vb));
        CHECK(star(g1, va).mesh.triangle_count() == 7);
        CHECK(star(g1, vb).mesh.triangle_count() == 7);
    }

    CHECK_THROWS_AS(gk_patch(0, pi / 3), MeshError);
    CHECK_THROWS_AS(gk_patch(1, 0.7 * pi), MeshError);
}

TEST_CASE("gk_patch at theta = pi/2 is the square limit") {
    const Mesh g = gk_patch(2, pi / 2);
    const AngleAudit audit = angle_condition_audit(g);
    CHECK(audit.defects.empty());  // every cut diagonal is borderline at the square
    // 16 cells, one interior cut diagonal each, minus the two trimmed cells
    // whose diagonals became boundary edges
    CHECK(audit.borderline.size() == 14);
}

TEST_CASE("defect_mesh: separation validation and the returned cover") {
    RhombusSpec base;
    base.theta = pi / 3;
    base.n = 10;

    // boundary separation violation
    CHECK_THROWS_WITH(defect_mesh(base, {{1, {0, 3}, 1}}), Catch::Matchers::ContainsSubstring("boundary"));
    // pairwise separation violation names the offending pair
    CHECK_THROWS_WITH(defect_mesh(base, {{1, {2, 2}, 1}, {1, {3, 3}, 1}}),
                      Catch::Matchers::ContainsSubstring("blocks 0 and 1"));
    // unsupported scale
    CHECK_THROWS_WITH(defect_mesh(base, {{1, {2, 2}, 2}}), Catch::Matchers::ContainsSubstring("scale"));

    // Fig. 5 style configuration: four G_1 blocks
    const std::vector<DefectPlacement> blocks = {{1, {2, 2}, 1}, {1, {2, 6}, 1}, {1, {6, 2}, 1}, {1, {6, 6}, 1}};
    const DefectMesh dm = defect_mesh(base, blocks);
    CHECK(dm.defect_edges.size() == 4);
    CHECK(angle_condition_audit(dm.mesh).defects.size() == 4);
    REQUIRE(dm.block_patches.size() == 4);

    // each block patch is a scaled copy of G_1(pi/3)
    const Mesh g1 = gk_patch(1, pi / 3);
    for (const Subdomain& k : dm.block_patches) CHECK(oracle::congruent_up_to_similarity(k.mesh, g1));

    // blocks plus residual stars cover the interior
    std::vector<Subdomain> cover = dm.block_patches;
    cover.insert(cover.end(), dm.star_patches.begin(), dm.star_patches.end());
    CHECK(covers_interior(dm.mesh, cover).empty());

    // empty placements: plain trimmed rhombus with no defects
    const DefectMesh plain = defect_mesh(base, {});
    CHECK(plain.defect_edges.empty());
    CHECK(angle_condition_audit(plain.mesh).defects.empty());
}

TEST_CASE("degenerate_triangle_mesh: coordinates, validity range, defect edge") {
    const Mesh m = degenerate_triangle_mesh(pi / 6);
    CHECK(m.vertex_count() == 6);
    CHECK(m.triangle_count() == 6);
    for (int t = 0; t < m.triangle_count(); ++t) CHECK(m.signed_area(t) > 0.0);
    const Vec2 n_pos = m.vertex(m.label("N"));
    CHECK(n_pos.x == Catch::Approx(0.25));
    CHECK(n_pos.y == Catch::Approx(std::tan(pi / 6) / 4));

    CHECK_THROWS_AS(degenerate_triangle_mesh(0.0), MeshError);
    // tan(alpha)/4 reaches the hypotenuse at alpha = pi/4, collapsing PCA
    CHECK_THROWS_AS(degenerate_triangle_mesh(pi / 3), MeshError);

    // the defective edge for small alpha is N-P, with positive stiffness
    // entry; M-P keeps a negative entry (its opposite angles stay acute)
    const Mesh small = degenerate_triangle_mesh(0.1);
    const Matrix a = stiffness_laplace(small);
    CHECK(a(small.label("N"), small.label("P")) > 0.0);
    CHECK(a(small.label("M"), small.label("P")) < 0.0);
    const AngleAudit audit = angle_condition_audit(small);
    REQUIRE(audit.defects.size() == 1);
    const auto [da, db] = audit.defects[0];
    CHECK(((da == small.label("N") && db == small.label("P")) ||
           (da == small.label("P") && db == small.label("N"))));
}

TEST_CASE("embed_degenerate: placements") {
    DegenerateSpec spec;
    spec.alpha = 0.1;
    spec.n = 8;

    spec.placement = DegeneratePlacement::Standalone;
    CHECK(embed_degenerate(spec).triangle_count() == 6);

    spec.placement = DegeneratePlacement::OneLayerInside;
    const Mesh inside = embed_degenerate(spec);
    // 2n^2 coarse triangles, minus the refined one plus six, plus one extra
    // from the split below the base
    CHECK(inside.triangle_count() == 2 * 8 * 8 + 5 + 1);
    CHECK(inside.vertex_count() == 81 + 3);
    const IndexPartition part = classify_boundary(inside);
    for (const char* name : {"B", "C", "A", "M", "N", "P"}) CHECK(part.interior(inside.label(name)));

    spec.placement = DegeneratePlacement::AtBoundary;
    const Mesh at_bdry = embed_degenerate(spec);
    CHECK(at_bdry.triangle_count() == 2 * 8 * 8 + 5);
    const IndexPartition pb = classify_boundary(at_bdry);
    CHECK(pb.boundary(at_bdry.label("M")));
    CHECK(pb.interior(at_bdry.label("N")));
    CHECK(pb.interior(at_bdry.label("P")));

    spec.placement = DegeneratePlacement::OneLayerInside;
    spec.cell = {0, 1};
    CHECK_THROWS_AS(embed_degenerate(spec), MeshError);
}

TEST_CASE("degenerate_patch: interior is B, C, A, M, N, P in order") {
    const DegeneratePatch dp = degenerate_patch(0.1);
    CHECK(dp.patch.mesh.triangle_count() == 19);
    CHECK(dp.patch.mesh.vertex_count() == 15);
    const IndexPartition part = classify_boundary(dp.patch.mesh);
    REQUIRE(part.alpha.size() == 6);
    const char* names[6] = {"B", "C", "A", "M", "N", "P"};
    for (int k = 0; k < 6; ++k) {
        CHECK(part.interior(dp.interior_order[k]));
        CHECK(dp.patch.mesh.label(names[k]) == dp.interior_order[k]);
    }
    // A' (the vertex below C) is on the patch boundary
    const int a_prime_parent = dp.mesh.label("A_prime");
    REQUIRE(dp.patch.contains_parent_vertex(a_prime_parent));
    CHECK(part.boundary(dp.patch.local(a_prime_parent)));
}

TEST_CASE("embedded G_1 block has the same interior inverse as the standalone patch") {
    RhombusSpec base;
    base.theta = pi / 3;
    base.n = 8;
    const DefectMesh dm = defect_mesh(base, {{1, {3, 3}, 1}});
    REQUIRE(dm.block_patches.size() == 1);
    const Mesh g1 = gk_patch(1, pi / 3);

    // stiffness is scale invariant, so the smallest inverse entries agree
    const AssembledSystem sys_block = assemble(dm.block_patches[0].mesh);
    const AssembledSystem sys_ref = assemble(g1);
    const Matrix inv_block =
        invert(submatrix(sys_block.A, sys_block.partition.alpha, sys_block.partition.alpha)).inverse;
    const Matrix inv_ref =
        invert(submatrix(sys_ref.A, sys_ref.partition.alpha, sys_ref.partition.alpha)).inverse;
    CHECK(sign_test(inv_block, SignMode::Positive).min_entry ==
          Catch::Approx(sign_test(inv_ref, SignMode::Positive).min_entry).epsilon(1e-10));
}
