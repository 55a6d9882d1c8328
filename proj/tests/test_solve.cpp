#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <numbers>
#include <random>

#include "dmp/generators.hpp"
#include "dmp/solve.hpp"
#include "dmp/studies.hpp"
#include "support/oracles.hpp"

using namespace dmp;
using std::numbers::pi;

namespace {

std::vector<double> zeros(const Mesh& m) { return std::vector<double>(m.vertex_count(), 0.0); }

std::vector<double> boundary_values(const Mesh& m, const IndexPartition& part,
                                    const std::function<double(Vec2)>& g) {
    std::vector<double> ub(m.vertex_count(), 0.0);
    for (int v : part.beta) ub[v] = g(m.vertex(v));
    return ub;
}

}  // namespace

TEST_CASE("solve_linear: constants, affine exactness, corner insensitivity") {
    const Mesh m = three_line_mesh(4);
    const AssembledSystem sys = assemble(m);

    // constant boundary data, zero source: the constant propagates exactly
    const std::vector<double> ub = boundary_values(m, sys.partition, [](Vec2) { return 3.25; });
    const DiscreteSolution flat = solve_linear(sys, zeros(m), ub);
    for (double u : flat.u) CHECK(u == Catch::Approx(3.25).margin(1e-12));
    CHECK(flat.residual_max < 1e-12);

    // affine boundary data: P1 reproduces affine discrete-harmonic functions
    auto g = [](Vec2 p) { return 0.7 * p.x - 1.3 * p.y + 0.4; };
    const DiscreteSolution affine = solve_linear(sys, zeros(m), boundary_values(m, sys.partition, g));
    for (int v = 0; v < m.vertex_count(); ++v)
        CHECK(affine.u[v] == Catch::Approx(g(m.vertex(v))).margin(1e-12));

    // u = u0 + ub at the nodes, u0 zero on the boundary
    for (int v : sys.partition.beta) {
        CHECK(affine.u0[v] == 0.0);
        CHECK(affine.u[v] == affine.ub[v]);
    }

    // changing only the four corner values leaves the interior unchanged
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u01(-1.0, 1.0);
    std::vector<double> ub2(m.vertex_count(), 0.0);
    for (int v : sys.partition.beta) ub2[v] = u01(rng);
    const DiscreteSolution base = solve_linear(sys, zeros(m), ub2);
    for (int v : sys.partition.beta) {
        const Vec2 p = m.vertex(v);
        if ((p.x == 0.0 || p.x == 1.0) && (p.y == 0.0 || p.y == 1.0)) ub2[v] += u01(rng) + 2.0;
    }
    const DiscreteSolution moved = solve_linear(sys, zeros(m), ub2);
    for (int v : sys.partition.alpha) CHECK(moved.u0[v] == Catch::Approx(base.u0[v]).margin(1e-12));
}

TEST_CASE("greens_column: positivity on certified meshes, sign flip at the boundary defect") {
    const Mesh g1 = gk_patch(1, pi / 3);
    const AssembledSystem sys = assemble(g1);
    for (int v : sys.partition.alpha) {
        const DiscreteSolution g = greens_column(sys, v);
        for (int w : sys.partition.alpha) CHECK(g.u[w] > 0.0);
    }
    CHECK_THROWS_AS(greens_column(sys, sys.partition.beta.front()), std::invalid_argument);

    const GreenComparison cmp = reproduce_green_comparison(0.05, 8);
    CHECK(cmp.inside_min_interior > 1e-12);
    CHECK(cmp.boundary_value_at_n < -1e-12);
}

TEST_CASE("boundary_influence: row sums and dead corner columns") {
    const Mesh m = three_line_mesh(4);
    const AssembledSystem sys = assemble(m);
    const Matrix infl = boundary_influence(sys);
    for (int i = 0; i < infl.rows; ++i) {
        double row = 0.0;
        for (int j = 0; j < infl.cols; ++j) row += infl(i, j);
        CHECK(row == Catch::Approx(1.0).margin(1e-12));
    }
    // corner columns vanish: those boundary values cannot influence anyone
    for (size_t j = 0; j < sys.partition.beta.size(); ++j) {
        const Vec2 p = m.vertex(sys.partition.beta[j]);
        if ((p.x == 0.0 || p.x == 1.0) && (p.y == 0.0 || p.y == 1.0))
            for (int i = 0; i < infl.rows; ++i) CHECK(std::abs(infl(i, static_cast<int>(j))) < 1e-13);
    }

    // with reaction the rows are damped below one on the acute mesh
    RhombusSpec rs;
    rs.theta = pi / 3;
    rs.n = 4;
    const Mesh eq = rhombus_mesh(rs);
    const Matrix damped = boundary_influence(assemble(eq, 2.0));
    for (int i = 0; i < damped.rows; ++i) {
        double row = 0.0;
        for (int j = 0; j < damped.cols; ++j) row += damped(i, j);
        CHECK(row < 1.0 + 1e-12);
    }
}

TEST_CASE("reaction function validation") {
    const Mesh m = three_line_mesh(2);
    CHECK_NOTHROW(validate_reaction(m, tanh_reaction()));
    CHECK_NOTHROW(validate_reaction(m, linear_reaction(2.0)));
    CHECK_NOTHROW(validate_reaction(m, table_reaction({{-2.0, -1.0}, {0.0, 0.0}, {2.0, 1.5}})));

    ReactionFunction bad = tanh_reaction();
    bad.c = [](Vec2, double u) { return std::tanh(u) + 0.1; };  // c(x,0) != 0
    CHECK_THROWS_AS(validate_reaction(m, bad), std::invalid_argument);

    ReactionFunction decreasing{[](Vec2, double u) { return -u; }, nullptr, 1.0};
    CHECK_THROWS_AS(validate_reaction(m, decreasing), std::invalid_argument);

    ReactionFunction lipschitz_violation{[](Vec2, double u) { return 5.0 * u; }, nullptr, 1.0};
    CHECK_THROWS_AS(validate_reaction(m, lipschitz_violation), std::invalid_argument);

    CHECK_THROWS_AS(table_reaction({{0.0, 0.0}, {1.0, -1.0}}), std::invalid_argument);
}

TEST_CASE("solve_semilinear: linear reduction and zero fixed point") {
    RhombusSpec rs;
    rs.theta = pi / 3;
    rs.n = 4;
    const Mesh m = rhombus_mesh(rs);
    const double c_tilde = 1.7;
    const AssembledSystem sys0 = assemble(m);           // reaction handled by the nonlinear path
    const AssembledSystem sysc = assemble(m, c_tilde);  // matrix path

    std::mt19937_64 rng(17);
    std::uniform_real_distribution<double> u01(-1.0, 1.0);
    std::vector<double> f(m.vertex_count(), 0.0), ub(m.vertex_count(), 0.0);
    for (int v : sys0.partition.alpha) f[v] = std::abs(u01(rng));
    for (int v : sys0.partition.beta) ub[v] = u01(rng);

    const DiscreteSolution lin = solve_linear(sysc, f, ub);
    const DiscreteSolution nl = solve_semilinear(m, sys0, linear_reaction(c_tilde), f, ub);
    for (int v = 0; v < m.vertex_count(); ++v) CHECK(nl.u[v] == Catch::Approx(lin.u[v]).margin(1e-10));

    // c(x,0) = 0 with zero data keeps the zero solution
    const DiscreteSolution zero =
        solve_semilinear(m, sys0, tanh_reaction(2.0), zeros(m), zeros(m));
    CHECK(max_abs(zero.u) < 1e-12);
    CHECK(zero.iterations <= 1);
}

TEST_CASE("solve_semilinear matches the Picard oracle and converges fast") {
    RhombusSpec rs;
    rs.theta = pi / 3;
    rs.n = 4;
    const Mesh m = rhombus_mesh(rs);
    const AssembledSystem sys = assemble(m);
    const ReactionFunction reaction = tanh_reaction();

    std::mt19937_64 rng(29);
    std::uniform_real_distribution<double> u01(0.0, 1.0);
    std::vector<double> f(m.vertex_count(), 0.0), ub(m.vertex_count(), 0.0);
    for (int v : sys.partition.alpha) f[v] = u01(rng);
    for (int v : sys.partition.beta) ub[v] = 2.0 * u01(rng) - 1.0;

    const DiscreteSolution newton = solve_semilinear(m, sys, reaction, f, ub);
    const std::vector<double> picard = oracle::picard_semilinear(m, sys, reaction.c, f, ub);
    for (int v = 0; v < m.vertex_count(); ++v) CHECK(newton.u[v] == Catch::Approx(picard[v]).margin(1e-8));

    CHECK(newton.residual_max < 1e-12 * (1.0 + max_abs(f)));
    CHECK(newton.iterations <= 10);
    // superlinear tail: each late residual far below the previous one
    const auto& hist = newton.residual_history;
    REQUIRE(hist.size() >= 2);
    for (size_t i = 1; i + 1 < hist.size(); ++i)
        if (hist[i] > 1e-13) CHECK(hist[i + 1] < 0.2 * hist[i]);

    // the finite-difference derivative fallback reaches the same solution
    ReactionFunction no_deriv = reaction;
    no_deriv.dc_du = nullptr;
    const DiscreteSolution fd = solve_semilinear(m, sys, no_deriv, f, ub);
    for (int v = 0; v < m.vertex_count(); ++v) CHECK(fd.u[v] == Catch::Approx(newton.u[v]).margin(1e-9));
}

TEST_CASE("restriction: solve-then-restrict equals restrict-then-solve") {
    std::mt19937_64 rng(31);
    std::uniform_real_distribution<double> u01(0.0, 1.0);
    for (std::uint64_t seed = 60; seed < 66; ++seed) {
        const Mesh m = oracle::random_valid_mesh(seed);
        const AssembledSystem sys = assemble(m);
        if (sys.partition.alpha.empty()) continue;

        std::vector<double> f(m.vertex_count(), 0.0), ub(m.vertex_count(), 0.0);
        for (int v : sys.partition.alpha) f[v] = u01(rng);
        for (int v : sys.partition.beta) ub[v] = 2.0 * u01(rng) - 1.0;

        // subdomain: union of stars of a few interior vertices
        std::vector<int> tri_ids;
        for (size_t k = 0; k < sys.partition.alpha.size(); k += 2) {
            const int v = sys.partition.alpha[k];
            for (int t : m.vertex_triangles()[v]) tri_ids.push_back(t);
        }
        const Subdomain sub = extract_subdomain(m, tri_ids);
        const AssembledSystem sub_sys = assemble(sub.mesh);

        for (bool semilinear : {false, true}) {
            const DiscreteSolution parent =
                semilinear ? solve_semilinear(m, sys, tanh_reaction(), f, ub) : solve_linear(sys, f, ub);

            std::vector<double> sub_f(sub.mesh.vertex_count(), 0.0), sub_ub(sub.mesh.vertex_count(), 0.0);
            const IndexPartition sub_part = classify_boundary(sub.mesh);
            for (int lv : sub_part.alpha) sub_f[lv] = f[sub.to_parent[lv]];
            for (int lv : sub_part.beta) sub_ub[lv] = parent.u[sub.to_parent[lv]];

            const DiscreteSolution restricted =
                semilinear ? solve_semilinear(sub.mesh, sub_sys, tanh_reaction(), sub_f, sub_ub)
                           : solve_linear(sub_sys, sub_f, sub_ub);
            for (int lv = 0; lv < sub.mesh.vertex_count(); ++lv)
                CHECK(restricted.u[lv] == Catch::Approx(parent.u[sub.to_parent[lv]]).margin(1e-10));
        }
    }
}

TEST_CASE("greens positivity matches the first sDMP-A condition") {
    for (std::uint64_t seed = 70; seed < 74; ++seed) {
        const Mesh m = oracle::random_valid_mesh(seed);
        const AssembledSystem sys = assemble(m);
        if (sys.partition.alpha.empty()) continue;
        const Matrix inv =
            invert(submatrix(sys.A, sys.partition.alpha, sys.partition.alpha)).inverse;
        const bool inv_positive = sign_test(inv, SignMode::Positive).passed(SignMode::Positive);
        bool all_columns_positive = true;
        for (int v : sys.partition.alpha) {
            const DiscreteSolution g = greens_column(sys, v);
            for (int w : sys.partition.alpha) all_columns_positive = all_columns_positive && g.u[w] > 0.0;
        }
        CHECK(inv_positive == all_columns_positive);
    }
}

TEST_CASE("empirical_dmp_test: determinism, certified meshes, counterexample instance") {
    const Mesh g1 = gk_patch(1, pi / 3);
    const AssembledSystem sys = assemble(g1);
    const DmpTestReport a = empirical_dmp_test(sys, DmpMode::SdmpA, 200, 1234);
    CHECK(a.clean());
    const DmpTestReport b = empirical_dmp_test(sys, DmpMode::SdmpA, 200, 1234, 4);
    CHECK(b.violations.size() == a.violations.size());  // thread count cannot change results

    // three-line, wDMP-A: no violations
    const DmpTestReport tl = empirical_dmp_test(assemble(three_line_mesh(5)), DmpMode::WdmpA, 300, 5);
    CHECK(tl.clean());

    // boundary-placed degenerate block: the Green's column at P yields a
    // violating instance by construction (source at P, zero boundary data)
    DegenerateSpec spec;
    spec.alpha = 0.05;
    spec.n = 8;
    spec.placement = DegeneratePlacement::AtBoundary;
    const Mesh bad = embed_degenerate(spec);
    const AssembledSystem bad_sys = assemble(bad);
    const DiscreteSolution g = greens_column(bad_sys, bad.label("P"));
    double min_u = 0.0;
    for (double u : g.u) min_u = std::min(min_u, u);
    CHECK(min_u < -1e-10);  // boundary minimum is 0, interior dips below: wDMP-A violated
}

TEST_CASE("semilinear empirical trials on an acute mesh stay clean") {
    RhombusSpec rs;
    rs.theta = pi / 3;
    rs.n = 3;
    const Mesh m = rhombus_mesh(rs);
    const AssembledSystem sys = assemble(m);
    const DmpTestReport rep =
        empirical_dmp_test_semilinear(m, sys, tanh_reaction(), DmpMode::SemilinearSdmpB, 100, 77);
    CHECK(rep.clean());
}
