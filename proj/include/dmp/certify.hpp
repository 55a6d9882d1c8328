#pragma once

#include <cmath>
#include <limits>
#include <numbers>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "dmp/assembly.hpp"
#include "dmp/linalg.hpp"
#include "dmp/mesh.hpp"

namespace dmp {

// Matrix criteria for the discrete maximum principles, the angle-condition
// audit, and the patch-cover globalization. The strong criteria on a domain
// with interior vertices alpha and boundary beta are
//   sDMP-A:  A_aa^{-1} > 0  and  A_aa^{-1} A_ab < 0          (c~ = 0)
//   sDMP-B:  same with A replaced by A + C                    (c~ >= 0)
// and the relaxed per-patch test for wDMP-A is
//   A_aa^{-1} > 0  and  A_ab <= 0.
// Globalization needs the interior-vertex graph connected, every boundary
// vertex adjacent to an interior one, and the patch interiors to cover the
// interior of the domain.

enum class DmpMode { SdmpA, SdmpB, WdmpA, SemilinearSdmpB };

inline const char* to_string(DmpMode m) {
    switch (m) {
        case DmpMode::SdmpA: return "sDMP-A";
        case DmpMode::SdmpB: return "sDMP-B";
        case DmpMode::WdmpA: return "wDMP-A";
        case DmpMode::SemilinearSdmpB: return "semilinear-sDMP-B";
    }
    return "?";
}

/// Interior edges violating the angle condition. `defects` lists strict
/// violations (theta1 + theta2 > pi + tol, positive stiffness entry),
/// `borderline` the zero-entry edges with theta1 + theta2 = pi within tol.
struct AngleAudit {
    std::vector<std::pair<int, int>> defects;
    std::vector<std::pair<int, int>> borderline;
    double tolerance = 0.0;
};

inline AngleAudit angle_condition_audit(const Mesh& mesh, double tau_angle = 1e-9) {
    AngleAudit audit;
    audit.tolerance = tau_angle;
    for (const Mesh::EdgeRecord& e : mesh.edges()) {
        if (e.count != 2) continue;
        double sum = 0.0;
        for (int s = 0; s < 2; ++s) {
            const Triangle& tr = mesh.triangle(e.tri[s]);
            int opp = -1;
            for (int v : tr)
                if (v != e.a && v != e.b) opp = v;
            const Vec2 u = mesh.vertex(e.a) - mesh.vertex(opp);
            const Vec2 w = mesh.vertex(e.b) - mesh.vertex(opp);
            sum += std::atan2(std::abs(cross(u, w)), dot(u, w));
        }
        if (std::abs(sum - std::numbers::pi) <= tau_angle) audit.borderline.push_back({e.a, e.b});
        else if (sum > std::numbers::pi) audit.defects.push_back({e.a, e.b});
    }
    return audit;
}

struct PatchReport {
    int patch_id = 0;
    int interior_size = 0;
    int boundary_size = 0;
    bool inverse_positive = false;
    double inverse_min_entry = 0.0;  // margin for the first condition
    bool coupling_ok = false;
    double coupling_margin = 0.0;    // > 0 passes; -max offending entry
    bool used_shortcut = false;
    bool holds = false;
    std::string failure;
};

struct SemilinearParams {
    double lipschitz = 0.0;   // L_c
    double c_a = 0.0;         // max over edges of M_ij / (h^2 |A_ij|)
    double h = 0.0;           // global max edge length
    double h_max = 0.0;       // sqrt(1 / (L_c * C_A))
};

inline double semilinear_h_max(double lipschitz, double c_a) {
    if (!(lipschitz > 0.0) || !(c_a > 0.0))
        throw std::invalid_argument("semilinear_h_max: L_c and C_A must be positive");
    return std::sqrt(1.0 / (lipschitz * c_a));
}

struct Certificate {
    DmpMode mode = DmpMode::SdmpA;
    bool holds = false;
    double c_tilde = 0.0;
    double tol_rel = 1e-12;

    // globalization preconditions (filled by cover-based certification)
    bool preconditions_checked = false;
    bool interior_connected = true;
    std::vector<int> unattached_boundary;  // boundary vertices with no interior neighbor
    std::vector<int> uncovered;            // interior vertices in no patch interior

    std::vector<PatchReport> patches;
    std::vector<std::pair<int, int>> defect_edges;
    std::optional<SemilinearParams> semilinear;
    std::string failure_reason;
};

namespace detail {

/// Evaluate the per-patch matrix conditions on slices of the global matrix
/// B (= A or A+C). alpha_i/beta_i are parent vertex ids. For the strict
/// modes the second condition is verified by the cheap route when it
/// applies (B_ab <= 0 with a strictly negative entry in every column, which
/// forces B_aa^{-1} B_ab < 0 given B_aa^{-1} > 0); otherwise the product is
/// formed and tested directly.
inline PatchReport check_patch_conditions(const Matrix& b, std::span<const int> alpha_i,
                                          std::span<const int> beta_i, DmpMode mode, double tol_rel) {
    PatchReport rep;
    rep.interior_size = static_cast<int>(alpha_i.size());
    rep.boundary_size = static_cast<int>(beta_i.size());
    if (alpha_i.empty()) {
        rep.failure = "patch has no interior vertices";
        return rep;
    }

    const Matrix b_aa = submatrix(b, alpha_i, alpha_i);
    const Matrix b_ab = submatrix(b, alpha_i, beta_i);

    Matrix b_aa_inv;
    try {
        b_aa_inv = invert(b_aa).inverse;
    } catch (const NumericalError& err) {
        rep.failure = std::string("singular interior block: ") + err.what();
        return rep;
    }

    const SignReport inv_sign = sign_test(b_aa_inv, SignMode::Positive, tol_rel);
    rep.inverse_positive = inv_sign.passed(SignMode::Positive);
    rep.inverse_min_entry = inv_sign.min_entry;

    if (mode == DmpMode::WdmpA) {
        const SignReport c = sign_test(b_ab, SignMode::Nonpositive, tol_rel);
        rep.coupling_ok = c.passed(SignMode::Nonpositive);
        rep.coupling_margin = -c.max_entry;
    } else {
        const double tau = tol_rel * std::max(max_abs(b_ab), max_abs(b_aa));
        bool shortcut = true;
        double worst_entry = -std::numeric_limits<double>::infinity();
        for (int j = 0; j < b_ab.cols && shortcut; ++j) {
            double col_min = std::numeric_limits<double>::infinity();
            for (int i = 0; i < b_ab.rows; ++i) {
                const double v = b_ab(i, j);
                if (v > tau) { shortcut = false; break; }
                worst_entry = std::max(worst_entry, v);
                col_min = std::min(col_min, v);
            }
            if (shortcut && !(col_min < -tau)) shortcut = false;  // column needs a strictly negative entry
        }
        if (shortcut && rep.inverse_positive) {
            rep.used_shortcut = true;
            rep.coupling_ok = true;
            rep.coupling_margin = -worst_entry;
        } else {
            const SignReport c = sign_test(b_aa_inv * b_ab, SignMode::Negative, tol_rel);
            rep.coupling_ok = c.passed(SignMode::Negative);
            rep.coupling_margin = -c.max_entry;
        }
    }

    rep.holds = rep.inverse_positive && rep.coupling_ok;
    if (!rep.inverse_positive) rep.failure = "interior inverse not entrywise positive";
    else if (!rep.coupling_ok) rep.failure = "interior-boundary coupling condition failed";
    return rep;
}

}  // namespace detail

/// Full-domain sDMP-A criterion (exact, if-and-only-if). Requires c~ = 0.
inline Certificate check_sdmp_a(const AssembledSystem& sys, double tol_rel = 1e-12) {
    if (sys.c_tilde != 0.0) throw std::invalid_argument("check_sdmp_a: requires c~ = 0");
    if (sys.partition.alpha.empty()) throw MeshError("check_sdmp_a: no interior vertices");
    Certificate cert;
    cert.mode = DmpMode::SdmpA;
    cert.tol_rel = tol_rel;
    PatchReport rep =
        detail::check_patch_conditions(sys.A, sys.partition.alpha, sys.partition.beta, DmpMode::SdmpA, tol_rel);
    cert.holds = rep.holds;
    if (!rep.holds) cert.failure_reason = rep.failure;
    cert.patches.push_back(std::move(rep));
    return cert;
}

/// Full-domain sDMP-B criterion with A replaced by A + C. Requires c~ >= 0.
inline Certificate check_sdmp_b(const AssembledSystem& sys, double tol_rel = 1e-12) {
    if (sys.c_tilde < 0.0) throw std::invalid_argument("check_sdmp_b: requires c~ >= 0");
    if (sys.partition.alpha.empty()) throw MeshError("check_sdmp_b: no interior vertices");
    Certificate cert;
    cert.mode = DmpMode::SdmpB;
    cert.c_tilde = sys.c_tilde;
    cert.tol_rel = tol_rel;
    const Matrix b = sys.A + sys.C;
    PatchReport rep =
        detail::check_patch_conditions(b, sys.partition.alpha, sys.partition.beta, DmpMode::SdmpB, tol_rel);
    cert.holds = rep.holds;
    if (!rep.holds) cert.failure_reason = rep.failure;
    cert.patches.push_back(std::move(rep));
    return cert;
}

namespace detail {

inline void fill_preconditions(const Mesh& mesh, const IndexPartition& part, Certificate& cert) {
    cert.preconditions_checked = true;
    cert.interior_connected = !part.alpha.empty() && interior_graph_connected(mesh, part);
    cert.unattached_boundary = boundary_adjacent_to_interior(mesh, part);
}

inline bool patch_interiors(const Mesh& mesh, const Subdomain& patch, std::vector<int>& alpha_parent,
                            std::vector<int>& beta_parent) {
    const IndexPartition sp = classify_boundary(patch.mesh);
    alpha_parent.clear();
    beta_parent.clear();
    for (int lv : sp.alpha) alpha_parent.push_back(patch.to_parent[lv]);
    for (int lv : sp.beta) beta_parent.push_back(patch.to_parent[lv]);
    // A vertex interior to the patch must be interior to the mesh, otherwise
    // the consistency argument does not apply to this patch.
    const IndexPartition mp = classify_boundary(mesh);
    for (int v : alpha_parent)
        if (mp.boundary(v)) return false;
    return true;
}

}  // namespace detail

/// Patch-cover certification: verifies the globalization preconditions, the
/// cover condition Int(D) = union Int(E_i), and the per-patch matrix
/// conditions for the requested mode, aggregating margins into a
/// Certificate. Precondition failures yield holds = false with the failing
/// condition named; they never throw.
inline Certificate certify_cover(const Mesh& mesh, const std::vector<Subdomain>& patches, DmpMode mode,
                                 double c_tilde = 0.0, double tol_rel = 1e-12) {
    Certificate cert;
    cert.mode = mode;
    cert.c_tilde = c_tilde;
    cert.tol_rel = tol_rel;
    if (mode == DmpMode::SdmpA || mode == DmpMode::WdmpA) {
        if (c_tilde != 0.0) {
            cert.failure_reason = "mode requires c~ = 0";
            return cert;
        }
    } else if (c_tilde < 0.0) {
        cert.failure_reason = "mode requires c~ >= 0";
        return cert;
    }

    const IndexPartition part = classify_boundary(mesh);
    if (part.alpha.empty()) {
        cert.failure_reason = "mesh has no interior vertices";
        return cert;
    }
    detail::fill_preconditions(mesh, part, cert);
    const AngleAudit audit = angle_condition_audit(mesh);
    cert.defect_edges = audit.defects;

    if (!cert.interior_connected) {
        cert.failure_reason = "interior vertex graph is not connected";
        return cert;
    }
    if (!cert.unattached_boundary.empty()) {
        cert.failure_reason = "boundary vertex " + std::to_string(cert.unattached_boundary.front()) +
                              " has no interior neighbor";
        return cert;
    }
    cert.uncovered = covers_interior(mesh, patches);
    if (!cert.uncovered.empty()) {
        cert.failure_reason = "cover incomplete: " + std::to_string(cert.uncovered.size()) +
                              " interior vertices not interior to any patch";
        return cert;
    }

    const Matrix b = (mode == DmpMode::SdmpA || mode == DmpMode::WdmpA)
                         ? stiffness_laplace(mesh)
                         : stiffness_laplace(mesh) + reaction_matrix(mass_matrix(mesh), c_tilde);

    bool all_hold = true;
    std::vector<int> alpha_i, beta_i;
    for (size_t p = 0; p < patches.size(); ++p) {
        PatchReport rep;
        if (!detail::patch_interiors(mesh, patches[p], alpha_i, beta_i)) {
            rep.patch_id = static_cast<int>(p);
            rep.failure = "patch interior vertex lies on the mesh boundary";
        } else {
            rep = detail::check_patch_conditions(b, alpha_i, beta_i, mode, tol_rel);
            rep.patch_id = static_cast<int>(p);
        }
        all_hold = all_hold && rep.holds;
        if (!rep.holds && cert.failure_reason.empty())
            cert.failure_reason = "patch " + std::to_string(p) + ": " + rep.failure;
        cert.patches.push_back(std::move(rep));
    }
    cert.holds = all_hold;
    return cert;
}

/// wDMP-A certification: the relaxed per-patch conditions A_aa^{-1} > 0 and
/// A_ab <= 0 over a covering patch family, plus the globalization
/// preconditions.
inline Certificate check_wdmp_a(const Mesh& mesh, const std::vector<Subdomain>& patches,
                                double tol_rel = 1e-12) {
    return certify_cover(mesh, patches, DmpMode::WdmpA, 0.0, tol_rel);
}

struct AutoCover {
    std::vector<Subdomain> patches;
    std::vector<int> uncoverable;  // interior vertices with no passing patch within the ring cap
};

/// Greedy patch construction: each interior vertex gets its star when the
/// star already passes (all center-to-neighbor off-diagonal entries strictly
/// negative, or nonpositive for wDMP-A); otherwise the neighborhood is grown
/// ring by ring until the patch passes the mode's conditions, up to
/// ring_cap. Vertices still failing are reported, and certification with
/// such a cover fails gracefully.
inline AutoCover auto_cover(const Mesh& mesh, DmpMode mode = DmpMode::SdmpA, double c_tilde = 0.0,
                            int ring_cap = 3, double tol_rel = 1e-12) {
    const IndexPartition part = classify_boundary(mesh);
    const Matrix b = (mode == DmpMode::SdmpB) ? stiffness_laplace(mesh) + reaction_matrix(mass_matrix(mesh), c_tilde)
                                              : stiffness_laplace(mesh);
    const double tau = tol_rel * max_abs(b);

    AutoCover cover;
    std::vector<int> alpha_i, beta_i;
    for (int v : part.alpha) {
        bool star_ok = b(v, v) > tau;
        for (int w : mesh.neighbors()[v]) {
            const double entry = b(v, w);
            if (mode == DmpMode::WdmpA ? entry > tau : entry >= -tau) {
                star_ok = false;
                break;
            }
        }
        if (star_ok) {
            cover.patches.push_back(star(mesh, v));
            continue;
        }

        // Grow a k-ring neighborhood until the patch passes.
        std::set<int> ring{v};
        bool covered = false;
        for (int k = 1; k <= ring_cap && !covered; ++k) {
            if (k > 1) {
                std::set<int> grown = ring;
                for (int u : ring)
                    for (int w : mesh.neighbors()[u]) grown.insert(w);
                ring = std::move(grown);
            }
            std::vector<int> tri_ids;
            for (int u : ring)
                for (int t : mesh.vertex_triangles()[u]) tri_ids.push_back(t);
            Subdomain patch = extract_subdomain(mesh, tri_ids);
            if (!patch.contains_parent_vertex(v)) continue;
            const IndexPartition sp = classify_boundary(patch.mesh);
            if (sp.boundary(patch.local(v))) continue;
            if (!detail::patch_interiors(mesh, patch, alpha_i, beta_i)) continue;
            const PatchReport rep = detail::check_patch_conditions(b, alpha_i, beta_i, mode, tol_rel);
            if (rep.holds) {
                cover.patches.push_back(std::move(patch));
                covered = true;
            }
        }
        if (!covered) cover.uncoverable.push_back(v);
    }
    return cover;
}

/// The semilinear sufficient condition: every edge with an interior endpoint
/// must have A_ij < 0, and the mesh constant C_A = max M_ij / (h^2 |A_ij|)
/// over those edges gives the admissible mesh size h_max = sqrt(1/(L_c C_A)).
/// The certificate also reports the closed-form reference constant 1/48
/// together with the mesh's actual angle range, so the angle-window
/// hypothesis is auditable.
struct SemilinearCheck {
    SemilinearParams params;
    Certificate certificate;
    std::vector<std::pair<int, int>> violating_edges;  // A_ij >= 0
    double min_angle = 0.0;
    double max_angle = 0.0;
    double remark_c_a = 1.0 / 48.0;
};

inline SemilinearCheck semilinear_condition(const Mesh& mesh, double lipschitz, double tol_rel = 1e-12) {
    if (!(lipschitz > 0.0)) throw std::invalid_argument("semilinear_condition: L_c must be positive");
    SemilinearCheck out;
    out.certificate.mode = DmpMode::SemilinearSdmpB;
    out.certificate.tol_rel = tol_rel;

    const Matrix a = stiffness_laplace(mesh);
    const Matrix m = mass_matrix(mesh);
    const IndexPartition part = classify_boundary(mesh);
    const double h = mesh.mesh_size();
    const double tau = tol_rel * max_abs(a);

    double c_a = 0.0;
    for (const Mesh::EdgeRecord& e : mesh.edges()) {
        if (part.boundary(e.a) && part.boundary(e.b)) continue;  // boundary edges exempt
        const double aij = a(e.a, e.b);
        if (aij >= -tau) {
            out.violating_edges.push_back({e.a, e.b});
            continue;
        }
        c_a = std::max(c_a, m(e.a, e.b) / (h * h * std::abs(aij)));
    }

    out.min_angle = std::numeric_limits<double>::infinity();
    out.max_angle = 0.0;
    for (int t = 0; t < mesh.triangle_count(); ++t)
        for (double th : detail::triangle_angles(mesh, t)) {
            out.min_angle = std::min(out.min_angle, th);
            out.max_angle = std::max(out.max_angle, th);
        }

    out.params.lipschitz = lipschitz;
    out.params.c_a = c_a;
    out.params.h = h;
    out.params.h_max = c_a > 0.0 ? semilinear_h_max(lipschitz, c_a) : 0.0;
    out.certificate.semilinear = out.params;
    out.certificate.defect_edges = out.violating_edges;
    if (!out.violating_edges.empty()) {
        out.certificate.failure_reason = std::to_string(out.violating_edges.size()) +
                                         " edges with an interior endpoint have A_ij >= 0";
        out.certificate.holds = false;
    } else {
        out.certificate.holds = h < out.params.h_max;
        if (!out.certificate.holds) out.certificate.failure_reason = "mesh size h is not below h_max";
    }
    return out;
}

}  // namespace dmp
