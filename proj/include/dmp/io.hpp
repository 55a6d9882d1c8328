#pragma once

#include <cstdint>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "dmp/certify.hpp"
#include "dmp/mesh.hpp"
#include "dmp/solve.hpp"
#include "dmp/studies.hpp"

namespace dmp {

// Serialization. Mesh interchange is the flat JSON document
//   {"vertices": [[x,y],...], "triangles": [[i,j,k],...]}
// with 0-based indices. All floating-point output goes through %.17g so
// reruns are byte-identical and values round-trip exactly.

inline std::string format_double(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

inline std::string mesh_to_json(const Mesh& mesh) {
    std::ostringstream os;
    os << "{\n  \"vertices\": [";
    for (int v = 0; v < mesh.vertex_count(); ++v) {
        if (v) os << ",";
        os << "\n    [" << format_double(mesh.vertex(v).x) << ", " << format_double(mesh.vertex(v).y) << "]";
    }
    os << "\n  ],\n  \"triangles\": [";
    for (int t = 0; t < mesh.triangle_count(); ++t) {
        const Triangle& tr = mesh.triangle(t);
        if (t) os << ",";
        os << "\n    [" << tr[0] << ", " << tr[1] << ", " << tr[2] << "]";
    }
    os << "\n  ]";
    if (!mesh.labels().empty()) {
        os << ",\n  \"labels\": {";
        bool first = true;
        for (const auto& [name, v] : mesh.labels()) {
            if (!first) os << ", ";
            first = false;
            os << "\"" << name << "\": " << v;
        }
        os << "}";
    }
    os << "\n}\n";
    return os.str();
}

inline void write_mesh_json(const std::string& path, const Mesh& mesh) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << mesh_to_json(mesh);
}

inline Mesh read_mesh_json(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot read " + path);
    nlohmann::json j;
    in >> j;
    std::vector<Vec2> verts;
    for (const auto& v : j.at("vertices")) verts.push_back({v.at(0).get<double>(), v.at(1).get<double>()});
    std::vector<Triangle> tris;
    for (const auto& t : j.at("triangles"))
        tris.push_back({t.at(0).get<int>(), t.at(1).get<int>(), t.at(2).get<int>()});
    std::map<std::string, int> labels;
    if (j.contains("labels"))
        for (const auto& [name, v] : j.at("labels").items()) labels[name] = v.get<int>();
    return Mesh(std::move(verts), std::move(tris), std::move(labels));
}

inline std::string matrix_to_json(const Matrix& m) {
    std::ostringstream os;
    os << "{\n  \"rows\": " << m.rows << ",\n  \"cols\": " << m.cols << ",\n  \"data\": [";
    for (int i = 0; i < m.rows; ++i) {
        if (i) os << ",";
        os << "\n    [";
        for (int j = 0; j < m.cols; ++j) {
            if (j) os << ", ";
            os << format_double(m(i, j));
        }
        os << "]";
    }
    os << "\n  ]\n}\n";
    return os.str();
}

inline void write_matrix_json(const std::string& path, const Matrix& m) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << matrix_to_json(m);
}

inline void write_matrix_csv(const std::string& path, const Matrix& m) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path);
    for (int i = 0; i < m.rows; ++i) {
        for (int j = 0; j < m.cols; ++j) {
            if (j) out << ",";
            out << format_double(m(i, j));
        }
        out << "\n";
    }
}

inline Matrix read_matrix_json(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot read " + path);
    nlohmann::json j;
    in >> j;
    Matrix m(j.at("rows").get<int>(), j.at("cols").get<int>());
    const auto& data = j.at("data");
    for (int i = 0; i < m.rows; ++i)
        for (int jcol = 0; jcol < m.cols; ++jcol) m(i, jcol) = data.at(i).at(jcol).get<double>();
    return m;
}

/// Nodal solution as CSV rows (vertex id, x, y, u).
inline void write_solution_csv(const std::string& path, const Mesh& mesh, std::span<const double> u) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << "vertex,x,y,u\n";
    for (int v = 0; v < mesh.vertex_count(); ++v)
        out << v << "," << format_double(mesh.vertex(v).x) << "," << format_double(mesh.vertex(v).y) << ","
            << format_double(u[v]) << "\n";
}

inline void write_sweep_csv(const std::string& path, std::span<const SweepRecord> records) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << "parameter,min_entry,row,col,certified\n";
    for (const SweepRecord& r : records)
        out << format_double(r.parameter) << "," << format_double(r.min_entry) << "," << r.row << "," << r.col
            << "," << (r.certified ? 1 : 0) << "\n";
}

inline nlohmann::json certificate_to_json(const Certificate& cert) {
    nlohmann::json j;
    j["mode"] = to_string(cert.mode);
    j["holds"] = cert.holds;
    j["c_tilde"] = cert.c_tilde;
    j["tol_rel"] = cert.tol_rel;
    if (!cert.failure_reason.empty()) j["failure_reason"] = cert.failure_reason;
    if (cert.preconditions_checked) {
        j["preconditions"] = {{"interior_connected", cert.interior_connected},
                              {"unattached_boundary", cert.unattached_boundary},
                              {"uncovered_interior", cert.uncovered}};
    }
    nlohmann::json defects = nlohmann::json::array();
    for (auto [a, b] : cert.defect_edges) defects.push_back({a, b});
    j["defect_edges"] = defects;
    nlohmann::json patches = nlohmann::json::array();
    for (const PatchReport& p : cert.patches) {
        nlohmann::json pj;
        pj["patch"] = p.patch_id;
        pj["interior_size"] = p.interior_size;
        pj["boundary_size"] = p.boundary_size;
        pj["holds"] = p.holds;
        pj["inverse_min_entry"] = p.inverse_min_entry;
        pj["coupling_margin"] = p.coupling_margin;
        pj["used_shortcut"] = p.used_shortcut;
        if (!p.failure.empty()) pj["failure"] = p.failure;
        patches.push_back(pj);
    }
    j["patches"] = patches;
    if (cert.semilinear) {
        j["semilinear"] = {{"lipschitz", cert.semilinear->lipschitz},
                           {"c_a", cert.semilinear->c_a},
                           {"h", cert.semilinear->h},
                           {"h_max", cert.semilinear->h_max}};
    }
    return j;
}

/// Human-readable one-screen certificate summary.
inline std::string certificate_summary(const Certificate& cert) {
    std::ostringstream os;
    os << to_string(cert.mode) << ": " << (cert.holds ? "CERTIFIED" : "not certified") << "\n";
    if (cert.c_tilde != 0.0) os << "  c~ = " << cert.c_tilde << "\n";
    if (cert.preconditions_checked) {
        os << "  interior graph connected: " << (cert.interior_connected ? "yes" : "NO") << "\n";
        os << "  boundary vertices without interior neighbor: " << cert.unattached_boundary.size() << "\n";
        os << "  uncovered interior vertices: " << cert.uncovered.size() << "\n";
    }
    os << "  defect edges: " << cert.defect_edges.size() << "\n";
    os << "  patches checked: " << cert.patches.size() << "\n";
    double worst_inv = std::numeric_limits<double>::infinity();
    double worst_coupling = std::numeric_limits<double>::infinity();
    for (const PatchReport& p : cert.patches) {
        worst_inv = std::min(worst_inv, p.inverse_min_entry);
        worst_coupling = std::min(worst_coupling, p.coupling_margin);
    }
    if (!cert.patches.empty()) {
        os << "  worst inverse entry: " << worst_inv << "\n";
        os << "  worst coupling margin: " << worst_coupling << "\n";
    }
    if (cert.semilinear) {
        os << "  C_A = " << cert.semilinear->c_a << ", h = " << cert.semilinear->h
           << ", h_max = " << cert.semilinear->h_max << "\n";
    }
    if (!cert.failure_reason.empty()) os << "  reason: " << cert.failure_reason << "\n";
    return os.str();
}

inline nlohmann::json dmp_report_to_json(const DmpTestReport& rep) {
    nlohmann::json j;
    j["trials"] = rep.trials;
    j["solver_failures"] = rep.solver_failures;
    nlohmann::json v = nlohmann::json::array();
    for (const TrialViolation& t : rep.violations)
        v.push_back({{"trial", t.trial},
                     {"seed", t.trial_seed},
                     {"kind", t.kind},
                     {"observed", t.observed},
                     {"bound", t.bound},
                     {"vertex", t.vertex}});
    j["violations"] = v;
    return j;
}

/// FNV-1a 64-bit content hash, used in run manifests.
inline std::uint64_t fnv1a64(std::span<const char> bytes) {
    std::uint64_t h = 1469598103934665603ull;
    for (char c : bytes) {
        h ^= static_cast<unsigned char>(c);
        h *= 1099511628211ull;
    }
    return h;
}

inline std::string file_hash_hex(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot read " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    const std::string s = buf.str();
    char out[17];
    std::snprintf(out, sizeof(out), "%016llx", static_cast<unsigned long long>(fnv1a64(s)));
    return out;
}

}  // namespace dmp
