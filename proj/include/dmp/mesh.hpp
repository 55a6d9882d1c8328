#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <map>
#include <optional>
#include <queue>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

namespace dmp {

/// Thrown for structural mesh problems (bad connectivity, non-manifold
/// edges, degenerate or duplicate geometry).
class MeshError : public std::runtime_error {
public:
    explicit MeshError(const std::string& what) : std::runtime_error(what) {}
};

struct Vec2 {
    double x = 0.0;
    double y = 0.0;
};

inline Vec2 operator+(Vec2 a, Vec2 b) { return {a.x + b.x, a.y + b.y}; }
inline Vec2 operator-(Vec2 a, Vec2 b) { return {a.x - b.x, a.y - b.y}; }
inline Vec2 operator*(double s, Vec2 a) { return {s * a.x, s * a.y}; }
inline double dot(Vec2 a, Vec2 b) { return a.x * b.x + a.y * b.y; }
inline double cross(Vec2 a, Vec2 b) { return a.x * b.y - a.y * b.x; }
inline double norm(Vec2 a) { return std::hypot(a.x, a.y); }

using Triangle = std::array<int, 3>;

/// Immutable triangular mesh. The constructor validates all structural
/// invariants, reorients triangles counterclockwise, and precomputes the
/// adjacency structures (edge table, vertex neighbor lists, vertex-triangle
/// incidence). Everything downstream treats a Mesh as read-only, so sharing
/// across parallel workers needs no locking.
class Mesh {
public:
    struct EdgeRecord {
        int a = -1, b = -1;          // vertex ids, a < b
        int tri[2] = {-1, -1};       // incident triangles
        int count = 0;               // 1 = boundary edge, 2 = interior edge
    };

    Mesh(std::vector<Vec2> vertices, std::vector<Triangle> triangles,
         std::map<std::string, int> labels = {})
        : verts_(std::move(vertices)), tris_(std::move(triangles)), labels_(std::move(labels)) {
        validate_and_build();
    }

    int vertex_count() const { return static_cast<int>(verts_.size()); }
    int triangle_count() const { return static_cast<int>(tris_.size()); }
    const std::vector<Vec2>& vertices() const { return verts_; }
    const std::vector<Triangle>& triangles() const { return tris_; }
    Vec2 vertex(int v) const { return verts_[v]; }
    const Triangle& triangle(int t) const { return tris_[t]; }

    /// Named vertices (generators label figure-relevant points).
    const std::map<std::string, int>& labels() const { return labels_; }
    int label(const std::string& name) const {
        auto it = labels_.find(name);
        if (it == labels_.end()) throw MeshError("mesh has no vertex labeled '" + name + "'");
        return it->second;
    }

    const std::vector<EdgeRecord>& edges() const { return edges_; }
    const std::vector<std::vector<int>>& neighbors() const { return nbrs_; }
    const std::vector<std::vector<int>>& vertex_triangles() const { return vert_tris_; }

    int edge_index(int a, int b) const {
        if (a > b) std::swap(a, b);
        auto it = edge_lookup_.find(key(a, b));
        return it == edge_lookup_.end() ? -1 : it->second;
    }

    double signed_area(int t) const {
        const Triangle& tr = tris_[t];
        return 0.5 * cross(verts_[tr[1]] - verts_[tr[0]], verts_[tr[2]] - verts_[tr[0]]);
    }

    /// Mesh size h := maximum edge length.
    double mesh_size() const { return h_; }
    double bbox_diameter() const { return bbox_diam_; }

    /// Uniformly scaled copy (labels preserved). Used by the h_max studies.
    Mesh scaled(double s) const {
        std::vector<Vec2> v = verts_;
        for (Vec2& p : v) p = s * p;
        return Mesh(std::move(v), tris_, labels_);
    }

private:
    static long long key(int a, int b) { return (static_cast<long long>(a) << 32) | static_cast<unsigned>(b); }

    void validate_and_build() {
        const int n = vertex_count();
        if (n < 3 || tris_.empty()) throw MeshError("mesh needs at least one triangle");

        double xmin = verts_[0].x, xmax = xmin, ymin = verts_[0].y, ymax = ymin;
        for (const Vec2& p : verts_) {
            if (!std::isfinite(p.x) || !std::isfinite(p.y)) throw MeshError("non-finite vertex coordinate");
            xmin = std::min(xmin, p.x); xmax = std::max(xmax, p.x);
            ymin = std::min(ymin, p.y); ymax = std::max(ymax, p.y);
        }
        bbox_diam_ = std::hypot(xmax - xmin, ymax - ymin);
        if (bbox_diam_ <= 0.0) throw MeshError("all vertices coincide");

        // Duplicate vertices within 1e-12 * bbox diameter are a construction
        // error: generators must emit exact shared vertices.
        const double dup_tol = 1e-12 * bbox_diam_;
        {
            std::vector<int> order(n);
            for (int i = 0; i < n; ++i) order[i] = i;
            std::sort(order.begin(), order.end(), [&](int i, int j) { return verts_[i].x < verts_[j].x; });
            for (int i = 0; i < n; ++i)
                for (int j = i + 1; j < n && verts_[order[j]].x - verts_[order[i]].x <= dup_tol; ++j)
                    if (norm(verts_[order[i]] - verts_[order[j]]) <= dup_tol)
                        throw MeshError("duplicate vertices " + std::to_string(order[i]) + " and " +
                                        std::to_string(order[j]));
        }

        for (size_t t = 0; t < tris_.size(); ++t) {
            Triangle& tr = tris_[t];
            for (int v : tr)
                if (v < 0 || v >= n) throw MeshError("triangle " + std::to_string(t) + ": vertex index out of range");
            if (tr[0] == tr[1] || tr[1] == tr[2] || tr[0] == tr[2])
                throw MeshError("triangle " + std::to_string(t) + ": repeated vertex");
            double area = 0.5 * cross(verts_[tr[1]] - verts_[tr[0]], verts_[tr[2]] - verts_[tr[0]]);
            if (area < 0.0) {  // enforce counterclockwise orientation
                std::swap(tr[1], tr[2]);
                area = -area;
            }
            if (area <= 0.0) throw MeshError("triangle " + std::to_string(t) + ": zero signed area");
        }

        vert_tris_.assign(n, {});
        for (size_t t = 0; t < tris_.size(); ++t)
            for (int v : tris_[t]) vert_tris_[v].push_back(static_cast<int>(t));

        edges_.clear();
        edge_lookup_.clear();
        for (size_t t = 0; t < tris_.size(); ++t) {
            const Triangle& tr = tris_[t];
            for (int e = 0; e < 3; ++e) {
                int a = tr[e], b = tr[(e + 1) % 3];
                if (a > b) std::swap(a, b);
                auto [it, inserted] = edge_lookup_.try_emplace(key(a, b), static_cast<int>(edges_.size()));
                if (inserted) edges_.push_back(EdgeRecord{a, b, {static_cast<int>(t), -1}, 1});
                else {
                    EdgeRecord& rec = edges_[it->second];
                    if (rec.count >= 2)
                        throw MeshError("non-manifold edge (" + std::to_string(a) + "," + std::to_string(b) +
                                        "): 3+ incident triangles");
                    rec.tri[1] = static_cast<int>(t);
                    rec.count = 2;
                }
            }
        }

        nbrs_.assign(n, {});
        h_ = 0.0;
        for (const EdgeRecord& e : edges_) {
            nbrs_[e.a].push_back(e.b);
            nbrs_[e.b].push_back(e.a);
            h_ = std::max(h_, norm(verts_[e.a] - verts_[e.b]));
        }
        for (auto& lst : nbrs_) std::sort(lst.begin(), lst.end());
    }

    std::vector<Vec2> verts_;
    std::vector<Triangle> tris_;
    std::map<std::string, int> labels_;
    std::vector<EdgeRecord> edges_;
    std::unordered_map<long long, int> edge_lookup_;
    std::vector<std::vector<int>> nbrs_;
    std::vector<std::vector<int>> vert_tris_;
    double h_ = 0.0;
    double bbox_diam_ = 0.0;
};

/// Interior/boundary split of the vertex ids. alpha and beta are sorted.
struct IndexPartition {
    std::vector<int> alpha;          // interior vertices
    std::vector<int> beta;           // boundary vertices
    std::vector<char> is_boundary;   // by vertex id

    bool boundary(int v) const { return is_boundary[v] != 0; }
    bool interior(int v) const { return is_boundary[v] == 0; }
};

/// A vertex is boundary iff it lies on an edge with exactly one incident
/// triangle. Non-manifold edges were already rejected at construction.
inline IndexPartition classify_boundary(const Mesh& mesh) {
    IndexPartition p;
    p.is_boundary.assign(mesh.vertex_count(), 0);
    for (const Mesh::EdgeRecord& e : mesh.edges())
        if (e.count == 1) {
            p.is_boundary[e.a] = 1;
            p.is_boundary[e.b] = 1;
        }
    for (int v = 0; v < mesh.vertex_count(); ++v)
        (p.is_boundary[v] ? p.beta : p.alpha).push_back(v);
    return p;
}

/// True iff the graph induced on the interior vertices by interior-interior
/// edges is connected (breadth-first search). Globalization precondition.
inline bool interior_graph_connected(const Mesh& mesh, const IndexPartition& part) {
    if (part.alpha.empty())
        throw MeshError("interior_graph_connected: mesh has no interior vertices");
    std::vector<char> seen(mesh.vertex_count(), 0);
    std::queue<int> q;
    q.push(part.alpha.front());
    seen[part.alpha.front()] = 1;
    int reached = 0;
    while (!q.empty()) {
        const int v = q.front();
        q.pop();
        ++reached;
        for (int w : mesh.neighbors()[v])
            if (!seen[w] && part.interior(w)) {
                seen[w] = 1;
                q.push(w);
            }
    }
    return reached == static_cast<int>(part.alpha.size());
}

/// Boundary vertices with no interior neighbor; empty list means the second
/// globalization precondition is satisfied.
inline std::vector<int> boundary_adjacent_to_interior(const Mesh& mesh, const IndexPartition& part) {
    std::vector<int> violating;
    for (int v : part.beta) {
        bool ok = false;
        for (int w : mesh.neighbors()[v])
            if (part.interior(w)) { ok = true; break; }
        if (!ok) violating.push_back(v);
    }
    return violating;
}

/// A discrete subdomain: a union of parent triangles re-indexed as its own
/// mesh, with the parent<->local vertex correspondence recorded. The local
/// boundary classification can differ from the parent's (a parent-interior
/// vertex may become sub-boundary).
struct Subdomain {
    std::vector<int> triangle_ids;        // parent triangle ids (sorted)
    Mesh mesh;                            // induced sub-mesh
    std::vector<int> to_parent;           // local vertex -> parent vertex
    std::unordered_map<int, int> to_local; // parent vertex -> local vertex

    bool contains_parent_vertex(int pv) const { return to_local.count(pv) != 0; }
    int local(int pv) const {
        auto it = to_local.find(pv);
        if (it == to_local.end()) throw MeshError("vertex not in subdomain");
        return it->second;
    }
};

inline Subdomain extract_subdomain(const Mesh& mesh, std::vector<int> triangle_ids) {
    if (triangle_ids.empty()) throw MeshError("extract_subdomain: empty triangle set");
    std::sort(triangle_ids.begin(), triangle_ids.end());
    triangle_ids.erase(std::unique(triangle_ids.begin(), triangle_ids.end()), triangle_ids.end());

    std::unordered_map<int, int> to_local;
    std::vector<int> to_parent;
    std::vector<Triangle> tris;
    tris.reserve(triangle_ids.size());
    for (int t : triangle_ids) {
        if (t < 0 || t >= mesh.triangle_count())
            throw MeshError("extract_subdomain: triangle id out of range");
        Triangle local_tr;
        for (int e = 0; e < 3; ++e) {
            const int pv = mesh.triangle(t)[e];
            auto [it, inserted] = to_local.try_emplace(pv, static_cast<int>(to_parent.size()));
            if (inserted) to_parent.push_back(pv);
            local_tr[e] = it->second;
        }
        tris.push_back(local_tr);
    }
    std::vector<Vec2> verts(to_parent.size());
    for (size_t i = 0; i < to_parent.size(); ++i) verts[i] = mesh.vertex(to_parent[i]);

    std::map<std::string, int> labels;
    for (const auto& [name, pv] : mesh.labels()) {
        auto it = to_local.find(pv);
        if (it != to_local.end()) labels[name] = it->second;
    }

    Subdomain sub{std::move(triangle_ids), Mesh(std::move(verts), std::move(tris), std::move(labels)),
                  std::move(to_parent), std::move(to_local)};
    return sub;
}

/// The star around an interior vertex: union of all triangles containing it.
/// The center is the star's unique interior vertex.
inline Subdomain star(const Mesh& mesh, int vertex) {
    const IndexPartition part = classify_boundary(mesh);
    if (vertex < 0 || vertex >= mesh.vertex_count()) throw MeshError("star: vertex out of range");
    if (part.boundary(vertex)) throw MeshError("star: vertex " + std::to_string(vertex) + " is not interior");
    return extract_subdomain(mesh, mesh.vertex_triangles()[vertex]);
}

/// Interior vertices of `mesh` not strictly interior to any patch. Empty
/// result certifies the cover condition Int(D) = union of Int(E_i).
/// "Interior to a patch" is combinatorial: decided by the patch's own
/// boundary classification, not by coordinates.
inline std::vector<int> covers_interior(const Mesh& mesh, const std::vector<Subdomain>& patches) {
    const IndexPartition part = classify_boundary(mesh);
    std::vector<char> covered(mesh.vertex_count(), 0);
    for (const Subdomain& patch : patches) {
        const IndexPartition sub_part = classify_boundary(patch.mesh);
        for (int lv : sub_part.alpha) covered[patch.to_parent[lv]] = 1;
    }
    std::vector<int> uncovered;
    for (int v : part.alpha)
        if (!covered[v]) uncovered.push_back(v);
    return uncovered;
}

}  // namespace dmp
