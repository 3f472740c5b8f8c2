#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "forest.hpp"

namespace lorentz {

using VertexId = std::uint32_t;
using EdgeId = std::uint32_t;
using TriangleId = std::uint32_t;

inline constexpr std::int32_t kNoFace = -1;

enum class EdgeKind : std::uint8_t
{
    Horizontal,
    Vertical
};

enum class Orientation : std::uint8_t
{
    Up,  // horizontal edge on the lower level, apex above
    Down // horizontal edge on the upper level, apex below
};

struct Edge
{
    VertexId a; // horizontal: left endpoint; vertical: lower endpoint
    VertexId b; // horizontal: right endpoint; vertical: upper endpoint
    EdgeKind kind;
    std::uint32_t level; // horizontal: its level; vertical: its strip
    std::uint32_t index; // horizontal: position of `a`; vertical: slot in the strip
    // Horizontal: {below, above}. Vertical: {left, right}. kNoFace on the boundary.
    std::array<std::int32_t, 2> faces{kNoFace, kNoFace};

    bool is_loop() const noexcept { return a == b && kind == EdgeKind::Horizontal; }
};

struct Triangle
{
    std::array<VertexId, 3> vertices; // horizontal edge's endpoints (left, right), then apex
    Orientation orientation;
    std::uint32_t strip;
    std::uint32_t slot;             // position in the strip's cyclic triangle sequence
    std::array<EdgeId, 3> edges;    // left diagonal, right diagonal, horizontal
};

/// Degrees of a vertex. `up`/`down` are empty on the level where they are
/// undefined (no strip above level N, no strip below level 0).
struct VertexDegree
{
    std::optional<std::size_t> up;
    std::optional<std::size_t> down;
    std::size_t total; // defined parts + 2 for the two horizontal edge ends
    bool boundary;
};

/// Rooted Lorentzian triangulation of the cylinder C_N.
///
/// Vertices of level n are numbered 0..k_n-1 in one fixed cyclic direction
/// ("left to right"); level 0 is a single root with a horizontal self-loop.
/// Strip n (between levels n and n+1) is a cyclic sequence of k_n + k_{n+1}
/// diagonals with one triangle between consecutive diagonals; diagonal 0 of
/// strip n joins position 0 of level n to position 0 of level n+1.
///
/// Values are immutable after construction.
class Triangulation
{
public:
    /// Fan construction: vertex u of level n with out-degree delta gets
    /// up-edges to its delta children and one closing edge to the vertex that
    /// follows its last child.
    static Triangulation from_forest(const Forest& f);

    std::size_t levels() const noexcept { return level_size_.size() - 1; }
    std::size_t level_size(std::size_t n) const { return level_size_.at(n); }
    const std::vector<std::size_t>& level_sizes() const noexcept { return level_size_; }
    std::size_t vertex_count() const noexcept { return level_.size(); }
    std::size_t triangle_count() const noexcept { return triangles_.size(); }

    VertexId vertex(std::size_t level, std::size_t position) const
    {
        return static_cast<VertexId>(offset_.at(level) + position % level_size_.at(level));
    }
    VertexId root() const noexcept { return 0; }
    std::uint32_t level_of(VertexId v) const { return level_.at(v); }
    std::uint32_t position_of(VertexId v) const { return v - static_cast<VertexId>(offset_[level_.at(v)]); }

    const std::vector<Edge>& edges() const noexcept { return edges_; }
    const std::vector<Triangle>& triangles() const noexcept { return triangles_; }
    const Edge& edge(EdgeId e) const { return edges_.at(e); }
    const Triangle& triangle(TriangleId t) const { return triangles_.at(t); }

    /// Up-edges of v, left to right.
    std::span<const EdgeId> up_edges(VertexId v) const { return up_.at(v); }
    /// Down-edges of v, left to right; the last one is v's tree edge.
    std::span<const EdgeId> down_edges(VertexId v) const { return down_.at(v); }
    EdgeId left_edge(VertexId v) const { return horizontal(level_of(v), position_of(v) + level_size(level_of(v)) - 1); }
    EdgeId right_edge(VertexId v) const { return horizontal(level_of(v), position_of(v)); }

    /// Horizontal edge (i, i+1) of level n.
    EdgeId horizontal(std::size_t n, std::size_t i) const
    {
        return static_cast<EdgeId>(hoffset_.at(n) + i % level_size_.at(n));
    }
    /// Diagonals of strip n in cyclic order.
    std::span<const EdgeId> strip_edges(std::size_t n) const { return strip_edges_.at(n); }
    std::span<const TriangleId> strip_triangles(std::size_t n) const { return strip_triangles_.at(n); }
    /// The diagonal joining position 0 of level n to position 0 of level n+1.
    EdgeId reference_edge(std::size_t strip) const { return strip_edges_.at(strip).front(); }

    VertexId other_end(EdgeId e, VertexId v) const
    {
        const auto& ed = edges_.at(e);
        return ed.a == v ? ed.b : ed.a;
    }

    /// All edge ends at v in local cyclic order: up-edges left to right, right
    /// horizontal, down-edges right to left, left horizontal. A self-loop
    /// appears twice. Size equals vertex_degree(v).total.
    std::vector<EdgeId> rotation(VertexId v) const;

    VertexDegree vertex_degree(VertexId v) const;

    /// Distinct neighbors of v (self excluded), in rotation order.
    std::vector<VertexId> neighbors(VertexId v) const;
    bool adjacent(VertexId a, VertexId b) const;

    /// Tree parametrization: parent of each vertex above level 0 is the apex
    /// of the down-triangle whose top edge starts at it.
    Forest to_forest() const;

    /// Parent of v in the tree parametrization (v above level 0).
    VertexId parent(VertexId v) const;

    bool operator==(const Triangulation& o) const { return to_forest() == o.to_forest(); }

private:
    std::vector<std::size_t> level_size_;
    std::vector<std::size_t> offset_;  // first vertex id per level
    std::vector<std::size_t> hoffset_; // first horizontal edge id per level
    std::vector<std::uint32_t> level_;
    std::vector<Edge> edges_;
    std::vector<Triangle> triangles_;
    std::vector<std::vector<EdgeId>> up_, down_;
    std::vector<std::vector<EdgeId>> strip_edges_;
    std::vector<std::vector<TriangleId>> strip_triangles_;
    // Per strip: down-triangle whose top edge is horizontal(n+1, j), and
    // up-triangle whose base is horizontal(n, i).
    std::vector<std::vector<TriangleId>> down_by_top_, up_by_base_;
};

inline Triangulation forest_to_triangulation(const Forest& f) { return Triangulation::from_forest(f); }
inline Forest triangulation_to_forest(const Triangulation& t) { return t.to_forest(); }
inline VertexDegree vertex_degree(const Triangulation& t, VertexId v) { return t.vertex_degree(v); }

// ---------------------------------------------------------------------------

inline Triangulation Triangulation::from_forest(const Forest& f)
{
    validate(f);
    Triangulation t;
    t.level_size_ = f.level_sizes();
    const std::size_t n_levels = f.levels();

    std::size_t nv = 0;
    for (auto k : t.level_size_) {
        t.offset_.push_back(nv);
        nv += k;
    }
    t.level_.resize(nv);
    for (std::size_t n = 0; n <= n_levels; ++n)
        for (std::size_t i = 0; i < t.level_size_[n]; ++i)
            t.level_[t.offset_[n] + i] = static_cast<std::uint32_t>(n);

    // Horizontal edges first: ids are hoffset_[n] + i.
    for (std::size_t n = 0; n <= n_levels; ++n) {
        t.hoffset_.push_back(t.edges_.size());
        const auto k = t.level_size_[n];
        for (std::size_t i = 0; i < k; ++i)
            t.edges_.push_back(Edge{t.vertex(n, i), t.vertex(n, (i + 1) % k), EdgeKind::Horizontal,
                                    static_cast<std::uint32_t>(n), static_cast<std::uint32_t>(i)});
    }

    t.strip_edges_.resize(n_levels);
    t.strip_triangles_.resize(n_levels);
    t.down_by_top_.resize(n_levels);
    t.up_by_base_.resize(n_levels);

    for (std::size_t n = 0; n < n_levels; ++n) {
        const auto k = t.level_size_[n];
        const auto m = t.level_size_[n + 1];
        const auto& delta = f.out_degree[n];
        auto& diags = t.strip_edges_[n];
        auto& tris = t.strip_triangles_[n];
        t.down_by_top_[n].assign(m, 0);
        t.up_by_base_[n].assign(k, 0);

        // Pass 1: diagonals in strip order and the triangle after each.
        struct Pending
        {
            std::array<VertexId, 3> vertices;
            Orientation orientation;
            EdgeId horizontal;
            std::size_t top_or_base;
        };
        std::vector<Pending> pending;
        std::size_t first_child = 0;
        for (std::size_t i = 0; i < k; ++i) {
            const auto u = t.vertex(n, i);
            for (std::size_t s = 0; s <= delta[i]; ++s) {
                const auto w = t.vertex(n + 1, (first_child + s) % m);
                const auto slot = static_cast<std::uint32_t>(diags.size());
                diags.push_back(static_cast<EdgeId>(t.edges_.size()));
                t.edges_.push_back(Edge{u, w, EdgeKind::Vertical, static_cast<std::uint32_t>(n), slot});
                if (s < delta[i]) {
                    const auto j = (first_child + s) % m;
                    pending.push_back({{t.vertex(n + 1, j), t.vertex(n + 1, j + 1), u},
                                       Orientation::Down,
                                       t.horizontal(n + 1, j),
                                       j});
                } else {
                    pending.push_back({{u, t.vertex(n, i + 1), w}, Orientation::Up, t.horizontal(n, i), i});
                }
            }
            first_child += delta[i];
        }

        // Pass 2: triangles; triangle j sits between diagonal j and j+1.
        const auto total = diags.size();
        for (std::size_t j = 0; j < total; ++j) {
            const auto id = static_cast<TriangleId>(t.triangles_.size());
            const auto& p = pending[j];
            const EdgeId left = diags[j];
            const EdgeId right = diags[(j + 1) % total];
            t.triangles_.push_back(Triangle{p.vertices, p.orientation, static_cast<std::uint32_t>(n),
                                            static_cast<std::uint32_t>(j), {left, right, p.horizontal}});
            tris.push_back(id);
            t.edges_[left].faces[1] = static_cast<std::int32_t>(id);
            t.edges_[right].faces[0] = static_cast<std::int32_t>(id);
            if (p.orientation == Orientation::Down) {
                t.edges_[p.horizontal].faces[0] = static_cast<std::int32_t>(id);
                t.down_by_top_[n][p.top_or_base] = id;
            } else {
                t.edges_[p.horizontal].faces[1] = static_cast<std::int32_t>(id);
                t.up_by_base_[n][p.top_or_base] = id;
            }
        }
    }

    // Fans, read off the triangles: the up-edges of u run from the right
    // diagonal of the up-triangle on (u-1, u) to the left diagonal of the
    // up-triangle on (u, u+1); symmetrically for down-edges.
    t.up_.resize(nv);
    t.down_.resize(nv);
    for (std::size_t n = 0; n < n_levels; ++n) {
        const auto& diags = t.strip_edges_[n];
        const auto total = diags.size();
        auto run = [&](TriangleId from, TriangleId to, std::vector<EdgeId>& out) {
            std::size_t j = (t.triangles_[from].slot + 1) % total;
            const std::size_t stop = t.triangles_[to].slot;
            for (;;) {
                out.push_back(diags[j]);
                if (j == stop)
                    break;
                j = (j + 1) % total;
            }
        };
        const auto k = t.level_size_[n];
        const auto m = t.level_size_[n + 1];
        for (std::size_t i = 0; i < k; ++i)
            run(t.up_by_base_[n][(i + k - 1) % k], t.up_by_base_[n][i], t.up_[t.vertex(n, i)]);
        for (std::size_t j = 0; j < m; ++j)
            run(t.down_by_top_[n][(j + m - 1) % m], t.down_by_top_[n][j], t.down_[t.vertex(n + 1, j)]);
    }
    return t;
}

inline VertexId Triangulation::parent(VertexId v) const
{
    const auto n = level_of(v);
    if (n == 0)
        throw std::invalid_argument("parent: the root has no parent");
    const auto& tri = triangles_[down_by_top_[n - 1][position_of(v)]];
    return tri.vertices[2];
}

inline Forest Triangulation::to_forest() const
{
    Forest f;
    f.out_degree.resize(levels());
    for (std::size_t n = 0; n < levels(); ++n) {
        auto& delta = f.out_degree[n];
        delta.assign(level_size_[n], 0);
        std::size_t expected_parent = 0;
        for (std::size_t j = 0; j < level_size_[n + 1]; ++j) {
            const auto p = position_of(parent(vertex(n + 1, j)));
            // Children must be contiguous and in parent order.
            if (p < expected_parent)
                throw std::logic_error("to_forest: children out of plane order");
            expected_parent = p;
            ++delta[p];
        }
    }
    return f;
}

inline std::vector<EdgeId> Triangulation::rotation(VertexId v) const
{
    std::vector<EdgeId> out(up_[v].begin(), up_[v].end());
    out.push_back(right_edge(v));
    out.insert(out.end(), down_[v].rbegin(), down_[v].rend());
    out.push_back(left_edge(v));
    return out;
}

inline VertexDegree Triangulation::vertex_degree(VertexId v) const
{
    const auto n = level_of(v);
    VertexDegree d{};
    d.boundary = (n == 0 || n == levels());
    if (n < levels())
        d.up = up_[v].size();
    if (n > 0)
        d.down = down_[v].size();
    d.total = d.up.value_or(0) + d.down.value_or(0) + 2;
    return d;
}

inline std::vector<VertexId> Triangulation::neighbors(VertexId v) const
{
    std::vector<VertexId> out;
    for (auto e : rotation(v)) {
        const auto w = other_end(e, v);
        if (w == v)
            continue;
        bool seen = false;
        for (auto x : out)
            seen = seen || x == w;
        if (!seen)
            out.push_back(w);
    }
    return out;
}

inline bool Triangulation::adjacent(VertexId a, VertexId b) const
{
    for (auto e : rotation(a))
        if (other_end(e, a) == b)
            return true;
    return false;
}

} // namespace lorentz
