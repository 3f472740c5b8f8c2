#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <queue>
#include <stdexcept>
#include <utility>
#include <vector>

#include "dual.hpp"
#include "forest.hpp"
#include "ising.hpp"
#include "parallel.hpp"
#include "triangulation.hpp"

namespace lorentz::peierls {

inline constexpr std::size_t kMaxBoundedLength = 14;
inline constexpr std::size_t kMaxExhaustiveTriangles = 40;

/// A simple dual cycle winding once around the cylinder. edges[i] joins
/// triangles[i] and triangles[(i+1) % length]; orientation is normalized so
/// the winding number is +1.
struct Contour
{
    std::vector<TriangleId> triangles;
    std::vector<EdgeId> edges;
    int winding = 1;

    std::size_t length() const noexcept { return edges.size(); }
};

struct ContourSet
{
    std::map<std::size_t, std::size_t> counts; // length -> #contours
    std::vector<Contour> contours;

    std::size_t count(std::size_t n) const
    {
        const auto it = counts.find(n);
        return it == counts.end() ? 0 : it->second;
    }
};

namespace detail {

// All winding cycles whose smallest triangle id is `start`, each reported once:
// of the two traversal directions only the one whose first edge id is below
// its last is kept.
inline void contours_from(const Triangulation& t, const DualGraph& g, TriangleId start, std::size_t n_max,
                          std::vector<Contour>& out)
{
    const auto nt = g.size();
    constexpr auto kFar = std::numeric_limits<std::uint32_t>::max();
    std::vector<std::uint32_t> dist(nt, kFar);
    std::queue<TriangleId> q;
    dist[start] = 0;
    q.push(start);
    while (!q.empty()) {
        const auto a = q.front();
        q.pop();
        for (const auto& arc : g.adjacency[a])
            if (arc.to >= start && dist[arc.to] == kFar) {
                dist[arc.to] = dist[a] + 1;
                q.push(arc.to);
            }
    }

    std::vector<char> on_path(nt, 0);
    std::vector<TriangleId> tris{start};
    std::vector<EdgeId> edges;
    on_path[start] = 1;

    auto dfs = [&](auto&& self, TriangleId at, int winding) -> void {
        for (const auto& arc : g.adjacency[at]) {
            if (!edges.empty() && arc.edge == edges.back())
                continue;
            const int w = winding + g.crossing(t, at, arc.edge);
            if (arc.to == start) {
                if (edges.empty() || std::abs(w) != 1 || edges.front() > arc.edge)
                    continue;
                Contour c;
                c.triangles = tris;
                c.edges = edges;
                c.edges.push_back(arc.edge);
                if (w < 0) {
                    // Reverse orientation, keeping the start triangle first.
                    std::reverse(c.triangles.begin() + 1, c.triangles.end());
                    std::reverse(c.edges.begin(), c.edges.end());
                }
                out.push_back(std::move(c));
                continue;
            }
            if (arc.to < start || on_path[arc.to] || edges.size() + 1 + dist[arc.to] > n_max)
                continue;
            on_path[arc.to] = 1;
            tris.push_back(arc.to);
            edges.push_back(arc.edge);
            self(self, arc.to, w);
            edges.pop_back();
            tris.pop_back();
            on_path[arc.to] = 0;
        }
    };
    dfs(dfs, start, 0);
}

} // namespace detail

/// All simple dual cycles of length <= n_max winding once around the cylinder.
/// Requires n_max <= 14 unless the triangulation has at most 40 triangles.
inline ContourSet enumerate_contours(const Triangulation& t, std::size_t n_max, std::size_t workers = 1)
{
    if (n_max > kMaxBoundedLength && t.triangle_count() > kMaxExhaustiveTriangles)
        throw std::length_error("enumerate_contours: n_max > 14 needs at most 40 triangles");
    const auto g = dual_graph(t);
    std::vector<std::vector<Contour>> per_start(g.size());
    parallel_for(g.size(), workers, [&](std::size_t s) {
        detail::contours_from(t, g, static_cast<TriangleId>(s), n_max, per_start[s]);
    });
    ContourSet out;
    for (auto& v : per_start)
        for (auto& c : v) {
            ++out.counts[c.length()];
            out.contours.push_back(std::move(c));
        }
    return out;
}

/// Vertices connected to the root without crossing an edge of the contour.
inline std::vector<char> inside(const Triangulation& t, const Contour& c)
{
    std::vector<char> cut(t.edges().size(), 0), seen(t.vertex_count(), 0);
    for (auto e : c.edges)
        cut.at(e) = 1;
    std::vector<VertexId> stack{t.root()};
    seen[t.root()] = 1;
    while (!stack.empty()) {
        const auto v = stack.back();
        stack.pop_back();
        for (auto e : t.rotation(v)) {
            if (cut[e])
                continue;
            const auto w = t.other_end(e, v);
            if (!seen[w]) {
                seen[w] = 1;
                stack.push_back(w);
            }
        }
    }
    return seen;
}

/// True iff removing the crossed edges disconnects the root from the top level.
inline bool separates(const Triangulation& t, const Contour& c)
{
    const auto in = inside(t, c);
    const auto top = t.levels();
    for (std::size_t i = 0; i < t.level_size(top); ++i)
        if (in[t.vertex(top, i)])
            return false;
    return true;
}

/// Inverts every spin on the root side of the contour.
inline ising::SpinState flip_inside(const Triangulation& t, const ising::SpinState& state, const Contour& c)
{
    const auto in = inside(t, c);
    const auto top = t.levels();
    for (std::size_t i = 0; i < t.level_size(top); ++i)
        if (in[t.vertex(top, i)])
            throw std::invalid_argument("flip_inside: contour does not separate the root from the boundary");
    const auto free = t.vertex_count() - t.level_size(top);
    if (state.spins.size() != free)
        throw std::invalid_argument("flip_inside: spin vector does not cover the free vertices");
    auto out = state;
    for (VertexId v = 0; v < free; ++v)
        if (in[v])
            out.spins[v] = static_cast<std::int8_t>(-out.spins[v]);
    return out;
}

struct SeriesRow
{
    std::size_t n;
    std::size_t count;
    double term;        // count * exp(-2 beta n)
    double partial_sum; // over lengths <= n
    double tail_sum;    // over lengths >= n, up to the enumerated maximum
};

struct PeierlsSeries
{
    std::vector<SeriesRow> rows;
    double total = 0;
    /// Smallest enumerated length whose tail sum is below 1.
    std::optional<std::size_t> small_tail_from;
};

inline PeierlsSeries peierls_series(const std::map<std::size_t, std::size_t>& counts, double beta)
{
    PeierlsSeries s;
    for (const auto& [n, k] : counts) {
        const double term = static_cast<double>(k) * std::exp(-2.0 * beta * static_cast<double>(n));
        s.total += term;
        s.rows.push_back({n, k, term, s.total, 0.0});
    }
    double tail = 0;
    for (auto it = s.rows.rbegin(); it != s.rows.rend(); ++it) {
        tail += it->term;
        it->tail_sum = tail;
    }
    for (const auto& r : s.rows)
        if (r.tail_sum < 1.0) {
            s.small_tail_from = r.n;
            break;
        }
    return s;
}

/// Number of level-lo vertices with at least one descendant at level hi.
inline std::size_t survivors_between(const Forest& f, std::size_t lo, std::size_t hi)
{
    if (lo > hi)
        throw std::invalid_argument("survivors_between: lo > hi");
    if (hi > f.levels())
        throw std::invalid_argument("survivors_between: forest too short");
    const auto k = f.level_sizes();
    std::vector<char> alive(k[hi], 1);
    for (std::size_t m = hi; m-- > lo;) {
        std::vector<char> below(k[m], 0);
        std::size_t child = 0;
        for (std::size_t i = 0; i < k[m]; ++i)
            for (std::uint32_t c = 0; c < f.out_degree[m][i]; ++c, ++child)
                below[i] = below[i] || alive[child];
        alive = std::move(below);
    }
    return static_cast<std::size_t>(std::count(alive.begin(), alive.end(), 1));
}

/// S_{R,n}: level-(R-n) vertices having a descendant at level R+n.
inline std::size_t survivors_statistic(const Forest& f, std::size_t R, std::size_t n)
{
    if (R < n)
        throw std::invalid_argument("survivors_statistic: R - n < 0");
    return survivors_between(f, R - n, R + n);
}

/// Strips touched by a contour, as [lowest, highest].
inline std::pair<std::uint32_t, std::uint32_t> strip_span(const Triangulation& t, const Contour& c)
{
    std::uint32_t lo = std::numeric_limits<std::uint32_t>::max(), hi = 0;
    for (auto tr : c.triangles) {
        lo = std::min(lo, t.triangle(tr).strip);
        hi = std::max(hi, t.triangle(tr).strip);
    }
    return {lo, hi};
}

struct RatioCheck
{
    std::size_t contours = 0;
    double max_error = 0; // max |P(island) / P(flipped) - exp(-2 beta |c|)|
};

/// Exact Gibbs check of the contour energy: for every contour of length <=
/// n_max, the configuration that is + exactly on the root side, under minus
/// boundary, is exp(-2 beta |c|) times less likely than its flip.
inline RatioCheck gibbs_ratio_check(const Triangulation& t, double beta, std::size_t n_max)
{
    RatioCheck r;
    const auto g = ising::gibbs_exact(t, beta, ising::Boundary::minus());
    for (const auto& c : enumerate_contours(t, n_max).contours) {
        const auto in = inside(t, c);
        ising::Spins s(g.spins());
        for (VertexId v = 0; v < s.size(); ++v)
            s[v] = in[v] ? 1 : -1;
        const auto flipped = flip_inside(t, {s, ising::Boundary::minus(), beta}, c);
        const double ratio = g.probability(s) / g.probability(flipped.spins);
        r.max_error = std::max(r.max_error, std::abs(ratio - std::exp(-2.0 * beta * static_cast<double>(c.length()))));
        ++r.contours;
    }
    return r;
}

} // namespace lorentz::peierls
