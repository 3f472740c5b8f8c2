#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "gw.hpp"
#include "parallel.hpp"
#include "rng.hpp"
#include "triangulation.hpp"

// Degree-dependent site percolation: vertex v is open with probability
// tanh(beta * d_v), the largest disagreement between two single-site Ising
// conditionals at v.

namespace lorentz::percolation {

inline constexpr std::size_t kMaxPathLength = 12;

inline double open_probability(std::size_t degree, double beta)
{
    if (!(beta >= 0))
        throw std::invalid_argument("open_probability: beta must be >= 0");
    return std::tanh(beta * static_cast<double>(degree));
}

/// Degree used for the open probability: the full degree in the bulk,
/// d_up + 2 at the root level. Top-level vertices have none and stay closed.
inline bool has_degree(const Triangulation& t, VertexId v) { return t.level_of(v) < t.levels(); }

struct OpenSet
{
    std::vector<char> open; // per vertex
    double beta = 0;

    bool is_open(VertexId v) const { return open.at(v) != 0; }
};

/// One uniform per vertex; the same uniforms give a monotone coupling in beta.
inline std::vector<double> draw_uniforms(const Triangulation& t, Rng& rng)
{
    std::vector<double> u(t.vertex_count());
    for (auto& x : u)
        x = rng.uniform();
    return u;
}

inline OpenSet open_set_from_uniforms(const Triangulation& t, double beta, const std::vector<double>& u)
{
    if (u.size() != t.vertex_count())
        throw std::invalid_argument("open_set_from_uniforms: one uniform per vertex required");
    OpenSet s;
    s.beta = beta;
    s.open.assign(t.vertex_count(), 0);
    for (VertexId v = 0; v < t.vertex_count(); ++v)
        if (has_degree(t, v))
            s.open[v] = u[v] < open_probability(t.vertex_degree(v).total, beta);
    return s;
}

inline OpenSet sample_open_set(const Triangulation& t, double beta, Rng& rng)
{
    return open_set_from_uniforms(t, beta, draw_uniforms(t, rng));
}

struct Reach
{
    std::size_t level = 0;
    std::vector<VertexId> path; // root to a vertex on `level`; empty if the root is closed
};

/// Highest level reached by an open path from the root, with a shortest such
/// path as certificate.
inline Reach max_open_reach(const Triangulation& t, const OpenSet& s)
{
    Reach r;
    if (!s.is_open(t.root()))
        return r;
    constexpr VertexId kNone = static_cast<VertexId>(-1);
    std::vector<VertexId> from(t.vertex_count(), kNone);
    std::vector<VertexId> queue{t.root()};
    from[t.root()] = t.root();
    VertexId best = t.root();
    for (std::size_t head = 0; head < queue.size(); ++head) {
        const auto v = queue[head];
        if (t.level_of(v) > t.level_of(best))
            best = v;
        for (auto w : t.neighbors(v))
            if (from[w] == kNone && s.is_open(w)) {
                from[w] = v;
                queue.push_back(w);
            }
    }
    r.level = t.level_of(best);
    for (auto v = best;; v = from[v]) {
        r.path.push_back(v);
        if (v == t.root())
            break;
    }
    std::reverse(r.path.begin(), r.path.end());
    return r;
}

struct ReachEstimate
{
    double beta = 0;
    std::size_t levels = 0;
    std::size_t trials = 0;
    std::size_t reach_count = 0;
    double estimate = 0;
    double stderr_ = 0;
};

inline ReachEstimate make_estimate(double beta, std::size_t levels, std::size_t trials, std::size_t hits)
{
    ReachEstimate e{beta, levels, trials, hits, 0, 0};
    if (trials > 0) {
        const double p = static_cast<double>(hits) / static_cast<double>(trials);
        e.estimate = p;
        e.stderr_ = std::sqrt(p * (1 - p) / static_cast<double>(trials));
    }
    return e;
}

/// Annealed probability that the open cluster of the root reaches level N,
/// one row per beta. Trial i samples a fresh triangulation to depth N+1 and one
/// uniform per vertex from rng.split(i); every beta reuses them, so the curve
/// is monotone in beta trial by trial.
inline std::vector<ReachEstimate> annealed_reach_curve(std::size_t levels, const std::vector<double>& betas,
                                                       std::size_t trials, const Rng& rng, std::size_t workers = 1)
{
    if (trials == 0)
        throw std::invalid_argument("annealed_reach: trials must be >= 1");
    if (levels == 0)
        throw std::invalid_argument("annealed_reach: N must be >= 1");
    for (double b : betas)
        if (!(b >= 0))
            throw std::invalid_argument("annealed_reach: beta must be >= 0");
    // hit[i][j]: trial i reached level N at betas[j].
    std::vector<std::vector<char>> hit(trials);
    parallel_for(trials, workers, [&](std::size_t i) {
        Rng local = rng.split(i);
        const auto t = Triangulation::from_forest(
            gw::flatten(gw::sample_spine_forest(local, static_cast<std::uint32_t>(levels + 1))).forest);
        const auto u = draw_uniforms(t, local);
        hit[i].resize(betas.size());
        for (std::size_t j = 0; j < betas.size(); ++j)
            hit[i][j] = max_open_reach(t, open_set_from_uniforms(t, betas[j], u)).level >= levels;
    });
    std::vector<ReachEstimate> out;
    for (std::size_t j = 0; j < betas.size(); ++j) {
        std::size_t hits = 0;
        for (const auto& h : hit)
            hits += h[j];
        out.push_back(make_estimate(betas[j], levels, trials, hits));
    }
    return out;
}

inline ReachEstimate annealed_reach_probability(std::size_t levels, double beta, std::size_t trials, const Rng& rng,
                                                std::size_t workers = 1)
{
    return annealed_reach_curve(levels, {beta}, trials, rng, workers).front();
}

inline void check_walk(const Triangulation& t, const std::vector<VertexId>& path)
{
    for (auto v : path)
        if (v >= t.vertex_count())
            throw std::invalid_argument("path: vertex out of range");
    for (std::size_t i = 1; i < path.size(); ++i)
        if (!t.adjacent(path[i - 1], path[i]))
            throw std::invalid_argument("path: consecutive vertices are not adjacent");
}

/// True iff every edge of T joining two distinct path vertices joins two
/// consecutive path vertices.
inline bool is_locally_geodesic(const Triangulation& t, const std::vector<VertexId>& path)
{
    check_walk(t, path);
    std::vector<char> on(t.vertex_count(), 0);
    for (auto v : path)
        on[v] = 1;
    auto consecutive = [&](VertexId a, VertexId b) {
        for (std::size_t i = 1; i < path.size(); ++i)
            if ((path[i - 1] == a && path[i] == b) || (path[i - 1] == b && path[i] == a))
                return true;
        return false;
    };
    for (auto v : path)
        for (auto w : t.neighbors(v))
            if (on[w] && !consecutive(v, w))
                return false;
    return true;
}

/// Shortens a walk to a self-avoiding locally geodesic path with the same
/// endpoints whose vertices are a subsequence of the walk.
inline std::vector<VertexId> shortcut(const Triangulation& t, const std::vector<VertexId>& walk)
{
    check_walk(t, walk);
    if (walk.empty())
        return {};
    // Greedy: from the current vertex jump to the last walk vertex adjacent to
    // it (or equal to it). No later vertex can then touch an earlier one.
    std::vector<VertexId> out{walk.front()};
    std::size_t i = 0;
    while (i + 1 < walk.size()) {
        std::size_t next = i + 1;
        for (std::size_t j = walk.size(); j-- > i + 1;)
            if (walk[j] == walk[i] || t.adjacent(walk[i], walk[j])) {
                next = j;
                break;
            }
        if (walk[next] != walk[i])
            out.push_back(walk[next]);
        i = next;
    }
    return out;
}

/// Calls fn(path) for every self-avoiding locally geodesic path with n edges
/// from the root.
template<class Fn>
void for_each_salg_path(const Triangulation& t, std::size_t n, Fn&& fn)
{
    if (n > kMaxPathLength)
        throw std::length_error("salg paths: n <= 12 required");
    std::vector<std::vector<VertexId>> nb(t.vertex_count());
    for (VertexId v = 0; v < t.vertex_count(); ++v)
        nb[v] = t.neighbors(v);
    // touch[v]: number of path vertices adjacent to v (or equal to it).
    std::vector<int> touch(t.vertex_count(), 0);
    std::vector<VertexId> path{t.root()};
    auto mark = [&](VertexId v, int d) {
        touch[v] += d;
        for (auto w : nb[v])
            touch[w] += d;
    };
    auto dfs = [&](auto&& self) -> void {
        if (path.size() == n + 1) {
            fn(static_cast<const std::vector<VertexId>&>(path));
            return;
        }
        const auto v = path.back();
        for (auto w : nb[v]) {
            // w may touch only the current end of the path.
            if (touch[w] != 1)
                continue;
            path.push_back(w);
            mark(w, 1);
            self(self);
            mark(w, -1);
            path.pop_back();
        }
    };
    mark(t.root(), 1);
    dfs(dfs);
}

/// Number of self-avoiding locally geodesic paths with n edges from the root.
inline std::size_t count_salg_paths(const Triangulation& t, std::size_t n)
{
    std::size_t count = 0;
    for_each_salg_path(t, n, [&](const std::vector<VertexId>&) { ++count; });
    return count;
}

} // namespace lorentz::percolation
