#pragma once

// Brute-force references shared by the unit tests and the acceptance run.

#include <algorithm>
#include <cstdlib>
#include <map>
#include <set>
#include <utility>
#include <vector>

#include "lorentz/peierls.hpp"
#include "lorentz/triangulation.hpp"

namespace oracle {

using namespace lorentz;

// Brute force: every simple cycle of the dual multigraph up to length n_max,
// deduplicated by edge set, kept when it winds once (reference-edge crossings
// counted from the primal side) and cuts the root off from the top level.
inline std::map<std::size_t, std::size_t> naive_contour_counts(const Triangulation& t, std::size_t n_max)
{
    const auto nt = t.triangle_count();
    std::vector<std::vector<std::pair<EdgeId, TriangleId>>> adj(nt);
    for (EdgeId e = 0; e < t.edges().size(); ++e) {
        const auto& ed = t.edge(e);
        if (ed.faces[0] < 0 || ed.faces[1] < 0)
            continue;
        adj[ed.faces[0]].push_back({e, static_cast<TriangleId>(ed.faces[1])});
        adj[ed.faces[1]].push_back({e, static_cast<TriangleId>(ed.faces[0])});
    }
    std::set<EdgeId> reference;
    for (std::size_t n = 0; n < t.levels(); ++n)
        for (EdgeId e = 0; e < t.edges().size(); ++e) {
            const auto& ed = t.edge(e);
            if (ed.kind == EdgeKind::Vertical && ed.level == n && t.position_of(ed.a) == 0 && t.position_of(ed.b) == 0) {
                reference.insert(e);
                break;
            }
        }

    std::set<std::vector<EdgeId>> cycles;
    std::vector<TriangleId> path;
    std::vector<EdgeId> edges;
    std::vector<int> steps; // winding contribution of each step
    std::vector<char> used(nt, 0);
    auto dfs = [&](auto&& self, TriangleId start, TriangleId at) -> void {
        for (const auto& [e, to] : adj[at]) {
            if (std::find(edges.begin(), edges.end(), e) != edges.end())
                continue;
            int w = 0;
            if (reference.count(e))
                w = t.edge(e).faces[0] == static_cast<int>(at) ? 1 : -1;
            if (to == start) {
                int total = w;
                for (int s : steps)
                    total += s;
                if (std::abs(total) == 1) {
                    auto key = edges;
                    key.push_back(e);
                    std::sort(key.begin(), key.end());
                    cycles.insert(key);
                }
                continue;
            }
            if (used[to] || edges.size() + 1 >= n_max)
                continue;
            used[to] = 1;
            edges.push_back(e);
            steps.push_back(w);
            self(self, start, to);
            steps.pop_back();
            edges.pop_back();
            used[to] = 0;
        }
    };
    for (TriangleId s = 0; s < nt; ++s) {
        used.assign(nt, 0);
        used[s] = 1;
        dfs(dfs, s, s);
    }

    std::map<std::size_t, std::size_t> counts;
    for (const auto& c : cycles) {
        peierls::Contour probe;
        probe.edges = c;
        if (peierls::separates(t, probe))
            ++counts[c.size()];
    }
    return counts;
}

} // namespace oracle
