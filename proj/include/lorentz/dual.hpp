#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "triangulation.hpp"

namespace lorentz {

/// Planar dual of a triangulation: one dual vertex per triangle, one dual
/// edge per primal edge with a triangle on both sides. Dual edge ids are the
/// primal edge ids they cross.
struct DualGraph
{
    struct Arc
    {
        EdgeId edge;
        TriangleId to;
    };

    std::vector<std::vector<Arc>> adjacency;  // per triangle
    std::vector<std::uint32_t> strip;         // per triangle
    std::vector<double> angle;                // per triangle, in [0, 1)
    std::vector<std::int8_t> winding_weight;  // per primal edge: +1 for the strip's reference edge, else 0

    std::size_t size() const noexcept { return adjacency.size(); }
    std::size_t degree(TriangleId t) const { return adjacency.at(t).size(); }

    /// Winding contribution of stepping from `from` across `edge`: +1 when
    /// crossing a reference edge left to right, -1 right to left.
    int crossing(const Triangulation& tr, TriangleId from, EdgeId edge) const
    {
        const auto w = winding_weight.at(edge);
        if (w == 0)
            return 0;
        return tr.edge(edge).faces[0] == static_cast<std::int32_t>(from) ? w : -w;
    }
};

inline DualGraph dual_graph(const Triangulation& t)
{
    DualGraph g;
    const auto nt = t.triangle_count();
    g.adjacency.resize(nt);
    g.strip.resize(nt);
    g.angle.resize(nt);
    g.winding_weight.assign(t.edges().size(), 0);
    for (TriangleId i = 0; i < nt; ++i) {
        const auto& tri = t.triangle(i);
        g.strip[i] = tri.strip;
        g.angle[i] = (tri.slot + 0.5) / static_cast<double>(t.strip_triangles(tri.strip).size());
    }
    for (EdgeId e = 0; e < t.edges().size(); ++e) {
        const auto& ed = t.edge(e);
        if (ed.faces[0] == kNoFace || ed.faces[1] == kNoFace)
            continue;
        const auto a = static_cast<TriangleId>(ed.faces[0]);
        const auto b = static_cast<TriangleId>(ed.faces[1]);
        g.adjacency[a].push_back({e, b});
        g.adjacency[b].push_back({e, a});
    }
    for (std::size_t n = 0; n < t.levels(); ++n)
        g.winding_weight[t.reference_edge(n)] = 1;
    return g;
}

} // namespace lorentz
