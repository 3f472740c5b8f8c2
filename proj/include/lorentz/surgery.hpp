#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <stdexcept>
#include <utility>
#include <vector>

#include "enumerate.hpp"
#include "forest.hpp"
#include "gw.hpp"
#include "parallel.hpp"
#include "percolation.hpp"
#include "rng.hpp"
#include "triangulation.hpp"

// Triangle-pair insertion at a vertex, its inverse (horizontal edge
// collapse), the modification map along a path, and the randomized
// reconstruction that undoes it.

namespace lorentz::surgery {

inline constexpr VertexId kGone = std::numeric_limits<VertexId>::max();

/// Mutable strip representation. Each strip is a cyclic word over {U, D}; the
/// diagonal before letter j has its endpoints determined by walking from
/// diagonal 0 (U advances the bottom, D the top). Vertices carry stable ids
/// that survive relabeling, so surgery can be chained before canonicalizing.
class StripComplex
{
public:
    struct Canonical
    {
        Forest forest;
        std::vector<VertexId> id_map; // stable id -> vertex id, kGone if removed
    };

    static StripComplex from(const Triangulation& t)
    {
        StripComplex c;
        const auto L = t.levels();
        c.level_.resize(L + 1);
        c.level_of_.resize(t.vertex_count());
        for (std::size_t n = 0; n <= L; ++n)
            for (std::size_t i = 0; i < t.level_size(n); ++i) {
                c.level_[n].push_back(t.vertex(n, i));
                c.level_of_[t.vertex(n, i)] = static_cast<std::uint32_t>(n);
            }
        c.word_.resize(L);
        c.start_.resize(L);
        for (std::size_t n = 0; n < L; ++n) {
            for (auto tr : t.strip_triangles(n))
                c.word_[n].push_back(t.triangle(tr).orientation == Orientation::Up ? 'U' : 'D');
            c.start_[n] = {t.vertex(n, 0), t.vertex(n + 1, 0)};
        }
        c.next_id_ = static_cast<VertexId>(t.vertex_count());
        return c;
    }

    std::size_t levels() const noexcept { return word_.size(); }
    std::size_t level_size(std::size_t n) const { return level_.at(n).size(); }
    std::size_t id_bound() const noexcept { return next_id_; }
    bool alive(VertexId v) const { return v < level_of_.size() && level_of_[v] != kGone; }
    std::uint32_t level_of(VertexId v) const
    {
        if (!alive(v))
            throw std::invalid_argument("StripComplex: unknown vertex");
        return level_of_[v];
    }
    const std::vector<VertexId>& level(std::size_t n) const { return level_.at(n); }

    std::size_t index_of(VertexId v) const
    {
        const auto& lv = level_[level_of(v)];
        return static_cast<std::size_t>(std::find(lv.begin(), lv.end(), v) - lv.begin());
    }
    /// Cyclic neighbor on the same level, `step` positions to the right.
    VertexId shift(VertexId v, std::ptrdiff_t step) const
    {
        const auto& lv = level_[level_of(v)];
        const auto k = static_cast<std::ptrdiff_t>(lv.size());
        const auto i = static_cast<std::ptrdiff_t>(index_of(v));
        return lv[static_cast<std::size_t>(((i + step) % k + k) % k)];
    }

    /// Endpoints (bottom, top) of every diagonal of a strip, in word order.
    std::vector<std::array<VertexId, 2>> diagonals(std::size_t strip) const
    {
        const auto& w = word_.at(strip);
        const auto& lo = level_[strip];
        const auto& hi = level_[strip + 1];
        std::size_t b = index_of(start_[strip][0]), t = index_of(start_[strip][1]);
        std::vector<std::array<VertexId, 2>> out;
        out.reserve(w.size());
        for (char letter : w) {
            out.push_back({lo[b % lo.size()], hi[t % hi.size()]});
            if (letter == 'U')
                ++b;
            else
                ++t;
        }
        return out;
    }

    std::size_t up_degree(VertexId v) const
    {
        const auto n = level_of(v);
        if (n >= levels())
            return 0;
        std::size_t d = 0;
        for (const auto& e : diagonals(n))
            d += e[0] == v;
        return d;
    }
    std::size_t down_degree(VertexId v) const
    {
        const auto n = level_of(v);
        if (n == 0)
            return 0;
        std::size_t d = 0;
        for (const auto& e : diagonals(n - 1))
            d += e[1] == v;
        return d;
    }
    std::size_t degree(VertexId v) const { return up_degree(v) + down_degree(v) + 2; }

    /// Neighbor reached through the r-th entry of v's rotation: up-edges left
    /// to right, right horizontal, down-edges right to left, left horizontal.
    VertexId rotation_neighbor(VertexId v, std::size_t r) const
    {
        const auto n = level_of(v);
        std::vector<VertexId> up, down;
        if (n < levels()) {
            const auto d = diagonals(n);
            const auto s = fan_start(d, word_[n], v, 0);
            for (std::size_t j = 0; j < d.size() && d[(s + j) % d.size()][0] == v; ++j)
                up.push_back(d[(s + j) % d.size()][1]);
        }
        if (n > 0) {
            const auto d = diagonals(n - 1);
            const auto s = fan_start(d, word_[n - 1], v, 1);
            for (std::size_t j = 0; j < d.size() && d[(s + j) % d.size()][1] == v; ++j)
                down.push_back(d[(s + j) % d.size()][0]);
        }
        if (r < up.size())
            return up[r];
        r -= up.size();
        if (r == 0)
            return shift(v, 1);
        --r;
        if (r < down.size())
            return down[down.size() - 1 - r];
        r -= down.size();
        if (r == 0)
            return shift(v, -1);
        throw std::out_of_range("rotation_neighbor: index past the degree");
    }

    /// Splits v into 1 + k vertices along k new horizontal edges. ups/downs are
    /// nondecreasing indices into v's up- and down-fans (left to right); pair j
    /// adds one up-triangle at up-edge ups[j] and one down-triangle at
    /// down-edge downs[j]. Returns the new stable ids, left to right.
    std::vector<VertexId> split(VertexId v, const std::vector<std::uint32_t>& ups,
                                const std::vector<std::uint32_t>& downs)
    {
        const auto n = level_of(v);
        if (n == 0 || n >= levels())
            throw std::invalid_argument("split: vertex must be on an internal level");
        if (ups.size() != downs.size())
            throw std::invalid_argument("split: up and down choices must pair up");
        if (!std::is_sorted(ups.begin(), ups.end()) || !std::is_sorted(downs.begin(), downs.end()))
            throw std::invalid_argument("split: choices must be ordered left to right");
        const auto du = rotate_to_fan(n, v, 0);
        const auto dd = rotate_to_fan(n - 1, v, 1);
        if (!ups.empty() && (ups.back() >= du || downs.back() >= dd))
            throw std::invalid_argument("split: choice outside the fan");
        for (auto j = ups.size(); j-- > 0;) {
            word_[n].insert(word_[n].begin() + ups[j], 'U');
            word_[n - 1].insert(word_[n - 1].begin() + downs[j], 'D');
        }
        std::vector<VertexId> created;
        auto& lv = level_[n];
        auto at = lv.begin() + static_cast<std::ptrdiff_t>(index_of(v)) + 1;
        for (std::size_t j = 0; j < ups.size(); ++j) {
            created.push_back(next_id_++);
            level_of_.push_back(n);
        }
        lv.insert(at, created.begin(), created.end());
        return created;
    }

    /// Merges the right neighbor of v into v by removing the two triangles on
    /// their common horizontal edge. Returns the (up, down) split choice that
    /// undoes it, indexed in the merged vertex's fans.
    std::pair<std::uint32_t, std::uint32_t> merge_right(VertexId v)
    {
        const auto n = level_of(v);
        if (n == 0 || n >= levels())
            throw std::invalid_argument("collapse: edge must lie on an internal level");
        if (level_[n].size() < 2)
            throw std::invalid_argument("collapse: level would become empty");
        const auto x = shift(v, 1);
        const auto du = rotate_to_fan(n, v, 0);
        const auto dd = rotate_to_fan(n - 1, v, 1);
        if (word_[n][du - 1] != 'U' || word_[n - 1][dd - 1] != 'D')
            throw std::logic_error("collapse: inconsistent strip word");
        word_[n].erase(word_[n].begin() + static_cast<std::ptrdiff_t>(du - 1));
        word_[n - 1].erase(word_[n - 1].begin() + static_cast<std::ptrdiff_t>(dd - 1));
        auto& lv = level_[n];
        lv.erase(std::find(lv.begin(), lv.end(), x));
        level_of_[x] = kGone;
        return {static_cast<std::uint32_t>(du - 1), static_cast<std::uint32_t>(dd - 1)};
    }

    /// Relabels from the root: in each strip, diagonal 0 becomes the first
    /// up-edge of the previous level's anchor, whose top anchors the next level.
    Canonical canonicalize() const
    {
        Canonical out;
        out.id_map.assign(next_id_, kGone);
        const auto L = levels();
        out.forest.out_degree.resize(L);
        if (level_[0].size() != 1)
            throw std::logic_error("canonicalize: level 0 must be a single root");
        VertexId anchor = level_[0][0];
        VertexId next_id = 0;
        for (std::size_t n = 0;; ++n) {
            const auto& lv = level_[n];
            const auto a = index_of(anchor);
            for (std::size_t i = 0; i < lv.size(); ++i)
                out.id_map[lv[(a + i) % lv.size()]] = next_id++;
            if (n == L)
                break;
            const auto d = diagonals(n);
            const auto s = fan_start(d, word_[n], anchor, 0);
            auto& delta = out.forest.out_degree[n];
            std::uint32_t run = 0;
            for (std::size_t j = 0; j < d.size(); ++j) {
                if (word_[n][(s + j) % d.size()] == 'U') {
                    delta.push_back(run);
                    run = 0;
                } else {
                    ++run;
                }
            }
            anchor = d[s][1];
        }
        return out;
    }

private:
    // First diagonal of v's up-fan (side 0, previous letter U) or down-fan
    // (side 1, previous letter D).
    static std::size_t fan_start(const std::vector<std::array<VertexId, 2>>& d, const std::vector<char>& w,
                                 VertexId v, int side)
    {
        const char before = side == 0 ? 'U' : 'D';
        for (std::size_t j = 0; j < d.size(); ++j)
            if (d[j][side] == v && w[(j + d.size() - 1) % d.size()] == before)
                return j;
        throw std::logic_error("StripComplex: fan not found");
    }

    // Rotates the strip so that v's fan starts at diagonal 0; returns its size.
    std::size_t rotate_to_fan(std::size_t strip, VertexId v, int side)
    {
        const auto d = diagonals(strip);
        const auto s = fan_start(d, word_[strip], v, side);
        auto& w = word_[strip];
        std::rotate(w.begin(), w.begin() + static_cast<std::ptrdiff_t>(s), w.end());
        start_[strip] = d[s];
        std::size_t size = 0;
        while (size < d.size() && d[(s + size) % d.size()][side] == v)
            ++size;
        return size;
    }

    std::vector<std::vector<VertexId>> level_;
    std::vector<std::uint32_t> level_of_; // per stable id; kGone once merged away
    std::vector<std::vector<char>> word_;
    std::vector<std::array<VertexId, 2>> start_;
    VertexId next_id_ = 0;
};

using SitePair = std::pair<std::uint32_t, std::uint32_t>; // (up-edge index, down-edge index)

struct Insertion
{
    VertexId v;
    std::vector<SitePair> pairs; // nondecreasing on each side, repeats allowed
};

struct SurgeryResult
{
    Triangulation triangulation;
    std::vector<VertexId> vertex_map; // old vertex id -> new id, kGone if merged away
    std::vector<VertexId> created;    // new vertices, left to right
};

struct CollapseResult
{
    Triangulation triangulation;
    std::vector<VertexId> vertex_map;
    Insertion inverse; // in the new triangulation's ids
};

/// The d_up x d_dn elementary insertion sites at v.
inline std::vector<SitePair> insertion_sites(const Triangulation& t, VertexId v)
{
    const auto n = t.level_of(v);
    if (n == 0 || n == t.levels())
        throw std::invalid_argument("insertion_sites: boundary vertex");
    std::vector<SitePair> out;
    for (std::uint32_t a = 0; a < t.up_edges(v).size(); ++a)
        for (std::uint32_t b = 0; b < t.down_edges(v).size(); ++b)
            out.push_back({a, b});
    return out;
}

/// Ordered selections with repeats of k items from `side` choices, C(side+k-1, k).
inline std::uint64_t multi_insertion_count(std::uint64_t side, std::uint64_t k)
{
    if (side == 0)
        return k == 0 ? 1 : 0;
    std::uint64_t c = 1;
    for (std::uint64_t i = 1; i <= k; ++i)
        c = c * (side - 1 + i) / i; // exact: c * (side-1+i) is divisible by i
    return c;
}

namespace detail {

inline Triangulation rebuild(const StripComplex& c, std::size_t old_count, std::vector<VertexId>& old_map)
{
    auto canon = c.canonicalize();
    old_map.assign(canon.id_map.begin(), canon.id_map.begin() + static_cast<std::ptrdiff_t>(old_count));
    return Triangulation::from_forest(canon.forest);
}

inline void split_checked(StripComplex& c, const Insertion& ins, std::vector<VertexId>* created = nullptr)
{
    std::vector<std::uint32_t> ups, downs;
    for (const auto& [a, b] : ins.pairs) {
        ups.push_back(a);
        downs.push_back(b);
    }
    auto ids = c.split(ins.v, ups, downs);
    if (created)
        *created = std::move(ids);
}

} // namespace detail

inline SurgeryResult insert_pairs(const Triangulation& t, const Insertion& ins)
{
    if (ins.v >= t.vertex_count())
        throw std::invalid_argument("insert_pairs: unknown vertex");
    auto c = StripComplex::from(t);
    std::vector<VertexId> created;
    detail::split_checked(c, ins, &created);
    auto canon = c.canonicalize();
    SurgeryResult r{Triangulation::from_forest(canon.forest), {}, {}};
    r.vertex_map.assign(canon.id_map.begin(), canon.id_map.begin() + static_cast<std::ptrdiff_t>(t.vertex_count()));
    for (auto id : created)
        r.created.push_back(canon.id_map[id]);
    return r;
}


/// Collapses the `count` horizontal edges to the right of v, merging count+1
/// vertices into v.
inline CollapseResult collapse_horizontal_run(const Triangulation& t, VertexId v, std::size_t count)
{
    if (v >= t.vertex_count())
        throw std::invalid_argument("collapse: unknown vertex");
    const auto n = t.level_of(v);
    if (n == 0 || n == t.levels())
        throw std::invalid_argument("collapse: edge must lie on an internal level");
    if (t.level_size(n) < count + 1)
        throw std::invalid_argument("collapse: level too small for the run");
    auto c = StripComplex::from(t);
    Insertion inverse{v, {}};
    for (std::size_t i = 0; i < count; ++i)
        inverse.pairs.push_back(c.merge_right(v));
    CollapseResult r{Triangulation::from_forest(Forest{}), {}, {}};
    r.triangulation = detail::rebuild(c, t.vertex_count(), r.vertex_map);
    inverse.v = r.vertex_map[v];
    r.inverse = std::move(inverse);
    return r;
}

/// Collapses one horizontal edge; its right endpoint merges into the left.
inline CollapseResult collapse_horizontal_edge(const Triangulation& t, EdgeId e)
{
    const auto& ed = t.edge(e);
    if (ed.kind != EdgeKind::Horizontal)
        throw std::invalid_argument("collapse: not a horizontal edge");
    if (ed.a == ed.b)
        throw std::invalid_argument("collapse: level would become empty");
    return collapse_horizontal_run(t, ed.a, 1);
}

// ---------------------------------------------------------------------------
// Paths and their 1-neighborhoods

/// Per path vertex: degree split and the rotation slots of the edges to the
/// previous and next path vertex (kNoSlot at the ends).
struct PathVertexCode
{
    static constexpr std::uint32_t kNoSlot = std::numeric_limits<std::uint32_t>::max();
    std::uint32_t up = 0;
    std::uint32_t down = 0;
    std::uint32_t entry = kNoSlot;
    std::uint32_t exit = kNoSlot;

    bool operator==(const PathVertexCode&) const = default;
    auto operator<=>(const PathVertexCode&) const = default;
};

struct PathNeighborhood
{
    std::vector<VertexId> path;        // from the root
    std::vector<PathVertexCode> code;  // one per path vertex
    std::vector<std::size_t> degrees;  // total degree per path vertex
};

namespace detail {

inline std::uint32_t slot_of(const std::vector<EdgeId>& rot, EdgeId e)
{
    return static_cast<std::uint32_t>(std::find(rot.begin(), rot.end(), e) - rot.begin());
}

// First rotation slot of `from` whose edge leads to `to`.
inline std::optional<std::uint32_t> first_slot_to(const Triangulation& t, VertexId from, VertexId to)
{
    const auto rot = t.rotation(from);
    for (std::uint32_t i = 0; i < rot.size(); ++i)
        if (t.other_end(rot[i], from) == to && !t.edge(rot[i]).is_loop())
            return i;
    return std::nullopt;
}

} // namespace detail

/// Encodes a self-avoiding locally geodesic path from the root. Between
/// consecutive path vertices the first edge in the earlier vertex's rotation
/// is used.
inline PathNeighborhood path_neighborhood(const Triangulation& t, const std::vector<VertexId>& path)
{
    if (path.empty() || path.front() != t.root())
        throw std::invalid_argument("path_neighborhood: path must start at the root");
    if (!percolation::is_locally_geodesic(t, path))
        throw std::invalid_argument("path_neighborhood: path is not locally geodesic");
    for (std::size_t i = 0; i < path.size(); ++i)
        for (std::size_t j = i + 1; j < path.size(); ++j)
            if (path[i] == path[j])
                throw std::invalid_argument("path_neighborhood: path is not self-avoiding");
    PathNeighborhood g;
    g.path = path;
    for (auto v : path) {
        const auto d = t.vertex_degree(v);
        g.code.push_back({static_cast<std::uint32_t>(d.up.value_or(0)), static_cast<std::uint32_t>(d.down.value_or(0)),
                          PathVertexCode::kNoSlot, PathVertexCode::kNoSlot});
        g.degrees.push_back(d.total);
    }
    for (std::size_t j = 0; j + 1 < path.size(); ++j) {
        const auto slot = *detail::first_slot_to(t, path[j], path[j + 1]);
        const auto e = t.rotation(path[j])[slot];
        g.code[j].exit = slot;
        g.code[j + 1].entry = detail::slot_of(t.rotation(path[j + 1]), e);
    }
    return g;
}

/// The unique embedding of an encoded path into t, walking from the root.
inline std::optional<std::vector<VertexId>> embed(const Triangulation& t, const std::vector<PathVertexCode>& code)
{
    if (code.empty())
        return std::nullopt;
    std::vector<VertexId> path{t.root()};
    auto matches = [&](VertexId v, const PathVertexCode& c) {
        const auto d = t.vertex_degree(v);
        return d.up.value_or(0) == c.up && d.down.value_or(0) == c.down;
    };
    if (!matches(t.root(), code[0]) || code[0].entry != PathVertexCode::kNoSlot)
        return std::nullopt;
    for (std::size_t j = 0; j + 1 < code.size(); ++j) {
        const auto v = path.back();
        const auto rot = t.rotation(v);
        if (code[j].exit >= rot.size())
            return std::nullopt;
        const auto e = rot[code[j].exit];
        if (t.edge(e).is_loop())
            return std::nullopt;
        const auto w = t.other_end(e, v);
        if (detail::first_slot_to(t, v, w) != code[j].exit || !matches(w, code[j + 1]))
            return std::nullopt;
        if (detail::slot_of(t.rotation(w), e) != code[j + 1].entry)
            return std::nullopt;
        path.push_back(w);
    }
    if (code.back().exit != PathVertexCode::kNoSlot)
        return std::nullopt;
    return path;
}

// ---------------------------------------------------------------------------
// The modification map

struct ModificationParams
{
    std::size_t threshold = 100; // degree from which a path vertex is modified
    std::size_t count = 10;      // insertions per modified vertex
};

/// One multi-insertion per modified path vertex, in path order. Site indices
/// refer to the vertex's fans after the insertions at later path vertices
/// have been made; this is the state in which reconstruction undoes them.
struct Modification
{
    std::vector<Insertion> insertions;
};

/// Path indices whose vertex is on an internal level with degree >= threshold.
inline std::vector<std::size_t> modified_indices(const Triangulation& t, const PathNeighborhood& g,
                                                 const ModificationParams& p)
{
    std::vector<std::size_t> out;
    for (std::size_t j = 0; j < g.path.size(); ++j) {
        const auto lvl = t.level_of(g.path[j]);
        if (lvl > 0 && lvl < t.levels() && g.degrees[j] >= p.threshold)
            out.push_back(j);
    }
    return out;
}

namespace detail {

inline void check_plan(const Triangulation& t, const PathNeighborhood& g, const Modification& w,
                       const ModificationParams& p)
{
    const auto emb = embed(t, g.code);
    if (!emb || *emb != g.path)
        throw std::invalid_argument("apply_modification: neighborhood does not embed");
    const auto idx = modified_indices(t, g, p);
    if (idx.size() != w.insertions.size())
        throw std::invalid_argument("apply_modification: plan does not match the modified vertices");
    for (std::size_t i = 0; i < idx.size(); ++i) {
        if (w.insertions[i].v != g.path[idx[i]])
            throw std::invalid_argument("apply_modification: plan does not match the modified vertices");
        if (w.insertions[i].pairs.size() != p.count)
            throw std::invalid_argument("apply_modification: wrong number of insertions at a vertex");
    }
}

} // namespace detail

/// w(T): applies the multi-insertions from the last path vertex backwards.
inline SurgeryResult apply_modification(const Triangulation& t, const PathNeighborhood& g, const Modification& w,
                                        const ModificationParams& p = {})
{
    detail::check_plan(t, g, w, p);
    auto c = StripComplex::from(t);
    for (auto it = w.insertions.rbegin(); it != w.insertions.rend(); ++it)
        detail::split_checked(c, *it);
    SurgeryResult r{Triangulation::from_forest(Forest{}), {}, {}};
    r.triangulation = detail::rebuild(c, t.vertex_count(), r.vertex_map);
    return r;
}

/// A uniformly random plan: `count` ordered-with-repeats choices on each side
/// of every modified vertex.
inline Modification random_modification(const Triangulation& t, const PathNeighborhood& g,
                                        const ModificationParams& p, Rng& rng)
{
    const auto idx = modified_indices(t, g, p);
    auto c = StripComplex::from(t);
    Modification w;
    w.insertions.resize(idx.size());
    auto sorted_draw = [&](std::size_t side) {
        // Uniform multiset of size `count` from `side` items via stars and bars.
        std::vector<std::uint32_t> bars;
        std::vector<char> pick(side - 1 + p.count, 0);
        std::vector<std::size_t> order(pick.size());
        for (std::size_t i = 0; i < order.size(); ++i)
            order[i] = i;
        for (std::size_t i = 0; i < p.count; ++i) {
            const auto j = i + rng.below(order.size() - i);
            std::swap(order[i], order[j]);
            pick[order[i]] = 1;
        }
        std::uint32_t item = 0;
        for (char s : pick) {
            if (s)
                bars.push_back(item);
            else
                ++item;
        }
        return bars;
    };
    for (auto i = idx.size(); i-- > 0;) {
        const auto v = g.path[idx[i]];
        auto ups = sorted_draw(c.up_degree(v));
        auto downs = sorted_draw(c.down_degree(v));
        Insertion ins{v, {}};
        for (std::size_t j = 0; j < p.count; ++j)
            ins.pairs.push_back({ups[j], downs[j]});
        c.split(v, ups, downs);
        w.insertions[i] = std::move(ins);
    }
    return w;
}

/// Lower bound on the reconstruction success probability:
/// prod_j 1 / ((count + 2) * (d_j + count)) over the departure vertices.
inline double reconstruction_bound(const PathNeighborhood& g, std::size_t count)
{
    double b = 1;
    for (std::size_t j = 0; j + 1 < g.path.size(); ++j)
        b /= static_cast<double>((count + 2) * (g.degrees[j] + count));
    return b;
}

// ---------------------------------------------------------------------------
// Randomized reconstruction

struct ReconstructionTarget
{
    Triangulation reference;               // T
    std::vector<VertexId> path;            // gamma, ids in T
    std::vector<VertexId> path_in_modified; // leftmost copy of each gamma vertex, ids in T'
};

struct Reconstruction
{
    Triangulation triangulation;
    std::vector<VertexId> path;
    Modification modification;
};

/// One attempt: a walk of |gamma| steps from the root of T', choosing an
/// incident edge uniformly; on each arrival, one of count+2 options: contract
/// one of the count+1 runs of `count` horizontal edges containing the current
/// vertex, or do nothing. A run that does not fit on the level fails the
/// attempt. Success requires the walk to follow gamma and the end result to
/// equal the reference.
inline std::optional<Reconstruction> randomized_reconstruction(const StripComplex& modified,
                                                               const ReconstructionTarget& target,
                                                               const ModificationParams& p, Rng& rng)
{
    if (target.path.empty() || target.path.size() != target.path_in_modified.size())
        throw std::invalid_argument("randomized_reconstruction: malformed target");
    auto c = modified;
    VertexId at = c.level(0).front();
    if (target.path_in_modified[0] != at)
        return std::nullopt;
    std::vector<VertexId> walked{at};
    std::vector<Insertion> undo; // stable ids
    for (std::size_t step = 1; step < target.path.size(); ++step) {
        const auto y = c.rotation_neighbor(at, rng.below(c.degree(at)));
        const auto option = rng.below(p.count + 2);
        at = y;
        if (option <= p.count) {
            const auto lvl = c.level_of(y);
            if (lvl == 0 || lvl >= c.levels() || c.level_size(lvl) < p.count + 1)
                return std::nullopt;
            at = c.shift(y, -static_cast<std::ptrdiff_t>(option));
            Insertion ins{at, {}};
            for (std::size_t i = 0; i < p.count; ++i)
                ins.pairs.push_back(c.merge_right(at));
            undo.push_back(std::move(ins));
        }
        if (at != target.path_in_modified[step])
            return std::nullopt;
        walked.push_back(at);
    }
    auto canon = c.canonicalize();
    if (!(canon.forest == target.reference.to_forest()))
        return std::nullopt;
    Reconstruction r{target.reference, {}, {}};
    for (auto v : walked)
        r.path.push_back(canon.id_map[v]);
    if (r.path != target.path)
        return std::nullopt;
    for (auto& ins : undo) {
        ins.v = canon.id_map[ins.v];
        r.modification.insertions.push_back(std::move(ins));
    }
    return r;
}

inline std::optional<Reconstruction> randomized_reconstruction(const Triangulation& modified,
                                                               const ReconstructionTarget& target,
                                                               const ModificationParams& p, Rng& rng)
{
    return randomized_reconstruction(StripComplex::from(modified), target, p, rng);
}

struct FrequencyEstimate
{
    std::size_t attempts = 0;
    std::size_t successes = 0;
    double frequency = 0;
    double stderr_ = 0;
};

/// Success frequency over independent attempts; attempt i draws from rng.split(i).
inline FrequencyEstimate reconstruction_frequency(const Triangulation& modified, const ReconstructionTarget& target,
                                                  const ModificationParams& p, std::size_t attempts, const Rng& rng,
                                                  std::size_t workers = 1)
{
    const std::size_t chunks = std::max<std::size_t>(1, std::min<std::size_t>(attempts, 64));
    std::vector<std::size_t> wins(chunks, 0);
    const auto c = StripComplex::from(modified);
    parallel_for(chunks, workers, [&](std::size_t k) {
        for (std::size_t i = k * attempts / chunks; i < (k + 1) * attempts / chunks; ++i) {
            Rng local = rng.split(i);
            wins[k] += randomized_reconstruction(c, target, p, local).has_value();
        }
    });
    FrequencyEstimate e;
    e.attempts = attempts;
    for (auto w : wins)
        e.successes += w;
    if (attempts > 0) {
        e.frequency = static_cast<double>(e.successes) / static_cast<double>(attempts);
        e.stderr_ = std::sqrt(e.frequency * (1 - e.frequency) / static_cast<double>(attempts));
    }
    return e;
}

// ---------------------------------------------------------------------------
// Overcounting on enumerable classes

namespace detail {

// Calls fn(picks) for every nondecreasing sequence of `count` indices below `side`.
template<class Fn>
void for_each_multiset(std::size_t side, std::size_t count, Fn&& fn)
{
    std::vector<std::uint32_t> picks;
    auto rec = [&](auto&& self, std::uint32_t from) -> void {
        if (picks.size() == count) {
            fn(static_cast<const std::vector<std::uint32_t>&>(picks));
            return;
        }
        for (auto i = from; i < side; ++i) {
            picks.push_back(i);
            self(self, i);
            picks.pop_back();
        }
    };
    rec(rec, 0);
}

// Every plan at the modified path vertices idx[0..i), applied last to first.
template<class Fn>
void for_each_plan(StripComplex& c, const std::vector<VertexId>& vertices, std::size_t i, std::size_t count,
                   Fn&& fn)
{
    if (i == 0) {
        fn(static_cast<const StripComplex&>(c));
        return;
    }
    const auto v = vertices[i - 1];
    for_each_multiset(c.up_degree(v), count, [&](const std::vector<std::uint32_t>& ups) {
        for_each_multiset(c.down_degree(v), count, [&](const std::vector<std::uint32_t>& downs) {
            auto next = c;
            next.split(v, ups, downs);
            for_each_plan(next, vertices, i - 1, count, fn);
        });
    });
}

} // namespace detail

struct OvercountReport
{
    std::size_t triangulations = 0;
    std::size_t paths = 0;        // (T, gamma) pairs
    std::size_t images = 0;       // (encoding, T') classes
    std::size_t triples = 0;      // (T, gamma, w)
    std::size_t max_preimages = 0;
    double worst_count_ratio = 0;  // max over classes of #preimages / prod (count+2)(d_j+count)
    double worst_weight_sum = 0;   // max over classes of sum of prod 1/((count+2)(d_j+count))
    std::size_t encoding_collisions = 0; // distinct paths in one T sharing an encoding
};

/// Exhaustive overcount check: over all T with the given level count and
/// width cap, every self-avoiding locally geodesic path of `path_length`
/// edges and every plan w, groups (T, gamma, w) by (encoding of gamma, w(T)).
inline OvercountReport overcount_check(std::size_t levels, std::size_t width_cap, std::size_t path_length,
                                       const ModificationParams& p)
{
    OvercountReport r;
    struct Class
    {
        std::size_t preimages = 0;
        double weight = 0;
        double bound = 0;
    };
    std::map<std::pair<std::vector<PathVertexCode>, std::vector<std::vector<std::uint32_t>>>, Class> classes;
    for_each_forest(levels, width_cap, [&](const Forest& f) {
        const auto t = Triangulation::from_forest(f);
        ++r.triangulations;
        std::map<std::vector<PathVertexCode>, std::size_t> seen;
        percolation::for_each_salg_path(t, path_length, [&](const std::vector<VertexId>& path) {
            ++r.paths;
            const auto g = path_neighborhood(t, path);
            if (++seen[g.code] > 1)
                ++r.encoding_collisions;
            const double inv = reconstruction_bound(g, p.count);
            std::vector<VertexId> vertices;
            for (auto j : modified_indices(t, g, p))
                vertices.push_back(g.path[j]);
            auto c = StripComplex::from(t);
            detail::for_each_plan(c, vertices, vertices.size(), p.count, [&](const StripComplex& done) {
                ++r.triples;
                auto& cls = classes[{g.code, done.canonicalize().forest.out_degree}];
                ++cls.preimages;
                cls.weight += inv;
                cls.bound = 1 / inv;
            });
        });
    });
    r.images = classes.size();
    for (const auto& [key, cls] : classes) {
        r.max_preimages = std::max(r.max_preimages, cls.preimages);
        r.worst_count_ratio = std::max(r.worst_count_ratio, static_cast<double>(cls.preimages) / cls.bound);
        r.worst_weight_sum = std::max(r.worst_weight_sum, cls.weight);
    }
    return r;
}

// ---------------------------------------------------------------------------
// Self-test helpers

struct RoundtripReport
{
    std::size_t instances = 0;
    std::size_t failures = 0;
};

/// insert then collapse, at every site of every internal vertex of every
/// enumerated T with 1..levels levels.
inline RoundtripReport insert_collapse_check(std::size_t levels, std::size_t width_cap)
{
    RoundtripReport r;
    for (std::size_t n = 1; n <= levels; ++n)
        for_each_forest(n, width_cap, [&](const Forest& f) {
            const auto t = Triangulation::from_forest(f);
            for (VertexId v = 0; v < t.vertex_count(); ++v) {
                const auto lvl = t.level_of(v);
                if (lvl == 0 || lvl == t.levels())
                    continue;
                for (const auto& site : insertion_sites(t, v)) {
                    const auto ins = insert_pairs(t, {v, {site}});
                    const auto& tt = ins.triangulation;
                    const auto back = collapse_horizontal_edge(tt, tt.right_edge(ins.vertex_map[v]));
                    ++r.instances;
                    r.failures += !(back.triangulation.to_forest() == f) || back.inverse.v != v ||
                                  back.inverse.pairs != std::vector<SitePair>{site};
                }
            }
        });
    return r;
}

/// collapse then re-insert, for every collapsible horizontal edge.
inline RoundtripReport collapse_insert_check(std::size_t levels, std::size_t width_cap)
{
    RoundtripReport r;
    for (std::size_t n = 1; n <= levels; ++n)
        for_each_forest(n, width_cap, [&](const Forest& f) {
            const auto t = Triangulation::from_forest(f);
            for (EdgeId e = 0; e < t.edges().size(); ++e) {
                const auto& ed = t.edge(e);
                if (ed.kind != EdgeKind::Horizontal || ed.is_loop() || ed.level == 0 || ed.level == t.levels())
                    continue;
                const auto c = collapse_horizontal_edge(t, e);
                ++r.instances;
                r.failures += !(insert_pairs(c.triangulation, c.inverse).triangulation.to_forest() == f) ||
                              c.triangulation.triangle_count() + 2 != t.triangle_count();
            }
        });
    return r;
}

/// A known (T, gamma, w) with w(T) and the reconstruction target.
struct SurgeryFixture
{
    Triangulation reference;
    PathNeighborhood neighborhood;
    Modification modification;
    Triangulation modified;
    ReconstructionTarget target;
    std::size_t modified_vertices = 0;
};

/// Samples T with levels = path_length + 2 until some self-avoiding locally
/// geodesic path of path_length edges has all degrees <= max_degree and a
/// modified vertex, then draws w.
inline SurgeryFixture make_fixture(Rng& rng, std::size_t path_length, const ModificationParams& p,
                                   std::size_t max_degree, std::size_t max_tries = 100000)
{
    for (std::size_t attempt = 0; attempt < max_tries; ++attempt) {
        const auto t = Triangulation::from_forest(
            gw::flatten(gw::sample_spine_forest(rng, static_cast<std::uint32_t>(path_length + 2))).forest);
        std::optional<PathNeighborhood> found;
        percolation::for_each_salg_path(t, path_length, [&](const std::vector<VertexId>& path) {
            if (found)
                return;
            auto g = path_neighborhood(t, path);
            if (*std::max_element(g.degrees.begin(), g.degrees.end()) <= max_degree &&
                !modified_indices(t, g, p).empty())
                found = std::move(g);
        });
        if (!found)
            continue;
        auto w = random_modification(t, *found, p, rng);
        auto applied = apply_modification(t, *found, w, p);
        ReconstructionTarget target{t, found->path, {}};
        for (auto v : found->path)
            target.path_in_modified.push_back(applied.vertex_map[v]);
        const auto m = modified_indices(t, *found, p).size();
        return {t, std::move(*found), std::move(w), std::move(applied.triangulation), std::move(target), m};
    }
    throw std::runtime_error("make_fixture: no suitable triangulation found");
}

} // namespace lorentz::surgery
