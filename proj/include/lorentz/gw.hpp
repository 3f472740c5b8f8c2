#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <utility>
#include <vector>

#include "forest.hpp"
#include "rng.hpp"

// Critical Geom(1/2) branching process, its generating functions, and the
// tree conditioned to survive (size-biased spine construction).

namespace lorentz::gw {

/// p_k = (1/2)^(k+1).
inline double offspring_pmf(std::uint64_t k) noexcept
{
    return std::ldexp(1.0, -static_cast<int>(std::min<std::uint64_t>(k, 2000) + 1));
}

/// Offspring generating function psi(s) = sum_k (1/2)^(k+1) s^k = 1/(2 - s).
inline double psi(double s)
{
    if (!(s >= 0.0 && s <= 1.0))
        throw std::domain_error("psi: s must lie in [0, 1]");
    return 1.0 / (2.0 - s);
}

/// Generating function of the generation-n size started from one particle:
/// psi_n(s) = (n - (n-1)s) / (n + 1 - n s).
inline double psi_n(std::uint64_t n, double s)
{
    if (n < 1)
        throw std::domain_error("psi_n: n must be >= 1");
    if (!(s >= 0.0 && s <= 1.0))
        throw std::domain_error("psi_n: s must lie in [0, 1]");
    const auto nn = static_cast<double>(n);
    return (nn - (nn - 1.0) * s) / (nn + 1.0 - nn * s);
}

/// Law of k_n under the critical measure: P(k_n = k) = k n^(k-1) / (n+1)^(k+1),
/// the coefficient of s^k in s / (1 + n - n s)^2.
///
/// The printed closed form with (n+1)^k in the denominator does not sum to
/// one; the exponent k+1 is the one that matches the generating function.
inline double level_size_pmf(std::uint64_t n, std::uint64_t k)
{
    if (n < 1)
        throw std::domain_error("level_size_pmf: n must be >= 1");
    if (k < 1)
        throw std::domain_error("level_size_pmf: the conditioned process never dies (k >= 1)");
    const auto nn = static_cast<double>(n);
    const auto kk = static_cast<double>(k);
    return std::exp(std::log(kk) + (kk - 1.0) * std::log(nn) - (kk + 1.0) * std::log(nn + 1.0));
}

/// Size-biased offspring law k p_k, the spine's child count.
inline double size_biased_pmf(std::uint64_t k)
{
    if (k < 1)
        throw std::domain_error("size_biased_pmf: k must be >= 1");
    return static_cast<double>(k) * offspring_pmf(k);
}

/// Draw from size_biased_pmf: 1 + G1 + G2 with G1, G2 i.i.d. Geom(1/2) on {0,1,...}
/// has P(k) = k (1/2)^(k+1).
inline std::uint32_t sample_size_biased(Rng& rng) noexcept
{
    return 1 + rng.geometric_half() + rng.geometric_half();
}

/// A finite plane tree in depth-first preorder. Heights are relative to the
/// tree's own root (root at 0).
struct FiniteTree
{
    struct Node
    {
        std::uint32_t out_degree;
        std::uint32_t height;
    };
    std::vector<Node> nodes;

    std::size_t size() const noexcept { return nodes.size(); }

    std::uint32_t height() const noexcept
    {
        std::uint32_t h = 0;
        for (const auto& n : nodes)
            h = std::max(h, n.height);
        return h;
    }

    /// children[i] lists the preorder indices of node i's children, left to right.
    std::vector<std::vector<std::uint32_t>> children() const
    {
        std::vector<std::vector<std::uint32_t>> out(nodes.size());
        std::vector<std::pair<std::uint32_t, std::uint32_t>> stack; // (node, remaining)
        for (std::uint32_t i = 0; i < nodes.size(); ++i) {
            while (!stack.empty() && stack.back().second == 0)
                stack.pop_back();
            if (!stack.empty()) {
                out[stack.back().first].push_back(i);
                --stack.back().second;
            }
            if (nodes[i].out_degree > 0)
                stack.emplace_back(i, nodes[i].out_degree);
        }
        return out;
    }
};

/// Throws std::invalid_argument unless the preorder encodes one connected tree
/// with consistent heights.
inline void validate(const FiniteTree& t)
{
    if (t.nodes.empty() || t.nodes.front().height != 0)
        throw std::invalid_argument("finite tree: root must exist at height 0");
    std::size_t open = 1;
    for (std::size_t i = 0; i < t.nodes.size(); ++i) {
        if (open == 0)
            throw std::invalid_argument("finite tree: more than one root");
        --open;
        open += t.nodes[i].out_degree;
    }
    if (open != 0)
        throw std::invalid_argument("finite tree: missing children");
    const auto kids = t.children();
    for (std::size_t i = 0; i < t.nodes.size(); ++i)
        for (auto c : kids[i])
            if (t.nodes[c].height != t.nodes[i].height + 1)
                throw std::invalid_argument("finite tree: child height must be parent height + 1");
}

/// Unconditioned Geom(1/2) Galton-Watson tree, cut at height_cap: nodes at
/// height_cap get out-degree 0.
inline FiniteTree sample_gw_tree(Rng& rng, std::uint32_t height_cap)
{
    FiniteTree t;
    auto draw = [&](std::uint32_t h) -> std::uint32_t {
        return h >= height_cap ? 0 : rng.geometric_half();
    };
    struct Frame
    {
        std::uint32_t height;
        std::uint32_t remaining;
    };
    std::vector<Frame> stack;
    const auto root_deg = draw(0);
    t.nodes.push_back({root_deg, 0});
    if (root_deg > 0)
        stack.push_back({0, root_deg});
    while (!stack.empty()) {
        if (stack.back().remaining == 0) {
            stack.pop_back();
            continue;
        }
        --stack.back().remaining;
        const auto h = stack.back().height + 1;
        const auto d = draw(h);
        t.nodes.push_back({d, h});
        if (d > 0)
            stack.push_back({h, d});
    }
    return t;
}

/// Tree conditioned on non-extinction, cut at level N: one spine vertex per
/// level with finite trees hanging to its left and right.
struct SpineForest
{
    struct Vertebra
    {
        std::vector<FiniteTree> left;  // roots at level i+1, left of the spine child
        std::vector<FiniteTree> right; // roots at level i+1, right of the spine child
    };

    std::uint32_t levels = 0;       // N
    std::vector<Vertebra> vertebrae; // spine vertices v_0..v_{N-1}; v_N has no recorded children

    /// Spine vertex of level i's child count.
    std::size_t spine_out_degree(std::size_t i) const
    {
        return 1 + vertebrae[i].left.size() + vertebrae[i].right.size();
    }
};

/// Level-order flattening of a spine forest.
struct FlatForest
{
    Forest forest;
    std::vector<std::size_t> spine_position; // position of v_n in level n, n = 0..N
};

inline FlatForest flatten(const SpineForest& sf)
{
    // Level entries are the spine vertex (tree == -1) or a node of a hanging tree.
    struct Item
    {
        std::int64_t tree;
        std::uint32_t node;
    };
    std::vector<std::vector<std::vector<std::uint32_t>>> kids;
    std::vector<std::vector<std::int64_t>> left_ids(sf.levels), right_ids(sf.levels);
    for (std::uint32_t n = 0; n < sf.levels; ++n) {
        for (const auto& t : sf.vertebrae[n].left) {
            left_ids[n].push_back(static_cast<std::int64_t>(kids.size()));
            kids.push_back(t.children());
        }
        for (const auto& t : sf.vertebrae[n].right) {
            right_ids[n].push_back(static_cast<std::int64_t>(kids.size()));
            kids.push_back(t.children());
        }
    }

    FlatForest out;
    out.forest.out_degree.resize(sf.levels);
    out.spine_position.assign(sf.levels + 1, 0);

    std::vector<Item> level{{-1, 0}};
    for (std::uint32_t n = 0; n < sf.levels; ++n) {
        std::vector<Item> next;
        auto& degrees = out.forest.out_degree[n];
        degrees.reserve(level.size());
        for (const auto& item : level) {
            const auto before = next.size();
            if (item.tree < 0) {
                for (auto id : left_ids[n])
                    next.push_back({id, 0});
                out.spine_position[n + 1] = next.size();
                next.push_back({-1, 0});
                for (auto id : right_ids[n])
                    next.push_back({id, 0});
            } else {
                // Hanging trees were cut at absolute height N when sampled.
                for (auto c : kids[static_cast<std::size_t>(item.tree)][item.node])
                    next.push_back({item.tree, c});
            }
            degrees.push_back(static_cast<std::uint32_t>(next.size() - before));
        }
        level = std::move(next);
    }
    return out;
}

/// Kesten's construction cut at level N >= 1: spine child count from
/// size_biased_pmf, spine child uniform among them, every other child roots an
/// independent unconditioned tree cut at absolute height N.
inline SpineForest sample_spine_forest(Rng& rng, std::uint32_t levels)
{
    if (levels < 1)
        throw std::invalid_argument("sample_spine_forest: need at least one level");
    SpineForest sf;
    sf.levels = levels;
    sf.vertebrae.resize(levels);
    for (std::uint32_t i = 0; i < levels; ++i) {
        const auto k = sample_size_biased(rng);
        const auto spine_child = static_cast<std::uint32_t>(rng.below(k));
        const std::uint32_t cap = levels - (i + 1);
        auto& v = sf.vertebrae[i];
        for (std::uint32_t j = 0; j < k; ++j) {
            if (j == spine_child)
                continue;
            (j < spine_child ? v.left : v.right).push_back(sample_gw_tree(rng, cap));
        }
    }
    return sf;
}

struct LevelSizeRow
{
    std::size_t k;
    std::size_t observed;
    double empirical;
    double expected;
};

/// Empirical law of k_n over spine samples against level_size_pmf. The TV
/// distance includes the expected mass beyond the largest observed k.
struct LevelSizeFit
{
    std::uint32_t level = 0;
    std::size_t samples = 0;
    std::vector<LevelSizeRow> rows; // k = 1 .. largest observed
    double tv = 0;
};

inline LevelSizeFit level_size_fit(std::uint32_t n, std::size_t samples, Rng& rng)
{
    if (n < 1 || samples == 0)
        throw std::invalid_argument("level_size_fit: need n >= 1 and samples >= 1");
    std::vector<std::size_t> hist;
    for (std::size_t i = 0; i < samples; ++i) {
        const auto k = flatten(sample_spine_forest(rng, n)).forest.level_sizes()[n];
        if (k >= hist.size())
            hist.resize(k + 1, 0);
        ++hist[k];
    }
    LevelSizeFit fit;
    fit.level = n;
    fit.samples = samples;
    double covered = 0, diff = 0;
    for (std::size_t k = 1; k < hist.size(); ++k) {
        const double emp = static_cast<double>(hist[k]) / static_cast<double>(samples);
        const double exp = level_size_pmf(n, k);
        fit.rows.push_back({k, hist[k], emp, exp});
        covered += exp;
        diff += std::abs(emp - exp);
    }
    fit.tv = 0.5 * (diff + std::max(0.0, 1.0 - covered));
    return fit;
}

} // namespace lorentz::gw
