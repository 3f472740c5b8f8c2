#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <stdexcept>
#include <vector>

#include "forest.hpp"
#include "triangulation.hpp"

namespace lorentz {

inline constexpr std::size_t kMaxEnumLevels = 3;
inline constexpr std::size_t kMaxEnumWidth = 5;

/// Calls fn(forest) for every rooted Lorentzian triangulation of C_N with
/// 1 <= k_n <= width_cap for n = 1..N, in lexicographic order of the level
/// out-degree lists.
inline void for_each_forest(std::size_t levels, std::size_t width_cap,
                            const std::function<void(const Forest&)>& fn)
{
    if (levels > kMaxEnumLevels || width_cap > kMaxEnumWidth)
        throw std::invalid_argument("enumerate: N <= 3 and width_cap <= 5 required");
    if (width_cap == 0)
        return;

    Forest f;
    f.out_degree.resize(levels);
    if (levels == 0) {
        fn(f);
        return;
    }

    // compose(n, i, parents, left): choose out-degrees of level n from position i on,
    // with `left` children still to hand out.
    std::function<void(std::size_t, std::size_t)> level;
    std::function<void(std::size_t, std::size_t, std::size_t, std::size_t)> compose;

    level = [&](std::size_t n, std::size_t parents) {
        if (n == levels) {
            fn(f);
            return;
        }
        f.out_degree[n].assign(parents, 0);
        for (std::size_t next = 1; next <= width_cap; ++next)
            compose(n, 0, parents, next);
    };
    compose = [&](std::size_t n, std::size_t i, std::size_t parents, std::size_t left) {
        if (i + 1 == parents) {
            f.out_degree[n][i] = static_cast<std::uint32_t>(left);
            const std::size_t total = [&] {
                std::size_t s = 0;
                for (auto d : f.out_degree[n])
                    s += d;
                return s;
            }();
            level(n + 1, total);
            return;
        }
        for (std::size_t d = 0; d <= left; ++d) {
            f.out_degree[n][i] = static_cast<std::uint32_t>(d);
            compose(n, i + 1, parents, left - d);
        }
    };
    level(0, 1);
}

struct WeightedTriangulation
{
    Forest forest;
    Triangulation triangulation;
    double weight; // exp(-mu F(T)), unnormalized
};

/// All of LT_N with level sizes capped, each weighted by exp(-mu F(T)).
/// mu >= ln 2 (below it the infinite-volume limit does not exist).
inline std::vector<WeightedTriangulation> enumerate_triangulations(std::size_t levels, std::size_t width_cap,
                                                                   double mu)
{
    if (!(mu >= std::log(2.0) - 1e-15))
        throw std::invalid_argument("enumerate_triangulations: mu must be >= ln 2");
    std::vector<WeightedTriangulation> out;
    for_each_forest(levels, width_cap, [&](const Forest& f) {
        auto t = Triangulation::from_forest(f);
        const double w = std::exp(-mu * static_cast<double>(t.triangle_count()));
        out.push_back({f, std::move(t), w});
    });
    return out;
}

/// Weights normalized to sum to one.
inline std::vector<double> normalized_weights(const std::vector<WeightedTriangulation>& ts)
{
    double z = 0;
    for (const auto& t : ts)
        z += t.weight;
    std::vector<double> p;
    p.reserve(ts.size());
    for (const auto& t : ts)
        p.push_back(t.weight / z);
    return p;
}

} // namespace lorentz
