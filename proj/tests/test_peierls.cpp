#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <stdexcept>
#include <vector>

#include "lorentz/enumerate.hpp"
#include "lorentz/gw.hpp"
#include "lorentz/ising.hpp"
#include "lorentz/peierls.hpp"
#include "oracles.hpp"

using namespace lorentz;
using namespace lorentz::peierls;
using lorentz::ising::Boundary;
using lorentz::ising::Spins;

namespace {

Forest chain(std::size_t levels)
{
    Forest f;
    f.out_degree.assign(levels, {1});
    return f;
}

Triangulation random_small(Rng& rng, std::uint32_t levels, std::size_t max_triangles)
{
    for (;;) {
        auto t = Triangulation::from_forest(gw::flatten(gw::sample_spine_forest(rng, levels)).forest);
        if (t.triangle_count() <= max_triangles && t.triangle_count() >= 8)
            return t;
    }
}

} // namespace

TEST(Contours, ChainHasLengthTwoContours)
{
    const auto t = Triangulation::from_forest(chain(2));
    const auto cs = enumerate_contours(t, 10);
    EXPECT_GE(cs.count(2), 1u);
    EXPECT_EQ(cs.count(1), 0u);
    EXPECT_EQ(cs.count(0), 0u);
}

TEST(Contours, StructureOfEachContour)
{
    Rng rng(12);
    for (int i = 0; i < 20; ++i) {
        const auto t = random_small(rng, 4, 60);
        const auto g = dual_graph(t);
        const auto cs = enumerate_contours(t, 10);
        for (const auto& c : cs.contours) {
            ASSERT_GE(c.length(), 2u);
            ASSERT_EQ(c.triangles.size(), c.length());
            std::set<TriangleId> distinct(c.triangles.begin(), c.triangles.end());
            ASSERT_EQ(distinct.size(), c.length()) << "not simple";
            int w = 0;
            for (std::size_t j = 0; j < c.length(); ++j) {
                const auto& ed = t.edge(c.edges[j]);
                const auto a = c.triangles[j], b = c.triangles[(j + 1) % c.length()];
                ASSERT_TRUE((ed.faces[0] == int(a) && ed.faces[1] == int(b)) ||
                            (ed.faces[0] == int(b) && ed.faces[1] == int(a)));
                w += g.crossing(t, a, c.edges[j]);
            }
            ASSERT_EQ(w, 1);
            ASSERT_TRUE(separates(t, c));
        }
    }
}

TEST(Contours, MatchNaiveOracle)
{
    Rng rng(2718);
    for (int i = 0; i < 3; ++i) {
        const auto t = random_small(rng, 3 + i, 30);
        const auto fast = enumerate_contours(t, 12);
        const auto naive = oracle::naive_contour_counts(t, 12);
        EXPECT_EQ(fast.counts, naive) << "instance " << i;
        EXPECT_FALSE(naive.empty());
    }
}

TEST(Contours, ExhaustiveMatchesBoundedOnSmallInstance)
{
    Rng rng(5);
    const auto t = random_small(rng, 3, 24);
    const auto all = enumerate_contours(t, t.triangle_count());
    const auto bounded = enumerate_contours(t, 8);
    for (const auto& [n, k] : bounded.counts)
        EXPECT_EQ(all.count(n), k);
    EXPECT_EQ(all.counts, oracle::naive_contour_counts(t, t.triangle_count()));
}

TEST(Contours, GuardAndWorkers)
{
    Rng rng(6);
    Triangulation big = Triangulation::from_forest(chain(1));
    while (big.triangle_count() <= kMaxExhaustiveTriangles)
        big = Triangulation::from_forest(gw::flatten(gw::sample_spine_forest(rng, 10)).forest);
    EXPECT_THROW(enumerate_contours(big, 15), std::length_error);
    const auto a = enumerate_contours(big, 8, 1);
    const auto b = enumerate_contours(big, 8, 3);
    EXPECT_EQ(a.counts, b.counts);
    ASSERT_EQ(a.contours.size(), b.contours.size());
    for (std::size_t i = 0; i < a.contours.size(); ++i)
        EXPECT_EQ(a.contours[i].edges, b.contours[i].edges);
}

TEST(PeierlsSeries, Arithmetic)
{
    EXPECT_EQ(peierls_series({}, 1.0).total, 0.0);
    EXPECT_FALSE(peierls_series({}, 1.0).small_tail_from.has_value());
    const auto s = peierls_series({{2, 1}}, 1.0);
    EXPECT_NEAR(s.total, std::exp(-4.0), 1e-15);
    ASSERT_EQ(s.rows.size(), 1u);
    EXPECT_EQ(*s.small_tail_from, 2u);
}

TEST(PeierlsSeries, Monotone)
{
    Rng rng(8);
    const auto t = Triangulation::from_forest(gw::flatten(gw::sample_spine_forest(rng, 6)).forest);
    const auto counts = enumerate_contours(t, 12).counts;
    double prev_total = 1e300;
    for (double beta : {0.1, 0.3, 0.6, 1.0, 2.0}) {
        const auto s = peierls_series(counts, beta);
        for (std::size_t i = 1; i < s.rows.size(); ++i) {
            ASSERT_GE(s.rows[i].partial_sum, s.rows[i - 1].partial_sum);
            ASSERT_LE(s.rows[i].tail_sum, s.rows[i - 1].tail_sum);
        }
        EXPECT_LE(s.total, prev_total);
        prev_total = s.total;
    }
    EXPECT_TRUE(peierls_series(counts, 2.0).small_tail_from.has_value());
}

TEST(FlipInside, InvolutionAndEnergyChange)
{
    Rng rng(31);
    for (int i = 0; i < 10; ++i) {
        const auto t = random_small(rng, 4, 50);
        const ising::Model m(t, Boundary::minus());
        for (const auto& c : enumerate_contours(t, 8).contours) {
            ising::SpinState s{ising::random_spins(m.free_count(), rng), Boundary::minus(), 1.0};
            const auto f = flip_inside(t, s, c);
            ASSERT_EQ(flip_inside(t, f, c).spins, s.spins);
            double delta = 0;
            for (auto e : c.edges) {
                const auto& ed = t.edge(e);
                auto spin = [&](VertexId v) { return v < m.free_count() ? s.spins[v] : -1; };
                delta += 2.0 * spin(ed.a) * spin(ed.b);
            }
            ASSERT_DOUBLE_EQ(m.energy(f.spins) - m.energy(s.spins), delta);
        }
    }
}

TEST(FlipInside, RejectsNonSeparatingCut)
{
    const auto t = Triangulation::from_forest(chain(2));
    Contour bogus;
    bogus.edges = {t.horizontal(0, 0)};
    ising::SpinState s{Spins(2, 1), Boundary::plus(), 1.0};
    EXPECT_THROW(flip_inside(t, s, bogus), std::invalid_argument);
}

TEST(FlipInside, GibbsRatioForPlusIsland)
{
    for (const auto& wt : enumerate_triangulations(2, 3, std::log(2.0))) {
        const auto& t = wt.triangulation;
        for (double beta : {0.3, 1.0}) {
            const auto g = ising::gibbs_exact(t, beta, Boundary::minus());
            for (const auto& c : enumerate_contours(t, 10).contours) {
                const auto in = inside(t, c);
                Spins s(g.spins());
                for (VertexId v = 0; v < s.size(); ++v)
                    s[v] = in[v] ? 1 : -1;
                const auto flipped = flip_inside(t, {s, Boundary::minus(), beta}, c);
                const double ratio = g.probability(s) / g.probability(flipped.spins);
                ASSERT_NEAR(ratio, std::exp(-2.0 * beta * c.length()), 1e-12);
            }
        }
    }
}

TEST(Survivors, Basics)
{
    EXPECT_EQ(survivors_statistic(chain(6), 3, 2), 1u);
    EXPECT_EQ(survivors_statistic(chain(6), 3, 0), 1u);
    Forest f;
    f.out_degree = {{3}, {1, 0, 2}, {1, 1, 1}};
    EXPECT_EQ(survivors_statistic(f, 1, 0), 3u);
    EXPECT_EQ(survivors_between(f, 1, 2), 2u);
    EXPECT_EQ(survivors_statistic(f, 1, 1), 1u);
    EXPECT_THROW(survivors_statistic(f, 1, 2), std::invalid_argument);
    EXPECT_THROW(survivors_statistic(f, 2, 2), std::invalid_argument);
}

TEST(Survivors, NZeroIsLevelSize)
{
    Rng rng(40);
    for (int i = 0; i < 100; ++i) {
        const auto f = gw::flatten(gw::sample_spine_forest(rng, 8)).forest;
        const auto k = f.level_sizes();
        for (std::size_t R = 0; R <= 8; ++R)
            ASSERT_EQ(survivors_statistic(f, R, 0), k[R]);
    }
}

TEST(Survivors, MeanAboveSurvivalProbability)
{
    Rng rng(41);
    const std::size_t R = 6;
    for (std::size_t n : {1u, 2u, 3u}) {
        const int samples = 20000;
        double sum = 0, sum2 = 0;
        for (int i = 0; i < samples; ++i) {
            const auto f = gw::flatten(gw::sample_spine_forest(rng, R + n)).forest;
            const double x = double(survivors_statistic(f, R, n)) / f.level_sizes()[R - n];
            sum += x;
            sum2 += x * x;
        }
        const double mean = sum / samples;
        const double se = std::sqrt((sum2 / samples - mean * mean) / samples);
        EXPECT_GE(mean, (1.0 / (2 * n + 1)) * (1 - 3 * se)) << "n=" << n;
    }
}

TEST(Survivors, LowerBoundContourLength)
{
    // A winding contour spanning strips [a, b] must cross every lineage from
    // level a to level b + 1; in particular S_{R,n} > n rules out contours of
    // length <= n through the spine edge of strip R.
    Rng rng(42);
    int spine_hits = 0;
    for (int i = 0; i < 40; ++i) {
        const auto flat = gw::flatten(gw::sample_spine_forest(rng, 8));
        const auto t = Triangulation::from_forest(flat.forest);
        for (const auto& c : enumerate_contours(t, 10).contours) {
            const auto [a, b] = strip_span(t, c);
            ASSERT_GE(c.length(), survivors_between(flat.forest, a, b + 1));
            for (std::uint32_t R = 0; R < 8; ++R) {
                const auto v = t.vertex(R + 1, flat.spine_position[R + 1]);
                const auto spine_edge = t.down_edges(v).back();
                ASSERT_EQ(t.other_end(spine_edge, v), t.parent(v));
                if (std::find(c.edges.begin(), c.edges.end(), spine_edge) == c.edges.end())
                    continue;
                ++spine_hits;
                for (std::size_t n = 2; n <= R && R + n <= 8; ++n)
                    if (survivors_statistic(flat.forest, R, n) > n) {
                        ASSERT_GT(c.length(), n);
                    }
            }
        }
    }
    EXPECT_GT(spine_hits, 0);
}
