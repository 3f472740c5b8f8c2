#include <gtest/gtest.h>

#include <cmath>
#include <map>
#include <stdexcept>
#include <vector>

#include "lorentz/gw.hpp"
#include "series_oracle.hpp"

namespace gw = lorentz::gw;
using lorentz::Rng;

TEST(OffspringPmf, Values)
{
    EXPECT_DOUBLE_EQ(gw::offspring_pmf(0), 0.5);
    EXPECT_DOUBLE_EQ(gw::offspring_pmf(1), 0.25);
    double s = 0, mean = 0;
    for (int k = 0; k <= 60; ++k) {
        s += gw::offspring_pmf(k);
        mean += k * gw::offspring_pmf(k);
    }
    EXPECT_NEAR(s, 1.0, 1e-12);
    EXPECT_NEAR(mean, 1.0, 1e-12);
}

TEST(PsiN, ClosedFormValues)
{
    EXPECT_DOUBLE_EQ(gw::psi_n(3, 0.0), 0.75);
    EXPECT_DOUBLE_EQ(gw::psi_n(5, 1.0), 1.0);
    EXPECT_NEAR(gw::psi_n(1, 0.5), 2.0 / 3.0, 1e-15);
    EXPECT_THROW(gw::psi_n(2, -0.1), std::domain_error);
    EXPECT_THROW(gw::psi_n(2, 1.5), std::domain_error);
    EXPECT_THROW(gw::psi_n(0, 0.5), std::domain_error);
}

TEST(PsiN, MatchesBruteForceSeries)
{
    // psi_1(1/2) by summing the offspring law directly.
    double direct = 0;
    for (int k = 0; k < 200; ++k)
        direct += gw::offspring_pmf(k) * std::pow(0.5, k);
    EXPECT_NEAR(direct, 2.0 / 3.0, 1e-14);
    EXPECT_NEAR(gw::psi_n(1, 0.5), direct, 1e-14);

    // psi_2 by composing two generations of the truncated series.
    const auto s2 = oracle::generation_series(2, 60);
    for (double s : {0.0, 0.25, 0.5, 0.9})
        EXPECT_NEAR(gw::psi_n(2, s), oracle::evaluate(s2, s), 1e-12) << "s=" << s;
}

TEST(PsiN, SemigroupProperty)
{
    for (int n = 1; n <= 10; ++n)
        for (int m = 1; m <= 10; ++m)
            for (double s = 0.0; s <= 1.0; s += 0.05)
                ASSERT_NEAR(gw::psi_n(n + m, s), gw::psi_n(n, gw::psi_n(m, s)), 1e-12);
}

TEST(LevelSizePmf, OracleValues)
{
    // phi_1(s) = s / (2 - s)^2 = sum_k k s^k / 2^(k+1).
    EXPECT_NEAR(gw::level_size_pmf(1, 1), 0.25, 1e-15);
    EXPECT_NEAR(gw::level_size_pmf(1, 2), 0.25, 1e-15);
    double s = 0;
    for (int k = 1; k <= 400; ++k)
        s += gw::level_size_pmf(5, k);
    EXPECT_NEAR(s, 1.0, 1e-10);
    EXPECT_THROW(gw::level_size_pmf(5, 0), std::domain_error);
}

TEST(LevelSizePmf, EqualsKTimesSeriesCoefficient)
{
    for (int n = 1; n <= 10; ++n) {
        const auto series = oracle::generation_series(n, 51);
        for (int k = 1; k <= 50; ++k)
            ASSERT_NEAR(gw::level_size_pmf(n, k), k * series[k], 1e-12) << "n=" << n << " k=" << k;
    }
}

TEST(LevelSizePmf, PrintedExponentDoesNotNormalize)
{
    double printed = 0;
    for (int k = 1; k <= 2000; ++k)
        printed += k * std::pow(5.0 / 6.0, k - 1) / 6.0;
    EXPECT_NEAR(printed, 6.0, 1e-6); // off by the factor n+1
}

TEST(SizeBiasedPmf, Values)
{
    EXPECT_DOUBLE_EQ(gw::size_biased_pmf(1), 0.25);
    EXPECT_DOUBLE_EQ(gw::size_biased_pmf(2), 0.25);
    double s = 0;
    for (int k = 1; k <= 60; ++k) {
        s += gw::size_biased_pmf(k);
        EXPECT_DOUBLE_EQ(gw::size_biased_pmf(k), k * gw::offspring_pmf(k));
    }
    EXPECT_NEAR(s, 1.0, 1e-12);
    EXPECT_THROW(gw::size_biased_pmf(0), std::domain_error);
}

TEST(SizeBiasedPmf, SamplerMatchesLaw)
{
    Rng rng(11);
    std::map<int, int> hist;
    const int n = 400000;
    for (int i = 0; i < n; ++i)
        ++hist[gw::sample_size_biased(rng)];
    EXPECT_EQ(hist.count(0), 0u);
    for (int k = 1; k <= 8; ++k)
        EXPECT_NEAR(hist[k] / double(n), gw::size_biased_pmf(k), 0.004) << "k=" << k;
}

TEST(GwTree, HeightCapZeroIsSingleRoot)
{
    Rng rng(1);
    for (int i = 0; i < 100; ++i) {
        const auto t = gw::sample_gw_tree(rng, 0);
        ASSERT_EQ(t.size(), 1u);
        ASSERT_EQ(t.nodes[0].out_degree, 0u);
    }
}

TEST(GwTree, ExtinctionByHeightThree)
{
    Rng rng(2024);
    const int n = 100000;
    int extinct = 0;
    for (int i = 0; i < n; ++i) {
        const auto t = gw::sample_gw_tree(rng, 3);
        lorentz::gw::validate(t);
        extinct += t.height() < 3;
    }
    EXPECT_NEAR(extinct / double(n), gw::psi_n(3, 0.0), 0.005);
}

TEST(GwTree, MeanFirstGenerationIsOne)
{
    Rng rng(5);
    const int n = 1000000;
    double sum = 0;
    for (int i = 0; i < n; ++i)
        sum += gw::sample_gw_tree(rng, 1).nodes[0].out_degree;
    EXPECT_NEAR(sum / n, 1.0, 0.01);
}

TEST(GwTree, ChildrenAndValidation)
{
    gw::FiniteTree t{{{2, 0}, {1, 1}, {0, 2}, {0, 1}}};
    EXPECT_NO_THROW(gw::validate(t));
    const auto kids = t.children();
    EXPECT_EQ(kids[0], (std::vector<std::uint32_t>{1, 3}));
    EXPECT_EQ(kids[1], (std::vector<std::uint32_t>{2}));

    gw::FiniteTree two_roots{{{0, 0}, {0, 0}}};
    EXPECT_THROW(gw::validate(two_roots), std::invalid_argument);
    gw::FiniteTree bad_height{{{1, 0}, {0, 2}}};
    EXPECT_THROW(gw::validate(bad_height), std::invalid_argument);
}

TEST(SpineForest, ForcedSingleChild)
{
    gw::SpineForest sf;
    sf.levels = 1;
    sf.vertebrae.resize(1);
    const auto flat = gw::flatten(sf);
    EXPECT_EQ(flat.forest.level_sizes(), (std::vector<std::size_t>{1, 1}));
    EXPECT_EQ(flat.spine_position[1], 0u);
}

TEST(SpineForest, FlattenOrdersLeftSpineRight)
{
    gw::SpineForest sf;
    sf.levels = 2;
    sf.vertebrae.resize(2);
    sf.vertebrae[0].left.push_back({{{2, 0}, {0, 1}, {0, 1}}}); // root at level 1 with 2 children
    sf.vertebrae[0].right.push_back({{{0, 0}}});
    sf.vertebrae[1].right.push_back({{{0, 0}}});
    const auto flat = gw::flatten(sf);
    EXPECT_EQ(flat.forest.out_degree[0], (std::vector<std::uint32_t>{3}));
    EXPECT_EQ(flat.forest.out_degree[1], (std::vector<std::uint32_t>{2, 2, 0}));
    EXPECT_EQ(flat.spine_position, (std::vector<std::size_t>{0, 1, 2}));
}

TEST(SpineForest, StructuralInvariants)
{
    Rng rng(99);
    for (int trial = 0; trial < 2000; ++trial) {
        const std::uint32_t n = 1 + trial % 12;
        const auto sf = gw::sample_spine_forest(rng, n);
        ASSERT_EQ(sf.vertebrae.size(), n);
        for (std::uint32_t i = 0; i < n; ++i) {
            for (const auto* side : {&sf.vertebrae[i].left, &sf.vertebrae[i].right})
                for (const auto& t : *side) {
                    gw::validate(t);
                    ASSERT_LE(t.height() + i + 1, n);
                }
        }
        const auto flat = gw::flatten(sf);
        ASSERT_NO_THROW(lorentz::validate(flat.forest));
        const auto k = flat.forest.level_sizes();
        ASSERT_EQ(k.size(), n + 1);
        ASSERT_EQ(k[0], 1u);
        for (std::uint32_t i = 0; i <= n; ++i)
            ASSERT_LT(flat.spine_position[i], k[i]);
        // Spine parent of v_{i+1} is v_i: count children of positions before v_i.
        for (std::uint32_t i = 0; i < n; ++i) {
            std::size_t before = 0;
            for (std::size_t p = 0; p < flat.spine_position[i]; ++p)
                before += flat.forest.out_degree[i][p];
            ASSERT_GE(flat.spine_position[i + 1], before);
            ASSERT_LT(flat.spine_position[i + 1], before + flat.forest.out_degree[i][flat.spine_position[i]]);
        }
    }
}

TEST(SpineForest, LevelSizesFollowLaw)
{
    Rng rng(7);
    const int samples = 100000;
    for (std::uint32_t n : {1u, 3u, 5u}) {
        std::map<std::size_t, double> hist;
        for (int i = 0; i < samples; ++i) {
            const auto flat = gw::flatten(gw::sample_spine_forest(rng, n));
            hist[flat.forest.level_sizes()[n]] += 1.0 / samples;
        }
        double tv = 0, covered = 0;
        for (const auto& [k, p] : hist) {
            tv += std::abs(p - gw::level_size_pmf(n, k));
            covered += gw::level_size_pmf(n, k);
        }
        tv = 0.5 * (tv + (1.0 - covered));
        EXPECT_LT(tv, 0.015) << "n=" << n;
    }
}

TEST(LevelSizeFit, RowsAndDistance)
{
    Rng rng(8);
    const auto fit = gw::level_size_fit(5, 100000, rng);
    ASSERT_FALSE(fit.rows.empty());
    std::size_t total = 0;
    for (const auto& r : fit.rows) {
        total += r.observed;
        EXPECT_DOUBLE_EQ(r.expected, gw::level_size_pmf(5, r.k));
    }
    EXPECT_EQ(total, 100000u);
    EXPECT_LT(fit.tv, 0.015);
    EXPECT_THROW(gw::level_size_fit(0, 10, rng), std::invalid_argument);
}
