#pragma once

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <stdexcept>
#include <vector>

#include "parallel.hpp"
#include "rng.hpp"
#include "triangulation.hpp"

// Ferromagnetic Ising model on a finite Lorentzian triangulation. Spins live on
// levels 0..L-1; the top level L carries the boundary condition. Vertex ids are
// ordered by level, so the free spins are exactly ids [0, free_count).

namespace lorentz::ising {

using Spins = std::vector<std::int8_t>;

inline constexpr std::size_t kMaxExactSpins = 22;

enum class BoundaryKind : std::uint8_t
{
    Plus,
    Minus,
    Explicit
};

struct Boundary
{
    BoundaryKind kind = BoundaryKind::Plus;
    Spins spins; // only for Explicit, one per top-level vertex

    static Boundary plus() { return {BoundaryKind::Plus, {}}; }
    static Boundary minus() { return {BoundaryKind::Minus, {}}; }
    static Boundary given(Spins s) { return {BoundaryKind::Explicit, std::move(s)}; }

    int spin(std::size_t position) const
    {
        switch (kind) {
        case BoundaryKind::Plus:
            return 1;
        case BoundaryKind::Minus:
            return -1;
        default:
            return spins.at(position);
        }
    }

    Boundary flipped() const
    {
        switch (kind) {
        case BoundaryKind::Plus:
            return minus();
        case BoundaryKind::Minus:
            return plus();
        default: {
            Spins s = spins;
            for (auto& x : s)
                x = static_cast<std::int8_t>(-x);
            return given(std::move(s));
        }
        }
    }
};

struct SpinState
{
    Spins spins; // one per vertex of levels 0..L-1
    Boundary boundary;
    double beta = 0;
};

/// P(sigma_v = +1 | local field S_v) for the heat-bath update.
inline double conditional_spin_prob(int field, double beta)
{
    return 1.0 / (1.0 + std::exp(-2.0 * beta * field));
}

/// Precomputed couplings of a triangulation with a fixed boundary condition.
class Model
{
public:
    Model(const Triangulation& t, const Boundary& bc)
        : t_(&t)
    {
        if (t.levels() < 1)
            throw std::invalid_argument("ising: triangulation needs at least one strip");
        const auto top = t.levels();
        n_ = t.vertex_count() - t.level_size(top);
        if (bc.kind == BoundaryKind::Explicit) {
            if (bc.spins.size() != t.level_size(top))
                throw std::invalid_argument("ising: boundary vector length must equal the top level size");
            for (auto s : bc.spins)
                if (s != 1 && s != -1)
                    throw std::invalid_argument("ising: boundary spins must be +1 or -1");
        }

        start_.assign(n_ + 1, 0);
        external_.assign(n_, 0);
        std::vector<std::vector<VertexId>> adj(n_);
        for (const auto& e : t.edges()) {
            const bool fa = e.a < n_, fb = e.b < n_;
            if (!fa && !fb)
                continue;
            ++edges_;
            if (e.a == e.b) {
                ++loops_;
            } else if (fa && fb) {
                adj[e.a].push_back(e.b);
                adj[e.b].push_back(e.a);
            } else {
                const VertexId in = fa ? e.a : e.b;
                const VertexId out = fa ? e.b : e.a;
                external_[in] += bc.spin(t.position_of(out));
            }
        }
        for (std::size_t v = 0; v < n_; ++v) {
            start_[v + 1] = start_[v] + adj[v].size();
            nbr_.insert(nbr_.end(), adj[v].begin(), adj[v].end());
        }
    }

    const Triangulation& triangulation() const noexcept { return *t_; }
    std::size_t free_count() const noexcept { return n_; }
    /// Edges with at least one free endpoint, self-loops included.
    std::size_t coupled_edges() const noexcept { return edges_; }

    /// S_v: sum of neighbor spins over non-loop edge ends, with multiplicity.
    int local_field(const Spins& s, VertexId v) const
    {
        int h = external_[v];
        for (auto i = start_[v]; i < start_[v + 1]; ++i)
            h += s[nbr_[i]];
        return h;
    }

    double energy(const Spins& s) const
    {
        check(s);
        long long twice_internal = 0, external = 0;
        for (std::size_t v = 0; v < n_; ++v) {
            for (auto i = start_[v]; i < start_[v + 1]; ++i)
                twice_internal += s[v] * s[nbr_[i]];
            external += s[v] * external_[v];
        }
        return -static_cast<double>(twice_internal / 2 + external + static_cast<long long>(loops_));
    }

    void check(const Spins& s) const
    {
        if (s.size() != n_)
            throw std::invalid_argument("ising: spin vector does not cover the free vertices");
        for (auto x : s)
            if (x != 1 && x != -1)
                throw std::invalid_argument("ising: spins must be +1 or -1");
    }

private:
    const Triangulation* t_;
    std::size_t n_ = 0;
    std::size_t edges_ = 0;
    std::size_t loops_ = 0;
    std::vector<std::size_t> start_;
    std::vector<VertexId> nbr_;
    std::vector<int> external_; // boundary contribution to S_v
};

inline double energy(const Triangulation& t, const SpinState& state)
{
    return Model(t, state.boundary).energy(state.spins);
}

/// Exact Gibbs distribution. Configuration index bit v set means sigma_v = +1.
class ExactGibbs
{
public:
    ExactGibbs(std::size_t n, std::vector<double> p, double log_z)
        : n_(n)
        , p_(std::move(p))
        , log_z_(log_z)
    {
    }

    std::size_t spins() const noexcept { return n_; }
    std::size_t size() const noexcept { return p_.size(); }
    double log_partition() const noexcept { return log_z_; }
    double probability(std::uint64_t config) const { return p_.at(config); }
    double probability(const Spins& s) const { return p_.at(index_of(s)); }
    const std::vector<double>& probabilities() const noexcept { return p_; }

    double marginal_plus(VertexId v) const
    {
        if (v >= n_)
            throw std::out_of_range("ExactGibbs: not a free vertex");
        double m = 0;
        for (std::uint64_t c = 0; c < p_.size(); ++c)
            if (c >> v & 1)
                m += p_[c];
        return m;
    }

    double event_probability(const std::function<bool(const Spins&)>& event) const
    {
        double m = 0;
        for (std::uint64_t c = 0; c < p_.size(); ++c)
            if (event(spins_of(c)))
                m += p_[c];
        return m;
    }

    Spins spins_of(std::uint64_t config) const
    {
        Spins s(n_);
        for (std::size_t v = 0; v < n_; ++v)
            s[v] = (config >> v & 1) ? 1 : -1;
        return s;
    }

    std::uint64_t index_of(const Spins& s) const
    {
        if (s.size() != n_)
            throw std::invalid_argument("ExactGibbs: wrong spin count");
        std::uint64_t c = 0;
        for (std::size_t v = 0; v < n_; ++v)
            if (s[v] > 0)
                c |= std::uint64_t{1} << v;
        return c;
    }

private:
    std::size_t n_;
    std::vector<double> p_;
    double log_z_;
};

/// Exhaustive Gibbs measure over all 2^n free configurations (n <= 22), walked
/// in Gray-code order so each step costs one local field.
inline ExactGibbs gibbs_exact(const Triangulation& t, double beta, const Boundary& bc)
{
    if (!(beta >= 0))
        throw std::invalid_argument("gibbs_exact: beta must be >= 0");
    const Model m(t, bc);
    const auto n = m.free_count();
    if (n > kMaxExactSpins)
        throw std::length_error("gibbs_exact: more than 22 free spins");

    const std::uint64_t total = std::uint64_t{1} << n;
    std::vector<double> logw(total);
    Spins s(n, -1);
    double h = m.energy(s);
    std::uint64_t config = 0;
    logw[0] = -beta * h;
    for (std::uint64_t i = 1; i < total; ++i) {
        const auto v = static_cast<VertexId>(std::countr_zero(i));
        h += 2.0 * s[v] * m.local_field(s, v);
        s[v] = static_cast<std::int8_t>(-s[v]);
        config ^= std::uint64_t{1} << v;
        logw[config] = -beta * h;
    }
    double top = logw[0];
    for (double x : logw)
        top = std::max(top, x);
    double z = 0;
    for (auto& x : logw) {
        x = std::exp(x - top);
        z += x;
    }
    for (auto& x : logw)
        x /= z;
    return ExactGibbs(n, std::move(logw), top + std::log(z));
}

/// Heat-bath update of one site.
inline void heat_bath_update(const Model& m, Spins& s, VertexId v, double beta, Rng& rng)
{
    const double p = conditional_spin_prob(m.local_field(s, v), beta);
    s[v] = rng.uniform() < p ? 1 : -1;
}

/// One sequential sweep of heat-bath updates over all free sites.
inline void glauber_sweep(const Model& m, Spins& s, double beta, Rng& rng)
{
    for (VertexId v = 0; v < m.free_count(); ++v)
        heat_bath_update(m, s, v, beta, rng);
}

inline void glauber_sweep(const Triangulation& t, SpinState& state, Rng& rng)
{
    const Model m(t, state.boundary);
    m.check(state.spins);
    glauber_sweep(m, state.spins, state.beta, rng);
}

inline Spins random_spins(std::size_t n, Rng& rng)
{
    Spins s(n);
    for (auto& x : s)
        x = rng.bernoulli(0.5) ? 1 : -1;
    return s;
}

enum class ChainStart
{
    Boundary, // every free spin equal to a constant boundary; random for an explicit one
    Random
};

struct ChainConfig
{
    std::size_t sweeps = 10000;  // measured sweeps per replica
    std::size_t burn_in = 1000;
    std::size_t batches = 32;    // per replica
    std::size_t replicas = 4;
    std::size_t workers = 1;
    ChainStart start = ChainStart::Boundary;
};

/// P(sigma_root = +1) by Glauber dynamics. Starting aligned with a constant
/// boundary avoids replicas frozen in the wrong phase at large beta. Replica r
/// uses rng.split(r); the standard error comes from batch means pooled over
/// replicas.
inline Estimate root_plus_probability(const Triangulation& t, double beta, const Boundary& bc,
                                      const ChainConfig& cfg, const Rng& rng)
{
    if (cfg.sweeps == 0 || cfg.replicas == 0)
        throw std::invalid_argument("root_plus_probability: sweeps and replicas must be positive");
    const Model m(t, bc);
    const auto batches = std::min(cfg.batches == 0 ? 1 : cfg.batches, cfg.sweeps);
    std::vector<std::vector<double>> per_replica(cfg.replicas);
    parallel_for(cfg.replicas, cfg.workers, [&](std::size_t r) {
        Rng local = rng.split(r);
        Spins s = random_spins(m.free_count(), local);
        if (cfg.start == ChainStart::Boundary && bc.kind != BoundaryKind::Explicit)
            std::fill(s.begin(), s.end(), static_cast<std::int8_t>(bc.kind == BoundaryKind::Plus ? 1 : -1));
        for (std::size_t i = 0; i < cfg.burn_in; ++i)
            glauber_sweep(m, s, beta, local);
        auto& out = per_replica[r];
        // Batch b covers sweeps [b*sweeps/batches, (b+1)*sweeps/batches).
        for (std::size_t b = 0; b < batches; ++b) {
            const auto lo = b * cfg.sweeps / batches, hi = (b + 1) * cfg.sweeps / batches;
            std::size_t plus = 0;
            for (std::size_t i = lo; i < hi; ++i) {
                glauber_sweep(m, s, beta, local);
                plus += s[t.root()] > 0;
            }
            out.push_back(static_cast<double>(plus) / static_cast<double>(hi - lo));
        }
    });
    std::vector<double> all;
    for (const auto& v : per_replica)
        all.insert(all.end(), v.begin(), v.end());
    return batch_estimate(all);
}

} // namespace lorentz::ising
