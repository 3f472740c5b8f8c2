#pragma once

#include <cstddef>
#include <cstdint>
#include <istream>
#include <numeric>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace lorentz {

/// Level-ordered plane forest: out_degree[n][i] is the number of children of
/// the i-th vertex (left to right) of level n, for levels 0..N-1. Level N has
/// sum(out_degree[N-1]) vertices and no recorded out-degrees.
///
/// This is the tree parametrization of a Lorentzian triangulation of C_N.
struct Forest
{
    std::vector<std::vector<std::uint32_t>> out_degree;

    std::size_t levels() const noexcept { return out_degree.size(); }

    /// k_n for n = 0..N.
    std::vector<std::size_t> level_sizes() const
    {
        std::vector<std::size_t> k;
        k.reserve(out_degree.size() + 1);
        if (out_degree.empty()) {
            k.push_back(1);
            return k;
        }
        k.push_back(out_degree.front().size());
        for (const auto& level : out_degree)
            k.push_back(std::accumulate(level.begin(), level.end(), std::size_t{0}));
        return k;
    }

    /// Sum over vertices below level N of (delta_u + 1).
    std::size_t degree_sum() const
    {
        std::size_t s = 0;
        for (const auto& level : out_degree)
            for (auto d : level)
                s += d + 1;
        return s;
    }

    bool operator==(const Forest&) const = default;
};

/// Throws std::invalid_argument unless k_0 = 1, every level is non-empty and
/// each level's out-degrees sum to the next level's size.
inline void validate(const Forest& f)
{
    if (f.out_degree.empty())
        return;
    if (f.out_degree.front().size() != 1)
        throw std::invalid_argument("forest: level 0 must hold exactly one vertex");
    for (std::size_t n = 0; n < f.out_degree.size(); ++n) {
        const auto& level = f.out_degree[n];
        if (level.empty())
            throw std::invalid_argument("forest: empty level " + std::to_string(n));
        const auto next = std::accumulate(level.begin(), level.end(), std::size_t{0});
        if (next == 0)
            throw std::invalid_argument("forest: empty level " + std::to_string(n + 1));
        if (n + 1 < f.out_degree.size() && f.out_degree[n + 1].size() != next)
            throw std::invalid_argument("forest: level " + std::to_string(n + 1) +
                                        " size does not match parent out-degrees");
    }
}

// Text format
//
//   line 1:   N k_0 k_1 ... k_N
//   line n+2: out-degrees of level n (k_n integers), n = 0..N-1
//
// Single spaces, '\n' line ends. write_forest(read_forest(s)) == s for any
// well-formed s.

inline void write_forest(std::ostream& os, const Forest& f)
{
    const auto k = f.level_sizes();
    os << f.levels();
    for (auto kn : k)
        os << ' ' << kn;
    os << '\n';
    for (const auto& level : f.out_degree) {
        for (std::size_t i = 0; i < level.size(); ++i)
            os << (i ? " " : "") << level[i];
        os << '\n';
    }
}

inline std::string to_text(const Forest& f)
{
    std::ostringstream os;
    write_forest(os, f);
    return os.str();
}

inline Forest read_forest(std::istream& is)
{
    std::string line;
    if (!std::getline(is, line))
        throw std::invalid_argument("forest text: missing header");
    std::istringstream header(line);
    std::size_t n_levels = 0;
    if (!(header >> n_levels))
        throw std::invalid_argument("forest text: bad header");
    std::vector<std::size_t> k(n_levels + 1);
    for (auto& kn : k)
        if (!(header >> kn))
            throw std::invalid_argument("forest text: header lists too few level sizes");
    std::string extra;
    if (header >> extra)
        throw std::invalid_argument("forest text: trailing header tokens");

    Forest f;
    f.out_degree.resize(n_levels);
    for (std::size_t n = 0; n < n_levels; ++n) {
        if (!std::getline(is, line))
            throw std::invalid_argument("forest text: missing level " + std::to_string(n));
        std::istringstream row(line);
        std::uint32_t d = 0;
        while (row >> d)
            f.out_degree[n].push_back(d);
        if (!row.eof())
            throw std::invalid_argument("forest text: bad token in level " + std::to_string(n));
        if (f.out_degree[n].size() != k[n])
            throw std::invalid_argument("forest text: level " + std::to_string(n) +
                                        " length disagrees with header");
    }
    validate(f);
    if (f.level_sizes() != k)
        throw std::invalid_argument("forest text: header level sizes disagree with degrees");
    return f;
}

inline Forest from_text(const std::string& s)
{
    std::istringstream is(s);
    return read_forest(is);
}

} // namespace lorentz
