#include <gtest/gtest.h>

#include <json.hpp>

#include <array>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

namespace {

struct Run
{
    int status;
    std::string out;
};

Run run(const std::string& args)
{
    const std::string cmd = std::string(LORENTZ_CLI) + " " + args + " 2>/dev/null";
    FILE* p = popen(cmd.c_str(), "r");
    if (!p)
        return {-1, {}};
    std::string out;
    std::array<char, 4096> buf{};
    std::size_t got;
    while ((got = fread(buf.data(), 1, buf.size(), p)) > 0)
        out.append(buf.data(), got);
    const int rc = pclose(p);
    return {WEXITSTATUS(rc), out};
}

// Lines other than comments, split into cells.
std::vector<std::vector<std::string>> body(const std::string& csv)
{
    std::vector<std::vector<std::string>> rows;
    std::istringstream is(csv);
    std::string line;
    while (std::getline(is, line)) {
        if (line.empty() || line[0] == '#')
            continue;
        std::vector<std::string> cells;
        std::istringstream ls(line);
        std::string c;
        while (std::getline(ls, c, ','))
            cells.push_back(c);
        if (!line.empty() && line.back() == ',')
            cells.emplace_back();
        rows.push_back(cells);
    }
    return rows;
}

std::string without_timestamp(const std::string& s)
{
    std::istringstream is(s);
    std::string line, out;
    while (std::getline(is, line))
        if (line.rfind("# generated", 0) != 0 && line.find("\"generated\"") == std::string::npos)
            out += line + '\n';
    return out;
}

} // namespace

TEST(Cli, DeterministicBodies)
{
    for (const std::string args : {"percolation --levels 4 --trials 300 --seed 3",
                                   "ising-scan --levels 3 --sweeps 500 --beta-grid 0.1,0.4",
                                   "sample --levels 4 --trials 20 --format json"}) {
        const auto a = run(args), b = run(args);
        ASSERT_EQ(a.status, 0) << args;
        EXPECT_EQ(without_timestamp(a.out), without_timestamp(b.out)) << args;
    }
    const auto w1 = run("percolation --levels 4 --trials 300 --seed 3 --workers 1");
    const auto w3 = run("percolation --levels 4 --trials 300 --seed 3 --workers 3");
    EXPECT_EQ(body(w1.out), body(w3.out));
}

TEST(Cli, HeaderCarriesSchemaAndConfig)
{
    const auto r = run("contours --levels 3 --n 8");
    ASSERT_EQ(r.status, 0);
    EXPECT_EQ(r.out.rfind("# schema peierls.series v1\n", 0), 0u);
    EXPECT_NE(r.out.find("# config {\"command\":\"contours\""), std::string::npos);
    EXPECT_NE(r.out.find("# generated "), std::string::npos);
    EXPECT_EQ(body(r.out).front(), (std::vector<std::string>{"beta", "n", "count", "term", "partial_sum", "tail_sum"}));
}

TEST(Cli, StatsDistanceSmall)
{
    const auto r = run("stats --n 5 --trials 100000 --seed 7");
    ASSERT_EQ(r.status, 0);
    const auto rows = body(r.out);
    ASSERT_GT(rows.size(), 2u);
    EXPECT_LT(std::stod(rows[1][5]), 0.015);
}

TEST(Cli, IsingScanAtBetaZeroIsHalf)
{
    const auto r = run("ising-scan --beta 0 --levels 4");
    ASSERT_EQ(r.status, 0);
    const auto rows = body(r.out);
    ASSERT_EQ(rows.size(), 3u);
    for (std::size_t i = 1; i < rows.size(); ++i) {
        const double est = std::stod(rows[i][4]), se = std::stod(rows[i][5]);
        EXPECT_GT(se, 0);
        EXPECT_LT(std::abs(est - 0.5), 4 * se) << rows[i][1];
    }
}

TEST(Cli, JsonMirrorsCsv)
{
    const auto c = run("percolation --levels 3 --trials 200");
    const auto j = run("percolation --levels 3 --trials 200 --format json");
    ASSERT_EQ(j.status, 0);
    const auto doc = nlohmann::json::parse(j.out);
    const auto rows = body(c.out);
    ASSERT_EQ(doc["rows"].size() + 1, rows.size());
    EXPECT_EQ(doc["rows"][0]["reach_count"].get<std::size_t>(), std::stoul(rows[1][3]));
    EXPECT_EQ(doc["schema"], "percolation.reach");
}

TEST(Cli, OutputDirectoryFromEnvironment)
{
    const auto dir = std::filesystem::temp_directory_path() / "lorentz_cli_test";
    std::filesystem::create_directories(dir);
    std::filesystem::remove(dir / "oracle.csv");
    const auto r = run("oracle --levels 1 --width-cap 3");
    ASSERT_EQ(r.status, 0);
    const auto env = "LORENTZ_OUT_DIR=" + dir.string() + " ";
    const std::string cmd = env + LORENTZ_CLI + " oracle --levels 1 --width-cap 3";
    ASSERT_EQ(std::system(cmd.c_str()), 0);
    std::ifstream in(dir / "oracle.csv");
    std::stringstream ss;
    ss << in.rdbuf();
    EXPECT_EQ(body(ss.str()), body(r.out));
}

TEST(Cli, InvalidConfigFails)
{
    EXPECT_NE(run("percolation --beta -1").status, 0);
    EXPECT_NE(run("percolation --beta 0.1 --beta-grid 0.1,0.2").status, 0);
    EXPECT_NE(run("contours --levels 6 --n 15").status, 0);
    EXPECT_NE(run("stats --format xml").status, 0);
    EXPECT_NE(run("").status, 0);
}
