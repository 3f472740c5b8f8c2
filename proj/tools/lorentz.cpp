// Batch driver: every subcommand builds one table and writes it as CSV or
// JSON. Identical flags give identical data rows; only the `# generated`
// line carries a timestamp.

#include <CLI11.hpp>
#include <json.hpp>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "lorentz/enumerate.hpp"
#include "lorentz/gw.hpp"
#include "lorentz/ising.hpp"
#include "lorentz/peierls.hpp"
#include "lorentz/percolation.hpp"
#include "lorentz/surgery.hpp"

using json = nlohmann::ordered_json;
using namespace lorentz;

namespace {

constexpr int kSchemaVersion = 1;

struct Config
{
    std::string command;
    std::uint64_t seed = 1;
    std::size_t levels = 0;
    std::vector<double> betas;
    std::size_t trials = 0;
    std::size_t sweeps = 10000;
    std::size_t width_cap = 4;
    std::size_t n = 0;
    std::size_t threshold = 8;
    std::size_t count = 10;
    std::size_t workers = 1;
    std::string out;
    std::string lattice_out;
    std::string format = "csv";

    json to_json() const
    {
        return {{"command", command},   {"seed", seed},           {"levels", levels},
                {"betas", betas},       {"trials", trials},       {"sweeps", sweeps},
                {"width_cap", width_cap}, {"n", n},               {"threshold", threshold},
                {"count", count},       {"workers", workers},     {"format", format}};
    }
};

struct Report
{
    std::string schema;
    std::vector<std::string> columns;
    std::vector<json> rows; // arrays, one value per column
};

std::string cell(const json& v)
{
    if (v.is_null())
        return "";
    if (v.is_number_float()) {
        char buf[32];
        std::snprintf(buf, sizeof buf, "%.12g", v.get<double>());
        return buf;
    }
    if (v.is_string())
        return v.get<std::string>();
    return v.dump();
}

std::string timestamp()
{
    const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm utc{};
    gmtime_r(&now, &utc);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &utc);
    return buf;
}

void write_report(std::ostream& os, const Report& r, const Config& cfg)
{
    if (cfg.format == "json") {
        json doc;
        doc["schema"] = r.schema;
        doc["version"] = kSchemaVersion;
        doc["config"] = cfg.to_json();
        doc["generated"] = timestamp();
        doc["columns"] = r.columns;
        json rows = json::array();
        for (const auto& row : r.rows) {
            json obj = json::object();
            for (std::size_t i = 0; i < r.columns.size(); ++i)
                obj[r.columns[i]] = row[i];
            rows.push_back(std::move(obj));
        }
        doc["rows"] = std::move(rows);
        os << doc.dump(2) << '\n';
        return;
    }
    os << "# schema " << r.schema << " v" << kSchemaVersion << '\n';
    os << "# config " << cfg.to_json().dump() << '\n';
    os << "# generated " << timestamp() << '\n';
    for (std::size_t i = 0; i < r.columns.size(); ++i)
        os << (i ? "," : "") << r.columns[i];
    os << '\n';
    for (const auto& row : r.rows) {
        for (std::size_t i = 0; i < row.size(); ++i)
            os << (i ? "," : "") << cell(row[i]);
        os << '\n';
    }
}

// --out wins, then $LORENTZ_OUT_DIR/<command>.<format>, else stdout.
std::string output_path(const Config& cfg)
{
    if (!cfg.out.empty())
        return cfg.out;
    if (const char* dir = std::getenv("LORENTZ_OUT_DIR"); dir && *dir)
        return (std::filesystem::path(dir) / (cfg.command + "." + cfg.format)).string();
    return "-";
}

std::vector<double> parse_beta_grid(const std::string& text)
{
    std::vector<double> out;
    // start:stop:step, inclusive of stop up to rounding
    if (text.find(':') != std::string::npos) {
        double a, b, h;
        char c1, c2;
        std::istringstream is(text);
        if (!(is >> a >> c1 >> b >> c2 >> h) || c1 != ':' || c2 != ':' || !(h > 0) || b < a)
            throw std::invalid_argument("bad --beta-grid range: " + text);
        const auto steps = static_cast<std::size_t>(std::floor((b - a) / h + 1e-9));
        for (std::size_t i = 0; i <= steps; ++i)
            out.push_back(a + static_cast<double>(i) * h);
        return out;
    }
    std::istringstream is(text);
    std::string item;
    while (std::getline(is, item, ',')) {
        std::size_t used = 0;
        const double b = std::stod(item, &used);
        if (used != item.size())
            throw std::invalid_argument("bad --beta-grid entry: " + item);
        out.push_back(b);
    }
    if (out.empty())
        throw std::invalid_argument("empty --beta-grid");
    return out;
}

Triangulation spine_sample(const Rng& rng, std::size_t levels)
{
    Rng local = rng.split(0);
    return Triangulation::from_forest(
        gw::flatten(gw::sample_spine_forest(local, static_cast<std::uint32_t>(levels))).forest);
}

// ---------------------------------------------------------------------------

Report run_sample(const Config& cfg)
{
    if (cfg.levels < 1)
        throw std::invalid_argument("sample: --levels must be >= 1");
    Report r{"sample.level_sizes", {"level", "k", "count", "fraction"}, {}};
    const Rng rng(cfg.seed);
    std::map<std::pair<std::size_t, std::size_t>, std::size_t> hist;
    std::ofstream lattice;
    if (!cfg.lattice_out.empty()) {
        lattice.open(cfg.lattice_out);
        if (!lattice)
            throw std::runtime_error("cannot open " + cfg.lattice_out);
    }
    for (std::size_t i = 0; i < cfg.trials; ++i) {
        Rng local = rng.split(i);
        const auto f = gw::flatten(gw::sample_spine_forest(local, static_cast<std::uint32_t>(cfg.levels))).forest;
        const auto k = f.level_sizes();
        for (std::size_t n = 0; n < k.size(); ++n)
            ++hist[{n, k[n]}];
        if (lattice.is_open())
            write_forest(lattice, f);
    }
    for (const auto& [key, c] : hist)
        r.rows.push_back({key.first, key.second, c, static_cast<double>(c) / static_cast<double>(cfg.trials)});
    return r;
}

Report run_stats(const Config& cfg)
{
    Report r{"stats.level_size_law", {"n", "k", "observed", "empirical", "expected", "tv"}, {}};
    Rng rng(cfg.seed);
    const auto fit = gw::level_size_fit(static_cast<std::uint32_t>(cfg.n), cfg.trials, rng);
    for (const auto& row : fit.rows)
        r.rows.push_back({cfg.n, row.k, row.observed, row.empirical, row.expected, fit.tv});
    return r;
}

Report run_ising_scan(const Config& cfg)
{
    Report r{"ising.root_plus", {"beta", "bc", "levels", "free_spins", "estimate", "stderr", "exact"}, {}};
    const Rng rng(cfg.seed);
    const auto t = spine_sample(rng, cfg.levels);
    const auto free = t.vertex_count() - t.level_size(t.levels());
    ising::ChainConfig chain;
    chain.sweeps = cfg.sweeps;
    chain.burn_in = std::max<std::size_t>(1, cfg.sweeps / 10);
    chain.replicas = cfg.trials;
    chain.workers = cfg.workers;
    for (std::size_t j = 0; j < cfg.betas.size(); ++j) {
        const double beta = cfg.betas[j];
        const std::pair<const char*, ising::Boundary> bcs[] = {{"plus", ising::Boundary::plus()},
                                                               {"minus", ising::Boundary::minus()}};
        for (std::size_t b = 0; b < 2; ++b) {
            const auto& [name, bc] = bcs[b];
            const auto est = ising::root_plus_probability(t, beta, bc, chain, rng.split(1 + 2 * j + b));
            json exact = nullptr;
            if (free <= ising::kMaxExactSpins)
                exact = ising::gibbs_exact(t, beta, bc).marginal_plus(t.root());
            r.rows.push_back({beta, name, cfg.levels, free, est.mean, est.stderr_, exact});
        }
    }
    return r;
}

Report run_contours(const Config& cfg)
{
    Report r{"peierls.series", {"beta", "n", "count", "term", "partial_sum", "tail_sum"}, {}};
    const auto t = spine_sample(Rng(cfg.seed), cfg.levels);
    const auto set = peierls::enumerate_contours(t, cfg.n, cfg.workers);
    for (double beta : cfg.betas)
        for (const auto& row : peierls::peierls_series(set.counts, beta).rows)
            r.rows.push_back({beta, row.n, row.count, row.term, row.partial_sum, row.tail_sum});
    return r;
}

Report run_percolation(const Config& cfg)
{
    Report r{"percolation.reach", {"beta", "N", "trials", "reach_count", "estimate", "stderr"}, {}};
    for (const auto& e : percolation::annealed_reach_curve(cfg.levels, cfg.betas, cfg.trials, Rng(cfg.seed), cfg.workers))
        r.rows.push_back({e.beta, e.levels, e.trials, e.reach_count, e.estimate, e.stderr_});
    return r;
}

Report run_surgery_selftest(const Config& cfg)
{
    Report r{"surgery.selftest", {"check", "instances", "failures", "value", "bound", "stderr", "pass"}, {}};
    const auto ic = surgery::insert_collapse_check(cfg.levels, cfg.width_cap);
    r.rows.push_back({"insert_collapse", ic.instances, ic.failures, nullptr, nullptr, nullptr, ic.failures == 0});
    const auto ci = surgery::collapse_insert_check(cfg.levels, cfg.width_cap);
    r.rows.push_back({"collapse_insert", ci.instances, ci.failures, nullptr, nullptr, nullptr, ci.failures == 0});

    const surgery::ModificationParams p{cfg.threshold, cfg.count};
    Rng rng(cfg.seed);
    const auto fx = surgery::make_fixture(rng, cfg.n, p, 12);
    const auto est = surgery::reconstruction_frequency(fx.modified, fx.target, p, cfg.trials, rng.split(1), cfg.workers);
    const double bound = surgery::reconstruction_bound(fx.neighborhood, p.count);
    r.rows.push_back({"reconstruction", est.attempts, est.attempts - est.successes, est.frequency, bound, est.stderr_,
                      est.frequency >= bound - 3 * est.stderr_});

    const auto oc = surgery::overcount_check(cfg.levels, cfg.width_cap, cfg.n, p);
    r.rows.push_back({"overcount_ratio", oc.images, oc.worst_count_ratio > 1 ? 1 : 0, oc.worst_count_ratio, 1.0,
                      nullptr, oc.worst_count_ratio <= 1});
    r.rows.push_back({"overcount_weight", oc.images, oc.worst_weight_sum > 1 + 1e-12 ? 1 : 0, oc.worst_weight_sum,
                      1.0, nullptr, oc.worst_weight_sum <= 1 + 1e-12});
    return r;
}

Report run_oracle(const Config& cfg)
{
    Report r{"oracle.exact", {"check", "instances", "failures", "max_error", "pass"}, {}};
    const double mu = std::log(2.0);

    std::size_t codec_n = 0, codec_bad = 0;
    double measure_err = 0;
    std::size_t measure_n = 0;
    for (std::size_t n = 1; n <= cfg.levels; ++n) {
        const auto all = enumerate_triangulations(n, cfg.width_cap, mu);
        const auto p = normalized_weights(all);
        std::vector<double> prod;
        double z = 0;
        for (const auto& wt : all) {
            ++codec_n;
            const auto& f = wt.forest;
            std::size_t sum = 0;
            for (const auto& level : f.out_degree)
                for (auto d : level)
                    sum += d + 1;
            codec_bad += !(wt.triangulation.to_forest() == f) || !(from_text(to_text(f)) == f) ||
                         sum != wt.triangulation.triangle_count();
            double q = 1;
            for (const auto& level : f.out_degree)
                for (auto d : level)
                    q *= std::ldexp(1.0, -static_cast<int>(d) - 1);
            prod.push_back(q);
            z += q;
        }
        for (std::size_t i = 0; i < all.size(); ++i)
            measure_err = std::max(measure_err, std::abs(p[i] - prod[i] / z));
        measure_n += all.size();
    }
    r.rows.push_back({"codec", codec_n, codec_bad, nullptr, codec_bad == 0});
    r.rows.push_back({"measure_product_form", measure_n, measure_err > 1e-12 ? 1 : 0, measure_err, measure_err <= 1e-12});

    std::size_t gibbs_n = 0, contours = 0, minus_bad = 0;
    double flip_err = 0, ratio_err = 0;
    for (std::size_t n = 1; n <= cfg.levels; ++n)
        for_each_forest(n, cfg.width_cap, [&](const Forest& f) {
            const auto t = Triangulation::from_forest(f);
            if (t.vertex_count() > 20)
                return;
            ++gibbs_n;
            for (double beta : cfg.betas) {
                const auto plus = ising::gibbs_exact(t, beta, ising::Boundary::plus());
                const auto minus = ising::gibbs_exact(t, beta, ising::Boundary::minus());
                const double mp = minus.marginal_plus(t.root());
                flip_err = std::max(flip_err, std::abs(plus.marginal_plus(t.root()) - (1 - mp)));
                minus_bad += beta > 0 && !(mp < 0.5);
                const auto rc = peierls::gibbs_ratio_check(t, beta, 10);
                contours += rc.contours;
                ratio_err = std::max(ratio_err, rc.max_error);
            }
        });
    r.rows.push_back({"gibbs_spin_flip", gibbs_n, flip_err > 1e-12 ? 1 : 0, flip_err, flip_err <= 1e-12});
    r.rows.push_back({"minus_root_below_half", gibbs_n, minus_bad, nullptr, minus_bad == 0});
    r.rows.push_back({"contour_gibbs_ratio", contours, ratio_err > 1e-12 ? 1 : 0, ratio_err, ratio_err <= 1e-12});
    return r;
}

struct Command
{
    std::string name;
    std::string help;
    Report (*run)(const Config&);
    Config defaults;
};

} // namespace

int main(int argc, char** argv)
{
    auto with = [](std::size_t levels, std::vector<double> betas, std::size_t trials, std::size_t n) {
        Config c;
        c.levels = levels;
        c.betas = std::move(betas);
        c.trials = trials;
        c.n = n;
        return c;
    };
    std::vector<Command> commands{
        {"sample", "sample spine triangulations; level-size histograms", run_sample, with(10, {}, 100, 0)},
        {"stats", "goodness of fit of k_n against the exact law", run_stats, with(0, {}, 100000, 5)},
        {"ising-scan", "root magnetization over a beta grid, both boundaries", run_ising_scan,
         with(6, {0.0, 0.05, 0.25, 0.5, 1.0, 2.0}, 4, 0)},
        {"contours", "enumerate winding contours and Peierls sums", run_contours, with(3, {0.3, 1.0}, 0, 10)},
        {"percolation", "annealed reach probability curves", run_percolation,
         with(10, {0.02, 0.05, 0.1, 0.2}, 10000, 0)},
        {"surgery-selftest", "insert/collapse roundtrips, reconstruction, overcount", run_surgery_selftest,
         with(2, {}, 100000, 2)},
        {"oracle", "exact enumeration cross-checks", run_oracle, with(2, {0.3, 1.0}, 0, 0)},
    };

    CLI::App app{"Ising model on random Lorentzian triangulations"};
    app.require_subcommand(1);
    std::vector<Config> cfgs;
    std::vector<std::string> grids(commands.size()), betas(commands.size());
    cfgs.reserve(commands.size());
    for (std::size_t i = 0; i < commands.size(); ++i) {
        auto& cmd = commands[i];
        cfgs.push_back(cmd.defaults);
        auto& cfg = cfgs.back();
        cfg.command = cmd.name;
        auto* sub = app.add_subcommand(cmd.name, cmd.help);
        sub->add_option("--seed", cfg.seed, "master seed")->capture_default_str();
        sub->add_option("--levels", cfg.levels, "number of levels N")->capture_default_str();
        sub->add_option("--beta", betas[i], "single inverse temperature");
        sub->add_option("--beta-grid", grids[i], "comma list or start:stop:step");
        sub->add_option("--trials", cfg.trials, "samples, replicas or attempts")->capture_default_str();
        sub->add_option("--sweeps", cfg.sweeps, "measured Glauber sweeps per replica")->capture_default_str();
        sub->add_option("--width-cap", cfg.width_cap, "level size cap for enumeration")->capture_default_str();
        sub->add_option("--n", cfg.n, "level, contour length or path length")->capture_default_str();
        sub->add_option("--threshold", cfg.threshold, "degree from which a path vertex is modified")
            ->capture_default_str();
        sub->add_option("--count", cfg.count, "insertions per modified vertex")->capture_default_str();
        sub->add_option("--workers", cfg.workers, "worker threads")->capture_default_str()->check(CLI::PositiveNumber);
        sub->add_option("--out", cfg.out, "output file, - for stdout");
        sub->add_option("--lattice-out", cfg.lattice_out, "sample: write triangulations here");
        sub->add_option("--format", cfg.format, "csv or json")
            ->capture_default_str()
            ->check(CLI::IsMember({"csv", "json"}));
    }
    CLI11_PARSE(app, argc, argv);

    try {
        for (std::size_t i = 0; i < commands.size(); ++i) {
            if (!app.got_subcommand(commands[i].name))
                continue;
            auto& cfg = cfgs[i];
            if (!grids[i].empty() && !betas[i].empty())
                throw std::invalid_argument("give either --beta or --beta-grid");
            if (!grids[i].empty())
                cfg.betas = parse_beta_grid(grids[i]);
            if (!betas[i].empty())
                cfg.betas = parse_beta_grid(betas[i]);
            for (double b : cfg.betas)
                if (!(b >= 0))
                    throw std::invalid_argument("beta must be >= 0");
            const auto report = commands[i].run(cfg);
            const auto path = output_path(cfg);
            if (path == "-") {
                write_report(std::cout, report, cfg);
            } else {
                std::ofstream os(path);
                if (!os)
                    throw std::runtime_error("cannot open " + path);
                write_report(os, report, cfg);
            }
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    }
    return 0;
}
