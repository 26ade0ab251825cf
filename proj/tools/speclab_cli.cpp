#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <omp.h>

#include "CLI11.hpp"
#include "speclab/harness.hpp"

using namespace speclab;

namespace {

struct Overrides {
    std::optional<std::uint64_t> seed;
    std::optional<std::string> out;
    std::optional<int> threads;
};

/// CLI flags are folded into the document before hashing so the hash names what actually ran.
json apply_overrides(json j, const std::string& mode, const Overrides& o) {
    if (j.contains("mode") && j["mode"] != mode) {
        throw ConfigError("mode", "config says '" + j["mode"].dump() + "' but subcommand is '" + mode + "'");
    }
    j["mode"] = mode;
    if (o.seed) {
        // --seed shifts the whole seed list so that replicate structure is kept
        std::vector<std::uint64_t> seeds = j.value("seeds", std::vector<std::uint64_t>{1});
        const std::uint64_t base = seeds.empty() ? 0 : seeds.front();
        for (auto& s : seeds) {
            s = s - base + *o.seed;
        }
        j["seeds"] = seeds;
    }
    if (o.out) {
        j["output"] = *o.out;
    }
    if (o.threads) {
        j["threads"] = *o.threads;
    }
    return j;
}

json read_json(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw ConfigError("", "cannot open " + path);
    }
    try {
        return json::parse(in);
    } catch (const json::parse_error& e) {
        throw ConfigError("", path + ": " + e.what());
    }
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Spectral-filter risk laboratory"};
    app.require_subcommand(1);

    Overrides o;
    std::uint64_t seed = 0;
    std::string out;
    int threads = 0;
    std::string config_path;

    const std::vector<std::pair<std::string, std::string>> modes{
        {"curve", "deterministic bias / effective-dimension curves"},
        {"sweep", "exact conditional risk over (n, lambda, seed)"},
        {"verify-filter", "real-axis audit of filter constants"},
        {"verify-contour", "contour geometry, analytic conditions, matrix cross-check"},
        {"saturation", "best-lambda risk slopes across filters"},
        {"interpolating", "variance floor of the lambda = n^-beta rule"}};
    std::vector<CLI::App*> subs;
    for (const auto& [name, help] : modes) {
        CLI::App* s = app.add_subcommand(name, help);
        s->add_option("config", config_path, "JSON configuration file")->required();
        s->add_option("--seed", seed, "first seed (the seed list is shifted)");
        s->add_option("--out", out, "output directory");
        s->add_option("--threads", threads, "OpenMP thread count")->check(CLI::PositiveNumber);
        subs.push_back(s);
    }
    std::string diff_a;
    std::string diff_b;
    CLI::App* diff = app.add_subcommand("diff", "compare two summary reports");
    diff->add_option("a", diff_a, "first summary JSON")->required();
    diff->add_option("b", diff_b, "second summary JSON")->required();
    diff->add_option("--out", out, "write the diff here instead of stdout");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 2;
    }

    try {
        if (diff->parsed()) {
            const json d = report_diff(read_json(diff_a), read_json(diff_b));
            if (diff->count("--out") > 0) {
                std::ofstream f(out);
                if (!f) {
                    throw ConfigError("--out", "cannot write " + out);
                }
                f << d.dump(2) << "\n";
            } else {
                std::cout << d.dump(2) << "\n";
            }
            return 0;
        }
        for (std::size_t i = 0; i < subs.size(); ++i) {
            CLI::App* s = subs[i];
            if (!s->parsed()) {
                continue;
            }
            if (s->count("--seed") > 0) {
                o.seed = seed;
            }
            if (s->count("--out") > 0) {
                o.out = out;
            }
            if (s->count("--threads") > 0) {
                o.threads = threads;
                omp_set_num_threads(threads);
            }
            const ExperimentConfig cfg = parse_config(apply_overrides(read_json(config_path), modes[i].first, o));
            const RunResult r = run(cfg);
            for (const auto& f : r.files) {
                std::cout << "wrote " << f << "\n";
            }
            std::cout << (r.exit_code == 0 ? "PASS" : "FAIL: invariant violation") << " ("
                      << modes[i].first << ", config " << r.summary.value("config_hash", "") << ")\n";
            return r.exit_code;
        }
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 2;
}
