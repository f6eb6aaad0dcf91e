// gmwb: command-line front end for the GMWB pricing engine.
//
//   gmwb <command> --config run.json [--output out] [--seed N] [--paths N]
//        [--steps N] [--threads N] [--canonical]
//
// Exit codes: 0 ok, 2 invalid configuration, 3 numerical failure.

#include <chrono>
#include <ctime>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "gmwb/account.hpp"
#include "gmwb/fair_fee.hpp"
#include "gmwb/oracle.hpp"
#include "gmwb/parallel.hpp"
#include "gmwb/surrender.hpp"
#include "gmwb/valuation.hpp"
#include "run_config.hpp"

using nlohmann::json;
using namespace gmwb;

namespace {

constexpr int kExitInvalid = 2;
constexpr int kExitNumerical = 3;
constexpr const char* kVersion = "1.0.0";

struct Options {
    std::string command;
    std::string config_path;
    std::string output_path;
    std::optional<std::uint64_t> seed;
    std::optional<std::size_t> paths;
    std::optional<int> steps;
    int threads = 0;
    bool canonical = false;
    std::string format = "csv";
    std::string export_paths;
    std::string account_csv;
    std::size_t account_path = 0;
    std::string save_policy;
    std::string load_policy;
};

json read_json(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError({"cannot open config file '" + path + "'"});
    try {
        return json::parse(in);
    } catch (const json::parse_error& e) {
        throw ValidationError({std::string("config is not valid JSON: ") + e.what()});
    }
}

std::string iso_timestamp() {
    const std::time_t now = std::time(nullptr);
    std::tm tm{};
    gmtime_r(&now, &tm);
    std::ostringstream out;
    out << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
    return out.str();
}

class Sink {
public:
    explicit Sink(const std::string& path) {
        if (!path.empty()) {
            file_.open(path, std::ios::binary);
            if (!file_) throw ValidationError({"cannot write output file '" + path + "'"});
        }
    }
    std::ostream& stream() { return file_.is_open() ? static_cast<std::ostream&>(file_) : std::cout; }

private:
    std::ofstream file_;
};

json envelope(const Options& opt, const cli::RunConfig& cfg, json result,
              std::chrono::steady_clock::time_point start) {
    json out = {{"command", opt.command}, {"config", cli::echo(cfg)}, {"warnings", cfg.warnings},
                {"result", std::move(result)}};
    if (!opt.canonical) {
        const double elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        out["run"] = {{"version", kVersion},
                      {"timestamp", iso_timestamp()},
                      {"elapsed_seconds", elapsed},
                      {"threads", thread_cap()}};
    }
    return out;
}

void write_json(const Options& opt, const json& doc) {
    Sink sink(opt.output_path);
    sink.stream() << doc.dump(2) << '\n';
}

// CSV artifacts carry the configuration as a leading comment line.
void write_csv(const Options& opt, const cli::RunConfig& cfg, const std::string& body) {
    Sink sink(opt.output_path);
    json head = {{"command", opt.command}, {"config", cli::echo(cfg)}};
    if (!opt.canonical) head["run"] = {{"version", kVersion}, {"timestamp", iso_timestamp()}};
    sink.stream() << "# " << head.dump() << '\n' << body;
}

StoppingPolicy obtain_policy(const Options& opt, const cli::RunConfig& cfg) {
    StoppingPolicy policy;
    if (!opt.load_policy.empty()) {
        policy = read_json(opt.load_policy).get<StoppingPolicy>();
    } else {
        policy = fit_policy(cfg.contract, cfg.market, cfg.fit_config(), cfg.lapse.options);
    }
    if (!opt.save_policy.empty()) {
        std::ofstream out(opt.save_policy, std::ios::binary);
        if (!out) throw ValidationError({"cannot write policy file '" + opt.save_policy + "'"});
        out << json(policy).dump(2) << '\n';
    }
    return policy;
}

int run(const Options& opt) {
    const auto start = std::chrono::steady_clock::now();
    cli::RunConfig cfg = cli::parse_run_config(read_json(opt.config_path));
    if (opt.seed) cfg.engine.seed = *opt.seed;
    if (opt.paths) cfg.engine.num_paths = *opt.paths;
    if (opt.steps) {
        cfg.engine.steps_per_year = *opt.steps;
        cfg.oracle.steps_per_year = *opt.steps;
    }
    if (cfg.engine.num_paths == 0 || cfg.engine.steps_per_year <= 0)
        throw ValidationError({"--paths and --steps must be positive"});
    // Catch grid mismatches before any work starts.
    (void)contract_grid(cfg.contract, cfg.engine.steps_per_year);

    const ContractSpec& spec = cfg.contract;
    const MarketParams& market = cfg.market;
    const SimulationConfig& sim = cfg.engine;

    if (opt.command == "price") {
        const auto report = decompose(spec, market, sim);
        if (!opt.export_paths.empty()) {
            std::ofstream out(opt.export_paths, std::ios::binary);
            if (!out) throw ValidationError({"cannot write path export '" + opt.export_paths + "'"});
            PathSet(market, spec.fee_rate, contract_grid(spec, sim.steps_per_year), sim.num_paths, sim.seed,
                    sim.antithetic)
                .export_binary(out);
        }
        if (!opt.account_csv.empty()) {
            std::ofstream out(opt.account_csv, std::ios::binary);
            if (!out) throw ValidationError({"cannot write account CSV '" + opt.account_csv + "'"});
            const PathSet paths(market, spec.fee_rate, contract_grid(spec, sim.steps_per_year), sim.num_paths,
                                sim.seed, sim.antithetic);
            write_account_csv(out, evolve(spec, paths, opt.account_path));
        }
        write_json(opt, envelope(opt, cfg, report, start));
    } else if (opt.command == "fair-fee") {
        const auto res = solve_fair_fee(spec, market, sim, cfg.solver);
        write_json(opt, envelope(opt, cfg, res, start));
    } else if (opt.command == "lapse-value") {
        const auto policy = obtain_policy(opt, cfg);
        const auto report = price_with_lapse(spec, market, sim, policy);
        json result = report;
        result["policy_warnings"] = policy.warnings;
        result["in_sample_V0_lapse"] = policy.in_sample_value;
        write_json(opt, envelope(opt, cfg, result, start));
    } else if (opt.command == "boundary") {
        const auto policy = obtain_policy(opt, cfg);
        const auto boundary = exercise_boundary(policy, spec);
        if (opt.format == "json") {
            write_json(opt, envelope(opt, cfg, {{"boundary", boundary}, {"policy_warnings", policy.warnings}}, start));
        } else {
            std::ostringstream body;
            write_boundary_csv(body, boundary);
            write_csv(opt, cfg, body.str());
        }
    } else if (opt.command == "ruin-prob") {
        const auto est = ruin_probability(spec, market, contract_grid(spec, sim.steps_per_year), sim.num_paths,
                                          sim.seed, sim.antithetic);
        write_json(opt, envelope(opt, cfg, est, start));
    } else if (opt.command == "surface") {
        const auto surface = value_surface(spec, market, sim, cfg.surface.t_points, cfg.surface.w_points);
        if (opt.format == "json") {
            write_json(opt, envelope(opt, cfg, surface, start));
        } else {
            std::ostringstream body;
            write_surface_csv(body, surface);
            write_csv(opt, cfg, body.str());
        }
    } else if (opt.command == "oracle") {
        json result;
        if (market.sigma == 0.0) result["closed_form"] = deterministic_value(spec, market);
        const bool lapse = cfg.oracle.with_lapse && !spec.cdsc.empty();
        result["tree"] = tree_value(spec, market, cfg.oracle.steps_per_year, lapse, cfg.oracle.tree);
        result["tree"]["with_lapse"] = lapse;
        write_json(opt, envelope(opt, cfg, result, start));
    }
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"GMWB variable annuity pricing engine"};
    Options opt;
    app.add_option("command", opt.command, "price | fair-fee | lapse-value | boundary | ruin-prob | surface | oracle")
        ->required()
        ->check(CLI::IsMember({"price", "fair-fee", "lapse-value", "boundary", "ruin-prob", "surface", "oracle"}));
    app.add_option("-c,--config", opt.config_path, "JSON run configuration")->required();
    app.add_option("-o,--output", opt.output_path, "output file (default stdout)");
    app.add_option("--seed", opt.seed, "override engine.seed");
    app.add_option("--paths", opt.paths, "override engine.num_paths");
    app.add_option("--steps", opt.steps, "override engine.steps_per_year");
    app.add_option("--threads", opt.threads, "worker cap (default $GMWB_THREADS or all cores)");
    app.add_flag("--canonical", opt.canonical, "omit timestamps, timings and thread count");
    app.add_option("--format", opt.format, "boundary/surface output format")
        ->check(CLI::IsMember({"csv", "json"}));
    app.add_option("--export-paths", opt.export_paths, "price: dump growth factors (path-major float64 LE)");
    app.add_option("--account-csv", opt.account_csv, "price: write one account path as CSV");
    app.add_option("--account-path", opt.account_path, "path index for --account-csv");
    app.add_option("--save-policy", opt.save_policy, "lapse-value/boundary: write the fitted policy as JSON");
    app.add_option("--load-policy", opt.load_policy, "lapse-value/boundary: reuse a saved policy");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : kExitInvalid;
    }
    if (opt.threads < 0) {
        std::cerr << "error: --threads must be non-negative\n";
        return kExitInvalid;
    }
    if (opt.threads > 0) set_thread_cap(opt.threads);

    try {
        return run(opt);
    } catch (const ValidationError& e) {
        json err = {{"error", "invalid configuration"}, {"details", e.errors()}};
        std::cerr << err.dump(2) << '\n';
        return kExitInvalid;
    } catch (const NumericalError& e) {
        json err = {{"error", e.what()}, {"diagnostics", e.diagnostics()}};
        std::cerr << err.dump(2) << '\n';
        if (!opt.output_path.empty()) {
            std::ofstream out(opt.output_path, std::ios::binary);
            out << err.dump(2) << '\n';
        }
        return kExitNumerical;
    } catch (const std::invalid_argument& e) {
        std::cerr << json({{"error", "invalid configuration"}, {"details", {e.what()}}}).dump(2) << '\n';
        return kExitInvalid;
    } catch (const std::out_of_range& e) {
        std::cerr << json({{"error", "invalid configuration"}, {"details", {e.what()}}}).dump(2) << '\n';
        return kExitInvalid;
    } catch (const json::exception& e) {
        std::cerr << json({{"error", "invalid configuration"}, {"details", {e.what()}}}).dump(2) << '\n';
        return kExitInvalid;
    }
}
