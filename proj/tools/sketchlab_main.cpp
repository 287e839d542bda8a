#include <algorithm>
#include <cerrno>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "sketchlab/csvio.hpp"
#include "sketchlab/errors.hpp"
#include "sketchlab/experiments.hpp"
#include "sketchlab/keygen.hpp"

namespace {

using namespace sketchlab;

std::uint64_t env_base_seed() {
    const char* env = std::getenv("SKETCHLAB_SEED");
    if (env == nullptr || *env == '\0') return 1;
    errno = 0;
    char* end = nullptr;
    const unsigned long long v = std::strtoull(env, &end, 10);
    if (errno != 0 || end == env || *end != '\0')
        throw ConfigError("SKETCHLAB_SEED must be an unsigned integer");
    return v;
}

ExperimentSpec::Format parse_format(const std::string& name) {
    if (name == "csv") return ExperimentSpec::Format::Csv;
    if (name == "svg") return ExperimentSpec::Format::Svg;
    if (name == "both") return ExperimentSpec::Format::Both;
    throw ConfigError("format must be csv, svg or both");
}

// One subcommand's flag set over an ExperimentSpec. Precedence: built-in
// defaults < JSON config < explicit flags.
struct SpecCli {
    ExperimentSpec spec;
    std::string config_path;
    std::string format_name = "both";
    std::string which = "standard";
    CLI::App* cmd = nullptr;
    CLI::Option *o_eps = nullptr, *o_k = nullptr, *o_n = nullptr, *o_r = nullptr,
                *o_trials = nullptr, *o_seeds = nullptr, *o_out = nullptr,
                *o_format = nullptr, *o_which = nullptr;

    void attach(CLI::App* sub, bool with_trials, bool with_which) {
        cmd = sub;
        o_eps = sub->add_option("--epsilon", spec.epsilon,
                                "target relative error; maps to k = ceil(1.04/eps^2)");
        o_k = sub->add_option("--k", spec.k, "register count");
        o_n = sub->add_option("--n", spec.n, "ground set size (0 = subcommand default)");
        o_r = sub->add_option("--r", spec.r, "query budget");
        if (with_trials)
            o_trials = sub->add_option("--trials", spec.trials, "trial count (0 = default)");
        o_seeds = sub->add_option("--seeds", spec.seeds, "comma separated seeds")
                      ->delimiter(',');
        o_out = sub->add_option("--out", spec.out_dir, "output directory");
        o_format = sub->add_option("--format", format_name, "csv, svg or both")
                       ->check(CLI::IsMember({"csv", "svg", "both"}));
        if (with_which)
            o_which = sub->add_option("--which", which,
                                      "which guarantee to check")
                          ->check(CLI::IsMember({"standard", "symmetric", "adaptive"}));
        sub->add_option("--config", config_path, "JSON config file");
    }

    void apply_json() {
        if (config_path.empty()) return;
        std::ifstream in(config_path);
        if (!in) throw IoError("cannot open config file: " + config_path);
        nlohmann::json j;
        try {
            in >> j;
        } catch (const nlohmann::json::exception& e) {
            throw ConfigError("config file is not valid JSON: " + std::string(e.what()));
        }
        if (!j.is_object()) throw ConfigError("config file must hold a JSON object");
        try {
            for (const auto& [key, val] : j.items()) {
                if (key == "epsilon") {
                    if (o_eps->count() == 0) spec.epsilon = val.get<double>();
                } else if (key == "k") {
                    if (o_k->count() == 0) spec.k = val.get<std::uint32_t>();
                } else if (key == "n") {
                    if (o_n->count() == 0) spec.n = val.get<std::size_t>();
                } else if (key == "r") {
                    if (o_r->count() == 0) spec.r = val.get<std::int64_t>();
                } else if (key == "trials") {
                    if (o_trials != nullptr && o_trials->count() == 0)
                        spec.trials = val.get<std::size_t>();
                } else if (key == "seeds") {
                    if (o_seeds->count() == 0)
                        spec.seeds = val.get<std::vector<std::uint64_t>>();
                } else if (key == "out") {
                    if (o_out->count() == 0) spec.out_dir = val.get<std::string>();
                } else if (key == "format") {
                    if (o_format->count() == 0) format_name = val.get<std::string>();
                } else if (key == "which") {
                    if (o_which == nullptr) throw ConfigError("config key 'which' only applies to theorem-check");
                    if (o_which->count() == 0) which = val.get<std::string>();
                } else {
                    throw ConfigError("unknown config key: " + key);
                }
            }
        } catch (const nlohmann::json::exception& e) {
            throw ConfigError("bad config value: " + std::string(e.what()));
        }
    }

    // Resolve config file, format and the default seed list (base seed from
    // SKETCHLAB_SEED, one seed for sweeps, ten for theorem checks).
    void finalize(std::size_t default_seed_count) {
        apply_json();
        spec.format = parse_format(format_name);
        if (spec.seeds.empty()) {
            const std::uint64_t base = env_base_seed();
            for (std::size_t i = 0; i < default_seed_count; ++i)
                spec.seeds.push_back(base + i);
        }
    }
};

int run_audit(const ExperimentSpec& spec) {
    if (spec.epsilon) throw ConfigError("the audit takes k, not epsilon");
    const std::uint32_t k = spec.k ? *spec.k : 64;
    const std::size_t n = spec.n > 0 ? spec.n : 10000;
    const std::size_t trials = spec.trials > 0 ? spec.trials : 1000;
    const std::uint64_t seed = spec.seeds.empty() ? 1 : spec.seeds.front();

    const SketchConfig cfg{SketchKind::KMins, k, RegisterRepr::FullPrecision};
    Rng keyrng(derive_stream(seed, 0));
    const GroundSet ground(cfg, Seed{derive_stream(seed, 2), derive_stream(seed, 3)},
                           generate_keys(n, spec.key_len, keyrng));
    const double A = static_cast<double>(n) / 16.0;
    const QuerySession session(ground,
                               QrConfig::make(QrStrategy::ReferenceThreshold, A, k));
    const auto grid = default_audit_grid(A, n);
    const CorrectnessAudit audit =
        audit_correctness([&](const KeyMask& q) { return session.respond(q).z; }, ground, A,
                          grid, trials, derive_stream(seed, 5));

    CsvWriter csv({"cardinality", "trials", "rate_z1"});
    for (const BucketRate& b : audit.buckets) {
        csv.add(static_cast<std::uint64_t>(b.cardinality));
        csv.add(static_cast<std::uint64_t>(b.trials));
        csv.add(b.rate_z1);
        csv.end_row();
    }
    if (!spec.out_dir.empty() && spec.format != ExperimentSpec::Format::Svg) {
        std::error_code ec;
        std::filesystem::create_directories(spec.out_dir, ec);
        if (ec) throw IoError("cannot create output directory: " + spec.out_dir);
        csv.save((std::filesystem::path(spec.out_dir) / "audit.csv").string());
    }

    const double delta = session.config().delta;
    const double worst = std::max(audit.worst_low, audit.worst_high);
    std::cout << "audit: k=" << k << " n=" << n << " A=" << format_double(A)
              << " worst_low=" << format_double(audit.worst_low)
              << " worst_high=" << format_double(audit.worst_high)
              << " delta=" << format_double(delta) << (worst > delta ? " FAIL" : " ok")
              << "\n";
    return worst > delta ? 1 : 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Composable cardinality sketches and an adversarial attack laboratory"};
    app.require_subcommand(1);

    SpecCli query, size, theorem, nrmse, audit;
    query.spec.kind = ExperimentKind::QuerySweep;
    size.spec.kind = ExperimentKind::SizeSweep;
    nrmse.spec.kind = ExperimentKind::EstimatorNrmse;

    query.attach(app.add_subcommand(
                     "query-sweep", "Prefix-estimate curves of the ordering attack "
                                    "across query budgets r = 4^0..4^7"),
                 false, false);
    size.attach(app.add_subcommand("size-sweep",
                                   "Prefix-estimate curves across register counts"),
                false, false);
    theorem.attach(app.add_subcommand("theorem-check",
                                      "Per-seed pass/fail attack-guarantee checks"),
                   false, true);
    nrmse.attach(app.add_subcommand("nrmse", "Estimator error over fresh seeds"), true,
                 false);
    audit.attach(app.add_subcommand("audit",
                                    "Correctness audit of the threshold responder"),
                 true, false);

    try {
        app.parse(argc, argv);
    } catch (const CLI::Success& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    try {
        if (query.cmd->parsed()) {
            query.finalize(1);
            if (!query.spec.epsilon && !query.spec.k) query.spec.epsilon = 0.1;
            return run_experiment(query.spec);
        }
        if (size.cmd->parsed()) {
            size.finalize(1);
            return run_experiment(size.spec);
        }
        if (theorem.cmd->parsed()) {
            theorem.finalize(10);
            if (theorem.which == "standard")
                theorem.spec.kind = ExperimentKind::StandardTheorem;
            else if (theorem.which == "symmetric")
                theorem.spec.kind = ExperimentKind::SymmetricTheorem;
            else if (theorem.which == "adaptive")
                theorem.spec.kind = ExperimentKind::AdaptiveTheorem;
            else
                throw ConfigError("which must be standard, symmetric or adaptive");
            return run_experiment(theorem.spec);
        }
        if (nrmse.cmd->parsed()) {
            nrmse.finalize(1);
            if (!nrmse.spec.epsilon && !nrmse.spec.k) nrmse.spec.k = 64;
            return run_experiment(nrmse.spec);
        }
        if (audit.cmd->parsed()) {
            audit.finalize(1);
            return run_audit(audit.spec);
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 2;
}
