// bpre_lab: command-line front end for the BPRE numerical laboratory.
//
// Exit codes: 0 success, 2 invalid input, 3 numerical failure, 1 verification failure.

#include <chrono>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "bpre/env_io.hpp"
#include "bpre/exact_engine.hpp"
#include "bpre/exponents.hpp"
#include "bpre/montecarlo.hpp"
#include "bpre/qseries.hpp"
#include "bpre/report.hpp"
#include "bpre/verification.hpp"

namespace {

using nlohmann::ordered_json;

constexpr const char* kVersion = "0.1.0";
constexpr int kExitOk = 0;
constexpr int kExitVerifyFailed = 1;
constexpr int kExitInput = 2;
constexpr int kExitNumerical = 3;

struct Params {
    std::string env_file;
    int k = 1;
    int n = 10;
    std::size_t J = 0;
    std::vector<double> r;
    double a = 1.0;
    double t = 1.0;
    double p = 1.0;
    std::optional<std::uint64_t> seed;
    std::int64_t paths = 100000;
    int gens = 25;
    std::int64_t threshold = 1000000;
    unsigned threads = 0;
    std::string out;
    std::string samples_out;
    std::string format;
    std::string subtask;
    std::string suite;
};

std::uint64_t resolve_seed(const Params& p) {
    if (p.seed) return *p.seed;
    if (const char* env = std::getenv("BPRE_LAB_SEED")) {
        try {
            return std::stoull(env);
        } catch (const std::exception&) {
            throw bpre::Error(bpre::ErrorKind::BadParams, "BPRE_LAB_SEED is not an unsigned integer");
        }
    }
    return 1;
}

class Manifest {
public:
    Manifest(std::string command, const Params& p) : command_(std::move(command)), start_(Clock::now()) {
        doc_["command"] = command_;
        doc_["env_file"] = p.env_file;
        doc_["parameters"] = ordered_json::object();
        doc_["tool_version"] = kVersion;
        doc_["seed"] = nullptr;
        doc_["results"] = ordered_json::object();
    }

    template <typename T>
    void param(const std::string& key, const T& value) { doc_["parameters"][key] = value; }
    void seed(std::uint64_t s) { doc_["seed"] = s; }
    template <typename T>
    void result(const std::string& key, const T& value) { doc_["results"][key] = value; }

    ordered_json finish() {
        doc_["wall_clock_seconds"] = std::chrono::duration<double>(Clock::now() - start_).count();
        return doc_;
    }

private:
    using Clock = std::chrono::steady_clock;
    std::string command_;
    Clock::time_point start_;
    ordered_json doc_;
};

// Writes CSV text to --out (with a sidecar manifest) or to stdout (manifest on stderr).
void emit_csv(const Params& p, const std::string& csv, Manifest& manifest) {
    const auto m = manifest.finish();
    if (p.out.empty()) {
        std::cout << csv;
        std::cerr << m.dump() << '\n';
        return;
    }
    std::ofstream(p.out) << csv;
    std::ofstream(p.out + ".manifest.json") << m.dump(2) << '\n';
}

void emit_json(const Params& p, ordered_json doc, Manifest& manifest) {
    doc["manifest"] = manifest.finish();
    const std::string text = doc.dump(2) + "\n";
    if (p.out.empty()) {
        std::cout << text;
    } else {
        std::ofstream(p.out) << text;
    }
}

std::string resolved_format(const Params& p, const char* fallback) {
    return p.format.empty() ? fallback : p.format;
}

int cmd_exact(const Params& p) {
    Manifest manifest("exact", p);
    const auto env = bpre::load_environment(p.env_file);
    const std::size_t J = p.J == 0 ? bpre::default_truncation(env, p.k, p.n) : p.J;
    const auto dist = bpre::exact_dist(env, p.k, p.n, J);
    manifest.param("k", p.k);
    manifest.param("n", p.n);
    manifest.param("J", J);
    manifest.result("deficit", dist.deficit);

    if (resolved_format(p, "csv") == "json") {
        ordered_json doc;
        doc["k"] = p.k;
        doc["n"] = p.n;
        doc["J"] = J;
        doc["deficit"] = dist.deficit;
        auto& rows = doc["probs"] = ordered_json::array();
        for (std::size_t j = 0; j < dist.probs.size(); ++j) {
            if (dist.probs[j] != 0.0) rows.push_back({{"j", j}, {"prob", dist.probs[j]}});
        }
        emit_json(p, std::move(doc), manifest);
        return kExitOk;
    }
    std::ostringstream csv;
    bpre::write_distribution_csv(csv, dist);
    emit_csv(p, csv.str(), manifest);
    return kExitOk;
}

int cmd_qtable(const Params& p) {
    Manifest manifest("qtable", p);
    const auto env = bpre::load_environment(p.env_file);
    const std::size_t J = p.J == 0 ? 400 : p.J;
    if (!env.no_extinction()) {
        throw bpre::Error(bpre::ErrorKind::ExtinctionPossible, "q-series need p0 = 0 on every atom");
    }
    if (J < static_cast<std::size_t>(p.k)) {
        throw bpre::Error(bpre::ErrorKind::TruncationTooSmall, "J below k");
    }
    const auto kernel = bpre::build_kernel(env, J);
    const auto qt = bpre::q_table(env, kernel, p.k);
    const double residual = bpre::recurrence_residual(qt, kernel);
    manifest.param("k", p.k);
    manifest.param("J", J);
    manifest.result("gamma_k", qt.gamma);
    manifest.result("residual", residual);

    if (resolved_format(p, "csv") == "json") {
        const std::vector<double> grid{0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7};
        const auto fe = bpre::functional_eq_residual(qt, env, grid);
        ordered_json doc;
        doc["k"] = qt.k;
        doc["J"] = qt.truncation;
        doc["gamma_k"] = qt.gamma;
        doc["residual"] = residual;
        doc["q"] = qt.q;
        doc["functional_eq"] = ordered_json::parse(bpre::functional_eq_report_json(fe));
        emit_json(p, std::move(doc), manifest);
        return kExitOk;
    }
    std::ostringstream csv;
    bpre::write_qtable_csv(csv, qt);
    emit_csv(p, csv.str(), manifest);
    return kExitOk;
}

int cmd_exponents(const Params& p) {
    Manifest manifest("exponents", p);
    const auto env = bpre::load_environment(p.env_file);
    const auto report = bpre::exponent_report(env, p.k, p.p, p.r);
    manifest.param("k", p.k);
    manifest.param("p", p.p);
    manifest.param("r", p.r);
    emit_json(p, ordered_json::parse(bpre::exponent_report_json(report)), manifest);
    return kExitOk;
}

ordered_json estimate_json(const bpre::EstimateWithCI& e) {
    return {{"estimate", e.point},
            {"std_error", e.std_error},
            {"n_effective", e.n_effective},
            {"method", std::string(bpre::to_string(e.method))}};
}

int cmd_mc(const Params& p) {
    Manifest manifest("mc", p);
    const auto env = bpre::load_environment(p.env_file);
    bpre::SimConfig cfg;
    cfg.seed = resolve_seed(p);
    cfg.n_paths = p.paths;
    cfg.n_gens = p.gens;
    cfg.exact_pop_threshold = p.threshold;
    cfg.k = p.k;
    cfg.threads = p.threads;

    ordered_json echo{{"k", cfg.k},
                      {"n_paths", cfg.n_paths},
                      {"n_gens", cfg.n_gens},
                      {"exact_pop_threshold", cfg.exact_pop_threshold}};
    ordered_json doc;
    doc["subtask"] = p.subtask;

    if (p.subtask == "harmonic") {
        echo["a"] = p.a;
        const auto res = bpre::estimate_harmonic_moment_W(env, p.a, cfg);
        doc.update(estimate_json(res.estimate));
        auto& trend = doc["trend"] = ordered_json::array();
        for (const auto& [gen, est] : res.trend) {
            auto entry = estimate_json(est);
            entry["N"] = gen;
            trend.push_back(std::move(entry));
        }
    } else if (p.subtask == "laplace") {
        echo["t"] = p.t;
        doc.update(estimate_json(bpre::estimate_laplace(env, p.t, cfg)));
    } else if (p.subtask == "tilted" || p.subtask == "plain") {
        const double r = p.r.empty() ? 1.0 : p.r.front();
        echo["r"] = r;
        echo["n"] = p.n;
        cfg.tilt_r = p.subtask == "tilted" ? std::optional<double>(r) : std::nullopt;
        const auto est = p.subtask == "tilted" ? bpre::tilted_harmonic_Zn(env, r, p.n, cfg)
                                               : bpre::plain_harmonic_Zn(env, r, p.n, cfg);
        doc.update(estimate_json(est));
    } else if (p.subtask == "w") {
        const auto w = bpre::sample_W(env, cfg);
        doc.update(estimate_json(bpre::summarize(w, 1, 0)));
    } else {
        throw bpre::Error(bpre::ErrorKind::BadParams, "unknown mc subtask '" + p.subtask + "'");
    }

    if (!p.samples_out.empty()) {
        const auto w = bpre::sample_W(env, cfg);
        std::ofstream out(p.samples_out);
        out << "w\n";
        for (const double x : w) out << bpre::format_double(x) << '\n';
    }

    doc["n_paths"] = cfg.n_paths;
    doc["seed"] = cfg.seed;
    doc["config_echo"] = echo;

    manifest.seed(cfg.seed);
    manifest.param("subtask", p.subtask);
    manifest.param("config", echo);
    emit_json(p, std::move(doc), manifest);
    return kExitOk;
}

int cmd_verify(const Params& p) {
    bpre::VerifyOptions options;
    options.seed = p.seed || std::getenv("BPRE_LAB_SEED") ? resolve_seed(p) : options.seed;
    options.threads = p.threads;
    if (!p.env_file.empty()) options.env = bpre::load_environment(p.env_file);

    const auto results = bpre::run_suite(p.suite, options);
    int failed = 0;
    for (const auto& r : results) {
        std::cout << bpre::format_check(r) << '\n';
        if (!r.passed) ++failed;
    }
    std::cout << results.size() - static_cast<std::size_t>(failed) << "/" << results.size() << " checks passed\n";
    return failed == 0 ? kExitOk : kExitVerifyFailed;
}

void add_env(CLI::App* cmd, Params& p, bool required = true) {
    auto* opt = cmd->add_option("--env", p.env_file, "Environment file (JSON)");
    if (required) opt->required();
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"bpre_lab: branching processes in random environment"};
    app.footer(
        "Exit codes: 0 ok, 1 verification failed, 2 invalid input, 3 numerical failure.\n"
        "Seed fallback: BPRE_LAB_SEED environment variable.");
    app.require_subcommand(1);
    app.set_version_flag("--version", kVersion);

    Params p;

    auto* exact = app.add_subcommand("exact", "Exact truncated law of Z_n as CSV (n,j,prob + deficit row)");
    add_env(exact, p);
    exact->add_option("--k", p.k, "Initial population")->check(CLI::PositiveNumber);
    exact->add_option("--n", p.n, "Generation")->check(CLI::NonNegativeNumber);
    exact->add_option("--J", p.J, "Truncation (default heuristic)");
    exact->add_option("--out", p.out, "Output path (default stdout)");
    exact->add_option("--format", p.format, "csv|json")->check(CLI::IsMember({"csv", "json"}));

    auto* qtable = app.add_subcommand("qtable", "Limiting coefficients q_{k,j} as CSV (k,j,q)");
    add_env(qtable, p);
    qtable->add_option("--k", p.k, "Initial population")->check(CLI::PositiveNumber);
    qtable->add_option("--J", p.J, "Horizon (default 400)");
    qtable->add_option("--out", p.out, "Output path (default stdout)");
    qtable->add_option("--format", p.format, "csv|json")->check(CLI::IsMember({"csv", "json"}));

    auto* exps = app.add_subcommand("exponents", "Critical exponents, rates and regime as JSON");
    add_env(exps, p);
    exps->add_option("--k", p.k, "Initial population")->check(CLI::PositiveNumber);
    exps->add_option("--p", p.p, "Moment order p for the alpha_k lower bound")->check(CLI::PositiveNumber);
    exps->add_option("--r", p.r, "Orders r at which to report c_r = E m0^{-r}");
    exps->add_option("--out", p.out, "Output path (default stdout)");
    exps->add_option("--format", p.format, "json")->check(CLI::IsMember({"json"}));

    auto* mc = app.add_subcommand("mc", "Monte-Carlo estimates as JSON");
    add_env(mc, p);
    mc->add_option("subtask", p.subtask, "harmonic|laplace|tilted|plain|w")
        ->required()
        ->check(CLI::IsMember({"harmonic", "laplace", "tilted", "plain", "w"}));
    mc->add_option("--k", p.k, "Initial population")->check(CLI::PositiveNumber);
    mc->add_option("--a", p.a, "Harmonic moment order for W");
    mc->add_option("--t", p.t, "Laplace argument");
    mc->add_option("--r", p.r, "Harmonic moment order for Z_n")->expected(1);
    mc->add_option("--n", p.n, "Generation for Z_n estimators");
    mc->add_option("--seed", p.seed, "Seed (fallback BPRE_LAB_SEED, then 1)");
    mc->add_option("--paths", p.paths, "Number of paths");
    mc->add_option("--gens", p.gens, "Generations N for W_N");
    mc->add_option("--threshold", p.threshold, "Population above which counts are Gaussian");
    mc->add_option("--threads", p.threads, "Worker threads (default: all cores)");
    mc->add_option("--samples-out", p.samples_out, "Dump W_N samples as single-column CSV");
    mc->add_option("--out", p.out, "Output path (default stdout)");
    mc->add_option("--format", p.format, "json")->check(CLI::IsMember({"json"}));

    auto* verify = app.add_subcommand("verify", "Run a verification suite and report pass/fail per check");
    add_env(verify, p, false);
    verify->add_option("suite", p.suite, "Suite name (see --help)")->required();
    verify->add_option("--seed", p.seed, "Seed for Monte-Carlo checks");
    verify->add_option("--threads", p.threads, "Worker threads");
    std::string names;
    for (const auto& s : bpre::suite_names()) names += (names.empty() ? "" : ", ") + s;
    verify->footer("Suites: " + names);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitInput;
    }

    try {
        if (*exact) return cmd_exact(p);
        if (*qtable) return cmd_qtable(p);
        if (*exps) return cmd_exponents(p);
        if (*mc) return cmd_mc(p);
        if (*verify) return cmd_verify(p);
    } catch (const bpre::Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return bpre::is_numerical(e.kind()) ? kExitNumerical : kExitInput;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitNumerical;
    }
    return kExitInput;
}
