#include "bresse/cli.hpp"

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <iostream>
#include <map>
#include <sstream>

#include <fmt/format.h>

#include "CLI11.hpp"
#include "bresse/decay_lab.hpp"
#include "bresse/io.hpp"
#include "bresse/lyapunov.hpp"
#include "bresse/spectral.hpp"

namespace bresse {

namespace {

struct SchemaError : PreconditionError {
    using PreconditionError::PreconditionError;
};

enum class Verbosity { quiet, info, debug };

Verbosity verbosity() {
    const char* v = std::getenv("DISSPEC_LOG");
    if (!v) return Verbosity::info;
    const std::string s(v);
    if (s == "quiet" || s == "0" || s == "error") return Verbosity::quiet;
    if (s == "debug" || s == "2") return Verbosity::debug;
    return Verbosity::info;
}

template <class... Args>
void log_at(Verbosity level, fmt::format_string<Args...> f, Args&&... args) {
    if (verbosity() < level) return;
    std::cerr << "disspec: " << fmt::format(f, std::forward<Args>(args)...) << '\n';
}

void check_keys(const nlohmann::json& j, std::initializer_list<const char*> allowed, const std::string& where) {
    if (!j.is_object()) throw SchemaError(where + ": expected a JSON object");
    for (auto it = j.begin(); it != j.end(); ++it) {
        bool known = false;
        for (const char* k : allowed) known = known || it.key() == k;
        if (!known) throw SchemaError(fmt::format("{}: unknown key '{}'", where, it.key()));
    }
}

double get_number(const nlohmann::json& o, const char* key, double fallback) {
    if (!o.contains(key)) return fallback;
    if (!o.at(key).is_number()) throw SchemaError(fmt::format("options: '{}' must be a number", key));
    return o.at(key).get<double>();
}

int get_int(const nlohmann::json& o, const char* key, int fallback) {
    if (!o.contains(key)) return fallback;
    if (!o.at(key).is_number_integer()) throw SchemaError(fmt::format("options: '{}' must be an integer", key));
    return o.at(key).get<int>();
}

std::vector<double> log_space(double a, double b, int n) {
    std::vector<double> out(n);
    for (int i = 0; i < n; ++i) out[i] = a * std::pow(b / a, n == 1 ? 0.0 : double(i) / (n - 1));
    return out;
}

std::string iso_timestamp() {
    const std::time_t now = std::time(nullptr);
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

std::string theorem_for(const SystemParams& p) {
    if (p.gamma2 == 0) return "3.1";
    if (p.gamma1 == 0) return "5.1";
    return "4.1";
}

/// Options block merged with params into an experiment description.
Experiment experiment_from_options(const SystemParams& p, nlohmann::json opts) {
    opts["params"] = p;
    return experiment_from_json(opts);
}

struct Context {
    SystemParams params;
    nlohmann::json options = nlohmann::json::object();
    CliOptions cli;
    std::vector<std::string> artifacts;

    std::string path(const std::string& name) const { return (std::filesystem::path(cli.out) / name).string(); }
    void write(const std::string& name, const std::string& content) {
        atomic_write(path(name), content);
        artifacts.push_back(name);
    }
};

nlohmann::json cmd_spectrum(Context& c) {
    check_keys(c.options, {"xi_min", "xi_max", "n"}, "spectrum options");
    const double lo = get_number(c.options, "xi_min", -10.0), hi = get_number(c.options, "xi_max", 10.0);
    const int n = get_int(c.options, "n", 201);
    if (!(hi > lo) || n < 2) throw PreconditionError("spectrum: need xi_min < xi_max and n >= 2");
    std::vector<double> grid(n);
    for (int i = 0; i < n; ++i) grid[i] = lo + (hi - lo) * double(i) / (n - 1);
    const auto scan = spectrum_scan(c.params, grid, c.cli.threads);
    c.write("spectrum.csv", spectra_csv(scan));
    double worst = -1e300;
    for (const auto& s : scan) worst = std::max(worst, s.max_real_part);
    return {{"n", n}, {"xi_min", lo}, {"xi_max", hi}, {"max_re", worst}};
}

nlohmann::json cmd_asymptotics(Context& c) {
    check_keys(c.options, {}, "asymptotics options");
    const AsymptoticCoeffs low = low_freq_expansion(c.params);
    const AsymptoticCoeffs high = high_freq_expansion(c.params);
    nlohmann::json j{{"low", to_json(low)}, {"high", to_json(high)}};
    c.write("asymptotics.json", j.dump(2) + "\n");
    return j;
}

nlohmann::json cmd_classify(Context& c) {
    check_keys(c.options, {"tol"}, "classify options");
    const CardanoClass cls = cardano_classify(c.params, get_number(c.options, "tol", 1e-12));
    const nlohmann::json j = to_json(cls);
    c.write("classify.json", j.dump(2) + "\n");
    return j;
}

nlohmann::json cmd_gap(Context& c) {
    check_keys(c.options, {"nu", "N", "initial_points"}, "gap options");
    const GapCertificate g = gap_scan(c.params, get_number(c.options, "nu", 0.05), get_number(c.options, "N", 50.0),
                                      get_int(c.options, "initial_points", 64));
    c.write("gap.json", to_json(g).dump(2) + "\n");
    nlohmann::json j{{"gap", g.gap}, {"certified", g.certified}, {"refinement_depth", g.refinement_depth}};
    if (!g.certified) j["witness"] = {{"xi", g.witness_xi}, {"max_re", g.witness_re}};
    return j;
}

nlohmann::json cmd_evolve(Context& c) {
    nlohmann::json opts = c.options;
    check_keys(opts, {"profile", "grid", "t", "energy_dt"}, "evolve options");
    const double t = get_number(opts, "t", 1.0);
    const double dt = get_number(opts, "energy_dt", 1e-4);
    if (!(t >= 0)) throw PreconditionError("evolve: t must be >= 0");
    opts.erase("t");
    opts.erase("energy_dt");
    const Experiment e = experiment_from_options(c.params, opts);
    FourierState s0 = initial_state(e.params, e.profile, make_grid(e.grid));
    s0.grid_descriptor = grid_json(e.grid);
    const FourierState s = evolve(s0, t, c.cli.threads);
    write_state(s, c.path("state"));
    c.artifacts.push_back("state.csv");
    c.artifacts.push_back("state.json");
    const EnergyAudit audit = energy_audit(s, dt, c.cli.threads);
    double e0 = 0, e1 = 0;
    for (std::size_t i = 1; i < s.grid.size(); ++i) {
        const double h = s.grid[i] - s.grid[i - 1];
        e0 += 0.5 * h * (s0.values[i].squaredNorm() + s0.values[i - 1].squaredNorm());
        e1 += 0.5 * h * (s.values[i].squaredNorm() + s.values[i - 1].squaredNorm());
    }
    return {{"t", t},
            {"norm2_initial", e0},
            {"norm2_final", e1},
            {"hermitian_defect", hermitian_defect(s)},
            {"energy_residual", audit.max_residual},
            {"energy_dt", dt}};
}

nlohmann::json cmd_lyapunov(Context& c) {
    check_keys(c.options, {"xi", "horizon", "random_states"}, "lyapunov-audit options");
    std::vector<double> xis = log_space(1e-2, 1e2, 20);
    if (c.options.contains("xi")) {
        xis.clear();
        for (const auto& v : c.options.at("xi")) {
            if (!v.is_number()) throw SchemaError("lyapunov-audit options: xi must be numbers");
            xis.push_back(v.get<double>());
        }
    }
    const double horizon = get_number(c.options, "horizon", 10.0);
    const int states = get_int(c.options, "random_states", 100);
    const LyapunovConstants k = search_constants(c.params);
    nlohmann::json audits = nlohmann::json::array();
    int violations = 0;
    for (double xi : xis) {
        const AuditReport r = audit_inequality(c.params, k, xi, horizon, states, c.cli.seed);
        violations += r.violations;
        audits.push_back(to_json(r));
        log_at(Verbosity::debug, "lyapunov xi={} violations={}", xi, r.violations);
    }
    nlohmann::json gron = nlohmann::json::array();
    for (double xi : xis) gron.push_back(gronwall_ratio(c.params, k, xi, log_space(1e-2, 1e3, 30)));
    nlohmann::json j{{"constants", to_json(k)}, {"audits", audits}, {"gronwall_ratio", gron}, {"violations", violations}};
    c.write("lyapunov.json", j.dump(2) + "\n");
    return {{"c0", k.c0}, {"c4", k.c4}, {"d0", k.d0}, {"violations", violations}, {"frequencies", xis.size()},
            {"states_per_frequency", states + 6}};
}

nlohmann::json cmd_decay(Context& c) {
    const Experiment e = experiment_from_options(c.params, c.options);
    const auto fits = run_decay(e, c.cli.threads);
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& f : fits) arr.push_back(to_json(f));
    c.write("decay.json", nlohmann::json{{"experiment", to_json(e)}, {"fits", arr}}.dump(2) + "\n");
    nlohmann::json summary = nlohmann::json::array();
    for (const auto& f : fits)
        summary.push_back({{"j", f.j},
                           {"exponent", f.exponent},
                           {"max_residual", f.max_residual},
                           {"monotone", f.monotone},
                           {"fit_window", {f.fit_t0, f.fit_t1}}});
    return {{"profile", to_json(e)["profile"]["kind"]}, {"fits", summary}};
}

nlohmann::json cmd_synthesize(Context& c) {
    nlohmann::json opts = c.options;
    FrequencyPartition part;
    part.nu = get_number(opts, "nu", part.nu);
    part.N = get_number(opts, "N", part.N);
    const int ell = get_int(opts, "ell", 0);
    opts.erase("nu");
    opts.erase("N");
    opts.erase("ell");
    const Experiment e = experiment_from_options(c.params, opts);
    const SynthesisReport r = three_region_synthesis(e, part, ell, c.cli.threads);
    c.write("synthesis.json", to_json(r).dump(2) + "\n");
    return {{"ell", ell},
            {"nu", part.nu},
            {"N", part.N},
            {"power_majorant", r.fit.power_majorant},
            {"power_true", r.fit.power_true},
            {"expected_power", r.fit.expected_power},
            {"expected_loss", r.fit.expected_loss},
            {"dominated", r.dominated},
            {"low_exponent", r.low_fit.exponent},
            {"gap", r.gap.gap}};
}

const std::map<std::string, nlohmann::json (*)(Context&)>& commands() {
    static const std::map<std::string, nlohmann::json (*)(Context&)> table{
        {"spectrum", cmd_spectrum}, {"asymptotics", cmd_asymptotics}, {"classify", cmd_classify},
        {"gap", cmd_gap},           {"evolve", cmd_evolve},           {"lyapunov-audit", cmd_lyapunov},
        {"decay", cmd_decay},       {"synthesize", cmd_synthesize}};
    return table;
}

nlohmann::json error_json(const std::string& kind, const std::string& message, int code) {
    return {{"status", "error"}, {"kind", kind}, {"message", message}, {"exit_code", code}};
}

RunResult run_report(const nlohmann::json& options, const CliOptions& cli) {
    check_keys(options, {"log"}, "report options");
    std::string log = (std::filesystem::path(cli.out) / "runs.jsonl").string();
    if (options.contains("log")) {
        if (!options.at("log").is_string()) throw SchemaError("report options: 'log' must be a string");
        log = options.at("log").get<std::string>();
    }
    if (!std::filesystem::exists(log)) throw PreconditionError(fmt::format("report: run log '{}' does not exist", log));
    int skipped = 0;
    const std::string md = render_report(read_file(log), &skipped);
    atomic_write((std::filesystem::path(cli.out) / "report.md").string(), md);
    std::cout << md;
    RunResult r;
    r.record = {{"command", "report"}, {"skipped", skipped}, {"artifacts", {"report.md"}}};
    return r;
}

}  // namespace

std::string config_hash(const nlohmann::json& config) {
    std::uint64_t h = 1469598103934665603ull;
    for (unsigned char ch : config.dump()) {
        h ^= ch;
        h *= 1099511628211ull;
    }
    return fmt::format("{:016x}", h);
}

RunResult dispatch(const nlohmann::json& config, const CliOptions& opts_in) {
    const auto t0 = std::chrono::steady_clock::now();
    CliOptions opts = opts_in;
    try {
        if (!config.is_object() || config.empty()) throw SchemaError("config: expected a non-empty JSON object");
        check_keys(config, {"command", "params", "options", "seed"}, "config");
        if (!config.contains("command") || !config.at("command").is_string())
            throw SchemaError("config: missing string 'command'");
        const std::string command = config.at("command").get<std::string>();
        if (config.contains("seed")) {
            const auto& sj = config.at("seed");
            if (!sj.is_number_integer() || (!sj.is_number_unsigned() && sj.get<std::int64_t>() < 0))
                throw SchemaError("config: 'seed' must be a non-negative integer");
            opts.seed = config.at("seed").get<std::uint64_t>();
        }
        const nlohmann::json options = config.value("options", nlohmann::json::object());
        if (!options.is_object()) throw SchemaError("config: 'options' must be an object");
        if (command == "report") return run_report(options, opts);

        const auto it = commands().find(command);
        if (it == commands().end()) throw SchemaError(fmt::format("config: unknown command '{}'", command));
        if (!config.contains("params")) throw SchemaError("config: missing 'params'");
        Context ctx;
        try {
            ctx.params = config.at("params").get<SystemParams>();
        } catch (const PreconditionError& e) {
            throw SchemaError(e.what());
        }
        ctx.options = options;
        ctx.cli = opts;
        log_at(Verbosity::info, "{} a={} k={} l={} gamma1={} gamma2={}", command, ctx.params.a, ctx.params.k,
               ctx.params.l, ctx.params.gamma1, ctx.params.gamma2);
        nlohmann::json results = it->second(ctx);

        nlohmann::json canonical = config;
        canonical["seed"] = opts.seed;
        RunResult r;
        r.record = {{"command", command},
                    {"config_hash", config_hash(canonical)},
                    {"seed", opts.seed},
                    {"params", ctx.params},
                    {"theorem", theorem_for(ctx.params)},
                    {"results", results},
                    {"artifacts", ctx.artifacts}};
        const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        nlohmann::json logged = r.record;
        logged["timing"] = {{"wall_time_s", wall}, {"timestamp", iso_timestamp()}};
        append_line((std::filesystem::path(opts.out) / "runs.jsonl").string(), logged.dump());
        r.record = logged;
        log_at(Verbosity::info, "{} done in {:.2f} s", command, wall);
        return r;
    } catch (const SchemaError& e) {
        return {2, error_json("schema", e.what(), 2)};
    } catch (const nlohmann::json::exception& e) {
        return {2, error_json("schema", e.what(), 2)};
    } catch (const RegimeError& e) {
        return {2, error_json("regime", e.what(), 2)};
    } catch (const PreconditionError& e) {
        return {2, error_json("precondition", e.what(), 2)};
    } catch (const NumericalError& e) {
        return {1, error_json("numerical", e.what(), 1)};
    } catch (const std::exception& e) {
        return {1, error_json("internal", e.what(), 1)};
    }
}

namespace {

struct Row {
    std::string theorem, params, quantity, expected, fitted, verdict;
};

std::string params_label(const nlohmann::json& p) {
    return fmt::format("({}, {}, {}, {}, {})", p.at("a").get<double>(), p.at("k").get<double>(), p.at("l").get<double>(),
                       p.at("gamma1").get<double>(), p.at("gamma2").get<double>());
}

std::vector<Row> rows_for(const nlohmann::json& rec) {
    std::vector<Row> rows;
    const std::string command = rec.at("command").get<std::string>();
    const std::string theorem = rec.at("theorem").get<std::string>();
    const std::string label = params_label(rec.at("params"));
    const auto& res = rec.at("results");
    if (command == "decay") {
        const std::string kind = res.at("profile").get<std::string>();
        for (const auto& f : res.at("fits")) {
            const int j = f.at("j").get<int>();
            const double fitted = f.at("exponent").get<double>();
            Row r{theorem, label, fmt::format("L2 exponent, j={} ({})", j, kind), "", fmt::format("{:.4f}", fitted), ""};
            if (theorem == "3.1") {
                r.expected = ">= -0.02";
                r.verdict = fitted >= -0.02 ? "PASS" : "FAIL";
            } else if (kind == "gaussian" || kind == "box") {
                const double expected = -0.25 - 0.5 * j;
                r.expected = fmt::format("{:.2f}", expected);
                r.verdict = std::abs(fitted - expected) <= 0.1 * std::abs(expected) ? "PASS" : "FAIL";
            } else {
                r.expected = "n/a";
                r.verdict = "n/a";
            }
            rows.push_back(r);
        }
    } else if (command == "synthesize") {
        const double expected = res.at("expected_power").get<double>();
        const double fitted = res.at("power_majorant").get<double>();
        rows.push_back({theorem, label, "high-region |xi|-power", fmt::format("{:.1f}", expected),
                        fmt::format("{:.3f}", fitted), std::abs(fitted - expected) <= 0.2 ? "PASS" : "FAIL"});
        rows.push_back({theorem, label, "bound dominates", "true", res.at("dominated").get<bool>() ? "true" : "false",
                        res.at("dominated").get<bool>() ? "PASS" : "FAIL"});
    } else if (command == "lyapunov-audit") {
        const int v = res.at("violations").get<int>();
        rows.push_back({theorem, label, "Lyapunov violations", "0", std::to_string(v), v == 0 ? "PASS" : "FAIL"});
    } else if (command == "gap") {
        const bool cert = res.at("certified").get<bool>();
        rows.push_back({theorem, label, "middle-frequency gap", "> 0", fmt::format("{:.4g}", res.at("gap").get<double>()),
                        cert ? "PASS" : "REFUSED"});
    }
    return rows;
}

}  // namespace

std::string render_report(const std::string& jsonl, int* skipped) {
    std::map<std::string, std::vector<Row>> groups;
    int bad = 0;
    std::istringstream in(jsonl);
    std::string line;
    while (std::getline(in, line)) {
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        try {
            const auto rec = nlohmann::json::parse(line);
            for (auto& r : rows_for(rec)) groups[r.theorem].push_back(r);
        } catch (const std::exception&) {
            ++bad;
        }
    }
    if (skipped) *skipped = bad;
    std::string out = "# Run summary\n\n";
    if (groups.empty()) {
        out += "| theorem | params (a, k, l, gamma1, gamma2) | quantity | expected | fitted | verdict |\n";
        out += "|---|---|---|---|---|---|\n";
    }
    for (const auto& [theorem, rows] : groups) {
        out += fmt::format("## Theorem {}\n\n", theorem);
        out += "| theorem | params (a, k, l, gamma1, gamma2) | quantity | expected | fitted | verdict |\n";
        out += "|---|---|---|---|---|---|\n";
        for (const auto& r : rows)
            out += fmt::format("| {} | {} | {} | {} | {} | {} |\n", r.theorem, r.params, r.quantity, r.expected, r.fitted,
                               r.verdict);
        out += "\n";
    }
    if (bad > 0) out += fmt::format("Skipped {} malformed record(s).\n", bad);
    return out;
}

int run_cli(int argc, char** argv) {
    CLI::App app{"disspec: spectral decay laboratory for the damped Bresse system"};
    std::string config_path, out;
    std::uint64_t seed = 1;
    int threads = 1;
    app.add_option("--config", config_path, "JSON run configuration");
    app.add_option("--out", out, "output directory (default: out)");
    auto* seed_opt = app.add_option("--seed", seed, "RNG seed for random-state audits");
    app.add_option("--threads", threads, "worker threads")->check(CLI::PositiveNumber);
    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::cout << error_json("schema", e.what(), 2).dump() << '\n';
        return 2;
    }
    CliOptions opts;
    opts.out = out.empty() ? "out" : out;
    opts.threads = threads;
    opts.seed = seed;

    nlohmann::json config;
    RunResult result;
    try {
        if (config_path.empty()) throw SchemaError("missing --config");
        std::string text;
        try {
            text = read_file(config_path);
        } catch (const std::exception& e) {
            throw SchemaError(fmt::format("cannot read config '{}': {}", config_path, e.what()));
        }
        if (text.find_first_not_of(" \t\r\n") == std::string::npos) throw SchemaError("config: empty document");
        try {
            config = nlohmann::json::parse(text);
        } catch (const nlohmann::json::parse_error& e) {
            throw SchemaError(fmt::format("config: invalid JSON: {}", e.what()));
        }
        if (*seed_opt && config.is_object()) config["seed"] = seed;
        result = dispatch(config, opts);
    } catch (const SchemaError& e) {
        result = {2, error_json("schema", e.what(), 2)};
    }
    if (result.exit_code != 0) {
        std::cout << result.record.dump() << '\n';
        try {
            atomic_write((std::filesystem::path(opts.out) / "error.json").string(), result.record.dump(2) + "\n");
        } catch (const std::exception&) {
        }
        log_at(Verbosity::info, "{}", result.record.at("message").get<std::string>());
    } else if (result.record.value("command", "") != "report") {
        std::cout << result.record.dump() << '\n';
    }
    return result.exit_code;
}

}  // namespace bresse
