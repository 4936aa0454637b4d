// pmle: fit, simulate and validate front end.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "pmle/evaluation.hpp"
#include "pmle/io.hpp"
#include "pmle/pipeline.hpp"
#include "pmle/theory.hpp"

namespace fs = std::filesystem;

namespace {

constexpr int kOk = 0;
constexpr int kFailure = 1;
constexpr int kUsage = 2;

struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

void require_readable(const std::string& path, const char* flag)
{
    std::ifstream in(path);
    if (!in) throw UsageError(std::string(flag) + ": cannot read '" + path + "'");
}

void require_writable_dir(const std::string& path, const char* flag)
{
    if (path.empty()) return;
    const auto dir = fs::absolute(fs::path(path)).parent_path();
    if (!fs::is_directory(dir)) throw UsageError(std::string(flag) + ": directory '" + dir.string() + "' does not exist");
}

struct FitArgs {
    std::string data, error_sample, error_family, out;
    std::optional<double> error_scale, lambda, lambda_R;
    bool cv = false;
    std::vector<double> support;
    std::size_t subsample_size = 30, n_subsamples = 0, grid_points = 1000;
    std::uint64_t seed = 1;
};

struct SimulateArgs {
    std::string scenarios, truth, error, n, c, out = "mise.csv", ise_out;
    std::optional<std::size_t> replicates;
    std::uint64_t seed = 1;
};

struct ValidateArgs {
    std::size_t sweep_size = 100;
    std::uint64_t seed = 1;
};

nlohmann::ordered_json estimate_json(const pmle::DensityEstimate& est)
{
    using nlohmann::ordered_json;
    ordered_json j;
    j["support"] = {est.support.lower, est.support.upper};
    j["grid"] = est.grid;
    j["density"] = est.values;
    ordered_json diag;
    diag["lambda"] = est.lambda;
    ordered_json history = ordered_json::array();
    for (const auto& s : est.shrink_history) history.push_back({s.lower, s.upper});
    diag["shrink_history"] = history;
    diag["shrink_limit_reached"] = est.shrink_limit_reached;
    diag["raw_integral"] = est.raw_integral;
    diag["failed_subsamples"] = est.failed_subsamples;
    ordered_json subs = ordered_json::array();
    for (const auto& f : est.per_subsample) {
        ordered_json s;
        s["converged"] = f.converged;
        s["violation_max"] = f.violation_max;
        s["lambda"] = f.lambda;
        s["iterations"] = f.iterations;
        s["redraws"] = f.redraws;
        subs.push_back(s);
    }
    diag["per_subsample"] = subs;
    j["diagnostics"] = diag;
    return j;
}

int run_fit(const FitArgs& a, unsigned threads)
{
    const bool has_sample = !a.error_sample.empty();
    const bool has_family = !a.error_family.empty() || a.error_scale.has_value();
    if (has_sample == has_family)
        throw UsageError("specify exactly one error model: --error-sample <csv> or --error-family <name> --error-scale <C>");
    if (has_family && (a.error_family.empty() || !a.error_scale))
        throw UsageError("--error-family and --error-scale must be given together");
    require_readable(a.data, "--data");
    if (has_sample) require_readable(a.error_sample, "--error-sample");
    require_writable_dir(a.out, "--out");

    pmle::FitConfig cfg;
    cfg.threads = threads;
    cfg.seed = a.seed;
    cfg.subsample_size = a.subsample_size;
    cfg.n_subsamples = a.n_subsamples;
    cfg.grid_points = a.grid_points;
    if (a.lambda) {
        cfg.lambda_mode = pmle::LambdaMode::Fixed;
        cfg.lambda = *a.lambda;
    } else if (a.cv) {
        cfg.lambda_mode = pmle::LambdaMode::CrossValidated;
    } else if (a.lambda_R) {
        cfg.R = *a.lambda_R;
    }
    if (!a.support.empty()) cfg.support = pmle::Support{a.support[0], a.support[1]};

    pmle::Sample y;
    std::optional<pmle::ErrorModel> error;
    try {
        y = pmle::io::read_sample(a.data);
        error = has_sample ? pmle::ErrorModel::empirical(pmle::io::read_sample(a.error_sample))
                           : pmle::ErrorModel::family(a.error_family, *a.error_scale);
        cfg.validate(y.size());
    } catch (const pmle::Error& e) {
        throw UsageError(e.what());
    }

    const auto est = pmle::fit(y, *error, cfg);
    const std::string text = estimate_json(est).dump(1) + "\n";
    if (a.out.empty())
        std::cout << text;
    else
        pmle::io::write_atomic(a.out, text);
    if (est.shrink_limit_reached) std::cerr << "warning: support shrinking stopped at the round limit\n";
    return kOk;
}

int run_simulate(const SimulateArgs& a, unsigned threads)
{
    std::vector<pmle::Scenario> scenarios;
    const bool inline_given = !a.truth.empty() || !a.error.empty() || !a.n.empty() || !a.c.empty() || a.replicates;
    if (!a.scenarios.empty() == inline_given)
        throw UsageError("give either --scenarios <config> or the inline --truth --error --n --c --replicates set");
    try {
        if (!a.scenarios.empty()) {
            std::ifstream in(a.scenarios);
            if (!in) throw UsageError("--scenarios: cannot read '" + a.scenarios + "'");
            scenarios = pmle::parse_scenarios(in, a.seed);
        } else {
            if (a.truth.empty() || a.error.empty() || a.n.empty() || a.c.empty() || !a.replicates)
                throw UsageError("inline scenarios need --truth, --error, --n, --c and --replicates");
            std::istringstream in("[scenario]\ntruth=" + a.truth + "\nerror=" + a.error + "\nn=" + a.n + "\nc=" + a.c +
                                  "\nreplicates=" + std::to_string(*a.replicates) + "\n");
            scenarios = pmle::parse_scenarios(in, a.seed);
        }
    } catch (const pmle::Error& e) {
        throw UsageError(e.what());
    }
    require_writable_dir(a.out, "--out");
    require_writable_dir(a.ise_out, "--ise-out");

    pmle::FitConfig cfg;
    cfg.threads = threads;
    pmle::ResultTable table;
    for (const auto& s : scenarios) {
        auto r = pmle::run_scenario(s, cfg);
        std::cerr << s.truth.name() << '/' << s.error_kind << " n=" << s.n << " C=" << s.C << ": mise=" << r.mise
                  << " se=" << r.se << " failures=" << r.failures << '/' << s.replicates
                  << (r.failure_flag(s.replicates) ? " (more than 10% failed)" : "") << '\n';
        table[s.key()] = std::move(r);
    }
    pmle::emit_table(table, a.out);
    if (!a.ise_out.empty()) pmle::io::write_atomic(a.ise_out, pmle::format_ise_listing(table));
    return kOk;
}

int run_validate(const ValidateArgs& a)
{
    namespace th = pmle::theory;
    if (a.sweep_size == 0) throw UsageError("--sweep-size must be at least 1");
    bool all = true;
    auto line = [&](const std::string& name, bool ok, std::size_t passed, std::size_t total, double margin) {
        all = all && ok;
        std::printf("%-24s %s  %zu/%zu  worst_margin=%.6g\n", name.c_str(), ok ? "PASS" : "FAIL", passed, total, margin);
    };

    {
        std::size_t passed = 0, total = 0;
        double worst = pmle::kInf;
        for (double delta : {0.1, 1.0, 5.0}) {
            const auto k = th::bump_kernel(delta);
            const double mass = th::integral(k);
            const double psi = th::smoothness(k), target = 24.0 * std::pow(delta, -5.0);
            const double rel = std::abs(psi - target) / target;
            const bool ok = std::abs(mass - 1.0) < 1e-12 && th::bump_kernel_value(delta, 0.0) == 1.0 / delta && rel < 1e-6;
            passed += ok;
            ++total;
            worst = std::min(worst, 1.0 - rel / 1e-6);
        }
        line("kernel_identities", passed == total, passed, total, worst);
    }
    for (const auto& rep : th::run_all_sweeps(a.sweep_size, a.seed)) {
        line(rep.name, rep.ok(), rep.passed, rep.instances, rep.worst_margin);
        if (!rep.ok()) std::printf("  first failure: %s\n", rep.first_failure.c_str());
    }
    {
        const auto c = th::theoretical_lambda(100.0, 1.0, 1.0, 1.0);
        const double oracle = 3.33987235057055841668550470019;
        const double rel = std::abs(c.C1 - oracle) / oracle;
        line("theorem_constants", rel < 1e-12, rel < 1e-12, 1, 1.0 - rel / 1e-12);
    }
    return all ? kOk : kFailure;
}

}  // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Penalized maximum-likelihood deconvolution density estimation"};
    app.require_subcommand(1);
    unsigned threads = 0;
    app.add_option("--threads", threads, "Worker cap (default: PMLE_THREADS, else all cores)");

    FitArgs fa;
    auto* fit = app.add_subcommand("fit", "Estimate the density of X from noisy observations");
    fit->add_option("--threads", threads, "Worker cap");
    fit->add_option("--data", fa.data, "Observations, one per line")->required();
    fit->add_option("--error-sample", fa.error_sample, "Pure error sample, one per line");
    fit->add_option("--error-family", fa.error_family, "Parametric error: normal, laplace or beta");
    fit->add_option("--error-scale", fa.error_scale, "Scale C of the parametric error");
    auto* lam = fit->add_option("--lambda", fa.lambda, "Fixed smoothing parameter");
    auto* lamR = fit->add_option("--lambda-R", fa.lambda_R, "Heuristic lambda with this R");
    auto* cv = fit->add_flag("--cv", fa.cv, "Cross-validated lambda");
    lam->excludes(lamR)->excludes(cv);
    lamR->excludes(cv);
    fit->add_option("--support", fa.support, "Fixed support l u")->expected(2);
    fit->add_option("--subsample-size", fa.subsample_size, "Basis subsample size S");
    fit->add_option("--n-subsamples", fa.n_subsamples, "Number of subsamples (default max(10, ceil(2n/S)))");
    fit->add_option("--grid-points", fa.grid_points, "Evaluation grid size");
    fit->add_option("--seed", fa.seed, "Master seed");
    fit->add_option("--out", fa.out, "Output JSON (default stdout)");

    SimulateArgs sa;
    auto* sim = app.add_subcommand("simulate", "Monte-Carlo MISE over scenario grids");
    sim->add_option("--threads", threads, "Worker cap");
    sim->add_option("--scenarios", sa.scenarios, "Scenario config file");
    sim->add_option("--truth", sa.truth, "Truth name(s), comma separated");
    sim->add_option("--error", sa.error, "Error family name(s)");
    sim->add_option("--n", sa.n, "Sample size(s)");
    sim->add_option("--c", sa.c, "Error scale(s)");
    sim->add_option("--replicates", sa.replicates, "Replicates per scenario");
    sim->add_option("--seed", sa.seed, "Seed for scenarios without their own");
    sim->add_option("--out", sa.out, "MISE table CSV");
    sim->add_option("--ise-out", sa.ise_out, "Per-replicate ISE CSV");

    ValidateArgs va;
    auto* val = app.add_subcommand("validate", "Run the numerical lemma checks");
    val->add_option("--sweep-size", va.sweep_size, "Random instances per check");
    val->add_option("--seed", va.seed, "Sweep seed");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kUsage;
    }

    threads = pmle::resolve_threads(threads);
    try {
        if (*fit) return run_fit(fa, threads);
        if (*sim) return run_simulate(sa, threads);
        return run_validate(va);
    } catch (const UsageError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kUsage;
    } catch (const pmle::Error& e) {
        std::cerr << "fit failed: " << e.what() << '\n';
        return kFailure;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kFailure;
    }
}
