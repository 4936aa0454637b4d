#ifndef PMLE_EVALUATION_HPP
#define PMLE_EVALUATION_HPP

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <tuple>
#include <vector>

#include "pmle/common.hpp"
#include "pmle/distributions.hpp"
#include "pmle/io.hpp"
#include "pmle/pipeline.hpp"

namespace pmle {

struct Scenario {
    TrueDistribution truth = TrueDistribution::parse("normal");
    std::string error_kind = "normal";  // normal | laplace | beta
    double C = 1.0;
    std::size_t n = 100;
    std::size_t replicates = 20;
    std::uint64_t seed = 1;

    void validate() const
    {
        ErrorModel::family(error_kind, 1.0);
        if (!(C > 0.0) || !std::isfinite(C)) throw Error("scenario scale C must be positive");
        if (n < 2) throw Error("scenario sample size must be at least 2");
        if (replicates == 0) throw Error("scenario needs at least one replicate");
    }

    using Key = std::tuple<std::string, std::string, std::size_t, double>;
    Key key() const { return {std::string(truth.name()), error_kind, n, C}; }
};

struct ScenarioResult {
    std::vector<double> ise;  // successful replicates, in replicate order
    std::vector<std::size_t> replicate;
    std::size_t failures = 0;
    std::vector<std::string> failure_messages;
    double mise = 0.0;
    double se = 0.0;

    bool failure_flag(std::size_t replicates) const { return failures * 10 > replicates; }
};

/// Rectangle-rule ISE over 1000 points spanning the truth's central range and the estimate's support.
inline double ise(const DensityEstimate& est, const TrueDistribution& truth, std::size_t points = 1000)
{
    const auto [tl, tu] = truth.central_range();
    const double a = std::min(tl, est.support.lower), b = std::max(tu, est.support.upper);
    const auto xs = linspace(a, b, points);
    const double dx = (b - a) / static_cast<double>(points - 1);
    double s = 0.0;
    for (double x : xs) {
        const double d = est(x) - truth.density(x);
        s += d * d;
    }
    return s * dx;
}

/// Replicate r: x from the truth, y = x + C e, an independent pure-error sample of size n for the
/// empirical error model, then fit and ISE. Replicates run on config.threads workers.
inline ScenarioResult run_scenario(const Scenario& s, const FitConfig& config)
{
    s.validate();
    const ErrorModel noise = ErrorModel::family(s.error_kind, s.C);
    std::vector<double> values(s.replicates, 0.0);
    std::vector<std::string> errors(s.replicates);
    FitConfig inner = config;
    const unsigned outer = std::max(1u, std::min<unsigned>(config.threads, static_cast<unsigned>(s.replicates)));
    inner.threads = std::max(1u, config.threads / outer);
    parallel_for(s.replicates, outer, [&](std::size_t r) {
        Rng rng = child_stream(s.seed, r);
        try {
            Sample y = s.truth.sample(s.n, rng);
            const Sample e = noise.sample(s.n, rng);
            for (std::size_t i = 0; i < s.n; ++i) y[i] += e[i];
            const ErrorModel model = ErrorModel::empirical(noise.sample(s.n, rng));
            FitConfig c = inner;
            c.seed = rng();
            const auto est = fit(y, model, c);
            values[r] = ise(est, s.truth);
        } catch (const Error& e) {
            errors[r] = e.what();
        }
    });
    ScenarioResult out;
    for (std::size_t r = 0; r < s.replicates; ++r) {
        if (!errors[r].empty()) {
            ++out.failures;
            out.failure_messages.push_back("replicate " + std::to_string(r) + ": " + errors[r]);
            continue;
        }
        out.ise.push_back(values[r]);
        out.replicate.push_back(r);
    }
    const auto k = out.ise.size();
    if (k > 0) {
        for (double v : out.ise) out.mise += v;
        out.mise /= static_cast<double>(k);
    }
    if (k > 1) {
        double ss = 0.0;
        for (double v : out.ise) ss += (v - out.mise) * (v - out.mise);
        out.se = std::sqrt(ss / static_cast<double>(k - 1)) / std::sqrt(static_cast<double>(k));
    }
    return out;
}

using ResultTable = std::map<Scenario::Key, ScenarioResult>;

inline std::string format_table(const ResultTable& results)
{
    std::ostringstream out;
    out << "truth,error,n,C,mise,se,failures\n";
    for (const auto& [key, r] : results) {
        const auto& [truth, error, n, C] = key;
        out << truth << ',' << error << ',' << n << ',' << io::format_double(C) << ',' << io::format_double(r.mise)
            << ',' << io::format_double(r.se) << ',' << r.failures << '\n';
    }
    return out.str();
}

inline void emit_table(const ResultTable& results, const std::filesystem::path& path)
{
    io::write_atomic(path, format_table(results));
}

/// Per-replicate ISE listing: truth,error,n,C,replicate,ise.
inline std::string format_ise_listing(const ResultTable& results)
{
    std::ostringstream out;
    out << "truth,error,n,C,replicate,ise\n";
    for (const auto& [key, r] : results) {
        const auto& [truth, error, n, C] = key;
        for (std::size_t i = 0; i < r.ise.size(); ++i)
            out << truth << ',' << error << ',' << n << ',' << io::format_double(C) << ',' << r.replicate[i] << ','
                << io::format_double(r.ise[i]) << '\n';
    }
    return out.str();
}

namespace detail {

inline std::vector<std::string> split_list(const std::string& v)
{
    std::vector<std::string> out;
    std::stringstream ss(v);
    std::string item;
    while (std::getline(ss, item, ',')) {
        const auto b = item.find_first_not_of(" \t");
        if (b == std::string::npos) continue;
        out.push_back(item.substr(b, item.find_last_not_of(" \t") - b + 1));
    }
    return out;
}

template <typename T>
T parse_number(const std::string& text, const std::string& where)
{
    std::istringstream in(text);
    T v{};
    in >> v;
    if (!in || !in.eof()) throw Error(where + ": bad number '" + text + "'");
    return v;
}

}  // namespace detail

/// Parses `[scenario]` sections of key=value lines. truth, error, n and c accept comma-separated
/// lists and expand to their product; replicates and seed are scalars. `#` starts a comment.
/// Keys before the first section set defaults for every section.
inline std::vector<Scenario> parse_scenarios(std::istream& in, std::uint64_t default_seed = 1)
{
    using Section = std::map<std::string, std::string>;
    Section defaults;
    std::vector<Section> sections;
    std::string line;
    std::size_t lineno = 0;
    Section* current = &defaults;
    while (std::getline(in, line)) {
        ++lineno;
        if (const auto h = line.find('#'); h != std::string::npos) line.resize(h);
        const auto b = line.find_first_not_of(" \t\r");
        if (b == std::string::npos) continue;
        line = line.substr(b, line.find_last_not_of(" \t\r") - b + 1);
        if (line.front() == '[') {
            if (line != "[scenario]") throw Error("line " + std::to_string(lineno) + ": unknown section " + line);
            sections.emplace_back();
            current = &sections.back();
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos) throw Error("line " + std::to_string(lineno) + ": expected key=value");
        std::string key = line.substr(0, eq), value = line.substr(eq + 1);
        key.erase(key.find_last_not_of(" \t") + 1);
        const auto vb = value.find_first_not_of(" \t");
        value = vb == std::string::npos ? "" : value.substr(vb);
        static const std::array<std::string_view, 6> known{"truth", "error", "n", "c", "replicates", "seed"};
        if (std::find(known.begin(), known.end(), key) == known.end())
            throw Error("line " + std::to_string(lineno) + ": unknown key '" + key + "'");
        (*current)[key] = value;
    }
    std::vector<Scenario> out;
    for (std::size_t si = 0; si < sections.size(); ++si) {
        Section sec = defaults;
        for (const auto& [k, v] : sections[si]) sec[k] = v;
        const std::string where = "scenario " + std::to_string(si + 1);
        for (const char* k : {"truth", "error", "n", "c", "replicates"})
            if (!sec.count(k)) throw Error(where + ": missing key '" + k + "'");
        const auto reps = detail::parse_number<std::size_t>(sec["replicates"], where);
        const auto seed = sec.count("seed") ? detail::parse_number<std::uint64_t>(sec["seed"], where) : default_seed;
        for (const auto& t : detail::split_list(sec["truth"]))
            for (const auto& e : detail::split_list(sec["error"]))
                for (const auto& n : detail::split_list(sec["n"]))
                    for (const auto& c : detail::split_list(sec["c"])) {
                        Scenario s;
                        s.truth = TrueDistribution::parse(t);
                        s.error_kind = e;
                        s.n = detail::parse_number<std::size_t>(n, where);
                        s.C = detail::parse_number<double>(c, where);
                        s.replicates = reps;
                        s.seed = seed;
                        s.validate();
                        out.push_back(s);
                    }
    }
    return out;
}

}  // namespace pmle

#endif
