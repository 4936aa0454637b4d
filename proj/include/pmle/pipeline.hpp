#ifndef PMLE_PIPELINE_HPP
#define PMLE_PIPELINE_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/SVD>

#include "pmle/basis.hpp"
#include "pmle/common.hpp"
#include "pmle/distributions.hpp"
#include "pmle/solver.hpp"

namespace pmle {

enum class LambdaMode { Fixed, Heuristic, CrossValidated };

/// ErrorRange: (l_Y - l_e, u_Y - u_e) widened by 10% per side.
/// DataHull: hull of ErrorRange's unwidened interval and (l_Y - mean e, u_Y - mean e), widened by 10%.
enum class SupportRule { ErrorRange, DataHull };

struct FitConfig {
    LambdaMode lambda_mode = LambdaMode::Heuristic;
    double lambda = 0.0;       // Fixed mode
    double R = 0.0;            // Heuristic mode; 0 picks default_R(n)
    std::size_t cv_grid = 7;   // CrossValidated mode
    std::size_t cv_folds = 5;
    std::size_t subsample_size = 30;
    std::size_t n_subsamples = 0;  // 0: max(10, ceil(2n/S))
    std::size_t constraint_points = 30;
    std::optional<Support> support;
    SupportRule support_rule = SupportRule::DataHull;
    std::size_t max_shrink_rounds = 10;
    std::size_t quadrature_nodes = 4096;
    std::size_t grid_points = 1000;
    std::size_t init_grid_points = 500;
    std::size_t max_redraws = 3;
    SimplexOptions simplex;
    double barrier_factor = 1e6;
    double violation_tolerance = 1e-6;
    std::size_t barrier_escalations = 3;
    std::uint64_t seed = 1;
    unsigned threads = 1;

    void validate(std::size_t n) const
    {
        if (subsample_size < 4) throw Error("subsample size S must be at least 4");
        if (n < subsample_size) throw Error("sample size n=" + std::to_string(n) + " is smaller than S=" +
                                            std::to_string(subsample_size));
        if (n_subsamples == 0 && n == 0) throw Error("empty sample");
        if (lambda_mode == LambdaMode::Fixed && !(lambda >= 0.0)) throw Error("fixed lambda must be nonnegative");
        if (lambda_mode == LambdaMode::Heuristic && R < 0.0) throw Error("R must be positive");
        if (lambda_mode == LambdaMode::CrossValidated) {
            if (cv_folds < 2) throw Error("cross-validation needs at least 2 folds");
            if (cv_grid < 1) throw Error("cross-validation needs at least one grid point");
        }
        if (support && !(support->lower < support->upper)) throw Error("support override must satisfy l < u");
        if (grid_points < 2 || init_grid_points < 2) throw Error("grids need at least two points");
        simplex.validate();
    }
};

/// R for the heuristic lambda: 1e4, 1e5, 1e6 at n = 30, 100, 300, log-log interpolated between
/// and extrapolated with the end slopes.
inline double default_R(std::size_t n)
{
    const double ln = std::log10(static_cast<double>(std::max<std::size_t>(n, 2)));
    const double a = std::log10(30.0), b = std::log10(100.0), c = std::log10(300.0);
    if (ln <= b) return std::pow(10.0, 4.0 + (ln - a) / (b - a));
    return std::pow(10.0, 5.0 + (ln - b) / (c - b));
}

struct SubsampleFit {
    std::vector<std::size_t> indices;
    Eigen::VectorXd alpha;
    double lambda = 0.0;
    double penalty = 0.0;          // alpha' A alpha
    double objective = 0.0;
    double violation_max = 0.0;    // largest negative part at the constraint points
    double equality_residual = 0.0;
    std::size_t iterations = 0;
    std::size_t redraws = 0;
    bool converged = false;
};

struct DensityEstimate {
    Support support;
    std::vector<double> grid;
    std::vector<double> values;      // averaged, clipped, renormalised
    std::vector<double> raw_values;  // plain average of the subsample densities
    double raw_integral = 0.0;
    double lambda = 0.0;             // mean lambda over subsamples
    std::vector<Support> shrink_history;
    bool shrink_limit_reached = false;
    std::vector<SubsampleFit> per_subsample;
    std::size_t failed_subsamples = 0;

    /// Linear interpolation of the grid values, zero outside the support.
    double operator()(double x) const
    {
        if (grid.empty() || x < support.lower || x > support.upper) return 0.0;
        const double dx = (support.upper - support.lower) / static_cast<double>(grid.size() - 1);
        const double pos = (x - support.lower) / dx;
        const auto i = std::min(static_cast<std::size_t>(pos), grid.size() - 2);
        const double t = pos - static_cast<double>(i);
        return values[i] + t * (values[i + 1] - values[i]);
    }

    /// (f * f_e)(y) for the piecewise-linear interpolant of the grid values:
    /// sum over cells of slope * (H(y - x_g) - H(y - x_{g+1})).
    double convolved(double y, const ErrorModel& error) const
    {
        double s = 0.0;
        const double dx = (support.upper - support.lower) / static_cast<double>(grid.size() - 1);
        double h_prev = error.h_integral(y - grid.front());
        for (std::size_t g = 0; g + 1 < grid.size(); ++g) {
            const double h_next = error.h_integral(y - grid[g + 1]);
            s += (values[g + 1] - values[g]) / dx * (h_prev - h_next);
            h_prev = h_next;
        }
        // values at the ends are not forced to zero after averaging; close the cells at l and u.
        s += values.front() * error.cdf(y - grid.front()) - values.back() * error.cdf(y - grid.back());
        return s;
    }
};

/// Initial support: (l_Y - l_e, u_Y - u_e), widened by 10% of its width on each side.
inline Support initial_support(const Sample& y, const ErrorModel& error)
{
    if (y.empty()) throw Error("initial_support: empty sample");
    const auto [ymin, ymax] = std::minmax_element(y.begin(), y.end());
    const auto [le, ue] = error.support_bounds();
    const double l = *ymin - le, u = *ymax - ue;
    if (!(u > l)) throw Error("error spread exceeds data spread");
    const double pad = 0.1 * (u - l);
    return {l - pad, u + pad};
}

/// Support the pipeline starts from: the override if given, else the configured rule.
inline Support starting_support(const Sample& y, const ErrorModel& error, const FitConfig& cfg)
{
    if (cfg.support) return *cfg.support;
    if (cfg.support_rule == SupportRule::ErrorRange) return initial_support(y, error);
    if (y.empty()) throw Error("starting_support: empty sample");
    const auto [ymin, ymax] = std::minmax_element(y.begin(), y.end());
    const auto [le, ue] = error.support_bounds();
    const double shift = error.mean();
    double l = *ymin - shift, u = *ymax - shift;
    if (*ymax - ue > *ymin - le) {
        l = std::min(l, *ymin - le);
        u = std::max(u, *ymax - ue);
    }
    if (!(u > l)) throw Error("sample has zero spread");
    const double pad = 0.1 * (u - l);
    return {l - pad, u + pad};
}

/// Moves each endpoint halfway towards the minimum of a negative region touching it.
/// Returns nullopt when no boundary-adjacent region dips below `threshold`.
inline std::optional<Support> shrink_support(const std::vector<double>& grid, const std::vector<double>& values,
                                             Support current, double threshold = -1e-4)
{
    if (grid.size() != values.size() || grid.size() < 3) throw Error("shrink_support: bad grid");
    Support next = current;
    bool moved = false;
    {
        std::size_t i = 1, arg = 0;
        double lowest = 0.0;
        while (i + 1 < values.size() && values[i] <= 0.0) {
            if (values[i] < lowest) {
                lowest = values[i];
                arg = i;
            }
            ++i;
        }
        if (lowest < threshold) {
            next.lower = 0.5 * (current.lower + grid[arg]);
            moved = true;
        }
    }
    {
        std::size_t i = values.size() - 2, arg = 0;
        double lowest = 0.0;
        while (i > 0 && values[i] <= 0.0) {
            if (values[i] < lowest) {
                lowest = values[i];
                arg = i;
            }
            --i;
        }
        if (lowest < threshold) {
            next.upper = 0.5 * (grid[arg] + current.upper);
            moved = true;
        }
    }
    if (!moved || !(next.lower < next.upper)) return std::nullopt;
    return next;
}

inline std::optional<Support> shrink_support(const DensityEstimate& est, Support current)
{
    return shrink_support(est.grid, est.raw_values, current);
}

namespace detail {

inline double sample_quantile(std::vector<double> sorted, double p)
{
    std::sort(sorted.begin(), sorted.end());
    const double h = (static_cast<double>(sorted.size()) - 1.0) * p;
    const auto lo = static_cast<std::size_t>(std::floor(h));
    const auto hi = std::min(lo + 1, sorted.size() - 1);
    return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

}  // namespace detail

/// Silverman's rule of thumb 0.9 min(sd, IQR/1.34) n^{-1/5}; falls back to sd when the IQR is 0.
inline double silverman_bandwidth(const Sample& y)
{
    const auto n = y.size();
    if (n < 2) throw Error("silverman_bandwidth needs at least two points");
    const double mean = std::accumulate(y.begin(), y.end(), 0.0) / static_cast<double>(n);
    double ss = 0.0;
    for (double v : y) ss += (v - mean) * (v - mean);
    const double sd = std::sqrt(ss / static_cast<double>(n - 1));
    const double iqr = detail::sample_quantile(y, 0.75) - detail::sample_quantile(y, 0.25);
    double spread = std::min(sd, iqr / 1.34);
    if (!(spread > 0.0)) spread = sd;
    if (!(spread > 0.0)) throw Error("silverman_bandwidth: sample has zero spread");
    return 0.9 * spread * std::pow(static_cast<double>(n), -0.2);
}

/// Gaussian kernel density estimate of `points` at xs.
inline std::vector<double> gaussian_kde(const Sample& points, double bandwidth, std::span<const double> xs)
{
    std::vector<double> out(xs.size(), 0.0);
    const double norm = 1.0 / (static_cast<double>(points.size()) * bandwidth);
    for (std::size_t q = 0; q < xs.size(); ++q) {
        double s = 0.0;
        for (double p : points) s += normal_pdf((xs[q] - p) / bandwidth);
        out[q] = s * norm;
    }
    return out;
}

/// One index per equal-width stratum of [min y, max y]; empty strata are made up with extra
/// draws from the stratum with the most unselected points. Indices come back ordered by value.
inline std::vector<std::size_t> stratified_subsample(const Sample& y, std::size_t S, Rng& rng)
{
    const auto n = y.size();
    if (S == 0 || S > n) throw Error("stratified_subsample: need 1 <= S <= n");
    const auto [mn, mx] = std::minmax_element(y.begin(), y.end());
    const double lo = *mn, width = *mx - *mn;
    std::vector<std::vector<std::size_t>> strata(S);
    for (std::size_t i = 0; i < n; ++i) {
        std::size_t k = 0;
        if (width > 0.0) k = std::min(S - 1, static_cast<std::size_t>((y[i] - lo) / width * static_cast<double>(S)));
        strata[k].push_back(i);
    }
    std::vector<std::size_t> chosen;
    chosen.reserve(S);
    auto take = [&](std::vector<std::size_t>& pool) {
        std::uniform_int_distribution<std::size_t> d(0, pool.size() - 1);
        const auto pos = d(rng);
        chosen.push_back(pool[pos]);
        pool.erase(pool.begin() + static_cast<std::ptrdiff_t>(pos));
    };
    for (auto& s : strata)
        if (!s.empty()) take(s);
    while (chosen.size() < S) {
        auto most = std::max_element(strata.begin(), strata.end(),
                                     [](const auto& a, const auto& b) { return a.size() < b.size(); });
        take(*most);
    }
    std::sort(chosen.begin(), chosen.end(), [&](std::size_t a, std::size_t b) {
        return y[a] < y[b] || (y[a] == y[b] && a < b);
    });
    return chosen;
}

/// Least-squares projection of a target density (sampled at the rows of `design`) onto the
/// equality-feasible affine set; halves beta until the objective is finite.
inline Eigen::VectorXd initialize_coeffs(const Eigen::MatrixXd& design, std::span<const double> target,
                                         const Objective& obj)
{
    if (design.rows() != static_cast<Eigen::Index>(target.size())) throw Error("initialize_coeffs: size mismatch");
    const auto& ns = obj.nullspace();
    const Eigen::VectorXd t = Eigen::Map<const Eigen::VectorXd>(target.data(), static_cast<Eigen::Index>(target.size()));
    const Eigen::MatrixXd M = design * ns.basis;
    Eigen::BDCSVD<Eigen::MatrixXd> svd(M, Eigen::ComputeThinU | Eigen::ComputeThinV);
    svd.setThreshold(1e-10);
    Eigen::VectorXd beta = svd.solve(t - design * ns.alpha0);
    Objective plain = obj;
    plain.set_lambda(0.0);
    plain.set_barrier_weight(0.0);
    for (int k = 0; k <= 30; ++k) {
        if (std::isfinite(plain(beta))) return beta;
        beta *= 0.5;
    }
    throw Error("initialization failed");
}

struct LambdaGradients {
    Eigen::VectorXd loglik;   // d l / d alpha_j = sum_m L[m][j] / (L alpha)_m
    Eigen::VectorXd penalty;  // d psi / d alpha_j = 2 (A alpha)_j
};

inline LambdaGradients lambda_gradients(const Objective& obj, const Eigen::VectorXd& beta)
{
    const Eigen::VectorXd alpha = obj.alpha(beta);
    const Eigen::VectorXd fy = obj.likelihood_matrix() * alpha;
    if ((fy.array() <= 0.0).any()) throw Error("heuristic lambda needs a feasible start");
    LambdaGradients g;
    g.loglik = obj.likelihood_matrix().transpose() * fy.cwiseInverse();
    g.penalty = 2.0 * (obj.gram() * alpha);
    return g;
}

/// lambda = (1/R) sum|dl/dalpha| / sum|dpsi/dalpha| at the starting coefficients.
inline double heuristic_lambda(const Objective& obj, const Eigen::VectorXd& beta0, double R)
{
    if (!(R > 0.0)) throw Error("heuristic_lambda: R must be positive");
    const auto g = lambda_gradients(obj, beta0);
    const double den = g.penalty.cwiseAbs().sum();
    if (!(den > 0.0)) throw Error("heuristic_lambda: zero penalty gradient");
    return g.loglik.cwiseAbs().sum() / den / R;
}

/// Precomputed quantities shared by every subsample fit on one support.
struct SupportDesign {
    Support support;
    BasisSet basis;
    GramMatrix gram;
    std::vector<double> grid;
    Eigen::MatrixXd grid_design;  // density responses on the evaluation grid
    Eigen::MatrixXd init_design;  // density responses on the initialisation grid
    std::vector<double> init_target;

    SupportDesign(const Sample& y, const ErrorModel& error, Support s, const FitConfig& cfg)
        : support(s),
          basis(s, y, error, BasisSet::even_constraint_points(s, cfg.constraint_points), cfg.quadrature_nodes),
          gram(gram_matrix(basis, cfg.threads)), grid(linspace(s.lower, s.upper, cfg.grid_points)),
          grid_design(density_design(basis, grid))
    {
        const auto init_grid = linspace(s.lower, s.upper, cfg.init_grid_points);
        init_design = density_design(basis, init_grid);
        Sample shifted = y;
        const double shift = error.mean();
        for (double& v : shifted) v -= shift;
        init_target = gaussian_kde(shifted, silverman_bandwidth(y), init_grid);
    }

    /// Columns of the subsample basis inside the full basis.
    std::vector<Eigen::Index> columns(const std::vector<std::size_t>& idx) const
    {
        std::vector<Eigen::Index> cols;
        for (auto i : idx) cols.push_back(static_cast<Eigen::Index>(i));
        for (std::size_t j = basis.anchor_count(); j < basis.size(); ++j) cols.push_back(static_cast<Eigen::Index>(j));
        return cols;
    }

    Objective objective(const std::vector<std::size_t>& idx) const
    {
        const auto cols = columns(idx);
        const auto n = static_cast<Eigen::Index>(basis.anchor_count());
        const auto S = static_cast<Eigen::Index>(idx.size());
        Eigen::MatrixXd A = gram(cols, cols);
        Eigen::MatrixXd L = gram(Eigen::seqN(0, n), cols);
        auto ns = equality_nullspace(A, S);
        std::vector<Eigen::Index> nonneg;
        for (std::size_t m = 0; m < basis.constraint_count(); ++m) nonneg.push_back(S + 3 + static_cast<Eigen::Index>(m));
        return Objective(std::move(L), std::move(A), std::move(ns), std::move(nonneg));
    }
};

/// Minimises the objective from beta0 with barrier escalation. Returns the final beta.
inline SimplexResult solve_subsample(Objective& obj, const Eigen::VectorXd& beta0, const FitConfig& cfg)
{
    Objective plain = obj;
    plain.set_barrier_weight(0.0);
    obj.set_barrier_weight(cfg.barrier_factor * (std::abs(plain(beta0)) + 1.0));
    SimplexResult res = nelder_mead(std::cref(obj), beta0, cfg.simplex);
    for (std::size_t e = 0; e < cfg.barrier_escalations && obj.max_violation(res.x) > cfg.violation_tolerance; ++e) {
        obj.set_barrier_weight(obj.barrier_weight() * 10.0);
        auto again = nelder_mead(std::cref(obj), res.x, cfg.simplex);
        again.iterations += res.iterations;
        res = std::move(again);
    }
    return res;
}

namespace detail {

inline std::uint64_t unit_id(std::uint64_t round, std::uint64_t slot, std::uint64_t attempt)
{
    return (round << 40) | (slot << 8) | attempt;
}

}  // namespace detail

/// Fits every subsample on one support and averages the densities on the common grid.
inline DensityEstimate fit_on_support(const Sample& y, const ErrorModel& error, Support support, const FitConfig& cfg,
                                      std::size_t round, double fixed_lambda = -1.0)
{
    const auto n = y.size();
    const SupportDesign design(y, error, support, cfg);
    const double R = cfg.R > 0.0 ? cfg.R : default_R(n);
    const std::size_t count = cfg.n_subsamples
                                  ? cfg.n_subsamples
                                  : std::max<std::size_t>(10, (2 * n + cfg.subsample_size - 1) / cfg.subsample_size);

    std::vector<std::optional<SubsampleFit>> fits(count);
    std::vector<std::string> failures(count);
    parallel_for(count, cfg.threads, [&](std::size_t slot) {
        for (std::size_t attempt = 0; attempt <= cfg.max_redraws; ++attempt) {
            Rng rng = child_stream(cfg.seed, detail::unit_id(round, slot, attempt));
            try {
                SubsampleFit fit;
                fit.indices = stratified_subsample(y, cfg.subsample_size, rng);
                fit.redraws = attempt;
                Objective obj = design.objective(fit.indices);
                const auto cols = design.columns(fit.indices);
                const Eigen::MatrixXd init_design = design.init_design(Eigen::all, cols);
                const Eigen::VectorXd beta0 = initialize_coeffs(init_design, design.init_target, obj);
                fit.lambda = fixed_lambda >= 0.0 ? fixed_lambda
                             : cfg.lambda_mode == LambdaMode::Fixed ? cfg.lambda
                                                                    : heuristic_lambda(obj, beta0, R);
                obj.set_lambda(fit.lambda);
                const auto res = solve_subsample(obj, beta0, cfg);
                if (!std::isfinite(res.value)) throw Error("solver ended at an infeasible point");
                fit.alpha = obj.alpha(res.x);
                fit.objective = res.value;
                fit.iterations = res.iterations;
                fit.converged = res.converged;
                fit.penalty = obj.penalty(res.x);
                fit.violation_max = obj.max_violation(res.x);
                const auto S = static_cast<Eigen::Index>(fit.indices.size());
                const Eigen::Vector3d eq = obj.gram().middleRows(S, 3) * fit.alpha - Eigen::Vector3d(0.0, 0.0, 2.0);
                fit.equality_residual = eq.cwiseAbs().maxCoeff();
                fits[slot] = std::move(fit);
                return;
            } catch (const Error& e) {
                failures[slot] += "attempt " + std::to_string(attempt) + ": " + e.what() + "; ";
            }
        }
    });

    DensityEstimate est;
    est.support = support;
    est.grid = design.grid;
    est.raw_values.assign(design.grid.size(), 0.0);
    std::size_t ok = 0;
    for (std::size_t slot = 0; slot < count; ++slot) {
        if (!fits[slot]) {
            ++est.failed_subsamples;
            continue;
        }
        const auto& fit = *fits[slot];
        const auto cols = design.columns(fit.indices);
        const Eigen::VectorXd vals = design.grid_design(Eigen::all, cols) * fit.alpha;
        for (std::size_t g = 0; g < est.raw_values.size(); ++g) est.raw_values[g] += vals[static_cast<Eigen::Index>(g)];
        est.lambda += fit.lambda;
        est.per_subsample.push_back(fit);
        ++ok;
    }
    if (ok == 0) {
        std::ostringstream msg;
        msg << "all " << count << " subsample fits failed:";
        for (std::size_t s = 0; s < count; ++s) msg << " [" << s << "] " << failures[s];
        throw Error(msg.str());
    }
    for (double& v : est.raw_values) v /= static_cast<double>(ok);
    est.lambda /= static_cast<double>(ok);
    const double dx = support.width() / static_cast<double>(est.grid.size() - 1);
    est.raw_integral = trapezoid(est.raw_values, dx);
    est.values = est.raw_values;
    for (double& v : est.values) v = std::max(v, 0.0);
    const double mass = trapezoid(est.values, dx);
    if (!(mass > 0.0)) throw Error("estimated density has no positive mass");
    for (double& v : est.values) v /= mass;
    return est;
}

inline double cv_lambda(const Sample& y, const ErrorModel& error, const FitConfig& cfg);

/// Full pipeline: support initialisation, subsample fits, averaging, adaptive shrinking.
inline DensityEstimate fit(Sample y, const ErrorModel& error, const FitConfig& cfg)
{
    cfg.validate(y.size());
    std::sort(y.begin(), y.end());
    double fixed = -1.0;
    if (cfg.lambda_mode == LambdaMode::CrossValidated) fixed = cv_lambda(y, error, cfg);
    Support support = starting_support(y, error, cfg);
    std::vector<Support> history{support};
    for (std::size_t round = 0;; ++round) {
        DensityEstimate est = fit_on_support(y, error, support, cfg, round, fixed);
        const auto next = shrink_support(est, support);
        if (!next || round >= cfg.max_shrink_rounds) {
            est.shrink_limit_reached = next.has_value();
            est.shrink_history = history;
            return est;
        }
        support = *next;
        history.push_back(support);
    }
}

/// Heuristic lambda at the first subsample of the initial support; anchors the CV grid.
inline double reference_lambda(const Sample& y, const ErrorModel& error, const FitConfig& cfg)
{
    const Support support = starting_support(y, error, cfg);
    const SupportDesign design(y, error, support, cfg);
    Rng rng = child_stream(cfg.seed, detail::unit_id(0, 0, 0));
    const auto idx = stratified_subsample(y, cfg.subsample_size, rng);
    const Objective obj = design.objective(idx);
    const Eigen::MatrixXd init_design = design.init_design(Eigen::all, design.columns(idx));
    const auto beta0 = initialize_coeffs(init_design, design.init_target, obj);
    return heuristic_lambda(obj, beta0, cfg.R > 0.0 ? cfg.R : default_R(y.size()));
}

/// 7-point (cfg.cv_grid) log grid spanning [lambda_h/100, 100 lambda_h].
inline std::vector<double> cv_lambda_grid(double center, std::size_t points)
{
    if (points == 1) return {center};
    std::vector<double> grid(points);
    for (std::size_t i = 0; i < points; ++i)
        grid[i] = center * std::pow(10.0, -2.0 + 4.0 * static_cast<double>(i) / static_cast<double>(points - 1));
    return grid;
}

struct CvOutcome {
    std::vector<double> grid;
    std::vector<double> scores;  // summed validation log-likelihood per grid point
    double lambda = 0.0;
    std::size_t failed_units = 0;
};

/// K-fold cross-validated lambda over an explicit grid. Non-positive validation densities are
/// floored at 1e-12; ties go to the larger lambda.
inline CvOutcome cv_lambda_over(const Sample& y_in, const ErrorModel& error, const FitConfig& cfg,
                                const std::vector<double>& grid)
{
    Sample y = y_in;
    std::sort(y.begin(), y.end());
    const auto n = y.size();
    const auto K = cfg.cv_folds;
    if (K < 2 || 2 * K > n) throw Error("cv_lambda: need 2 <= folds and 2*folds <= n");
    std::vector<std::size_t> perm(n);
    std::iota(perm.begin(), perm.end(), 0);
    Rng rng = child_stream(cfg.seed, 0xC0FFEEull);
    std::shuffle(perm.begin(), perm.end(), rng);

    FitConfig inner = cfg;
    inner.lambda_mode = LambdaMode::Fixed;
    inner.threads = 1;
    const std::size_t units = grid.size() * K;
    std::vector<double> score(units, 0.0);
    std::vector<char> failed(units, 0);
    parallel_for(units, cfg.threads, [&](std::size_t u) {
        const std::size_t gi = u / K, fold = u % K;
        Sample train, valid;
        for (std::size_t i = 0; i < n; ++i) (i % K == fold ? valid : train).push_back(y[perm[i]]);
        FitConfig c = inner;
        c.lambda = grid[gi];
        c.seed = cfg.seed + 7919 * (fold + 1);
        c.subsample_size = std::min(cfg.subsample_size, train.size());
        try {
            const auto est = fit(train, error, c);
            double s = 0.0;
            for (double v : valid) s += std::log(std::max(est.convolved(v, error), 1e-12));
            score[u] = s;
        } catch (const Error&) {
            failed[u] = 1;
            score[u] = static_cast<double>(valid.size()) * std::log(1e-12);
        }
    });
    CvOutcome out;
    out.grid = grid;
    out.scores.assign(grid.size(), 0.0);
    for (std::size_t u = 0; u < units; ++u) {
        out.scores[u / K] += score[u];
        out.failed_units += failed[u];
    }
    if (out.failed_units == units) throw Error("cv_lambda: every fold failed to fit");
    std::size_t best = 0;
    for (std::size_t i = 1; i < grid.size(); ++i)
        if (out.scores[i] >= out.scores[best]) best = i;
    out.lambda = grid[best];
    return out;
}

inline double cv_lambda(const Sample& y, const ErrorModel& error, const FitConfig& cfg)
{
    Sample sorted = y;
    std::sort(sorted.begin(), sorted.end());
    const double center = reference_lambda(sorted, error, cfg);
    return cv_lambda_over(sorted, error, cfg, cv_lambda_grid(center, cfg.cv_grid)).lambda;
}

}  // namespace pmle

#endif
