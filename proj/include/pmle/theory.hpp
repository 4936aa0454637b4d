#ifndef PMLE_THEORY_HPP
#define PMLE_THEORY_HPP

#include <algorithm>
#include <cmath>
#include <functional>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include "pmle/common.hpp"
#include "pmle/distributions.hpp"

namespace pmle::theory {

/// Density (or plain function) sampled on an even grid over [a, b] with its first two derivatives.
struct SampledDensity {
    double a = 0.0;
    double b = 1.0;
    std::vector<double> x, f, d1, d2;
    bool is_density = true;

    double dx() const { return (b - a) / static_cast<double>(x.size() - 1); }
    std::size_t size() const { return x.size(); }

    static SampledDensity from_functions(double a, double b, std::size_t points, const std::function<double(double)>& f,
                                         const std::function<double(double)>& d1,
                                         const std::function<double(double)>& d2, bool is_density = true)
    {
        if (!(b > a) || points < 5) throw Error("sampled density needs b > a and at least 5 points");
        SampledDensity s;
        s.a = a;
        s.b = b;
        s.is_density = is_density;
        s.x = linspace(a, b, points);
        for (double v : s.x) {
            s.f.push_back(f(v));
            s.d1.push_back(d1(v));
            s.d2.push_back(d2(v));
        }
        return s;
    }

    /// Derivatives by 5-point central differences (one-sided second order at the two edge pairs).
    static SampledDensity from_values(double a, double b, std::vector<double> values, bool is_density = true)
    {
        const auto n = values.size();
        if (!(b > a) || n < 5) throw Error("sampled density needs b > a and at least 5 points");
        SampledDensity s;
        s.a = a;
        s.b = b;
        s.is_density = is_density;
        s.x = linspace(a, b, n);
        s.f = std::move(values);
        s.d1 = differentiate(s.f, s.dx());
        s.d2 = differentiate(s.d1, s.dx());
        return s;
    }

    static std::vector<double> differentiate(const std::vector<double>& v, double h)
    {
        const auto n = v.size();
        std::vector<double> out(n);
        for (std::size_t i = 2; i + 2 < n; ++i) out[i] = (v[i - 2] - 8.0 * v[i - 1] + 8.0 * v[i + 1] - v[i + 2]) / (12.0 * h);
        out[0] = (-3.0 * v[0] + 4.0 * v[1] - v[2]) / (2.0 * h);
        out[1] = (v[2] - v[0]) / (2.0 * h);
        out[n - 2] = (v[n - 1] - v[n - 3]) / (2.0 * h);
        out[n - 1] = (3.0 * v[n - 1] - 4.0 * v[n - 2] + v[n - 3]) / (2.0 * h);
        return out;
    }

    /// x -> c g(c x).
    SampledDensity rescaled(double c) const
    {
        if (!(c > 0.0)) throw Error("rescale factor must be positive");
        SampledDensity s = *this;
        s.a = a / c;
        s.b = b / c;
        s.x = linspace(s.a, s.b, x.size());
        for (auto& v : s.f) v *= c;
        for (auto& v : s.d1) v *= c * c;
        for (auto& v : s.d2) v *= c * c * c;
        return s;
    }

    void validate() const
    {
        if (x.size() < 5 || f.size() != x.size()) throw Error("sampled density is malformed");
        if (!is_density) return;
        if (*std::min_element(f.begin(), f.end()) < 0.0) throw Error("sampled density is negative");
        const double mass = trapezoid(f, dx());
        if (std::abs(mass - 1.0) > 1e-4) throw Error("sampled density integrates to " + std::to_string(mass));
    }
};

/// Passing checks have margin >= 0; the margin is the relative slack of the inequality.
struct CheckResult {
    double lhs = 0.0;
    double rhs = 0.0;
    bool holds = false;
    double margin = 0.0;
};

namespace detail {

inline double relative_slack(double small, double large)
{
    const double scale = std::max(std::abs(small), std::abs(large));
    return scale > 0.0 ? (large - small) / scale : 0.0;
}

inline double simpson(const std::vector<double>& v, double h)
{
    if (v.size() < 3 || v.size() % 2 == 0) throw Error("simpson needs an odd number of at least 3 samples");
    double s = v.front() + v.back();
    for (std::size_t i = 1; i + 1 < v.size(); ++i) s += (i % 2 ? 4.0 : 2.0) * v[i];
    return s * h / 3.0;
}

inline double max_abs(const std::vector<double>& v)
{
    double m = 0.0;
    for (double x : v) m = std::max(m, std::abs(x));
    return m;
}

}  // namespace detail

/// psi(f) = integral of f''^2 (trapezoid).
inline double smoothness(const SampledDensity& d)
{
    if (d.d2.size() != d.x.size()) throw Error("smoothness needs second derivative samples");
    std::vector<double> sq(d.d2.size());
    for (std::size_t i = 0; i < sq.size(); ++i) sq[i] = d.d2[i] * d.d2[i];
    return trapezoid(sq, d.dx());
}

/// Piecewise-cubic kernel k_delta on [-delta, delta]: value, first and second derivative.
inline double bump_kernel_value(double delta, double x, int derivative = 0)
{
    if (!(delta > 0.0)) throw Error("bump kernel width must be positive");
    if (x < -delta || x > delta) return 0.0;
    const double sign = x <= 0.0 ? -1.0 : 1.0;
    const double u = (x - sign * delta) / delta;
    if (derivative == 0) return (3.0 * u * u + sign * 2.0 * u * u * u) / delta;
    if (derivative == 1) return (6.0 * u + sign * 6.0 * u * u) / (delta * delta);
    return (6.0 + sign * 12.0 * u) / (delta * delta * delta);
}

/// k_delta sampled on `points` nodes (odd counts put 0 on a node).
inline SampledDensity bump_kernel(double delta, std::size_t points = 10001)
{
    if (!(delta > 0.0)) throw Error("bump kernel width must be positive");
    return SampledDensity::from_functions(
        -delta, delta, points, [delta](double x) { return bump_kernel_value(delta, x, 0); },
        [delta](double x) { return bump_kernel_value(delta, x, 1); },
        [delta](double x) { return bump_kernel_value(delta, x, 2); });
}

/// Simpson integral; exact for k_delta when the grid has an even number of cells per half.
inline double integral(const SampledDensity& d)
{
    return d.size() % 2 ? detail::simpson(d.f, d.dx()) : trapezoid(d.f, d.dx());
}

/// max f <= (5^4 psi / (3 2^12))^{1/5}.
inline CheckResult check_supnorm_bound(const SampledDensity& d)
{
    d.validate();
    CheckResult r;
    r.lhs = *std::max_element(d.f.begin(), d.f.end());
    r.rhs = std::pow(625.0 * smoothness(d) / 12288.0, 0.2);
    r.holds = r.lhs <= r.rhs * (1.0 + 1e-6);
    r.margin = detail::relative_slack(r.lhs, r.rhs);
    return r;
}

/// max |f'| <= (125 psi^2 / 144)^{1/5} for densities vanishing at both ends.
inline CheckResult check_lipschitz_bound(const SampledDensity& d)
{
    d.validate();
    const double peak = *std::max_element(d.f.begin(), d.f.end());
    if (d.f.front() > 1e-8 * peak || d.f.back() > 1e-8 * peak)
        throw Error("lipschitz bound needs a density vanishing at both ends");
    CheckResult r;
    r.lhs = detail::max_abs(d.d1);
    const double psi = smoothness(d);
    r.rhs = std::pow(125.0 * psi * psi / 144.0, 0.2);
    r.holds = r.lhs <= r.rhs * (1.0 + 1e-6);
    r.margin = detail::relative_slack(r.lhs, r.rhs);
    return r;
}

/// Cell masses of `g` at multiples of h, normalised; index 0 of the result is offset `first`.
inline std::vector<double> discretize_error(const ErrorModel& g, double h, long& first)
{
    const auto [lo, hi] = g.support_bounds();
    first = static_cast<long>(std::floor(lo / h)) - 1;
    const long last = static_cast<long>(std::ceil(hi / h)) + 1;
    std::vector<double> w;
    w.reserve(static_cast<std::size_t>(last - first + 1));
    double total = 0.0;
    for (long k = first; k <= last; ++k) {
        const double m = g.cdf((static_cast<double>(k) + 0.5) * h) - g.cdf((static_cast<double>(k) - 0.5) * h);
        w.push_back(std::max(m, 0.0));
        total += w.back();
    }
    if (!(total > 0.0)) throw Error("error model puts no mass on the grid");
    for (double& v : w) v /= total;
    return w;
}

/// psi(f * g) <= psi(f): convolves f'' with the cell masses of g on f's grid spacing.
/// lhs = psi of the convolution, rhs = psi(f).
inline CheckResult check_convolution_smoothing(const SampledDensity& f, const ErrorModel& g)
{
    if (f.d2.size() != f.size()) throw Error("convolution check needs second derivative samples");
    const double h = f.dx();
    long first = 0;
    const auto w = discretize_error(g, h, first);
    const std::size_t n = f.size(), k = w.size();
    std::vector<double> conv(n + k - 1, 0.0);
    for (std::size_t j = 0; j < k; ++j) {
        if (w[j] == 0.0) continue;
        for (std::size_t i = 0; i < n; ++i) conv[i + j] += w[j] * f.d2[i];
    }
    for (double& v : conv) v *= v;
    CheckResult r;
    r.lhs = trapezoid(conv, h);
    r.rhs = smoothness(f);
    r.holds = r.lhs <= r.rhs * (1.0 + 1e-4);
    r.margin = detail::relative_slack(r.lhs, r.rhs);
    return r;
}

/// KL(g || h) = integral of g log(g / h); 0 where g = 0, +inf where h = 0 < g.
inline double kl_divergence(const SampledDensity& g, const SampledDensity& h)
{
    if (g.size() != h.size() || g.a != h.a || g.b != h.b) throw Error("kl needs both densities on one grid");
    std::vector<double> v(g.size());
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (g.f[i] <= 0.0) continue;
        if (h.f[i] <= 0.0) return kInf;
        v[i] = g.f[i] * std::log(g.f[i] / h.f[i]);
    }
    return trapezoid(v, g.dx());
}

enum class KlLemma {
    Above,  // h > g + eps on [x0 - delta, x0 + delta]: KL > 2 delta^2 eps^2
    Below,  // h < g - eps on the window: KL > 2 delta^2 eps^2 - (8/3) delta^3 eps^3
    Sup     // ||h - g||_inf > rho, rho < sqrt(2L): KL > rho^4 / (48 L^2); eps carries rho
};

/// lhs = KL(g || h), rhs = the lemma's lower bound; holds when lhs > rhs.
inline CheckResult check_kl_bounds(const SampledDensity& g, const SampledDensity& h, KlLemma lemma, double x0,
                                   double delta, double eps)
{
    g.validate();
    h.validate();
    if (g.size() != h.size() || g.a != h.a || g.b != h.b) throw Error("kl needs both densities on one grid");
    double bound = 0.0;
    if (lemma == KlLemma::Sup) {
        const double L = std::max(detail::max_abs(g.d1), detail::max_abs(h.d1));
        double gap = 0.0;
        for (std::size_t i = 0; i < g.size(); ++i) gap = std::max(gap, std::abs(h.f[i] - g.f[i]));
        if (!(eps > 0.0 && eps < std::sqrt(2.0 * L) && gap > eps)) throw Error("hypothesis violated");
        bound = std::pow(eps, 4) / (48.0 * L * L);
    } else {
        if (!(delta > 0.0 && eps > 0.0)) throw Error("hypothesis violated");
        bool any = false;
        for (std::size_t i = 0; i < g.size(); ++i) {
            if (std::abs(g.x[i] - x0) > delta) continue;
            any = true;
            const bool ok = lemma == KlLemma::Above ? h.f[i] > g.f[i] + eps : h.f[i] < g.f[i] - eps;
            if (!ok) throw Error("hypothesis violated");
        }
        if (!any) throw Error("hypothesis violated");
        bound = 2.0 * delta * delta * eps * eps;
        if (lemma == KlLemma::Below) bound -= 8.0 / 3.0 * std::pow(delta * eps, 3);
    }
    CheckResult r;
    r.lhs = kl_divergence(g, h);
    r.rhs = bound;
    r.holds = r.lhs > r.rhs;
    r.margin = detail::relative_slack(r.rhs, r.lhs);
    return r;
}

/// Local maxima: sign changes + to - of the first differences, ignoring steps below 1e-10.
inline std::size_t count_local_maxima(const std::vector<double>& f)
{
    std::size_t count = 0;
    int last = 0;
    for (std::size_t i = 0; i + 1 < f.size(); ++i) {
        const double d = f[i + 1] - f[i];
        if (std::abs(d) <= 1e-10) continue;
        const int s = d > 0.0 ? 1 : -1;
        if (last == 1 && s == -1) ++count;
        last = s;
    }
    return count;
}

/// With b = max(g, r): integral |b'/b| <= (2M/5) log(5^4 psi / (3 2^12 r^5)).
inline CheckResult check_logratio_integral(const SampledDensity& g, double r, std::size_t M)
{
    g.validate();
    if (!(r > 0.0)) throw Error("floor r must be positive");
    const double peak = *std::max_element(g.f.begin(), g.f.end());
    if (g.f.front() > 1e-8 * peak || g.f.back() > 1e-8 * peak) throw Error("log-ratio bound needs compact support");
    if (count_local_maxima(g.f) > M) throw Error("density has more than M local maxima");
    CheckResult out;
    for (std::size_t i = 0; i + 1 < g.size(); ++i)
        out.lhs += std::abs(std::log(std::max(g.f[i + 1], r)) - std::log(std::max(g.f[i], r)));
    out.rhs = 0.4 * static_cast<double>(M) * std::log(625.0 * smoothness(g) / (12288.0 * std::pow(r, 5)));
    out.holds = out.lhs <= out.rhs * (1.0 + 1e-4);
    out.margin = detail::relative_slack(out.lhs, out.rhs);
    return out;
}

struct TheoremConstants {
    double lambda = 0.0;
    double C1 = 0.0;
    double C2 = 0.0;
};

/// lambda_n = C1 n^{7/8} log(n)^{1/8} sqrt(width), with the constants of the convergence theorem.
inline TheoremConstants theoretical_lambda(double n, double support_width, double psi_fx, double psi_fy)
{
    if (!(n > 1.0 && support_width > 0.0 && psi_fx > 0.0 && psi_fy > 0.0))
        throw Error("theoretical_lambda needs n > 1 and positive width and smoothness values");
    TheoremConstants c;
    c.C1 = std::pow(2.0, 31.0 / 20.0) * std::pow(3.0, -0.1) * std::pow(5.0, 3.0 / 20.0) /
           (std::pow(psi_fx, 0.8) * std::pow(psi_fy, 0.1));
    c.C2 = std::pow(1.0 + std::sqrt(1.0 + std::pow(3.0, 0.4) / 16.0), 0.25) * std::pow(2.0, 179.0 / 80.0) *
           std::pow(3.0, 9.0 / 40.0) * std::pow(5.0, 27.0 / 80.0) * std::pow(psi_fx, 0.25) * std::pow(psi_fy, -1.0 / 40.0);
    c.lambda = c.C1 * std::pow(n, 7.0 / 8.0) * std::pow(std::log(n), 1.0 / 8.0) * std::sqrt(support_width);
    return c;
}

// Random test families.

struct Mixture {
    std::vector<double> weights, centers, scales;
};

/// Gaussian mixture with analytic derivatives on [a, b].
inline SampledDensity gaussian_mixture(const Mixture& m, double a, double b, std::size_t points = 10001)
{
    auto eval = [m](double x, int der) {
        double s = 0.0;
        for (std::size_t k = 0; k < m.weights.size(); ++k) {
            const double z = (x - m.centers[k]) / m.scales[k];
            const double p = normal_pdf(z) / m.scales[k];
            const double sc = m.scales[k];
            if (der == 0) s += m.weights[k] * p;
            if (der == 1) s += m.weights[k] * p * (-z / sc);
            if (der == 2) s += m.weights[k] * p * (z * z - 1.0) / (sc * sc);
        }
        return s;
    };
    return SampledDensity::from_functions(
        a, b, points, [eval](double x) { return eval(x, 0); }, [eval](double x) { return eval(x, 1); },
        [eval](double x) { return eval(x, 2); });
}

/// Mixture of normalised bumps (1 - z^2)^p / r on [c - r, c + r], p >= 3; `scales` holds the radii.
inline SampledDensity polynomial_bump_mixture(const Mixture& m, int power, std::size_t points = 10001)
{
    if (power < 3) throw Error("bump power must be at least 3");
    const double p = power;
    const double norm = std::sqrt(std::numbers::pi) * std::tgamma(p + 1.0) / std::tgamma(p + 1.5);
    double a = kInf, b = -kInf;
    for (std::size_t k = 0; k < m.weights.size(); ++k) {
        a = std::min(a, m.centers[k] - m.scales[k]);
        b = std::max(b, m.centers[k] + m.scales[k]);
    }
    auto eval = [m, p, norm](double x, int der) {
        double s = 0.0;
        for (std::size_t k = 0; k < m.weights.size(); ++k) {
            const double r = m.scales[k], z = (x - m.centers[k]) / r;
            if (std::abs(z) >= 1.0) continue;
            const double q = 1.0 - z * z, c = m.weights[k] / (norm * r);
            if (der == 0) s += c * std::pow(q, p);
            if (der == 1) s += c * p * std::pow(q, p - 1.0) * (-2.0 * z) / r;
            if (der == 2)
                s += c * (p * (p - 1.0) * std::pow(q, p - 2.0) * 4.0 * z * z - 2.0 * p * std::pow(q, p - 1.0)) / (r * r);
        }
        return s;
    };
    return SampledDensity::from_functions(
        a, b, points, [eval](double x) { return eval(x, 0); }, [eval](double x) { return eval(x, 1); },
        [eval](double x) { return eval(x, 2); });
}

inline Mixture random_mixture(Rng& rng, double center_spread, double scale_lo, double scale_hi, std::size_t max_parts = 4)
{
    std::uniform_int_distribution<std::size_t> parts(1, max_parts);
    std::uniform_real_distribution<double> c(-center_spread, center_spread), s(scale_lo, scale_hi), w(0.2, 1.0);
    Mixture m;
    const auto k = parts(rng);
    double total = 0.0;
    for (std::size_t i = 0; i < k; ++i) {
        m.weights.push_back(w(rng));
        m.centers.push_back(c(rng));
        m.scales.push_back(s(rng));
        total += m.weights.back();
    }
    for (double& v : m.weights) v /= total;
    return m;
}

/// (1 - t) g + t k, with k a scaled copy of `bump` centred at `center` on g's grid.
inline SampledDensity blend_with_bump(const SampledDensity& g, double t, double center, double delta)
{
    SampledDensity h = g;
    for (std::size_t i = 0; i < g.size(); ++i) {
        const double x = g.x[i] - center;
        h.f[i] = (1.0 - t) * g.f[i] + t * bump_kernel_value(delta, x, 0);
        h.d1[i] = (1.0 - t) * g.d1[i] + t * bump_kernel_value(delta, x, 1);
        h.d2[i] = (1.0 - t) * g.d2[i] + t * bump_kernel_value(delta, x, 2);
    }
    return h;
}

struct SweepReport {
    std::string name;
    std::size_t instances = 0;
    std::size_t passed = 0;
    double worst_margin = kInf;
    std::string first_failure;

    bool ok() const { return instances > 0 && passed == instances; }
    void record(const CheckResult& r, const std::string& label)
    {
        ++instances;
        if (r.holds) ++passed;
        else if (first_failure.empty()) first_failure = label;
        worst_margin = std::min(worst_margin, r.margin);
    }
};

inline SweepReport sweep_supnorm(std::size_t count, Rng& rng)
{
    SweepReport rep{"supnorm_bound"};
    for (std::size_t i = 0; i < count; ++i) {
        const auto m = random_mixture(rng, 3.0, 0.3, 1.5);
        rep.record(check_supnorm_bound(gaussian_mixture(m, -12.0, 12.0)), "mixture " + std::to_string(i));
    }
    return rep;
}

inline SweepReport sweep_lipschitz(std::size_t count, Rng& rng)
{
    SweepReport rep{"lipschitz_bound"};
    std::uniform_int_distribution<int> power(3, 6);
    for (std::size_t i = 0; i < count; ++i) {
        if (i % 10 == 9) {
            std::uniform_real_distribution<double> d(0.1, 5.0);
            rep.record(check_lipschitz_bound(bump_kernel(d(rng))), "kernel " + std::to_string(i));
            continue;
        }
        const auto m = random_mixture(rng, 2.0, 0.5, 2.0, 3);
        rep.record(check_lipschitz_bound(polynomial_bump_mixture(m, power(rng))), "bump " + std::to_string(i));
    }
    return rep;
}

inline ErrorModel random_error(Rng& rng)
{
    std::uniform_real_distribution<double> scale(0.1, 1.5);
    std::uniform_int_distribution<int> kind(0, 4);
    switch (kind(rng)) {
    case 0: return ErrorModel::normal(scale(rng));
    case 1: return ErrorModel::laplace(scale(rng));
    case 2: return ErrorModel::scaled_beta(scale(rng) * 0.5);
    case 3: return ErrorModel::point_mass(0.0);
    default: {
        const double s = scale(rng);
        return ErrorModel::empirical(ErrorModel::normal(s).sample(50, rng));
    }
    }
}

inline SweepReport sweep_convolution(std::size_t count, Rng& rng)
{
    SweepReport rep{"convolution_smoothing"};
    for (std::size_t i = 0; i < count; ++i) {
        const auto m = random_mixture(rng, 2.0, 0.3, 1.2);
        const auto f = gaussian_mixture(m, -10.0, 10.0, 4001);
        rep.record(check_convolution_smoothing(f, random_error(rng)), "pair " + std::to_string(i));
    }
    return rep;
}

inline SweepReport sweep_kl(std::size_t count, Rng& rng)
{
    SweepReport rep{"kl_bounds"};
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    for (std::size_t i = 0; i < count; ++i) {
        const auto lemma = static_cast<KlLemma>(i % 3);
        const auto g = gaussian_mixture(random_mixture(rng, 2.0, 0.4, 1.5), -12.0, 12.0, 8001);
        const double x0 = -1.5 + 3.0 * unit(rng), delta = 0.1 + 0.4 * unit(rng), t = 0.2 + 0.6 * unit(rng);
        SampledDensity h;
        double eps = 0.0;
        if (lemma == KlLemma::Above) {
            h = blend_with_bump(g, t, x0, 2.0 * delta);
            eps = kInf;
            for (std::size_t j = 0; j < g.size(); ++j)
                if (std::abs(g.x[j] - x0) <= delta) eps = std::min(eps, h.f[j] - g.f[j]);
            if (!(eps > 0.0)) {
                --i;
                continue;
            }
            eps *= 0.9;
        } else if (lemma == KlLemma::Below) {
            h = blend_with_bump(g, t, x0 + 2.5 + delta, 1.0);
            eps = kInf;
            for (std::size_t j = 0; j < g.size(); ++j)
                if (std::abs(g.x[j] - x0) <= delta) eps = std::min(eps, g.f[j] - h.f[j]);
            if (!(eps > 0.0)) {
                --i;
                continue;
            }
            eps *= 0.9;
        } else {
            h = gaussian_mixture(random_mixture(rng, 2.0, 0.4, 1.5), -12.0, 12.0, 8001);
            const double L = std::max(detail::max_abs(g.d1), detail::max_abs(h.d1));
            double gap = 0.0;
            for (std::size_t j = 0; j < g.size(); ++j) gap = std::max(gap, std::abs(h.f[j] - g.f[j]));
            eps = 0.99 * std::min(gap, std::sqrt(2.0 * L));
        }
        rep.record(check_kl_bounds(g, h, lemma, x0, delta, eps), "pair " + std::to_string(i));
    }
    return rep;
}

inline SweepReport sweep_logratio(std::size_t count, Rng& rng)
{
    SweepReport rep{"logratio_integral"};
    std::uniform_int_distribution<int> power(3, 6);
    std::uniform_real_distribution<double> frac(0.01, 1.0);
    for (std::size_t i = 0; i < count; ++i) {
        const auto g = polynomial_bump_mixture(random_mixture(rng, 2.0, 0.5, 2.0, 3), power(rng));
        const auto M = std::max<std::size_t>(1, count_local_maxima(g.f));
        const double r = frac(rng) * *std::max_element(g.f.begin(), g.f.end());
        rep.record(check_logratio_integral(g, r, M), "bump " + std::to_string(i));
    }
    return rep;
}

/// Every lemma sweep, `count` instances each.
inline std::vector<SweepReport> run_all_sweeps(std::size_t count, std::uint64_t seed)
{
    std::vector<SweepReport> out;
    Rng r1 = child_stream(seed, 1), r2 = child_stream(seed, 2), r3 = child_stream(seed, 3), r4 = child_stream(seed, 4),
        r5 = child_stream(seed, 5);
    out.push_back(sweep_supnorm(count, r1));
    out.push_back(sweep_lipschitz(count, r2));
    out.push_back(sweep_convolution(count, r3));
    out.push_back(sweep_kl(count, r4));
    out.push_back(sweep_logratio(count, r5));
    return out;
}

}  // namespace pmle::theory

#endif
