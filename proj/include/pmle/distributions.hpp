#ifndef PMLE_DISTRIBUTIONS_HPP
#define PMLE_DISTRIBUTIONS_HPP

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "pmle/common.hpp"

namespace pmle {

namespace detail {

// Beta(2,5) on [0,1]: density 30 b (1-b)^4, variance 1/39.2.
inline constexpr double kBetaScale = 6.260990336999411;  // sqrt(39.2)

inline double beta25_pdf(double b)
{
    if (b <= 0.0 || b >= 1.0) return 0.0;
    return 30.0 * b * std::pow(1.0 - b, 4);
}

inline double beta25_cdf(double b)
{
    if (b <= 0.0) return 0.0;
    if (b >= 1.0) return 1.0;
    const double q = 1.0 - b;
    return 1.0 - std::pow(q, 6) - 6.0 * b * std::pow(q, 5);
}

// Integral of the Beta(2,5) CDF from 0 to b; continues linearly past 1 with mean 2/7.
inline double beta25_cdf_integral(double b)
{
    if (b <= 0.0) return 0.0;
    if (b >= 1.0) return b - 2.0 / 7.0;
    const double q = 1.0 - b;
    return b - 1.0 + std::pow(q, 6) + (5.0 / 7.0) * (1.0 - std::pow(q, 7));
}

inline double beta25_draw(Rng& rng)
{
    std::gamma_distribution<double> g2(2.0, 1.0), g5(5.0, 1.0);
    const double a = g2(rng);
    const double b = g5(rng);
    return a / (a + b);
}

// Erlang(k, 1) CDF.
inline double erlang_cdf(int k, double t)
{
    if (t <= 0.0) return 0.0;
    double term = 1.0, sum = 1.0;
    for (int j = 1; j < k; ++j) {
        term *= t / j;
        sum += term;
    }
    return 1.0 - std::exp(-t) * sum;
}

inline double erlang_pdf(int k, double t)
{
    if (t <= 0.0) return 0.0;
    return std::exp((k - 1) * std::log(t) - t - std::lgamma(static_cast<double>(k)));
}

}  // namespace detail

/// Error distribution: exposes the CDF, its integral H(v) = int_{-inf}^v F(u) du, and sampling.
/// Parametric families are in unit-variance form multiplied by scale(); the empirical kind is
/// built from a pure-error sample.
class ErrorModel {
public:
    enum class Kind { Normal, Laplace, ScaledBeta, PointMass, Empirical, Uniform };

    static ErrorModel normal(double scale = 1.0) { return ErrorModel(Kind::Normal, scale); }
    static ErrorModel laplace(double scale = 1.0) { return ErrorModel(Kind::Laplace, scale); }
    /// sqrt(39.2) * Beta(2,5), not centred.
    static ErrorModel scaled_beta(double scale = 1.0) { return ErrorModel(Kind::ScaledBeta, scale); }

    static ErrorModel point_mass(double location)
    {
        if (!std::isfinite(location)) throw Error("point mass location must be finite");
        ErrorModel m(Kind::PointMass, 1.0);
        m.atoms_ = {location};
        m.build_prefix();
        return m;
    }

    static ErrorModel empirical(Sample e, double scale = 1.0)
    {
        if (e.empty()) throw Error("empirical error model needs a nonempty sample");
        for (double v : e)
            if (!std::isfinite(v)) throw Error("empirical error sample contains a non-finite value");
        ErrorModel m(Kind::Empirical, 1.0);
        for (double& v : e) v *= scale;
        std::sort(e.begin(), e.end());
        m.atoms_ = std::move(e);
        m.build_prefix();
        return m;
    }

    /// Uniform on [a, b]. Used as a reference model in tests.
    static ErrorModel uniform(double a, double b)
    {
        if (!(a < b)) throw Error("uniform model needs a < b");
        ErrorModel m(Kind::Uniform, 1.0);
        m.lo_ = a;
        m.hi_ = b;
        return m;
    }

    /// Parses a parametric family name: normal, laplace, beta.
    static ErrorModel family(std::string_view name, double scale)
    {
        if (name == "normal") return normal(scale);
        if (name == "laplace") return laplace(scale);
        if (name == "beta") return scaled_beta(scale);
        throw Error("unknown error family '" + std::string(name) + "' (valid: normal, laplace, beta)");
    }

    Kind kind() const { return kind_; }
    double scale() const { return scale_; }

    /// Same family with every draw multiplied by c.
    ErrorModel scaled(double c) const
    {
        if (!(c > 0.0)) throw Error("scale factor must be positive");
        ErrorModel m = *this;
        switch (kind_) {
        case Kind::PointMass:
        case Kind::Empirical:
            for (double& v : m.atoms_) v *= c;
            m.build_prefix();
            break;
        case Kind::Uniform:
            m.lo_ *= c;
            m.hi_ *= c;
            break;
        default:
            m.scale_ *= c;
        }
        return m;
    }

    /// True when H is piecewise linear with kinks at atoms().
    bool has_atoms() const { return kind_ == Kind::PointMass || kind_ == Kind::Empirical; }
    std::span<const double> atoms() const { return atoms_; }

    double cdf(double v) const
    {
        if (std::isnan(v)) throw Error("cdf: NaN argument");
        const double s = scale_;
        switch (kind_) {
        case Kind::Normal:
            return normal_cdf(v / s);
        case Kind::Laplace: {
            const double b = s / std::numbers::sqrt2;
            return v < 0.0 ? 0.5 * std::exp(v / b) : 1.0 - 0.5 * std::exp(-v / b);
        }
        case Kind::ScaledBeta:
            return detail::beta25_cdf(v / (s * detail::kBetaScale));
        case Kind::Uniform:
            return std::clamp((v - lo_) / (hi_ - lo_), 0.0, 1.0);
        case Kind::PointMass:
        case Kind::Empirical: {
            const auto it = std::upper_bound(atoms_.begin(), atoms_.end(), v);
            return static_cast<double>(it - atoms_.begin()) / static_cast<double>(atoms_.size());
        }
        }
        return 0.0;
    }

    double h_integral(double v) const
    {
        if (!std::isfinite(v)) throw Error("h_integral: argument must be finite");
        const double s = scale_;
        switch (kind_) {
        case Kind::Normal: {
            const double z = v / s;
            return s * (z * normal_cdf(z) + normal_pdf(z));
        }
        case Kind::Laplace: {
            const double b = s / std::numbers::sqrt2;
            return v < 0.0 ? 0.5 * b * std::exp(v / b) : v + 0.5 * b * std::exp(-v / b);
        }
        case Kind::ScaledBeta: {
            const double w = s * detail::kBetaScale;
            return w * detail::beta25_cdf_integral(v / w);
        }
        case Kind::Uniform: {
            if (v <= lo_) return 0.0;
            if (v >= hi_) return v - 0.5 * (lo_ + hi_);
            return 0.5 * (v - lo_) * (v - lo_) / (hi_ - lo_);
        }
        case Kind::PointMass:
        case Kind::Empirical: {
            // (1/M) sum_{e_j < v} (v - e_j)
            const auto k = static_cast<std::size_t>(std::lower_bound(atoms_.begin(), atoms_.end(), v) - atoms_.begin());
            return (static_cast<double>(k) * v - prefix_[k]) / static_cast<double>(atoms_.size());
        }
        }
        return 0.0;
    }

    double mean() const
    {
        switch (kind_) {
        case Kind::ScaledBeta:
            return scale_ * detail::kBetaScale * 2.0 / 7.0;
        case Kind::Uniform:
            return 0.5 * (lo_ + hi_);
        case Kind::PointMass:
        case Kind::Empirical:
            return prefix_.back() / static_cast<double>(atoms_.size());
        default:
            return 0.0;
        }
    }

    /// p-quantile; atom kinds return the empirical order statistic, p in {0,1} gives min/max.
    double quantile(double p) const
    {
        if (!(p >= 0.0 && p <= 1.0)) throw Error("quantile: p must lie in [0,1]");
        switch (kind_) {
        case Kind::PointMass:
        case Kind::Empirical: {
            const auto m = static_cast<double>(atoms_.size());
            const double rank = std::max(std::ceil(p * m) - 1.0, 0.0);
            const auto idx = std::min(atoms_.size() - 1, static_cast<std::size_t>(rank));
            return atoms_[idx];
        }
        case Kind::Uniform:
            return lo_ + p * (hi_ - lo_);
        case Kind::Laplace: {
            const double b = scale_ / std::numbers::sqrt2;
            return p < 0.5 ? b * std::log(2.0 * p) : -b * std::log(2.0 * (1.0 - p));
        }
        case Kind::ScaledBeta: {
            const double w = scale_ * detail::kBetaScale;
            return w * bisect_increasing(detail::beta25_cdf, p, 0.0, 1.0, 1e-14);
        }
        case Kind::Normal:
            return scale_ * bisect_increasing(normal_cdf, p, -40.0, 40.0, 1e-14);
        }
        return 0.0;
    }

    /// (lower, upper) effective support: extreme atoms, or the 0.01% / 99.99% quantiles.
    std::pair<double, double> support_bounds() const
    {
        if (has_atoms()) return {atoms_.front(), atoms_.back()};
        if (kind_ == Kind::Uniform) return {lo_, hi_};
        return {quantile(1e-4), quantile(1.0 - 1e-4)};
    }

    Sample sample(std::size_t n, Rng& rng) const
    {
        if (n == 0) throw Error("sample size must be at least 1");
        Sample out(n);
        switch (kind_) {
        case Kind::Normal: {
            std::normal_distribution<double> d(0.0, 1.0);
            for (auto& v : out) v = scale_ * d(rng);
            break;
        }
        case Kind::Laplace: {
            std::exponential_distribution<double> d(1.0);
            std::bernoulli_distribution sign(0.5);
            for (auto& v : out) v = scale_ / std::numbers::sqrt2 * (sign(rng) ? d(rng) : -d(rng));
            break;
        }
        case Kind::ScaledBeta:
            for (auto& v : out) v = scale_ * detail::kBetaScale * detail::beta25_draw(rng);
            break;
        case Kind::Uniform: {
            std::uniform_real_distribution<double> d(lo_, hi_);
            for (auto& v : out) v = d(rng);
            break;
        }
        case Kind::PointMass:
        case Kind::Empirical: {
            std::uniform_int_distribution<std::size_t> d(0, atoms_.size() - 1);
            for (auto& v : out) v = atoms_[d(rng)];
            break;
        }
        }
        return out;
    }

private:
    ErrorModel(Kind k, double scale) : kind_(k), scale_(scale)
    {
        if (!(scale > 0.0) || !std::isfinite(scale)) throw Error("error scale must be positive and finite");
    }

    void build_prefix()
    {
        prefix_.assign(atoms_.size() + 1, 0.0);
        for (std::size_t i = 0; i < atoms_.size(); ++i) prefix_[i + 1] = prefix_[i] + atoms_[i];
    }

    Kind kind_;
    double scale_ = 1.0;
    double lo_ = 0.0, hi_ = 1.0;
    std::vector<double> atoms_;
    std::vector<double> prefix_;
};

/// The seven latent distributions of the simulation study, standardised to unit variance
/// (except Cauchy).
class TrueDistribution {
public:
    enum class Kind { Normal, ChiSq4, Beta25, Laplace, MixNormal, MixGamma, Cauchy };

    static constexpr std::array<std::string_view, 7> kNames{"normal", "chisq",    "beta",  "laplace",
                                                           "mixnormal", "mixgamma", "cauchy"};

    explicit TrueDistribution(Kind k) : kind_(k) {}

    static TrueDistribution parse(std::string_view name)
    {
        for (std::size_t i = 0; i < kNames.size(); ++i)
            if (kNames[i] == name) return TrueDistribution(static_cast<Kind>(i));
        std::string valid;
        for (auto n : kNames) valid += std::string(valid.empty() ? "" : ", ") + std::string(n);
        throw Error("unknown truth '" + std::string(name) + "' (valid: " + valid + ")");
    }

    static std::vector<TrueDistribution> all()
    {
        std::vector<TrueDistribution> out;
        for (std::size_t i = 0; i < kNames.size(); ++i) out.emplace_back(static_cast<Kind>(i));
        return out;
    }

    Kind kind() const { return kind_; }
    std::string_view name() const { return kNames[static_cast<std::size_t>(kind_)]; }

    double density(double x) const
    {
        switch (kind_) {
        case Kind::Normal:
            return normal_pdf(x);
        case Kind::ChiSq4: {
            const double t = kChiScale * x;
            return t <= 0.0 ? 0.0 : kChiScale * 0.25 * t * std::exp(-0.5 * t);
        }
        case Kind::Beta25:
            return detail::beta25_pdf(x / detail::kBetaScale) / detail::kBetaScale;
        case Kind::Laplace:
            return std::exp(-std::numbers::sqrt2 * std::abs(x)) / std::numbers::sqrt2;
        case Kind::MixNormal: {
            const double z = x / kMixNormalScale;
            return (0.5 * normal_pdf(z + 3.0) + 0.5 * normal_pdf(z - 2.0)) / kMixNormalScale;
        }
        case Kind::MixGamma: {
            const double t = kMixGammaScale * x;
            return kMixGammaScale * (0.4 * detail::erlang_pdf(5, t) + 0.6 * detail::erlang_pdf(13, t));
        }
        case Kind::Cauchy:
            return 1.0 / (std::numbers::pi * (1.0 + x * x));
        }
        return 0.0;
    }

    double cdf(double x) const
    {
        switch (kind_) {
        case Kind::Normal:
            return normal_cdf(x);
        case Kind::ChiSq4: {
            const double t = kChiScale * x;
            return t <= 0.0 ? 0.0 : 1.0 - std::exp(-0.5 * t) * (1.0 + 0.5 * t);
        }
        case Kind::Beta25:
            return detail::beta25_cdf(x / detail::kBetaScale);
        case Kind::Laplace:
            return x < 0.0 ? 0.5 * std::exp(std::numbers::sqrt2 * x) : 1.0 - 0.5 * std::exp(-std::numbers::sqrt2 * x);
        case Kind::MixNormal: {
            const double z = x / kMixNormalScale;
            return 0.5 * normal_cdf(z + 3.0) + 0.5 * normal_cdf(z - 2.0);
        }
        case Kind::MixGamma: {
            const double t = kMixGammaScale * x;
            return 0.4 * detail::erlang_cdf(5, t) + 0.6 * detail::erlang_cdf(13, t);
        }
        case Kind::Cauchy:
            return 0.5 + std::atan(x) / std::numbers::pi;
        }
        return 0.0;
    }

    double quantile(double p) const
    {
        if (!(p > 0.0 && p < 1.0)) throw Error("quantile: p must lie in (0,1)");
        switch (kind_) {
        case Kind::Cauchy:
            return std::tan(std::numbers::pi * (p - 0.5));
        case Kind::Laplace:
            return p < 0.5 ? std::log(2.0 * p) / std::numbers::sqrt2 : -std::log(2.0 * (1.0 - p)) / std::numbers::sqrt2;
        case Kind::ChiSq4:
        case Kind::Beta25:
        case Kind::MixGamma:
            return bisect_increasing([this](double x) { return cdf(x); }, p, 0.0, 40.0, 1e-13);
        default:
            return bisect_increasing([this](double x) { return cdf(x); }, p, -40.0, 40.0, 1e-13);
        }
    }

    /// The 0.01% .. 99.99% quantile range.
    std::pair<double, double> central_range() const { return {quantile(1e-4), quantile(1.0 - 1e-4)}; }

    Sample sample(std::size_t n, Rng& rng) const
    {
        if (n == 0) throw Error("sample size must be at least 1");
        Sample out(n);
        std::normal_distribution<double> gauss(0.0, 1.0);
        std::bernoulli_distribution coin(0.5);
        switch (kind_) {
        case Kind::Normal:
            for (auto& v : out) v = gauss(rng);
            break;
        case Kind::ChiSq4: {
            std::chi_squared_distribution<double> d(4.0);
            for (auto& v : out) v = d(rng) / kChiScale;
            break;
        }
        case Kind::Beta25:
            for (auto& v : out) v = detail::kBetaScale * detail::beta25_draw(rng);
            break;
        case Kind::Laplace: {
            std::exponential_distribution<double> d(1.0);
            for (auto& v : out) v = (coin(rng) ? d(rng) : -d(rng)) / std::numbers::sqrt2;
            break;
        }
        case Kind::MixNormal:
            for (auto& v : out) v = kMixNormalScale * (coin(rng) ? gauss(rng) - 3.0 : gauss(rng) + 2.0);
            break;
        case Kind::MixGamma: {
            std::bernoulli_distribution pick(0.4);
            std::gamma_distribution<double> g5(5.0, 1.0), g13(13.0, 1.0);
            for (auto& v : out) v = (pick(rng) ? g5(rng) : g13(rng)) / kMixGammaScale;
            break;
        }
        case Kind::Cauchy: {
            std::cauchy_distribution<double> d(0.0, 1.0);
            for (auto& v : out) v = d(rng);
            break;
        }
        }
        return out;
    }

    static constexpr double kChiScale = 2.8284271247461903;        // sqrt(8)
    static constexpr double kMixNormalScale = 0.37139067635410372;  // 2/sqrt(29)
    static constexpr double kMixGammaScale = 5.0159744815937813;    // sqrt(25.16)

private:
    Kind kind_;
};

}  // namespace pmle

#endif
