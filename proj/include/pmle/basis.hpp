#ifndef PMLE_BASIS_HPP
#define PMLE_BASIS_HPP

#include <algorithm>
#include <array>
#include <cmath>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "pmle/common.hpp"
#include "pmle/distributions.hpp"

namespace pmle {

struct Support {
    double lower = 0.0;
    double upper = 1.0;

    double width() const { return upper - lower; }
    bool contains(double x) const { return x >= lower && x <= upper; }
};

/// A function on [l, u] of the form p(r) + quad * r^2 with p piecewise linear between knots.
/// knots.front() == l and knots.back() == u for every function of one basis, so products can be
/// integrated exactly segment by segment.
struct PiecewiseFunction {
    std::vector<double> knots;
    std::vector<double> values;
    double quad = 0.0;

    double operator()(double r) const
    {
        const auto it = std::upper_bound(knots.begin(), knots.end(), r);
        std::size_t seg = it == knots.begin() ? 0 : static_cast<std::size_t>(it - knots.begin()) - 1;
        seg = std::min(seg, knots.size() - 2);
        const double a = knots[seg], b = knots[seg + 1];
        const double t = b > a ? (r - a) / (b - a) : 0.0;
        return values[seg] + t * (values[seg + 1] - values[seg]) + quad * r * r;
    }
};

namespace detail {

// Exact integral over [l,u] of the product of the piecewise-linear parts.
inline double linear_product_integral(const PiecewiseFunction& f, const PiecewiseFunction& g)
{
    std::size_t i = 0, j = 0;
    double x = f.knots.front();
    double fa = f.values.front(), ga = g.values.front();
    const double end = f.knots.back();
    double sum = 0.0;
    while (i + 1 < f.knots.size() && j + 1 < g.knots.size() && x < end) {
        const double fk = f.knots[i + 1], gk = g.knots[j + 1];
        const double next = std::min(fk, gk);
        const double fb = fk == next ? f.values[i + 1]
                                     : f.values[i] + (f.values[i + 1] - f.values[i]) * (next - f.knots[i]) / (fk - f.knots[i]);
        const double gb = gk == next ? g.values[j + 1]
                                     : g.values[j] + (g.values[j + 1] - g.values[j]) * (next - g.knots[j]) / (gk - g.knots[j]);
        sum += (next - x) * (2.0 * fa * ga + fa * gb + fb * ga + 2.0 * fb * gb);
        if (fk == next) ++i;
        if (gk == next) ++j;
        x = next;
        fa = fb;
        ga = gb;
    }
    return sum / 6.0;
}

// Exact integral of the piecewise-linear part against r^2 (Simpson is exact for cubics).
inline double linear_times_square(const PiecewiseFunction& f)
{
    double sum = 0.0;
    for (std::size_t s = 0; s + 1 < f.knots.size(); ++s) {
        const double a = f.knots[s], b = f.knots[s + 1], m = 0.5 * (a + b);
        sum += (b - a) * (f.values[s] * a * a + 2.0 * (f.values[s] + f.values[s + 1]) * m * m + f.values[s + 1] * b * b);
    }
    return sum / 6.0;
}

inline double monomial_integral(int power, double l, double u)
{
    return (std::pow(u, power + 1) - std::pow(l, power + 1)) / (power + 1);
}

// int_l^x (x - r) r^2 dr, expanded around l.
inline double left_hinge_square(double l, double x)
{
    const double d = x - l;
    return l * l * d * d / 2.0 + l * d * d * d / 3.0 + d * d * d * d / 12.0;
}

}  // namespace detail

/// Exact L2[l,u] inner product of two basis functions.
inline double inner_product(const PiecewiseFunction& f, const PiecewiseFunction& g)
{
    const double l = f.knots.front(), u = f.knots.back();
    double s = detail::linear_product_integral(f, g);
    if (g.quad != 0.0) s += g.quad * detail::linear_times_square(f);
    if (f.quad != 0.0) s += f.quad * detail::linear_times_square(g);
    if (f.quad != 0.0 && g.quad != 0.0) s += f.quad * g.quad * detail::monomial_integral(4, l, u);
    return s;
}

/// Left hinge transforms <f, (x - r)_+> for increasing xs inside [l,u], in one sweep.
inline std::vector<double> left_hinge_transform(const PiecewiseFunction& f, std::span<const double> xs)
{
    const double l = f.knots.front();
    std::vector<double> out(xs.size());
    double j0 = 0.0, j1 = 0.0;  // int_l^{knot} f, int_l^{knot} (r-l) f
    std::size_t seg = 0;
    for (std::size_t q = 0; q < xs.size(); ++q) {
        const double x = std::clamp(xs[q], l, f.knots.back());
        while (seg + 2 < f.knots.size() && f.knots[seg + 1] <= x) {
            const double a = f.knots[seg] - l, b = f.knots[seg + 1] - l;
            const double fa = f.values[seg], fb = f.values[seg + 1];
            j0 += 0.5 * (b - a) * (fa + fb);
            j1 += (b - a) * (2.0 * a * fa + a * fb + b * fa + 2.0 * b * fb) / 6.0;
            ++seg;
        }
        const double ka = f.knots[seg], kb = f.knots[seg + 1];
        const double fa = f.values[seg];
        const double fx = kb > ka ? fa + (f.values[seg + 1] - fa) * (x - ka) / (kb - ka) : fa;
        const double a = ka - l, b = x - l;
        const double p0 = j0 + 0.5 * (b - a) * (fa + fx);
        const double p1 = j1 + (b - a) * (2.0 * a * fa + a * fx + b * fa + 2.0 * b * fx) / 6.0;
        out[q] = b * p0 - p1 + f.quad * detail::left_hinge_square(l, x);
    }
    return out;
}

/// Right hinge transform <f, (r - x)_+> at one point. Test oracle for the left form.
inline double right_hinge_transform(const PiecewiseFunction& f, double x)
{
    const double l = f.knots.front(), u = f.knots.back();
    PiecewiseFunction hinge{{l, u}, {0.0, 0.0}, 0.0};
    if (x <= l) {
        hinge.values = {l - x, u - x};
    } else if (x >= u) {
        return 0.0;
    } else {
        hinge.knots = {l, x, u};
        hinge.values = {0.0, 0.0, u - x};
    }
    return inner_product(f, hinge);
}

/// The function basis k_1..k_{n+k} on a support [l, u]:
///   index 0..n-1       h_i(r) = H(y_i - r)
///   index n, n+1, n+2  1, r, r^2
///   index n+3..        b_x(r) for each constraint point x
/// (indices are zero-based; the anchors y_i are kept in the order given).
class BasisSet {
public:
    BasisSet(Support support, Sample anchors, const ErrorModel& error, std::vector<double> constraint_points,
             std::size_t quadrature_nodes = 4096)
        : support_(support), anchors_(std::move(anchors)), constraints_(std::move(constraint_points)),
          quadrature_nodes_(quadrature_nodes)
    {
        const double l = support_.lower, u = support_.upper;
        if (!(l < u) || !std::isfinite(l) || !std::isfinite(u)) throw Error("basis support must satisfy l < u");
        if (quadrature_nodes_ < 2) throw Error("quadrature needs at least two nodes");
        for (std::size_t m = 0; m < constraints_.size(); ++m) {
            if (!(constraints_[m] > l && constraints_[m] < u))
                throw Error("constraint points must lie strictly inside (l,u)");
            if (m > 0 && !(constraints_[m] > constraints_[m - 1]))
                throw Error("constraint points must be strictly increasing");
        }
        functions_.reserve(size());
        const auto grid = linspace(l, u, quadrature_nodes_);
        for (double y : anchors_) {
            if (!std::isfinite(y)) throw Error("basis anchor is not finite");
            functions_.push_back(make_h(y, error, grid));
        }
        functions_.push_back({{l, u}, {1.0, 1.0}, 0.0});
        functions_.push_back({{l, u}, {l, u}, 0.0});
        functions_.push_back({{l, u}, {0.0, 0.0}, 1.0});
        for (double x : constraints_) functions_.push_back(make_b(x));
    }

    /// `count` points evenly spaced strictly inside (l,u): l + m(u-l)/(count+1).
    static std::vector<double> even_constraint_points(Support s, std::size_t count = 30)
    {
        std::vector<double> pts(count);
        for (std::size_t m = 0; m < count; ++m)
            pts[m] = s.lower + static_cast<double>(m + 1) * s.width() / static_cast<double>(count + 1);
        return pts;
    }

    const Support& support() const { return support_; }
    const Sample& anchors() const { return anchors_; }
    const std::vector<double>& constraint_points() const { return constraints_; }
    std::size_t anchor_count() const { return anchors_.size(); }
    std::size_t constraint_count() const { return constraints_.size(); }
    std::size_t size() const { return anchors_.size() + 3 + constraints_.size(); }
    std::size_t poly_index(int power) const { return anchors_.size() + static_cast<std::size_t>(power); }
    std::size_t constraint_index(std::size_t m) const { return anchors_.size() + 3 + m; }

    const PiecewiseFunction& function(std::size_t i) const
    {
        if (i >= functions_.size()) throw Error("basis index " + std::to_string(i) + " out of range");
        return functions_[i];
    }

    /// k_i(r) for r in [l, u].
    double eval(std::size_t i, double r) const
    {
        if (i >= functions_.size()) throw Error("basis index " + std::to_string(i) + " out of range");
        if (!support_.contains(r)) throw Error("basis evaluation outside the support");
        const std::size_t n = anchors_.size();
        if (i == n) return 1.0;
        if (i == n + 1) return r;
        if (i == n + 2) return r * r;
        if (i > n + 2) return b_value(constraints_[i - n - 3], r);
        return functions_[i](r);
    }

    /// b_x(r): the hinge combination with <b_x,1> = <b_x,r> = 0 and <f'', b_x> = f(x).
    double b_value(double x, double r) const
    {
        const auto c = b_coefficients(x);
        return c[0] * std::max(x - r, 0.0) + c[1] * std::max(r - x, 0.0) + c[2];
    }

    /// Basis restricted to a subset of the anchors (same support, error kinks, constraint points).
    BasisSet subset(std::span<const std::size_t> anchor_indices) const
    {
        BasisSet out = *this;
        out.anchors_.clear();
        out.functions_.clear();
        for (auto idx : anchor_indices) {
            out.anchors_.push_back(anchors_.at(idx));
            out.functions_.push_back(functions_.at(idx));
        }
        for (std::size_t i = anchors_.size(); i < functions_.size(); ++i) out.functions_.push_back(functions_[i]);
        return out;
    }

private:
    std::array<double, 3> b_coefficients(double x) const
    {
        const double l = support_.lower, u = support_.upper;
        const double w3 = std::pow(u - l, 3);
        const double ux = u - x, xl = x - l;
        return {ux * ux * (ux + 3.0 * xl) / w3, xl * xl * (xl + 3.0 * ux) / w3, -2.0 * ux * ux * xl * xl / w3};
    }

    PiecewiseFunction make_b(double x) const
    {
        const double l = support_.lower, u = support_.upper;
        PiecewiseFunction f{{l, x, u}, {}, 0.0};
        f.values = {b_value(x, l), b_value(x, x), b_value(x, u)};
        return f;
    }

    PiecewiseFunction make_h(double y, const ErrorModel& error, const std::vector<double>& grid) const
    {
        const double l = support_.lower, u = support_.upper;
        PiecewiseFunction f;
        if (error.has_atoms()) {
            // H(y - r) has kinks at r = y - e_j; it is linear between them.
            f.knots.push_back(l);
            const auto atoms = error.atoms();
            for (auto it = atoms.rbegin(); it != atoms.rend(); ++it) {
                const double k = y - *it;
                if (k > l && k < u && k > f.knots.back()) f.knots.push_back(k);
            }
            f.knots.push_back(u);
        } else {
            f.knots = grid;
        }
        f.values.resize(f.knots.size());
        for (std::size_t s = 0; s < f.knots.size(); ++s) f.values[s] = error.h_integral(y - f.knots[s]);
        return f;
    }

    Support support_;
    Sample anchors_;
    std::vector<double> constraints_;
    std::size_t quadrature_nodes_;
    std::vector<PiecewiseFunction> functions_;
};

using GramMatrix = Eigen::MatrixXd;

/// A[i][j] = <k_i, k_j> on [l,u]. Exact for piecewise-linear H (empirical / point-mass errors);
/// smooth H is sampled on the quadrature grid and integrated as its linear interpolant.
inline GramMatrix gram_matrix(const BasisSet& basis, unsigned threads = 1)
{
    const auto d = basis.size();
    GramMatrix A(d, d);
    parallel_for(d, threads, [&](std::size_t i) {
        for (std::size_t j = i; j < d; ++j) {
            const double v = inner_product(basis.function(i), basis.function(j));
            if (!std::isfinite(v)) throw Error("non-finite Gram entry");
            A(i, j) = v;
        }
    });
    for (std::size_t i = 0; i < d; ++i)
        for (std::size_t j = 0; j < i; ++j) A(i, j) = A(j, i);
    return A;
}

/// Matrix E with E(q, j) = <k_j, (x_q - r)_+>, so that f(x_q) = (E alpha)_q. xs must be increasing.
inline Eigen::MatrixXd density_design(const BasisSet& basis, std::span<const double> xs)
{
    Eigen::MatrixXd E(xs.size(), basis.size());
    for (std::size_t j = 0; j < basis.size(); ++j) {
        const auto col = left_hinge_transform(basis.function(j), xs);
        for (std::size_t q = 0; q < xs.size(); ++q) E(q, j) = col[q];
    }
    // Outside the support the density is zero.
    for (std::size_t q = 0; q < xs.size(); ++q)
        if (!basis.support().contains(xs[q])) E.row(q).setZero();
    return E;
}

/// f(x) = sum_j alpha_j <k_j, (x - r)_+>; zero outside the support.
inline double eval_density(const BasisSet& basis, const Eigen::VectorXd& alpha, double x)
{
    if (alpha.size() != static_cast<Eigen::Index>(basis.size())) throw Error("coefficient length mismatch");
    if (!basis.support().contains(x)) return 0.0;
    const double xs[1] = {x};
    double s = 0.0;
    for (std::size_t j = 0; j < basis.size(); ++j) s += alpha[j] * left_hinge_transform(basis.function(j), xs)[0];
    return s;
}

/// Right-hand form sum_j alpha_j <k_j, (r - x)_+>; equals eval_density under the boundary constraints.
inline double eval_density_right(const BasisSet& basis, const Eigen::VectorXd& alpha, double x)
{
    if (!basis.support().contains(x)) return 0.0;
    double s = 0.0;
    for (std::size_t j = 0; j < basis.size(); ++j) s += alpha[j] * right_hinge_transform(basis.function(j), x);
    return s;
}

/// f_y(y_i) = sum_j A[i][j] alpha_j for an anchor index i.
inline double convolved_density(const Eigen::VectorXd& alpha, const GramMatrix& A, std::size_t i)
{
    if (static_cast<Eigen::Index>(i) >= A.rows()) throw Error("observation index out of range");
    return A.row(static_cast<Eigen::Index>(i)).dot(alpha);
}

}  // namespace pmle

#endif
