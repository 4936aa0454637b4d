#ifndef PMLE_SOLVER_HPP
#define PMLE_SOLVER_HPP

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/SVD>

#include "pmle/basis.hpp"
#include "pmle/common.hpp"

namespace pmle {

/// Affine parametrisation alpha = alpha0 + N beta of the three equality constraints
/// <f'',1> = 0, <f'',r> = 0, <f'',r^2> = 2.
struct EqualityNullspace {
    Eigen::VectorXd alpha0;
    Eigen::MatrixXd basis;  // orthonormal columns spanning the null space of the constraint rows
};

/// Constraint rows are rows n, n+1, n+2 of A (the 1, r, r^2 basis functions), summed over all
/// n+k coefficients. alpha0 is the minimum-norm particular solution.
inline EqualityNullspace equality_nullspace(const GramMatrix& A, Eigen::Index first_poly_row)
{
    const Eigen::Index d = A.cols();
    if (first_poly_row < 0 || first_poly_row + 3 > A.rows()) throw Error("equality rows out of range");
    const Eigen::MatrixXd C = A.middleRows(first_poly_row, 3);
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(C, Eigen::ComputeFullU | Eigen::ComputeFullV);
    const auto& sv = svd.singularValues();
    const double row_scale = C.rowwise().norm().maxCoeff();
    for (Eigen::Index k = 0; k < 3; ++k) {
        if (!(sv[k] > 1e-10 * row_scale)) {
            std::string rows;
            for (Eigen::Index r = 0; r < 3; ++r) rows += (r ? ", " : "") + std::to_string(first_poly_row + r);
            throw Error("equality constraint rows {" + rows + "} are rank deficient");
        }
    }
    const Eigen::Vector3d rhs(0.0, 0.0, 2.0);
    EqualityNullspace out;
    out.alpha0 = svd.solve(rhs);
    out.basis = svd.matrixV().rightCols(d - 3);
    return out;
}

/// Penalised negative log-likelihood in reduced coordinates beta:
///   J = -sum_m log((L alpha)_m) + lambda alpha' A alpha + w sum_{c} max(-(A alpha)_c, 0)
/// with alpha = alpha0 + N beta. L holds <h_m, k_j> for every observation m (it equals the
/// observation rows of A when the basis is built on the full sample).
class Objective {
public:
    Objective(Eigen::MatrixXd likelihood, GramMatrix A, EqualityNullspace ns, std::vector<Eigen::Index> nonneg_rows,
              double lambda = 0.0, double barrier_weight = 0.0)
        : L_(std::move(likelihood)), A_(std::move(A)), ns_(std::move(ns)), nonneg_(std::move(nonneg_rows)),
          lambda_(lambda), barrier_(barrier_weight)
    {
        if (L_.cols() != A_.cols() || A_.rows() != A_.cols() || ns_.alpha0.size() != A_.cols())
            throw Error("objective dimensions disagree");
        // Reduced forms so that one evaluation costs O(n * dim).
        L_beta_ = L_ * ns_.basis;
        L_alpha0_ = L_ * ns_.alpha0;
        const Eigen::MatrixXd AN = A_ * ns_.basis;
        Q_ = ns_.basis.transpose() * AN;
        Q_ = 0.5 * (Q_ + Q_.transpose()).eval();
        const Eigen::VectorXd Aa0 = A_ * ns_.alpha0;
        q_ = ns_.basis.transpose() * Aa0;
        q0_ = ns_.alpha0.dot(Aa0);
        C_beta_.resize(static_cast<Eigen::Index>(nonneg_.size()), AN.cols());
        C_alpha0_.resize(static_cast<Eigen::Index>(nonneg_.size()));
        for (std::size_t c = 0; c < nonneg_.size(); ++c) {
            C_beta_.row(static_cast<Eigen::Index>(c)) = AN.row(nonneg_[c]);
            C_alpha0_[static_cast<Eigen::Index>(c)] = Aa0[nonneg_[c]];
        }
    }

    Eigen::Index reduced_dim() const { return ns_.basis.cols(); }
    Eigen::Index full_dim() const { return A_.cols(); }
    double lambda() const { return lambda_; }
    double barrier_weight() const { return barrier_; }
    void set_lambda(double v) { lambda_ = v; }
    void set_barrier_weight(double v) { barrier_ = v; }
    const GramMatrix& gram() const { return A_; }
    const Eigen::MatrixXd& likelihood_matrix() const { return L_; }
    const EqualityNullspace& nullspace() const { return ns_; }
    const std::vector<Eigen::Index>& nonneg_rows() const { return nonneg_; }

    Eigen::VectorXd alpha(const Eigen::VectorXd& beta) const
    {
        check(beta);
        return ns_.alpha0 + ns_.basis * beta;
    }

    /// Convolved densities (L alpha)_m at all observations.
    Eigen::VectorXd convolved(const Eigen::VectorXd& beta) const { return L_alpha0_ + L_beta_ * beta; }

    /// Values <f'', b_x> = f(x) at the constraint points.
    Eigen::VectorXd constraint_values(const Eigen::VectorXd& beta) const { return C_alpha0_ + C_beta_ * beta; }

    double penalty(const Eigen::VectorXd& beta) const { return q0_ + 2.0 * q_.dot(beta) + beta.dot(Q_ * beta); }

    double max_violation(const Eigen::VectorXd& beta) const
    {
        if (nonneg_.empty()) return 0.0;
        return std::max(0.0, -constraint_values(beta).minCoeff());
    }

    double operator()(const Eigen::VectorXd& beta) const
    {
        check(beta);
        const Eigen::VectorXd fy = convolved(beta);
        double nll = 0.0;
        for (Eigen::Index m = 0; m < fy.size(); ++m) {
            if (!(fy[m] > 0.0)) return kInf;
            nll -= std::log(fy[m]);
        }
        double value = nll;
        if (lambda_ != 0.0) value += lambda_ * penalty(beta);
        if (barrier_ != 0.0 && !nonneg_.empty()) {
            const Eigen::VectorXd c = constraint_values(beta);
            value += barrier_ * (-c.array()).max(0.0).sum();
        }
        return value;
    }

private:
    void check(const Eigen::VectorXd& beta) const
    {
        if (beta.size() != ns_.basis.cols())
            throw Error("reduced coordinate length " + std::to_string(beta.size()) + " != " +
                        std::to_string(ns_.basis.cols()));
    }

    Eigen::MatrixXd L_;
    GramMatrix A_;
    EqualityNullspace ns_;
    std::vector<Eigen::Index> nonneg_;
    double lambda_;
    double barrier_;
    Eigen::MatrixXd L_beta_, Q_, C_beta_;
    Eigen::VectorXd L_alpha0_, q_, C_alpha0_;
    double q0_ = 0.0;
};

inline double penalized_nll(const Objective& obj, const Eigen::VectorXd& beta) { return obj(beta); }

struct SimplexOptions {
    std::size_t max_iterations = 0;  // 0: 200 * dim
    double f_tolerance = 0.0;        // absolute spread; 0: 1e-8 (1 + |f(x0)|)
    double x_tolerance = 0.0;        // 0 disables the vertex-spread test
    double reflection = 1.0;
    double expansion = 2.0;
    double contraction = 0.5;
    double shrink = 0.5;
    std::size_t restarts = 0;

    void validate() const
    {
        if (!(reflection > 0.0 && expansion > 1.0 && contraction > 0.0 && contraction < 1.0 && shrink > 0.0 &&
              shrink < 1.0))
            throw Error("simplex coefficients out of range");
    }
};

struct SimplexResult {
    Eigen::VectorXd x;
    double value = kInf;
    std::size_t iterations = 0;
    bool converged = false;
};

using ObjectiveFn = std::function<double(const Eigen::VectorXd&)>;

namespace detail {

inline SimplexResult nelder_mead_pass(const ObjectiveFn& f, const Eigen::VectorXd& x0, double f0,
                                      const SimplexOptions& opts, std::size_t max_iter, double ftol)
{
    const Eigen::Index dim = x0.size();
    const auto nv = static_cast<std::size_t>(dim + 1);
    std::vector<Eigen::VectorXd> v(nv, x0);
    std::vector<double> fv(nv, f0);
    for (Eigen::Index d = 0; d < dim; ++d) {
        auto& p = v[static_cast<std::size_t>(d + 1)];
        p[d] += std::max(0.05 * std::abs(x0[d]), 0.00025);
        fv[static_cast<std::size_t>(d + 1)] = f(p);
    }
    std::vector<std::size_t> order(nv);
    SimplexResult res;
    Eigen::VectorXd centroid(dim);
    for (;;) {
        std::iota(order.begin(), order.end(), 0);
        std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return fv[a] < fv[b]; });
        const std::size_t best = order.front(), worst = order.back(), second = order[nv - 2];
        const double spread = fv[worst] - fv[best];
        bool small = std::isfinite(fv[worst]) && spread <= ftol;
        if (small && opts.x_tolerance > 0.0) {
            double xs = 0.0;
            for (std::size_t k = 0; k < nv; ++k) xs = std::max(xs, (v[k] - v[best]).cwiseAbs().maxCoeff());
            small = xs <= opts.x_tolerance;
        }
        if (small || res.iterations >= max_iter) {
            res.x = v[best];
            res.value = fv[best];
            res.converged = small;
            return res;
        }
        ++res.iterations;

        centroid.setZero();
        for (std::size_t k = 0; k + 1 < nv; ++k) centroid += v[order[k]];
        centroid /= static_cast<double>(dim);

        const Eigen::VectorXd xr = centroid + opts.reflection * (centroid - v[worst]);
        const double fr = f(xr);
        if (fr < fv[best]) {
            const Eigen::VectorXd xe = centroid + opts.expansion * (xr - centroid);
            const double fe = f(xe);
            if (fe < fr) {
                v[worst] = xe;
                fv[worst] = fe;
            } else {
                v[worst] = xr;
                fv[worst] = fr;
            }
            continue;
        }
        if (fr < fv[second]) {
            v[worst] = xr;
            fv[worst] = fr;
            continue;
        }
        if (fr < fv[worst]) {
            const Eigen::VectorXd xc = centroid + opts.contraction * (xr - centroid);
            const double fc = f(xc);
            if (fc <= fr) {
                v[worst] = xc;
                fv[worst] = fc;
                continue;
            }
        } else {
            const Eigen::VectorXd xcc = centroid + opts.contraction * (v[worst] - centroid);
            const double fcc = f(xcc);
            if (fcc < fv[worst]) {
                v[worst] = xcc;
                fv[worst] = fcc;
                continue;
            }
        }
        for (std::size_t k = 1; k < nv; ++k) {
            auto& p = v[order[k]];
            p = v[best] + opts.shrink * (p - v[best]);
            fv[order[k]] = f(p);
        }
    }
}

}  // namespace detail

/// Nelder-Mead simplex minimiser. +inf objective values are ordered above every real and simply
/// treated as the worst vertex. Deterministic for a given start and options.
inline SimplexResult nelder_mead(const ObjectiveFn& f, const Eigen::VectorXd& x0, const SimplexOptions& opts = {})
{
    opts.validate();
    if (x0.size() == 0) throw Error("nelder_mead: empty start vector");
    const double f0 = f(x0);
    if (!std::isfinite(f0)) throw Error("infeasible start");
    const std::size_t max_iter = opts.max_iterations ? opts.max_iterations : 200 * static_cast<std::size_t>(x0.size());
    const double ftol = opts.f_tolerance > 0.0 ? opts.f_tolerance : 1e-8 * (1.0 + std::abs(f0));
    SimplexResult res = detail::nelder_mead_pass(f, x0, f0, opts, max_iter, ftol);
    for (std::size_t r = 0; r < opts.restarts && res.iterations < max_iter; ++r) {
        auto next = detail::nelder_mead_pass(f, res.x, res.value, opts, max_iter - res.iterations, ftol);
        next.iterations += res.iterations;
        const bool stalled = next.value >= res.value - ftol;
        if (next.value <= res.value) res = std::move(next);
        if (stalled) break;
    }
    return res;
}

}  // namespace pmle

#endif
