#ifndef PMLE_TESTS_FD_CHECK_HPP
#define PMLE_TESTS_FD_CHECK_HPP

#include <algorithm>
#include <cmath>
#include <vector>

#include "pmle/pipeline.hpp"

namespace fd {

// Central differences of l(alpha) = sum log (L alpha)_m and psi(alpha) = alpha' A alpha, evaluated
// in long double.
struct Worst {
    double loglik = 0.0;
    double penalty = 0.0;
};

inline long double loglik(const Eigen::MatrixXd& L, const std::vector<long double>& a)
{
    long double total = 0.0L;
    for (Eigen::Index m = 0; m < L.rows(); ++m) {
        long double s = 0.0L;
        for (Eigen::Index j = 0; j < L.cols(); ++j) s += static_cast<long double>(L(m, j)) * a[static_cast<std::size_t>(j)];
        total += std::log(s);
    }
    return total;
}

inline long double quadratic(const Eigen::MatrixXd& A, const std::vector<long double>& a)
{
    long double total = 0.0L;
    for (Eigen::Index i = 0; i < A.rows(); ++i)
        for (Eigen::Index j = 0; j < A.cols(); ++j)
            total += a[static_cast<std::size_t>(i)] * static_cast<long double>(A(i, j)) * a[static_cast<std::size_t>(j)];
    return total;
}

inline Worst compare(const pmle::Objective& obj, const Eigen::VectorXd& beta)
{
    const auto g = pmle::lambda_gradients(obj, beta);
    const Eigen::VectorXd alpha = obj.alpha(beta);
    const std::vector<long double> base(alpha.data(), alpha.data() + alpha.size());
    Worst w;
    for (Eigen::Index j = 0; j < alpha.size(); ++j) {
        const auto k = static_cast<std::size_t>(j);
        auto up = base, dn = base;
        const long double hl = 1e-7L;
        up[k] += hl;
        dn[k] -= hl;
        const double fl = static_cast<double>((loglik(obj.likelihood_matrix(), up) - loglik(obj.likelihood_matrix(), dn)) / (2 * hl));
        up = base;
        dn = base;
        const long double hp = 1e-2L * std::max(1.0L, std::abs(base[k]));
        up[k] += hp;
        dn[k] -= hp;
        const double fp = static_cast<double>((quadratic(obj.gram(), up) - quadratic(obj.gram(), dn)) / (2 * hp));
        w.loglik = std::max(w.loglik, std::abs(g.loglik[j] - fl) / std::max(1.0, std::abs(fl)));
        w.penalty = std::max(w.penalty, std::abs(g.penalty[j] - fp) / std::max(1.0, std::abs(fp)));
    }
    return w;
}

}  // namespace fd

#endif
