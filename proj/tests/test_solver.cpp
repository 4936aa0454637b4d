#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "pmle/pipeline.hpp"
#include "pmle/solver.hpp"

using namespace pmle;

namespace {

struct Problem {
    Sample y;
    ErrorModel error = ErrorModel::normal(0.5);
    std::optional<SupportDesign> design;
    std::vector<std::size_t> idx;
};

Problem make_problem(std::uint64_t seed, std::size_t n = 60)
{
    Problem p;
    Rng rng(seed);
    p.y = TrueDistribution::parse("normal").sample(n, rng);
    const auto e = ErrorModel::normal(0.5).sample(n, rng);
    for (std::size_t i = 0; i < n; ++i) p.y[i] += e[i];
    std::sort(p.y.begin(), p.y.end());
    p.error = ErrorModel::empirical(ErrorModel::normal(0.5).sample(n, rng));
    FitConfig cfg;
    p.design.emplace(p.y, p.error, starting_support(p.y, p.error, cfg), cfg);
    p.idx = stratified_subsample(p.y, 30, rng);
    return p;
}

Eigen::VectorXd start(const Problem& p, const Objective& obj)
{
    const Eigen::MatrixXd P = p.design->init_design(Eigen::all, p.design->columns(p.idx));
    return initialize_coeffs(P, p.design->init_target, obj);
}

}  // namespace

TEST(EqualityNullspace, ResidualsAndOrthonormality)
{
    const auto p = make_problem(1);
    const auto obj = p.design->objective(p.idx);
    const auto& A = obj.gram();
    const auto& ns = obj.nullspace();
    const Eigen::Index S = 30;
    const Eigen::Vector3d r0 = A.middleRows(S, 3) * ns.alpha0;
    EXPECT_NEAR(r0[0], 0.0, 1e-10);
    EXPECT_NEAR(r0[1], 0.0, 1e-10);
    EXPECT_NEAR(r0[2], 2.0, 1e-10);
    EXPECT_EQ(ns.basis.cols(), A.cols() - 3);
    const Eigen::MatrixXd I = ns.basis.transpose() * ns.basis;
    EXPECT_LT((I - Eigen::MatrixXd::Identity(I.rows(), I.cols())).cwiseAbs().maxCoeff(), 1e-10);
    const double scale = A.middleRows(S, 3).cwiseAbs().maxCoeff();
    EXPECT_LT((A.middleRows(S, 3) * ns.basis).cwiseAbs().maxCoeff(), 1e-10 * scale);
    Rng rng(3);
    std::normal_distribution<double> g(0.0, 1.0);
    for (int k = 0; k < 50; ++k) {
        Eigen::VectorXd beta(ns.basis.cols());
        for (auto& v : beta) v = g(rng);
        const Eigen::Vector3d r = A.middleRows(S, 3) * obj.alpha(beta);
        EXPECT_NEAR(r[0], 0.0, 1e-8);
        EXPECT_NEAR(r[1], 0.0, 1e-8);
        EXPECT_NEAR(r[2], 2.0, 1e-8);
    }
}

TEST(EqualityNullspace, ConstraintColumnsEnterOnlyTheQuadraticRow)
{
    // b_x is orthogonal to 1 and r, so only the r^2 row picks up the constraint columns.
    const auto p = make_problem(2);
    const auto obj = p.design->objective(p.idx);
    const auto& A = obj.gram();
    const double scale = A.middleRows(30, 3).leftCols(33).cwiseAbs().maxCoeff();
    EXPECT_LT(A.middleRows(30, 2).rightCols(30).cwiseAbs().maxCoeff(), 1e-8 * scale);
    EXPECT_GT(A.row(32).tail(30).cwiseAbs().maxCoeff(), 1e-6 * scale);
}

TEST(EqualityNullspace, RankDeficiencyNamesRows)
{
    GramMatrix A = GramMatrix::Zero(6, 6);
    A(3, 0) = 1.0;
    A(4, 1) = 1.0;
    try {
        equality_nullspace(A, 3);
        FAIL();
    } catch (const Error& e) {
        EXPECT_NE(std::string(e.what()).find("3, 4, 5"), std::string::npos);
    }
}

TEST(Objective, PenaltyIsAdditiveAndDomainGuarded)
{
    const auto p = make_problem(4);
    auto obj = p.design->objective(p.idx);
    const auto beta = start(p, obj);
    const double j0 = obj(beta);
    obj.set_lambda(0.37);
    const Eigen::VectorXd a = obj.alpha(beta);
    EXPECT_NEAR(obj(beta) - j0, 0.37 * a.dot(obj.gram() * a), 1e-10 * std::abs(j0));
    EXPECT_NEAR(obj.penalty(beta), a.dot(obj.gram() * a), 1e-7 * std::abs(obj.penalty(beta)));
    // Push one convolved density negative.
    Eigen::VectorXd bad = beta;
    for (int s = 0; s < 60 && std::isfinite(obj(bad)); ++s) bad *= 2.0;
    EXPECT_EQ(obj(bad), kInf);
    EXPECT_THROW(obj(Eigen::VectorXd::Zero(3)), Error);
}

TEST(Objective, UnitConvolvedDensitiesGiveZero)
{
    // Likelihood rows chosen so that L alpha = 1 at alpha0.
    GramMatrix A = GramMatrix::Identity(5, 5);
    A(1, 1) = 2.0;
    EqualityNullspace ns = equality_nullspace(A, 1);
    Eigen::MatrixXd L(2, 5);
    L.setZero();
    L.col(3).setConstant(1.0 / ns.alpha0[3]);
    Objective obj(L, A, ns, {});
    EXPECT_NEAR(obj(Eigen::VectorXd::Zero(2)), 0.0, 1e-14);
    EXPECT_NEAR(penalized_nll(obj, Eigen::VectorXd::Zero(2)), 0.0, 1e-14);
}

TEST(Objective, ConvolvedValuesMatchFullProduct)
{
    const auto p = make_problem(5);
    const auto obj = p.design->objective(p.idx);
    const auto beta = start(p, obj);
    const Eigen::VectorXd direct = obj.likelihood_matrix() * obj.alpha(beta);
    EXPECT_LT((obj.convolved(beta) - direct).cwiseAbs().maxCoeff(), 1e-12 * direct.cwiseAbs().maxCoeff() + 1e-9);
    EXPECT_EQ(obj.convolved(beta).size(), static_cast<Eigen::Index>(p.y.size()));
}

TEST(NelderMead, Quadratic)
{
    const auto r = nelder_mead([](const Eigen::VectorXd& x) { return (x[0] - 3.0) * (x[0] - 3.0); },
                               Eigen::VectorXd::Zero(1), {.f_tolerance = 1e-16, .x_tolerance = 1e-9});
    EXPECT_NEAR(r.x[0], 3.0, 1e-6);
    EXPECT_TRUE(r.converged);
}

TEST(NelderMead, Rosenbrock)
{
    auto f = [](const Eigen::VectorXd& x) { return 100.0 * std::pow(x[1] - x[0] * x[0], 2) + std::pow(1.0 - x[0], 2); };
    Eigen::VectorXd x0(2);
    x0 << -1.2, 1.0;
    SimplexOptions o;
    o.f_tolerance = 1e-20;
    o.max_iterations = 5000;
    const auto r = nelder_mead(f, x0, o);
    EXPECT_NEAR(r.x[0], 1.0, 1e-4);
    EXPECT_NEAR(r.x[1], 1.0, 1e-4);
}

TEST(NelderMead, BudgetAndInfeasibleStart)
{
    auto f = [](const Eigen::VectorXd& x) { return x.squaredNorm(); };
    SimplexOptions o;
    o.max_iterations = 5;
    const auto r = nelder_mead(f, Eigen::VectorXd::Constant(4, 1.0), o);
    EXPECT_EQ(r.iterations, 5u);
    EXPECT_FALSE(r.converged);
    try {
        nelder_mead([](const Eigen::VectorXd&) { return kInf; }, Eigen::VectorXd::Zero(2));
        FAIL();
    } catch (const Error& e) {
        EXPECT_STREQ(e.what(), "infeasible start");
    }
    SimplexOptions bad;
    bad.contraction = 1.5;
    EXPECT_THROW(nelder_mead(f, Eigen::VectorXd::Zero(2), bad), Error);
}

TEST(NelderMead, InfiniteValuesAreWorstVertices)
{
    auto f = [](const Eigen::VectorXd& x) { return x[0] < 0.5 ? kInf : (x[0] - 2.0) * (x[0] - 2.0) + x[1] * x[1]; };
    Eigen::VectorXd x0(2);
    x0 << 1.0, 1.0;
    const auto r = nelder_mead(f, x0, {.f_tolerance = 1e-14});
    EXPECT_NEAR(r.x[0], 2.0, 1e-4);
    EXPECT_NEAR(r.x[1], 0.0, 1e-4);
}

TEST(NelderMead, BestValueNeverIncreases)
{
    auto f = [](const Eigen::VectorXd& x) {
        return std::pow(x[0] - 1.0, 2) + 3.0 * std::pow(x[1] + 0.5, 2) + std::abs(x[2]);
    };
    const Eigen::VectorXd x0 = Eigen::VectorXd::Constant(3, 2.0);
    SimplexOptions o;
    double last = f(x0);
    for (std::size_t budget = 1; budget <= 300; budget += 7) {
        o.max_iterations = budget;
        const auto r = nelder_mead(f, x0, o);
        EXPECT_LE(r.value, last);
        last = r.value;
    }
}

TEST(NelderMead, DeterministicAndNoWorseThanStart)
{
    const auto p = make_problem(6);
    auto obj = p.design->objective(p.idx);
    const auto beta = start(p, obj);
    obj.set_lambda(heuristic_lambda(obj, beta, 1e5));
    SimplexOptions o;
    o.max_iterations = 2000;
    const auto a = nelder_mead(std::cref(obj), beta, o);
    const auto b = nelder_mead(std::cref(obj), beta, o);
    EXPECT_EQ(a.value, b.value);
    EXPECT_TRUE((a.x.array() == b.x.array()).all());
    EXPECT_LE(a.value, obj(beta));
}

TEST(Barrier, LargerWeightNeverIncreasesViolation)
{
    for (std::uint64_t seed = 10; seed < 15; ++seed) {
        const auto p = make_problem(seed);
        auto obj = p.design->objective(p.idx);
        const auto beta = start(p, obj);
        obj.set_lambda(heuristic_lambda(obj, beta, 1e6));
        SimplexOptions o;
        o.max_iterations = 3000;
        Objective plain = obj;
        const double w = 1e6 * (std::abs(plain(beta)) + 1.0);
        obj.set_barrier_weight(w);
        const auto weak = nelder_mead(std::cref(obj), beta, o);
        const double v_weak = obj.max_violation(weak.x);
        obj.set_barrier_weight(10.0 * w);
        const auto strong = nelder_mead(std::cref(obj), beta, o);
        EXPECT_LE(obj.max_violation(strong.x), v_weak + 1e-9) << "seed " << seed;
    }
}
