#include <doctest.h>

#include <filesystem>
#include <random>

#include "newsfolio/errors.hpp"
#include "newsfolio/ridge.hpp"

using namespace newsfolio;

namespace {

std::mt19937_64 make_rng(std::uint64_t seed) { return std::mt19937_64(seed); }

Eigen::MatrixXd random_matrix(int n, int d, std::mt19937_64& rng) {
    std::normal_distribution<double> normal;
    Eigen::MatrixXd X(n, d);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < d; ++j) X(i, j) = normal(rng);
    return X;
}

// Ridge with unpenalized intercept via the augmented normal equations.
Eigen::VectorXd solve_augmented(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, double lambda) {
    const int n = static_cast<int>(X.rows());
    const int d = static_cast<int>(X.cols());
    Eigen::MatrixXd A(n, d + 1);
    A.col(0).setOnes();
    A.rightCols(d) = X;
    Eigen::MatrixXd G = A.transpose() * A;
    for (int j = 1; j <= d; ++j) G(j, j) += lambda;
    return G.ldlt().solve(A.transpose() * y);
}

// Brute-force LOO: refit without row i, predict row i.
double brute_loo_mse(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, double lambda) {
    const int n = static_cast<int>(X.rows());
    const int d = static_cast<int>(X.cols());
    double sse = 0;
    for (int i = 0; i < n; ++i) {
        Eigen::MatrixXd Xi(n - 1, d);
        Eigen::VectorXd yi(n - 1);
        int r = 0;
        for (int k = 0; k < n; ++k) {
            if (k == i) continue;
            Xi.row(r) = X.row(k);
            yi(r) = y(k);
            ++r;
        }
        Eigen::VectorXd coef = solve_augmented(Xi, yi, lambda);
        double pred = coef(0) + X.row(i).dot(coef.tail(d));
        sse += (y(i) - pred) * (y(i) - pred);
    }
    return sse / n;
}

}  // namespace

TEST_CASE("closed-form LOO equals brute-force refits") {
    auto rng = make_rng(1234);
    std::uniform_int_distribution<int> pick_n(10, 30), pick_d(1, 6);
    auto grid = default_lambda_grid();
    for (int rep = 0; rep < 40; ++rep) {
        int n = pick_n(rng), d = pick_d(rng);
        Eigen::MatrixXd X = random_matrix(n, d, rng);
        Eigen::VectorXd y = random_matrix(n, 1, rng);
        standardize(X);
        RidgeProblem problem(X, y);
        for (double lambda : {1e-4, 1e-2, 1.0, 1e2, 1e4}) {
            double closed = problem.loo_mse(lambda);
            double brute = brute_loo_mse(X, y, lambda);
            CHECK(std::abs(closed - brute) < 1e-8);
        }
    }
}

TEST_CASE("ridge fit matches the augmented normal equations") {
    auto rng = make_rng(7);
    Eigen::MatrixXd X = random_matrix(40, 5, rng);
    Eigen::VectorXd y = random_matrix(40, 1, rng);
    standardize(X);
    RidgeProblem problem(X, y);
    for (double lambda : {0.0, 1e-3, 1.0, 100.0}) {
        RidgeFit fit = problem.fit(lambda);
        Eigen::VectorXd coef = solve_augmented(X, y, lambda);
        CHECK(std::abs(fit.alpha - coef(0)) < 1e-9);
        CHECK((fit.beta - coef.tail(5)).cwiseAbs().maxCoeff() < 1e-9);
    }
}

TEST_CASE("lambda zero needs full column rank") {
    auto rng = make_rng(9);
    Eigen::MatrixXd X = random_matrix(30, 4, rng);
    X.col(3) = X.col(0) + X.col(1);  // rank deficient
    Eigen::VectorXd y = random_matrix(30, 1, rng);
    standardize(X);
    RidgeProblem problem(X, y);
    CHECK_FALSE(problem.full_rank());
    CHECK_THROWS_AS(problem.fit(0.0), NumericError);
    CHECK_NOTHROW(problem.fit(1e-6));
}

TEST_CASE("shrinkage is monotone in lambda") {
    auto rng = make_rng(21);
    Eigen::MatrixXd X = random_matrix(60, 8, rng);
    Eigen::VectorXd y = random_matrix(60, 1, rng);
    standardize(X);
    RidgeProblem problem(X, y);
    double prev = problem.fit(1e-8).beta.norm();
    for (double lambda : {1e-4, 1e-2, 1.0, 1e2, 1e4, 1e6}) {
        double cur = problem.fit(lambda).beta.norm();
        CHECK(cur <= prev + 1e-12);
        prev = cur;
    }
}

TEST_CASE("standardize output and idempotence") {
    auto rng = make_rng(31);
    Eigen::MatrixXd X = random_matrix(50, 4, rng);
    X.col(2).setConstant(3.0);  // zero variance
    StandardizeStats stats = standardize(X);
    for (int j = 0; j < 4; ++j) {
        CHECK(std::abs(X.col(j).mean()) < 1e-12);
        if (j == 2) continue;
        double sd = std::sqrt(X.col(j).squaredNorm() / 49.0);
        CHECK(std::abs(sd - 1.0) < 1e-12);
    }
    CHECK(stats.zero_variance[2]);
    CHECK(stats.scale(2) == 1.0);
    CHECK_FALSE(stats.zero_variance[0]);
    Eigen::MatrixXd X2 = X;
    StandardizeStats stats2 = standardize(X2);
    CHECK((X2 - X).cwiseAbs().maxCoeff() < 1e-12);
    CHECK((stats2.mean).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("lambda selection: grid argmin with ties to the larger value") {
    auto rng = make_rng(55);
    Eigen::MatrixXd X = random_matrix(40, 4, rng);
    Eigen::VectorXd y = random_matrix(40, 1, rng);
    standardize(X);
    RidgeProblem problem(X, y);
    auto grid = default_lambda_grid();
    CHECK(grid.size() == 21);
    CHECK(grid.front() == 1e-10);
    CHECK(grid.back() == 1e10);
    double best_mse = 0;
    double chosen = select_lambda(problem, grid, &best_mse);
    // Exhaustive check of the argmin with the tie rule.
    double want = grid.front();
    double want_mse = problem.loo_mse(want);
    for (double lambda : grid) {
        double mse = problem.loo_mse(lambda);
        if (mse <= want_mse * (1.0 + 1e-15)) {
            if (mse < want_mse || lambda > want) want = lambda;
            want_mse = std::min(want_mse, mse);
        }
    }
    CHECK(chosen == want);
    CHECK(best_mse == doctest::Approx(want_mse).epsilon(1e-12));
    // The grid must be strictly ascending; duplicates are rejected.
    std::vector<double> dup = {chosen, chosen};
    CHECK_THROWS_AS(select_lambda(problem, dup), NumericError);
    std::vector<double> unsorted = {1.0, 0.1};
    CHECK_THROWS_AS(select_lambda(problem, unsorted), NumericError);
}

TEST_CASE("fit_month maps coefficients back to raw coordinates") {
    auto rng = make_rng(77);
    const int n = 80, d = 5;
    MonthDesign design;
    design.month_key = 2011 * 12 + 3;
    design.X = random_matrix(n, d, rng);
    // Give the columns distinct scales and offsets.
    for (int j = 0; j < d; ++j)
        design.X.col(j) = design.X.col(j) * (j + 1) * 2.5 + Eigen::VectorXd::Constant(n, j * 7.0);
    design.y = random_matrix(n, 1, rng);
    auto model = fit_month(design, default_lambda_grid());
    REQUIRE(model.has_value());
    CHECK(model->month_key == design.month_key);
    CHECK(model->n == n);
    // Raw-coordinate predictions must equal standardized-fit predictions.
    Eigen::MatrixXd Xs = design.X;
    StandardizeStats stats = standardize(Xs);
    RidgeProblem problem(Xs, design.y);
    RidgeFit fit = problem.fit(model->lambda);
    for (int i = 0; i < 5; ++i) {
        double raw = model->alpha + model->beta.dot(design.X.row(i));
        double std_pred = fit.alpha + fit.beta.dot(Xs.row(i));
        CHECK(std::abs(raw - std_pred) < 1e-9);
    }
}

TEST_CASE("fit_month predictions are invariant to feature scaling") {
    auto rng = make_rng(78);
    const int n = 60, d = 4;
    MonthDesign a;
    a.month_key = 2012 * 12;
    a.X = random_matrix(n, d, rng);
    a.y = random_matrix(n, 1, rng);
    MonthDesign b = a;
    Eigen::VectorXd scales(d);
    scales << 3.0, 0.25, 10.0, 1.5;
    for (int j = 0; j < d; ++j) b.X.col(j) *= scales(j);
    auto ma = fit_month(a, default_lambda_grid());
    auto mb = fit_month(b, default_lambda_grid());
    REQUIRE(ma.has_value());
    REQUIRE(mb.has_value());
    CHECK(ma->lambda == mb->lambda);
    for (int i = 0; i < 10; ++i) {
        double pa = ma->alpha + ma->beta.dot(a.X.row(i));
        double pb = mb->alpha + mb->beta.dot(b.X.row(i));
        CHECK(std::abs(pa - pb) < 1e-9);
    }
}

TEST_CASE("fit_month skips thin months with a reason") {
    auto rng = make_rng(91);
    MonthDesign design;
    design.month_key = 2010 * 12;
    design.X = random_matrix(10, 3, rng);
    design.y = random_matrix(10, 1, rng);
    std::string reason;
    auto model = fit_month(design, default_lambda_grid(), kMinMonthObservations, &reason);
    CHECK_FALSE(model.has_value());
    CHECK_FALSE(reason.empty());
    CHECK(kMinMonthObservations == 30);
}

TEST_CASE("model averaging is a running mean over strictly ordered months") {
    CrossSectionModel m1, m2, m3;
    m1.month_key = 2010 * 12;
    m1.alpha = 1.0;
    m1.beta = Eigen::Vector2d(2.0, 4.0);
    m2.month_key = 2010 * 12 + 1;
    m2.alpha = 3.0;
    m2.beta = Eigen::Vector2d(0.0, -4.0);
    m3.month_key = 2010 * 12 + 2;
    m3.alpha = 5.0;
    m3.beta = Eigen::Vector2d(4.0, 3.0);
    AveragedModel avg = update_average(std::nullopt, m1);
    avg = update_average(avg, m2);
    CHECK(avg.alpha_bar == doctest::Approx(2.0));
    CHECK(avg.beta_bar(0) == doctest::Approx(1.0));
    CHECK(avg.beta_bar(1) == doctest::Approx(0.0));
    avg = update_average(avg, m3);
    CHECK(avg.alpha_bar == doctest::Approx(3.0));
    CHECK(avg.beta_bar(0) == doctest::Approx(2.0));
    CHECK(avg.beta_bar(1) == doctest::Approx(1.0));
    CHECK(avg.months_used == 3);
    CHECK(avg.source_months == std::vector<int>{m1.month_key, m2.month_key, m3.month_key});
    CHECK(predict(avg, Eigen::Vector2d(1.0, 1.0)) == doctest::Approx(6.0));
    // Out-of-order and duplicate months are provenance violations.
    CHECK_THROWS_AS(update_average(avg, m2), DataError);
}

TEST_CASE("model ledger roundtrip") {
    auto rng = make_rng(17);
    std::vector<CrossSectionModel> models;
    for (int k = 0; k < 3; ++k) {
        CrossSectionModel m;
        m.month_key = 2010 * 12 + k;
        m.alpha = 0.001 * k;
        m.beta = random_matrix(4, 1, rng);
        m.lambda = 10.0;
        m.loo_mse = 0.5 + k;
        m.n = 100 + k;
        models.push_back(std::move(m));
    }
    auto path = (std::filesystem::temp_directory_path() / "ledger_test.jsonl").string();
    write_model_ledger(models, path);
    auto back = read_model_ledger(path);
    REQUIRE(back.size() == 3);
    for (int k = 0; k < 3; ++k) {
        CHECK(back[k].month_key == models[k].month_key);
        CHECK(back[k].alpha == models[k].alpha);
        CHECK((back[k].beta - models[k].beta).cwiseAbs().maxCoeff() == 0.0);
        CHECK(back[k].lambda == models[k].lambda);
        CHECK(back[k].n == models[k].n);
    }
}
