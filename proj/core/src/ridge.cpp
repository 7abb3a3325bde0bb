#include "newsfolio/ridge.hpp"

#include <cmath>
#include <fstream>

#include <nlohmann/json.hpp>

#include "newsfolio/errors.hpp"

namespace newsfolio {

using nlohmann::json;

std::vector<double> default_lambda_grid() {
    std::vector<double> grid;
    grid.reserve(21);
    for (int p = -10; p <= 10; ++p) grid.push_back(std::pow(10.0, p));
    return grid;
}

StandardizeStats standardize(Eigen::MatrixXd& X) {
    const Eigen::Index n = X.rows(), d = X.cols();
    if (n < 2) throw NumericError("standardize requires n >= 2");
    StandardizeStats stats;
    stats.mean.resize(d);
    stats.scale.resize(d);
    stats.zero_variance.assign(static_cast<std::size_t>(d), false);
    for (Eigen::Index j = 0; j < d; ++j) {
        double mu = X.col(j).mean();
        X.col(j).array() -= mu;
        double sd = std::sqrt(X.col(j).squaredNorm() / static_cast<double>(n - 1));
        stats.mean(j) = mu;
        if (sd < 1e-12) {
            stats.scale(j) = 1.0;
            stats.zero_variance[static_cast<std::size_t>(j)] = true;
        } else {
            stats.scale(j) = sd;
            X.col(j) /= sd;
        }
    }
    return stats;
}

RidgeProblem::RidgeProblem(const Eigen::MatrixXd& X, const Eigen::VectorXd& y)
    : n_(X.rows()), d_(X.cols()) {
    if (y.size() != n_) throw NumericError("ridge: X rows and y length differ");
    if (n_ < 2) throw NumericError("ridge requires n >= 2");
    if (!X.allFinite() || !y.allFinite()) throw NumericError("ridge: non-finite inputs");
    y_mean_ = y.mean();
    yc_ = y.array() - y_mean_;

    Eigen::BDCSVD<Eigen::MatrixXd> svd(X, Eigen::ComputeThinU | Eigen::ComputeThinV);
    U_ = svd.matrixU();
    V_ = svd.matrixV();
    sv_ = svd.singularValues();
    double tol = sv_.size() ? sv_(0) * static_cast<double>(std::max(n_, d_)) *
                                  std::numeric_limits<double>::epsilon()
                            : 0.0;
    rank_ = 0;
    for (Eigen::Index i = 0; i < sv_.size(); ++i)
        if (sv_(i) > tol) ++rank_;
    uty_ = U_.transpose() * yc_;
}

RidgeFit RidgeProblem::fit(double lambda) const {
    if (lambda < 0) throw NumericError("negative ridge penalty");
    if (lambda == 0 && !full_rank())
        throw NumericError("rank-deficient design at lambda = 0");
    Eigen::VectorXd shrink(sv_.size());
    for (Eigen::Index i = 0; i < sv_.size(); ++i) {
        double s = sv_(i);
        shrink(i) = (s == 0 && lambda == 0) ? 0 : s / (s * s + lambda);
    }
    RidgeFit out;
    out.alpha = y_mean_;
    out.beta = V_ * shrink.cwiseProduct(uty_);
    return out;
}

double RidgeProblem::loo_mse(double lambda) const {
    if (lambda < 0) throw NumericError("negative ridge penalty");
    if (lambda == 0 && !full_rank())
        throw NumericError("rank-deficient design at lambda = 0");
    // Smoother weights s^2/(s^2+lambda); hat includes the unpenalized intercept.
    Eigen::VectorXd w(sv_.size());
    for (Eigen::Index i = 0; i < sv_.size(); ++i) {
        double s2 = sv_(i) * sv_(i);
        w(i) = (s2 + lambda) > 0 ? s2 / (s2 + lambda) : 0;
    }
    Eigen::VectorXd fitted = U_ * w.cwiseProduct(uty_);
    const double inv_n = 1.0 / static_cast<double>(n_);
    double acc = 0;
    for (Eigen::Index i = 0; i < n_; ++i) {
        double h = inv_n + (U_.row(i).transpose().array().square() * w.array()).sum();
        if (h >= 1.0 - 1e-12)
            throw NumericError("leverage degeneracy: h_ii >= 1 at lambda " + std::to_string(lambda));
        double e = yc_(i) - fitted(i);
        double loo = e / (1.0 - h);
        acc += loo * loo;
    }
    return acc / static_cast<double>(n_);
}

RidgeFit fit_ridge(const Eigen::MatrixXd& X_std, const Eigen::VectorXd& y, double lambda) {
    return RidgeProblem(X_std, y).fit(lambda);
}

double loo_mse(const Eigen::MatrixXd& X_std, const Eigen::VectorXd& y, double lambda) {
    return RidgeProblem(X_std, y).loo_mse(lambda);
}

double select_lambda(const RidgeProblem& problem, const std::vector<double>& grid,
                     double* best_mse_out) {
    if (grid.empty()) throw NumericError("empty lambda grid");
    for (std::size_t i = 1; i < grid.size(); ++i)
        if (!(grid[i - 1] < grid[i])) throw NumericError("lambda grid not sorted ascending");

    bool found = false;
    double best_lambda = 0, best_mse = 0;
    for (double lambda : grid) {
        double mse;
        try {
            mse = problem.loo_mse(lambda);
        } catch (const NumericError&) {
            continue;  // rank or leverage degeneracy at this lambda
        }
        // Ties (1e-15 relative) resolve to the larger lambda; the grid is
        // ascending, so "<=" with tolerance does exactly that.
        if (!found) {
            found = true;
            best_lambda = lambda;
            best_mse = mse;
        } else if (mse <= best_mse * (1.0 + 1e-15)) {
            best_lambda = lambda;
            best_mse = std::min(best_mse, mse);
        }
    }
    if (!found) throw NumericError("no valid lambda in grid");
    if (best_mse_out) *best_mse_out = best_mse;
    return best_lambda;
}

double select_lambda(const Eigen::MatrixXd& X_std, const Eigen::VectorXd& y,
                     const std::vector<double>& grid) {
    return select_lambda(RidgeProblem(X_std, y), grid);
}

std::optional<CrossSectionModel> fit_month(const MonthDesign& design,
                                           const std::vector<double>& grid,
                                           int min_observations,
                                           std::string* skip_reason) {
    if (design.X.rows() != design.y.size())
        throw NumericError("month design: X rows and y length differ");
    if (design.X.rows() < min_observations) {
        if (skip_reason)
            *skip_reason = "n = " + std::to_string(design.X.rows()) + " below threshold " +
                           std::to_string(min_observations);
        return std::nullopt;
    }
    if (!design.X.allFinite() || !design.y.allFinite())
        throw NumericError("month design contains non-finite entries");

    Eigen::MatrixXd X_std = design.X;
    StandardizeStats stats = standardize(X_std);
    RidgeProblem problem(X_std, design.y);
    double best_mse = 0;
    double lambda = select_lambda(problem, grid, &best_mse);
    RidgeFit fit = problem.fit(lambda);

    CrossSectionModel model;
    model.month_key = design.month_key;
    model.lambda = lambda;
    model.loo_mse = best_mse;
    model.n = design.X.rows();
    model.stats = stats;
    model.beta = fit.beta.cwiseQuotient(stats.scale);
    model.alpha = fit.alpha - model.beta.dot(stats.mean);
    return model;
}

AveragedModel update_average(const std::optional<AveragedModel>& prior,
                             const CrossSectionModel& new_model) {
    AveragedModel out;
    if (!prior) {
        out.alpha_bar = new_model.alpha;
        out.beta_bar = new_model.beta;
        out.months_used = 1;
        out.source_months = {new_model.month_key};
        return out;
    }
    if (!prior->source_months.empty() && new_model.month_key <= prior->source_months.back())
        throw DataError("out-of-order month " + month_key_to_string(new_model.month_key) +
                        " in expanding average");
    if (prior->beta_bar.size() != new_model.beta.size())
        throw NumericError("averaged model dimension mismatch");
    const double k = static_cast<double>(prior->months_used);
    out.months_used = prior->months_used + 1;
    out.alpha_bar = (prior->alpha_bar * k + new_model.alpha) / (k + 1);
    out.beta_bar = (prior->beta_bar * k + new_model.beta) / (k + 1);
    out.source_months = prior->source_months;
    out.source_months.push_back(new_model.month_key);
    return out;
}

double predict(const AveragedModel& avg, const Eigen::VectorXd& e) {
    if (e.size() != avg.beta_bar.size())
        throw NumericError("prediction dimension mismatch: " + std::to_string(e.size()) +
                           " vs " + std::to_string(avg.beta_bar.size()));
    return avg.alpha_bar + avg.beta_bar.dot(e);
}

void write_model_ledger(const std::vector<CrossSectionModel>& models, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot open for write: " + path);
    for (const auto& m : models) {
        json beta = json::array();
        for (Eigen::Index j = 0; j < m.beta.size(); ++j) beta.push_back(m.beta(j));
        json j = {{"month", month_key_to_string(m.month_key)},
                  {"alpha", m.alpha},
                  {"beta", beta},
                  {"lambda", m.lambda},
                  {"loo_mse", m.loo_mse},
                  {"n", m.n}};
        out << j.dump() << "\n";
    }
    if (!out) throw IoError("write failed: " + path);
}

std::vector<CrossSectionModel> read_model_ledger(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open: " + path);
    std::vector<CrossSectionModel> models;
    std::string line;
    long lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        try {
            json j = json::parse(line);
            CrossSectionModel m;
            m.month_key = parse_month_key(j.at("month").get<std::string>());
            m.alpha = j.at("alpha").get<double>();
            const auto& beta = j.at("beta");
            m.beta.resize(static_cast<Eigen::Index>(beta.size()));
            for (std::size_t k = 0; k < beta.size(); ++k)
                m.beta(static_cast<Eigen::Index>(k)) = beta[k].get<double>();
            m.lambda = j.at("lambda").get<double>();
            m.loo_mse = j.at("loo_mse").get<double>();
            m.n = j.at("n").get<long>();
            models.push_back(std::move(m));
        } catch (const json::exception& e) {
            throw ParseError(std::string("bad ledger record: ") + e.what(), lineno);
        }
    }
    return models;
}

}  // namespace newsfolio
