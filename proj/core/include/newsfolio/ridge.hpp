#pragma once

#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "newsfolio/dates.hpp"

namespace newsfolio {

// 21 decades, 1e-10 .. 1e10.
std::vector<double> default_lambda_grid();

struct StandardizeStats {
    Eigen::VectorXd mean;
    Eigen::VectorXd scale;              // 1 for zero-variance columns
    std::vector<bool> zero_variance;
};

// Demeans each column and scales to unit sample standard deviation.
StandardizeStats standardize(Eigen::MatrixXd& X);

struct RidgeFit {
    double alpha = 0;          // intercept (unpenalized)
    Eigen::VectorXd beta;      // slope on the standardized features
};

// Factors X once (thin SVD of the demeaned design) so per-lambda fits, hat
// diagonals, and the closed-form LOO error are cheap across a grid.
class RidgeProblem {
public:
    // X must already be column-demeaned (standardize() output).
    RidgeProblem(const Eigen::MatrixXd& X, const Eigen::VectorXd& y);

    Eigen::Index n() const { return n_; }
    Eigen::Index d() const { return d_; }
    bool full_rank() const { return rank_ == d_; }

    // lambda > 0, or lambda == 0 with a full-column-rank design.
    RidgeFit fit(double lambda) const;

    // Mean squared leave-one-out residual via e_i / (1 - h_ii) with the hat
    // matrix of the intercept-augmented ridge. Throws NumericError when any
    // h_ii >= 1 - 1e-12.
    double loo_mse(double lambda) const;

private:
    Eigen::Index n_, d_;
    Eigen::Index rank_;
    double y_mean_;
    Eigen::MatrixXd U_;        // thin
    Eigen::MatrixXd V_;
    Eigen::VectorXd sv_;
    Eigen::VectorXd uty_;      // U' (y - mean(y))
    Eigen::VectorXd yc_;
};

RidgeFit fit_ridge(const Eigen::MatrixXd& X_std, const Eigen::VectorXd& y, double lambda);
double loo_mse(const Eigen::MatrixXd& X_std, const Eigen::VectorXd& y, double lambda);

// Grid lambda minimizing the LOO MSE; ties within 1e-15 relative go to the
// larger lambda. Lambdas that hit rank or leverage degeneracies are skipped.
double select_lambda(const RidgeProblem& problem, const std::vector<double>& grid,
                     double* best_mse = nullptr);
double select_lambda(const Eigen::MatrixXd& X_std, const Eigen::VectorXd& y,
                     const std::vector<double>& grid);

struct MonthDesign {
    int month_key = 0;
    Eigen::MatrixXd X;                   // raw features, one row per firm-day
    Eigen::VectorXd y;                   // next-day returns
    std::vector<std::pair<std::string, Date>> provenance;  // (firm, t) per row
};

struct CrossSectionModel {
    int month_key = 0;
    double alpha = 0;                    // raw-coordinate intercept
    Eigen::VectorXd beta;                // raw-coordinate slopes
    double lambda = 0;
    double loo_mse = 0;
    Eigen::Index n = 0;
    StandardizeStats stats;
};

constexpr int kMinMonthObservations = 30;

// Standardize -> select lambda -> fit -> map back to raw coordinates.
// Returns nullopt (with reason) when the month has too few observations.
std::optional<CrossSectionModel> fit_month(const MonthDesign& design,
                                           const std::vector<double>& grid,
                                           int min_observations = kMinMonthObservations,
                                           std::string* skip_reason = nullptr);

struct AveragedModel {
    double alpha_bar = 0;
    Eigen::VectorXd beta_bar;
    int months_used = 0;
    std::vector<int> source_months;      // month keys averaged, ascending
};

// Running arithmetic mean of raw-coordinate coefficients; months must arrive
// strictly in order.
AveragedModel update_average(const std::optional<AveragedModel>& prior,
                             const CrossSectionModel& new_model);

double predict(const AveragedModel& avg, const Eigen::VectorXd& e);

// Model ledger JSONL: {"month","alpha","beta":[...],"lambda","loo_mse","n"}.
void write_model_ledger(const std::vector<CrossSectionModel>& models, const std::string& path);
std::vector<CrossSectionModel> read_model_ledger(const std::string& path);

}  // namespace newsfolio
