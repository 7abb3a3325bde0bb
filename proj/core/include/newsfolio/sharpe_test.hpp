#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "newsfolio/dates.hpp"

namespace newsfolio {

// Two daily return series on the identical date grid.
struct PairedSeries {
    std::vector<double> a;
    std::vector<double> b;

    std::size_t length() const { return a.size(); }
    void validate() const;  // equal length >= 60, finite throughout
};

constexpr std::size_t kMinPairedLength = 60;

struct SharpeTestConfig {
    std::optional<int> bandwidth;    // default floor(1.3 * T^{1/3})
    int bootstrap_draws = 4999;
    int block_length = 5;
    std::uint64_t seed = 0;
};

struct SharpeTestResult {
    double delta = 0;        // SR_a - SR_b, annualized
    double se = 0;           // HAC standard error of delta
    double z = 0;
    double p_one_sided = 0;  // P(Z >= z): null "SR_a <= SR_b"
    std::string method;      // "hac" or "bootstrap"
    int bootstrap_draws = 0;
    int block_length = 0;
};

int default_hac_bandwidth(std::size_t T);

// Parzen-kernel long-run covariance of the (already demeaned) moment
// contributions, symmetrized and eigenvalue-clipped to PSD.
Eigen::MatrixXd hac_long_run_cov(const Eigen::MatrixXd& psi, int bandwidth);

// Delta-method test on the moments (mean_a, mean_b, E a^2, E b^2).
SharpeTestResult lw_test(const PairedSeries& pair, const SharpeTestConfig& config = {});

// Studentized circular block bootstrap variant; blocks keep the two series
// synchronized and results are deterministic given the seed.
SharpeTestResult lw_bootstrap_test(const PairedSeries& pair, const SharpeTestConfig& config);

// Entry (row, col) = lw_test(row, col).p_one_sided; diagonal empty.
struct PairwiseMatrix {
    std::vector<std::string> names;
    std::vector<std::vector<std::optional<double>>> p;
};

PairwiseMatrix pairwise_matrix(const std::map<std::string, std::vector<double>>& series_by_model,
                               const SharpeTestConfig& config = {}, bool bootstrap = false);

}  // namespace newsfolio
