#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "newsfolio/panel.hpp"
#include "newsfolio/pooling.hpp"
#include "newsfolio/portfolio.hpp"
#include "newsfolio/ridge.hpp"
#include "newsfolio/sharpe_test.hpp"

namespace newsfolio {

struct RunConfig {
    std::string returns_path;
    std::string embeddings_path;           // index sidecar at default_index_path()
    std::string out_dir;

    Date burn_in_start{2007, 1, 1};
    Date test_start{2008, 1, 1};
    Date test_end{2023, 7, 31};

    // "realtime" or a fixed variant: "last" | "mean" | "first".
    std::string variant_policy = "realtime";

    std::vector<double> lambda_grid = default_lambda_grid();
    int min_month_observations = kMinMonthObservations;
    int min_names_per_day = kMinNamesPerDay;

    std::string sr_test = "hac";           // "hac" | "bootstrap"
    int bootstrap_draws = 4999;
    int block_length = 5;
    std::uint64_t seed = 0;
    int threads = 1;

    void validate() const;
};

// Flat key-value config file with [section] headers; keys are section.key.
RunConfig parse_run_config(const std::string& path);

struct MonthProvenance {
    int forecast_month = 0;
    std::string variant;
    std::vector<int> model_months;         // strictly earlier months
};

struct Forecast {
    std::string firm_id;
    Date trading_day;
    double prediction = 0;
};

// Everything derived from one embedding variant.
struct VariantRun {
    VariantId variant;
    std::vector<CrossSectionModel> models;
    std::vector<MonthProvenance> provenance;
    std::vector<DailyForecastSet> days;    // sorted by date, test window only
    std::vector<Forecast> forecasts;
    AlignmentDrops drops;
    std::vector<std::pair<int, std::string>> skipped_months;  // (month, reason)
};

VariantRun run_variant(const EmbeddingStore& store, VariantId variant,
                       const ReturnPanel& returns, const RunConfig& config);

struct RunReport {
    std::string policy;
    std::map<int, std::string> variant_by_year;   // realtime selections
    DecileSeries deciles;
    std::vector<PerfStats> decile_stats;          // d1..d10 then H-L (11 entries)
    std::vector<DecayPoint> decay;
    double self_test_p = 0;                       // H-L tested against itself
    std::map<std::string, std::uint64_t> input_hashes;
    nlohmann::json config_echo;
    std::vector<Forecast> forecasts;
    std::vector<MonthProvenance> provenance;
    std::vector<CrossSectionModel> models;        // of the policy stream
    // Ledger content: every variant that contributed models, by wire name.
    std::map<std::string, std::vector<CrossSectionModel>> models_by_variant;
    AlignmentDrops drops;
};

RunReport run_pipeline(const RunConfig& config);

// Writes report.json, table4.csv, deciles.csv, forecasts.csv, decay.csv,
// decay.svg, models.jsonl, provenance.json under config.out_dir.
void emit_report(const RunReport& report, const RunConfig& config);

struct AuditResult {
    bool passed = false;
    std::vector<std::string> violations;
};

// Re-validates forecast causality from the emitted artifacts alone.
AuditResult audit_run(const std::string& out_dir);

struct SweepVintage {
    int cutoff_year = 0;
    std::string store_path;
};

struct SweepConfig {
    RunConfig base;                       // out_dir is the sweep root
    std::vector<SweepVintage> vintages;   // normalized to chronological order
    std::string realtime_store_path;      // empty: stitch from vintages by year
};

struct SweepResult {
    std::vector<std::pair<std::string, double>> sharpe_by_run;  // vintage name / "realtime"
    PairwiseMatrix p_matrix;
    std::map<std::string, std::vector<double>> hl_by_run;       // aligned date grid
};

SweepResult vintage_sweep(const SweepConfig& config);

std::uint64_t fnv1a_file(const std::string& path);

// Minimal standalone SVG chart with optional error bars.
void write_svg_points(const std::string& path, const std::string& title,
                      const std::vector<std::tuple<double, double, double>>& points_with_err,
                      const std::string& x_label, const std::string& y_label);

}  // namespace newsfolio
