#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "newsfolio/errors.hpp"
#include "newsfolio/pipeline.hpp"
#include "newsfolio/synth.hpp"

using namespace newsfolio;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

fs::path temp_dir(const std::string& tag) {
    fs::path dir = fs::temp_directory_path() / ("nf_pipeline_" + tag);
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

std::string slurp(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    REQUIRE(in.good());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

// Small planted panel on disk, one calendar year of weekdays.
RunConfig synth_config(const fs::path& dir, std::uint64_t seed) {
    SynthConfig scfg;
    scfg.seed = seed;
    scfg.n_firms = 40;
    scfg.n_days = 260;
    scfg.dim = 6;
    scfg.signal_norm = 2.0 * scfg.noise_sd * std::sqrt(static_cast<double>(scfg.dim));
    SynthPanel panel = generate(scfg);

    RunConfig cfg;
    cfg.returns_path = (dir / "returns.csv").string();
    cfg.embeddings_path = (dir / "embeddings.bin").string();
    cfg.out_dir = (dir / "out").string();
    write_returns(panel.returns, cfg.returns_path);
    write_embedding_store(panel.embeddings, cfg.embeddings_path,
                          default_index_path(cfg.embeddings_path));
    cfg.burn_in_start = Date(2007, 1, 1);
    cfg.test_start = Date(2007, 7, 1);
    cfg.test_end = Date(2007, 12, 31);
    cfg.variant_policy = "mean";
    return cfg;
}

}  // namespace

TEST_CASE("config file parsing") {
    fs::path dir = temp_dir("config");
    fs::path path = dir / "run.ini";
    {
        std::ofstream out(path);
        out << "[paths]\n"
            << "returns = /data/r.csv  # comment\n"
            << "embeddings = /data/e.bin\n"
            << "out_dir = /data/out\n"
            << "\n[sample]\n"
            << "burn_in_start = 2007-01-01\n"
            << "test_start = 2008-01-01\n"
            << "test_end = 2009-06-30\n"
            << "[model]\n"
            << "variant_policy = first\n"
            << "lambda_grid = 0.1, 1, 10\n"
            << "[stats]\n"
            << "sr_test = bootstrap\n"
            << "bootstrap_draws = 1999\n"
            << "seed = 17\n"
            << "[run]\n"
            << "threads = 4\n";
    }
    RunConfig cfg = parse_run_config(path.string());
    CHECK(cfg.returns_path == "/data/r.csv");
    CHECK(cfg.test_end == Date(2009, 6, 30));
    CHECK(cfg.variant_policy == "first");
    CHECK(cfg.lambda_grid == std::vector<double>{0.1, 1.0, 10.0});
    CHECK(cfg.sr_test == "bootstrap");
    CHECK(cfg.bootstrap_draws == 1999);
    CHECK(cfg.seed == 17);
    CHECK(cfg.threads == 4);
    CHECK_NOTHROW(cfg.validate());

    {
        std::ofstream out(path);
        out << "[model]\nvariant_policyy = mean\n";
    }
    CHECK_THROWS_AS(parse_run_config(path.string()), ConfigError);
    {
        std::ofstream out(path);
        out << "[model\nvariant_policy = mean\n";
    }
    CHECK_THROWS_AS(parse_run_config(path.string()), ConfigError);
    CHECK_THROWS_AS(parse_run_config((dir / "missing.ini").string()), IoError);
}

TEST_CASE("run config validation rejects inconsistent settings") {
    RunConfig cfg;
    cfg.returns_path = "r";
    cfg.embeddings_path = "e";
    cfg.out_dir = "o";
    CHECK_NOTHROW(cfg.validate());
    RunConfig bad = cfg;
    bad.variant_policy = "best";
    CHECK_THROWS_AS(bad.validate(), ConfigError);
    bad = cfg;
    bad.test_start = bad.burn_in_start;
    CHECK_THROWS_AS(bad.validate(), ConfigError);
    bad = cfg;
    bad.sr_test = "wilcoxon";
    CHECK_THROWS_AS(bad.validate(), ConfigError);
    bad = cfg;
    bad.out_dir.clear();
    CHECK_THROWS_AS(bad.validate(), ConfigError);
}

TEST_CASE("end-to-end run on a planted panel respects the sample windows") {
    fs::path dir = temp_dir("e2e");
    RunConfig cfg = synth_config(dir, 101);
    cfg.threads = 2;
    RunReport report = run_pipeline(cfg);

    CHECK(report.policy == "mean");
    REQUIRE(!report.deciles.dates.empty());
    CHECK(report.deciles.dates.front() >= cfg.test_start);
    CHECK(report.deciles.dates.back() <= cfg.test_end);
    CHECK(report.decile_stats.size() == 11);
    CHECK(report.decay.size() == static_cast<std::size_t>(kDecayHorizons));
    CHECK(report.self_test_p == 0.5);
    CHECK(report.models_by_variant.count("mean") == 1);
    CHECK(!report.models.empty());
    CHECK(report.models.front().month_key < cfg.test_start.month_key());

    // Causality: every forecast month draws only on strictly earlier months.
    REQUIRE(!report.provenance.empty());
    for (const auto& p : report.provenance) {
        CHECK(p.forecast_month >= cfg.test_start.month_key());
        CHECK(p.variant == "mean");
        REQUIRE(!p.model_months.empty());
        for (int m : p.model_months) CHECK(m < p.forecast_month);
    }

    // The planted signal is strong: the long-short spread should be positive.
    PerfStats hl = report.decile_stats.back();
    CHECK(hl.sharpe > 1.0);

    for (std::size_t i = 1; i < report.forecasts.size(); ++i) {
        const Forecast& a = report.forecasts[i - 1];
        const Forecast& b = report.forecasts[i];
        CHECK((a.trading_day < b.trading_day ||
               (a.trading_day == b.trading_day && a.firm_id < b.firm_id)));
    }
}

TEST_CASE("reports are byte-stable across reruns and audit passes") {
    fs::path dir = temp_dir("stable");
    RunConfig cfg = synth_config(dir, 202);
    RunReport r1 = run_pipeline(cfg);
    emit_report(r1, cfg);
    for (const char* name : {"report.json", "table4.csv", "deciles.csv", "forecasts.csv",
                             "decay.csv", "decay.svg", "models.jsonl", "provenance.json"})
        CHECK(fs::exists(fs::path(cfg.out_dir) / name));

    std::string first = slurp(fs::path(cfg.out_dir) / "report.json");
    std::string first_forecasts = slurp(fs::path(cfg.out_dir) / "forecasts.csv");
    RunConfig cfg2 = cfg;
    cfg2.threads = 3;  // parallelism must not change the result
    RunReport r2 = run_pipeline(cfg2);
    emit_report(r2, cfg);
    CHECK(slurp(fs::path(cfg.out_dir) / "report.json") == first);
    CHECK(slurp(fs::path(cfg.out_dir) / "forecasts.csv") == first_forecasts);

    AuditResult audit = audit_run(cfg.out_dir);
    CHECK(audit.passed);
    CHECK(audit.violations.empty());
}

TEST_CASE("audit rejects a ledger whose forecasts peek at their own month") {
    fs::path dir = temp_dir("audit");
    RunConfig cfg = synth_config(dir, 303);
    RunReport report = run_pipeline(cfg);
    emit_report(report, cfg);
    REQUIRE(audit_run(cfg.out_dir).passed);

    fs::path prov_path = fs::path(cfg.out_dir) / "provenance.json";
    json prov = json::parse(std::ifstream(prov_path));
    auto& months = prov.at("months");
    REQUIRE(!months.empty());
    std::string month = months.items().begin().key();

    json tampered = prov;
    tampered["months"][month]["model_months"].push_back(month);
    { std::ofstream(prov_path) << tampered.dump(2) << "\n"; }
    AuditResult bad = audit_run(cfg.out_dir);
    CHECK_FALSE(bad.passed);
    REQUIRE(!bad.violations.empty());
    CHECK(bad.violations.front().find(month) != std::string::npos);

    // A provenance line naming models absent from the ledger also fails.
    tampered = prov;
    tampered["months"][month]["variant"] = "first";
    { std::ofstream(prov_path) << tampered.dump(2) << "\n"; }
    CHECK_FALSE(audit_run(cfg.out_dir).passed);

    tampered = prov;
    tampered["months"][month]["model_months"] = json::array();
    { std::ofstream(prov_path) << tampered.dump(2) << "\n"; }
    CHECK_FALSE(audit_run(cfg.out_dir).passed);
}

TEST_CASE("realtime policy records one variant choice per test year") {
    fs::path dir = temp_dir("realtime");
    RunConfig cfg = synth_config(dir, 404);
    cfg.variant_policy = "realtime";
    RunReport report = run_pipeline(cfg);
    REQUIRE(report.variant_by_year.count(2007) == 1);
    // No prior-year history exists, so the default variant is used.
    CHECK(report.variant_by_year.at(2007) == variant_name(kDefaultVariant));
    CHECK(report.models_by_variant.size() == 3);
    emit_report(report, cfg);
    CHECK(audit_run(cfg.out_dir).passed);
}

TEST_CASE("degenerate sweep: one vintage makes realtime an exact copy") {
    fs::path dir = temp_dir("sweep");
    SynthConfig scfg;
    scfg.seed = 11;
    scfg.n_firms = 40;
    scfg.n_days = 520;
    scfg.dim = 6;
    scfg.signal_norm = 2.0 * scfg.noise_sd * std::sqrt(static_cast<double>(scfg.dim));
    VintageFixture fix = vintage_envelope_fixture(scfg, 1);
    REQUIRE(fix.vintage_stores.size() == 1);
    int cutoff = fix.vintage_stores.begin()->first;

    SweepConfig sweep;
    sweep.base.returns_path = (dir / "returns.csv").string();
    write_returns(fix.returns, sweep.base.returns_path);
    std::string store_path = (dir / "v.bin").string();
    write_embedding_store(fix.vintage_stores.at(cutoff), store_path,
                          default_index_path(store_path));
    sweep.base.embeddings_path = store_path;  // placeholder; sweep reads vintages
    sweep.base.out_dir = (dir / "out").string();
    sweep.base.burn_in_start = Date(2007, 1, 1);
    sweep.base.test_start = Date(2007, 7, 1);
    sweep.base.test_end = Date(2008, 12, 31);
    sweep.base.variant_policy = "mean";
    sweep.vintages = {{cutoff, store_path}};

    SweepResult result = vintage_sweep(sweep);
    REQUIRE(result.sharpe_by_run.size() == 2);
    std::map<std::string, double> sr(result.sharpe_by_run.begin(), result.sharpe_by_run.end());
    REQUIRE(sr.count("realtime") == 1);
    std::string vname = "vintage_" + std::to_string(cutoff);
    REQUIRE(sr.count(vname) == 1);
    CHECK(sr.at("realtime") == doctest::Approx(sr.at(vname)).epsilon(1e-12));
    // Identical series: the Sharpe comparison sits on the null boundary.
    REQUIRE(result.p_matrix.names.size() == 2);
    for (std::size_t i = 0; i < 2; ++i)
        for (std::size_t j = 0; j < 2; ++j)
            if (i != j) CHECK(*result.p_matrix.p[i][j] == 0.5);
    CHECK(fs::exists(fs::path(sweep.base.out_dir) / "envelope.csv"));
    CHECK(fs::exists(fs::path(sweep.base.out_dir) / "pmatrix.csv"));
}

TEST_CASE("sweep normalizes vintage order and checks coverage") {
    fs::path dir = temp_dir("sweep2");
    SynthConfig scfg;
    scfg.seed = 12;
    scfg.n_firms = 30;
    scfg.n_days = 520;
    scfg.dim = 4;
    scfg.signal_norm = 0.1;
    scfg.rotation_deg_per_year = 45.0;
    VintageFixture fix = vintage_envelope_fixture(scfg, 2);
    std::vector<std::pair<int, std::string>> stores;
    for (const auto& [cutoff, store] : fix.vintage_stores) {
        std::string path = (dir / ("v" + std::to_string(cutoff) + ".bin")).string();
        write_embedding_store(store, path, default_index_path(path));
        stores.emplace_back(cutoff, path);
    }
    REQUIRE(stores.size() == 2);

    SweepConfig sweep;
    sweep.base.returns_path = (dir / "returns.csv").string();
    write_returns(fix.returns, sweep.base.returns_path);
    sweep.base.embeddings_path = stores[0].second;
    sweep.base.out_dir = (dir / "out").string();
    sweep.base.burn_in_start = Date(2007, 1, 1);
    sweep.base.test_start = Date(2007, 7, 1);
    sweep.base.test_end = Date(2008, 12, 31);
    sweep.base.variant_policy = "mean";
    // Deliberately listed newest-first.
    sweep.vintages = {{stores[1].first, stores[1].second}, {stores[0].first, stores[0].second}};

    SweepResult result = vintage_sweep(sweep);
    REQUIRE(result.sharpe_by_run.size() == 3);
    CHECK(result.sharpe_by_run[0].first == "vintage_" + std::to_string(stores[0].first));
    CHECK(result.sharpe_by_run[1].first == "vintage_" + std::to_string(stores[1].first));
    CHECK(result.sharpe_by_run[2].first == "realtime");

    SweepConfig bad = sweep;
    bad.base.test_end = Date(2012, 12, 31);  // beyond the fixture's coverage
    CHECK_THROWS_AS(vintage_sweep(bad), DataError);
}
