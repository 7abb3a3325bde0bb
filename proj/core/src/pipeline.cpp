#include "newsfolio/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <future>
#include <set>
#include <sstream>

#include "newsfolio/errors.hpp"

namespace newsfolio {

namespace fs = std::filesystem;
using nlohmann::json;

void RunConfig::validate() const {
    if (returns_path.empty()) throw ConfigError("returns path not set");
    if (embeddings_path.empty()) throw ConfigError("embeddings path not set");
    if (out_dir.empty()) throw ConfigError("output directory not set");
    if (!(burn_in_start < test_start)) throw ConfigError("burn-in must end before the test start");
    if (!(test_start <= test_end)) throw ConfigError("test_start must be <= test_end");
    if (variant_policy != "realtime" && variant_policy != "last" && variant_policy != "mean" &&
        variant_policy != "first")
        throw ConfigError("variant_policy must be realtime|last|mean|first");
    if (sr_test != "hac" && sr_test != "bootstrap")
        throw ConfigError("sr_test must be hac|bootstrap");
    if (lambda_grid.empty()) throw ConfigError("lambda grid is empty");
    if (threads < 1) throw ConfigError("threads must be >= 1");
}

RunConfig parse_run_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open config: " + path);
    RunConfig cfg;
    std::string line, section;
    long lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        std::size_t b = line.find_first_not_of(" \t\r");
        if (b == std::string::npos) continue;
        std::size_t e = line.find_last_not_of(" \t\r");
        line = line.substr(b, e - b + 1);
        if (line.front() == '[') {
            if (line.back() != ']') throw ConfigError("bad section at line " + std::to_string(lineno));
            section = line.substr(1, line.size() - 2);
            continue;
        }
        auto eq = line.find('=');
        if (eq == std::string::npos) throw ConfigError("expected key=value at line " + std::to_string(lineno));
        auto strip = [](std::string s) {
            std::size_t b2 = s.find_first_not_of(" \t");
            if (b2 == std::string::npos) return std::string{};
            std::size_t e2 = s.find_last_not_of(" \t");
            return s.substr(b2, e2 - b2 + 1);
        };
        std::string key = section + "." + strip(line.substr(0, eq));
        std::string value = strip(line.substr(eq + 1));

        if (key == "paths.returns") cfg.returns_path = value;
        else if (key == "paths.embeddings") cfg.embeddings_path = value;
        else if (key == "paths.out_dir") cfg.out_dir = value;
        else if (key == "sample.burn_in_start") cfg.burn_in_start = Date::parse(value);
        else if (key == "sample.test_start") cfg.test_start = Date::parse(value);
        else if (key == "sample.test_end") cfg.test_end = Date::parse(value);
        else if (key == "model.variant_policy") cfg.variant_policy = value;
        else if (key == "model.min_month_observations") cfg.min_month_observations = std::stoi(value);
        else if (key == "model.min_names_per_day") cfg.min_names_per_day = std::stoi(value);
        else if (key == "model.lambda_grid") {
            cfg.lambda_grid.clear();
            std::istringstream ss(value);
            std::string tok;
            while (std::getline(ss, tok, ',')) cfg.lambda_grid.push_back(std::stod(tok));
        } else if (key == "stats.sr_test") cfg.sr_test = value;
        else if (key == "stats.bootstrap_draws") cfg.bootstrap_draws = std::stoi(value);
        else if (key == "stats.block_length") cfg.block_length = std::stoi(value);
        else if (key == "stats.seed") cfg.seed = std::stoull(value);
        else if (key == "run.threads") cfg.threads = std::stoi(value);
        else throw ConfigError("unknown config key '" + key + "' at line " + std::to_string(lineno));
    }
    return cfg;
}

namespace {

Eigen::VectorXd store_row(const EmbeddingStore& store, std::size_t row) {
    Eigen::VectorXd e(store.dim());
    const float* p = store.row(static_cast<std::uint32_t>(row));
    for (std::uint32_t j = 0; j < store.dim(); ++j) e(static_cast<Eigen::Index>(j)) = p[j];
    return e;
}

}  // namespace

VariantRun run_variant(const EmbeddingStore& store, VariantId variant,
                       const ReturnPanel& returns, const RunConfig& config) {
    VariantRun run;
    run.variant = variant;

    AlignmentResult aligned = align_store_next_day_returns(store, variant, returns);
    run.drops = aligned.drops;

    // Pool observations into calendar months, burn-in start through test end.
    std::map<int, std::vector<const AlignedObservation*>> by_month;
    for (const auto& obs : aligned.observations) {
        if (obs.trading_day < config.burn_in_start || config.test_end < obs.trading_day) continue;
        by_month[obs.trading_day.month_key()].push_back(&obs);
    }

    std::vector<int> months;
    for (const auto& [mk, _] : by_month) months.push_back(mk);

    // Monthly fits are independent; run them (optionally) in parallel, then
    // reduce sequentially in month order.
    std::vector<std::optional<CrossSectionModel>> fits(months.size());
    std::vector<std::string> reasons(months.size());
    auto fit_one = [&](std::size_t i) {
        const auto& obs = by_month.at(months[i]);
        MonthDesign design;
        design.month_key = months[i];
        design.X.resize(static_cast<Eigen::Index>(obs.size()), store.dim());
        design.y.resize(static_cast<Eigen::Index>(obs.size()));
        for (std::size_t r = 0; r < obs.size(); ++r) {
            design.X.row(static_cast<Eigen::Index>(r)) = store_row(store, obs[r]->embedding_row).transpose();
            design.y(static_cast<Eigen::Index>(r)) = obs[r]->next_day_return;
            design.provenance.emplace_back(obs[r]->firm_id, obs[r]->trading_day);
        }
        fits[i] = fit_month(design, config.lambda_grid, config.min_month_observations, &reasons[i]);
    };
    if (config.threads > 1) {
        std::atomic<std::size_t> next{0};
        std::vector<std::future<void>> workers;
        int n_workers = std::min<int>(config.threads, static_cast<int>(months.size()));
        for (int w = 0; w < n_workers; ++w)
            workers.push_back(std::async(std::launch::async, [&] {
                for (std::size_t i = next.fetch_add(1); i < months.size(); i = next.fetch_add(1))
                    fit_one(i);
            }));
        for (auto& f : workers) f.get();
    } else {
        for (std::size_t i = 0; i < months.size(); ++i) fit_one(i);
    }

    // Expanding Fama-MacBeth pass: forecast month m' with the average of all
    // models from months < m', then fold month m' in.
    std::optional<AveragedModel> avg;
    std::map<Date, DailyForecastSet> day_sets;
    for (std::size_t i = 0; i < months.size(); ++i) {
        const int mk = months[i];
        if (avg) {
            bool any = false;
            for (const AlignedObservation* obs : by_month.at(mk)) {
                if (obs->trading_day < config.test_start || config.test_end < obs->trading_day) continue;
                double pred = predict(*avg, store_row(store, obs->embedding_row));
                run.forecasts.push_back({obs->firm_id, obs->trading_day, pred});
                auto& ds = day_sets[obs->trading_day];
                ds.trading_day = obs->trading_day;
                ForecastEntry entry;
                entry.firm_id = obs->firm_id;
                entry.prediction = pred;
                entry.next_day_return = obs->next_day_return;
                for (int tau = 0; tau < kDecayHorizons; ++tau) {
                    Date dtau;
                    double r;
                    if (returns.calendar().shift(obs->trading_day, tau, dtau) &&
                        returns.lookup(obs->firm_id, dtau, r))
                        entry.horizon_returns[static_cast<std::size_t>(tau)] = r;
                }
                ds.entries.push_back(std::move(entry));
                any = true;
            }
            if (any)
                run.provenance.push_back({mk, variant_name(variant), avg->source_months});
        }
        if (fits[i]) {
            run.models.push_back(*fits[i]);
            avg = update_average(avg, *fits[i]);
        } else {
            run.skipped_months.emplace_back(mk, reasons[i]);
        }
    }

    run.days.reserve(day_sets.size());
    for (auto& [day, ds] : day_sets) run.days.push_back(std::move(ds));
    return run;
}

namespace {

// H-L history strictly before `cutoff`, per variant, for realtime selection.
std::map<VariantId, std::vector<double>> history_before(
    const std::map<VariantId, DecileSeries>& series, Date cutoff) {
    std::map<VariantId, std::vector<double>> out;
    for (const auto& [v, s] : series) {
        std::vector<double> hl;
        for (std::size_t i = 0; i < s.dates.size(); ++i)
            if (s.dates[i] < cutoff) hl.push_back(s.rows[i].hl);
        out[v] = std::move(hl);
    }
    return out;
}

}  // namespace

RunReport run_pipeline(const RunConfig& config) {
    config.validate();
    ReturnPanel returns = load_returns(config.returns_path);
    EmbeddingStore store =
        read_embedding_store(config.embeddings_path, default_index_path(config.embeddings_path));

    RunReport report;
    report.policy = config.variant_policy;
    report.input_hashes["returns"] = fnv1a_file(config.returns_path);
    report.input_hashes["embeddings"] = fnv1a_file(config.embeddings_path);

    std::vector<DailyForecastSet> chosen_days;
    if (config.variant_policy != "realtime") {
        VariantId v = parse_variant(config.variant_policy);
        VariantRun run = run_variant(store, v, returns, config);
        chosen_days = run.days;
        report.forecasts = std::move(run.forecasts);
        std::sort(report.forecasts.begin(), report.forecasts.end(),
                  [](const Forecast& a, const Forecast& b) {
                      if (a.trading_day != b.trading_day) return a.trading_day < b.trading_day;
                      return a.firm_id < b.firm_id;
                  });
        report.provenance = std::move(run.provenance);
        report.models = std::move(run.models);
        report.drops = run.drops;
    } else {
        std::map<VariantId, VariantRun> runs;
        for (VariantId v : {VariantId::last_layer, VariantId::all_layer_mean, VariantId::first_layer})
            runs.emplace(v, run_variant(store, v, returns, config));
        report.drops = runs.begin()->second.drops;

        std::map<VariantId, DecileSeries> series;
        for (const auto& [v, run] : runs)
            series.emplace(v, build_decile_series(run.days, config.min_names_per_day));

        // Annual selection: each calendar year uses the variant with the best
        // expanding-window Sharpe over history through the prior year end.
        std::set<int> years;
        for (const auto& [v, run] : runs)
            for (const auto& d : run.days) years.insert(d.trading_day.year());
        std::map<int, VariantId> choice;
        for (int y : years) {
            VariantId v = kDefaultVariant;
            try {
                v = select_variant(history_before(series, Date(y, 1, 1)));
            } catch (const std::exception&) {
                // Not enough history yet (or degenerate): fall back to default.
            }
            choice[y] = v;
            report.variant_by_year[y] = variant_name(v);
        }

        for (const auto& [y, v] : choice) {
            const VariantRun& run = runs.at(v);
            for (const auto& d : run.days)
                if (d.trading_day.year() == y) chosen_days.push_back(d);
            for (const auto& f : run.forecasts)
                if (f.trading_day.year() == y) report.forecasts.push_back(f);
            for (const auto& p : run.provenance)
                if (p.forecast_month / 12 == y) report.provenance.push_back(p);
        }
        std::sort(chosen_days.begin(), chosen_days.end(),
                  [](const DailyForecastSet& a, const DailyForecastSet& b) {
                      return a.trading_day < b.trading_day;
                  });
        std::sort(report.forecasts.begin(), report.forecasts.end(), [](const Forecast& a, const Forecast& b) {
            if (a.trading_day != b.trading_day) return a.trading_day < b.trading_day;
            return a.firm_id < b.firm_id;
        });
        std::sort(report.provenance.begin(), report.provenance.end(),
                  [](const MonthProvenance& a, const MonthProvenance& b) {
                      return a.forecast_month < b.forecast_month;
                  });
        // The ledger carries every variant's models; provenance lines name the
        // variant they came from.
        for (const auto& [v, run] : runs) {
            std::string name = variant_name(v);
            for (const auto& m : run.models) report.models_by_variant[name].push_back(m);
        }
    }
    if (config.variant_policy != "realtime")
        report.models_by_variant[config.variant_policy] = report.models;

    report.deciles = build_decile_series(chosen_days, config.min_names_per_day);
    for (int k = 1; k <= 10; ++k)
        report.decile_stats.push_back(annualize(report.deciles.decile_series(k)));
    report.decile_stats.push_back(annualize(report.deciles.hl_series()));
    report.decay = decay_curve(chosen_days, config.min_names_per_day);

    std::vector<double> hl = report.deciles.hl_series();
    if (hl.size() >= kMinPairedLength) {
        SharpeTestConfig tcfg;
        tcfg.seed = config.seed;
        tcfg.bootstrap_draws = config.bootstrap_draws;
        tcfg.block_length = config.block_length;
        PairedSeries self{hl, hl};
        report.self_test_p = (config.sr_test == "bootstrap")
                                 ? lw_bootstrap_test(self, tcfg).p_one_sided
                                 : lw_test(self, tcfg).p_one_sided;
    } else {
        report.self_test_p = std::nan("");
    }

    json echo;
    echo["returns"] = config.returns_path;
    echo["embeddings"] = config.embeddings_path;
    echo["burn_in_start"] = config.burn_in_start.to_string();
    echo["test_start"] = config.test_start.to_string();
    echo["test_end"] = config.test_end.to_string();
    echo["variant_policy"] = config.variant_policy;
    echo["sr_test"] = config.sr_test;
    echo["seed"] = config.seed;
    echo["min_month_observations"] = config.min_month_observations;
    echo["min_names_per_day"] = config.min_names_per_day;
    report.config_echo = echo;
    return report;
}

namespace {

std::string round2(double x) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.2f", x);
    return buf;
}

json provenance_json(const RunReport& report) {
    json months = json::object();
    for (const auto& p : report.provenance) {
        json mm = json::array();
        for (int m : p.model_months) mm.push_back(month_key_to_string(m));
        months[month_key_to_string(p.forecast_month)] = {{"variant", p.variant},
                                                         {"model_months", mm}};
    }
    return {{"policy", report.policy}, {"months", months}};
}

}  // namespace

void emit_report(const RunReport& report, const RunConfig& config) {
    fs::create_directories(config.out_dir);
    const fs::path dir(config.out_dir);

    {
        std::ofstream out(dir / "models.jsonl");
        if (!out) throw IoError("cannot write models.jsonl");
        for (const auto& [variant, models] : report.models_by_variant) {
            for (const auto& m : models) {
                json beta = json::array();
                for (Eigen::Index j = 0; j < m.beta.size(); ++j) beta.push_back(m.beta(j));
                json j = {{"variant", variant},
                          {"month", month_key_to_string(m.month_key)},
                          {"alpha", m.alpha},
                          {"beta", beta},
                          {"lambda", m.lambda},
                          {"loo_mse", m.loo_mse},
                          {"n", m.n}};
                out << j.dump() << "\n";
            }
        }
    }
    {
        std::ofstream out(dir / "provenance.json");
        if (!out) throw IoError("cannot write provenance.json");
        out << provenance_json(report).dump(2) << "\n";
    }
    {
        std::ofstream out(dir / "forecasts.csv");
        if (!out) throw IoError("cannot write forecasts.csv");
        out << "firm_id,date,prediction\n";
        out.precision(17);
        for (const auto& f : report.forecasts)
            out << f.firm_id << "," << f.trading_day.to_string() << "," << f.prediction << "\n";
    }
    {
        std::ofstream out(dir / "deciles.csv");
        if (!out) throw IoError("cannot write deciles.csv");
        out << "date,d1,d2,d3,d4,d5,d6,d7,d8,d9,d10,hl,n_names\n";
        out.precision(17);
        for (std::size_t i = 0; i < report.deciles.dates.size(); ++i) {
            const auto& r = report.deciles.rows[i];
            out << report.deciles.dates[i].to_string();
            int n = 0;
            for (int k = 0; k < 10; ++k) {
                out << "," << r.decile[static_cast<std::size_t>(k)];
                n += r.counts[static_cast<std::size_t>(k)];
            }
            out << "," << r.hl << "," << n << "\n";
        }
    }
    {
        // Table-4 shape: Low..High then H-L, three metric columns, 2 decimals.
        std::ofstream out(dir / "table4.csv");
        if (!out) throw IoError("cannot write table4.csv");
        out << "portfolio,mean,sd,sr\n";
        const char* names[11] = {"Low (L)", "2", "3", "4", "5", "6", "7", "8", "9", "High (H)", "H-L"};
        for (int k = 0; k < 11; ++k) {
            const PerfStats& s = report.decile_stats[static_cast<std::size_t>(k)];
            out << names[k] << "," << round2(s.mean_annual_pct) << "," << round2(s.sd_annual_pct)
                << "," << round2(s.sharpe) << "\n";
        }
    }
    {
        std::ofstream out(dir / "decay.csv");
        if (!out) throw IoError("cannot write decay.csv");
        out << "horizon,mean_annual,ci_low,ci_high,n_days\n";
        for (const auto& pt : report.decay) {
            if (pt.omitted) continue;
            out << pt.horizon << "," << round2(pt.mean_annual_pct) << ","
                << round2(pt.mean_annual_pct - pt.ci_half_width) << ","
                << round2(pt.mean_annual_pct + pt.ci_half_width) << "," << pt.n_days << "\n";
        }
    }
    {
        std::vector<std::tuple<double, double, double>> pts;
        for (const auto& pt : report.decay)
            if (!pt.omitted)
                pts.emplace_back(pt.horizon, pt.mean_annual_pct, pt.ci_half_width);
        write_svg_points((dir / "decay.svg").string(), "News decay", pts,
                         "horizon (trading days)", "annualized H-L return (%)");
    }
    {
        json j;
        j["policy"] = report.policy;
        j["config"] = report.config_echo;
        json hashes = json::object();
        for (const auto& [k, v] : report.input_hashes) {
            char buf[24];
            std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
            hashes[k] = buf;
        }
        j["input_hashes"] = hashes;
        json vby = json::object();
        for (const auto& [y, v] : report.variant_by_year) vby[std::to_string(y)] = v;
        j["variant_by_year"] = vby;
        json stats = json::array();
        for (const auto& s : report.decile_stats)
            stats.push_back({{"mean_annual_pct", s.mean_annual_pct},
                             {"sd_annual_pct", s.sd_annual_pct},
                             {"sharpe", s.sharpe},
                             {"n_days", s.n_days}});
        j["decile_stats"] = stats;
        json decay = json::array();
        for (const auto& pt : report.decay)
            decay.push_back({{"horizon", pt.horizon},
                             {"mean_annual_pct", pt.mean_annual_pct},
                             {"ci_half_width", pt.ci_half_width},
                             {"n_days", pt.n_days},
                             {"omitted", pt.omitted}});
        j["decay"] = decay;
        j["self_test_p"] = report.self_test_p;
        j["drops"] = {{"no_embedding", report.drops.no_embedding},
                      {"no_next_day", report.drops.no_next_day},
                      {"no_return", report.drops.no_return}};
        j["n_forecasts"] = report.forecasts.size();
        j["n_days"] = report.deciles.dates.size();
        j["n_skipped_days"] = report.deciles.skipped.size();
        std::ofstream out(dir / "report.json");
        if (!out) throw IoError("cannot write report.json");
        out << j.dump(2) << "\n";
    }
}

AuditResult audit_run(const std::string& out_dir) {
    AuditResult result;
    const fs::path dir(out_dir);

    std::set<std::pair<std::string, int>> ledger;  // (variant, month)
    {
        std::ifstream in(dir / "models.jsonl");
        if (!in) throw IoError("cannot open models.jsonl in " + out_dir);
        std::string line;
        long lineno = 0;
        while (std::getline(in, line)) {
            ++lineno;
            if (line.empty()) continue;
            try {
                json j = json::parse(line);
                ledger.emplace(j.value("variant", std::string("?")),
                               parse_month_key(j.at("month").get<std::string>()));
            } catch (const json::exception& e) {
                throw ParseError(std::string("bad ledger record: ") + e.what(), lineno);
            }
        }
    }

    std::ifstream in(dir / "provenance.json");
    if (!in) throw IoError("cannot open provenance.json in " + out_dir);
    json prov = json::parse(in);
    for (const auto& [month_s, entry] : prov.at("months").items()) {
        int forecast_month = parse_month_key(month_s);
        std::string variant = entry.at("variant").get<std::string>();
        const auto& mm = entry.at("model_months");
        if (mm.empty())
            result.violations.push_back("forecast month " + month_s + " has no source models");
        for (const auto& m : mm) {
            int mk = parse_month_key(m.get<std::string>());
            if (mk >= forecast_month)
                result.violations.push_back("forecast month " + month_s +
                                            " references model month " + m.get<std::string>() +
                                            " (not strictly earlier)");
            if (!ledger.count({variant, mk}))
                result.violations.push_back("forecast month " + month_s + " references model " +
                                            variant + "/" + m.get<std::string>() +
                                            " absent from the ledger");
        }
    }
    result.passed = result.violations.empty();
    return result;
}

SweepResult vintage_sweep(const SweepConfig& config) {
    SweepConfig cfg = config;
    std::sort(cfg.vintages.begin(), cfg.vintages.end(),
              [](const SweepVintage& a, const SweepVintage& b) { return a.cutoff_year < b.cutoff_year; });
    if (cfg.vintages.empty()) throw ConfigError("sweep needs at least one vintage");

    ReturnPanel returns = load_returns(cfg.base.returns_path);

    // Coverage: every test-sample year must have rows in every vintage store.
    std::vector<std::pair<std::string, EmbeddingStore>> stores;
    for (const auto& v : cfg.vintages) {
        EmbeddingStore s = read_embedding_store(v.store_path, default_index_path(v.store_path));
        std::set<int> years;
        for (const auto& [key, row] : s.index()) years.insert(std::get<1>(key).year());
        for (int y = cfg.base.test_start.year(); y <= cfg.base.test_end.year(); ++y)
            if (!years.count(y))
                throw DataError("vintage " + std::to_string(v.cutoff_year) +
                                " has no coverage for year " + std::to_string(y));
        stores.emplace_back("vintage_" + std::to_string(v.cutoff_year), std::move(s));
    }

    // Realtime store: provided, or stitched from vintage year slices.
    if (!cfg.realtime_store_path.empty()) {
        stores.emplace_back("realtime",
                            read_embedding_store(cfg.realtime_store_path,
                                                 default_index_path(cfg.realtime_store_path)));
    } else {
        EmbeddingStore rt(stores.front().second.dim());
        const int c0 = cfg.vintages.front().cutoff_year;
        const int c1 = cfg.vintages.back().cutoff_year;
        std::map<std::pair<std::size_t, std::uint32_t>, std::uint32_t> rows_added;
        for (const auto& [key, row] : stores.front().second.index()) {
            Date d = std::get<1>(key);
            int cutoff = std::min(std::max(d.year() - 1, c0), c1);
            std::size_t vi = 0;
            for (std::size_t i = 0; i < cfg.vintages.size(); ++i)
                if (cfg.vintages[i].cutoff_year == cutoff) vi = i;
            const EmbeddingStore& src = stores[vi].second;
            std::uint32_t src_row;
            if (!src.find(std::get<0>(key), d, std::get<2>(key), src_row)) continue;
            auto cache_key = std::make_pair(vi, src_row);
            std::uint32_t dst_row;
            auto it = rows_added.find(cache_key);
            if (it == rows_added.end()) {
                std::vector<float> vec(src.row(src_row), src.row(src_row) + src.dim());
                dst_row = rt.append_row(vec);
                rows_added.emplace(cache_key, dst_row);
            } else {
                dst_row = it->second;
            }
            rt.map_key(std::get<0>(key), d, std::get<2>(key), dst_row);
        }
        stores.emplace_back("realtime", std::move(rt));
    }

    SweepResult result;
    std::map<std::string, std::map<Date, double>> hl_by_date;
    fs::create_directories(cfg.base.out_dir);
    for (auto& [name, store] : stores) {
        RunConfig rc = cfg.base;
        rc.out_dir = (fs::path(cfg.base.out_dir) / name).string();
        // Reuse the already-loaded store through a scratch write: run_variant
        // operates on in-memory stores, so drive the pipeline pieces directly.
        std::vector<DailyForecastSet> days;
        if (rc.variant_policy == "realtime") {
            // Within a sweep each store is a single source; realtime variant
            // selection still applies per store.
            RunConfig sub = rc;
            std::map<VariantId, VariantRun> runs;
            for (VariantId v : {VariantId::last_layer, VariantId::all_layer_mean, VariantId::first_layer})
                runs.emplace(v, run_variant(store, v, returns, sub));
            std::map<VariantId, DecileSeries> series;
            for (const auto& [v, run] : runs)
                series.emplace(v, build_decile_series(run.days, sub.min_names_per_day));
            std::set<int> years;
            for (const auto& [v, run] : runs)
                for (const auto& d : run.days) years.insert(d.trading_day.year());
            for (int y : years) {
                VariantId v = kDefaultVariant;
                try {
                    v = select_variant(history_before(series, Date(y, 1, 1)));
                } catch (const std::exception&) {
                }
                for (const auto& d : runs.at(v).days)
                    if (d.trading_day.year() == y) days.push_back(d);
            }
            std::sort(days.begin(), days.end(), [](const DailyForecastSet& a, const DailyForecastSet& b) {
                return a.trading_day < b.trading_day;
            });
        } else {
            VariantRun run = run_variant(store, parse_variant(rc.variant_policy), returns, rc);
            days = std::move(run.days);
        }
        DecileSeries ds = build_decile_series(days, rc.min_names_per_day);
        result.sharpe_by_run.emplace_back(name, annualize(ds.hl_series()).sharpe);
        for (std::size_t i = 0; i < ds.dates.size(); ++i)
            hl_by_date[name][ds.dates[i]] = ds.rows[i].hl;
    }

    // Align on the intersection of dates for the pairwise tests.
    std::set<Date> common;
    bool first = true;
    for (const auto& [name, m] : hl_by_date) {
        std::set<Date> here;
        for (const auto& [d, _] : m) here.insert(d);
        if (first) { common = here; first = false; }
        else {
            std::set<Date> inter;
            std::set_intersection(common.begin(), common.end(), here.begin(), here.end(),
                                  std::inserter(inter, inter.begin()));
            common = inter;
        }
    }
    for (const auto& [name, m] : hl_by_date) {
        std::vector<double> series;
        for (Date d : common) series.push_back(m.at(d));
        result.hl_by_run[name] = std::move(series);
    }
    if (common.size() >= kMinPairedLength) {
        SharpeTestConfig tcfg;
        tcfg.seed = cfg.base.seed;
        tcfg.bootstrap_draws = cfg.base.bootstrap_draws;
        tcfg.block_length = cfg.base.block_length;
        result.p_matrix = pairwise_matrix(result.hl_by_run, tcfg, cfg.base.sr_test == "bootstrap");
    }

    // Envelope artifacts.
    {
        std::ofstream out(fs::path(cfg.base.out_dir) / "envelope.csv");
        if (!out) throw IoError("cannot write envelope.csv");
        out << "run,sharpe\n";
        for (const auto& [name, sr] : result.sharpe_by_run) out << name << "," << round2(sr) << "\n";
    }
    {
        std::vector<std::tuple<double, double, double>> pts;
        double x = 0;
        for (const auto& [name, sr] : result.sharpe_by_run) pts.emplace_back(x++, sr, 0.0);
        write_svg_points((fs::path(cfg.base.out_dir) / "envelope.svg").string(),
                         "Vintage envelope", pts, "run index (vintages, then realtime)",
                         "annualized H-L Sharpe");
    }
    if (!result.p_matrix.names.empty()) {
        std::ofstream out(fs::path(cfg.base.out_dir) / "pmatrix.csv");
        if (!out) throw IoError("cannot write pmatrix.csv");
        out << "model";
        for (const auto& n : result.p_matrix.names) out << "," << n;
        out << "\n";
        for (std::size_t i = 0; i < result.p_matrix.names.size(); ++i) {
            out << result.p_matrix.names[i];
            for (std::size_t j = 0; j < result.p_matrix.names.size(); ++j) {
                out << ",";
                if (result.p_matrix.p[i][j]) out << round2(*result.p_matrix.p[i][j]);
            }
            out << "\n";
        }
    }
    return result;
}

std::uint64_t fnv1a_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open: " + path);
    std::uint64_t h = 14695981039346656037ULL;
    char buf[65536];
    while (in.read(buf, sizeof(buf)) || in.gcount() > 0) {
        for (std::streamsize i = 0; i < in.gcount(); ++i) {
            h ^= static_cast<unsigned char>(buf[i]);
            h *= 1099511628211ULL;
        }
        if (!in) break;
    }
    return h;
}

void write_svg_points(const std::string& path, const std::string& title,
                      const std::vector<std::tuple<double, double, double>>& points,
                      const std::string& x_label, const std::string& y_label) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot open for write: " + path);
    const double W = 640, H = 400, ml = 70, mr = 20, mt = 40, mb = 50;
    double xmin = 0, xmax = 1, ymin = 0, ymax = 1;
    if (!points.empty()) {
        xmin = xmax = std::get<0>(points.front());
        ymin = ymax = std::get<1>(points.front());
        for (const auto& [x, y, e] : points) {
            xmin = std::min(xmin, x); xmax = std::max(xmax, x);
            ymin = std::min(ymin, y - e); ymax = std::max(ymax, y + e);
        }
    }
    ymin = std::min(ymin, 0.0);
    ymax = std::max(ymax, 0.0);
    if (xmax == xmin) xmax = xmin + 1;
    if (ymax == ymin) ymax = ymin + 1;
    auto sx = [&](double x) { return ml + (x - xmin) / (xmax - xmin) * (W - ml - mr); };
    auto sy = [&](double y) { return H - mb - (y - ymin) / (ymax - ymin) * (H - mt - mb); };

    out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H << "\">\n";
    out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    out << "<text x=\"" << W / 2 << "\" y=\"22\" text-anchor=\"middle\" font-size=\"15\">"
        << title << "</text>\n";
    out << "<line x1=\"" << ml << "\" y1=\"" << H - mb << "\" x2=\"" << W - mr << "\" y2=\""
        << H - mb << "\" stroke=\"black\"/>\n";
    out << "<line x1=\"" << ml << "\" y1=\"" << mt << "\" x2=\"" << ml << "\" y2=\"" << H - mb
        << "\" stroke=\"black\"/>\n";
    out << "<line x1=\"" << ml << "\" y1=\"" << sy(0) << "\" x2=\"" << W - mr << "\" y2=\""
        << sy(0) << "\" stroke=\"#bbb\" stroke-dasharray=\"4 3\"/>\n";
    out << "<text x=\"" << W / 2 << "\" y=\"" << H - 12 << "\" text-anchor=\"middle\" font-size=\"12\">"
        << x_label << "</text>\n";
    out << "<text x=\"16\" y=\"" << H / 2 << "\" text-anchor=\"middle\" font-size=\"12\" transform=\"rotate(-90 16 "
        << H / 2 << ")\">" << y_label << "</text>\n";
    if (points.size() > 1) {
        out << "<polyline fill=\"none\" stroke=\"#2166ac\" stroke-width=\"1.5\" points=\"";
        for (const auto& [x, y, e] : points) out << sx(x) << "," << sy(y) << " ";
        out << "\"/>\n";
    }
    for (const auto& [x, y, e] : points) {
        if (e > 0) {
            out << "<line x1=\"" << sx(x) << "\" y1=\"" << sy(y - e) << "\" x2=\"" << sx(x)
                << "\" y2=\"" << sy(y + e) << "\" stroke=\"#2166ac\"/>\n";
        }
        out << "<circle cx=\"" << sx(x) << "\" cy=\"" << sy(y) << "\" r=\"3.5\" fill=\"#2166ac\"/>\n";
    }
    out << "</svg>\n";
    if (!out) throw IoError("write failed: " + path);
}

}  // namespace newsfolio
