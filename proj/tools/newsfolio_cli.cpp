// Command line front end: one subcommand per pipeline stage.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "newsfolio/embed_client.hpp"
#include "newsfolio/errors.hpp"
#include "newsfolio/eval_probe.hpp"
#include "newsfolio/pipeline.hpp"
#include "newsfolio/synth.hpp"

namespace nf = newsfolio;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct GlobalFlags {
    int threads = 0;                 // 0: leave config value alone
    std::optional<std::uint64_t> seed;
    std::string sr_test;
    int bootstrap_draws = 0;
    int block_length = 0;
};

void apply_overrides(nf::RunConfig& cfg, const GlobalFlags& g) {
    if (g.threads > 0) cfg.threads = g.threads;
    if (g.seed) cfg.seed = *g.seed;
    if (!g.sr_test.empty()) cfg.sr_test = g.sr_test;
    if (g.bootstrap_draws > 0) cfg.bootstrap_draws = g.bootstrap_draws;
    if (g.block_length > 0) cfg.block_length = g.block_length;
}

nf::RunConfig load_config(const std::string& path, const GlobalFlags& g) {
    nf::RunConfig cfg = nf::parse_run_config(path);
    apply_overrides(cfg, g);
    cfg.validate();
    return cfg;
}

// Reads the hl column of a deciles.csv emitted by the pipeline.
std::map<nf::Date, double> read_hl_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw nf::IoError("cannot open: " + path);
    std::string line;
    if (!std::getline(in, line)) throw nf::DataError("empty series file: " + path);
    std::vector<std::string> cols;
    {
        std::istringstream ss(line);
        std::string tok;
        while (std::getline(ss, tok, ',')) cols.push_back(tok);
    }
    auto it = std::find(cols.begin(), cols.end(), "hl");
    if (it == cols.end()) throw nf::DataError("no 'hl' column in " + path);
    std::size_t hl_col = static_cast<std::size_t>(it - cols.begin());
    std::map<nf::Date, double> out;
    long lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        std::istringstream ss(line);
        std::string tok;
        std::vector<std::string> fields;
        while (std::getline(ss, tok, ',')) fields.push_back(tok);
        if (fields.size() <= hl_col) throw nf::ParseError("short row", lineno);
        out[nf::Date::parse(fields[0])] = std::stod(fields[hl_col]);
    }
    return out;
}

int run_ingest(const std::string& news_path, const std::string& returns_path,
               const std::string& out_path) {
    nf::ReturnPanel returns = nf::load_returns(returns_path);
    std::vector<nf::NewsItem> news = nf::load_news(news_path);
    std::vector<nf::FirmDayDoc> docs = nf::build_firm_days(news, returns.calendar());
    std::ofstream out(out_path);
    if (!out) throw nf::IoError("cannot write: " + out_path);
    for (const auto& d : docs) {
        json j = {{"firm_id", d.firm_id},
                  {"trading_day", d.trading_day.to_string()},
                  {"text", d.text},
                  {"item_count", d.item_count}};
        out << j.dump() << "\n";
    }
    std::cerr << "ingest: " << docs.size() << " firm-day docs from " << news.size()
              << " items\n";
    return 0;
}

int run_embed(const std::string& docs_path, const std::string& endpoint,
              const std::string& out_path, std::size_t batch_size) {
    std::ifstream in(docs_path);
    if (!in) throw nf::IoError("cannot open: " + docs_path);
    std::vector<std::string> firms, texts;
    std::vector<nf::Date> days;
    std::string line;
    long lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        try {
            json j = json::parse(line);
            firms.push_back(j.at("firm_id").get<std::string>());
            days.push_back(nf::Date::parse(j.at("trading_day").get<std::string>()));
            texts.push_back(j.at("text").get<std::string>());
        } catch (const json::exception& e) {
            throw nf::ParseError(std::string("bad doc record: ") + e.what(), lineno);
        }
    }
    nf::EmbedClientConfig ec;
    ec.endpoint = endpoint;
    if (batch_size > 0) ec.batch_size = batch_size;
    std::vector<nf::TokenStates> states = nf::fetch_embeddings_remote(ec, texts);

    nf::EmbeddingStore store;
    for (std::size_t i = 0; i < states.size(); ++i) {
        for (nf::VariantId v : {nf::VariantId::last_layer, nf::VariantId::all_layer_mean,
                                nf::VariantId::first_layer}) {
            Eigen::VectorXd e = nf::document_vector(states[i], v);
            if (store.dim() == 0) store = nf::EmbeddingStore(static_cast<std::uint32_t>(e.size()));
            std::vector<float> row(static_cast<std::size_t>(e.size()));
            for (Eigen::Index j = 0; j < e.size(); ++j)
                row[static_cast<std::size_t>(j)] = static_cast<float>(e(j));
            store.map_key(firms[i], days[i], v, store.append_row(row));
        }
    }
    nf::write_embedding_store(store, out_path, nf::default_index_path(out_path));
    std::cerr << "embed: " << states.size() << " docs, dim " << store.dim() << "\n";
    return 0;
}

int run_fit(const nf::RunConfig& cfg, const std::string& variant) {
    nf::ReturnPanel returns = nf::load_returns(cfg.returns_path);
    nf::EmbeddingStore store = nf::read_embedding_store(
        cfg.embeddings_path, nf::default_index_path(cfg.embeddings_path));
    nf::VariantRun run = nf::run_variant(store, nf::parse_variant(variant), returns, cfg);
    fs::create_directories(cfg.out_dir);
    nf::write_model_ledger(run.models, (fs::path(cfg.out_dir) / "models.jsonl").string());
    std::cerr << "fit: " << run.models.size() << " monthly models, "
              << run.skipped_months.size() << " skipped\n";
    for (const auto& [mk, reason] : run.skipped_months)
        std::cerr << "  skipped " << nf::month_key_to_string(mk) << ": " << reason << "\n";
    return 0;
}

int run_report(const nf::RunConfig& cfg) {
    nf::RunReport report = nf::run_pipeline(cfg);
    nf::emit_report(report, cfg);
    const nf::PerfStats& hl = report.decile_stats.back();
    std::fprintf(stderr, "H-L: mean %.2f%%, sd %.2f%%, SR %.2f over %zu days\n",
                 hl.mean_annual_pct, hl.sd_annual_pct, hl.sharpe, hl.n_days);
    return 0;
}

int run_stats(const std::vector<std::string>& series_specs, const nf::SharpeTestConfig& tcfg,
              bool bootstrap, const std::string& out_path) {
    std::map<std::string, std::map<nf::Date, double>> raw;
    for (const auto& spec : series_specs) {
        auto eq = spec.find('=');
        if (eq == std::string::npos)
            throw nf::ConfigError("series spec must be name=path: " + spec);
        raw[spec.substr(0, eq)] = read_hl_csv(spec.substr(eq + 1));
    }
    if (raw.size() < 2) throw nf::ConfigError("stats needs at least two --series");
    std::set<nf::Date> common;
    bool first = true;
    for (const auto& [name, m] : raw) {
        std::set<nf::Date> here;
        for (const auto& [d, _] : m) here.insert(d);
        if (first) { common = here; first = false; }
        else {
            std::set<nf::Date> inter;
            std::set_intersection(common.begin(), common.end(), here.begin(), here.end(),
                                  std::inserter(inter, inter.begin()));
            common = inter;
        }
    }
    std::map<std::string, std::vector<double>> aligned;
    for (const auto& [name, m] : raw) {
        std::vector<double> s;
        for (nf::Date d : common) s.push_back(m.at(d));
        aligned[name] = std::move(s);
    }
    nf::PairwiseMatrix pm = nf::pairwise_matrix(aligned, tcfg, bootstrap);
    std::ostream* os = &std::cout;
    std::ofstream file;
    if (!out_path.empty()) {
        file.open(out_path);
        if (!file) throw nf::IoError("cannot write: " + out_path);
        os = &file;
    }
    *os << "model";
    for (const auto& n : pm.names) *os << "," << n;
    *os << "\n";
    for (std::size_t i = 0; i < pm.names.size(); ++i) {
        *os << pm.names[i];
        for (std::size_t j = 0; j < pm.names.size(); ++j) {
            *os << ",";
            if (pm.p[i][j]) {
                char buf[16];
                std::snprintf(buf, sizeof(buf), "%.3f", *pm.p[i][j]);
                *os << buf;
            }
        }
        *os << "\n";
    }
    return 0;
}

int run_synth(const nf::SynthConfig& scfg, const std::string& out_dir) {
    nf::SynthPanel panel = nf::generate(scfg);
    fs::create_directories(out_dir);
    const fs::path dir(out_dir);
    nf::write_returns(panel.returns, (dir / "returns.csv").string());
    std::string store_path = (dir / "embeddings.bin").string();
    nf::write_embedding_store(panel.embeddings, store_path, nf::default_index_path(store_path));
    nf::write_truth(panel.truth, (dir / "truth.json").string());
    std::cerr << "synth: " << panel.returns.size() << " firm-day returns, "
              << panel.embeddings.rows() << " embedding rows\n";
    return 0;
}

int run_sweep(const nf::RunConfig& base, const std::vector<std::string>& vintage_specs,
              const std::string& realtime_path) {
    nf::SweepConfig scfg;
    scfg.base = base;
    for (const auto& spec : vintage_specs) {
        auto eq = spec.find('=');
        if (eq == std::string::npos)
            throw nf::ConfigError("vintage spec must be year=path: " + spec);
        scfg.vintages.push_back({std::stoi(spec.substr(0, eq)), spec.substr(eq + 1)});
    }
    scfg.realtime_store_path = realtime_path;
    nf::SweepResult result = nf::vintage_sweep(scfg);
    for (const auto& [name, sr] : result.sharpe_by_run)
        std::fprintf(stderr, "%s: SR %.2f\n", name.c_str(), sr);
    return 0;
}

int run_probe_score(const std::string& in_path, const std::string& out_path) {
    nf::ProbeReport report = nf::score_probe_file(in_path);
    json per_model = json::object();
    for (const auto& [model, t] : report.per_model)
        per_model[model] = {{"pre_correct", t.pre_correct},
                           {"pre_total", t.pre_total},
                           {"post_correct", t.post_correct},
                           {"post_total", t.post_total}};
    json j = {{"per_model", per_model},
              {"grand",
               {{"pre_correct", report.grand.pre_correct},
                {"pre_total", report.grand.pre_total},
                {"post_correct", report.grand.post_correct},
                {"post_total", report.grand.post_total}}},
              {"na_count", report.na_count},
              {"record_count", report.record_count},
              {"empty", report.empty}};
    if (out_path.empty()) {
        std::cout << j.dump(2) << "\n";
    } else {
        std::ofstream out(out_path);
        if (!out) throw nf::IoError("cannot write: " + out_path);
        out << j.dump(2) << "\n";
    }
    return 0;
}

int run_hs_score(const std::string& in_path, const std::string& out_path) {
    nf::HSReport report = nf::hs_accuracy(in_path);
    json choices = json::array();
    for (const auto& [id, chosen] : report.choices)
        choices.push_back({{"example_id", id}, {"chosen", chosen}});
    json j = {{"accuracy", report.accuracy},
              {"n_examples", report.n_examples},
              {"choices", choices}};
    if (out_path.empty()) {
        std::cout << j.dump(2) << "\n";
    } else {
        std::ofstream out(out_path);
        if (!out) throw nf::IoError("cannot write: " + out_path);
        out << j.dump(2) << "\n";
    }
    return 0;
}

int run_audit(const std::string& dir) {
    nf::AuditResult result = nf::audit_run(dir);
    if (result.passed) {
        std::cout << "audit: pass\n";
        return 0;
    }
    std::cout << "audit: FAIL (" << result.violations.size() << " violations)\n";
    for (const auto& v : result.violations) std::cout << "  " << v << "\n";
    return 3;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"News-embedding return forecasting and backtesting pipeline"};
    app.require_subcommand(1);

    GlobalFlags g;
    app.add_option("--threads", g.threads, "Worker thread cap");
    app.add_option("--seed", g.seed, "Seed for all stochastic paths");
    app.add_option("--sr-test", g.sr_test, "Sharpe test flavor: hac|bootstrap")
        ->check(CLI::IsMember({"hac", "bootstrap"}));
    app.add_option("--bootstrap-draws", g.bootstrap_draws, "Bootstrap draw count");
    app.add_option("--block-length", g.block_length, "Bootstrap block length");

    std::string config_path, news_path, returns_path, docs_path, endpoint, out_path, in_path;
    std::string variant = "mean", realtime_path, audit_dir;
    std::size_t batch_size = 0;
    std::vector<std::string> series_specs, vintage_specs;
    nf::SynthConfig scfg;
    double rotation = 0;
    bool has_rotation = false;

    auto* ingest = app.add_subcommand("ingest", "Build firm-day docs from news and returns");
    ingest->add_option("--news", news_path)->required();
    ingest->add_option("--returns", returns_path)->required();
    ingest->add_option("--out", out_path)->required();

    auto* embed = app.add_subcommand("embed", "Fetch embeddings for firm-day docs");
    embed->add_option("--docs", docs_path)->required();
    embed->add_option("--endpoint", endpoint)->required();
    embed->add_option("--out", out_path)->required();
    embed->add_option("--batch-size", batch_size);

    auto* fit = app.add_subcommand("fit", "Fit the monthly cross-sectional models");
    fit->add_option("--config", config_path)->required();
    fit->add_option("--variant", variant)->check(CLI::IsMember({"last", "mean", "first"}));

    auto* portfolio = app.add_subcommand("portfolio", "Run forecasts into decile portfolios");
    portfolio->add_option("--config", config_path)->required();

    auto* stats = app.add_subcommand("stats", "Pairwise Sharpe difference tests");
    stats->add_option("--series", series_specs, "name=deciles.csv (repeatable)")->required();
    stats->add_option("--out", out_path);

    auto* decay = app.add_subcommand("decay", "News decay curve");
    decay->add_option("--config", config_path)->required();

    auto* sweep = app.add_subcommand("sweep", "Vintage envelope sweep");
    sweep->add_option("--config", config_path)->required();
    sweep->add_option("--vintage", vintage_specs, "cutoff_year=store_path (repeatable)")->required();
    sweep->add_option("--realtime", realtime_path, "Realtime store (default: stitch by year)");

    auto* probe = app.add_subcommand("probe-score", "Score a chronological probe file");
    probe->add_option("--in", in_path)->required();
    probe->add_option("--out", out_path);

    auto* hs = app.add_subcommand("hs-score", "Score a multiple-choice logprob file");
    hs->add_option("--in", in_path)->required();
    hs->add_option("--out", out_path);

    auto* synth = app.add_subcommand("synth", "Generate a synthetic panel");
    synth->add_option("--out", out_path)->required();
    synth->add_option("--firms", scfg.n_firms);
    synth->add_option("--days", scfg.n_days);
    synth->add_option("--dim", scfg.dim);
    synth->add_option("--signal", scfg.signal_norm, "Planted signal scale s");
    synth->add_option("--noise-sd", scfg.noise_sd);
    synth->add_option("--coverage", scfg.coverage);
    synth->add_option("--rotation", rotation, "Signal rotation, degrees per year")
        ->each([&](const std::string&) { has_rotation = true; });

    auto* report = app.add_subcommand("report", "Full pipeline run with all artifacts");
    report->add_option("--config", config_path)->required();

    auto* audit = app.add_subcommand("audit", "Re-validate forecast causality from artifacts");
    audit->add_option("--dir", audit_dir)->required();

    // Global flags are accepted before or after the subcommand name.
    for (CLI::App* sub : app.get_subcommands([](const CLI::App*) { return true; }))
        sub->fallthrough();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int rc = app.exit(e);
        return rc == 0 ? 0 : 2;
    }

    try {
        if (*ingest) return run_ingest(news_path, returns_path, out_path);
        if (*embed) return run_embed(docs_path, endpoint, out_path, batch_size);
        if (*fit) return run_fit(load_config(config_path, g), variant);
        if (*portfolio || *report || *decay) return run_report(load_config(config_path, g));
        if (*stats) {
            nf::SharpeTestConfig tcfg;
            if (g.seed) tcfg.seed = *g.seed;
            if (g.bootstrap_draws > 0) tcfg.bootstrap_draws = g.bootstrap_draws;
            if (g.block_length > 0) tcfg.block_length = g.block_length;
            return run_stats(series_specs, tcfg, g.sr_test == "bootstrap", out_path);
        }
        if (*sweep) return run_sweep(load_config(config_path, g), vintage_specs, realtime_path);
        if (*probe) return run_probe_score(in_path, out_path);
        if (*hs) return run_hs_score(in_path, out_path);
        if (*synth) {
            if (g.seed) scfg.seed = *g.seed;
            if (has_rotation) scfg.rotation_deg_per_year = rotation;
            return run_synth(scfg, out_path);
        }
        if (*audit) return run_audit(audit_dir);
    } catch (const nf::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const nf::DataError& e) {
        std::cerr << "data error: " << e.what() << "\n";
        return 3;
    } catch (const nf::NumericError& e) {
        std::cerr << "numeric error: " << e.what() << "\n";
        return 4;
    } catch (const nf::IoError& e) {
        std::cerr << "i/o error: " << e.what() << "\n";
        return 5;
    } catch (const nf::RemoteError& e) {
        std::cerr << "remote error: " << e.what() << "\n";
        return 5;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 2;
}
