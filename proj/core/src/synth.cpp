#include "newsfolio/synth.hpp"

#include <cmath>
#include <fstream>
#include <random>

#include <nlohmann/json.hpp>

#include "newsfolio/errors.hpp"

namespace newsfolio {

using nlohmann::json;

void SynthConfig::validate() const {
    if (dim < 1) throw ConfigError("synth: dim must be >= 1");
    if (coverage <= 0 || coverage > 1) throw ConfigError("synth: coverage must be in (0, 1]");
    if (noise_sd <= 0) throw ConfigError("synth: noise_sd must be positive");
    if (signal_norm < 0) throw ConfigError("synth: signal_norm must be >= 0");
    if (n_firms < 1 || n_days < 2) throw ConfigError("synth: need n_firms >= 1 and n_days >= 2");
    if (rotation_deg_per_year && dim < 2)
        throw ConfigError("synth: rotation needs dim >= 2");
}

namespace {

constexpr int kStartYear = 2007;

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

std::mt19937_64 stream(std::uint64_t seed, std::uint64_t tag, std::uint64_t k) {
    return std::mt19937_64(splitmix64(splitmix64(seed ^ (tag * 0x9e3779b97f4a7c15ULL)) + k));
}

TradingCalendar weekday_calendar(int n_days) {
    std::vector<Date> days;
    days.reserve(static_cast<std::size_t>(n_days));
    Date d(kStartYear, 1, 2);
    while (static_cast<int>(days.size()) < n_days) {
        if (!d.is_weekend()) days.push_back(d);
        d = d.next();
    }
    return TradingCalendar(std::move(days));
}

Eigen::VectorXd signal_direction(int dim, double rotation_deg, int year_offset) {
    Eigen::VectorXd w = Eigen::VectorXd::Zero(dim);
    if (dim == 1 || rotation_deg == 0) {
        w(0) = 1;
        if (dim >= 2 && rotation_deg != 0) w(1) = 0;
        if (rotation_deg == 0) return w;
    }
    double phi = rotation_deg * M_PI / 180.0 * static_cast<double>(year_offset);
    w.setZero();
    w(0) = std::cos(phi);
    if (dim >= 2) w(1) = std::sin(phi);
    return w;
}

struct Latents {
    TradingCalendar calendar;
    std::vector<std::uint8_t> covered;           // firm-major: f * n_days + t
    std::vector<Eigen::VectorXd> z;              // latent state, same layout
    std::map<std::pair<std::string, Date>, double> returns;
    SynthTruth truth;
};

std::string firm_name(int f) {
    char buf[16];
    std::snprintf(buf, sizeof(buf), "F%04d", f);
    return buf;
}

Latents build_latents(const SynthConfig& cfg) {
    Latents lat;
    lat.calendar = weekday_calendar(cfg.n_days);
    const auto& days = lat.calendar.days();
    const double rot = cfg.rotation_deg_per_year.value_or(0.0);

    for (Date d : days) {
        int y = d.year();
        if (!lat.truth.w_by_year.count(y))
            lat.truth.w_by_year[y] = signal_direction(cfg.dim, rot, y - kStartYear);
    }
    lat.truth.seed = cfg.seed;

    const std::size_t total = static_cast<std::size_t>(cfg.n_firms) * cfg.n_days;
    lat.covered.assign(total, 0);
    lat.z.resize(total);
    std::normal_distribution<double> normal(0.0, 1.0);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    const double inv_sqrt_d = 1.0 / std::sqrt(static_cast<double>(cfg.dim));

    for (int f = 0; f < cfg.n_firms; ++f) {
        for (int t = 0; t < cfg.n_days; ++t) {
            std::size_t k = static_cast<std::size_t>(f) * cfg.n_days + t;
            auto rng = stream(cfg.seed, 1, k);
            bool cov = unif(rng) < cfg.coverage;
            lat.covered[k] = cov ? 1 : 0;
            if (cov) {
                Eigen::VectorXd z(cfg.dim);
                for (int j = 0; j < cfg.dim; ++j) z(j) = normal(rng);
                lat.z[k] = std::move(z);
            }
            // Return on day t: own noise plus yesterday's planted signal.
            auto nrng = stream(cfg.seed, 2, k);
            double r = cfg.noise_sd * normal(nrng);
            if (t > 0) {
                std::size_t prev = k - 1;
                if (lat.covered[prev]) {
                    const Eigen::VectorXd& w = lat.truth.w_by_year.at(days[static_cast<std::size_t>(t - 1)].year());
                    r += cfg.signal_norm * w.dot(lat.z[prev]) * inv_sqrt_d;
                }
            }
            lat.returns[{firm_name(f), days[static_cast<std::size_t>(t)]}] = r;
        }
    }
    return lat;
}

void add_row_all_variants(EmbeddingStore& store, const std::string& firm, Date day,
                          const Eigen::VectorXd& e) {
    std::vector<float> row(static_cast<std::size_t>(e.size()));
    for (Eigen::Index j = 0; j < e.size(); ++j) row[static_cast<std::size_t>(j)] = static_cast<float>(e(j));
    std::uint32_t r = store.append_row(row);
    store.map_key(firm, day, VariantId::last_layer, r);
    store.map_key(firm, day, VariantId::all_layer_mean, r);
    store.map_key(firm, day, VariantId::first_layer, r);
}

}  // namespace

SynthPanel generate(const SynthConfig& cfg) {
    cfg.validate();
    Latents lat = build_latents(cfg);
    const auto& days = lat.calendar.days();

    SynthPanel panel;
    panel.embeddings = EmbeddingStore(static_cast<std::uint32_t>(cfg.dim));
    for (int f = 0; f < cfg.n_firms; ++f) {
        for (int t = 0; t < cfg.n_days; ++t) {
            std::size_t k = static_cast<std::size_t>(f) * cfg.n_days + t;
            if (!lat.covered[k]) continue;
            add_row_all_variants(panel.embeddings, firm_name(f), days[static_cast<std::size_t>(t)], lat.z[k]);
        }
    }
    panel.returns = ReturnPanel(std::move(lat.returns), lat.calendar);
    panel.truth = std::move(lat.truth);
    return panel;
}

void write_truth(const SynthTruth& truth, const std::string& path) {
    json w = json::object();
    for (const auto& [year, vec] : truth.w_by_year) {
        json arr = json::array();
        for (Eigen::Index j = 0; j < vec.size(); ++j) arr.push_back(vec(j));
        w[std::to_string(year)] = arr;
    }
    json j = {{"seed", truth.seed}, {"w_by_year", w}};
    std::ofstream out(path);
    if (!out) throw IoError("cannot open for write: " + path);
    out << j.dump(2) << "\n";
}

VintageFixture vintage_envelope_fixture(const SynthConfig& cfg, int n_vintages) {
    cfg.validate();
    if (n_vintages < 1) throw ConfigError("need at least one vintage");
    if (cfg.rotation_deg_per_year && *cfg.rotation_deg_per_year != 0 && n_vintages < 2)
        throw ConfigError("rotation fixture needs at least two vintages");

    Latents lat = build_latents(cfg);
    const auto& days = lat.calendar.days();
    const double rot = cfg.rotation_deg_per_year.value_or(0.0);
    std::normal_distribution<double> normal(0.0, 1.0);

    const int first_cutoff = kStartYear - 1;
    VintageFixture fix;
    for (int v = 0; v < n_vintages; ++v) {
        int cutoff = first_cutoff + v;
        EmbeddingStore store(static_cast<std::uint32_t>(cfg.dim));
        for (int f = 0; f < cfg.n_firms; ++f) {
            for (int t = 0; t < cfg.n_days; ++t) {
                std::size_t k = static_cast<std::size_t>(f) * cfg.n_days + t;
                if (!lat.covered[k]) continue;
                // The vintage tracks the current signal direction up to its
                // knowledge cutoff and freezes there; everything orthogonal
                // to its belief is replaced by fresh noise.
                int belief_year = std::min(days[static_cast<std::size_t>(t)].year(), cutoff);
                Eigen::VectorXd belief = signal_direction(cfg.dim, rot, belief_year - kStartYear);
                double q = belief.dot(lat.z[k]);
                // The orthogonal filler is shared across vintages so stores
                // differ only through their beliefs, keeping the envelope
                // comparison free of independent noise.
                auto rng = stream(cfg.seed, 1000, k);
                Eigen::VectorXd h(cfg.dim);
                for (int j = 0; j < cfg.dim; ++j) h(j) = normal(rng);
                Eigen::VectorXd e = q * belief + (h - belief.dot(h) * belief);
                add_row_all_variants(store, firm_name(f), days[static_cast<std::size_t>(t)], e);
            }
        }
        fix.vintage_stores.emplace(cutoff, std::move(store));
    }

    // Realtime: year y rows come from the vintage with cutoff y-1 (clamped).
    const int last_cutoff = first_cutoff + n_vintages - 1;
    fix.realtime_store = EmbeddingStore(static_cast<std::uint32_t>(cfg.dim));
    for (int f = 0; f < cfg.n_firms; ++f) {
        for (int t = 0; t < cfg.n_days; ++t) {
            std::size_t k = static_cast<std::size_t>(f) * cfg.n_days + t;
            if (!lat.covered[k]) continue;
            Date d = days[static_cast<std::size_t>(t)];
            int cutoff = std::min(std::max(d.year() - 1, first_cutoff), last_cutoff);
            const EmbeddingStore& src = fix.vintage_stores.at(cutoff);
            std::uint32_t row;
            src.find(firm_name(f), d, VariantId::last_layer, row);
            Eigen::VectorXd e(cfg.dim);
            const float* p = src.row(row);
            for (int j = 0; j < cfg.dim; ++j) e(j) = p[j];
            add_row_all_variants(fix.realtime_store, firm_name(f), d, e);
        }
    }
    fix.returns = ReturnPanel(std::move(lat.returns), lat.calendar);
    fix.truth = std::move(lat.truth);
    return fix;
}

}  // namespace newsfolio
