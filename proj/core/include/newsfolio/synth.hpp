#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "newsfolio/panel.hpp"

namespace newsfolio {

struct SynthConfig {
    std::uint64_t seed = 1;
    int n_firms = 100;
    int n_days = 500;
    int dim = 16;
    double signal_norm = 0;        // s; 0 plants no signal
    double noise_sd = 0.02;
    double coverage = 1.0;         // probability a firm-day carries news
    // Optional per-year rotation of the signal direction (degrees per year),
    // applied as a Givens rotation in the leading coordinate plane.
    std::optional<double> rotation_deg_per_year;

    void validate() const;
};

struct SynthTruth {
    std::uint64_t seed = 0;
    std::map<int, Eigen::VectorXd> w_by_year;  // unit signal vector per calendar year
};

struct SynthPanel {
    EmbeddingStore embeddings;   // same row for all three variants
    ReturnPanel returns;
    SynthTruth truth;
};

// Weekday calendar of n_days trading days starting 2007-01-02. Returns obey
// r_{i,t+1} = s * (w_t' e_{i,t}) / sqrt(d) + noise_sd * eps. Deterministic:
// every (firm, day) uses its own counter-derived random stream.
SynthPanel generate(const SynthConfig& config);

void write_truth(const SynthTruth& truth, const std::string& path);

struct VintageFixture {
    // Keyed by vintage cutoff year, ascending.
    std::map<int, EmbeddingStore> vintage_stores;
    // Year y rows taken from the vintage with cutoff y-1 (clamped to range).
    EmbeddingStore realtime_store;
    ReturnPanel returns;
    SynthTruth truth;
};

// One store per vintage: vintage v's embedding of a firm-day exposes the
// latent signal only through v's own direction w_v, so predictability fades
// as the true direction rotates away from the vintage's knowledge.
VintageFixture vintage_envelope_fixture(const SynthConfig& config, int n_vintages);

}  // namespace newsfolio
