#pragma once

#include <map>
#include <vector>

#include <Eigen/Dense>

#include "newsfolio/embedding_store.hpp"

namespace newsfolio {

// Per-layer token hidden states for one document.
struct TokenStates {
    std::vector<Eigen::MatrixXf> layers;   // each (n_tokens x d)
    std::vector<std::uint8_t> content_mask;  // 1 = content token

    std::size_t n_tokens() const { return layers.empty() ? 0 : static_cast<std::size_t>(layers.front().rows()); }
    std::size_t dim() const { return layers.empty() ? 0 : static_cast<std::size_t>(layers.front().cols()); }
    void validate() const;  // throws DataError on shape mismatch or no content token
};

// Content-token mean of the chosen layer(s):
//   last_layer     -> mean over content tokens of the final layer
//   first_layer    -> mean over content tokens of the first layer
//   all_layer_mean -> mean over layers of the per-layer content-token means
Eigen::VectorXd document_vector(const TokenStates& states, VariantId variant);

// Variant whose expanding-window annualized Sharpe ratio is highest; ties
// break toward last_layer < all_layer_mean < first_layer.
VariantId select_variant(const std::map<VariantId, std::vector<double>>& hl_history);

constexpr VariantId kDefaultVariant = VariantId::all_layer_mean;

}  // namespace newsfolio
