#include "newsfolio/pooling.hpp"

#include <cmath>

#include "newsfolio/errors.hpp"
#include "newsfolio/portfolio.hpp"

namespace newsfolio {

void TokenStates::validate() const {
    if (layers.empty()) throw DataError("token states have no layers");
    const auto rows = layers.front().rows();
    const auto cols = layers.front().cols();
    for (const auto& layer : layers)
        if (layer.rows() != rows || layer.cols() != cols)
            throw DataError("token state layers disagree on shape");
    if (content_mask.size() != static_cast<std::size_t>(rows))
        throw DataError("content mask length does not match token count");
    bool any = false;
    for (auto m : content_mask) any = any || (m != 0);
    if (!any) throw DataError("document has zero content tokens");
}

namespace {

Eigen::VectorXd layer_mean(const Eigen::MatrixXf& layer, const std::vector<std::uint8_t>& mask) {
    Eigen::VectorXd acc = Eigen::VectorXd::Zero(layer.cols());
    std::size_t n = 0;
    for (Eigen::Index t = 0; t < layer.rows(); ++t) {
        if (!mask[static_cast<std::size_t>(t)]) continue;
        acc += layer.row(t).cast<double>();
        ++n;
    }
    return acc / static_cast<double>(n);
}

}  // namespace

Eigen::VectorXd document_vector(const TokenStates& states, VariantId variant) {
    states.validate();
    switch (variant) {
        case VariantId::last_layer:
            return layer_mean(states.layers.back(), states.content_mask);
        case VariantId::first_layer:
            return layer_mean(states.layers.front(), states.content_mask);
        case VariantId::all_layer_mean: {
            Eigen::VectorXd acc = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(states.dim()));
            for (const auto& layer : states.layers) acc += layer_mean(layer, states.content_mask);
            return acc / static_cast<double>(states.layers.size());
        }
    }
    throw DataError("unknown variant");
}

VariantId select_variant(const std::map<VariantId, std::vector<double>>& hl_history) {
    if (hl_history.empty() || hl_history.begin()->second.empty())
        throw DataError("insufficient history for variant selection");
    std::size_t len = hl_history.begin()->second.size();
    for (const auto& [v, series] : hl_history)
        if (series.size() != len)
            throw DataError("variant histories cover different dates");

    // Fixed tie order.
    const VariantId order[] = {VariantId::last_layer, VariantId::all_layer_mean, VariantId::first_layer};
    bool have_best = false;
    VariantId best = kDefaultVariant;
    double best_sr = 0;
    for (VariantId v : order) {
        auto it = hl_history.find(v);
        if (it == hl_history.end()) continue;
        double sr = annualize(it->second).sharpe;
        if (!have_best || sr > best_sr) {
            have_best = true;
            best = v;
            best_sr = sr;
        }
    }
    if (!have_best) throw DataError("insufficient history for variant selection");
    return best;
}

}  // namespace newsfolio
