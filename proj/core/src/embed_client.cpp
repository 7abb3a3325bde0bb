#include "newsfolio/embed_client.hpp"

#include <chrono>
#include <thread>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "newsfolio/errors.hpp"

namespace newsfolio {

using nlohmann::json;

namespace {

std::vector<TokenStates> parse_batch(const json& body, std::size_t expected_texts,
                                     bool mask_special_edges, long& dim_seen) {
    long dim = body.at("dim").get<long>();
    if (dim <= 0) throw DataError("embed service returned dim=" + std::to_string(dim));
    if (dim_seen < 0) dim_seen = dim;
    if (dim != dim_seen)
        throw DataError("embed service dimension changed across texts: " +
                        std::to_string(dim_seen) + " vs " + std::to_string(dim));

    const json& states = body.at("states");
    if (states.size() != expected_texts)
        throw DataError("embed service returned " + std::to_string(states.size()) +
                        " texts, expected " + std::to_string(expected_texts));

    std::vector<TokenStates> out;
    out.reserve(states.size());
    for (const json& per_text : states) {
        if (per_text.empty()) throw DataError("embed service returned zero layers");
        TokenStates ts;
        for (const json& per_layer : per_text) {
            Eigen::MatrixXf layer(per_layer.size(), dim);
            Eigen::Index t = 0;
            for (const json& token : per_layer) {
                if (static_cast<long>(token.size()) != dim)
                    throw DataError("embed service token vector has wrong dimension");
                for (long c = 0; c < dim; ++c)
                    layer(t, c) = token[static_cast<std::size_t>(c)].get<float>();
                ++t;
            }
            ts.layers.push_back(std::move(layer));
        }
        std::size_t n_tokens = ts.n_tokens();
        ts.content_mask.assign(n_tokens, 1);
        if (mask_special_edges && n_tokens > 2) {
            ts.content_mask.front() = 0;
            ts.content_mask.back() = 0;
        }
        ts.validate();
        out.push_back(std::move(ts));
    }
    return out;
}

}  // namespace

std::vector<TokenStates> fetch_embeddings_remote(const EmbedClientConfig& config,
                                                 const std::vector<std::string>& texts) {
    if (texts.empty()) throw DataError("no texts to embed");

    httplib::Client client(config.endpoint);
    client.set_read_timeout(config.timeout_sec, 0);
    client.set_connection_timeout(config.timeout_sec, 0);

    std::vector<TokenStates> all;
    all.reserve(texts.size());
    long dim_seen = -1;
    for (std::size_t begin = 0; begin < texts.size(); begin += config.batch_size) {
        std::size_t end = std::min(begin + config.batch_size, texts.size());
        json request = {{"texts", json::array()}, {"layers", "all"}};
        for (std::size_t i = begin; i < end; ++i) request["texts"].push_back(texts[i]);
        std::string payload = request.dump();

        std::string last_error;
        bool ok = false;
        int backoff = config.backoff_initial_ms;
        for (int attempt = 0; attempt < config.max_attempts && !ok; ++attempt) {
            if (attempt > 0) {
                std::this_thread::sleep_for(std::chrono::milliseconds(backoff));
                backoff *= 2;
            }
            auto res = client.Post("/embed", payload, "application/json");
            if (!res) {
                last_error = "transport failure: " + httplib::to_string(res.error());
                continue;
            }
            if (res->status != 200) {
                last_error = "HTTP status " + std::to_string(res->status);
                continue;
            }
            json body;
            try {
                body = json::parse(res->body);
            } catch (const json::exception& e) {
                last_error = std::string("bad JSON response: ") + e.what();
                continue;
            }
            auto batch = parse_batch(body, end - begin, config.mask_special_edges, dim_seen);
            for (auto& ts : batch) all.push_back(std::move(ts));
            ok = true;
        }
        if (!ok)
            throw RemoteError("embed request failed after " + std::to_string(config.max_attempts) +
                              " attempts: " + last_error);
    }
    return all;
}

}  // namespace newsfolio
