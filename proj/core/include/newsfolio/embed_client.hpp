#pragma once

#include <string>
#include <vector>

#include "newsfolio/pooling.hpp"

namespace newsfolio {

struct EmbedClientConfig {
    std::string endpoint;      // e.g. "http://127.0.0.1:8080"
    std::size_t batch_size = 16;
    int max_attempts = 3;      // exponential backoff between attempts
    int backoff_initial_ms = 200;
    int timeout_sec = 60;
    // When true, the first and last token of each text are treated as
    // begin/end special positions and excluded from the content mask.
    bool mask_special_edges = true;
};

// POST /embed {"texts":[...], "layers":"all"} ->
// {"dim":d, "states":[[[f32 per dim] per token] per layer] per text}.
// Requests are batched; responses are reassembled in input order.
// Throws RemoteError after retries, DataError on protocol violations.
std::vector<TokenStates> fetch_embeddings_remote(const EmbedClientConfig& config,
                                                 const std::vector<std::string>& texts);

}  // namespace newsfolio
