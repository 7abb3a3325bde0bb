#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <tuple>
#include <vector>

#include "newsfolio/dates.hpp"

namespace newsfolio {

enum class VariantId { last_layer, all_layer_mean, first_layer };

// Wire names: "last", "mean", "first".
std::string variant_name(VariantId v);
VariantId parse_variant(const std::string& name);

// Fixed-dimension float32 document vectors keyed by (firm, day, variant).
class EmbeddingStore {
public:
    using Key = std::tuple<std::string, Date, VariantId>;

    EmbeddingStore() = default;
    explicit EmbeddingStore(std::uint32_t dim) : dim_(dim) {}

    std::uint32_t dim() const { return dim_; }
    std::uint32_t rows() const { return static_cast<std::uint32_t>(data_.size() / (dim_ ? dim_ : 1)); }
    const std::vector<float>& data() const { return data_; }
    const std::map<Key, std::uint32_t>& index() const { return index_; }

    // Appends a row and returns its index.
    std::uint32_t append_row(const std::vector<float>& row);
    const float* row(std::uint32_t r) const { return data_.data() + static_cast<std::size_t>(r) * dim_; }

    void map_key(const std::string& firm, Date day, VariantId v, std::uint32_t row);
    bool find(const std::string& firm, Date day, VariantId v, std::uint32_t& row_out) const;

    // Throws DataError on dimension mismatch, out-of-range rows, duplicate keys.
    void validate() const;

private:
    std::uint32_t dim_ = 0;
    std::vector<float> data_;  // row-major
    std::map<Key, std::uint32_t> index_;
};

// Binary payload: magic "CHEM", u16 version=1, u32 rows, u32 dim, then
// little-endian float32 row-major. Index sidecar is JSONL at index_path:
// {"firm_id":...,"date":"YYYY-MM-DD","variant":"last|mean|first","row":N}.
void write_embedding_store(const EmbeddingStore& store, const std::string& path,
                           const std::string& index_path);
EmbeddingStore read_embedding_store(const std::string& path, const std::string& index_path);

// Convention used by the tools: index sidecar lives at "<path>.idx.jsonl".
std::string default_index_path(const std::string& store_path);

}  // namespace newsfolio
