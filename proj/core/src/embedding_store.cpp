#include "newsfolio/embedding_store.hpp"

#include <cstring>
#include <fstream>

#include <nlohmann/json.hpp>

#include "newsfolio/errors.hpp"

namespace newsfolio {

using nlohmann::json;

std::string variant_name(VariantId v) {
    switch (v) {
        case VariantId::last_layer: return "last";
        case VariantId::all_layer_mean: return "mean";
        case VariantId::first_layer: return "first";
    }
    throw DataError("unknown variant");
}

VariantId parse_variant(const std::string& name) {
    if (name == "last") return VariantId::last_layer;
    if (name == "mean") return VariantId::all_layer_mean;
    if (name == "first") return VariantId::first_layer;
    throw DataError("unknown variant: '" + name + "'");
}

std::uint32_t EmbeddingStore::append_row(const std::vector<float>& row) {
    if (dim_ == 0) dim_ = static_cast<std::uint32_t>(row.size());
    if (row.size() != dim_)
        throw DataError("embedding row dimension mismatch: got " + std::to_string(row.size()) +
                        ", expected " + std::to_string(dim_));
    std::uint32_t idx = rows();
    data_.insert(data_.end(), row.begin(), row.end());
    return idx;
}

void EmbeddingStore::map_key(const std::string& firm, Date day, VariantId v, std::uint32_t row) {
    Key k{firm, day, v};
    auto [it, inserted] = index_.emplace(k, row);
    if (!inserted)
        throw DataError("duplicate embedding key: " + firm + " " + day.to_string() + " " + variant_name(v));
    (void)it;
}

bool EmbeddingStore::find(const std::string& firm, Date day, VariantId v, std::uint32_t& row_out) const {
    auto it = index_.find(Key{firm, day, v});
    if (it == index_.end()) return false;
    row_out = it->second;
    return true;
}

void EmbeddingStore::validate() const {
    if (dim_ == 0 && !data_.empty()) throw DataError("embedding store has data but zero dimension");
    if (dim_ != 0 && data_.size() % dim_ != 0) throw DataError("embedding payload not a whole number of rows");
    const std::uint32_t n = rows();
    for (const auto& [key, row] : index_)
        if (row >= n)
            throw DataError("embedding index references row " + std::to_string(row) + " of " + std::to_string(n));
}

namespace {

constexpr char kMagic[4] = {'C', 'H', 'E', 'M'};
constexpr std::uint16_t kVersion = 1;

template <typename T>
void put(std::ofstream& out, T v) {
    out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T get(std::ifstream& in) {
    T v{};
    in.read(reinterpret_cast<char*>(&v), sizeof(T));
    if (!in) throw DataError("embedding store truncated");
    return v;
}

}  // namespace

void write_embedding_store(const EmbeddingStore& store, const std::string& path,
                           const std::string& index_path) {
    store.validate();
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open for write: " + path);
    out.write(kMagic, 4);
    put(out, kVersion);
    put(out, store.rows());
    put(out, store.dim());
    out.write(reinterpret_cast<const char*>(store.data().data()),
              static_cast<std::streamsize>(store.data().size() * sizeof(float)));
    if (!out) throw IoError("write failed: " + path);

    std::ofstream idx(index_path);
    if (!idx) throw IoError("cannot open for write: " + index_path);
    for (const auto& [key, row] : store.index()) {
        json j = {{"firm_id", std::get<0>(key)},
                  {"date", std::get<1>(key).to_string()},
                  {"variant", variant_name(std::get<2>(key))},
                  {"row", row}};
        idx << j.dump() << "\n";
    }
    if (!idx) throw IoError("write failed: " + index_path);
}

EmbeddingStore read_embedding_store(const std::string& path, const std::string& index_path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open: " + path);
    char magic[4];
    in.read(magic, 4);
    if (!in || std::memcmp(magic, kMagic, 4) != 0)
        throw DataError("bad embedding store magic in " + path);
    std::uint16_t version = get<std::uint16_t>(in);
    if (version != kVersion)
        throw DataError("unsupported embedding store version " + std::to_string(version));
    std::uint32_t nrows = get<std::uint32_t>(in);
    std::uint32_t dim = get<std::uint32_t>(in);

    EmbeddingStore store(dim);
    std::vector<float> row(dim);
    for (std::uint32_t r = 0; r < nrows; ++r) {
        in.read(reinterpret_cast<char*>(row.data()),
                static_cast<std::streamsize>(dim * sizeof(float)));
        if (!in) throw DataError("embedding store truncated: " + path);
        store.append_row(row);
    }

    std::ifstream idx(index_path);
    if (!idx) throw IoError("cannot open: " + index_path);
    std::string line;
    long lineno = 0;
    while (std::getline(idx, line)) {
        ++lineno;
        if (line.empty()) continue;
        json j;
        try {
            j = json::parse(line);
            store.map_key(j.at("firm_id").get<std::string>(),
                          Date::parse(j.at("date").get<std::string>()),
                          parse_variant(j.at("variant").get<std::string>()),
                          j.at("row").get<std::uint32_t>());
        } catch (const json::exception& e) {
            throw ParseError(std::string("bad index record: ") + e.what(), lineno);
        }
    }
    store.validate();
    return store;
}

std::string default_index_path(const std::string& store_path) {
    return store_path + ".idx.jsonl";
}

}  // namespace newsfolio
