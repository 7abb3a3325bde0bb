#include "newsfolio/panel.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "newsfolio/errors.hpp"

namespace newsfolio {

using nlohmann::json;

ReturnPanel::ReturnPanel(std::map<std::pair<std::string, Date>, double> returns, TradingCalendar cal)
    : returns_(std::move(returns)), calendar_(std::move(cal)) {
    for (const auto& [key, ret] : returns_) {
        if (!std::isfinite(ret))
            throw DataError("non-finite return for " + key.first + " on " + key.second.to_string());
        if (!calendar_.contains(key.second))
            throw DataError("return day " + key.second.to_string() + " not in calendar");
    }
}

bool ReturnPanel::lookup(const std::string& firm, Date day, double& out) const {
    auto it = returns_.find({firm, day});
    if (it == returns_.end()) return false;
    out = it->second;
    return true;
}

ReturnPanel load_returns(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open: " + path);
    std::string line;
    long lineno = 0;
    if (!std::getline(in, line)) throw DataError("empty returns file: " + path);
    ++lineno;
    // Tolerate a UTF-8 BOM and trailing CR.
    if (line.size() >= 3 && line.compare(0, 3, "\xEF\xBB\xBF") == 0) line.erase(0, 3);
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line != "firm_id,date,ret")
        throw ParseError("expected header 'firm_id,date,ret', got '" + line + "'", lineno);

    std::map<std::pair<std::string, Date>, double> rets;
    std::set<Date> days;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        std::istringstream ss(line);
        std::string firm, date_s, ret_s;
        if (!std::getline(ss, firm, ',') || !std::getline(ss, date_s, ',') || !std::getline(ss, ret_s))
            throw ParseError("expected 3 comma-separated fields", lineno);
        Date day;
        try {
            day = Date::parse(date_s);
        } catch (const DataError& e) {
            throw ParseError(e.what(), lineno);
        }
        char* end = nullptr;
        double ret = std::strtod(ret_s.c_str(), &end);
        if (end == ret_s.c_str() || *end != '\0' || !std::isfinite(ret))
            throw ParseError("bad return value '" + ret_s + "'", lineno);
        auto [it, inserted] = rets.emplace(std::make_pair(firm, day), ret);
        (void)it;
        if (!inserted)
            throw ParseError("duplicate (firm, day): " + firm + " " + date_s, lineno);
        days.insert(day);
    }
    return ReturnPanel(std::move(rets), TradingCalendar({days.begin(), days.end()}));
}

void write_returns(const ReturnPanel& panel, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot open for write: " + path);
    out << "firm_id,date,ret\n";
    out.precision(17);
    for (const auto& [key, ret] : panel.entries())
        out << key.first << "," << key.second.to_string() << "," << ret << "\n";
    if (!out) throw IoError("write failed: " + path);
}

std::vector<NewsItem> load_news(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open: " + path);
    std::vector<NewsItem> items;
    std::string line;
    long lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        try {
            json j = json::parse(line);
            NewsItem item;
            item.firm_id = j.at("firm_id").get<std::string>();
            item.display_time = Timestamp::parse(j.at("display_time").get<std::string>());
            item.headline = j.at("headline").get<std::string>();
            if (item.firm_id.empty()) throw DataError("empty firm_id");
            std::string trimmed = item.headline;
            while (!trimmed.empty() && std::isspace(static_cast<unsigned char>(trimmed.back()))) trimmed.pop_back();
            std::size_t start = 0;
            while (start < trimmed.size() && std::isspace(static_cast<unsigned char>(trimmed[start]))) ++start;
            if (start >= trimmed.size()) throw DataError("blank headline");
            items.push_back(std::move(item));
        } catch (const json::exception& e) {
            throw ParseError(std::string("bad news record: ") + e.what(), lineno);
        } catch (const DataError& e) {
            throw ParseError(e.what(), lineno);
        }
    }
    return items;
}

namespace {

std::string trim(const std::string& s) {
    std::size_t b = 0, e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
    return s.substr(b, e - b);
}

}  // namespace

std::vector<FirmDayDoc> build_firm_days(const std::vector<NewsItem>& news,
                                        const TradingCalendar& calendar) {
    struct Entry {
        Timestamp when;
        std::size_t input_order;
        std::string headline;
    };
    std::map<std::pair<std::string, Date>, std::vector<Entry>> groups;
    for (std::size_t i = 0; i < news.size(); ++i) {
        const auto& item = news[i];
        Date day = calendar.assign_trading_day(item.display_time);
        groups[{item.firm_id, day}].push_back({item.display_time, i, trim(item.headline)});
    }

    std::vector<FirmDayDoc> docs;
    docs.reserve(groups.size());
    for (auto& [key, entries] : groups) {
        std::stable_sort(entries.begin(), entries.end(), [](const Entry& a, const Entry& b) {
            if (a.when != b.when) return a.when < b.when;
            return a.input_order < b.input_order;
        });
        FirmDayDoc doc;
        doc.firm_id = key.first;
        doc.trading_day = key.second;
        std::set<std::string> seen;
        for (const auto& e : entries) {
            if (!seen.insert(e.headline).second) continue;  // newswire re-transmission
            if (doc.item_count > 0) doc.text += '\n';
            doc.text += e.headline;
            ++doc.item_count;
        }
        docs.push_back(std::move(doc));
    }
    return docs;
}

namespace {

AlignmentResult align_impl(const std::vector<std::tuple<std::string, Date, std::uint32_t>>& rows,
                           const ReturnPanel& returns) {
    AlignmentResult result;
    for (const auto& [firm, day, row] : rows) {
        Date next;
        if (!returns.calendar().shift(day, 1, next)) {
            ++result.drops.no_next_day;
            continue;
        }
        double ret;
        if (!returns.lookup(firm, next, ret) || !std::isfinite(ret)) {
            ++result.drops.no_return;
            continue;
        }
        result.observations.push_back({firm, day, row, ret});
    }
    return result;
}

}  // namespace

AlignmentResult align_next_day_returns(const std::vector<FirmDayDoc>& docs,
                                       const EmbeddingStore& embeddings,
                                       VariantId variant,
                                       const ReturnPanel& returns) {
    std::vector<std::tuple<std::string, Date, std::uint32_t>> rows;
    AlignmentDrops pre_drops;
    for (const auto& doc : docs) {
        std::uint32_t row;
        if (!embeddings.find(doc.firm_id, doc.trading_day, variant, row)) {
            ++pre_drops.no_embedding;
            continue;
        }
        rows.emplace_back(doc.firm_id, doc.trading_day, row);
    }
    AlignmentResult result = align_impl(rows, returns);
    result.drops.no_embedding = pre_drops.no_embedding;
    return result;
}

AlignmentResult align_store_next_day_returns(const EmbeddingStore& embeddings,
                                             VariantId variant,
                                             const ReturnPanel& returns) {
    std::vector<std::tuple<std::string, Date, std::uint32_t>> rows;
    for (const auto& [key, row] : embeddings.index()) {
        if (std::get<2>(key) != variant) continue;
        rows.emplace_back(std::get<0>(key), std::get<1>(key), row);
    }
    return align_impl(rows, returns);
}

}  // namespace newsfolio
