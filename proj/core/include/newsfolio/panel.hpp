#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "newsfolio/dates.hpp"
#include "newsfolio/embedding_store.hpp"

namespace newsfolio {

struct NewsItem {
    std::string firm_id;
    Timestamp display_time;
    std::string headline;
};

struct FirmDayDoc {
    std::string firm_id;
    Date trading_day;
    std::string text;       // headlines joined by '\n', ascending display_time
    int item_count = 0;
};

// (firm, day) -> close-to-close simple return, plus the trading calendar.
class ReturnPanel {
public:
    ReturnPanel() = default;
    ReturnPanel(std::map<std::pair<std::string, Date>, double> returns, TradingCalendar cal);

    const TradingCalendar& calendar() const { return calendar_; }
    std::size_t size() const { return returns_.size(); }
    bool lookup(const std::string& firm, Date day, double& out) const;
    const std::map<std::pair<std::string, Date>, double>& entries() const { return returns_; }

private:
    std::map<std::pair<std::string, Date>, double> returns_;
    TradingCalendar calendar_;
};

// CSV with header "firm_id,date,ret".
ReturnPanel load_returns(const std::string& path);
void write_returns(const ReturnPanel& panel, const std::string& path);

// News JSONL: {"firm_id":..,"display_time":"...","headline":...} per line.
std::vector<NewsItem> load_news(const std::string& path);

// One doc per (firm, assigned trading day); duplicate headlines within a
// firm-day (byte equality after trim) are kept once.
std::vector<FirmDayDoc> build_firm_days(const std::vector<NewsItem>& news,
                                        const TradingCalendar& calendar);

struct AlignedObservation {
    std::string firm_id;
    Date trading_day;          // t
    std::size_t embedding_row;
    double next_day_return;    // r_{t+1}
};

struct AlignmentDrops {
    std::size_t no_embedding = 0;
    std::size_t no_next_day = 0;   // t is the final calendar day
    std::size_t no_return = 0;     // missing or non-finite r_{t+1}
    std::size_t total() const { return no_embedding + no_next_day + no_return; }
};

struct AlignmentResult {
    std::vector<AlignedObservation> observations;
    AlignmentDrops drops;
};

AlignmentResult align_next_day_returns(const std::vector<FirmDayDoc>& docs,
                                       const EmbeddingStore& embeddings,
                                       VariantId variant,
                                       const ReturnPanel& returns);

// Alignment keyed directly off the embedding index (used when the panel comes
// from a store rather than from news ingestion).
AlignmentResult align_store_next_day_returns(const EmbeddingStore& embeddings,
                                             VariantId variant,
                                             const ReturnPanel& returns);

}  // namespace newsfolio
