#include "newsfolio/eval_probe.hpp"

#include <cctype>
#include <cmath>
#include <fstream>
#include <set>

#include <nlohmann/json.hpp>

#include "newsfolio/errors.hpp"

namespace newsfolio {

using nlohmann::json;

std::string normalize_answer(const std::string& text) {
    // Drop parenthesized qualifiers first.
    std::string no_paren;
    int depth = 0;
    for (char c : text) {
        if (c == '(') { ++depth; continue; }
        if (c == ')') { if (depth > 0) --depth; continue; }
        if (depth == 0) no_paren += c;
    }
    // Casefold and collapse runs of whitespace.
    std::string folded;
    bool in_space = false;
    for (char c : no_paren) {
        unsigned char u = static_cast<unsigned char>(c);
        if (std::isspace(u)) {
            in_space = true;
            continue;
        }
        if (in_space && !folded.empty()) folded += ' ';
        in_space = false;
        folded += static_cast<char>(std::tolower(u));
    }
    // Strip surrounding punctuation.
    std::size_t b = 0, e = folded.size();
    auto is_alnum_space = [](char c) {
        unsigned char u = static_cast<unsigned char>(c);
        return std::isalnum(u) || c == ' ' || u >= 0x80;
    };
    while (b < e && !is_alnum_space(folded[b])) ++b;
    while (e > b && !is_alnum_space(folded[e - 1])) --e;
    std::string out = folded.substr(b, e - b);
    // The paren/punct strips may leave a trailing space or mid-string ".".
    std::string cleaned;
    for (std::size_t i = 0; i < out.size(); ++i) {
        char c = out[i];
        if (c == '.' || c == ',' || c == '"' || c == '\'') continue;
        cleaned += c;
    }
    while (!cleaned.empty() && cleaned.back() == ' ') cleaned.pop_back();
    while (!cleaned.empty() && cleaned.front() == ' ') cleaned.erase(cleaned.begin());
    return cleaned;
}

GradedRecord grade_record(const ProbeRecord& rec) {
    if (rec.na) throw DataError("n/a record cannot be graded");
    if (rec.accepted_answers.empty()) throw DataError("record has no accepted answers");
    GradedRecord out;
    out.window = rec.prompt_year > rec.cutoff_year ? ProbeWindow::post : ProbeWindow::pre;
    std::string pred = normalize_answer(rec.prediction);
    out.correct = false;
    if (!pred.empty()) {
        for (const auto& acc : rec.accepted_answers) {
            std::string a = normalize_answer(acc);
            if (pred == a || (pred.size() < a.size() && a.compare(0, pred.size(), pred) == 0)) {
                out.correct = true;
                break;
            }
        }
    }
    return out;
}

ProbeReport score_probe_records(const std::vector<ProbeRecord>& records) {
    ProbeReport report;
    report.record_count = static_cast<int>(records.size());
    report.empty = records.empty();
    std::set<std::pair<std::string, std::string>> seen;
    for (const auto& rec : records) {
        if (!seen.insert({rec.model_id, rec.prompt_id}).second)
            throw DataError("duplicate probe key: " + rec.model_id + " / " + rec.prompt_id);
        if (rec.na) {
            ++report.na_count;
            report.per_model[rec.model_id];  // model still appears in the report
            continue;
        }
        GradedRecord g = grade_record(rec);
        ProbeTally& tally = report.per_model[rec.model_id];
        if (g.window == ProbeWindow::pre) {
            ++tally.pre_total;
            ++report.grand.pre_total;
            if (g.correct) { ++tally.pre_correct; ++report.grand.pre_correct; }
        } else {
            ++tally.post_total;
            ++report.grand.post_total;
            if (g.correct) { ++tally.post_correct; ++report.grand.post_correct; }
        }
    }
    return report;
}

std::vector<ProbeRecord> load_probe_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open: " + path);
    std::vector<ProbeRecord> records;
    std::string line;
    long lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        try {
            json j = json::parse(line);
            ProbeRecord rec;
            rec.model_id = j.at("model_id").get<std::string>();
            rec.cutoff_year = j.at("cutoff_year").get<int>();
            rec.prompt_id = j.at("prompt_id").get<std::string>();
            rec.prompt_year = j.at("prompt_year").get<int>();
            rec.na = j.value("na", false);
            rec.prediction = j.value("prediction", std::string{});
            if (j.contains("accepted"))
                for (const auto& a : j.at("accepted")) rec.accepted_answers.push_back(a.get<std::string>());
            if (rec.cutoff_year < 1000 || rec.cutoff_year > 9999 ||
                rec.prompt_year < 1000 || rec.prompt_year > 9999)
                throw DataError("years must be four-digit");
            if (!rec.na && rec.accepted_answers.empty())
                throw DataError("non-n/a record needs accepted answers");
            records.push_back(std::move(rec));
        } catch (const json::exception& e) {
            throw ParseError(std::string("bad probe record: ") + e.what(), lineno);
        } catch (const DataError& e) {
            throw ParseError(e.what(), lineno);
        }
    }
    return records;
}

ProbeReport score_probe_file(const std::string& path) {
    return score_probe_records(load_probe_file(path));
}

HSLosses hs_losses(const HSCandidate& candidate) {
    if (candidate.token_logprobs.size() != candidate.completion_mask.size())
        throw DataError("candidate mask and logprob lengths differ");
    HSLosses out;
    long masked = 0;
    for (std::size_t t = 0; t < candidate.token_logprobs.size(); ++t) {
        if (!candidate.completion_mask[t]) continue;
        out.loss_sum += -candidate.token_logprobs[t];
        ++masked;
    }
    if (masked == 0) throw DataError("candidate has zero completion tokens");
    out.loss_avg = out.loss_sum / static_cast<double>(masked);
    return out;
}

std::size_t hs_choose(const HSExample& example) {
    if (example.candidates.empty()) throw DataError("example has no candidates");
    if (example.label < 0 || static_cast<std::size_t>(example.label) >= example.candidates.size())
        throw DataError("label out of range in example " + example.example_id);
    std::size_t best = 0;
    double best_avg = hs_losses(example.candidates[0]).loss_avg;
    for (std::size_t b = 1; b < example.candidates.size(); ++b) {
        double avg = hs_losses(example.candidates[b]).loss_avg;
        if (avg < best_avg) {  // strict: ties keep the lowest index
            best_avg = avg;
            best = b;
        }
    }
    return best;
}

HSReport hs_accuracy(const std::vector<HSExample>& examples) {
    if (examples.empty()) throw DataError("no examples: accuracy undefined");
    HSReport report;
    report.n_examples = examples.size();
    std::size_t correct = 0;
    for (const auto& ex : examples) {
        std::size_t chosen = hs_choose(ex);
        if (chosen == static_cast<std::size_t>(ex.label)) ++correct;
        report.choices.emplace_back(ex.example_id, chosen);
    }
    report.accuracy = static_cast<double>(correct) / static_cast<double>(examples.size());
    return report;
}

HSReport hs_accuracy(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open: " + path);
    std::vector<HSExample> examples;
    std::string line;
    long lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        try {
            json j = json::parse(line);
            HSExample ex;
            ex.example_id = j.at("example_id").is_string()
                                ? j.at("example_id").get<std::string>()
                                : j.at("example_id").dump();
            ex.label = j.at("label").get<int>();
            for (const auto& c : j.at("candidates")) {
                HSCandidate cand;
                for (const auto& lp : c.at("token_logprobs")) cand.token_logprobs.push_back(lp.get<double>());
                for (const auto& m : c.at("completion_mask")) cand.completion_mask.push_back(m.get<int>());
                ex.candidates.push_back(std::move(cand));
            }
            examples.push_back(std::move(ex));
        } catch (const json::exception& e) {
            throw ParseError(std::string("bad example record: ") + e.what(), lineno);
        }
    }
    return hs_accuracy(examples);
}

}  // namespace newsfolio
