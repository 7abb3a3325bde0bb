#pragma once

#include <map>
#include <string>
#include <vector>

namespace newsfolio {

struct ProbeRecord {
    std::string model_id;
    int cutoff_year = 0;
    std::string prompt_id;
    int prompt_year = 0;
    std::string prediction;
    std::vector<std::string> accepted_answers;
    bool na = false;
};

// Casefold, trim, collapse whitespace, strip surrounding punctuation and
// parenthesized qualifiers: "George W. (Bush)" -> "george w".
std::string normalize_answer(const std::string& text);

enum class ProbeWindow { pre, post };

struct GradedRecord {
    ProbeWindow window;
    bool correct;
};

// window = post when prompt_year > cutoff_year. Correct when the normalized
// prediction equals, or is a prefix of, a normalized accepted answer.
GradedRecord grade_record(const ProbeRecord& rec);

struct ProbeTally {
    int pre_correct = 0, pre_total = 0;
    int post_correct = 0, post_total = 0;
};

struct ProbeReport {
    std::map<std::string, ProbeTally> per_model;
    ProbeTally grand;
    int na_count = 0;
    int record_count = 0;
    bool empty = true;
};

ProbeReport score_probe_records(const std::vector<ProbeRecord>& records);

// Probe JSONL: {"model_id":...,"cutoff_year":N,"prompt_id":...,"prompt_year":N,
//               "prediction":...,"accepted":[...],"na":false}
std::vector<ProbeRecord> load_probe_file(const std::string& path);
ProbeReport score_probe_file(const std::string& path);

struct HSCandidate {
    std::vector<double> token_logprobs;
    std::vector<int> completion_mask;
};

struct HSExample {
    std::string example_id;
    int label = 0;
    std::vector<HSCandidate> candidates;
};

struct HSLosses {
    double loss_sum = 0;
    double loss_avg = 0;
};

// Loss per masked token is -logprob; sum over the completion mask.
HSLosses hs_losses(const HSCandidate& candidate);

// Index of the candidate with minimal average loss; ties to the lowest index.
std::size_t hs_choose(const HSExample& example);

struct HSReport {
    double accuracy = 0;
    std::size_t n_examples = 0;
    std::vector<std::pair<std::string, std::size_t>> choices;  // (example_id, chosen)
};

// HellaSwag JSONL: {"example_id":...,"label":N,"candidates":[{"token_logprobs":
// [...],"completion_mask":[...]}...]}
HSReport hs_accuracy(const std::string& path);
HSReport hs_accuracy(const std::vector<HSExample>& examples);

}  // namespace newsfolio
