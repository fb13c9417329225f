#pragma once

#include <set>
#include <string>
#include <vector>

namespace dst {

struct MetricReport {
    int n_episodes = 0;
    int pool_size = 0;
    double mrr = 0, r1 = 0, r5 = 0, r10 = 0, mean_rank = 0, pmr = 0;
    std::vector<double> pmr_rounds;  // per-round PMR, index 0 = round 1
    double unique_q = 0, novel_q = 0;
    double dist1 = 0, dist2 = 0, ent1 = 0, ent2 = 0;
    double mutual_overlap = 0;
    double nll = 0;

    std::string to_json() const;
    std::string to_table() const;
};

struct RetrievalSummary {
    double mrr = 0, r1 = 0, r5 = 0, r10 = 0, mean_rank = 0, pmr = 0;
};

// mrr = mean(1/rank); r@k = fraction with rank <= k; pmr = mean percentile
// (N - rank)/(N - 1), so Mean = N - (N-1)*PMR holds exactly.
RetrievalSummary retrieval_metrics(const std::vector<int>& ranks, int pool_size);

struct DiversitySummary {
    double unique_q = 0, novel_q = 0;
    double dist1 = 0, dist2 = 0, ent1 = 0, ent2 = 0;
    double mutual_overlap = 0;
};

// dialogues: per-dialogue list of question token sequences.
DiversitySummary diversity_metrics(const std::vector<std::vector<std::vector<std::string>>>& dialogues,
                                   const std::set<std::string>& train_questions);

// Sentence BLEU-4: uniform quarter weights, add-one smoothing on every
// n-gram order, brevity penalty exp(1 - r/c) when the candidate is shorter.
double bleu4(const std::vector<std::string>& candidate, const std::vector<std::string>& reference);

}  // namespace dst
