#include "dst/metrics.hpp"

#include <cmath>
#include <map>
#include <sstream>
#include <stdexcept>

#include "json.hpp"

namespace dst {

RetrievalSummary retrieval_metrics(const std::vector<int>& ranks, int pool_size) {
    if (pool_size < 2) throw std::invalid_argument("retrieval_metrics: pool size must be >= 2");
    if (ranks.empty()) throw std::invalid_argument("retrieval_metrics: no ranks");
    RetrievalSummary s;
    for (int r : ranks) {
        if (r < 1 || r > pool_size) throw std::invalid_argument("retrieval_metrics: rank out of [1, N]");
        s.mrr += 1.0 / r;
        s.r1 += r <= 1;
        s.r5 += r <= 5;
        s.r10 += r <= 10;
        s.mean_rank += r;
        s.pmr += static_cast<double>(pool_size - r) / (pool_size - 1);
    }
    const double n = static_cast<double>(ranks.size());
    s.mrr /= n;
    s.r1 /= n;
    s.r5 /= n;
    s.r10 /= n;
    s.mean_rank /= n;
    s.pmr /= n;
    return s;
}

namespace {

std::string join(const std::vector<std::string>& toks) {
    std::string s;
    for (size_t i = 0; i < toks.size(); ++i) {
        if (i) s += ' ';
        s += toks[i];
    }
    return s;
}

void count_ngrams(const std::vector<std::string>& toks, int n, std::map<std::string, long>& freq,
                  long& total) {
    for (size_t i = 0; i + n <= toks.size(); ++i) {
        std::string key;
        for (int j = 0; j < n; ++j) {
            if (j) key += '\x1f';
            key += toks[i + static_cast<size_t>(j)];
        }
        ++freq[key];
        ++total;
    }
}

double entropy(const std::map<std::string, long>& freq, long total) {
    if (total == 0) return 0.0;
    double h = 0.0;
    for (const auto& [_, c] : freq) {
        const double p = static_cast<double>(c) / total;
        h -= p * std::log(p);
    }
    return h;
}

}  // namespace

double bleu4(const std::vector<std::string>& candidate, const std::vector<std::string>& reference) {
    double log_prec = 0.0;
    for (int n = 1; n <= 4; ++n) {
        std::map<std::string, long> cand_counts, ref_counts;
        long cand_total = 0, ref_total = 0;
        count_ngrams(candidate, n, cand_counts, cand_total);
        count_ngrams(reference, n, ref_counts, ref_total);
        long match = 0;
        for (const auto& [k, c] : cand_counts) {
            auto it = ref_counts.find(k);
            if (it != ref_counts.end()) match += std::min(c, it->second);
        }
        log_prec += 0.25 * std::log(static_cast<double>(match + 1) / static_cast<double>(cand_total + 1));
    }
    const double c = static_cast<double>(candidate.size());
    const double r = static_cast<double>(reference.size());
    const double bp = (c >= r || c == 0) ? 1.0 : std::exp(1.0 - r / c);
    return bp * std::exp(log_prec);
}

DiversitySummary diversity_metrics(const std::vector<std::vector<std::vector<std::string>>>& dialogues,
                                   const std::set<std::string>& train_questions) {
    if (dialogues.empty()) throw std::invalid_argument("diversity_metrics: no dialogues");
    DiversitySummary s;
    std::map<std::string, long> uni, bi;
    long uni_total = 0, bi_total = 0;
    long questions_total = 0, questions_novel = 0;
    double overlap_sum = 0.0;
    int overlap_dialogues = 0;

    for (const auto& dia : dialogues) {
        std::set<std::string> distinct;
        for (const auto& q : dia) {
            const std::string str = join(q);
            distinct.insert(str);
            ++questions_total;
            if (!train_questions.count(str)) ++questions_novel;
            count_ngrams(q, 1, uni, uni_total);
            count_ngrams(q, 2, bi, bi_total);
        }
        s.unique_q += static_cast<double>(distinct.size());
        if (dia.size() >= 2) {
            double pair_sum = 0.0;
            int pairs = 0;
            for (size_t i = 0; i < dia.size(); ++i)
                for (size_t j = 0; j < dia.size(); ++j)
                    if (i != j) {
                        pair_sum += bleu4(dia[i], dia[j]);
                        ++pairs;
                    }
            overlap_sum += pair_sum / pairs;
            ++overlap_dialogues;
        }
    }

    s.unique_q /= static_cast<double>(dialogues.size());
    s.novel_q = questions_total ? static_cast<double>(questions_novel) / questions_total : 0.0;
    s.dist1 = uni_total ? static_cast<double>(uni.size()) / uni_total : 0.0;
    s.dist2 = bi_total ? static_cast<double>(bi.size()) / bi_total : 0.0;
    s.ent1 = entropy(uni, uni_total);
    s.ent2 = entropy(bi, bi_total);
    s.mutual_overlap = overlap_dialogues ? overlap_sum / overlap_dialogues : 0.0;
    return s;
}

std::string MetricReport::to_json() const {
    nlohmann::json j;
    j["n_episodes"] = n_episodes;
    j["pool_size"] = pool_size;
    j["mrr"] = mrr;
    j["r1"] = r1;
    j["r5"] = r5;
    j["r10"] = r10;
    j["mean_rank"] = mean_rank;
    j["pmr"] = pmr;
    j["pmr_rounds"] = pmr_rounds;
    j["unique_q"] = unique_q;
    j["novel_q"] = novel_q;
    j["dist1"] = dist1;
    j["dist2"] = dist2;
    j["ent1"] = ent1;
    j["ent2"] = ent2;
    j["mutual_overlap"] = mutual_overlap;
    j["nll"] = nll;
    return j.dump();
}

std::string MetricReport::to_table() const {
    std::ostringstream os;
    os.setf(std::ios::fixed);
    os.precision(4);
    os << "episodes        " << n_episodes << " (pool " << pool_size << ")\n"
       << "mrr             " << mrr << "\n"
       << "r@1 / r@5 / r@10  " << r1 << " / " << r5 << " / " << r10 << "\n"
       << "mean rank       " << mean_rank << "\n"
       << "pmr             " << pmr << "\n";
    os << "pmr by round   ";
    for (double p : pmr_rounds) os << " " << p;
    os << "\n"
       << "unique_q        " << unique_q << "\n"
       << "novel_q         " << novel_q << "\n"
       << "dist-1 / dist-2   " << dist1 << " / " << dist2 << "\n"
       << "ent-1 / ent-2     " << ent1 << " / " << ent2 << "\n"
       << "mutual overlap  " << mutual_overlap << "\n"
       << "nll             " << nll << "\n";
    return os.str();
}

}  // namespace dst
