#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "orspoken/types.hpp"

namespace orspoken::text {

// Lowercased tokens as produced by tokenize(); no empty tokens.
using TokenSeq = std::vector<std::string>;

// Lowercases, splits on Unicode whitespace, strips leading/trailing ASCII
// punctuation per token and drops tokens that become empty. Lowercasing is
// ASCII-only; non-ASCII bytes pass through untouched.
TokenSeq tokenize(const std::string& text);

enum class Metric { bleu1, rouge_l, meteor, cider };

struct MetricScore {
    Metric name;
    double value = 0.0;

    // 1 for bleu1/rouge_l/meteor, 10 for cider.
    double range_max() const { return name == Metric::cider ? 10.0 : 1.0; }
};

const char* metric_name(Metric m);

// Corpus document frequencies of n-grams for n = 1..4.
struct IdfTable {
    static constexpr int n_max = 4;
    std::size_t doc_count = 0;
    std::map<std::vector<std::string>, std::size_t> df;
};

// Clipped unigram precision times the brevity penalty
// BP = 1 if c >= r else exp(1 - r/c). Both sequences must be nonempty.
MetricScore bleu1(const TokenSeq& candidate, const TokenSeq& reference);

// LCS-based F-measure with beta = 1.2:
// R = LCS/r, P = LCS/c, F = (1 + b^2) R P / (R + b^2 P); 0 when LCS = 0.
MetricScore rouge_l(const TokenSeq& candidate, const TokenSeq& reference);

// Exact-match METEOR: alignment maximizing matches then minimizing chunks;
// P = m/c, R = m/r, F_mean = 10PR/(R + 9P), penalty = 0.5 (chunks/m)^3,
// score = F_mean (1 - penalty); 0 when there is no match.
MetricScore meteor(const TokenSeq& candidate, const TokenSeq& reference);

// df[g] = number of corpus entries containing n-gram g, n = 1..4.
IdfTable build_idf(const std::vector<TokenSeq>& corpus);

// TF-IDF n-gram cosine similarity averaged over n = 1..4 and over the
// references, scaled by 10. tf is the raw count; df of an unseen n-gram
// clamps to 1; the cosine against a zero vector is 0.
MetricScore cider(const TokenSeq& candidate, const std::vector<TokenSeq>& references,
                  const IdfTable& idf);

// Maps any score to [0,1]: value / range_max.
double normalize_unit(const MetricScore& score);

// Fisher-Pearson sample skewness g1 = m3 / m2^(3/2). Requires at least 3
// values and nonzero variance.
double skewness(const std::vector<double>& values);

// Equal-width histogram over [0,1]; values outside clamp to the end bins.
std::vector<std::size_t> histogram_unit(const std::vector<double>& values, int bins = 10);

}  // namespace orspoken::text
