#pragma once

#include <cstddef>
#include <map>
#include <string>
#include <vector>

#include "xvgc/errors.hpp"

namespace xvgc {

using TokenList = std::vector<std::string>;

struct NGramCounts {
    std::size_t n = 1;
    std::map<std::vector<std::string>, std::size_t> counts;
};

NGramCounts ngram_counts(const TokenList& tokens, std::size_t n);

struct SentenceScores {
    double bleu = 0.0;  // smoothed sentence BLEU-4
    double rouge_l = 0.0;
    double meteor = 0.0;
    double cider = 0.0;
};

struct MetricReport {
    double bleu[4] = {0, 0, 0, 0};  // corpus B-1..B-4
    double cider = 0.0;
    double meteor = 0.0;
    double rouge_l = 0.0;
    std::vector<SentenceScores> per_sentence;

    std::string to_json() const;  // fixed key order
};

// Corpus-level cumulative BLEU: clipped n-gram counts pooled over the
// corpus, uniform weights 1/max_n, brevity penalty exp(1 - r/c) for c < r.
double bleu(const std::vector<TokenList>& candidates, const std::vector<TokenList>& references,
            std::size_t max_n);

// Sentence-level variant with add-one smoothing on p_n for n >= 2.
double sentence_bleu(const TokenList& candidate, const TokenList& reference, std::size_t max_n);

// LCS F-measure with beta = 1.2. Both empty -> 1, one empty -> 0.
double rouge_l(const TokenList& candidate, const TokenList& reference);

// Exact-match unigram alignment maximizing matches then minimizing chunks;
// F_mean = 10PR/(R+9P), penalty = 0.5 (chunks/m)^3.
double meteor(const TokenList& candidate, const TokenList& reference);

// TF-IDF n-gram cosine consensus over n = 1..4, scaled by 10. IDF =
// max(0, log(|corpus| / (1 + df))) over corpus_refs.
double cider(const std::vector<TokenList>& candidates, const std::vector<TokenList>& references,
             const std::vector<TokenList>& corpus_refs);

// Tokenizes both sides with the tokenizer rules and computes every metric.
MetricReport evaluate_corpus(const std::vector<std::pair<std::string, std::string>>& pairs);

}  // namespace xvgc
