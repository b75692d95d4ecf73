#include "xvgc/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <sstream>

#include "xvgc/tokenizer.hpp"

namespace xvgc {

NGramCounts ngram_counts(const TokenList& tokens, std::size_t n) {
    NGramCounts out;
    out.n = n;
    if (n == 0 || tokens.size() < n) return out;
    for (std::size_t i = 0; i + n <= tokens.size(); ++i)
        ++out.counts[std::vector<std::string>(tokens.begin() + i, tokens.begin() + i + n)];
    return out;
}

namespace {

struct ClippedCount {
    std::size_t clipped = 0;
    std::size_t total = 0;
};

ClippedCount clipped_ngram_count(const TokenList& cand, const TokenList& ref, std::size_t n) {
    ClippedCount c;
    auto cg = ngram_counts(cand, n);
    auto rg = ngram_counts(ref, n);
    for (const auto& [gram, count] : cg.counts) {
        c.total += count;
        auto it = rg.counts.find(gram);
        if (it != rg.counts.end()) c.clipped += std::min(count, it->second);
    }
    return c;
}

double brevity_penalty(std::size_t cand_len, std::size_t ref_len) {
    if (cand_len >= ref_len) return 1.0;
    if (cand_len == 0) return 0.0;
    return std::exp(1.0 - static_cast<double>(ref_len) / static_cast<double>(cand_len));
}

}  // namespace

double bleu(const std::vector<TokenList>& candidates, const std::vector<TokenList>& references,
            std::size_t max_n) {
    if (candidates.size() != references.size())
        throw ContractError("bleu: candidate/reference counts differ");
    if (max_n < 1) throw ContractError("bleu: max_n must be >= 1");

    std::size_t cand_len = 0, ref_len = 0;
    std::vector<std::size_t> clipped(max_n, 0), total(max_n, 0);
    for (std::size_t i = 0; i < candidates.size(); ++i) {
        cand_len += candidates[i].size();
        ref_len += references[i].size();
        for (std::size_t n = 1; n <= max_n; ++n) {
            auto c = clipped_ngram_count(candidates[i], references[i], n);
            clipped[n - 1] += c.clipped;
            total[n - 1] += c.total;
        }
    }

    double log_sum = 0.0;
    for (std::size_t n = 0; n < max_n; ++n) {
        if (clipped[n] == 0 || total[n] == 0) return 0.0;
        log_sum += std::log(static_cast<double>(clipped[n]) / static_cast<double>(total[n]));
    }
    return brevity_penalty(cand_len, ref_len) *
           std::exp(log_sum / static_cast<double>(max_n));
}

double sentence_bleu(const TokenList& candidate, const TokenList& reference, std::size_t max_n) {
    if (max_n < 1) throw ContractError("bleu: max_n must be >= 1");
    double log_sum = 0.0;
    for (std::size_t n = 1; n <= max_n; ++n) {
        auto c = clipped_ngram_count(candidate, reference, n);
        double p;
        if (n == 1) {
            if (c.clipped == 0 || c.total == 0) return 0.0;
            p = static_cast<double>(c.clipped) / static_cast<double>(c.total);
        } else {
            p = (static_cast<double>(c.clipped) + 1.0) / (static_cast<double>(c.total) + 1.0);
        }
        log_sum += std::log(p);
    }
    return brevity_penalty(candidate.size(), reference.size()) *
           std::exp(log_sum / static_cast<double>(max_n));
}

double rouge_l(const TokenList& candidate, const TokenList& reference) {
    if (candidate.empty() && reference.empty()) return 1.0;
    if (candidate.empty() || reference.empty()) return 0.0;

    const std::size_t m = candidate.size(), n = reference.size();
    std::vector<std::size_t> prev(n + 1, 0), cur(n + 1, 0);
    for (std::size_t i = 1; i <= m; ++i) {
        for (std::size_t j = 1; j <= n; ++j)
            cur[j] = candidate[i - 1] == reference[j - 1] ? prev[j - 1] + 1
                                                         : std::max(prev[j], cur[j - 1]);
        std::swap(prev, cur);
    }
    const double lcs = static_cast<double>(prev[n]);
    if (lcs == 0.0) return 0.0;
    const double p = lcs / static_cast<double>(m);
    const double r = lcs / static_cast<double>(n);
    constexpr double beta = 1.2;
    return ((1.0 + beta * beta) * r * p) / (r + beta * beta * p);
}

namespace {

// Alignment search: choose an injective map from candidate positions to
// equal-word reference positions maximizing matches, then minimizing the
// number of chunks (maximal runs contiguous in both sentences).
struct AlignSearch {
    const TokenList& cand;
    const TokenList& ref;
    std::vector<std::vector<std::size_t>> options;  // per cand pos, ref positions
    std::vector<bool> used;
    std::size_t best_matches = 0;
    std::size_t best_chunks = 0;
    std::uint64_t budget = 4'000'000;

    AlignSearch(const TokenList& c, const TokenList& r) : cand(c), ref(r), used(r.size(), false) {
        options.resize(c.size());
        for (std::size_t i = 0; i < c.size(); ++i)
            for (std::size_t j = 0; j < r.size(); ++j)
                if (c[i] == r[j]) options[i].push_back(j);
    }

    void dfs(std::size_t pos, std::size_t matches, std::size_t chunks, std::ptrdiff_t last_ref) {
        if (budget == 0) return;
        --budget;
        if (pos == cand.size()) {
            if (matches > best_matches ||
                (matches == best_matches && (best_matches == 0 || chunks < best_chunks))) {
                best_matches = matches;
                best_chunks = chunks;
            }
            return;
        }
        // Upper bound on remaining matches.
        std::size_t remaining = cand.size() - pos;
        if (matches + remaining < best_matches) return;
        if (matches + remaining == best_matches && best_matches > 0 && chunks >= best_chunks)
            return;

        // Prefer the continuation of the current chunk.
        const auto& opts = options[pos];
        if (last_ref >= 0) {
            const std::size_t cont = static_cast<std::size_t>(last_ref) + 1;
            if (cont < ref.size() && !used[cont] && cand[pos] == ref[cont]) {
                used[cont] = true;
                dfs(pos + 1, matches + 1, chunks, static_cast<std::ptrdiff_t>(cont));
                used[cont] = false;
            }
        }
        for (std::size_t j : opts) {
            if (used[j]) continue;
            if (last_ref >= 0 && j == static_cast<std::size_t>(last_ref) + 1) continue;  // done
            used[j] = true;
            dfs(pos + 1, matches + 1, chunks + 1, static_cast<std::ptrdiff_t>(j));
            used[j] = false;
        }
        dfs(pos + 1, matches, chunks, -1);  // leave this position unmatched
    }
};

}  // namespace

double meteor(const TokenList& candidate, const TokenList& reference) {
    if (candidate.empty() && reference.empty()) return 1.0;
    if (candidate.empty() || reference.empty()) return 0.0;

    AlignSearch search(candidate, reference);
    search.dfs(0, 0, 0, -1);
    const double m = static_cast<double>(search.best_matches);
    if (m == 0.0) return 0.0;
    const double chunks = static_cast<double>(search.best_chunks);
    const double p = m / static_cast<double>(candidate.size());
    const double r = m / static_cast<double>(reference.size());
    const double f_mean = 10.0 * p * r / (r + 9.0 * p);
    const double penalty = 0.5 * std::pow(chunks / m, 3.0);
    return f_mean * (1.0 - penalty);
}

namespace {

using NGramVector = std::map<std::vector<std::string>, double>;

double cosine(const NGramVector& a, const NGramVector& b) {
    double dot = 0.0, na = 0.0, nb = 0.0;
    for (const auto& [gram, w] : a) {
        na += w * w;
        auto it = b.find(gram);
        if (it != b.end()) dot += w * it->second;
    }
    for (const auto& [gram, w] : b) nb += w * w;
    if (na == 0.0 || nb == 0.0) return 0.0;
    return dot / (std::sqrt(na) * std::sqrt(nb));
}

}  // namespace

double cider(const std::vector<TokenList>& candidates, const std::vector<TokenList>& references,
             const std::vector<TokenList>& corpus_refs) {
    if (candidates.size() != references.size())
        throw ContractError("cider: candidate/reference counts differ");
    if (corpus_refs.empty()) throw ContractError("cider: empty IDF corpus");

    const double corpus_size = static_cast<double>(corpus_refs.size());
    // Document frequencies per n.
    std::vector<std::map<std::vector<std::string>, std::size_t>> df(4);
    for (const auto& doc : corpus_refs)
        for (std::size_t n = 1; n <= 4; ++n)
            for (const auto& [gram, count] : ngram_counts(doc, n).counts) ++df[n - 1][gram];

    auto idf = [&](const std::vector<std::string>& gram, std::size_t n) {
        std::size_t d = 0;
        auto it = df[n - 1].find(gram);
        if (it != df[n - 1].end()) d = it->second;
        return std::max(0.0, std::log(corpus_size / (1.0 + static_cast<double>(d))));
    };
    auto tfidf = [&](const TokenList& tokens, std::size_t n) {
        NGramVector v;
        for (const auto& [gram, count] : ngram_counts(tokens, n).counts) {
            const double w = static_cast<double>(count) * idf(gram, n);
            if (w != 0.0) v[gram] = w;
        }
        return v;
    };

    double total = 0.0;
    for (std::size_t i = 0; i < candidates.size(); ++i) {
        double sim_sum = 0.0;
        for (std::size_t n = 1; n <= 4; ++n)
            sim_sum += cosine(tfidf(candidates[i], n), tfidf(references[i], n));
        total += 10.0 * sim_sum / 4.0;
    }
    return total / static_cast<double>(candidates.size());
}

MetricReport evaluate_corpus(const std::vector<std::pair<std::string, std::string>>& pairs) {
    if (pairs.empty()) throw ConfigError("evaluate_corpus: empty pair list");

    std::vector<TokenList> cands, refs;
    cands.reserve(pairs.size());
    refs.reserve(pairs.size());
    for (const auto& [cand, ref] : pairs) {
        cands.push_back(tokenize(cand));
        refs.push_back(tokenize(ref));
    }

    MetricReport report;
    for (std::size_t n = 1; n <= 4; ++n) report.bleu[n - 1] = bleu(cands, refs, n);

    double rouge_sum = 0.0, meteor_sum = 0.0;
    report.per_sentence.resize(pairs.size());
    for (std::size_t i = 0; i < pairs.size(); ++i) {
        auto& s = report.per_sentence[i];
        s.bleu = sentence_bleu(cands[i], refs[i], 4);
        s.rouge_l = rouge_l(cands[i], refs[i]);
        s.meteor = meteor(cands[i], refs[i]);
        s.cider = cider({cands[i]}, {refs[i]}, refs);
        rouge_sum += s.rouge_l;
        meteor_sum += s.meteor;
    }
    report.rouge_l = rouge_sum / static_cast<double>(pairs.size());
    report.meteor = meteor_sum / static_cast<double>(pairs.size());
    report.cider = cider(cands, refs, refs);
    return report;
}

std::string MetricReport::to_json() const {
    std::ostringstream out;
    out.precision(12);
    out << "{";
    const char* keys[4] = {"bleu1", "bleu2", "bleu3", "bleu4"};
    for (std::size_t i = 0; i < 4; ++i) out << "\"" << keys[i] << "\": " << bleu[i] << ", ";
    out << "\"cider\": " << cider << ", ";
    out << "\"meteor\": " << meteor << ", ";
    out << "\"rouge_l\": " << rouge_l << "}";
    return out.str();
}

}  // namespace xvgc
