#include "xvgc/tokenizer.hpp"

#include <algorithm>
#include <cctype>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>

namespace xvgc {

namespace {
const std::vector<std::string> kReserved = {"<pad>", "<bos>", "<eos>", "<unk>"};

bool is_split_punct(char c) {
    switch (c) {
        case '.': case ',': case ';': case ':': case '(': case ')': return true;
        default: return false;
    }
}
}  // namespace

Vocabulary::Vocabulary() : Vocabulary(kReserved) {}

Vocabulary::Vocabulary(std::vector<std::string> tokens) : tokens_(std::move(tokens)) {
    if (tokens_.size() < kReserved.size())
        throw ContractError("vocabulary smaller than the reserved token set");
    for (std::size_t i = 0; i < kReserved.size(); ++i)
        if (tokens_[i] != kReserved[i])
            throw ContractError("vocabulary id " + std::to_string(i) + " must be " + kReserved[i]);
    for (std::size_t i = 0; i < tokens_.size(); ++i) {
        if (!ids_.emplace(tokens_[i], static_cast<int>(i)).second)
            throw ContractError("duplicate vocabulary token: " + tokens_[i]);
    }
}

int Vocabulary::id_of(const std::string& token) const {
    auto it = ids_.find(token);
    return it == ids_.end() ? kUnk : it->second;
}

const std::string& Vocabulary::token_of(int id) const {
    if (id < 0 || static_cast<std::size_t>(id) >= tokens_.size())
        throw IndexError("vocabulary id " + std::to_string(id) + " out of " +
                         std::to_string(tokens_.size()));
    return tokens_[static_cast<std::size_t>(id)];
}

void Vocabulary::save(std::ostream& out) const {
    for (const auto& t : tokens_) out << t << "\n";
}

Vocabulary Vocabulary::load(std::istream& in) {
    std::vector<std::string> tokens;
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (!line.empty()) tokens.push_back(line);
    }
    return Vocabulary(std::move(tokens));
}

std::vector<std::string> tokenize(const std::string& text) {
    std::vector<std::string> out;
    std::string cur;
    auto flush = [&] {
        if (!cur.empty()) {
            out.push_back(cur);
            cur.clear();
        }
    };
    for (char raw : text) {
        const unsigned char u = static_cast<unsigned char>(raw);
        const char c = static_cast<char>(std::tolower(u));
        if (std::isspace(u)) {
            flush();
        } else if (is_split_punct(c)) {
            flush();
            out.emplace_back(1, c);
        } else {
            cur.push_back(c);
        }
    }
    flush();
    return out;
}

Vocabulary build_vocab(const std::vector<std::string>& corpus, std::size_t min_count) {
    if (min_count < 1) throw ConfigError("min_count must be >= 1");
    std::map<std::string, std::size_t> counts;
    for (const auto& text : corpus)
        for (const auto& tok : tokenize(text)) ++counts[tok];

    std::vector<std::pair<std::string, std::size_t>> kept;
    for (const auto& [tok, n] : counts)
        if (n >= min_count) kept.emplace_back(tok, n);
    std::sort(kept.begin(), kept.end(), [](const auto& a, const auto& b) {
        if (a.second != b.second) return a.second > b.second;
        return a.first < b.first;
    });

    std::vector<std::string> tokens = kReserved;
    for (auto& [tok, n] : kept) tokens.push_back(tok);
    return Vocabulary(std::move(tokens));
}

TokenSequence encode(const std::vector<std::string>& tokens, const Vocabulary& vocab,
                     std::size_t max_len) {
    if (max_len < 2) throw ConfigError("encode: max_len must be >= 2");
    TokenSequence seq;
    seq.max_len = max_len;
    seq.ids.push_back(Vocabulary::kBos);
    for (const auto& tok : tokens) {
        if (seq.ids.size() + 1 >= max_len) break;
        seq.ids.push_back(vocab.id_of(tok));
    }
    seq.ids.push_back(Vocabulary::kEos);
    return seq;
}

std::string decode(const TokenSequence& seq, const Vocabulary& vocab) {
    std::string out;
    for (int id : seq.ids) {
        if (id == Vocabulary::kPad || id == Vocabulary::kBos || id == Vocabulary::kEos) continue;
        if (!out.empty()) out += ' ';
        out += vocab.token_of(id);
    }
    return out;
}

std::string join_tokens(const std::vector<std::string>& tokens) {
    std::string out;
    for (const auto& t : tokens) {
        if (!out.empty()) out += ' ';
        out += t;
    }
    return out;
}

}  // namespace xvgc
