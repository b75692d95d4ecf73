#pragma once

#include <cstddef>
#include <iosfwd>
#include <string>
#include <unordered_map>
#include <vector>

#include "xvgc/errors.hpp"

namespace xvgc {

// Word-level vocabulary with dense ids. Ids 0-3 are reserved sentinels.
class Vocabulary {
  public:
    static constexpr int kPad = 0;
    static constexpr int kBos = 1;
    static constexpr int kEos = 2;
    static constexpr int kUnk = 3;

    Vocabulary();
    explicit Vocabulary(std::vector<std::string> tokens);  // full list incl. reserved

    std::size_t size() const { return tokens_.size(); }
    int id_of(const std::string& token) const;  // kUnk when absent
    const std::string& token_of(int id) const;

    const std::vector<std::string>& tokens() const { return tokens_; }

    void save(std::ostream& out) const;  // one token per line, line = id
    static Vocabulary load(std::istream& in);

  private:
    std::vector<std::string> tokens_;
    std::unordered_map<std::string, int> ids_;
};

struct TokenSequence {
    std::vector<int> ids;
    std::size_t max_len = 0;
};

// Lowercases, splits on whitespace, and breaks out {. , ; : ( )} as
// standalone tokens.
std::vector<std::string> tokenize(const std::string& text);

// Tokens with frequency >= min_count, ordered by (count desc, token asc)
// after the reserved ids.
Vocabulary build_vocab(const std::vector<std::string>& corpus, std::size_t min_count = 1);

// BOS + ids (+ EOS), truncated to max_len with EOS always final.
TokenSequence encode(const std::vector<std::string>& tokens, const Vocabulary& vocab,
                     std::size_t max_len);

// Drops sentinels and joins with single spaces.
std::string decode(const TokenSequence& seq, const Vocabulary& vocab);

std::string join_tokens(const std::vector<std::string>& tokens);

}  // namespace xvgc
