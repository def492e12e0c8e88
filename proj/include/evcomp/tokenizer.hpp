#pragma once

#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "evcomp/vocab.hpp"

namespace evcomp {

// Splits text on whitespace runs and maps each word to its vocabulary id.
// The desk-scale stand-in for a real tokenizer; real backends arrive with
// pre-tokenized ids or a vocabulary whose tokens are whitespace words.
class WhitespaceTokenizer {
public:
    explicit WhitespaceTokenizer(Vocabulary vocab) : vocab_(std::move(vocab)) {}

    const Vocabulary& vocabulary() const { return vocab_; }

    // Throws UnknownTokenError naming the offending word.
    std::vector<TokenId> tokenize(std::string_view text) const;

    // Joins tokens with single spaces.
    std::string detokenize(std::span<const TokenId> tokens) const;

    // Whitespace token count, independent of any vocabulary.
    static std::size_t count_words(std::string_view text);

private:
    Vocabulary vocab_;
};

}  // namespace evcomp
