#include "evcomp/tokenizer.hpp"

#include <cctype>

#include "evcomp/errors.hpp"

namespace evcomp {

namespace {

template <typename Fn>
void for_each_word(std::string_view text, Fn&& fn) {
    std::size_t i = 0;
    while (i < text.size()) {
        while (i < text.size() && std::isspace(static_cast<unsigned char>(text[i]))) ++i;
        std::size_t start = i;
        while (i < text.size() && !std::isspace(static_cast<unsigned char>(text[i]))) ++i;
        if (i > start) fn(text.substr(start, i - start));
    }
}

}  // namespace

std::vector<TokenId> WhitespaceTokenizer::tokenize(std::string_view text) const {
    std::vector<TokenId> out;
    for_each_word(text, [&](std::string_view word) {
        auto id = vocab_.find(word);
        if (!id) {
            throw UnknownTokenError("word \"" + std::string(word) + "\" is not in the vocabulary");
        }
        out.push_back(*id);
    });
    return out;
}

std::string WhitespaceTokenizer::detokenize(std::span<const TokenId> tokens) const {
    std::string out;
    for (std::size_t i = 0; i < tokens.size(); ++i) {
        if (i > 0) out.push_back(' ');
        out.append(vocab_.token(tokens[i]));
    }
    return out;
}

std::size_t WhitespaceTokenizer::count_words(std::string_view text) {
    std::size_t n = 0;
    for_each_word(text, [&](std::string_view) { ++n; });
    return n;
}

}  // namespace evcomp
