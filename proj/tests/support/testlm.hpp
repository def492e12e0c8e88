#pragma once

// Test-only builders: hand-assembled and randomized toy language models.

#include <cmath>
#include <map>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "evcomp/toy_lm.hpp"

namespace evcomp::test {

inline Vocabulary make_vocab(std::vector<std::string> tokens, const std::string& eos) {
    TokenId eos_id = -1;
    for (std::size_t i = 0; i < tokens.size(); ++i) {
        if (tokens[i] == eos) eos_id = static_cast<TokenId>(i);
    }
    return Vocabulary(std::move(tokens), eos_id);
}

// Distribution from explicit probabilities (zeros allowed).
inline TokenLogProbs dist_from_probs(const std::vector<double>& probs) {
    std::vector<double> logs(probs.size());
    for (std::size_t i = 0; i < probs.size(); ++i) {
        logs[i] = probs[i] > 0.0 ? std::log(probs[i]) : kNegInf;
    }
    return TokenLogProbs::normalize(logs, logs.size());
}

// Sparse spec: listed tokens get the given probability, the rest zero.
inline TokenLogProbs dist_from_pairs(const Vocabulary& vocab,
                                     const std::vector<std::pair<std::string, double>>& pairs) {
    std::vector<double> probs(vocab.size(), 0.0);
    for (const auto& [tok, p] : pairs) {
        probs[static_cast<std::size_t>(*vocab.find(tok))] = p;
    }
    return dist_from_probs(probs);
}

struct TableSpec {
    std::vector<std::string> context;  // 0..2 tokens
    std::vector<std::pair<std::string, double>> next;
};

inline ToyTableLM make_toy_lm(const Vocabulary& vocab, const std::vector<TableSpec>& entries,
                              const std::string& name = "toy",
                              std::size_t max_context = 4096) {
    ToyTableLM::Table table;
    for (const TableSpec& spec : entries) {
        std::vector<TokenId> ctx;
        for (const std::string& tok : spec.context) ctx.push_back(*vocab.find(tok));
        table.emplace(std::move(ctx), dist_from_pairs(vocab, spec.next));
    }
    return ToyTableLM(BackendDescriptor{name, vocab, max_context}, std::move(table),
                      TokenLogProbs::uniform(vocab.size()));
}

// --- randomized models ------------------------------------------------------

inline Vocabulary random_vocab(std::mt19937& rng, std::size_t min_size = 4,
                               std::size_t max_size = 12) {
    std::uniform_int_distribution<std::size_t> size_dist(min_size, max_size);
    std::size_t n = size_dist(rng);
    std::vector<std::string> tokens;
    tokens.reserve(n);
    for (std::size_t i = 0; i + 1 < n; ++i) tokens.push_back("t" + std::to_string(i));
    tokens.push_back("</s>");
    return Vocabulary(std::move(tokens), static_cast<TokenId>(n - 1));
}

// Random dense-ish distribution; zero_fraction of the entries get zero
// probability (at least one stays positive).
inline TokenLogProbs random_dist(std::mt19937& rng, std::size_t vocab_size,
                                 double zero_fraction = 0.0) {
    std::uniform_real_distribution<double> mass(0.05, 1.0);
    std::uniform_real_distribution<double> coin(0.0, 1.0);
    std::vector<double> probs(vocab_size, 0.0);
    bool any = false;
    for (std::size_t i = 0; i < vocab_size; ++i) {
        if (coin(rng) >= zero_fraction) {
            probs[i] = mass(rng);
            any = true;
        }
    }
    if (!any) probs[rng() % vocab_size] = 1.0;
    double sum = 0.0;
    for (double p : probs) sum += p;
    for (double& p : probs) p /= sum;
    return dist_from_probs(probs);
}

inline ToyTableLM random_toy_lm(std::mt19937& rng, const Vocabulary& vocab,
                                const std::string& name, double zero_fraction = 0.0,
                                std::size_t n_entries = 12) {
    std::uniform_int_distribution<std::size_t> order_dist(0, ToyTableLM::kMaxOrder);
    std::uniform_int_distribution<TokenId> token_dist(0, static_cast<TokenId>(vocab.size()) - 1);
    ToyTableLM::Table table;
    for (std::size_t i = 0; i < n_entries; ++i) {
        std::vector<TokenId> ctx(order_dist(rng));
        for (TokenId& t : ctx) t = token_dist(rng);
        table.emplace(std::move(ctx), random_dist(rng, vocab.size(), zero_fraction));
    }
    return ToyTableLM(BackendDescriptor{name, vocab, 4096}, std::move(table),
                      random_dist(rng, vocab.size(), zero_fraction));
}

inline std::vector<TokenId> random_context(std::mt19937& rng, const Vocabulary& vocab,
                                           std::size_t min_len = 1, std::size_t max_len = 6) {
    std::uniform_int_distribution<std::size_t> len_dist(min_len, max_len);
    std::uniform_int_distribution<TokenId> token_dist(0, static_cast<TokenId>(vocab.size()) - 1);
    std::vector<TokenId> ctx(len_dist(rng));
    for (TokenId& t : ctx) t = token_dist(rng);
    return ctx;
}

}  // namespace evcomp::test
