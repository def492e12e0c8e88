#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "evcomp/backend.hpp"
#include "evcomp/types.hpp"

namespace evcomp {

// The two growing contexts of an ensemble decode. The compression context
// renders the summarization prompt over query + documents; the generation
// context renders the context-generation prompt over the query alone. Both
// always end with the identical emitted suffix.
struct DualContext {
    std::vector<TokenId> compression_context;
    std::vector<TokenId> generation_context;

    void append(TokenId token) {
        compression_context.push_back(token);
        generation_context.push_back(token);
    }
};

struct EnsembleChoice {
    TokenId token;
    double combined_score;
    SourceTag tag;
};

// One fusion step: argmax over the vocabulary of
// alpha * target + (1 - alpha) * compression, ties broken by lowest token
// index. The tag relates the chosen token to the two per-model argmaxes
// (computed with the same tie-break). alpha = 0 reproduces the compression
// argmax exactly; alpha = 1 the target argmax.
EnsembleChoice ensemble_step(const TokenLogProbs& target_dist,
                             const TokenLogProbs& compression_dist, double alpha);

struct DecodeResult {
    CompressionTrace trace;
    DualContext final_context;
    // Set when the decode aborted mid-way (backend failure, context
    // overflow); the trace holds every step completed before the failure.
    std::optional<std::string> error;
};

// Lockstep dual-context greedy decoding under the weighted log-probability
// sum. Each chosen token is appended to both contexts. Stops at eos (when
// configured), at max_new_tokens, or at the first backend failure. Throws
// IncompatibleVocabError when the two backends' vocabularies differ.
DecodeResult decode(const LmBackend& compression_backend, const LmBackend& target_backend,
                    DualContext initial, const DecodeConfig& config);

struct GreedyResult {
    std::vector<TokenId> tokens;
    Termination terminated_by = Termination::length_limit;
};

// Single-model greedy decoding with the same stopping rules as decode().
GreedyResult greedy_decode(const LmBackend& backend, std::vector<TokenId> context,
                           int max_new_tokens, bool stop_on_eos = true);

struct SequenceScore {
    double total_logprob;  // sum over the sequence of log P(tok | prefix, preceding)
    double perplexity;     // exp(-total / length)
};

// Scores `sequence` autoregressively under `backend`, conditioned on
// `prefix`. Throws on an empty sequence.
SequenceScore score_sequence(const LmBackend& backend, std::span<const TokenId> prefix,
                             std::span<const TokenId> sequence);

}  // namespace evcomp
