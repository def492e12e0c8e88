#pragma once

#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "evcomp/logprobs.hpp"

namespace evcomp {

enum class TieBreak {
    lowest_token_index,
};

enum class DecodeMode {
    ensemble,          // weighted fusion of both models
    compression_only,  // behaves exactly like alpha = 0
    generation_only,   // behaves exactly like alpha = 1
};

struct DecodeConfig {
    double alpha = 0.5;
    int max_new_tokens = 200;
    bool stop_on_eos = true;
    TieBreak tie_break = TieBreak::lowest_token_index;
    DecodeMode mode = DecodeMode::ensemble;
    // Keep the full per-step distributions on the trace (memory-heavy for
    // large vocabularies; meant for offline re-verification and tests).
    bool record_distributions = false;

    void validate() const;
    double effective_alpha() const;
};

std::string_view to_string(DecodeMode mode);
DecodeMode decode_mode_from_string(std::string_view s);

// One QA example: query, gold answers, and the pre-retrieved evidence
// snippets the compression model will condense.
struct EvidenceBundle {
    std::string id;
    std::string query;
    std::vector<std::string> documents;
    std::vector<std::string> gold_answers;

    void validate() const;
};

// Provenance of an emitted token relative to the two per-step argmaxes.
enum class SourceTag {
    both_argmax,
    target_argmax,       // target's argmax and not the compression model's
    compression_argmax,  // compression's argmax and not the target's
    neither,
};

std::string_view to_string(SourceTag tag);
SourceTag source_tag_from_string(std::string_view s);

enum class Termination {
    eos,
    length_limit,
    aborted,  // backend failure mid-decode; trace holds the steps so far
};

std::string_view to_string(Termination t);
Termination termination_from_string(std::string_view s);

struct StepRecord {
    double target_logprob;       // chosen token under the target model
    double compression_logprob;  // chosen token under the compression model
    double combined_score;
    SourceTag tag;
};

// The emitted compressed evidence plus per-step provenance. per_step has one
// record per emitted token; a terminating eos is not part of the sequence.
struct CompressionTrace {
    std::vector<TokenId> tokens;
    std::vector<StepRecord> per_step;
    Termination terminated_by = Termination::length_limit;
    // (target, compression) pairs, only when DecodeConfig::record_distributions.
    std::vector<std::pair<TokenLogProbs, TokenLogProbs>> step_distributions;
};

}  // namespace evcomp
