#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "evcomp/types.hpp"

namespace evcomp::harness {

enum class EvalLayout {
    question_first,
    context_first,
};

std::string_view to_string(EvalLayout layout);
EvalLayout eval_layout_from_string(std::string_view s);

struct Demonstration {
    std::string question;
    std::string answer;
};

// The prompt surfaces of a run: the zero-shot compression and generation
// instructions used during ensemble decoding, and the QA evaluation prompt
// (system prompt + demonstrations + question/context in a configurable
// order). The compression side carries no demonstrations; only the
// evaluation prompt does.
struct PromptTemplateSet {
    std::string compression_instruction =
        "You are an expert in summarization. Given a question and multiple document snippets, "
        "generate one summarized context that is helpful to answer the question. "
        "Just summarize, no other words.";
    std::string generation_instruction =
        "You are an expert in context generation. Given a question, generate a context that is "
        "helpful to answer the question. Just generate the context, no other words.";
    std::string eval_system_prompt =
        "You are an expert in Question Answering. Your job is to answer questions in 1 to 5 "
        "words based on the given context.";
    std::vector<Demonstration> demonstrations;
    EvalLayout eval_layout = EvalLayout::question_first;

    void validate() const;
    std::uint64_t fingerprint() const;
    std::string fingerprint_hex() const;

    static PromptTemplateSet load(const std::filesystem::path& path);
};

// "<instruction>\n\nQuestion: <q>\n\nDocuments: <d_1>\n<d_2>...\n\nSummarized Context:"
std::string render_compression_context(const PromptTemplateSet& templates,
                                       const EvidenceBundle& bundle);

// "<instruction>\n\nQuestion: <q>\n\nContext:", the query only, no documents.
std::string render_generation_context(const PromptTemplateSet& templates,
                                      const EvidenceBundle& bundle);

// Full evaluation prompt: system prompt, demonstrations, then question and
// context in the configured order, ending with "Answer:".
std::string render_eval_prompt(const PromptTemplateSet& templates, std::string_view question,
                               std::string_view compressed_evidence);

// The evaluation prompt truncated right after its context cue: the prefix the
// compressed evidence is conditioned on when measuring its perplexity.
std::string render_eval_prefix(const PromptTemplateSet& templates, std::string_view question);

}  // namespace evcomp::harness
