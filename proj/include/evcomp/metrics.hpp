#pragma once

#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace evcomp::metrics {

// The standard open-domain-QA answer normalization: lowercase, strip ASCII
// punctuation, drop the articles a/an/the, collapse whitespace. Idempotent.
std::string normalize_answer(std::string_view text);

// Max over golds of the harmonic mean of token precision/recall on multisets
// of lowercased, punctuation-stripped whitespace tokens (articles are kept,
// so every word counts toward precision and recall). 1 when both sides
// normalize to empty, 0 when only one does.
double token_f1(std::string_view prediction, std::span<const std::string> golds);

// 1 iff some normalized gold is a substring of the normalized prediction.
int accuracy(std::string_view prediction, std::span<const std::string> golds);

// 1 iff some normalized gold equals the normalized prediction.
int accuracy_exact(std::string_view prediction, std::span<const std::string> golds);

// 1 iff some normalized gold appears in the normalized concatenation of the
// retrieved documents (evidence-relevant vs evidence-irrelevant examples).
int hits(std::span<const std::string> documents, std::span<const std::string> golds);

// retrieved / compressed token counts; a zero-length compression clamps the
// denominator to 1. Errors when retrieved_token_count is 0.
double compression_rate(std::size_t retrieved_token_count, std::size_t compressed_token_count);

enum class MetricMode {
    containment,
    exact,
};

std::string_view to_string(MetricMode mode);
MetricMode metric_mode_from_string(std::string_view s);

struct ExampleScore {
    int accuracy = 0;  // under the selected MetricMode
    int accuracy_containment = 0;
    int accuracy_exact = 0;
    double f1 = 0.0;
    int hits = 0;
    double compression_rate = 1.0;
    double evidence_perplexity = 1.0;
};

}  // namespace evcomp::metrics
