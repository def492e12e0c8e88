#pragma once

#include <filesystem>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "evcomp/backend.hpp"
#include "evcomp/decoder.hpp"
#include "evcomp/metrics.hpp"
#include "evcomp/templates.hpp"
#include "evcomp/types.hpp"

namespace evcomp::harness {

struct BackendPair {
    std::shared_ptr<const LmBackend> compression;
    std::shared_ptr<const LmBackend> target;
};

struct RunOptions {
    DecodeConfig decode;
    int answer_max_tokens = 32;  // answers are a few words; keep generation short
    metrics::MetricMode metric_mode = metrics::MetricMode::containment;
    int jobs = 1;
};

struct IngestResult {
    std::vector<EvidenceBundle> bundles;
    std::vector<std::string> warnings;  // skipped lines in lenient mode
};

// Reads line-delimited JSON records { id, question, answers[], documents[] }.
// Malformed lines and duplicate ids are fatal when strict, otherwise skipped
// and reported as warnings with their line numbers.
IngestResult ingest(const std::filesystem::path& path, bool strict);

// One example's full result. `score` is set iff the example completed;
// `error` is set iff it failed (the two are mutually exclusive).
struct AnswerRecord {
    std::string id;
    std::string compressed_evidence;
    std::string prediction;
    CompressionTrace trace;
    std::size_t retrieved_tokens = 0;  // whitespace token count over the documents
    double evidence_loglik = 0.0;
    std::optional<metrics::ExampleScore> score;
    std::optional<std::string> error;
};

struct Aggregate {
    std::size_t count = 0;
    double mean_accuracy = 0.0;
    double mean_accuracy_containment = 0.0;
    double mean_accuracy_exact = 0.0;
    double mean_f1 = 0.0;
    double mean_compression_rate = 0.0;
    double mean_evidence_perplexity = 0.0;
};

struct ConfigSnapshot {
    double alpha = 0.5;
    std::string decode_mode;
    int max_new_tokens = 0;
    int answer_max_tokens = 0;
    bool stop_on_eos = true;
    std::string metric_mode;
    std::string eval_layout;
    std::string compression_backend;
    std::string target_backend;
    std::string vocabulary_fingerprint;
    std::string templates_fingerprint;
    std::string dataset;
};

struct RunReport {
    ConfigSnapshot config;
    std::vector<AnswerRecord> records;
    Aggregate overall;
    Aggregate hits0;
    Aggregate hits1;
    std::size_t failed = 0;
};

// Decode-only: compress the bundle's evidence; no answer, no score.
AnswerRecord compress_example(const EvidenceBundle& bundle, const BackendPair& backends,
                              const PromptTemplateSet& templates, const RunOptions& options);

// compress_example over every bundle, on `jobs` threads.
std::vector<AnswerRecord> compress_run(const std::vector<EvidenceBundle>& bundles,
                                       const BackendPair& backends,
                                       const PromptTemplateSet& templates,
                                       const RunOptions& options);

// Full pipeline for one example: ensemble-decode the compressed evidence,
// assemble the evaluation prompt around it, greedily generate the answer with
// the target model, and score (including evidence perplexity under the
// target model, conditioned on the evaluation-prompt prefix). Failures are
// captured in the record, never thrown.
AnswerRecord run_example(const EvidenceBundle& bundle, const BackendPair& backends,
                         const PromptTemplateSet& templates, const RunOptions& options);

// Answer + score for evidence compressed elsewhere (the `answer` stage).
// Only the target backend is consulted.
AnswerRecord answer_example(const EvidenceBundle& bundle, const std::string& compressed_evidence,
                            const LmBackend& target, const PromptTemplateSet& templates,
                            const RunOptions& options);

// Means over the scored records, in record order.
Aggregate aggregate_scores(std::span<const AnswerRecord> records);

// Partition of the scored records by the Hits metric: (hits = 0, hits = 1).
std::pair<Aggregate, Aggregate> split_by_hits(std::span<const AnswerRecord> records);

// Runs every bundle (examples are independent and may run on `jobs`
// threads), aggregates, and snapshots the configuration. Throws
// IncompatibleVocabError when the backends' vocabularies differ.
RunReport evaluate(const std::vector<EvidenceBundle>& bundles, const BackendPair& backends,
                   const PromptTemplateSet& templates, const RunOptions& options,
                   const std::string& dataset_label);

// One full report per grid point; inputs are identical across grid points
// except alpha. Grid values must be distinct and in [0, 1].
std::vector<RunReport> sweep_alpha(const std::vector<EvidenceBundle>& bundles,
                                   const BackendPair& backends,
                                   const PromptTemplateSet& templates, const RunOptions& options,
                                   std::span<const double> grid,
                                   const std::string& dataset_label);

// --- CLI-facing run configuration -----------------------------------------

struct BackendSpec {
    enum class Kind { toy, remote };
    Kind kind = Kind::toy;
    std::string target;  // toy-LM file path, or http endpoint
    std::string name;    // optional display name for toy backends
};

struct RunConfig {
    BackendSpec compression_backend;
    BackendSpec target_backend;
    double alpha = 0.5;
    std::vector<double> grid;
    std::optional<std::filesystem::path> templates_path;
    std::filesystem::path dataset;
    std::filesystem::path output_dir = "out";
    int max_new_tokens = 200;
    int answer_max_tokens = 32;
    bool stop_on_eos = true;
    DecodeMode decode_mode = DecodeMode::ensemble;
    metrics::MetricMode metric_mode = metrics::MetricMode::containment;
    bool strict_ingest = false;
    double max_failure_rate = 0.0;
    int jobs = 1;

    static RunConfig load(const std::filesystem::path& path);
    void validate() const;
};

std::shared_ptr<const LmBackend> make_backend(const BackendSpec& spec,
                                              const std::string& default_name);

void validate_grid(std::span<const double> grid);

}  // namespace evcomp::harness
