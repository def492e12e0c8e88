#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "evcomp/harness.hpp"

namespace evcomp::harness {

// Shortest round-trip decimal rendering of an IEEE-754 double.
std::string format_double(double value);

// records.jsonl: one JSON object per example, in run order, with the fixed
// score fields id/acc/f1/hits/cr/ppl (plus provenance extras). Failed
// examples carry { id, error } only.
void write_records(const std::filesystem::path& path, std::span<const AnswerRecord> records);

// Reads persisted records back for re-aggregation: scores and counts only,
// traces are not reconstructed.
std::vector<AnswerRecord> read_records(const std::filesystem::path& path);

// Decode-only records: { id, compressed_evidence, n_tokens, cr, terminated_by }.
void write_compress_records(const std::filesystem::path& path,
                            std::span<const AnswerRecord> records);

struct CompressedInput {
    std::string id;
    std::string compressed_evidence;
};

// Reads either record flavor, keeping id + compressed evidence. Failed
// records are skipped.
std::vector<CompressedInput> read_compressed_inputs(const std::filesystem::path& path);

// One line per decode step: token id, both chosen-token log-probs, combined
// score, and source tag: tab-separated, doubles in shortest round-trip form.
void write_trace_file(const std::filesystem::path& path, const AnswerRecord& record, double alpha);
CompressionTrace parse_trace_file(const std::filesystem::path& path);

// Writes one trace file per record under dir (creating it), named <id>.trace.
void write_traces(const std::filesystem::path& dir, std::span<const AnswerRecord> records,
                  double alpha);

nlohmann::json aggregate_to_json(const Aggregate& aggregate);
nlohmann::json snapshot_to_json(const ConfigSnapshot& snapshot);
nlohmann::json summary_to_json(const RunReport& report);

// summary.json assembled from already-serialized config (used verbatim) plus
// freshly computed aggregates; re-aggregation reproduces the original bytes.
nlohmann::json summary_from_parts(const nlohmann::json& config, const Aggregate& overall,
                                  const Aggregate& hits0, const Aggregate& hits1,
                                  std::size_t failed);

void write_summary(const std::filesystem::path& path, const nlohmann::json& summary);

// Consolidated sweep table: alpha, acc, acc_exact, f1, ppl, cr; one row per
// grid point, tab-separated.
void write_sweep_table(const std::filesystem::path& path, std::span<const RunReport> reports);

// Everything evaluate persists: records.jsonl, traces/, summary.json.
void persist_report(const std::filesystem::path& output_dir, const RunReport& report);

}  // namespace evcomp::harness
