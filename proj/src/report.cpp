#include "evcomp/report.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "evcomp/errors.hpp"

namespace evcomp::harness {

using nlohmann::json;

std::string format_double(double value) {
    if (std::isnan(value)) return "nan";
    if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), value);
    return std::string(buf, ptr);
}

namespace {

double parse_double_token(std::string_view text, const std::string& origin, int line) {
    if (text == "nan") return std::nan("");
    if (text == "inf") return std::numeric_limits<double>::infinity();
    if (text == "-inf") return -std::numeric_limits<double>::infinity();
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
    if (ec != std::errc{} || ptr != text.data() + text.size()) {
        throw ParseError(origin, line, "bad number \"" + std::string(text) + "\"");
    }
    return v;
}

json record_to_json(const AnswerRecord& record) {
    if (record.error) {
        return json{{"id", record.id}, {"error", *record.error}};
    }
    const metrics::ExampleScore& s = *record.score;
    return json{{"id", record.id},
                {"acc", s.accuracy},
                {"acc_containment", s.accuracy_containment},
                {"acc_exact", s.accuracy_exact},
                {"f1", s.f1},
                {"hits", s.hits},
                {"cr", s.compression_rate},
                {"ppl", s.evidence_perplexity},
                {"compressed_evidence", record.compressed_evidence},
                {"prediction", record.prediction},
                {"n_tokens", record.trace.tokens.size()},
                {"retrieved_tokens", record.retrieved_tokens},
                {"evidence_loglik", record.evidence_loglik},
                {"terminated_by", std::string(to_string(record.trace.terminated_by))}};
}

std::ofstream open_out(const std::filesystem::path& path) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write " + path.string());
    return out;
}

}  // namespace

void write_records(const std::filesystem::path& path, std::span<const AnswerRecord> records) {
    std::ofstream out = open_out(path);
    for (const AnswerRecord& record : records) {
        out << record_to_json(record).dump() << "\n";
    }
}

std::vector<AnswerRecord> read_records(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open records file " + path.string());
    std::vector<AnswerRecord> records;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        json doc;
        try {
            doc = json::parse(line);
        } catch (const json::exception& e) {
            throw ParseError(path.string(), line_no, std::string("bad JSON: ") + e.what());
        }
        AnswerRecord record;
        try {
            record.id = doc.at("id").get<std::string>();
            if (doc.contains("error")) {
                record.error = doc.at("error").get<std::string>();
            } else {
                metrics::ExampleScore score;
                score.accuracy = doc.at("acc").get<int>();
                score.accuracy_containment = doc.value("acc_containment", score.accuracy);
                score.accuracy_exact = doc.value("acc_exact", 0);
                score.f1 = doc.at("f1").get<double>();
                score.hits = doc.at("hits").get<int>();
                score.compression_rate = doc.at("cr").get<double>();
                score.evidence_perplexity = doc.at("ppl").get<double>();
                record.score = score;
                record.compressed_evidence = doc.value("compressed_evidence", std::string());
                record.prediction = doc.value("prediction", std::string());
                record.retrieved_tokens = doc.value("retrieved_tokens", std::size_t{0});
                record.evidence_loglik = doc.value("evidence_loglik", 0.0);
            }
        } catch (const json::exception& e) {
            throw ParseError(path.string(), line_no, std::string("bad record: ") + e.what());
        }
        records.push_back(std::move(record));
    }
    return records;
}

void write_compress_records(const std::filesystem::path& path,
                            std::span<const AnswerRecord> records) {
    std::ofstream out = open_out(path);
    for (const AnswerRecord& record : records) {
        json doc;
        if (record.error) {
            doc = json{{"id", record.id}, {"error", *record.error}};
        } else {
            doc = json{{"id", record.id},
                       {"compressed_evidence", record.compressed_evidence},
                       {"n_tokens", record.trace.tokens.size()},
                       {"retrieved_tokens", record.retrieved_tokens},
                       {"cr", metrics::compression_rate(record.retrieved_tokens,
                                                        record.trace.tokens.size())},
                       {"terminated_by", std::string(to_string(record.trace.terminated_by))}};
        }
        out << doc.dump() << "\n";
    }
}

std::vector<CompressedInput> read_compressed_inputs(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open records file " + path.string());
    std::vector<CompressedInput> inputs;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        try {
            json doc = json::parse(line);
            if (doc.contains("error")) continue;
            inputs.push_back(CompressedInput{doc.at("id").get<std::string>(),
                                             doc.at("compressed_evidence").get<std::string>()});
        } catch (const json::exception& e) {
            throw ParseError(path.string(), line_no, std::string("bad record: ") + e.what());
        }
    }
    return inputs;
}

void write_trace_file(const std::filesystem::path& path, const AnswerRecord& record,
                      double alpha) {
    std::ofstream out = open_out(path);
    out << "# trace id=" << record.id << " alpha=" << format_double(alpha)
        << " terminated_by=" << to_string(record.trace.terminated_by) << "\n";
    for (std::size_t i = 0; i < record.trace.tokens.size(); ++i) {
        const StepRecord& step = record.trace.per_step[i];
        out << record.trace.tokens[i] << "\t" << format_double(step.target_logprob) << "\t"
            << format_double(step.compression_logprob) << "\t"
            << format_double(step.combined_score) << "\t" << to_string(step.tag) << "\n";
    }
}

CompressionTrace parse_trace_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open trace file " + path.string());
    const std::string origin = path.string();
    CompressionTrace trace;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        if (line[0] == '#') {
            auto pos = line.find("terminated_by=");
            if (pos != std::string::npos) {
                trace.terminated_by = termination_from_string(line.substr(pos + 14));
            }
            continue;
        }
        std::istringstream fields(line);
        std::string tok, t_lp, c_lp, combined, tag;
        if (!(std::getline(fields, tok, '\t') && std::getline(fields, t_lp, '\t') &&
              std::getline(fields, c_lp, '\t') && std::getline(fields, combined, '\t') &&
              std::getline(fields, tag))) {
            throw ParseError(origin, line_no, "expected 5 tab-separated fields");
        }
        TokenId token_id = 0;
        auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), token_id);
        if (ec != std::errc{} || ptr != tok.data() + tok.size()) {
            throw ParseError(origin, line_no, "bad token id \"" + tok + "\"");
        }
        trace.tokens.push_back(token_id);
        trace.per_step.push_back(StepRecord{parse_double_token(t_lp, origin, line_no),
                                            parse_double_token(c_lp, origin, line_no),
                                            parse_double_token(combined, origin, line_no),
                                            source_tag_from_string(tag)});
    }
    return trace;
}

void write_traces(const std::filesystem::path& dir, std::span<const AnswerRecord> records,
                  double alpha) {
    std::filesystem::create_directories(dir);
    for (const AnswerRecord& record : records) {
        if (record.error && record.trace.tokens.empty() && record.trace.per_step.empty()) continue;
        write_trace_file(dir / (record.id + ".trace"), record, alpha);
    }
}

json aggregate_to_json(const Aggregate& aggregate) {
    json doc;
    doc["count"] = aggregate.count;
    if (aggregate.count > 0) {
        doc["mean_acc"] = aggregate.mean_accuracy;
        doc["mean_acc_containment"] = aggregate.mean_accuracy_containment;
        doc["mean_acc_exact"] = aggregate.mean_accuracy_exact;
        doc["mean_f1"] = aggregate.mean_f1;
        doc["mean_cr"] = aggregate.mean_compression_rate;
        doc["mean_ppl"] = aggregate.mean_evidence_perplexity;
    } else {
        doc["mean_acc"] = nullptr;
        doc["mean_acc_containment"] = nullptr;
        doc["mean_acc_exact"] = nullptr;
        doc["mean_f1"] = nullptr;
        doc["mean_cr"] = nullptr;
        doc["mean_ppl"] = nullptr;
    }
    return doc;
}

json snapshot_to_json(const ConfigSnapshot& snapshot) {
    return json{{"alpha", snapshot.alpha},
                {"decode_mode", snapshot.decode_mode},
                {"max_new_tokens", snapshot.max_new_tokens},
                {"answer_max_tokens", snapshot.answer_max_tokens},
                {"stop_on_eos", snapshot.stop_on_eos},
                {"metric_mode", snapshot.metric_mode},
                {"eval_layout", snapshot.eval_layout},
                {"compression_backend", snapshot.compression_backend},
                {"target_backend", snapshot.target_backend},
                {"vocabulary_fingerprint", snapshot.vocabulary_fingerprint},
                {"templates_fingerprint", snapshot.templates_fingerprint},
                {"dataset", snapshot.dataset}};
}

json summary_from_parts(const json& config, const Aggregate& overall, const Aggregate& hits0,
                        const Aggregate& hits1, std::size_t failed) {
    json aggregates = aggregate_to_json(overall);
    aggregates["failed"] = failed;
    return json{{"aggregates", std::move(aggregates)},
                {"config", config},
                {"hits0", aggregate_to_json(hits0)},
                {"hits1", aggregate_to_json(hits1)}};
}

json summary_to_json(const RunReport& report) {
    return summary_from_parts(snapshot_to_json(report.config), report.overall, report.hits0,
                              report.hits1, report.failed);
}

void write_summary(const std::filesystem::path& path, const json& summary) {
    std::ofstream out = open_out(path);
    out << summary.dump(2) << "\n";
}

void write_sweep_table(const std::filesystem::path& path, std::span<const RunReport> reports) {
    std::ofstream out = open_out(path);
    out << "alpha\tacc\tacc_exact\tf1\tppl\tcr\n";
    for (const RunReport& report : reports) {
        out << format_double(report.config.alpha) << "\t"
            << format_double(report.overall.mean_accuracy) << "\t"
            << format_double(report.overall.mean_accuracy_exact) << "\t"
            << format_double(report.overall.mean_f1) << "\t"
            << format_double(report.overall.mean_evidence_perplexity) << "\t"
            << format_double(report.overall.mean_compression_rate) << "\n";
    }
}

void persist_report(const std::filesystem::path& output_dir, const RunReport& report) {
    std::filesystem::create_directories(output_dir);
    write_records(output_dir / "records.jsonl", report.records);
    write_traces(output_dir / "traces", report.records, report.config.alpha);
    write_summary(output_dir / "summary.json", summary_to_json(report));
}

}  // namespace evcomp::harness
