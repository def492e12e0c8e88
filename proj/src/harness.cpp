#include "evcomp/harness.hpp"

#include <algorithm>
#include <atomic>
#include <fstream>
#include <set>
#include <thread>

#include <nlohmann/json.hpp>

#include "evcomp/errors.hpp"
#include "evcomp/remote.hpp"
#include "evcomp/tokenizer.hpp"
#include "evcomp/toy_lm.hpp"

namespace evcomp::harness {

using nlohmann::json;

IngestResult ingest(const std::filesystem::path& path, bool strict) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open dataset file " + path.string());

    IngestResult result;
    std::set<std::string> ids;
    std::string line;
    int line_no = 0;
    const std::string origin = path.string();

    auto reject = [&](int ln, const std::string& message) {
        if (strict) throw ParseError(origin, ln, message);
        result.warnings.push_back(origin + ":" + std::to_string(ln) + ": " + message);
    };

    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        json doc;
        try {
            doc = json::parse(line);
        } catch (const json::exception& e) {
            reject(line_no, std::string("bad JSON: ") + e.what());
            continue;
        }
        EvidenceBundle bundle;
        try {
            bundle.id = doc.at("id").get<std::string>();
            bundle.query = doc.at("question").get<std::string>();
            bundle.gold_answers = doc.at("answers").get<std::vector<std::string>>();
            bundle.documents = doc.at("documents").get<std::vector<std::string>>();
            bundle.validate();
        } catch (const json::exception& e) {
            reject(line_no, std::string("bad record: ") + e.what());
            continue;
        } catch (const Error& e) {
            reject(line_no, e.what());
            continue;
        }
        if (!ids.insert(bundle.id).second) {
            reject(line_no, "duplicate id \"" + bundle.id + "\"");
            continue;
        }
        result.bundles.push_back(std::move(bundle));
    }
    return result;
}

namespace {

std::size_t count_retrieved_tokens(const EvidenceBundle& bundle) {
    std::size_t n = 0;
    for (const std::string& doc : bundle.documents) {
        n += WhitespaceTokenizer::count_words(doc);
    }
    return n;
}

// Prediction, evidence perplexity, and metrics for an already-compressed
// record. `record.compressed_evidence` and `record.retrieved_tokens` must be
// filled in.
void finish_example(AnswerRecord& record, const EvidenceBundle& bundle, const LmBackend& target,
                    const WhitespaceTokenizer& tokenizer, const PromptTemplateSet& templates,
                    const RunOptions& options) {
    std::string prompt = render_eval_prompt(templates, bundle.query, record.compressed_evidence);
    GreedyResult answer =
        greedy_decode(target, tokenizer.tokenize(prompt), options.answer_max_tokens, true);
    record.prediction = tokenizer.detokenize(answer.tokens);

    double perplexity = 1.0;
    record.evidence_loglik = 0.0;
    std::vector<TokenId> evidence_tokens = tokenizer.tokenize(record.compressed_evidence);
    if (!evidence_tokens.empty()) {
        std::vector<TokenId> prefix =
            tokenizer.tokenize(render_eval_prefix(templates, bundle.query));
        SequenceScore s = score_sequence(target, prefix, evidence_tokens);
        record.evidence_loglik = s.total_logprob;
        perplexity = s.perplexity;
    }

    metrics::ExampleScore score;
    score.accuracy_containment = metrics::accuracy(record.prediction, bundle.gold_answers);
    score.accuracy_exact = metrics::accuracy_exact(record.prediction, bundle.gold_answers);
    score.accuracy = options.metric_mode == metrics::MetricMode::exact
                         ? score.accuracy_exact
                         : score.accuracy_containment;
    score.f1 = metrics::token_f1(record.prediction, bundle.gold_answers);
    score.hits = metrics::hits(bundle.documents, bundle.gold_answers);
    score.compression_rate =
        metrics::compression_rate(record.retrieved_tokens, evidence_tokens.size());
    score.evidence_perplexity = perplexity;
    record.score = score;
}

}  // namespace

AnswerRecord compress_example(const EvidenceBundle& bundle, const BackendPair& backends,
                              const PromptTemplateSet& templates, const RunOptions& options) {
    AnswerRecord record;
    record.id = bundle.id;
    try {
        bundle.validate();
        WhitespaceTokenizer tokenizer(backends.compression->descriptor().vocabulary);
        DualContext ctx{tokenizer.tokenize(render_compression_context(templates, bundle)),
                        tokenizer.tokenize(render_generation_context(templates, bundle))};
        DecodeResult decoded =
            decode(*backends.compression, *backends.target, std::move(ctx), options.decode);
        record.trace = std::move(decoded.trace);
        record.compressed_evidence = tokenizer.detokenize(record.trace.tokens);
        record.retrieved_tokens = count_retrieved_tokens(bundle);
        if (record.retrieved_tokens == 0) {
            record.error = "documents contain no tokens";
        } else if (decoded.error) {
            record.error = decoded.error;
        }
    } catch (const std::exception& e) {
        record.error = e.what();
    }
    return record;
}

AnswerRecord run_example(const EvidenceBundle& bundle, const BackendPair& backends,
                         const PromptTemplateSet& templates, const RunOptions& options) {
    AnswerRecord record = compress_example(bundle, backends, templates, options);
    if (record.error) return record;
    try {
        WhitespaceTokenizer tokenizer(backends.target->descriptor().vocabulary);
        finish_example(record, bundle, *backends.target, tokenizer, templates, options);
    } catch (const std::exception& e) {
        record.error = e.what();
        record.score.reset();
    }
    return record;
}

AnswerRecord answer_example(const EvidenceBundle& bundle, const std::string& compressed_evidence,
                            const LmBackend& target, const PromptTemplateSet& templates,
                            const RunOptions& options) {
    AnswerRecord record;
    record.id = bundle.id;
    record.compressed_evidence = compressed_evidence;
    try {
        bundle.validate();
        record.retrieved_tokens = count_retrieved_tokens(bundle);
        WhitespaceTokenizer tokenizer(target.descriptor().vocabulary);
        finish_example(record, bundle, target, tokenizer, templates, options);
    } catch (const std::exception& e) {
        record.error = e.what();
        record.score.reset();
    }
    return record;
}

Aggregate aggregate_scores(std::span<const AnswerRecord> records) {
    Aggregate agg;
    double acc = 0, acc_c = 0, acc_e = 0, f1 = 0, cr = 0, ppl = 0;
    for (const AnswerRecord& record : records) {
        if (!record.score) continue;
        ++agg.count;
        acc += record.score->accuracy;
        acc_c += record.score->accuracy_containment;
        acc_e += record.score->accuracy_exact;
        f1 += record.score->f1;
        cr += record.score->compression_rate;
        ppl += record.score->evidence_perplexity;
    }
    if (agg.count > 0) {
        double n = static_cast<double>(agg.count);
        agg.mean_accuracy = acc / n;
        agg.mean_accuracy_containment = acc_c / n;
        agg.mean_accuracy_exact = acc_e / n;
        agg.mean_f1 = f1 / n;
        agg.mean_compression_rate = cr / n;
        agg.mean_evidence_perplexity = ppl / n;
    }
    return agg;
}

std::pair<Aggregate, Aggregate> split_by_hits(std::span<const AnswerRecord> records) {
    std::vector<AnswerRecord> h0, h1;
    for (const AnswerRecord& record : records) {
        if (!record.score) continue;
        (record.score->hits ? h1 : h0).push_back(record);
    }
    return {aggregate_scores(h0), aggregate_scores(h1)};
}

namespace {

template <typename Fn>
void parallel_for(std::size_t n, int jobs, Fn&& fn) {
    if (jobs <= 1 || n <= 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t i = next.fetch_add(1); i < n; i = next.fetch_add(1)) fn(i);
    };
    std::vector<std::thread> threads;
    int t = std::min<int>(jobs, static_cast<int>(n));
    threads.reserve(static_cast<std::size_t>(t));
    for (int k = 0; k < t; ++k) threads.emplace_back(worker);
    for (auto& th : threads) th.join();
}

ConfigSnapshot make_snapshot(const BackendPair& backends, const PromptTemplateSet& templates,
                             const RunOptions& options, const std::string& dataset_label) {
    ConfigSnapshot snap;
    snap.alpha = options.decode.effective_alpha();
    snap.decode_mode = std::string(to_string(options.decode.mode));
    snap.max_new_tokens = options.decode.max_new_tokens;
    snap.answer_max_tokens = options.answer_max_tokens;
    snap.stop_on_eos = options.decode.stop_on_eos;
    snap.metric_mode = std::string(metrics::to_string(options.metric_mode));
    snap.eval_layout = std::string(to_string(templates.eval_layout));
    snap.compression_backend = backends.compression->descriptor().name;
    snap.target_backend = backends.target->descriptor().name;
    snap.vocabulary_fingerprint = backends.compression->descriptor().vocabulary.fingerprint_hex();
    snap.templates_fingerprint = templates.fingerprint_hex();
    snap.dataset = dataset_label;
    return snap;
}

}  // namespace

std::vector<AnswerRecord> compress_run(const std::vector<EvidenceBundle>& bundles,
                                       const BackendPair& backends,
                                       const PromptTemplateSet& templates,
                                       const RunOptions& options) {
    options.decode.validate();
    templates.validate();
    auto verdict =
        check_compatibility(backends.compression->descriptor(), backends.target->descriptor());
    if (!verdict.compatible) {
        throw IncompatibleVocabError("compression and target backends do not share a vocabulary",
                                     verdict.fingerprint_a, verdict.fingerprint_b);
    }
    std::vector<AnswerRecord> records(bundles.size());
    parallel_for(bundles.size(), options.jobs, [&](std::size_t i) {
        records[i] = compress_example(bundles[i], backends, templates, options);
    });
    return records;
}

RunReport evaluate(const std::vector<EvidenceBundle>& bundles, const BackendPair& backends,
                   const PromptTemplateSet& templates, const RunOptions& options,
                   const std::string& dataset_label) {
    options.decode.validate();
    templates.validate();
    auto verdict =
        check_compatibility(backends.compression->descriptor(), backends.target->descriptor());
    if (!verdict.compatible) {
        throw IncompatibleVocabError("compression and target backends do not share a vocabulary",
                                     verdict.fingerprint_a, verdict.fingerprint_b);
    }

    RunReport report;
    report.config = make_snapshot(backends, templates, options, dataset_label);
    report.records.resize(bundles.size());
    parallel_for(bundles.size(), options.jobs, [&](std::size_t i) {
        report.records[i] = run_example(bundles[i], backends, templates, options);
    });
    report.failed = static_cast<std::size_t>(
        std::count_if(report.records.begin(), report.records.end(),
                      [](const AnswerRecord& r) { return r.error.has_value(); }));
    report.overall = aggregate_scores(report.records);
    std::tie(report.hits0, report.hits1) = split_by_hits(report.records);
    return report;
}

void validate_grid(std::span<const double> grid) {
    if (grid.empty()) throw ConfigError("grid is empty");
    for (double a : grid) {
        if (!(a >= 0.0 && a <= 1.0)) {
            throw ConfigError("grid value " + std::to_string(a) + " outside [0, 1]");
        }
    }
    std::vector<double> sorted(grid.begin(), grid.end());
    std::sort(sorted.begin(), sorted.end());
    if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end()) {
        throw ConfigError("grid contains duplicate values");
    }
}

std::vector<RunReport> sweep_alpha(const std::vector<EvidenceBundle>& bundles,
                                   const BackendPair& backends,
                                   const PromptTemplateSet& templates, const RunOptions& options,
                                   std::span<const double> grid,
                                   const std::string& dataset_label) {
    validate_grid(grid);
    std::vector<RunReport> reports;
    reports.reserve(grid.size());
    for (double alpha : grid) {
        RunOptions point = options;
        point.decode.mode = DecodeMode::ensemble;
        point.decode.alpha = alpha;
        reports.push_back(evaluate(bundles, backends, templates, point, dataset_label));
    }
    return reports;
}

// --- RunConfig -------------------------------------------------------------

namespace {

BackendSpec backend_spec_from_json(const json& doc, const std::string& which) {
    BackendSpec spec;
    std::string kind = doc.at("kind").get<std::string>();
    if (kind == "toy") {
        spec.kind = BackendSpec::Kind::toy;
        spec.target = doc.at("path").get<std::string>();
    } else if (kind == "remote") {
        spec.kind = BackendSpec::Kind::remote;
        spec.target = doc.at("endpoint").get<std::string>();
    } else {
        throw ConfigError(which + ": unknown backend kind \"" + kind + "\"");
    }
    spec.name = doc.value("name", std::string());
    return spec;
}

}  // namespace

RunConfig RunConfig::load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file " + path.string());
    json doc;
    try {
        doc = json::parse(in);
    } catch (const json::exception& e) {
        throw ConfigError("config file " + path.string() + ": " + e.what());
    }

    static const std::set<std::string> known = {
        "compression_backend", "target_backend", "alpha",         "grid",
        "templates",           "dataset",        "output_dir",    "max_new_tokens",
        "answer_max_tokens",   "stop_on_eos",    "decode_mode",   "metric_mode",
        "strict_ingest",       "max_failure_rate", "jobs",
    };
    for (const auto& [key, value] : doc.items()) {
        if (!known.count(key)) {
            throw ConfigError("config file " + path.string() + ": unknown key \"" + key + "\"");
        }
    }

    RunConfig config;
    try {
        config.compression_backend =
            backend_spec_from_json(doc.at("compression_backend"), "compression_backend");
        config.target_backend = backend_spec_from_json(doc.at("target_backend"), "target_backend");
        config.dataset = doc.at("dataset").get<std::string>();
        if (doc.contains("alpha")) config.alpha = doc.at("alpha").get<double>();
        if (doc.contains("grid")) config.grid = doc.at("grid").get<std::vector<double>>();
        if (doc.contains("templates")) {
            config.templates_path = doc.at("templates").get<std::string>();
        }
        if (doc.contains("output_dir")) {
            config.output_dir = doc.at("output_dir").get<std::string>();
        }
        if (doc.contains("max_new_tokens")) {
            config.max_new_tokens = doc.at("max_new_tokens").get<int>();
        }
        if (doc.contains("answer_max_tokens")) {
            config.answer_max_tokens = doc.at("answer_max_tokens").get<int>();
        }
        if (doc.contains("stop_on_eos")) config.stop_on_eos = doc.at("stop_on_eos").get<bool>();
        if (doc.contains("decode_mode")) {
            config.decode_mode = decode_mode_from_string(doc.at("decode_mode").get<std::string>());
        }
        if (doc.contains("metric_mode")) {
            config.metric_mode =
                metrics::metric_mode_from_string(doc.at("metric_mode").get<std::string>());
        }
        if (doc.contains("strict_ingest")) {
            config.strict_ingest = doc.at("strict_ingest").get<bool>();
        }
        if (doc.contains("max_failure_rate")) {
            config.max_failure_rate = doc.at("max_failure_rate").get<double>();
        }
        if (doc.contains("jobs")) config.jobs = doc.at("jobs").get<int>();
    } catch (const json::exception& e) {
        throw ConfigError("config file " + path.string() + ": " + e.what());
    }
    config.validate();
    return config;
}

void RunConfig::validate() const {
    if (!(alpha >= 0.0 && alpha <= 1.0)) throw ConfigError("alpha must be in [0, 1]");
    if (max_new_tokens < 1) throw ConfigError("max_new_tokens must be >= 1");
    if (answer_max_tokens < 1) throw ConfigError("answer_max_tokens must be >= 1");
    if (jobs < 1) throw ConfigError("jobs must be >= 1");
    if (!(max_failure_rate >= 0.0 && max_failure_rate <= 1.0)) {
        throw ConfigError("max_failure_rate must be in [0, 1]");
    }
    if (dataset.empty()) throw ConfigError("dataset path is required");
    if (compression_backend.target.empty() || target_backend.target.empty()) {
        throw ConfigError("both backends must be configured");
    }
    if (!grid.empty()) validate_grid(grid);
}

std::shared_ptr<const LmBackend> make_backend(const BackendSpec& spec,
                                              const std::string& default_name) {
    if (spec.kind == BackendSpec::Kind::remote) {
        return RemoteBackend::connect(spec.target);
    }
    std::string name = spec.name.empty() ? default_name : spec.name;
    return std::make_shared<ToyTableLM>(ToyTableLM::load(spec.target, name));
}

}  // namespace evcomp::harness
