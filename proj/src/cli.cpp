#include "evcomp/cli.hpp"

#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <unordered_map>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "evcomp/errors.hpp"
#include "evcomp/harness.hpp"
#include "evcomp/report.hpp"
#include "evcomp/server.hpp"
#include "evcomp/toy_lm.hpp"

namespace evcomp::cli {

namespace {

using harness::AnswerRecord;
using harness::RunConfig;
using harness::RunOptions;
using nlohmann::json;

struct Overrides {
    std::optional<double> alpha;
    std::optional<std::vector<double>> grid;
    std::optional<std::string> out;
    bool strict = false;
    std::optional<std::string> metric_mode;
    std::optional<int> max_new_tokens;
    std::optional<int> jobs;
    std::optional<std::string> decode_mode;
};

double parse_double_flag(const std::string& flag, const std::string& value) {
    try {
        std::size_t used = 0;
        double v = std::stod(value, &used);
        if (used != value.size()) throw std::invalid_argument(value);
        return v;
    } catch (const std::exception&) {
        throw ConfigError(flag + ": expected a number, got \"" + value + "\"");
    }
}

int parse_int_flag(const std::string& flag, const std::string& value) {
    try {
        std::size_t used = 0;
        int v = std::stoi(value, &used);
        if (used != value.size()) throw std::invalid_argument(value);
        return v;
    } catch (const std::exception&) {
        throw ConfigError(flag + ": expected an integer, got \"" + value + "\"");
    }
}

std::vector<double> parse_grid_csv(const std::string& csv) {
    std::vector<double> grid;
    std::size_t start = 0;
    while (start <= csv.size()) {
        std::size_t comma = csv.find(',', start);
        std::string part =
            csv.substr(start, comma == std::string::npos ? std::string::npos : comma - start);
        grid.push_back(parse_double_flag("--grid", part));
        if (comma == std::string::npos) break;
        start = comma + 1;
    }
    return grid;
}

RunConfig load_config(const std::string& path, const Overrides& overrides) {
    RunConfig config = RunConfig::load(path);

    // Environment beats the file; explicit flags beat both.
    if (const char* ep = std::getenv("EVCOMP_COMPRESSION_ENDPOINT"); ep && *ep) {
        config.compression_backend =
            harness::BackendSpec{harness::BackendSpec::Kind::remote, ep, ""};
    }
    if (const char* ep = std::getenv("EVCOMP_TARGET_ENDPOINT"); ep && *ep) {
        config.target_backend = harness::BackendSpec{harness::BackendSpec::Kind::remote, ep, ""};
    }

    if (overrides.alpha) config.alpha = *overrides.alpha;
    if (overrides.grid) config.grid = *overrides.grid;
    if (overrides.out) config.output_dir = *overrides.out;
    if (overrides.strict) config.strict_ingest = true;
    if (overrides.metric_mode) {
        config.metric_mode = metrics::metric_mode_from_string(*overrides.metric_mode);
    }
    if (overrides.max_new_tokens) config.max_new_tokens = *overrides.max_new_tokens;
    if (overrides.jobs) config.jobs = *overrides.jobs;
    if (overrides.decode_mode) {
        config.decode_mode = decode_mode_from_string(*overrides.decode_mode);
    }
    config.validate();
    return config;
}

struct Session {
    RunConfig config;
    harness::BackendPair backends;
    harness::PromptTemplateSet templates;
    std::vector<EvidenceBundle> bundles;
};

Session open_session(const RunConfig& config, bool need_compression_backend = true) {
    Session session{config, {}, {}, {}};
    if (need_compression_backend) {
        session.backends.compression =
            harness::make_backend(config.compression_backend, "compression");
    }
    session.backends.target = harness::make_backend(config.target_backend, "target");
    if (config.templates_path) {
        session.templates = harness::PromptTemplateSet::load(*config.templates_path);
    }
    session.templates.validate();

    harness::IngestResult ingested = harness::ingest(config.dataset, config.strict_ingest);
    for (const std::string& warning : ingested.warnings) {
        std::cerr << "warning: " << warning << "\n";
    }
    session.bundles = std::move(ingested.bundles);
    if (session.bundles.empty()) {
        throw ConfigError("dataset " + config.dataset.string() + " contains no examples");
    }
    return session;
}

RunOptions make_options(const RunConfig& config) {
    RunOptions options;
    options.decode.alpha = config.alpha;
    options.decode.max_new_tokens = config.max_new_tokens;
    options.decode.stop_on_eos = config.stop_on_eos;
    options.decode.mode = config.decode_mode;
    options.answer_max_tokens = config.answer_max_tokens;
    options.metric_mode = config.metric_mode;
    options.jobs = config.jobs;
    return options;
}

int exit_for_failures(std::span<const AnswerRecord> records, double max_failure_rate) {
    std::size_t failed = 0;
    for (const AnswerRecord& record : records) {
        if (record.error) ++failed;
    }
    if (failed == 0 || records.empty()) return kExitOk;
    double rate = double(failed) / double(records.size());
    return rate > max_failure_rate ? kExitPartialFailure : kExitOk;
}

void print_aggregate_row(const char* label, const harness::Aggregate& agg) {
    if (agg.count == 0) {
        std::printf("%-9s %7s %10s %7s %9s %9s  n=0\n", label, "-", "-", "-", "-", "-");
        return;
    }
    std::printf("%-9s %7.4f %10.4f %7.4f %9.4f %9.4f  n=%zu\n", label, agg.mean_accuracy,
                agg.mean_accuracy_exact, agg.mean_f1, agg.mean_compression_rate,
                agg.mean_evidence_perplexity, agg.count);
}

void print_report_table(const harness::RunReport& report) {
    std::printf("alpha=%s mode=%s examples=%zu failed=%zu\n",
                harness::format_double(report.config.alpha).c_str(),
                report.config.decode_mode.c_str(), report.records.size(), report.failed);
    std::printf("%-9s %7s %10s %7s %9s %9s\n", "", "acc", "acc_exact", "f1", "cr", "ppl");
    print_aggregate_row("overall", report.overall);
    print_aggregate_row("hits=1", report.hits1);
    print_aggregate_row("hits=0", report.hits0);
}

int cmd_compress(const RunConfig& config) {
    Session session = open_session(config);
    RunOptions options = make_options(config);
    std::vector<AnswerRecord> records =
        harness::compress_run(session.bundles, session.backends, session.templates, options);

    std::filesystem::create_directories(config.output_dir);
    harness::write_compress_records(config.output_dir / "records.jsonl", records);
    harness::write_traces(config.output_dir / "traces", records, options.decode.effective_alpha());

    std::size_t scored = 0, failed = 0;
    double tokens = 0, cr = 0;
    for (const AnswerRecord& record : records) {
        if (record.error) {
            ++failed;
            continue;
        }
        ++scored;
        tokens += double(record.trace.tokens.size());
        cr += metrics::compression_rate(record.retrieved_tokens, record.trace.tokens.size());
    }
    std::printf("examples=%zu failed=%zu mean_tokens=%s mean_cr=%s\n", records.size(), failed,
                scored ? harness::format_double(tokens / double(scored)).c_str() : "-",
                scored ? harness::format_double(cr / double(scored)).c_str() : "-");
    std::printf("records written to %s\n", (config.output_dir / "records.jsonl").c_str());
    return exit_for_failures(records, config.max_failure_rate);
}

int cmd_evaluate(const RunConfig& config, bool reaggregate) {
    if (reaggregate) {
        auto records_path = config.output_dir / "records.jsonl";
        auto summary_path = config.output_dir / "summary.json";
        std::vector<AnswerRecord> records = harness::read_records(records_path);
        std::ifstream in(summary_path);
        if (!in) throw ConfigError("cannot open " + summary_path.string());
        json old_summary = json::parse(in);
        if (!old_summary.contains("config")) {
            throw ConfigError(summary_path.string() + " has no config section");
        }

        harness::Aggregate overall = harness::aggregate_scores(records);
        auto [hits0, hits1] = harness::split_by_hits(records);
        std::size_t failed = 0;
        for (const AnswerRecord& r : records) {
            if (r.error) ++failed;
        }
        json summary =
            harness::summary_from_parts(old_summary.at("config"), overall, hits0, hits1, failed);
        harness::write_summary(summary_path, summary);
        std::printf("reaggregated %zu records (failed=%zu) into %s\n", records.size(), failed,
                    summary_path.c_str());
        return exit_for_failures(records, config.max_failure_rate);
    }

    Session session = open_session(config);
    RunOptions options = make_options(config);
    harness::RunReport report =
        harness::evaluate(session.bundles, session.backends, session.templates, options,
                          config.dataset.string());
    harness::persist_report(config.output_dir, report);
    print_report_table(report);
    std::printf("summary written to %s\n", (config.output_dir / "summary.json").c_str());
    return exit_for_failures(report.records, config.max_failure_rate);
}

int cmd_answer(const RunConfig& config, const std::string& records_path) {
    Session session = open_session(config, /*need_compression_backend=*/false);
    RunOptions options = make_options(config);

    std::unordered_map<std::string, std::string> evidence;
    for (auto& input : harness::read_compressed_inputs(records_path)) {
        evidence.emplace(std::move(input.id), std::move(input.compressed_evidence));
    }

    std::vector<AnswerRecord> records(session.bundles.size());
    for (std::size_t i = 0; i < session.bundles.size(); ++i) {
        const EvidenceBundle& bundle = session.bundles[i];
        auto it = evidence.find(bundle.id);
        if (it == evidence.end()) {
            records[i].id = bundle.id;
            records[i].error = "no compressed evidence for id \"" + bundle.id + "\" in " +
                               records_path;
            continue;
        }
        records[i] = harness::answer_example(bundle, it->second, *session.backends.target,
                                             session.templates, options);
    }

    harness::RunReport report;
    report.records = std::move(records);
    report.overall = harness::aggregate_scores(report.records);
    std::tie(report.hits0, report.hits1) = harness::split_by_hits(report.records);
    for (const AnswerRecord& r : report.records) {
        if (r.error) ++report.failed;
    }
    report.config.alpha = config.alpha;
    report.config.decode_mode = "answer-only";
    report.config.max_new_tokens = config.max_new_tokens;
    report.config.answer_max_tokens = config.answer_max_tokens;
    report.config.stop_on_eos = config.stop_on_eos;
    report.config.metric_mode = std::string(metrics::to_string(config.metric_mode));
    report.config.eval_layout = std::string(harness::to_string(session.templates.eval_layout));
    report.config.compression_backend = records_path;
    report.config.target_backend = session.backends.target->descriptor().name;
    report.config.vocabulary_fingerprint =
        session.backends.target->descriptor().vocabulary.fingerprint_hex();
    report.config.templates_fingerprint = session.templates.fingerprint_hex();
    report.config.dataset = config.dataset.string();

    std::filesystem::create_directories(config.output_dir);
    harness::write_records(config.output_dir / "records.jsonl", report.records);
    harness::write_summary(config.output_dir / "summary.json",
                           harness::summary_to_json(report));
    print_report_table(report);
    return exit_for_failures(report.records, config.max_failure_rate);
}

int cmd_sweep(const RunConfig& config) {
    if (config.grid.empty()) {
        throw ConfigError("sweep requires a grid (config \"grid\" or --grid)");
    }
    Session session = open_session(config);
    RunOptions options = make_options(config);
    std::vector<harness::RunReport> reports =
        harness::sweep_alpha(session.bundles, session.backends, session.templates, options,
                             config.grid, config.dataset.string());

    for (const harness::RunReport& report : reports) {
        harness::persist_report(
            config.output_dir / ("alpha_" + harness::format_double(report.config.alpha)), report);
    }
    harness::write_sweep_table(config.output_dir / "sweep.tsv", reports);

    std::printf("%-8s %7s %10s %7s %9s %9s\n", "alpha", "acc", "acc_exact", "f1", "ppl", "cr");
    for (const harness::RunReport& report : reports) {
        std::printf("%-8s %7.4f %10.4f %7.4f %9.4f %9.4f\n",
                    harness::format_double(report.config.alpha).c_str(),
                    report.overall.mean_accuracy, report.overall.mean_accuracy_exact,
                    report.overall.mean_f1, report.overall.mean_evidence_perplexity,
                    report.overall.mean_compression_rate);
    }
    std::printf("sweep table written to %s\n", (config.output_dir / "sweep.tsv").c_str());

    int exit = kExitOk;
    for (const harness::RunReport& report : reports) {
        exit = std::max(exit, exit_for_failures(report.records, config.max_failure_rate));
    }
    return exit;
}

int cmd_score(const std::string& records_path, const std::optional<std::string>& out_path) {
    std::vector<AnswerRecord> records = harness::read_records(records_path);
    harness::Aggregate overall = harness::aggregate_scores(records);
    auto [hits0, hits1] = harness::split_by_hits(records);
    std::size_t failed = 0;
    for (const AnswerRecord& r : records) {
        if (r.error) ++failed;
    }
    json aggregates = harness::aggregate_to_json(overall);
    aggregates["failed"] = failed;
    json summary{{"aggregates", std::move(aggregates)},
                 {"hits0", harness::aggregate_to_json(hits0)},
                 {"hits1", harness::aggregate_to_json(hits1)}};
    std::cout << summary.dump(2) << "\n";
    if (out_path) harness::write_summary(*out_path, summary);
    return kExitOk;
}

int cmd_serve(const std::string& lm_path, const std::string& name, const std::string& host,
              int port) {
    auto backend = std::make_shared<ToyTableLM>(ToyTableLM::load(lm_path, name));
    const auto& desc = backend->descriptor();
    LogitServer server(backend);
    if (port == 0) {
        port = server.bind_any_port(host);
        std::printf("serving %s (|V|=%zu, fingerprint %s) on %s:%d\n", desc.name.c_str(),
                    desc.vocabulary.size(), desc.vocabulary.fingerprint_hex().c_str(),
                    host.c_str(), port);
        std::fflush(stdout);
        return server.listen_after_bind() ? kExitOk : kExitInternal;
    }
    std::printf("serving %s (|V|=%zu, fingerprint %s) on %s:%d\n", desc.name.c_str(),
                desc.vocabulary.size(), desc.vocabulary.fingerprint_hex().c_str(), host.c_str(),
                port);
    std::fflush(stdout);
    return server.listen(host, port) ? kExitOk : kExitInternal;
}

}  // namespace

int run(const std::vector<std::string>& args) {
    CLI::App app{"familiarity-aware evidence compression for RAG", "evcomp"};
    app.require_subcommand(1);

    std::string config_path;
    Overrides overrides;
    std::string grid_csv;
    bool reaggregate = false;
    std::string records_path;
    std::optional<std::string> score_out;

    auto add_common = [&](CLI::App* cmd, bool with_config = true) {
        if (with_config) {
            cmd->add_option("--config", config_path, "run configuration file")->required();
        }
        cmd->add_option("--alpha", "ensemble coefficient in [0, 1]")
            ->each([&](const std::string& v) { overrides.alpha = parse_double_flag("--alpha", v); });
        cmd->add_option("--grid", grid_csv, "comma-separated alpha grid")
            ->each([&](const std::string& v) { overrides.grid = parse_grid_csv(v); });
        cmd->add_option("--out", "output directory")->each([&](const std::string& v) {
            overrides.out = v;
        });
        cmd->add_flag("--strict", overrides.strict, "fail on malformed dataset lines");
        cmd->add_option("--metric-mode", "containment or exact")
            ->each([&](const std::string& v) { overrides.metric_mode = v; });
        cmd->add_option("--max-new-tokens", "decode length cap")->each([&](const std::string& v) {
            overrides.max_new_tokens = parse_int_flag("--max-new-tokens", v);
        });
        cmd->add_option("--jobs", "parallel example workers")->each([&](const std::string& v) {
            overrides.jobs = parse_int_flag("--jobs", v);
        });
        cmd->add_option("--mode", "ensemble | compression-only | generation-only")
            ->each([&](const std::string& v) { overrides.decode_mode = v; });
    };

    CLI::App* compress = app.add_subcommand("compress", "ensemble-decode compressed evidence");
    add_common(compress);

    CLI::App* evaluate = app.add_subcommand("evaluate", "full pipeline: compress, answer, score");
    add_common(evaluate);
    evaluate->add_flag("--reaggregate", reaggregate,
                       "recompute aggregates from persisted records");

    CLI::App* answer = app.add_subcommand("answer", "answer + score pre-compressed evidence");
    add_common(answer);
    answer->add_option("--records", records_path, "records.jsonl produced by compress")
        ->required();

    CLI::App* sweep = app.add_subcommand("sweep", "evaluate across an alpha grid");
    add_common(sweep);

    CLI::App* score = app.add_subcommand("score", "re-aggregate persisted records");
    score->add_option("--records", records_path, "records.jsonl to aggregate")->required();
    score->add_option("--out", "write the summary here as well")
        ->each([&](const std::string& v) { score_out = v; });

    CLI::App* serve = app.add_subcommand("serve", "serve a toy LM over the logit protocol");
    std::string lm_path, serve_name = "toy", host = "127.0.0.1";
    int port = 8080;
    serve->add_option("--lm", lm_path, "toy LM definition file")->required();
    serve->add_option("--name", serve_name, "model name to advertise");
    serve->add_option("--host", host, "bind address");
    serve->add_option("--port", port, "port (0 = OS-assigned)");

    try {
        std::vector<std::string> reversed(args.rbegin(), args.rend());
        app.parse(reversed);
    } catch (const CLI::CallForHelp&) {
        std::cout << app.help();
        return kExitOk;
    } catch (const CLI::ParseError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const ConfigError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitConfig;
    }

    try {
        if (app.got_subcommand(serve)) return cmd_serve(lm_path, serve_name, host, port);
        if (app.got_subcommand(score)) return cmd_score(records_path, score_out);

        RunConfig config = load_config(config_path, overrides);
        if (app.got_subcommand(compress)) return cmd_compress(config);
        if (app.got_subcommand(evaluate)) return cmd_evaluate(config, reaggregate);
        if (app.got_subcommand(answer)) return cmd_answer(config, records_path);
        if (app.got_subcommand(sweep)) return cmd_sweep(config);
        return kExitConfig;
    } catch (const IncompatibleVocabError& e) {
        char fa[17], fb[17];
        std::snprintf(fa, sizeof(fa), "%016llx", static_cast<unsigned long long>(e.fingerprint_a()));
        std::snprintf(fb, sizeof(fb), "%016llx", static_cast<unsigned long long>(e.fingerprint_b()));
        std::cerr << "error: " << e.what() << "\n"
                  << "fingerprints: " << fa << " vs " << fb << "\n";
        return kExitIncompatible;
    } catch (const ConfigError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const ParseError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitInternal;
    }
}

}  // namespace evcomp::cli
