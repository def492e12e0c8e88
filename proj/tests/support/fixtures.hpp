#pragma once

// A deliberately disagreeing compression/target pair.
//
// From the decode cue, the compression model continues with the evidence
// tokens "ev1 ev2" while the target model strongly prefers its own
// continuation "pk1 pk2" (and assigns the evidence tokens low probability).
// The step-1 crossover sits near alpha = 0.47, so low alphas emit the
// evidence summary and alphas >= 0.5 emit the target-familiar one; the
// emitted evidence therefore scores a much lower perplexity under the target
// model near alpha = 1 than at alpha = 0.
//
// At answer time the target model answers "gold" after the pk path and
// "wrong" after the ev path, so accuracy moves with alpha too. Bundles:
//   e1: gold answer "gold",  evidence misses it        (hits = 0)
//   e2: gold answer "gold",  evidence contains it      (hits = 1)
//   e3: gold answer "wrong", evidence contains it      (hits = 1, anti-correlated)

#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "evcomp/harness.hpp"
#include "evcomp/toy_lm.hpp"

namespace evcomp::test {

inline constexpr const char* kDisagreementVocab =
    "inst_c inst_g inst_e Question: Documents: Summarized Context: Answer: "
    "q1 d1 d2 ev1 ev2 pk1 pk2 gold wrong filler </s>";

inline std::string disagreement_compression_lm() {
    std::string out;
    out += "vocab: ";
    out += kDisagreementVocab;
    out +=
        "\n"
        "eos: </s>\n"
        "fallback: uniform\n"
        "Summarized Context: -> ev1:0.8, pk1:0.05, ev2:0.05, filler:0.1\n"
        "ev1 -> ev2:0.85, filler:0.1, </s>:0.05\n"
        "ev2 -> </s>:0.9, filler:0.1\n"
        "pk1 -> pk2:0.5, filler:0.3, ev1:0.2\n"
        "pk2 -> </s>:0.6, filler:0.4\n";
    return out;
}

inline std::string disagreement_target_lm() {
    std::string out;
    out += "vocab: ";
    out += kDisagreementVocab;
    out +=
        "\n"
        "eos: </s>\n"
        "fallback: uniform\n"
        "q1 Context: -> pk1:0.9, ev1:0.04, filler:0.06\n"
        "pk1 -> pk2:0.92, filler:0.08\n"
        "pk2 -> </s>:0.9, filler:0.1\n"
        "ev1 -> ev2:0.3, filler:0.6, </s>:0.1\n"
        "ev2 -> </s>:0.55, filler:0.45\n"
        "ev2 Answer: -> wrong:0.95, filler:0.05\n"
        "pk2 Answer: -> gold:0.95, filler:0.05\n"
        "Context: Answer: -> wrong:0.9, filler:0.1\n"
        "Answer: -> wrong:0.9, filler:0.1\n"
        "gold -> </s>:1.0\n"
        "wrong -> </s>:1.0\n";
    return out;
}

inline ToyTableLM parse_lm(const std::string& text, const std::string& name) {
    std::istringstream in(text);
    return ToyTableLM::parse(in, name + ".lm", name);
}

inline harness::PromptTemplateSet disagreement_templates() {
    harness::PromptTemplateSet templates;
    templates.compression_instruction = "inst_c";
    templates.generation_instruction = "inst_g";
    templates.eval_system_prompt = "inst_e";
    templates.demonstrations.clear();
    templates.eval_layout = harness::EvalLayout::question_first;
    return templates;
}

inline std::vector<EvidenceBundle> disagreement_bundles() {
    return {
        EvidenceBundle{"e1", "q1", {"d1", "d2"}, {"gold"}},
        EvidenceBundle{"e2", "q1", {"d1 gold d2", "d2"}, {"gold"}},
        EvidenceBundle{"e3", "q1", {"d1 wrong"}, {"wrong"}},
    };
}

inline std::string disagreement_dataset_jsonl() {
    return R"({"id":"e1","question":"q1","answers":["gold"],"documents":["d1","d2"]})"
           "\n"
           R"({"id":"e2","question":"q1","answers":["gold"],"documents":["d1 gold d2","d2"]})"
           "\n"
           R"({"id":"e3","question":"q1","answers":["wrong"],"documents":["d1 wrong"]})"
           "\n";
}

inline std::string disagreement_templates_json() {
    return R"({"compression_instruction":"inst_c","generation_instruction":"inst_g",)"
           R"("eval_system_prompt":"inst_e","eval_layout":"question-first"})";
}

// Scratch directory that cleans up after itself.
class TempDir {
public:
    explicit TempDir(const std::string& tag) {
        std::mt19937_64 rng(std::random_device{}());
        path_ = std::filesystem::temp_directory_path() /
                ("evcomp_" + tag + "_" + std::to_string(rng()));
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    const std::filesystem::path& path() const { return path_; }
    std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

private:
    std::filesystem::path path_;
};

inline void write_file(const std::filesystem::path& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    out << content;
}

inline std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream out;
    out << in.rdbuf();
    return out.str();
}

// Writes comp.lm, tgt.lm, data.jsonl, templates.json into dir and returns a
// config JSON string pointing at them.
inline std::string write_disagreement_tree(const std::filesystem::path& dir,
                                           const std::string& out_dir, double alpha = 0.5) {
    write_file(dir / "comp.lm", disagreement_compression_lm());
    write_file(dir / "tgt.lm", disagreement_target_lm());
    write_file(dir / "data.jsonl", disagreement_dataset_jsonl());
    write_file(dir / "templates.json", disagreement_templates_json());
    std::ostringstream config;
    config << "{\n"
           << "  \"compression_backend\": {\"kind\": \"toy\", \"path\": \""
           << (dir / "comp.lm").string() << "\", \"name\": \"comp-toy\"},\n"
           << "  \"target_backend\": {\"kind\": \"toy\", \"path\": \"" << (dir / "tgt.lm").string()
           << "\", \"name\": \"tgt-toy\"},\n"
           << "  \"dataset\": \"" << (dir / "data.jsonl").string() << "\",\n"
           << "  \"templates\": \"" << (dir / "templates.json").string() << "\",\n"
           << "  \"output_dir\": \"" << out_dir << "\",\n"
           << "  \"alpha\": " << alpha << ",\n"
           << "  \"max_new_tokens\": 20\n"
           << "}\n";
    return config.str();
}

}  // namespace evcomp::test
