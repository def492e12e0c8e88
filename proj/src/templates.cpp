#include "evcomp/templates.hpp"

#include <fstream>

#include <nlohmann/json.hpp>

#include "evcomp/errors.hpp"
#include "evcomp/vocab.hpp"

namespace evcomp::harness {

namespace {

using nlohmann::json;

constexpr char kSep = '\x1f';

void append_demonstrations(std::string& out, const PromptTemplateSet& templates) {
    for (const Demonstration& demo : templates.demonstrations) {
        out += "Question: ";
        out += demo.question;
        out += "\nAnswer: ";
        out += demo.answer;
        out += "\n\n";
    }
}

}  // namespace

std::string_view to_string(EvalLayout layout) {
    return layout == EvalLayout::question_first ? "question-first" : "context-first";
}

EvalLayout eval_layout_from_string(std::string_view s) {
    if (s == "question-first") return EvalLayout::question_first;
    if (s == "context-first") return EvalLayout::context_first;
    throw ConfigError("unknown eval layout \"" + std::string(s) +
                      "\" (expected question-first or context-first)");
}

void PromptTemplateSet::validate() const {
    if (compression_instruction.empty()) throw ConfigError("templates: empty compression_instruction");
    if (generation_instruction.empty()) throw ConfigError("templates: empty generation_instruction");
    if (compression_instruction == generation_instruction) {
        throw ConfigError("templates: compression and generation instructions must differ");
    }
}

std::uint64_t PromptTemplateSet::fingerprint() const {
    std::string bytes = compression_instruction;
    bytes += kSep;
    bytes += generation_instruction;
    bytes += kSep;
    bytes += eval_system_prompt;
    bytes += kSep;
    bytes += to_string(eval_layout);
    for (const Demonstration& demo : demonstrations) {
        bytes += kSep;
        bytes += demo.question;
        bytes += kSep;
        bytes += demo.answer;
    }
    return fnv1a64(bytes);
}

std::string PromptTemplateSet::fingerprint_hex() const {
    static const char* digits = "0123456789abcdef";
    std::string out(16, '0');
    std::uint64_t v = fingerprint();
    for (int i = 15; i >= 0; --i) {
        out[static_cast<std::size_t>(i)] = digits[v & 0xF];
        v >>= 4;
    }
    return out;
}

PromptTemplateSet PromptTemplateSet::load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open template file " + path.string());
    json doc;
    try {
        doc = json::parse(in);
    } catch (const json::exception& e) {
        throw ConfigError("template file " + path.string() + ": " + e.what());
    }
    PromptTemplateSet out;
    try {
        if (doc.contains("compression_instruction")) {
            out.compression_instruction = doc.at("compression_instruction").get<std::string>();
        }
        if (doc.contains("generation_instruction")) {
            out.generation_instruction = doc.at("generation_instruction").get<std::string>();
        }
        if (doc.contains("eval_system_prompt")) {
            out.eval_system_prompt = doc.at("eval_system_prompt").get<std::string>();
        }
        if (doc.contains("eval_layout")) {
            out.eval_layout = eval_layout_from_string(doc.at("eval_layout").get<std::string>());
        }
        if (doc.contains("demonstrations")) {
            for (const auto& item : doc.at("demonstrations")) {
                out.demonstrations.push_back(Demonstration{
                    item.at("question").get<std::string>(), item.at("answer").get<std::string>()});
            }
        }
    } catch (const json::exception& e) {
        throw ConfigError("template file " + path.string() + ": " + e.what());
    }
    out.validate();
    return out;
}

std::string render_compression_context(const PromptTemplateSet& templates,
                                       const EvidenceBundle& bundle) {
    std::string out = templates.compression_instruction;
    out += "\n\nQuestion: ";
    out += bundle.query;
    out += "\n\nDocuments: ";
    for (std::size_t i = 0; i < bundle.documents.size(); ++i) {
        if (i > 0) out += "\n";
        out += bundle.documents[i];
    }
    out += "\n\nSummarized Context:";
    return out;
}

std::string render_generation_context(const PromptTemplateSet& templates,
                                      const EvidenceBundle& bundle) {
    std::string out = templates.generation_instruction;
    out += "\n\nQuestion: ";
    out += bundle.query;
    out += "\n\nContext:";
    return out;
}

std::string render_eval_prefix(const PromptTemplateSet& templates, std::string_view question) {
    std::string out = templates.eval_system_prompt;
    out += "\n\n";
    append_demonstrations(out, templates);
    if (templates.eval_layout == EvalLayout::question_first) {
        out += "Question: ";
        out += question;
        out += "\nContext:";
    } else {
        out += "Context:";
    }
    return out;
}

std::string render_eval_prompt(const PromptTemplateSet& templates, std::string_view question,
                               std::string_view compressed_evidence) {
    std::string out = render_eval_prefix(templates, question);
    if (!compressed_evidence.empty()) {
        out += " ";
        out += compressed_evidence;
    }
    if (templates.eval_layout == EvalLayout::question_first) {
        out += "\nAnswer:";
    } else {
        out += "\nQuestion: ";
        out += question;
        out += "\nAnswer:";
    }
    return out;
}

}  // namespace evcomp::harness
