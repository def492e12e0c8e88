#include "evcomp/types.hpp"

#include "evcomp/errors.hpp"

namespace evcomp {

void DecodeConfig::validate() const {
    if (!(alpha >= 0.0 && alpha <= 1.0)) {
        throw ConfigError("alpha must be in [0, 1], got " + std::to_string(alpha));
    }
    if (max_new_tokens < 1) {
        throw ConfigError("max_new_tokens must be >= 1, got " + std::to_string(max_new_tokens));
    }
}

double DecodeConfig::effective_alpha() const {
    switch (mode) {
        case DecodeMode::compression_only: return 0.0;
        case DecodeMode::generation_only: return 1.0;
        case DecodeMode::ensemble: break;
    }
    return alpha;
}

std::string_view to_string(DecodeMode mode) {
    switch (mode) {
        case DecodeMode::ensemble: return "ensemble";
        case DecodeMode::compression_only: return "compression-only";
        case DecodeMode::generation_only: return "generation-only";
    }
    return "ensemble";
}

DecodeMode decode_mode_from_string(std::string_view s) {
    if (s == "ensemble") return DecodeMode::ensemble;
    if (s == "compression-only") return DecodeMode::compression_only;
    if (s == "generation-only") return DecodeMode::generation_only;
    throw ConfigError("unknown decode mode \"" + std::string(s) + "\"");
}

void EvidenceBundle::validate() const {
    if (id.empty()) throw Error("bundle: empty id");
    if (documents.empty()) throw Error("bundle " + id + ": documents list is empty");
    if (gold_answers.empty()) throw Error("bundle " + id + ": gold_answers is empty");
}

std::string_view to_string(SourceTag tag) {
    switch (tag) {
        case SourceTag::both_argmax: return "both-argmax";
        case SourceTag::target_argmax: return "target-argmax";
        case SourceTag::compression_argmax: return "compression-argmax";
        case SourceTag::neither: return "neither";
    }
    return "neither";
}

SourceTag source_tag_from_string(std::string_view s) {
    if (s == "both-argmax") return SourceTag::both_argmax;
    if (s == "target-argmax") return SourceTag::target_argmax;
    if (s == "compression-argmax") return SourceTag::compression_argmax;
    if (s == "neither") return SourceTag::neither;
    throw Error("unknown source tag \"" + std::string(s) + "\"");
}

std::string_view to_string(Termination t) {
    switch (t) {
        case Termination::eos: return "eos";
        case Termination::length_limit: return "length-limit";
        case Termination::aborted: return "aborted";
    }
    return "aborted";
}

Termination termination_from_string(std::string_view s) {
    if (s == "eos") return Termination::eos;
    if (s == "length-limit") return Termination::length_limit;
    if (s == "aborted") return Termination::aborted;
    throw Error("unknown termination \"" + std::string(s) + "\"");
}

}  // namespace evcomp
