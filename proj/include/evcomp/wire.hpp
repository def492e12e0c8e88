#pragma once

#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "evcomp/logprobs.hpp"

namespace evcomp::wire {

// HTTP surface of a logit server:
//   GET  /v1/model     -> ModelInfo
//   GET  /v1/vocab     -> serialized vocabulary (text/plain)
//   POST /v1/logprobs  -> LogProbsRequest / LogProbsResponse
// All reals are IEEE-754 doubles in shortest round-trip decimal form. JSON
// has no -inf literal, so a zero-probability log-prob travels as null.
inline constexpr const char* kModelPath = "/v1/model";
inline constexpr const char* kVocabPath = "/v1/vocab";
inline constexpr const char* kLogProbsPath = "/v1/logprobs";

inline constexpr const char* kModeFull = "full";
inline constexpr const char* kModeTopK = "topk";

// Error codes carried in error responses.
inline constexpr const char* kErrFingerprintMismatch = "fingerprint_mismatch";
inline constexpr const char* kErrContextOverflow = "context_overflow";
inline constexpr const char* kErrUnknownToken = "unknown_token";
inline constexpr const char* kErrBadRequest = "bad_request";
inline constexpr const char* kErrInternal = "internal";

struct ModelInfo {
    std::string name;
    std::size_t vocab_size = 0;
    TokenId eos_id = 0;
    std::size_t max_context = 0;
    std::string fingerprint;  // 16 lowercase hex digits
};

struct LogProbsRequest {
    std::string fingerprint;  // the client's vocabulary fingerprint; servers reject mismatches
    std::vector<TokenId> context;
    std::string mode = kModeFull;
    int k = 0;  // topk mode only
};

struct TopEntry {
    TokenId token_id;
    double logprob;
};

// Exactly one of `values` (full mode), `entries` (topk mode, with
// tail_mass = total probability of the unlisted tokens), or `error` is set.
struct LogProbsResponse {
    std::optional<std::vector<double>> values;
    std::optional<std::vector<TopEntry>> entries;
    double tail_mass = 0.0;
    std::optional<std::string> error_code;
    std::string error_message;
};

nlohmann::json to_json(const ModelInfo& info);
ModelInfo model_info_from_json(const nlohmann::json& doc);

nlohmann::json to_json(const LogProbsRequest& request);
LogProbsRequest request_from_json(const nlohmann::json& doc);

nlohmann::json to_json(const LogProbsResponse& response);
LogProbsResponse response_from_json(const nlohmann::json& doc);

// Reconstructs a full distribution from a topk response over a vocabulary of
// `vocab_size`: listed tokens keep their log-probs, missing tokens get
// log(tail_mass / (vocab_size - k)).
TokenLogProbs expand_topk(const std::vector<TopEntry>& entries, double tail_mass,
                          std::size_t vocab_size);

}  // namespace evcomp::wire
