#include "evcomp/wire.hpp"

#include <cmath>

#include <nlohmann/json.hpp>

#include "evcomp/errors.hpp"

namespace evcomp::wire {

using nlohmann::json;

json to_json(const ModelInfo& info) {
    return json{{"name", info.name},
                {"vocab_size", info.vocab_size},
                {"eos_id", info.eos_id},
                {"max_context", info.max_context},
                {"fingerprint", info.fingerprint}};
}

ModelInfo model_info_from_json(const json& doc) {
    try {
        ModelInfo info;
        info.name = doc.at("name").get<std::string>();
        info.vocab_size = doc.at("vocab_size").get<std::size_t>();
        info.eos_id = doc.at("eos_id").get<TokenId>();
        info.max_context = doc.at("max_context").get<std::size_t>();
        info.fingerprint = doc.at("fingerprint").get<std::string>();
        return info;
    } catch (const json::exception& e) {
        throw TransportError(std::string("malformed model info: ") + e.what(), false);
    }
}

json to_json(const LogProbsRequest& request) {
    json doc{{"fingerprint", request.fingerprint},
             {"context", request.context},
             {"mode", request.mode}};
    if (request.mode == kModeTopK) doc["k"] = request.k;
    return doc;
}

LogProbsRequest request_from_json(const json& doc) {
    LogProbsRequest request;
    request.fingerprint = doc.at("fingerprint").get<std::string>();
    request.context = doc.at("context").get<std::vector<TokenId>>();
    request.mode = doc.value("mode", std::string(kModeFull));
    request.k = doc.value("k", 0);
    return request;
}

json to_json(const LogProbsResponse& response) {
    if (response.error_code) {
        return json{{"error", *response.error_code}, {"message", response.error_message}};
    }
    if (response.entries) {
        json entries = json::array();
        for (const TopEntry& e : *response.entries) {
            entries.push_back(json::array({e.token_id, e.logprob}));
        }
        return json{{"entries", std::move(entries)}, {"tail_mass", response.tail_mass}};
    }
    return json{{"values", response.values ? *response.values : std::vector<double>{}}};
}

namespace {

// null encodes -inf (JSON numbers cannot carry infinities).
double logprob_from_json(const json& value) {
    if (value.is_null()) return kNegInf;
    return value.get<double>();
}

}  // namespace

LogProbsResponse response_from_json(const json& doc) {
    LogProbsResponse response;
    try {
        if (doc.contains("error")) {
            response.error_code = doc.at("error").get<std::string>();
            response.error_message = doc.value("message", std::string());
            return response;
        }
        if (doc.contains("entries")) {
            std::vector<TopEntry> entries;
            for (const auto& item : doc.at("entries")) {
                entries.push_back(TopEntry{item.at(0).get<TokenId>(),
                                           logprob_from_json(item.at(1))});
            }
            response.entries = std::move(entries);
            response.tail_mass = doc.at("tail_mass").get<double>();
            return response;
        }
        std::vector<double> values;
        values.reserve(doc.at("values").size());
        for (const auto& item : doc.at("values")) {
            values.push_back(logprob_from_json(item));
        }
        response.values = std::move(values);
        return response;
    } catch (const json::exception& e) {
        throw TransportError(std::string("malformed logprobs response: ") + e.what(), false);
    }
}

TokenLogProbs expand_topk(const std::vector<TopEntry>& entries, double tail_mass,
                          std::size_t vocab_size) {
    if (entries.size() > vocab_size) {
        throw TransportError("topk response has more entries than the vocabulary", false);
    }
    if (tail_mass < 0.0 || tail_mass > 1.0 || std::isnan(tail_mass)) {
        throw TransportError("topk response has invalid tail_mass", false);
    }
    std::size_t missing = vocab_size - entries.size();
    double fill = kNegInf;
    if (missing > 0 && tail_mass > 0.0) {
        fill = std::log(tail_mass / double(missing));
    }
    std::vector<double> values(vocab_size, fill);
    std::vector<bool> seen(vocab_size, false);
    for (const TopEntry& e : entries) {
        if (e.token_id < 0 || static_cast<std::size_t>(e.token_id) >= vocab_size) {
            throw TransportError("topk entry token id out of range", false);
        }
        if (seen[static_cast<std::size_t>(e.token_id)]) {
            throw TransportError("duplicate token id in topk response", false);
        }
        seen[static_cast<std::size_t>(e.token_id)] = true;
        values[static_cast<std::size_t>(e.token_id)] = e.logprob;
    }
    return TokenLogProbs::from_normalized(std::move(values));
}

}  // namespace evcomp::wire
