#include "evcomp/remote.hpp"

#include <charconv>
#include <cmath>
#include <sstream>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "evcomp/errors.hpp"
#include "evcomp/wire.hpp"

namespace evcomp {

using nlohmann::json;

namespace {

struct Endpoint {
    std::string host;
    int port;
};

Endpoint parse_endpoint(const std::string& endpoint) {
    const std::string prefix = "http://";
    if (!endpoint.starts_with(prefix)) {
        throw ConfigError("endpoint must start with http://, got \"" + endpoint + "\"");
    }
    std::string rest = endpoint.substr(prefix.size());
    while (!rest.empty() && rest.back() == '/') rest.pop_back();
    auto colon = rest.rfind(':');
    if (colon == std::string::npos || colon == 0 || colon + 1 == rest.size()) {
        throw ConfigError("endpoint must be http://host:port, got \"" + endpoint + "\"");
    }
    int port = 0;
    const char* begin = rest.data() + colon + 1;
    const char* end = rest.data() + rest.size();
    auto [ptr, ec] = std::from_chars(begin, end, port);
    if (ec != std::errc{} || ptr != end || port < 1 || port > 65535) {
        throw ConfigError("bad endpoint port in \"" + endpoint + "\"");
    }
    return Endpoint{rest.substr(0, colon), port};
}

httplib::Client make_client(const std::string& host, int port, double timeout_sec) {
    httplib::Client client(host, port);
    auto seconds = static_cast<time_t>(timeout_sec);
    auto micros = static_cast<time_t>((timeout_sec - double(seconds)) * 1e6);
    client.set_connection_timeout(seconds, micros);
    client.set_read_timeout(seconds, micros);
    client.set_write_timeout(seconds, micros);
    return client;
}

[[noreturn]] void throw_protocol_error(const std::string& code, const std::string& message) {
    if (code == wire::kErrContextOverflow) throw ContextOverflowError(message);
    if (code == wire::kErrUnknownToken) throw UnknownTokenError(message);
    throw BackendError("server error " + code + ": " + message);
}

}  // namespace

RemoteBackend::RemoteBackend(std::string host, int port, Options options,
                             BackendDescriptor descriptor)
    : host_(std::move(host)),
      port_(port),
      options_(std::move(options)),
      descriptor_(std::move(descriptor)),
      fingerprint_hex_(descriptor_.vocabulary.fingerprint_hex()) {}

std::shared_ptr<RemoteBackend> RemoteBackend::connect(const std::string& endpoint,
                                                      Options options) {
    if (options.mode != wire::kModeFull && options.mode != wire::kModeTopK) {
        throw ConfigError("remote backend mode must be \"full\" or \"topk\"");
    }
    if (options.mode == wire::kModeTopK && options.top_k < 1) {
        throw ConfigError("topk mode requires top_k >= 1");
    }
    Endpoint ep = parse_endpoint(endpoint);
    auto client = make_client(ep.host, ep.port, options.timeout_sec);

    auto info_res = client.Get(wire::kModelPath);
    if (!info_res) {
        throw TransportError("cannot reach " + endpoint + ": " + httplib::to_string(info_res.error()),
                             true);
    }
    if (info_res->status != 200) {
        throw TransportError("model info request failed with status " +
                                 std::to_string(info_res->status),
                             info_res->status >= 500);
    }
    wire::ModelInfo info;
    try {
        info = wire::model_info_from_json(json::parse(info_res->body));
    } catch (const json::exception& e) {
        throw TransportError(std::string("malformed model info: ") + e.what(), false);
    }

    auto vocab_res = client.Get(wire::kVocabPath);
    if (!vocab_res || vocab_res->status != 200) {
        throw TransportError("vocabulary request failed", vocab_res && vocab_res->status >= 500);
    }
    std::istringstream vocab_stream(vocab_res->body);
    Vocabulary vocab = Vocabulary::parse(vocab_stream, endpoint + wire::kVocabPath);
    if (vocab.fingerprint_hex() != info.fingerprint) {
        throw BackendError("server vocabulary fingerprint " + vocab.fingerprint_hex() +
                           " does not match advertised " + info.fingerprint);
    }
    if (vocab.size() != info.vocab_size || vocab.eos_id() != info.eos_id) {
        throw BackendError("server vocabulary disagrees with its model info");
    }

    BackendDescriptor desc{info.name, std::move(vocab), info.max_context};
    desc.validate();
    return std::shared_ptr<RemoteBackend>(
        new RemoteBackend(ep.host, ep.port, std::move(options), std::move(desc)));
}

TokenLogProbs RemoteBackend::next_token_distribution(std::span<const TokenId> context) const {
    wire::LogProbsRequest request;
    request.fingerprint = fingerprint_hex_;
    request.context.assign(context.begin(), context.end());
    request.mode = options_.mode;
    request.k = options_.top_k;

    // One client per call keeps concurrent queries independent.
    auto client = make_client(host_, port_, options_.timeout_sec);
    auto res = client.Post(wire::kLogProbsPath, wire::to_json(request).dump(), "application/json");
    if (!res) {
        throw TransportError("logprobs request failed: " + httplib::to_string(res.error()), true);
    }

    wire::LogProbsResponse response;
    try {
        response = wire::response_from_json(json::parse(res->body));
    } catch (const json::exception& e) {
        if (res->status >= 500) {
            throw TransportError("server error status " + std::to_string(res->status), true);
        }
        throw TransportError(std::string("malformed logprobs response: ") + e.what(), false);
    }
    if (response.error_code) {
        if (*response.error_code == wire::kErrFingerprintMismatch) {
            throw IncompatibleVocabError(response.error_message,
                                         descriptor_.vocabulary.fingerprint(), 0);
        }
        throw_protocol_error(*response.error_code, response.error_message);
    }
    if (res->status != 200) {
        throw TransportError("logprobs request failed with status " + std::to_string(res->status),
                             res->status >= 500);
    }

    const std::size_t vocab_size = descriptor_.vocabulary.size();
    if (response.entries) {
        return wire::expand_topk(*response.entries, response.tail_mass, vocab_size);
    }
    if (!response.values) {
        throw TransportError("logprobs response carries neither values nor entries", false);
    }
    if (response.values->size() != vocab_size) {
        throw TransportError("logprobs response length " + std::to_string(response.values->size()) +
                                 " != |V| = " + std::to_string(vocab_size),
                             false);
    }
    return TokenLogProbs::from_normalized(std::move(*response.values));
}

}  // namespace evcomp
