#include "evcomp/server.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "evcomp/errors.hpp"
#include "evcomp/wire.hpp"

namespace evcomp {

using nlohmann::json;

struct LogitServer::Impl {
    std::shared_ptr<const LmBackend> backend;
    httplib::Server server;
};

namespace {

void send_error(httplib::Response& res, int status, const std::string& code,
                const std::string& message) {
    wire::LogProbsResponse body;
    body.error_code = code;
    body.error_message = message;
    res.status = status;
    res.set_content(wire::to_json(body).dump(), "application/json");
}

wire::LogProbsResponse make_topk_response(const TokenLogProbs& dist, int k) {
    std::vector<TokenId> order(dist.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = static_cast<TokenId>(i);
    std::sort(order.begin(), order.end(), [&](TokenId a, TokenId b) {
        double va = dist[static_cast<std::size_t>(a)];
        double vb = dist[static_cast<std::size_t>(b)];
        if (va != vb) return va > vb;
        return a < b;
    });
    wire::LogProbsResponse response;
    std::vector<wire::TopEntry> entries;
    double covered = 0.0;
    for (int i = 0; i < k; ++i) {
        TokenId id = order[static_cast<std::size_t>(i)];
        double lp = dist[static_cast<std::size_t>(id)];
        entries.push_back(wire::TopEntry{id, lp});
        covered += std::exp(lp);
    }
    response.entries = std::move(entries);
    response.tail_mass = std::max(0.0, 1.0 - covered);
    return response;
}

void handle_logprobs(const LmBackend& backend, const httplib::Request& req,
                     httplib::Response& res) {
    wire::LogProbsRequest request;
    try {
        request = wire::request_from_json(json::parse(req.body));
    } catch (const json::exception& e) {
        send_error(res, 400, wire::kErrBadRequest, e.what());
        return;
    }

    const BackendDescriptor& desc = backend.descriptor();
    if (request.fingerprint != desc.vocabulary.fingerprint_hex()) {
        send_error(res, 409, wire::kErrFingerprintMismatch,
                   "request fingerprint " + request.fingerprint + " != server fingerprint " +
                       desc.vocabulary.fingerprint_hex());
        return;
    }
    bool topk = request.mode == wire::kModeTopK;
    if (!topk && request.mode != wire::kModeFull) {
        send_error(res, 400, wire::kErrBadRequest, "unknown mode \"" + request.mode + "\"");
        return;
    }
    if (topk && (request.k < 1 || static_cast<std::size_t>(request.k) > desc.vocabulary.size())) {
        send_error(res, 400, wire::kErrBadRequest,
                   "k must be in [1, |V|], got " + std::to_string(request.k));
        return;
    }

    try {
        TokenLogProbs dist = backend.next_token_distribution(request.context);
        wire::LogProbsResponse response;
        if (topk) {
            response = make_topk_response(dist, request.k);
        } else {
            response.values = dist.values();
        }
        res.set_content(wire::to_json(response).dump(), "application/json");
    } catch (const ContextOverflowError& e) {
        send_error(res, 400, wire::kErrContextOverflow, e.what());
    } catch (const UnknownTokenError& e) {
        send_error(res, 400, wire::kErrUnknownToken, e.what());
    } catch (const std::exception& e) {
        send_error(res, 500, wire::kErrInternal, e.what());
    }
}

}  // namespace

LogitServer::LogitServer(std::shared_ptr<const LmBackend> backend)
    : impl_(std::make_unique<Impl>()) {
    if (!backend) throw Error("logit server: null backend");
    impl_->backend = std::move(backend);

    impl_->server.Get(wire::kModelPath, [this](const httplib::Request&, httplib::Response& res) {
        const BackendDescriptor& desc = impl_->backend->descriptor();
        wire::ModelInfo info{desc.name, desc.vocabulary.size(), desc.vocabulary.eos_id(),
                             desc.max_context, desc.vocabulary.fingerprint_hex()};
        res.set_content(wire::to_json(info).dump(), "application/json");
    });
    impl_->server.Get(wire::kVocabPath, [this](const httplib::Request&, httplib::Response& res) {
        std::ostringstream out;
        impl_->backend->descriptor().vocabulary.serialize(out);
        res.set_content(out.str(), "text/plain");
    });
    impl_->server.Post(wire::kLogProbsPath,
                       [this](const httplib::Request& req, httplib::Response& res) {
                           handle_logprobs(*impl_->backend, req, res);
                       });
}

LogitServer::~LogitServer() {
    if (impl_ && impl_->server.is_running()) impl_->server.stop();
}

int LogitServer::bind_any_port(const std::string& host) {
    int port = impl_->server.bind_to_any_port(host);
    if (port <= 0) throw Error("logit server: failed to bind on " + host);
    return port;
}

bool LogitServer::listen_after_bind() { return impl_->server.listen_after_bind(); }

bool LogitServer::listen(const std::string& host, int port) {
    return impl_->server.listen(host, port);
}

void LogitServer::stop() { impl_->server.stop(); }

bool LogitServer::is_running() const { return impl_->server.is_running(); }

}  // namespace evcomp
