#pragma once

#include <memory>
#include <string>

#include "evcomp/backend.hpp"

namespace evcomp {

// Client for the logit wire protocol. On connect it fetches the server's
// model info and vocabulary, so the descriptor reflects the remote model.
// Every logprobs request carries the vocabulary fingerprint; the server
// rejects mismatches, which surfaces as IncompatibleVocabError.
//
// Transport failures raise TransportError and never fabricate a
// distribution. Full mode returns the server's vector bit-exact; topk mode
// reconstructs the tail as log(tail_mass / (|V| - k)).
struct RemoteOptions {
    std::string mode = "full";  // "full" or "topk"
    int top_k = 0;              // required for topk mode
    double timeout_sec = 10.0;
};

class RemoteBackend : public LmBackend {
public:
    using Options = RemoteOptions;

    // endpoint: "http://host:port"
    static std::shared_ptr<RemoteBackend> connect(const std::string& endpoint,
                                                  Options options = {});

    const BackendDescriptor& descriptor() const override { return descriptor_; }
    TokenLogProbs next_token_distribution(std::span<const TokenId> context) const override;

private:
    RemoteBackend(std::string host, int port, Options options, BackendDescriptor descriptor);

    std::string host_;
    int port_;
    Options options_;
    BackendDescriptor descriptor_;
    std::string fingerprint_hex_;
};

}  // namespace evcomp
