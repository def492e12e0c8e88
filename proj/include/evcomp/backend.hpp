#pragma once

#include <cstdint>
#include <span>
#include <string>

#include "evcomp/logprobs.hpp"
#include "evcomp/vocab.hpp"

namespace evcomp {

struct BackendDescriptor {
    std::string name;
    Vocabulary vocabulary;
    std::size_t max_context = 4096;

    void validate() const;
};

// A next-token-distribution provider. Implementations must be safe for
// concurrent queries, and deterministic backends must return identical
// distributions for identical contexts regardless of interleaving.
class LmBackend {
public:
    virtual ~LmBackend() = default;

    virtual const BackendDescriptor& descriptor() const = 0;

    // Normalized distribution over the vocabulary for the next token after
    // `context`. Throws ContextOverflowError when the context exceeds
    // max_context, UnknownTokenError on out-of-range ids, TransportError on
    // remote failures.
    virtual TokenLogProbs next_token_distribution(std::span<const TokenId> context) const = 0;
};

// Throws ContextOverflowError / UnknownTokenError when `context` violates the
// descriptor's limits. Shared by backend implementations.
void validate_context(const BackendDescriptor& desc, std::span<const TokenId> context);

struct CompatibilityVerdict {
    bool compatible;
    std::uint64_t fingerprint_a;
    std::uint64_t fingerprint_b;
};

// Two backends can be ensembled iff their vocabulary fingerprints are equal.
CompatibilityVerdict check_compatibility(const BackendDescriptor& a, const BackendDescriptor& b);

}  // namespace evcomp
