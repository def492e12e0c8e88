#include "evcomp/backend.hpp"

#include "evcomp/errors.hpp"

namespace evcomp {

void BackendDescriptor::validate() const {
    if (name.empty()) throw Error("backend descriptor: empty name");
    if (max_context < 1) throw Error("backend descriptor: max_context must be >= 1");
}

void validate_context(const BackendDescriptor& desc, std::span<const TokenId> context) {
    if (context.size() > desc.max_context) {
        throw ContextOverflowError(desc.name + ": context of " + std::to_string(context.size()) +
                                   " tokens exceeds max_context " +
                                   std::to_string(desc.max_context));
    }
    for (TokenId id : context) {
        if (!desc.vocabulary.contains(id)) {
            throw UnknownTokenError(desc.name + ": unknown token id " + std::to_string(id));
        }
    }
}

CompatibilityVerdict check_compatibility(const BackendDescriptor& a, const BackendDescriptor& b) {
    std::uint64_t fa = a.vocabulary.fingerprint();
    std::uint64_t fb = b.vocabulary.fingerprint();
    return CompatibilityVerdict{fa == fb, fa, fb};
}

}  // namespace evcomp
