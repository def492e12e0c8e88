#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "evcomp/logprobs.hpp"

namespace evcomp {

// 64-bit FNV-1a over a byte string.
std::uint64_t fnv1a64(std::string_view bytes,
                      std::uint64_t seed = 0xcbf29ce484222325ULL);

// An ordered token list with a designated end-of-sequence token. Token ids
// are the positions in the list. Immutable after construction.
//
// Fingerprint (bit-exact): FNV-1a-64 over the decimal rendering of eos_id
// followed by, for each token in order, a 0x1F separator byte and the token's
// UTF-8 bytes. Equal token lists with equal eos ids always hash equal;
// changing any token or the eos id changes the fingerprint.
//
// Serialized form: a header line "eos <eos_id>" followed by one token per
// line, in id order. Tokens must be non-empty and must not contain
// whitespace or the 0x1F separator byte.
class Vocabulary {
public:
    Vocabulary(std::vector<std::string> tokens, TokenId eos_id);

    std::size_t size() const { return tokens_.size(); }
    TokenId eos_id() const { return eos_id_; }
    const std::vector<std::string>& tokens() const { return tokens_; }
    const std::string& token(TokenId id) const;
    std::optional<TokenId> find(std::string_view token) const;
    bool contains(TokenId id) const {
        return id >= 0 && static_cast<std::size_t>(id) < tokens_.size();
    }

    std::uint64_t fingerprint() const { return fingerprint_; }
    std::string fingerprint_hex() const;  // 16 lowercase hex digits

    bool operator==(const Vocabulary& other) const {
        return eos_id_ == other.eos_id_ && tokens_ == other.tokens_;
    }

    void serialize(std::ostream& out) const;
    void save(const std::filesystem::path& path) const;
    static Vocabulary parse(std::istream& in, const std::string& origin);
    static Vocabulary load(const std::filesystem::path& path);

private:
    std::vector<std::string> tokens_;
    TokenId eos_id_;
    std::uint64_t fingerprint_;
    std::unordered_map<std::string_view, TokenId> index_;
};

}  // namespace evcomp
