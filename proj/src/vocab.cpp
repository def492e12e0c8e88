#include "evcomp/vocab.hpp"

#include <cctype>
#include <charconv>
#include <fstream>
#include <sstream>

#include "evcomp/errors.hpp"

namespace evcomp {

namespace {

constexpr char kSeparator = '\x1f';

bool contains_forbidden_byte(std::string_view token) {
    for (unsigned char c : token) {
        if (c == static_cast<unsigned char>(kSeparator) || std::isspace(c)) return true;
    }
    return false;
}

}  // namespace

std::uint64_t fnv1a64(std::string_view bytes, std::uint64_t seed) {
    std::uint64_t hash = seed;
    for (unsigned char c : bytes) {
        hash ^= c;
        hash *= 0x100000001b3ULL;
    }
    return hash;
}

Vocabulary::Vocabulary(std::vector<std::string> tokens, TokenId eos_id)
    : tokens_(std::move(tokens)), eos_id_(eos_id) {
    if (tokens_.empty()) throw Error("vocabulary: token list is empty");
    if (eos_id_ < 0 || static_cast<std::size_t>(eos_id_) >= tokens_.size()) {
        throw Error("vocabulary: eos id " + std::to_string(eos_id_) +
                    " out of range for " + std::to_string(tokens_.size()) + " tokens");
    }
    index_.reserve(tokens_.size());
    for (std::size_t i = 0; i < tokens_.size(); ++i) {
        const std::string& tok = tokens_[i];
        if (tok.empty()) throw Error("vocabulary: empty token at id " + std::to_string(i));
        if (contains_forbidden_byte(tok)) {
            throw Error("vocabulary: token at id " + std::to_string(i) +
                        " contains whitespace or the 0x1F separator");
        }
        if (!index_.emplace(tok, static_cast<TokenId>(i)).second) {
            throw Error("vocabulary: duplicate token \"" + tok + "\"");
        }
    }

    std::string bytes = std::to_string(eos_id_);
    for (const std::string& tok : tokens_) {
        bytes.push_back(kSeparator);
        bytes.append(tok);
    }
    fingerprint_ = fnv1a64(bytes);
}

const std::string& Vocabulary::token(TokenId id) const {
    if (!contains(id)) {
        throw UnknownTokenError("token id " + std::to_string(id) + " out of range (|V| = " +
                                std::to_string(tokens_.size()) + ")");
    }
    return tokens_[static_cast<std::size_t>(id)];
}

std::optional<TokenId> Vocabulary::find(std::string_view token) const {
    auto it = index_.find(token);
    if (it == index_.end()) return std::nullopt;
    return it->second;
}

std::string Vocabulary::fingerprint_hex() const {
    static const char* digits = "0123456789abcdef";
    std::string out(16, '0');
    std::uint64_t v = fingerprint_;
    for (int i = 15; i >= 0; --i) {
        out[static_cast<std::size_t>(i)] = digits[v & 0xF];
        v >>= 4;
    }
    return out;
}

void Vocabulary::serialize(std::ostream& out) const {
    out << "eos " << eos_id_ << "\n";
    for (const std::string& tok : tokens_) {
        out << tok << "\n";
    }
}

void Vocabulary::save(const std::filesystem::path& path) const {
    std::ofstream out(path);
    if (!out) throw Error("cannot write vocabulary file " + path.string());
    serialize(out);
}

Vocabulary Vocabulary::parse(std::istream& in, const std::string& origin) {
    std::string header;
    if (!std::getline(in, header)) throw ParseError(origin, 1, "empty vocabulary");
    if (!header.starts_with("eos ")) {
        throw ParseError(origin, 1, "expected header \"eos <id>\"");
    }
    TokenId eos = 0;
    std::string_view num = std::string_view(header).substr(4);
    auto [ptr, ec] = std::from_chars(num.data(), num.data() + num.size(), eos);
    if (ec != std::errc{} || ptr != num.data() + num.size()) {
        throw ParseError(origin, 1, "bad eos id \"" + std::string(num) + "\"");
    }
    std::vector<std::string> tokens;
    std::string line;
    while (std::getline(in, line)) {
        tokens.push_back(line);
    }
    try {
        return Vocabulary(std::move(tokens), eos);
    } catch (const Error& e) {
        throw ParseError(origin, 1, e.what());
    }
}

Vocabulary Vocabulary::load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open vocabulary file " + path.string());
    return parse(in, path.string());
}

}  // namespace evcomp
