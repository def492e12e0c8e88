#include "evcomp/toy_lm.hpp"

#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <optional>
#include <tuple>

#include "evcomp/errors.hpp"

namespace evcomp {

namespace {

std::string_view trim(std::string_view s) {
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
    return s;
}

std::vector<std::string_view> split_words(std::string_view s) {
    std::vector<std::string_view> out;
    std::size_t i = 0;
    while (i < s.size()) {
        while (i < s.size() && std::isspace(static_cast<unsigned char>(s[i]))) ++i;
        std::size_t start = i;
        while (i < s.size() && !std::isspace(static_cast<unsigned char>(s[i]))) ++i;
        if (i > start) out.push_back(s.substr(start, i - start));
    }
    return out;
}

double parse_prob(std::string_view text, const std::string& origin, int line) {
    double p = 0.0;
    auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), p);
    if (ec != std::errc{} || ptr != text.data() + text.size()) {
        throw ParseError(origin, line, "bad probability \"" + std::string(text) + "\"");
    }
    if (p < 0.0 || p > 1.0) {
        throw ParseError(origin, line, "probability out of [0, 1]: " + std::string(text));
    }
    return p;
}

// "tok:0.7, tok:0.3" -> normalized distribution over the vocabulary.
TokenLogProbs parse_distribution(std::string_view rhs, const Vocabulary& vocab,
                                 const std::string& origin, int line) {
    std::vector<double> probs(vocab.size(), 0.0);
    std::vector<bool> seen(vocab.size(), false);
    double sum = 0.0;
    std::size_t start = 0;
    std::string_view s = rhs;
    while (start <= s.size()) {
        std::size_t comma = s.find(',', start);
        std::string_view part = trim(s.substr(start, comma == std::string_view::npos
                                                          ? std::string_view::npos
                                                          : comma - start));
        if (part.empty()) throw ParseError(origin, line, "empty token:prob entry");
        std::size_t colon = part.rfind(':');
        if (colon == std::string_view::npos || colon == 0) {
            throw ParseError(origin, line, "expected token:prob, got \"" + std::string(part) + "\"");
        }
        std::string_view tok = trim(part.substr(0, colon));
        auto id = vocab.find(tok);
        if (!id) throw ParseError(origin, line, "token \"" + std::string(tok) + "\" not in vocabulary");
        if (seen[static_cast<std::size_t>(*id)]) {
            throw ParseError(origin, line, "duplicate token \"" + std::string(tok) + "\"");
        }
        seen[static_cast<std::size_t>(*id)] = true;
        double p = parse_prob(trim(part.substr(colon + 1)), origin, line);
        probs[static_cast<std::size_t>(*id)] = p;
        sum += p;
        if (comma == std::string_view::npos) break;
        start = comma + 1;
    }
    if (std::abs(sum - 1.0) > 1e-9) {
        throw ParseError(origin, line,
                         "probabilities sum to " + std::to_string(sum) + ", expected 1");
    }
    std::vector<double> logs(probs.size());
    for (std::size_t i = 0; i < probs.size(); ++i) {
        logs[i] = probs[i] > 0.0 ? std::log(probs[i]) : kNegInf;
    }
    try {
        return TokenLogProbs::normalize(logs, vocab.size());
    } catch (const Error& e) {
        throw ParseError(origin, line, e.what());
    }
}

}  // namespace

ToyTableLM::ToyTableLM(BackendDescriptor descriptor, Table table, TokenLogProbs fallback)
    : descriptor_(std::move(descriptor)), table_(std::move(table)), fallback_(std::move(fallback)) {
    descriptor_.validate();
    const std::size_t vocab_size = descriptor_.vocabulary.size();
    if (fallback_.size() != vocab_size) {
        throw Error("toy lm: fallback distribution size " + std::to_string(fallback_.size()) +
                    " != |V| = " + std::to_string(vocab_size));
    }
    for (const auto& [ctx, dist] : table_) {
        if (ctx.size() > kMaxOrder) {
            throw Error("toy lm: table context longer than order " + std::to_string(kMaxOrder));
        }
        for (TokenId id : ctx) {
            if (!descriptor_.vocabulary.contains(id)) {
                throw Error("toy lm: table context has unknown token id " + std::to_string(id));
            }
        }
        if (dist.size() != vocab_size) {
            throw Error("toy lm: table distribution size != |V|");
        }
    }
}

TokenLogProbs ToyTableLM::next_token_distribution(std::span<const TokenId> context) const {
    validate_context(descriptor_, context);
    std::size_t longest = std::min(kMaxOrder, context.size());
    for (std::size_t order = longest + 1; order-- > 0;) {
        std::vector<TokenId> suffix(context.end() - static_cast<std::ptrdiff_t>(order),
                                    context.end());
        auto it = table_.find(suffix);
        if (it != table_.end()) return it->second;
    }
    return fallback_;
}

ToyTableLM ToyTableLM::parse(std::istream& in, const std::string& origin, const std::string& name) {
    std::optional<std::pair<int, std::vector<std::string>>> vocab_tokens;
    std::optional<std::pair<int, std::string>> eos_token;
    std::optional<std::pair<int, std::string>> pending_fallback;
    std::size_t max_context = 4096;
    std::vector<std::tuple<int, std::string, std::string>> transitions;  // line, lhs, rhs

    std::string raw;
    int line_no = 0;
    while (std::getline(in, raw)) {
        ++line_no;
        std::string_view line(raw);
        if (auto hash = line.find('#'); hash != std::string_view::npos) {
            line = line.substr(0, hash);
        }
        line = trim(line);
        if (line.empty()) continue;

        if (line.starts_with("vocab:")) {
            if (vocab_tokens) throw ParseError(origin, line_no, "duplicate vocab directive");
            auto words = split_words(line.substr(6));
            vocab_tokens = {line_no, std::vector<std::string>(words.begin(), words.end())};
            continue;
        }
        if (line.starts_with("eos:")) {
            if (eos_token) throw ParseError(origin, line_no, "duplicate eos directive");
            eos_token = {line_no, std::string(trim(line.substr(4)))};
            continue;
        }
        if (line.starts_with("max_context:")) {
            auto text = trim(line.substr(12));
            std::size_t v = 0;
            auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
            if (ec != std::errc{} || ptr != text.data() + text.size() || v < 1) {
                throw ParseError(origin, line_no, "bad max_context \"" + std::string(text) + "\"");
            }
            max_context = v;
            continue;
        }
        if (line.starts_with("fallback:")) {
            if (pending_fallback) throw ParseError(origin, line_no, "duplicate fallback directive");
            pending_fallback = {line_no, std::string(trim(line.substr(9)))};
            continue;
        }
        auto arrow = line.find("->");
        if (arrow == std::string_view::npos) {
            throw ParseError(origin, line_no, "expected directive or \"ctx -> token:prob\" line");
        }
        transitions.emplace_back(line_no, std::string(trim(line.substr(0, arrow))),
                                 std::string(trim(line.substr(arrow + 2))));
    }

    if (!vocab_tokens) throw ParseError(origin, line_no, "missing vocab directive");
    if (!eos_token) throw ParseError(origin, line_no, "missing eos directive");

    TokenId eos_id = -1;
    for (std::size_t i = 0; i < vocab_tokens->second.size(); ++i) {
        if (vocab_tokens->second[i] == eos_token->second) {
            eos_id = static_cast<TokenId>(i);
            break;
        }
    }
    if (eos_id < 0) {
        throw ParseError(origin, eos_token->first,
                         "eos token \"" + eos_token->second + "\" not in vocabulary");
    }
    std::optional<Vocabulary> vocab;
    try {
        vocab.emplace(std::move(vocab_tokens->second), eos_id);
    } catch (const Error& e) {
        throw ParseError(origin, vocab_tokens->first, e.what());
    }

    std::optional<TokenLogProbs> fallback;
    if (pending_fallback) {
        if (pending_fallback->second == "uniform") {
            fallback = TokenLogProbs::uniform(vocab->size());
        } else {
            fallback = parse_distribution(pending_fallback->second, *vocab, origin,
                                          pending_fallback->first);
        }
    } else {
        fallback = TokenLogProbs::uniform(vocab->size());
    }

    Table table;
    for (const auto& [ln, lhs, rhs] : transitions) {
        auto words = split_words(lhs);
        if (words.size() > kMaxOrder) {
            throw ParseError(origin, ln, "context \"" + lhs + "\" longer than order " +
                                             std::to_string(kMaxOrder));
        }
        std::vector<TokenId> ctx;
        for (auto w : words) {
            auto id = vocab->find(w);
            if (!id) throw ParseError(origin, ln, "context token \"" + std::string(w) +
                                                      "\" not in vocabulary");
            ctx.push_back(*id);
        }
        if (table.count(ctx)) {
            throw ParseError(origin, ln, "duplicate table entry for context \"" + lhs + "\"");
        }
        table.emplace(std::move(ctx), parse_distribution(rhs, *vocab, origin, ln));
    }

    BackendDescriptor desc{name, std::move(*vocab), max_context};
    return ToyTableLM(std::move(desc), std::move(table), std::move(*fallback));
}

ToyTableLM ToyTableLM::load(const std::filesystem::path& path, const std::string& name) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open toy lm file " + path.string());
    return parse(in, path.string(), name);
}

}  // namespace evcomp
