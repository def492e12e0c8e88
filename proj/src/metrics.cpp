#include "evcomp/metrics.hpp"

#include <algorithm>
#include <cctype>
#include <unordered_map>

#include "evcomp/errors.hpp"

namespace evcomp::metrics {

namespace {

bool is_article(std::string_view word) {
    return word == "a" || word == "an" || word == "the";
}

void require_golds(std::span<const std::string> golds) {
    if (golds.empty()) throw Error("metrics: golds list is empty");
}

}  // namespace

std::string normalize_answer(std::string_view text) {
    // Lowercase and strip punctuation byte-wise (ASCII only; multi-byte
    // UTF-8 sequences pass through untouched), then drop articles and
    // collapse whitespace in one token pass.
    std::string cleaned;
    cleaned.reserve(text.size());
    for (unsigned char c : text) {
        if (c < 0x80 && std::ispunct(c)) continue;
        cleaned.push_back(c < 0x80 ? static_cast<char>(std::tolower(c)) : static_cast<char>(c));
    }

    std::string out;
    std::size_t i = 0;
    while (i < cleaned.size()) {
        while (i < cleaned.size() && std::isspace(static_cast<unsigned char>(cleaned[i]))) ++i;
        std::size_t start = i;
        while (i < cleaned.size() && !std::isspace(static_cast<unsigned char>(cleaned[i]))) ++i;
        if (i == start) break;
        std::string_view word(&cleaned[start], i - start);
        if (is_article(word)) continue;
        if (!out.empty()) out.push_back(' ');
        out.append(word);
    }
    return out;
}

namespace {

// F1 tokens: lowercase + punctuation strip + whitespace split, articles kept.
std::vector<std::string> f1_tokens(std::string_view text) {
    std::vector<std::string> tokens;
    std::string word;
    auto flush = [&] {
        if (!word.empty()) {
            tokens.push_back(word);
            word.clear();
        }
    };
    for (unsigned char c : text) {
        if (c < 0x80 && std::isspace(c)) {
            flush();
        } else if (c < 0x80 && std::ispunct(c)) {
            continue;
        } else {
            word.push_back(c < 0x80 ? static_cast<char>(std::tolower(c))
                                    : static_cast<char>(c));
        }
    }
    flush();
    return tokens;
}

}  // namespace

double token_f1(std::string_view prediction, std::span<const std::string> golds) {
    require_golds(golds);
    std::vector<std::string> pred = f1_tokens(prediction);
    std::unordered_map<std::string, int> pred_counts;
    for (const auto& t : pred) ++pred_counts[t];

    double best = 0.0;
    for (const std::string& gold : golds) {
        std::vector<std::string> gold_tokens = f1_tokens(gold);
        double f1;
        if (pred.empty() && gold_tokens.empty()) {
            f1 = 1.0;
        } else if (pred.empty() || gold_tokens.empty()) {
            f1 = 0.0;
        } else {
            auto remaining = pred_counts;
            std::size_t common = 0;
            for (const auto& t : gold_tokens) {
                auto it = remaining.find(t);
                if (it != remaining.end() && it->second > 0) {
                    --it->second;
                    ++common;
                }
            }
            if (common == 0) {
                f1 = 0.0;
            } else {
                double precision = double(common) / double(pred.size());
                double recall = double(common) / double(gold_tokens.size());
                f1 = 2.0 * precision * recall / (precision + recall);
            }
        }
        best = std::max(best, f1);
    }
    return best;
}

int accuracy(std::string_view prediction, std::span<const std::string> golds) {
    require_golds(golds);
    std::string pred = normalize_answer(prediction);
    for (const std::string& gold : golds) {
        if (pred.find(normalize_answer(gold)) != std::string::npos) return 1;
    }
    return 0;
}

int accuracy_exact(std::string_view prediction, std::span<const std::string> golds) {
    require_golds(golds);
    std::string pred = normalize_answer(prediction);
    for (const std::string& gold : golds) {
        if (pred == normalize_answer(gold)) return 1;
    }
    return 0;
}

int hits(std::span<const std::string> documents, std::span<const std::string> golds) {
    require_golds(golds);
    std::string joined;
    for (const std::string& doc : documents) {
        if (!joined.empty()) joined.push_back(' ');
        joined.append(doc);
    }
    std::string evidence = normalize_answer(joined);
    for (const std::string& gold : golds) {
        if (evidence.find(normalize_answer(gold)) != std::string::npos) return 1;
    }
    return 0;
}

double compression_rate(std::size_t retrieved_token_count, std::size_t compressed_token_count) {
    if (retrieved_token_count == 0) {
        throw Error("compression_rate: retrieved_token_count must be >= 1");
    }
    std::size_t denominator = std::max<std::size_t>(compressed_token_count, 1);
    return double(retrieved_token_count) / double(denominator);
}

std::string_view to_string(MetricMode mode) {
    return mode == MetricMode::containment ? "containment" : "exact";
}

MetricMode metric_mode_from_string(std::string_view s) {
    if (s == "containment") return MetricMode::containment;
    if (s == "exact") return MetricMode::exact;
    throw ConfigError("unknown metric mode \"" + std::string(s) + "\"");
}

}  // namespace evcomp::metrics
