#include "evcomp/logprobs.hpp"

#include <cmath>
#include <string>

#include "evcomp/errors.hpp"

namespace evcomp {

double log_sum_exp(std::span<const double> values) {
    double max = kNegInf;
    for (double v : values) {
        if (v > max) max = v;
    }
    if (std::isinf(max) && max < 0) return kNegInf;
    double sum = 0.0;
    for (double v : values) {
        sum += std::exp(v - max);
    }
    return max + std::log(sum);
}

TokenLogProbs TokenLogProbs::normalize(std::span<const double> raw, std::size_t vocab_size) {
    if (raw.size() != vocab_size) {
        throw Error("normalize: expected " + std::to_string(vocab_size) + " entries, got " +
                    std::to_string(raw.size()));
    }
    bool any_finite = false;
    for (double v : raw) {
        if (std::isnan(v) || (std::isinf(v) && v > 0)) {
            throw Error("normalize: entries must be finite or -inf");
        }
        any_finite |= std::isfinite(v);
    }
    if (!any_finite) {
        throw Error("normalize: all entries are -inf");
    }
    double lse = log_sum_exp(raw);
    std::vector<double> values(raw.size());
    for (std::size_t i = 0; i < raw.size(); ++i) {
        values[i] = std::isinf(raw[i]) ? kNegInf : raw[i] - lse;
    }
    return TokenLogProbs(std::move(values));
}

TokenLogProbs TokenLogProbs::from_normalized(std::vector<double> values) {
    if (values.empty()) throw Error("from_normalized: empty distribution");
    bool any_finite = false;
    for (double v : values) {
        if (std::isnan(v) || (std::isinf(v) && v > 0)) {
            throw Error("from_normalized: entries must be finite or -inf");
        }
        any_finite |= std::isfinite(v);
    }
    if (!any_finite) throw Error("from_normalized: all entries are -inf");
    double lse = log_sum_exp(values);
    if (std::abs(lse) > 1e-6) {
        throw Error("from_normalized: log_sum_exp is " + std::to_string(lse) +
                    ", not 0 within 1e-6");
    }
    return TokenLogProbs(std::move(values));
}

TokenLogProbs TokenLogProbs::uniform(std::size_t vocab_size) {
    if (vocab_size == 0) throw Error("uniform: empty vocabulary");
    return TokenLogProbs(std::vector<double>(vocab_size, -std::log(double(vocab_size))));
}

TokenId TokenLogProbs::argmax() const {
    std::size_t best = 0;
    for (std::size_t i = 1; i < values_.size(); ++i) {
        if (values_[i] > values_[best]) best = i;
    }
    return static_cast<TokenId>(best);
}

double combine_logprobs(double alpha, double target_logprob, double compression_logprob) {
    double t = alpha == 0.0 ? 0.0 : alpha * target_logprob;
    double c = alpha == 1.0 ? 0.0 : (1.0 - alpha) * compression_logprob;
    return t + c;
}

}  // namespace evcomp
