#pragma once

#include <cstddef>
#include <cstdint>
#include <limits>
#include <span>
#include <vector>

namespace evcomp {

using TokenId = std::int32_t;

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

// log(sum(exp(values))). Returns -inf when every entry is -inf.
double log_sum_exp(std::span<const double> values);

// A normalized next-token distribution in natural-log space: one entry per
// vocabulary slot, log_sum_exp(values) == 0 within 1e-6. Entries are finite
// or -inf (zero probability); at least one entry is finite. Immutable.
class TokenLogProbs {
public:
    // Log-softmax over raw scores. Errors if raw.size() != vocab_size, if any
    // entry is NaN or +inf, or if every entry is -inf. Argmax is preserved and
    // the result is invariant to shifting raw by a constant.
    static TokenLogProbs normalize(std::span<const double> raw, std::size_t vocab_size);

    // Wraps values that are already normalized; validates the invariants.
    static TokenLogProbs from_normalized(std::vector<double> values);

    // -log(n) everywhere.
    static TokenLogProbs uniform(std::size_t vocab_size);

    std::size_t size() const { return values_.size(); }
    double operator[](std::size_t i) const { return values_[i]; }
    const std::vector<double>& values() const { return values_; }

    // Index of the largest entry; ties go to the lowest index.
    TokenId argmax() const;

    bool operator==(const TokenLogProbs& other) const = default;

private:
    explicit TokenLogProbs(std::vector<double> values) : values_(std::move(values)) {}
    std::vector<double> values_;
};

// alpha * target + (1 - alpha) * compression, with 0 * (-inf) defined as 0 so
// that alpha = 0 ignores the target term entirely and alpha = 1 the
// compression term.
double combine_logprobs(double alpha, double target_logprob, double compression_logprob);

}  // namespace evcomp
