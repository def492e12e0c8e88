#include "evcomp/decoder.hpp"

#include <cmath>
#include <future>

#include "evcomp/errors.hpp"

namespace evcomp {

EnsembleChoice ensemble_step(const TokenLogProbs& target_dist,
                             const TokenLogProbs& compression_dist, double alpha) {
    if (target_dist.size() != compression_dist.size()) {
        throw Error("ensemble_step: vocabulary size mismatch (" +
                    std::to_string(target_dist.size()) + " vs " +
                    std::to_string(compression_dist.size()) + ")");
    }
    if (!(alpha >= 0.0 && alpha <= 1.0)) {
        throw Error("ensemble_step: alpha must be in [0, 1]");
    }

    std::size_t best = 0;
    double best_score = combine_logprobs(alpha, target_dist[0], compression_dist[0]);
    for (std::size_t i = 1; i < target_dist.size(); ++i) {
        double score = combine_logprobs(alpha, target_dist[i], compression_dist[i]);
        if (score > best_score) {
            best = i;
            best_score = score;
        }
    }

    TokenId chosen = static_cast<TokenId>(best);
    bool is_target = chosen == target_dist.argmax();
    bool is_compression = chosen == compression_dist.argmax();
    SourceTag tag;
    if (is_target && is_compression) {
        tag = SourceTag::both_argmax;
    } else if (is_target) {
        tag = SourceTag::target_argmax;
    } else if (is_compression) {
        tag = SourceTag::compression_argmax;
    } else {
        tag = SourceTag::neither;
    }
    return EnsembleChoice{chosen, best_score, tag};
}

DecodeResult decode(const LmBackend& compression_backend, const LmBackend& target_backend,
                    DualContext initial, const DecodeConfig& config) {
    config.validate();
    auto verdict =
        check_compatibility(compression_backend.descriptor(), target_backend.descriptor());
    if (!verdict.compatible) {
        throw IncompatibleVocabError(
            "backends do not share a vocabulary: " + compression_backend.descriptor().name +
                " vs " + target_backend.descriptor().name,
            verdict.fingerprint_a, verdict.fingerprint_b);
    }

    const double alpha = config.effective_alpha();
    const TokenId eos = compression_backend.descriptor().vocabulary.eos_id();

    DecodeResult result;
    result.final_context = std::move(initial);
    DualContext& ctx = result.final_context;
    CompressionTrace& trace = result.trace;

    for (int step = 0; step < config.max_new_tokens; ++step) {
        std::optional<TokenLogProbs> target_dist;
        std::optional<TokenLogProbs> compression_dist;
        try {
            // The two per-step queries are independent; run them concurrently.
            auto target_future = std::async(std::launch::async, [&] {
                return target_backend.next_token_distribution(ctx.generation_context);
            });
            compression_dist =
                compression_backend.next_token_distribution(ctx.compression_context);
            target_dist = target_future.get();
        } catch (const BackendError& e) {
            trace.terminated_by = Termination::aborted;
            result.error = e.what();
            return result;
        }

        auto choice = ensemble_step(*target_dist, *compression_dist, alpha);
        if (config.stop_on_eos && choice.token == eos) {
            trace.terminated_by = Termination::eos;
            return result;
        }
        trace.tokens.push_back(choice.token);
        trace.per_step.push_back(
            StepRecord{(*target_dist)[static_cast<std::size_t>(choice.token)],
                       (*compression_dist)[static_cast<std::size_t>(choice.token)],
                       choice.combined_score, choice.tag});
        if (config.record_distributions) {
            trace.step_distributions.emplace_back(std::move(*target_dist),
                                                  std::move(*compression_dist));
        }
        ctx.append(choice.token);
    }
    trace.terminated_by = Termination::length_limit;
    return result;
}

GreedyResult greedy_decode(const LmBackend& backend, std::vector<TokenId> context,
                           int max_new_tokens, bool stop_on_eos) {
    if (max_new_tokens < 1) throw Error("greedy_decode: max_new_tokens must be >= 1");
    const TokenId eos = backend.descriptor().vocabulary.eos_id();
    GreedyResult result;
    for (int step = 0; step < max_new_tokens; ++step) {
        TokenId token = backend.next_token_distribution(context).argmax();
        if (stop_on_eos && token == eos) {
            result.terminated_by = Termination::eos;
            return result;
        }
        result.tokens.push_back(token);
        context.push_back(token);
    }
    result.terminated_by = Termination::length_limit;
    return result;
}

SequenceScore score_sequence(const LmBackend& backend, std::span<const TokenId> prefix,
                             std::span<const TokenId> sequence) {
    if (sequence.empty()) throw Error("score_sequence: empty sequence");
    const Vocabulary& vocab = backend.descriptor().vocabulary;
    for (TokenId id : sequence) {
        if (!vocab.contains(id)) {
            throw UnknownTokenError("score_sequence: unknown token id " + std::to_string(id));
        }
    }
    std::vector<TokenId> context(prefix.begin(), prefix.end());
    double total = 0.0;
    for (TokenId token : sequence) {
        TokenLogProbs dist = backend.next_token_distribution(context);
        total += dist[static_cast<std::size_t>(token)];
        context.push_back(token);
    }
    double perplexity = std::exp(-total / static_cast<double>(sequence.size()));
    return SequenceScore{total, perplexity};
}

}  // namespace evcomp
