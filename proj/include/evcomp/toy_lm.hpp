#pragma once

#include <filesystem>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "evcomp/backend.hpp"

namespace evcomp {

// A deterministic table-driven language model for exact testing. The next
// token is looked up by the longest context suffix present in the table
// (order 2, then 1, then 0); contexts with no entry fall back to a fixed
// distribution, so lookups are total.
//
// Definition file (line-oriented; '#' starts a comment):
//
//   vocab: <s> the cat sat </s>
//   eos: </s>
//   max_context: 64                 # optional, default 4096
//   fallback: uniform               # optional; or an explicit token:prob list
//   the cat -> sat:0.7, the:0.2, </s>:0.1
//   -> the:1.0                      # empty context = order-0 entry
//
// Probabilities on a line must sum to 1 within 1e-9; unlisted tokens get
// probability zero.
class ToyTableLM : public LmBackend {
public:
    static constexpr std::size_t kMaxOrder = 2;

    using Table = std::map<std::vector<TokenId>, TokenLogProbs>;

    ToyTableLM(BackendDescriptor descriptor, Table table, TokenLogProbs fallback);

    static ToyTableLM parse(std::istream& in, const std::string& origin,
                            const std::string& name = "toy");
    static ToyTableLM load(const std::filesystem::path& path, const std::string& name = "toy");

    const BackendDescriptor& descriptor() const override { return descriptor_; }
    TokenLogProbs next_token_distribution(std::span<const TokenId> context) const override;

    const Table& table() const { return table_; }
    const TokenLogProbs& fallback() const { return fallback_; }

private:
    BackendDescriptor descriptor_;
    Table table_;
    TokenLogProbs fallback_;
};

}  // namespace evcomp
