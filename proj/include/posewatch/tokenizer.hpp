#pragma once

#include <iosfwd>
#include <string>

#include "posewatch/pose_types.hpp"

namespace posewatch {

enum class Scheme { StPrp, TPrp, KsPrp, FsPrp };

std::string scheme_name(Scheme s);
Scheme scheme_from_name(const std::string& name);  // "st-prp", "t-prp", "ks-prp", "fs-prp"

struct TokenizationScheme {
    Scheme scheme = Scheme::StPrp;
    bool use_relative = true;  // drop the relative channels when false
};

struct TokenShape {
    int n_tokens = 0;
    int dim = 0;
};

// Token count and dimension are pure functions of (scheme, beta, k):
//   ST-PRP -> (beta, 4k)   half the tokens carry x data, half y, two frames each
//   T-PRP  -> (beta, 4k)   one frame per token
//   KS-PRP -> (k,    4beta) one keypoint per token
//   FS-PRP -> (2k,   2beta) one keypoint axis per token, x tokens then y tokens
// Dropping the relative channels halves every dimension.
TokenShape token_shape(const TokenizationScheme& scheme, int beta, int k);

struct TokenSequence {
    Matrix tokens;  // n_tokens x dim
    TokenizationScheme scheme;
    std::string video_id;
    int person_id = 0;
    long start_frame = 0;
    int beta = 0;
    int k = 0;

    long center_frame() const { return start_frame + beta / 2; }
};

// Pure re-indexing of the window's scalars into the scheme's token layout.
// Intra-token element orders (flattening of the block diagrams) are fixed:
//   ST-PRP token j < beta/2, frames f0=2j, f1=2j+1 (tiled pairs):
//       [abs_x(f0, kp 0..k-1), abs_x(f1, ...), rel_x(f0, ...), rel_x(f1, ...)]
//     token beta/2 + j: the same for y.
//   T-PRP token t:  [abs_x(t, .), abs_y(t, .), rel_x(t, .), rel_y(t, .)]
//   KS-PRP token m: [abs_x(., m), abs_y(., m), rel_x(., m), rel_y(., m)]
//   FS-PRP token m < k:  [abs_x(., m), rel_x(., m)];  token k+m: y version.
// With use_relative = false the relative blocks are omitted and the absolute
// values keep their order.
TokenSequence tokenize(const PoseWindow& window, const TokenizationScheme& scheme);

// Inverse re-indexing; round-trips tokenize exactly. When the sequence has no
// relative channels the relative block is recomputed from the absolute one.
PoseWindow detokenize(const TokenSequence& seq);

// PE[pos, 2i] = sin(pos / 10000^(2i/dim)), PE[pos, 2i+1] = cos(...).
// dim must be even.
Matrix positional_encoding(int n_tokens, int dim);

// Element-wise sum with the positional encoding of matching shape.
TokenSequence add_positional(const TokenSequence& seq);

// Deterministic text dump for fixtures and cross-implementation diffing.
void dump_tokens(std::ostream& out, const TokenSequence& seq);

}  // namespace posewatch
