#pragma once

#include <vector>

#include "posewatch/matrix.hpp"
#include "posewatch/rng.hpp"
#include "posewatch/uetd/weights.hpp"

namespace posewatch::uetd {

enum class Branch { Ctd, Ftd };
enum class Mode { Train, Eval };

struct ForwardOpts {
    Mode mode = Mode::Eval;
    double dropout = 0.0;  // applied only in train mode
    Rng* rng = nullptr;    // required when train mode and dropout > 0
};

// ---- forward caches (everything backward needs) ------------------------

struct LnCache {
    Matrix in;
    std::vector<double> mean, inv_std;
};

struct DropoutCache {
    std::vector<double> mask;  // empty = identity
};

struct AttnCache {
    Matrix in_q;    // query-side input (layer-norm output)
    Matrix q, k, v;
    Matrix probs;   // (n_heads * n_q) x n_kv, softmaxed
    Matrix concat;  // n_q x model_dim, pre output-projection
};

struct FfCache {
    Matrix in;  // layer-norm output
    Matrix z1;  // pre-activation
    Matrix a1;  // gelu(z1)
};

struct EncLayerCache {
    LnCache ln1, ln2;
    AttnCache attn;
    FfCache ff;
    DropoutCache d1, d2;
};

struct DecLayerCache {
    LnCache ln1, ln2, ln3;
    AttnCache self_attn, cross_attn;
    FfCache ff;
    DropoutCache d1, d2, d3;
};

struct EncodeCache {
    Matrix input_tokens;
    DropoutCache d0;
    std::vector<EncLayerCache> layers;
    LnCache final_ln;
    Matrix memory;
};

struct DecodeCache {
    std::vector<DecLayerCache> layers;
    LnCache final_ln;
    Matrix pre_proj;  // final layer-norm output
    Matrix output;    // n_tokens x token_dim
};

Matrix make_positional(const UetdConfig& config);

// Shared encoder: embed, add positional encoding, self-attention stack
// (pre-layer-norm, no masking), final layer norm. Result in cache.memory.
void encode(const UetdWeights& w, const Matrix& tokens, const Matrix& pe, const ForwardOpts& opts,
            EncodeCache& cache);

// One branch's non-autoregressive decode: learned queries self-attend,
// cross-attend to the memory, and all output tokens are produced in a single
// parallel pass, projected back to token space. Result in cache.output.
void decode(const UetdWeights& w, const Matrix& memory, Branch branch, const ForwardOpts& opts,
            DecodeCache& cache);

// Gradient accumulation. decode_backward adds parameter gradients into
// `grads` and, when d_memory is non-null, the gradient w.r.t. the encoder
// memory (needed when the encoder itself is training).
void decode_backward(const UetdWeights& w, Branch branch, const Matrix& memory,
                     const DecodeCache& cache, const Matrix& d_output, UetdWeights& grads,
                     Matrix* d_memory);
void encode_backward(const UetdWeights& w, const EncodeCache& cache, const Matrix& d_memory,
                     UetdWeights& grads);

// Deterministic eval-mode helpers.
Matrix encode_eval(const UetdWeights& w, const Matrix& tokens, const Matrix& pe);
Matrix decode_eval(const UetdWeights& w, const Matrix& memory, Branch branch);

// Mean of squared element-wise differences over all token elements.
double mse_loss(const Matrix& generated, const Matrix& target);

// Full per-sample pass: loss(decode(encode(input)), target); fills grads
// when non-null. backprop_encoder=false skips gradients upstream of the
// memory (the frozen-encoder training stage).
double branch_loss(const UetdWeights& w, const Matrix& input_tokens, const Matrix& target_tokens,
                   Branch branch, const Matrix& pe, const ForwardOpts& opts, UetdWeights* grads,
                   bool backprop_encoder = true);

// Same, starting from a precomputed (frozen) memory.
double decoder_loss(const UetdWeights& w, const Matrix& memory, const Matrix& target_tokens,
                    Branch branch, const ForwardOpts& opts, UetdWeights* grads);

}  // namespace posewatch::uetd
