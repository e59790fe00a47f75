#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "posewatch/matrix.hpp"
#include "posewatch/uetd/config.hpp"

namespace posewatch::uetd {

struct LinearParams {
    Matrix w;  // in x out
    Matrix b;  // 1 x out
};

struct LayerNormParams {
    Matrix gamma;  // 1 x dim
    Matrix beta;   // 1 x dim
};

struct AttentionParams {
    LinearParams q, k, v, out;
};

struct FeedForwardParams {
    LinearParams fc1, fc2;
};

struct EncoderLayerParams {
    LayerNormParams ln1, ln2;
    AttentionParams attn;
    FeedForwardParams ff;
};

struct DecoderLayerParams {
    LayerNormParams ln1, ln2, ln3;
    AttentionParams self_attn, cross_attn;
    FeedForwardParams ff;
};

struct EncoderParams {
    std::vector<EncoderLayerParams> layers;
    LayerNormParams final_ln;
};

// One decoder branch. Decoding is non-autoregressive: the decoder consumes
// its learned per-position query embeddings, so generation of all tokens
// happens in one parallel pass.
struct DecoderParams {
    Matrix queries;  // n_tokens x model_dim
    std::vector<DecoderLayerParams> layers;
    LayerNormParams final_ln;
};

// All learnable state. The encoder is shared by both branches; the output
// projection back to token space is likewise a single block, trained with
// the reconstruction branch and frozen afterwards.
struct UetdWeights {
    UetdConfig config;
    LinearParams embedding;   // token_dim -> model_dim
    LinearParams projection;  // model_dim -> token_dim
    EncoderParams encoder;
    DecoderParams ctd;
    DecoderParams ftd;

    // Enumerates every parameter matrix as (name, Matrix&) in a fixed order.
    // Names are dotted paths ("enc.l0.attn.q.w", "ftd.queries", ...); the
    // leading component is the parameter group used for freezing.
    template <typename F>
    void visit(F&& f) {
        const_cast<const UetdWeights*>(this)->visit(
            [&](const std::string& name, const Matrix& m) { f(name, const_cast<Matrix&>(m)); });
    }

    template <typename F>
    void visit(F&& f) const {
        auto lin = [&](const std::string& p, const LinearParams& l) {
            f(p + ".w", l.w);
            f(p + ".b", l.b);
        };
        auto ln = [&](const std::string& p, const LayerNormParams& l) {
            f(p + ".g", l.gamma);
            f(p + ".b", l.beta);
        };
        auto attn = [&](const std::string& p, const AttentionParams& a) {
            lin(p + ".q", a.q);
            lin(p + ".k", a.k);
            lin(p + ".v", a.v);
            lin(p + ".o", a.out);
        };
        auto ffb = [&](const std::string& p, const FeedForwardParams& ff) {
            lin(p + ".fc1", ff.fc1);
            lin(p + ".fc2", ff.fc2);
        };
        lin("embed", embedding);
        lin("proj", projection);
        for (std::size_t i = 0; i < encoder.layers.size(); ++i) {
            const std::string p = "enc.l" + std::to_string(i);
            const auto& l = encoder.layers[i];
            ln(p + ".ln1", l.ln1);
            attn(p + ".attn", l.attn);
            ln(p + ".ln2", l.ln2);
            ffb(p + ".ff", l.ff);
        }
        ln("enc.ln", encoder.final_ln);
        for (const char* branch : {"ctd", "ftd"}) {
            const DecoderParams& d = branch[0] == 'c' ? ctd : ftd;
            f(std::string(branch) + ".queries", d.queries);
            for (std::size_t i = 0; i < d.layers.size(); ++i) {
                const std::string p = std::string(branch) + ".l" + std::to_string(i);
                const auto& l = d.layers[i];
                ln(p + ".ln1", l.ln1);
                attn(p + ".self", l.self_attn);
                ln(p + ".ln2", l.ln2);
                attn(p + ".cross", l.cross_attn);
                ln(p + ".ln3", l.ln3);
                ffb(p + ".ff", l.ff);
            }
            ln(std::string(branch) + ".ln", d.final_ln);
        }
    }
};

// Deterministic per seed. Weight matrices are Glorot-uniform over
// (fan_in, fan_out); biases zero; layer-norm gains one.
UetdWeights init_model(const UetdConfig& config, std::uint64_t seed);

// Same structure with every matrix zeroed — the gradient accumulator.
UetdWeights zeros_like(const UetdWeights& w);

long param_count(const UetdWeights& w);

}  // namespace posewatch::uetd
