#include "posewatch/uetd/model.hpp"

#include <cmath>
#include <cstdint>
#include <cstring>
#include <limits>
#include <stdexcept>

#include "posewatch/tokenizer.hpp"

namespace posewatch::uetd {

namespace {

constexpr double kLnEps = 1e-5;

// exp via exponent extraction and a degree-6 polynomial on the reduced
// range; ~1e-13 relative accuracy, several times faster than libm and free
// of errno/rounding-mode bookkeeping. Softmax and the gelu below are the
// hottest scalar loops in the model.
inline double fast_exp(double x) {
    if (x < -708.0) return 0.0;
    if (x > 708.0) return std::numeric_limits<double>::infinity();
    const double log2e = 1.4426950408889634074;
    const double ln2_hi = 6.93147180369123816490e-01;
    const double ln2_lo = 1.90821492927058770002e-10;
    const double t = x * log2e;
    const double n = std::nearbyint(t);
    const double r = (x - n * ln2_hi) - n * ln2_lo;
    // exp(r) for |r| <= ln2/2, degree-7 Taylor-like minimax
    double p = 1.0 / 5040.0;
    p = p * r + 1.0 / 720.0;
    p = p * r + 1.0 / 120.0;
    p = p * r + 1.0 / 24.0;
    p = p * r + 1.0 / 6.0;
    p = p * r + 0.5;
    p = p * r + 1.0;
    p = p * r + 1.0;
    const std::int64_t bits = (static_cast<std::int64_t>(n) + 1023) << 52;
    double scale;
    std::memcpy(&scale, &bits, sizeof scale);
    return p * scale;
}

// ---- primitives ---------------------------------------------------------

void linear(const LinearParams& p, const Matrix& x, Matrix& out) {
    matmul(x, p.w, out);
    add_row_vector(out, p.b);
}

// d_x += d_out * W^T; dW += x^T * d_out; db += colsum(d_out)
void linear_backward(const LinearParams& p, const Matrix& x, const Matrix& d_out, LinearParams& g,
                     Matrix* d_x) {
    matmul_tn_acc(x, d_out, g.w);
    add_col_sums(d_out, g.b);
    if (d_x) matmul_nt_acc(d_out, p.w, *d_x);
}

// Reused per-thread scratch; every matrix is reshaped (and zeroed where it
// accumulates) before use, so reuse is safe and allocation-free after warmup.
Matrix& scratch(int slot) {
    thread_local Matrix bufs[24];
    return bufs[slot];
}

Matrix& scratch_zeroed(int slot, int rows, int cols) {
    Matrix& m = scratch(slot);
    m.reshape(rows, cols);
    m.zero();
    return m;
}

void layer_norm(const LayerNormParams& p, const Matrix& x, LnCache& cache, Matrix& out) {
    cache.in = x;
    cache.mean.resize(x.rows);
    cache.inv_std.resize(x.rows);
    out.reshape(x.rows, x.cols);
    const int d = x.cols;
    for (int i = 0; i < x.rows; ++i) {
        const double* row = x.row(i);
        double mu = 0.0;
        for (int j = 0; j < d; ++j) mu += row[j];
        mu /= d;
        double var = 0.0;
        for (int j = 0; j < d; ++j) {
            const double c = row[j] - mu;
            var += c * c;
        }
        var /= d;
        const double inv = 1.0 / std::sqrt(var + kLnEps);
        cache.mean[i] = mu;
        cache.inv_std[i] = inv;
        double* o = out.row(i);
        const double* gamma = p.gamma.row(0);
        const double* beta = p.beta.row(0);
        for (int j = 0; j < d; ++j) o[j] = gamma[j] * (row[j] - mu) * inv + beta[j];
    }
}

// d_x += backward of layer norm
void layer_norm_backward(const LayerNormParams& p, const LnCache& cache, const Matrix& d_out,
                         LayerNormParams& g, Matrix& d_x) {
    const int d = cache.in.cols;
    const double* gamma = p.gamma.row(0);
    double* dgamma = g.gamma.row(0);
    double* dbeta = g.beta.row(0);
    for (int i = 0; i < cache.in.rows; ++i) {
        const double* x = cache.in.row(i);
        const double* dy = d_out.row(i);
        double* dx = d_x.row(i);
        const double mu = cache.mean[i];
        const double inv = cache.inv_std[i];
        double mean_g = 0.0, mean_gx = 0.0;
        for (int j = 0; j < d; ++j) {
            const double xhat = (x[j] - mu) * inv;
            const double gj = dy[j] * gamma[j];
            dgamma[j] += dy[j] * xhat;
            dbeta[j] += dy[j];
            mean_g += gj;
            mean_gx += gj * xhat;
        }
        mean_g /= d;
        mean_gx /= d;
        for (int j = 0; j < d; ++j) {
            const double xhat = (x[j] - mu) * inv;
            const double gj = dy[j] * gamma[j];
            dx[j] += (gj - mean_g - xhat * mean_gx) * inv;
        }
    }
}

// tanh-form gelu; the gradient differentiates exactly this expression.
constexpr double kGeluC = 0.79788456080286535588;  // sqrt(2/pi)
constexpr double kGeluA = 0.044715;

inline double gelu_inner_tanh(double x) {
    const double z = kGeluC * (x + kGeluA * x * x * x);
    // tanh(z) = 1 - 2 / (exp(2z) + 1)
    return 1.0 - 2.0 / (fast_exp(2.0 * z) + 1.0);
}

double gelu(double x) { return 0.5 * x * (1.0 + gelu_inner_tanh(x)); }

double gelu_grad(double x) {
    const double t = gelu_inner_tanh(x);
    const double dz = kGeluC * (1.0 + 3.0 * kGeluA * x * x);
    return 0.5 * (1.0 + t) + 0.5 * x * (1.0 - t * t) * dz;
}

void feed_forward(const FeedForwardParams& p, const Matrix& x, FfCache& cache, Matrix& out) {
    cache.in = x;
    linear(p.fc1, x, cache.z1);
    cache.a1.reshape(cache.z1.rows, cache.z1.cols);
    for (std::size_t i = 0; i < cache.z1.size(); ++i) cache.a1.data[i] = gelu(cache.z1.data[i]);
    linear(p.fc2, cache.a1, out);
}

void feed_forward_backward(const FeedForwardParams& p, const FfCache& cache, const Matrix& d_out,
                           FeedForwardParams& g, Matrix& d_x) {
    Matrix& d_a1 = scratch(0);
    matmul_tn_acc(cache.a1, d_out, g.fc2.w);
    add_col_sums(d_out, g.fc2.b);
    matmul_nt(d_out, p.fc2.w, d_a1);
    for (std::size_t i = 0; i < d_a1.size(); ++i) d_a1.data[i] *= gelu_grad(cache.z1.data[i]);
    linear_backward(p.fc1, cache.in, d_a1, g.fc1, &d_x);
}

void apply_dropout(Matrix& x, const ForwardOpts& opts, DropoutCache& cache) {
    cache.mask.clear();
    if (opts.mode != Mode::Train || opts.dropout <= 0.0) return;
    if (!opts.rng) throw std::invalid_argument("dropout in train mode needs an rng");
    const double keep = 1.0 - opts.dropout;
    const double scale = 1.0 / keep;
    cache.mask.resize(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double m = opts.rng->uniform() < keep ? scale : 0.0;
        cache.mask[i] = m;
        x.data[i] *= m;
    }
}

void dropout_backward(const DropoutCache& cache, Matrix& d) {
    if (cache.mask.empty()) return;
    for (std::size_t i = 0; i < d.size(); ++i) d.data[i] *= cache.mask[i];
}

// Multi-head attention. kv may alias in_q (self-attention) or be the
// encoder memory (cross-attention). No masking anywhere: all sequences are
// fixed-length and fully visible.
void attention(const AttentionParams& p, int n_heads, const Matrix& in_q, const Matrix& kv,
               AttnCache& cache, Matrix& out) {
    cache.in_q = in_q;
    linear(p.q, in_q, cache.q);
    linear(p.k, kv, cache.k);
    linear(p.v, kv, cache.v);
    const int nq = cache.q.rows, nkv = cache.k.rows, d = cache.q.cols;
    const int hd = d / n_heads;
    const double scale = 1.0 / std::sqrt(static_cast<double>(hd));

    cache.probs.reshape(n_heads * nq, nkv);
    cache.concat.reshape(nq, d);

    // Per-head K and V transposed to hd x nkv so every inner loop runs
    // unit-stride along the token axis.
    Matrix& kt = scratch(18);
    Matrix& vt = scratch(19);
    kt.reshape(hd, nkv);
    vt.reshape(hd, nkv);
    for (int h = 0; h < n_heads; ++h) {
        const int off = h * hd;
        for (int dd = 0; dd < hd; ++dd) {
            double* ktr = kt.row(dd);
            double* vtr = vt.row(dd);
            for (int j = 0; j < nkv; ++j) {
                ktr[j] = cache.k(j, off + dd);
                vtr[j] = cache.v(j, off + dd);
            }
        }
        for (int i = 0; i < nq; ++i) {
            double* prow = cache.probs.row(h * nq + i);
            const double* qrow = cache.q.row(i) + off;
            std::fill(prow, prow + nkv, 0.0);
            for (int dd = 0; dd < hd; ++dd) axpy(scale * qrow[dd], kt.row(dd), prow, nkv);
            double mx = prow[0];
            for (int j = 1; j < nkv; ++j) mx = std::max(mx, prow[j]);
            double sum = 0.0;
            for (int j = 0; j < nkv; ++j) {
                prow[j] = fast_exp(prow[j] - mx);
                sum += prow[j];
            }
            const double inv = 1.0 / sum;
            for (int j = 0; j < nkv; ++j) prow[j] *= inv;
            double* orow = cache.concat.row(i) + off;
            for (int dd = 0; dd < hd; ++dd) orow[dd] = dot(prow, vt.row(dd), nkv);
        }
    }
    linear(p.out, cache.concat, out);
}

// d_in_q and d_in_kv accumulate; pass d_in_kv = nullptr to stop the gradient
// at the key/value input (frozen-memory case). For self-attention call with
// d_in_kv == d_in_q.
void attention_backward(const AttentionParams& p, int n_heads, const Matrix& kv,
                        const AttnCache& cache, const Matrix& d_out, AttentionParams& g,
                        Matrix* d_in_q, Matrix* d_in_kv) {
    const int nq = cache.q.rows, nkv = cache.k.rows, d = cache.q.cols;
    const int hd = d / n_heads;
    const double scale = 1.0 / std::sqrt(static_cast<double>(hd));

    Matrix& d_concat = scratch(1);
    matmul_tn_acc(cache.concat, d_out, g.out.w);
    add_col_sums(d_out, g.out.b);
    matmul_nt(d_out, p.out.w, d_concat);

    Matrix& dq = scratch_zeroed(2, nq, d);
    Matrix& dk = scratch(3);
    Matrix& dv = scratch(4);
    dk.reshape(nkv, d);
    dv.reshape(nkv, d);
    Matrix& kt = scratch(18);
    Matrix& vt = scratch(19);
    Matrix& dkt = scratch(20);
    Matrix& dvt = scratch(21);
    kt.reshape(hd, nkv);
    vt.reshape(hd, nkv);
    thread_local std::vector<double> dp, ds;
    dp.resize(nkv);
    ds.resize(nkv);
    for (int h = 0; h < n_heads; ++h) {
        const int off = h * hd;
        for (int dd = 0; dd < hd; ++dd) {
            double* ktr = kt.row(dd);
            double* vtr = vt.row(dd);
            for (int j = 0; j < nkv; ++j) {
                ktr[j] = cache.k(j, off + dd);
                vtr[j] = cache.v(j, off + dd);
            }
        }
        dkt.reshape(hd, nkv);
        dvt.reshape(hd, nkv);
        dkt.zero();
        dvt.zero();
        for (int i = 0; i < nq; ++i) {
            const double* prow = cache.probs.row(h * nq + i);
            const double* do_row = d_concat.row(i) + off;
            // dP = dO V^T ; dV += P^T dO
            std::fill(dp.begin(), dp.end(), 0.0);
            for (int dd = 0; dd < hd; ++dd) {
                axpy(do_row[dd], vt.row(dd), dp.data(), nkv);
                axpy(do_row[dd], prow, dvt.row(dd), nkv);
            }
            double dot_pp = dot(dp.data(), prow, nkv);
            // softmax backward, then the 1/sqrt(hd) score scale
            for (int j = 0; j < nkv; ++j) ds[j] = prow[j] * (dp[j] - dot_pp) * scale;
            double* dq_row = dq.row(i) + off;
            const double* q_row = cache.q.row(i) + off;
            for (int dd = 0; dd < hd; ++dd) {
                dq_row[dd] = dot(ds.data(), kt.row(dd), nkv);
                axpy(q_row[dd], ds.data(), dkt.row(dd), nkv);
            }
        }
        for (int dd = 0; dd < hd; ++dd) {
            const double* dktr = dkt.row(dd);
            const double* dvtr = dvt.row(dd);
            for (int j = 0; j < nkv; ++j) {
                dk(j, off + dd) = dktr[j];
                dv(j, off + dd) = dvtr[j];
            }
        }
    }
    linear_backward(p.q, cache.in_q, dq, g.q, d_in_q);
    linear_backward(p.k, kv, dk, g.k, d_in_kv);
    linear_backward(p.v, kv, dv, g.v, d_in_kv);
}

}  // namespace

Matrix make_positional(const UetdConfig& config) {
    return positional_encoding(config.n_tokens, config.model_dim);
}

void encode(const UetdWeights& w, const Matrix& tokens, const Matrix& pe, const ForwardOpts& opts,
            EncodeCache& cache) {
    const auto& cfg = w.config;
    if (tokens.rows != cfg.n_tokens || tokens.cols != cfg.token_dim)
        throw std::invalid_argument("encode: token shape does not match config");

    cache.input_tokens = tokens;
    cache.layers.resize(cfg.n_layers);

    Matrix& x = scratch(8);
    linear(w.embedding, tokens, x);
    add_inplace(x, pe);
    apply_dropout(x, opts, cache.d0);

    Matrix& sub = scratch(6);
    Matrix& tmp = scratch(7);
    for (int l = 0; l < cfg.n_layers; ++l) {
        auto& lc = cache.layers[l];
        const auto& lp = w.encoder.layers[l];
        layer_norm(lp.ln1, x, lc.ln1, tmp);
        attention(lp.attn, cfg.n_heads, tmp, tmp, lc.attn, sub);
        apply_dropout(sub, opts, lc.d1);
        add_inplace(x, sub);
        layer_norm(lp.ln2, x, lc.ln2, tmp);
        feed_forward(lp.ff, tmp, lc.ff, sub);
        apply_dropout(sub, opts, lc.d2);
        add_inplace(x, sub);
    }
    layer_norm(w.encoder.final_ln, x, cache.final_ln, cache.memory);
}

void decode(const UetdWeights& w, const Matrix& memory, Branch branch, const ForwardOpts& opts,
            DecodeCache& cache) {
    const auto& cfg = w.config;
    const DecoderParams& dec = branch == Branch::Ctd ? w.ctd : w.ftd;
    if (memory.rows != cfg.n_tokens || memory.cols != cfg.model_dim)
        throw std::invalid_argument("decode: memory shape does not match config");

    cache.layers.resize(cfg.n_layers);
    Matrix& y = scratch(5);
    y = dec.queries;
    Matrix& sub = scratch(6);
    Matrix& tmp = scratch(7);
    for (int l = 0; l < cfg.n_layers; ++l) {
        auto& lc = cache.layers[l];
        const auto& lp = dec.layers[l];
        layer_norm(lp.ln1, y, lc.ln1, tmp);
        attention(lp.self_attn, cfg.n_heads, tmp, tmp, lc.self_attn, sub);
        apply_dropout(sub, opts, lc.d1);
        add_inplace(y, sub);
        layer_norm(lp.ln2, y, lc.ln2, tmp);
        attention(lp.cross_attn, cfg.n_heads, tmp, memory, lc.cross_attn, sub);
        apply_dropout(sub, opts, lc.d2);
        add_inplace(y, sub);
        layer_norm(lp.ln3, y, lc.ln3, tmp);
        feed_forward(lp.ff, tmp, lc.ff, sub);
        apply_dropout(sub, opts, lc.d3);
        add_inplace(y, sub);
    }
    layer_norm(dec.final_ln, y, cache.final_ln, cache.pre_proj);
    linear(w.projection, cache.pre_proj, cache.output);
}

void decode_backward(const UetdWeights& w, Branch branch, const Matrix& memory,
                     const DecodeCache& cache, const Matrix& d_output, UetdWeights& grads,
                     Matrix* d_memory) {
    const auto& cfg = w.config;
    const DecoderParams& dec = branch == Branch::Ctd ? w.ctd : w.ftd;
    DecoderParams& gdec = branch == Branch::Ctd ? grads.ctd : grads.ftd;

    Matrix& dy = scratch_zeroed(9, cfg.n_tokens, cfg.model_dim);
    linear_backward(w.projection, cache.pre_proj, d_output, grads.projection, nullptr);
    {
        // d(pre_proj) without touching dy's residual accumulation
        Matrix& d_pre = scratch(10);
        matmul_nt(d_output, w.projection.w, d_pre);
        layer_norm_backward(dec.final_ln, cache.final_ln, d_pre, gdec.final_ln, dy);
    }

    Matrix& dsub = scratch(11);
    for (int l = cfg.n_layers - 1; l >= 0; --l) {
        const auto& lc = cache.layers[l];
        const auto& lp = dec.layers[l];
        auto& gl = gdec.layers[l];

        dsub = dy;
        dropout_backward(lc.d3, dsub);
        {
            Matrix& d_ffin = scratch_zeroed(12, cfg.n_tokens, cfg.model_dim);
            feed_forward_backward(lp.ff, lc.ff, dsub, gl.ff, d_ffin);
            layer_norm_backward(lp.ln3, lc.ln3, d_ffin, gl.ln3, dy);
        }

        dsub = dy;
        dropout_backward(lc.d2, dsub);
        {
            Matrix& d_cin = scratch_zeroed(12, cfg.n_tokens, cfg.model_dim);
            attention_backward(lp.cross_attn, cfg.n_heads, memory, lc.cross_attn, dsub, gl.cross_attn,
                               &d_cin, d_memory);
            layer_norm_backward(lp.ln2, lc.ln2, d_cin, gl.ln2, dy);
        }

        dsub = dy;
        dropout_backward(lc.d1, dsub);
        {
            Matrix& d_sin = scratch_zeroed(12, cfg.n_tokens, cfg.model_dim);
            attention_backward(lp.self_attn, cfg.n_heads, lc.self_attn.in_q, lc.self_attn, dsub,
                               gl.self_attn, &d_sin, &d_sin);
            layer_norm_backward(lp.ln1, lc.ln1, d_sin, gl.ln1, dy);
        }
    }
    add_inplace(gdec.queries, dy);
}

void encode_backward(const UetdWeights& w, const EncodeCache& cache, const Matrix& d_memory,
                     UetdWeights& grads) {
    const auto& cfg = w.config;
    Matrix& dx = scratch_zeroed(13, cfg.n_tokens, cfg.model_dim);
    layer_norm_backward(w.encoder.final_ln, cache.final_ln, d_memory, grads.encoder.final_ln, dx);

    Matrix& dsub = scratch(14);
    for (int l = cfg.n_layers - 1; l >= 0; --l) {
        const auto& lc = cache.layers[l];
        const auto& lp = w.encoder.layers[l];
        auto& gl = grads.encoder.layers[l];

        dsub = dx;
        dropout_backward(lc.d2, dsub);
        {
            Matrix& d_ffin = scratch_zeroed(15, cfg.n_tokens, cfg.model_dim);
            feed_forward_backward(lp.ff, lc.ff, dsub, gl.ff, d_ffin);
            layer_norm_backward(lp.ln2, lc.ln2, d_ffin, gl.ln2, dx);
        }

        dsub = dx;
        dropout_backward(lc.d1, dsub);
        {
            Matrix& d_ain = scratch_zeroed(15, cfg.n_tokens, cfg.model_dim);
            attention_backward(lp.attn, cfg.n_heads, lc.attn.in_q, lc.attn, dsub, gl.attn, &d_ain,
                               &d_ain);
            layer_norm_backward(lp.ln1, lc.ln1, d_ain, gl.ln1, dx);
        }
    }
    dropout_backward(cache.d0, dx);
    linear_backward(w.embedding, cache.input_tokens, dx, grads.embedding, nullptr);
}

Matrix encode_eval(const UetdWeights& w, const Matrix& tokens, const Matrix& pe) {
    thread_local EncodeCache cache;
    encode(w, tokens, pe, ForwardOpts{}, cache);
    return cache.memory;
}

Matrix decode_eval(const UetdWeights& w, const Matrix& memory, Branch branch) {
    thread_local DecodeCache cache;
    decode(w, memory, branch, ForwardOpts{}, cache);
    return cache.output;
}

double mse_loss(const Matrix& generated, const Matrix& target) {
    if (!generated.same_shape(target))
        throw std::invalid_argument("mse_loss: shape mismatch");
    double s = 0.0;
    for (std::size_t i = 0; i < generated.size(); ++i) {
        const double d = generated.data[i] - target.data[i];
        s += d * d;
    }
    return s / static_cast<double>(generated.size());
}

double branch_loss(const UetdWeights& w, const Matrix& input_tokens, const Matrix& target_tokens,
                   Branch branch, const Matrix& pe, const ForwardOpts& opts, UetdWeights* grads,
                   bool backprop_encoder) {
    thread_local EncodeCache ec;
    thread_local DecodeCache dc;
    encode(w, input_tokens, pe, opts, ec);
    decode(w, ec.memory, branch, opts, dc);
    const double loss = mse_loss(dc.output, target_tokens);
    if (grads) {
        Matrix& d_out = scratch(16);
        d_out.reshape(dc.output.rows, dc.output.cols);
        const double c = 2.0 / static_cast<double>(dc.output.size());
        for (std::size_t i = 0; i < dc.output.size(); ++i)
            d_out.data[i] = c * (dc.output.data[i] - target_tokens.data[i]);
        Matrix& d_memory = scratch_zeroed(17, ec.memory.rows, ec.memory.cols);
        decode_backward(w, branch, ec.memory, dc, d_out, *grads,
                        backprop_encoder ? &d_memory : nullptr);
        if (backprop_encoder) encode_backward(w, ec, d_memory, *grads);
    }
    return loss;
}

double decoder_loss(const UetdWeights& w, const Matrix& memory, const Matrix& target_tokens,
                    Branch branch, const ForwardOpts& opts, UetdWeights* grads) {
    thread_local DecodeCache dc;
    decode(w, memory, branch, opts, dc);
    const double loss = mse_loss(dc.output, target_tokens);
    if (grads) {
        Matrix& d_out = scratch(16);
        d_out.reshape(dc.output.rows, dc.output.cols);
        const double c = 2.0 / static_cast<double>(dc.output.size());
        for (std::size_t i = 0; i < dc.output.size(); ++i)
            d_out.data[i] = c * (dc.output.data[i] - target_tokens.data[i]);
        decode_backward(w, branch, memory, dc, d_out, *grads, nullptr);
    }
    return loss;
}

}  // namespace posewatch::uetd
