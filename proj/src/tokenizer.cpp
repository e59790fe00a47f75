#include "posewatch/tokenizer.hpp"

#include <cmath>
#include <cstdio>
#include <ostream>
#include <stdexcept>

#include "posewatch/pose_io.hpp"

namespace posewatch {

std::string scheme_name(Scheme s) {
    switch (s) {
        case Scheme::StPrp: return "st-prp";
        case Scheme::TPrp: return "t-prp";
        case Scheme::KsPrp: return "ks-prp";
        case Scheme::FsPrp: return "fs-prp";
    }
    return "?";
}

Scheme scheme_from_name(const std::string& name) {
    if (name == "st-prp") return Scheme::StPrp;
    if (name == "t-prp") return Scheme::TPrp;
    if (name == "ks-prp") return Scheme::KsPrp;
    if (name == "fs-prp") return Scheme::FsPrp;
    throw std::invalid_argument("unknown tokenization scheme: " + name);
}

TokenShape token_shape(const TokenizationScheme& scheme, int beta, int k) {
    if (beta < 2 || beta % 2 != 0) throw std::invalid_argument("token_shape: beta must be even and >= 2");
    if (k < 1) throw std::invalid_argument("token_shape: k must be >= 1");
    const int rel = scheme.use_relative ? 2 : 1;
    switch (scheme.scheme) {
        case Scheme::StPrp: return {beta, rel * 2 * k};
        case Scheme::TPrp: return {beta, rel * 2 * k};
        case Scheme::KsPrp: return {k, rel * 2 * beta};
        case Scheme::FsPrp: return {2 * k, rel * beta};
    }
    throw std::invalid_argument("token_shape: bad scheme");
}

namespace {

void fill_st_prp(const PoseWindow& w, bool rel, Matrix& tok) {
    const int k = w.k, half = w.beta / 2;
    for (int j = 0; j < half; ++j) {
        const int f0 = 2 * j, f1 = 2 * j + 1;
        double* x_tok = tok.row(j);
        double* y_tok = tok.row(half + j);
        for (int kp = 0; kp < k; ++kp) {
            x_tok[kp] = w.abs_x(f0, kp);
            x_tok[k + kp] = w.abs_x(f1, kp);
            y_tok[kp] = w.abs_y(f0, kp);
            y_tok[k + kp] = w.abs_y(f1, kp);
            if (rel) {
                x_tok[2 * k + kp] = w.rel_x(f0, kp);
                x_tok[3 * k + kp] = w.rel_x(f1, kp);
                y_tok[2 * k + kp] = w.rel_y(f0, kp);
                y_tok[3 * k + kp] = w.rel_y(f1, kp);
            }
        }
    }
}

void fill_t_prp(const PoseWindow& w, bool rel, Matrix& tok) {
    const int k = w.k;
    for (int t = 0; t < w.beta; ++t) {
        double* row = tok.row(t);
        for (int kp = 0; kp < k; ++kp) {
            row[kp] = w.abs_x(t, kp);
            row[k + kp] = w.abs_y(t, kp);
            if (rel) {
                row[2 * k + kp] = w.rel_x(t, kp);
                row[3 * k + kp] = w.rel_y(t, kp);
            }
        }
    }
}

void fill_ks_prp(const PoseWindow& w, bool rel, Matrix& tok) {
    const int b = w.beta;
    for (int kp = 0; kp < w.k; ++kp) {
        double* row = tok.row(kp);
        for (int t = 0; t < b; ++t) {
            row[t] = w.abs_x(t, kp);
            row[b + t] = w.abs_y(t, kp);
            if (rel) {
                row[2 * b + t] = w.rel_x(t, kp);
                row[3 * b + t] = w.rel_y(t, kp);
            }
        }
    }
}

void fill_fs_prp(const PoseWindow& w, bool rel, Matrix& tok) {
    const int b = w.beta;
    for (int kp = 0; kp < w.k; ++kp) {
        double* x_tok = tok.row(kp);
        double* y_tok = tok.row(w.k + kp);
        for (int t = 0; t < b; ++t) {
            x_tok[t] = w.abs_x(t, kp);
            y_tok[t] = w.abs_y(t, kp);
            if (rel) {
                x_tok[b + t] = w.rel_x(t, kp);
                y_tok[b + t] = w.rel_y(t, kp);
            }
        }
    }
}

}  // namespace

TokenSequence tokenize(const PoseWindow& window, const TokenizationScheme& scheme) {
    const TokenShape shape = token_shape(scheme, window.beta, window.k);
    TokenSequence seq;
    seq.scheme = scheme;
    seq.video_id = window.video_id;
    seq.person_id = window.person_id;
    seq.start_frame = window.start_frame;
    seq.beta = window.beta;
    seq.k = window.k;
    seq.tokens.reshape(shape.n_tokens, shape.dim);
    const bool rel = scheme.use_relative;
    switch (scheme.scheme) {
        case Scheme::StPrp: fill_st_prp(window, rel, seq.tokens); break;
        case Scheme::TPrp: fill_t_prp(window, rel, seq.tokens); break;
        case Scheme::KsPrp: fill_ks_prp(window, rel, seq.tokens); break;
        case Scheme::FsPrp: fill_fs_prp(window, rel, seq.tokens); break;
    }
    return seq;
}

PoseWindow detokenize(const TokenSequence& seq) {
    PoseWindow w;
    w.video_id = seq.video_id;
    w.person_id = seq.person_id;
    w.start_frame = seq.start_frame;
    w.beta = seq.beta;
    w.k = seq.k;
    w.absolute.reshape(seq.beta, 2 * seq.k);
    const bool rel = seq.scheme.use_relative;
    if (rel) w.relative.reshape(seq.beta, 2 * seq.k);

    const Matrix& tok = seq.tokens;
    const int k = seq.k, b = seq.beta;
    auto set_abs = [&](int t, int kp, bool is_y, double v) { w.absolute(t, (is_y ? k : 0) + kp) = v; };
    auto set_rel = [&](int t, int kp, bool is_y, double v) { w.relative(t, (is_y ? k : 0) + kp) = v; };

    switch (seq.scheme.scheme) {
        case Scheme::StPrp: {
            const int half = b / 2;
            for (int j = 0; j < half; ++j) {
                const int f0 = 2 * j, f1 = 2 * j + 1;
                for (int kp = 0; kp < k; ++kp) {
                    set_abs(f0, kp, false, tok(j, kp));
                    set_abs(f1, kp, false, tok(j, k + kp));
                    set_abs(f0, kp, true, tok(half + j, kp));
                    set_abs(f1, kp, true, tok(half + j, k + kp));
                    if (rel) {
                        set_rel(f0, kp, false, tok(j, 2 * k + kp));
                        set_rel(f1, kp, false, tok(j, 3 * k + kp));
                        set_rel(f0, kp, true, tok(half + j, 2 * k + kp));
                        set_rel(f1, kp, true, tok(half + j, 3 * k + kp));
                    }
                }
            }
            break;
        }
        case Scheme::TPrp:
            for (int t = 0; t < b; ++t)
                for (int kp = 0; kp < k; ++kp) {
                    set_abs(t, kp, false, tok(t, kp));
                    set_abs(t, kp, true, tok(t, k + kp));
                    if (rel) {
                        set_rel(t, kp, false, tok(t, 2 * k + kp));
                        set_rel(t, kp, true, tok(t, 3 * k + kp));
                    }
                }
            break;
        case Scheme::KsPrp:
            for (int kp = 0; kp < k; ++kp)
                for (int t = 0; t < b; ++t) {
                    set_abs(t, kp, false, tok(kp, t));
                    set_abs(t, kp, true, tok(kp, b + t));
                    if (rel) {
                        set_rel(t, kp, false, tok(kp, 2 * b + t));
                        set_rel(t, kp, true, tok(kp, 3 * b + t));
                    }
                }
            break;
        case Scheme::FsPrp:
            for (int kp = 0; kp < k; ++kp)
                for (int t = 0; t < b; ++t) {
                    set_abs(t, kp, false, tok(kp, t));
                    set_abs(t, kp, true, tok(k + kp, t));
                    if (rel) {
                        set_rel(t, kp, false, tok(kp, b + t));
                        set_rel(t, kp, true, tok(k + kp, b + t));
                    }
                }
            break;
    }
    if (!rel) w.relative = relative_pose(w.absolute);
    return w;
}

Matrix positional_encoding(int n_tokens, int dim) {
    if (dim <= 0 || dim % 2 != 0)
        throw std::invalid_argument("positional_encoding: dim must be positive and even");
    if (n_tokens < 0) throw std::invalid_argument("positional_encoding: n_tokens must be >= 0");
    Matrix pe(n_tokens, dim);
    for (int pos = 0; pos < n_tokens; ++pos) {
        double* row = pe.row(pos);
        for (int i = 0; i < dim; i += 2) {
            const double denom = std::pow(10000.0, static_cast<double>(i) / dim);
            row[i] = std::sin(pos / denom);
            row[i + 1] = std::cos(pos / denom);
        }
    }
    return pe;
}

TokenSequence add_positional(const TokenSequence& seq) {
    const Matrix pe = positional_encoding(seq.tokens.rows, seq.tokens.cols);
    TokenSequence out = seq;
    add_inplace(out.tokens, pe);
    return out;
}

void dump_tokens(std::ostream& out, const TokenSequence& seq) {
    out << "# tokens v1 scheme=" << scheme_name(seq.scheme.scheme)
        << " relative=" << (seq.scheme.use_relative ? 1 : 0) << " video=" << seq.video_id
        << " person=" << seq.person_id << " t0=" << seq.start_frame << " beta=" << seq.beta
        << " k=" << seq.k << " n_tokens=" << seq.tokens.rows << " dim=" << seq.tokens.cols << "\n";
    char buf[40];
    for (int i = 0; i < seq.tokens.rows; ++i) {
        const double* row = seq.tokens.row(i);
        for (int j = 0; j < seq.tokens.cols; ++j) {
            std::snprintf(buf, sizeof(buf), "%.17g", row[j]);
            if (j) out << ' ';
            out << buf;
        }
        out << "\n";
    }
}

}  // namespace posewatch
