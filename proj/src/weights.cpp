#include "posewatch/uetd/weights.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

#include "posewatch/rng.hpp"

namespace posewatch::uetd {

void UetdConfig::validate() const {
    if (n_heads < 1) throw std::invalid_argument("config: n_heads must be >= 1");
    if (n_layers < 1) throw std::invalid_argument("config: n_layers must be >= 1");
    if (ff_dim < 1) throw std::invalid_argument("config: ff_dim must be >= 1");
    if (model_dim < 1) throw std::invalid_argument("config: model_dim must be >= 1");
    if (model_dim % n_heads != 0)
        throw std::invalid_argument("config: model_dim must be divisible by n_heads");
    if (model_dim % 2 != 0)
        throw std::invalid_argument("config: model_dim must be even for positional encoding");
    if (token_dim < 1) throw std::invalid_argument("config: token_dim must be >= 1");
    if (n_tokens < 1) throw std::invalid_argument("config: n_tokens must be >= 1");
    if (dropout < 0.0 || dropout >= 1.0) throw std::invalid_argument("config: dropout must be in [0, 1)");
}

std::string UetdConfig::to_text() const {
    std::ostringstream ss;
    ss << "n_heads=" << n_heads << "\nn_layers=" << n_layers << "\nff_dim=" << ff_dim
       << "\nmodel_dim=" << model_dim << "\ntoken_dim=" << token_dim << "\nn_tokens=" << n_tokens
       << "\ndropout=" << dropout << "\n";
    return ss.str();
}

UetdConfig UetdConfig::from_text(const std::string& text) {
    UetdConfig c;
    std::istringstream ss(text);
    std::string line;
    while (std::getline(ss, line)) {
        const auto eq = line.find('=');
        if (eq == std::string::npos) continue;
        const std::string key = line.substr(0, eq);
        const std::string val = line.substr(eq + 1);
        if (key == "n_heads") c.n_heads = std::stoi(val);
        else if (key == "n_layers") c.n_layers = std::stoi(val);
        else if (key == "ff_dim") c.ff_dim = std::stoi(val);
        else if (key == "model_dim") c.model_dim = std::stoi(val);
        else if (key == "token_dim") c.token_dim = std::stoi(val);
        else if (key == "n_tokens") c.n_tokens = std::stoi(val);
        else if (key == "dropout") c.dropout = std::stod(val);
        else throw std::runtime_error("unknown config key in checkpoint: " + key);
    }
    return c;
}

void TrainConfig::validate() const {
    if (learning_rate <= 0.0) throw std::invalid_argument("train config: learning_rate must be > 0");
    if (batch_size < 1) throw std::invalid_argument("train config: batch_size must be >= 1");
    if (epochs < 1) throw std::invalid_argument("train config: epochs must be >= 1");
    if (weight_decay < 0.0) throw std::invalid_argument("train config: weight_decay must be >= 0");
    if (dropout < 0.0 || dropout >= 1.0) throw std::invalid_argument("train config: dropout must be in [0, 1)");
    if (grad_chunks < 1) throw std::invalid_argument("train config: grad_chunks must be >= 1");
    if (threads < 0) throw std::invalid_argument("train config: threads must be >= 0");
}

namespace {

void init_linear(LinearParams& l, int in, int out, Rng& rng) {
    l.w.reshape(in, out);
    const double a = std::sqrt(6.0 / (in + out));
    for (auto& v : l.w.data) v = rng.uniform(-a, a);
    l.b = Matrix(1, out, 0.0);
}

void init_ln(LayerNormParams& l, int dim) {
    l.gamma = Matrix(1, dim, 1.0);
    l.beta = Matrix(1, dim, 0.0);
}

void init_attn(AttentionParams& a, int dim, Rng& rng) {
    init_linear(a.q, dim, dim, rng);
    init_linear(a.k, dim, dim, rng);
    init_linear(a.v, dim, dim, rng);
    init_linear(a.out, dim, dim, rng);
}

void init_ff(FeedForwardParams& ff, int dim, int ff_dim, Rng& rng) {
    init_linear(ff.fc1, dim, ff_dim, rng);
    init_linear(ff.fc2, ff_dim, dim, rng);
}

}  // namespace

UetdWeights init_model(const UetdConfig& config, std::uint64_t seed) {
    config.validate();
    Rng rng(Rng::mix(seed, 0x7031c0de));
    UetdWeights w;
    w.config = config;
    const int d = config.model_dim;

    init_linear(w.embedding, config.token_dim, d, rng);
    init_linear(w.projection, d, config.token_dim, rng);

    w.encoder.layers.resize(config.n_layers);
    for (auto& l : w.encoder.layers) {
        init_ln(l.ln1, d);
        init_attn(l.attn, d, rng);
        init_ln(l.ln2, d);
        init_ff(l.ff, d, config.ff_dim, rng);
    }
    init_ln(w.encoder.final_ln, d);

    for (DecoderParams* dec : {&w.ctd, &w.ftd}) {
        dec->queries.reshape(config.n_tokens, d);
        const double a = std::sqrt(3.0 / d);
        for (auto& v : dec->queries.data) v = rng.uniform(-a, a);
        dec->layers.resize(config.n_layers);
        for (auto& l : dec->layers) {
            init_ln(l.ln1, d);
            init_attn(l.self_attn, d, rng);
            init_ln(l.ln2, d);
            init_attn(l.cross_attn, d, rng);
            init_ln(l.ln3, d);
            init_ff(l.ff, d, config.ff_dim, rng);
        }
        init_ln(dec->final_ln, d);
    }
    return w;
}

UetdWeights zeros_like(const UetdWeights& w) {
    UetdWeights z = w;
    z.visit([](const std::string&, Matrix& m) { m.zero(); });
    return z;
}

long param_count(const UetdWeights& w) {
    long n = 0;
    w.visit([&](const std::string&, const Matrix& m) { n += static_cast<long>(m.size()); });
    return n;
}

}  // namespace posewatch::uetd
