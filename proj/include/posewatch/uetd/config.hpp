#pragma once

#include <cstdint>
#include <string>

namespace posewatch::uetd {

// Architecture of the shared encoder and twin decoders. Defaults are the
// ST-PRP configuration: 12 heads, 4 layers, feed-forward width 64; the
// 72-wide embedding is the smallest multiple of 12 that fits ST-PRP's
// 68-value tokens.
struct UetdConfig {
    int n_heads = 12;
    int n_layers = 4;
    int ff_dim = 64;
    int model_dim = 72;
    int token_dim = 68;   // from the tokenization scheme
    int n_tokens = 24;    // from the tokenization scheme
    double dropout = 0.1;

    int head_dim() const { return model_dim / n_heads; }

    // Throws std::invalid_argument on an inconsistent configuration.
    void validate() const;

    std::string to_text() const;
    static UetdConfig from_text(const std::string& text);

    bool operator==(const UetdConfig&) const = default;
};

// One training stage (the two branches train separately, with their own
// batch sizes and learning rates).
struct TrainConfig {
    double learning_rate = 1e-5;
    int batch_size = 512;
    int epochs = 30;
    double weight_decay = 5e-5;
    double dropout = 0.1;
    std::uint64_t seed = 0;
    int threads = 0;      // 0 = hardware concurrency
    int grad_chunks = 8;  // fixed count so batch reduction order never varies; 1 = strictly sequential

    void validate() const;
};

}  // namespace posewatch::uetd
