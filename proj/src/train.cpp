#include "posewatch/uetd/train.hpp"

#include <atomic>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <thread>

namespace posewatch::uetd {

namespace {

constexpr double kAdamBeta1 = 0.9;
constexpr double kAdamBeta2 = 0.999;
constexpr double kAdamEps = 1e-8;

struct Adam {
    std::vector<Matrix*> params;
    std::vector<Matrix*> grads;
    std::vector<char> trainable;
    std::vector<Matrix> m, v;
    long step_count = 0;

    // `ftd_only` freezes everything outside the FTD decoder.
    Adam(UetdWeights& w, UetdWeights& g, bool ftd_only) {
        w.visit([&](const std::string& name, Matrix& mat) {
            params.push_back(&mat);
            trainable.push_back(ftd_only ? name.rfind("ftd.", 0) == 0 : 1);
        });
        g.visit([&](const std::string&, Matrix& mat) { grads.push_back(&mat); });
        m.reserve(params.size());
        v.reserve(params.size());
        for (const auto* p : params) {
            m.emplace_back(p->rows, p->cols);
            v.emplace_back(p->rows, p->cols);
        }
    }

    void step(double lr, double weight_decay) {
        ++step_count;
        const double bc1 = 1.0 - std::pow(kAdamBeta1, static_cast<double>(step_count));
        const double bc2 = 1.0 - std::pow(kAdamBeta2, static_cast<double>(step_count));
        for (std::size_t i = 0; i < params.size(); ++i) {
            if (!trainable[i]) continue;
            Matrix& p = *params[i];
            const Matrix& g = *grads[i];
            for (std::size_t j = 0; j < p.size(); ++j) {
                const double grad = g.data[j] + weight_decay * p.data[j];
                m[i].data[j] = kAdamBeta1 * m[i].data[j] + (1.0 - kAdamBeta1) * grad;
                v[i].data[j] = kAdamBeta2 * v[i].data[j] + (1.0 - kAdamBeta2) * grad * grad;
                const double mhat = m[i].data[j] / bc1;
                const double vhat = v[i].data[j] / bc2;
                p.data[j] -= lr * mhat / (std::sqrt(vhat) + kAdamEps);
            }
        }
    }
};

void scale_grads(UetdWeights& g, double s) {
    g.visit([&](const std::string&, Matrix& m) {
        for (auto& x : m.data) x *= s;
    });
}

// The future stage only ever writes future-decoder and projection
// gradients; skipping the rest keeps the per-batch bookkeeping cheap.
std::vector<char> written_mask(const UetdWeights& w, bool ftd_only) {
    std::vector<char> mask;
    w.visit([&](const std::string& name, const Matrix&) {
        mask.push_back(!ftd_only || name.rfind("ftd.", 0) == 0 || name.rfind("proj.", 0) == 0);
    });
    return mask;
}

void zero_masked(UetdWeights& g, const std::vector<char>& mask) {
    std::size_t i = 0;
    g.visit([&](const std::string&, Matrix& m) {
        if (mask[i++]) m.zero();
    });
}

void add_grads(UetdWeights& into, const UetdWeights& from, const std::vector<char>& mask) {
    std::vector<const Matrix*> src;
    from.visit([&](const std::string&, const Matrix& m) { src.push_back(&m); });
    std::size_t i = 0;
    into.visit([&](const std::string&, Matrix& m) {
        if (mask[i]) add_inplace(m, *src[i]);
        ++i;
    });
}

// Runs fn(sample_index) over [begin, end) split into tc.grad_chunks fixed
// slices; per-slice results land in chunk-indexed buffers so the reduction
// order never depends on thread scheduling.
template <typename Fn>
void for_chunks(int begin, int end, const TrainConfig& tc, Fn&& per_chunk) {
    const int n = end - begin;
    const int chunks = std::min(tc.grad_chunks, std::max(1, n));
    int hw = tc.threads > 0 ? tc.threads : static_cast<int>(std::thread::hardware_concurrency());
    if (hw < 1) hw = 1;
    const int n_threads = std::min(hw, chunks);

    auto chunk_range = [&](int c) {
        const int lo = begin + static_cast<int>(static_cast<long>(n) * c / chunks);
        const int hi = begin + static_cast<int>(static_cast<long>(n) * (c + 1) / chunks);
        return std::pair<int, int>(lo, hi);
    };

    if (n_threads <= 1) {
        for (int c = 0; c < chunks; ++c) {
            const auto [lo, hi] = chunk_range(c);
            per_chunk(c, lo, hi);
        }
        return;
    }
    std::atomic<int> next{0};
    std::vector<std::thread> workers;
    workers.reserve(n_threads);
    for (int t = 0; t < n_threads; ++t) {
        workers.emplace_back([&]() {
            for (int c = next.fetch_add(1); c < chunks; c = next.fetch_add(1)) {
                const auto [lo, hi] = chunk_range(c);
                per_chunk(c, lo, hi);
            }
        });
    }
    for (auto& w : workers) w.join();
}

struct EpochStats {
    double loss_sum = 0.0;
    long samples = 0;
};

// One optimizer pass over the dataset. sample_loss(i, rng_seed, grads) must
// run forward+backward for dataset item `order[i]`.
template <typename SampleFn>
EpochStats run_epoch(int epoch, const std::vector<int>& order, const TrainConfig& tc, Adam& adam,
                     UetdWeights& grads, std::vector<UetdWeights>& chunk_grads,
                     const std::vector<char>& mask, SampleFn&& sample_loss, double lr) {
    EpochStats stats;
    const int n = static_cast<int>(order.size());
    const int chunks = static_cast<int>(chunk_grads.size());
    std::vector<double> chunk_loss(chunks);

    for (int batch_start = 0; batch_start < n; batch_start += tc.batch_size) {
        const int batch_end = std::min(n, batch_start + tc.batch_size);
        const int batch_n = batch_end - batch_start;

        for (int c = 0; c < chunks; ++c) {
            zero_masked(chunk_grads[c], mask);
            chunk_loss[c] = 0.0;
        }
        for_chunks(batch_start, batch_end, tc, [&](int c, int lo, int hi) {
            for (int i = lo; i < hi; ++i) {
                const int sample = order[i];
                chunk_loss[c] += sample_loss(sample, Rng::mix(tc.seed, epoch, sample), chunk_grads[c]);
            }
        });

        zero_masked(grads, mask);
        double batch_loss = 0.0;
        for (int c = 0; c < static_cast<int>(chunk_grads.size()); ++c) {
            add_grads(grads, chunk_grads[c], mask);
            batch_loss += chunk_loss[c];
        }
        if (!std::isfinite(batch_loss))
            throw std::runtime_error("training aborted: non-finite loss at epoch " +
                                     std::to_string(epoch) + " (reduce the learning rate)");
        scale_grads(grads, 1.0 / batch_n);
        adam.step(lr, tc.weight_decay);

        stats.loss_sum += batch_loss;
        stats.samples += batch_n;
    }
    return stats;
}

template <typename SampleFn>
TrainResult train_loop(UetdWeights weights, long n_samples, const TrainConfig& tc, bool ftd_only,
                       SampleFn&& make_sample_fn) {
    tc.validate();
    UetdWeights grads = zeros_like(weights);
    const int chunks = std::min<long>(tc.grad_chunks, std::max<long>(1, n_samples));
    std::vector<UetdWeights> chunk_grads(chunks, grads);
    Adam adam(weights, grads, ftd_only);
    const std::vector<char> mask = written_mask(weights, ftd_only);

    std::vector<int> order(n_samples);
    std::iota(order.begin(), order.end(), 0);

    TrainResult res;
    res.best_loss = std::numeric_limits<double>::infinity();
    for (int epoch = 0; epoch < tc.epochs; ++epoch) {
        Rng shuffle_rng(Rng::mix(tc.seed, 0x5c0ff1eull, epoch));
        shuffle(order, shuffle_rng);
        auto sample_fn = make_sample_fn(weights);
        const EpochStats stats =
            run_epoch(epoch, order, tc, adam, grads, chunk_grads, mask, sample_fn, tc.learning_rate);
        const double epoch_loss = stats.loss_sum / stats.samples;
        res.epoch_losses.push_back(epoch_loss);
        if (epoch_loss < res.best_loss) {
            res.best_loss = epoch_loss;
            res.best_epoch = epoch;
            res.weights = weights;
        }
    }
    return res;
}

}  // namespace

TrainResult train_ctd(const std::vector<Matrix>& token_windows, const UetdConfig& config,
                      const TrainConfig& tc) {
    if (token_windows.empty()) throw std::invalid_argument("train_ctd: empty dataset");
    config.validate();
    for (const auto& t : token_windows)
        if (t.rows != config.n_tokens || t.cols != config.token_dim)
            throw std::invalid_argument("train_ctd: token window shape does not match config");

    UetdWeights weights = init_model(config, tc.seed);
    const Matrix pe = make_positional(config);

    return train_loop(std::move(weights), static_cast<long>(token_windows.size()), tc, false,
                      [&](const UetdWeights& w) {
                          return [&](int sample, std::uint64_t rng_seed, UetdWeights& g) {
                              Rng rng(rng_seed);
                              ForwardOpts opts{Mode::Train, tc.dropout, &rng};
                              return branch_loss(w, token_windows[sample], token_windows[sample],
                                                 Branch::Ctd, pe, opts, &g);
                          };
                      });
}

TrainResult train_ftd(const std::vector<Matrix>& token_windows,
                      const std::vector<std::pair<int, int>>& pairs, const UetdWeights& pretrained,
                      const TrainConfig& tc) {
    if (pairs.empty()) throw std::invalid_argument("train_ftd: empty pair set");
    const auto& config = pretrained.config;
    const Matrix pe = make_positional(config);

    // The encoder is frozen and runs deterministically, so each distinct
    // prev window is encoded exactly once.
    std::vector<int> memory_index(token_windows.size(), -1);
    std::vector<Matrix> memories;
    for (const auto& [prev, next] : pairs) {
        if (prev < 0 || next < 0 || prev >= static_cast<int>(token_windows.size()) ||
            next >= static_cast<int>(token_windows.size()))
            throw std::invalid_argument("train_ftd: pair index out of range");
        if (memory_index[prev] < 0) {
            memory_index[prev] = static_cast<int>(memories.size());
            memories.push_back(encode_eval(pretrained, token_windows[prev], pe));
        }
    }

    return train_loop(pretrained, static_cast<long>(pairs.size()), tc, true,
                      [&](const UetdWeights& w) {
                          return [&](int sample, std::uint64_t rng_seed, UetdWeights& g) {
                              Rng rng(rng_seed);
                              ForwardOpts opts{Mode::Train, tc.dropout, &rng};
                              const auto& [prev, next] = pairs[sample];
                              return decoder_loss(w, memories[memory_index[prev]],
                                                  token_windows[next], Branch::Ftd, opts, &g);
                          };
                      });
}

}  // namespace posewatch::uetd
