#pragma once

#include <utility>
#include <vector>

#include "posewatch/uetd/model.hpp"

namespace posewatch::uetd {

struct TrainResult {
    UetdWeights weights;  // snapshot of the lowest-loss epoch
    std::vector<double> epoch_losses;
    int best_epoch = -1;
    double best_loss = 0.0;
};

// Stage one: reconstruction. Trains embedding, encoder, CTD decoder and the
// output projection with Adam to minimize the MSE between decoded and input
// tokens. Deterministic for a fixed (config, train config): batch shuffling,
// dropout and gradient-chunk reduction order are all seed-derived. Throws on
// an empty dataset and aborts on a non-finite loss.
TrainResult train_ctd(const std::vector<Matrix>& token_windows, const UetdConfig& config,
                      const TrainConfig& tc);

// Stage two: future prediction. `pairs` are (prev, next) indices into
// `token_windows`, each next window starting exactly beta frames after prev.
// The encoder, embedding, projection and CTD parameters stay bit-identical;
// only the FTD decoder and its queries update. The frozen encoder runs in
// eval mode, so every prev window's memory is computed once up front.
TrainResult train_ftd(const std::vector<Matrix>& token_windows,
                      const std::vector<std::pair<int, int>>& pairs, const UetdWeights& pretrained,
                      const TrainConfig& tc);

}  // namespace posewatch::uetd
