#pragma once

#include <string>

#include "posewatch/uetd/weights.hpp"

namespace posewatch::uetd {

// Versioned binary container: magic, config text, named parameter blocks,
// FNV-1a checksum over the payload. Loading validates the checksum and every
// block shape against the config.
void save_checkpoint(const std::string& path, const UetdWeights& w);
UetdWeights load_checkpoint(const std::string& path);

}  // namespace posewatch::uetd
