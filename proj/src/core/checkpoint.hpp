#pragma once

#include <string>

#include "model.hpp"

namespace dira {

inline constexpr char kModelMagic[4] = {'D', 'I', 'R', 'A'};

/// .dira files: self-describing model checkpoints (spec text + parameters).
/// Round trips are bit-exact.
void save_model(const Model& model, const std::string& path);
Model load_model(const std::string& path);

}  // namespace dira
