#pragma once

#include <filesystem>
#include <map>
#include <string>

#include "tgan/models.hpp"
#include "tgan/sampler.hpp"

namespace tgan {

/// Named double tensors. On disk: a text header of "name rows cols" lines
/// closed by "end 0 0", followed by the values as little-endian doubles in
/// header order, row-major.
using TensorMap = std::map<std::string, Array2d>;

void save_tensors(const std::filesystem::path& path, const TensorMap& tensors);
TensorMap load_tensors(const std::filesystem::path& path);

/// Adds prefix.<l>.weight / prefix.<l>.bias entries.
template <typename S>
void put_params(TensorMap& out, const std::string& prefix, const MlpParams<S>& params);

/// Reads prefix.* entries back and checks them against spec; a shape mismatch
/// raises DimensionError naming the stored and expected shapes.
MlpParams<double> take_params(const TensorMap& in, const std::string& prefix, const MlpSpec& spec);

}  // namespace tgan
