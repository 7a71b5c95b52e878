#pragma once

// Binary persistence for trained networks and datasets.
//
// Weight file layout (all integers little-endian, reals IEEE f32):
//   magic "LISW" | version u32 = 1 | arch u8 (0 dncnn, 1 ffdnet)
//   | D u16 | N_f u16 | M u16 | K u16 | layer_count u16
//   then per layer:
//   kind u8 (0 conv, 1 conv+bn) | c_in u16 | c_out u16
//   | kernel f32[3][3][c_in][c_out] row-major | bias f32[c_out]
//   | (bn only) gamma, beta, running_mean, running_var f32[c_out] each
//   trailing CRC32 (u32) of every preceding byte.
//
// Dataset files use the same conventions with magic "LISD": version u32 = 1,
// M u16, K u16, n u32, then per-sample snr_db f32[n], inputs and targets
// (f32, n*M*(K+1)*2 each) and per-sample sigma f32[n], CRC32 trail.

#include <string>

#include "lisce/cnn/train.hpp"

namespace lisce::cnn {

void save_weights(const Network<float>& net, const std::string& path);
Network<float> load_weights(const std::string& path);

void save_dataset(const Dataset<float>& ds, const std::string& path);
Dataset<float> load_dataset(const std::string& path);

}  // namespace lisce::cnn
