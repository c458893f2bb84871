#pragma once

#include <string>

#include "hr/nn.hpp"

namespace hr {

/// Single-array container: UTF-8 header line
///   HRC1 <dtype> <ndims> <dim0> <dim1> ...\n
/// followed by raw little-endian row-major scalars. dtype is f32, f64 or
/// c64 (interleaved float32 pairs).
void save_f64(const std::string& path, const RArray& a);
void save_f32(const std::string& path, const RArray& a);
void save_c64(const std::string& path, const CArray& a);
RArray load_real(const std::string& path);     // f32 or f64
CArray load_complex(const std::string& path);  // c64

/// Weight checkpoint: `HRCKPT1 <entries>\n` then repeated `<name>\n` +
/// embedded f64 HRC1 blocks. Holds every named parameter, the ADAM moment
/// tensors (<name>.adam_m / .adam_v) and scalars __step, __lr, __beta1,
/// __beta2, __eps.
void save_checkpoint(const std::string& path, const std::vector<diff::ParamRef>& params,
                     const diff::AdamState& adam);
void load_checkpoint(const std::string& path, const std::vector<diff::ParamRef>& params,
                     diff::AdamState* adam);

/// Grayscale PGM (8- or 16-bit) with values windowed to [lo, hi].
void save_pgm(const std::string& path, const RArray& img, double lo, double hi, int bits = 16);

}  // namespace hr
