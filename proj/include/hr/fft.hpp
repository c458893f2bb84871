#pragma once

#include "hr/nd_array.hpp"

namespace hr {

/// In-place 2D DFT of a row-major complex buffer, sign -1 for e^{-i...}
/// (forward), +1 for the unnormalized inverse. Backed by FFTW.
void fft2_raw(cplx* data, int64_t n0, int64_t n1, int sign);

/// Unitary centered 2D FFT pair: both image and k-space indices are treated
/// as centered (index i maps to coordinate i - n/2). Scaled by 1/sqrt(N) in
/// each direction so that ifft2_centered(fft2_centered(x)) == x exactly.
CArray fft2_centered(const CArray& img);
CArray ifft2_centered(const CArray& ksp);

}  // namespace hr
