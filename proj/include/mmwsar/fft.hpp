#pragma once

#include <span>

#include "mmwsar/core.hpp"

namespace mmwsar::fft {

/// In-place 2-D DFT of a row-major ny x nx complex array. Forward is
/// unnormalized (e^{-j...} kernel); inverse divides by nx*ny.
void fft2(std::span<Complex> data, std::size_t ny, std::size_t nx, bool inverse);

}  // namespace mmwsar::fft
