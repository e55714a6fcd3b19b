#pragma once

#include <span>

#include "nlslab/grid.hpp"

namespace nlslab {

// Unnormalized forward DFT over all axes of the grid.
void fft_forward(const GridSpec& grid, std::span<const cplx> in, std::span<cplx> out);

// Inverse DFT, normalized so that fft_backward(fft_forward(f)) == f.
void fft_backward(const GridSpec& grid, std::span<const cplx> in, std::span<cplx> out);

}  // namespace nlslab
