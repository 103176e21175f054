#pragma once

#include "phaseless/types.hpp"

namespace phaseless::detail {

// Unnormalized forward DFT (exp(-2 pi i jk/n)) and 1/n-scaled inverse over a
// row-major 1D or 2D shape. In-place on `data`.
void fft_forward(const Shape& shape, CVector& data);
void fft_inverse(const Shape& shape, CVector& data);

} // namespace phaseless::detail
