#pragma once

#include "core/grid.hpp"

namespace d2turb {

// 10 log10(1 / MSE) over all channels; +inf when the images are identical.
// Throws ErrorCode::Shape on a dimension mismatch.
double psnr(const Image& a, const Image& b);

// BT.601 luma of an RGB image; 1-channel images pass through.
Grid<double> luma(const Image& image);

// Mean SSIM of the luma channels over the valid region of an 11x11 Gaussian
// window (sigma 1.5), K1 = 0.01, K2 = 0.03, dynamic range 1, population
// (co)variances. Throws ErrorCode::Domain if an image is smaller than 11x11.
double ssim(const Image& a, const Image& b);

}  // namespace d2turb
