/*
 * mfe - a morphable face engine: model building, rendering, fitting and texture recovery.
 *
 * File: include/mfe/metrics/metrics.hpp
 *
 * Copyright 2026 The mfe Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 * http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */
#pragma once

#ifndef MFE_METRICS_METRICS_HPP_
#define MFE_METRICS_METRICS_HPP_

#include "mfe/core/Image.hpp"

#include <optional>

namespace mfe {
namespace metrics {

/// Mean absolute difference over (masked) pixels and channels.
double l1(const Image& a, const Image& b, const std::optional<Mask>& mask = std::nullopt);

/// Mean squared difference over (masked) pixels and channels.
double mse(const Image& a, const Image& b, const std::optional<Mask>& mask = std::nullopt);

inline constexpr double kPsnrCap = 99.0;

struct Psnr
{
    double db = 0.0;
    bool capped = false; ///< identical inputs; db is kPsnrCap
};

/// 10 log10(1 / MSE) with peak 1.
Psnr psnr(const Image& a, const Image& b, const std::optional<Mask>& mask = std::nullopt);

/// Luma 0.299 R + 0.587 G + 0.114 B; single-channel images are copied.
Image to_grayscale(const Image& image);

/**
 * Single-scale SSIM on the luma of both images: 11x11 Gaussian window with
 * sigma 1.5, C1 = 0.01^2, C2 = 0.03^2, averaged over the window positions
 * that lie fully inside the image. With \c centers, only positions whose
 * centre pixel is set in the mask are averaged. Throws DimensionError when
 * the image is smaller than the window or no position qualifies.
 */
double ssim(const Image& a, const Image& b, const std::optional<Mask>& centers = std::nullopt);

} // namespace metrics
} // namespace mfe

#endif /* MFE_METRICS_METRICS_HPP_ */
