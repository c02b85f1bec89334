/*
 * mfe - a morphable face engine: model building, rendering, fitting and texture recovery.
 *
 * File: include/mfe/io/png.hpp
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

#ifndef MFE_IO_PNG_HPP_
#define MFE_IO_PNG_HPP_

#include "mfe/core/Image.hpp"

#include <filesystem>

namespace mfe {
namespace io {

/// Reads an 8-bit PNG as RGB (or gray when \c channels == 1), mapped to [0, 1].
Image read_png(const std::filesystem::path& path, int channels = 3);

/// Writes 8-bit PNG; values are clamped and rounded from [0, 1].
void write_png(const Image& image, const std::filesystem::path& path);

/// Masks are single-channel PNGs with 0 / 255.
Mask read_mask_png(const std::filesystem::path& path);
void write_mask_png(const Mask& mask, const std::filesystem::path& path);

/// Rounds every value to the nearest multiple of 1/255 (what a PNG round trip keeps).
Image quantize_8bit(const Image& image);

Image mask_to_image(const Mask& mask);

} // namespace io
} // namespace mfe

#endif /* MFE_IO_PNG_HPP_ */
