/*
 * mfe - a morphable face engine: model building, rendering, fitting and texture recovery.
 *
 * File: src/png.cpp
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
#include "mfe/io/png.hpp"
#include "mfe/core/Error.hpp"

#include <png.h>

#include <algorithm>
#include <cmath>
#include <vector>

namespace mfe {
namespace io {

namespace {

std::uint8_t to_byte(double v)
{
    if (!(v > 0.0))
        return 0;
    if (v >= 1.0)
        return 255;
    return static_cast<std::uint8_t>(std::lround(v * 255.0));
}

std::vector<std::uint8_t> read_raw(const std::filesystem::path& path, int channels, int& width, int& height)
{
    png_image image{};
    image.version = PNG_IMAGE_VERSION;
    if (!png_image_begin_read_from_file(&image, path.string().c_str()))
        throw FormatError("cannot read PNG " + path.string() + ": " + image.message);
    image.format = channels == 1 ? PNG_FORMAT_GRAY : PNG_FORMAT_RGB;
    std::vector<std::uint8_t> buffer(PNG_IMAGE_SIZE(image));
    if (!png_image_finish_read(&image, nullptr, buffer.data(), 0, nullptr))
    {
        png_image_free(&image);
        throw FormatError("cannot decode PNG " + path.string() + ": " + image.message);
    }
    width = static_cast<int>(image.width);
    height = static_cast<int>(image.height);
    return buffer;
}

void write_raw(const std::vector<std::uint8_t>& buffer, int width, int height, int channels,
               const std::filesystem::path& path)
{
    png_image image{};
    image.version = PNG_IMAGE_VERSION;
    image.width = static_cast<png_uint_32>(width);
    image.height = static_cast<png_uint_32>(height);
    image.format = channels == 1 ? PNG_FORMAT_GRAY : PNG_FORMAT_RGB;
    if (!png_image_write_to_file(&image, path.string().c_str(), 0, buffer.data(), 0, nullptr))
        throw Error("cannot write PNG " + path.string() + ": " + image.message);
}

} // namespace

Image read_png(const std::filesystem::path& path, int channels)
{
    if (channels != 1 && channels != 3)
        throw DimensionError("read_png: channels must be 1 or 3");
    int width = 0, height = 0;
    const auto buffer = read_raw(path, channels, width, height);
    Image out(width, height, channels);
    for (std::size_t i = 0; i < buffer.size(); ++i)
        out.data()[i] = buffer[i] / 255.0;
    return out;
}

void write_png(const Image& image, const std::filesystem::path& path)
{
    if (image.channels() != 1 && image.channels() != 3)
        throw DimensionError("write_png: channels must be 1 or 3");
    std::vector<std::uint8_t> buffer(image.data().size());
    std::transform(image.data().begin(), image.data().end(), buffer.begin(), to_byte);
    write_raw(buffer, image.width(), image.height(), image.channels(), path);
}

Mask read_mask_png(const std::filesystem::path& path)
{
    int width = 0, height = 0;
    const auto buffer = read_raw(path, 1, width, height);
    Mask out(width, height);
    for (std::size_t i = 0; i < buffer.size(); ++i)
        out[i] = buffer[i] >= 128 ? 1 : 0;
    return out;
}

void write_mask_png(const Mask& mask, const std::filesystem::path& path)
{
    std::vector<std::uint8_t> buffer(mask.size());
    for (std::size_t i = 0; i < mask.size(); ++i)
        buffer[i] = mask[i] ? 255 : 0;
    write_raw(buffer, mask.width(), mask.height(), 1, path);
}

Image quantize_8bit(const Image& image)
{
    Image out = image;
    for (double& v : out.data())
        v = to_byte(v) / 255.0;
    return out;
}

Image mask_to_image(const Mask& mask)
{
    Image out(mask.width(), mask.height(), 1);
    for (std::size_t i = 0; i < mask.size(); ++i)
        out.data()[i] = mask[i] ? 1.0 : 0.0;
    return out;
}

} // namespace io
} // namespace mfe
