/*
 * mfe - a morphable face engine: model building, rendering, fitting and texture recovery.
 *
 * File: include/mfe/core/Image.hpp
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

#ifndef MFE_CORE_IMAGE_HPP_
#define MFE_CORE_IMAGE_HPP_

#include "mfe/core/Error.hpp"

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace mfe {

/**
 * A floating-point image of height x width x channels, stored row-major with
 * interleaved channels and the origin at the top-left. Values are linear
 * intensities, nominally in [0, 1].
 */
class Image
{
public:
    Image() = default;
    Image(int width, int height, int channels, double fill = 0.0)
        : width_(width), height_(height), channels_(channels),
          data_(static_cast<std::size_t>(width) * height * channels, fill)
    {
        if (width < 0 || height < 0 || channels <= 0)
        {
            throw DimensionError("Image: invalid dimensions");
        }
    }

    int width() const noexcept { return width_; }
    int height() const noexcept { return height_; }
    int channels() const noexcept { return channels_; }
    std::size_t num_pixels() const noexcept { return static_cast<std::size_t>(width_) * height_; }
    bool empty() const noexcept { return data_.empty(); }

    double& operator()(int x, int y, int c = 0) noexcept { return data_[index(x, y, c)]; }
    double operator()(int x, int y, int c = 0) const noexcept { return data_[index(x, y, c)]; }

    std::size_t index(int x, int y, int c = 0) const noexcept
    {
        return (static_cast<std::size_t>(y) * width_ + x) * channels_ + c;
    }

    std::span<double> data() noexcept { return data_; }
    std::span<const double> data() const noexcept { return data_; }

    bool same_shape(const Image& other) const noexcept
    {
        return width_ == other.width_ && height_ == other.height_ && channels_ == other.channels_;
    }

    bool operator==(const Image& other) const = default;

private:
    int width_ = 0;
    int height_ = 0;
    int channels_ = 0;
    std::vector<double> data_;
};

/// Binary per-pixel mask (0 or 1), row-major, top-left origin.
class Mask
{
public:
    Mask() = default;
    Mask(int width, int height, std::uint8_t fill = 0)
        : width_(width), height_(height), data_(static_cast<std::size_t>(width) * height, fill)
    {
        if (width < 0 || height < 0)
        {
            throw DimensionError("Mask: invalid dimensions");
        }
    }

    int width() const noexcept { return width_; }
    int height() const noexcept { return height_; }
    std::size_t size() const noexcept { return data_.size(); }

    std::uint8_t& operator()(int x, int y) noexcept { return data_[static_cast<std::size_t>(y) * width_ + x]; }
    std::uint8_t operator()(int x, int y) const noexcept { return data_[static_cast<std::size_t>(y) * width_ + x]; }
    std::uint8_t& operator[](std::size_t i) noexcept { return data_[i]; }
    std::uint8_t operator[](std::size_t i) const noexcept { return data_[i]; }

    std::span<std::uint8_t> data() noexcept { return data_; }
    std::span<const std::uint8_t> data() const noexcept { return data_; }

    std::size_t count() const noexcept
    {
        std::size_t n = 0;
        for (auto v : data_)
            n += v != 0;
        return n;
    }

    bool operator==(const Mask& other) const = default;

private:
    int width_ = 0;
    int height_ = 0;
    std::vector<std::uint8_t> data_;
};

inline void require_same_size(const Image& a, const Image& b, const char* what)
{
    if (!a.same_shape(b))
    {
        throw DimensionError(std::string(what) + ": image dimensions differ");
    }
}

inline void require_same_size(const Image& a, const Mask& m, const char* what)
{
    if (a.width() != m.width() || a.height() != m.height())
    {
        throw DimensionError(std::string(what) + ": mask dimensions differ from image");
    }
}

inline void require_same_size(const Mask& a, const Mask& b, const char* what)
{
    if (a.width() != b.width() || a.height() != b.height())
    {
        throw DimensionError(std::string(what) + ": mask dimensions differ");
    }
}

} // namespace mfe

#endif /* MFE_CORE_IMAGE_HPP_ */
