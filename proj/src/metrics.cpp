/*
 * mfe - a morphable face engine: model building, rendering, fitting and texture recovery.
 *
 * File: src/metrics.cpp
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
#include "mfe/metrics/metrics.hpp"
#include "mfe/core/Error.hpp"
#include "mfe/core/parallel.hpp"

#include <array>
#include <cmath>
#include <vector>

namespace mfe {
namespace metrics {

namespace {

void check_pair(const Image& a, const Image& b, const std::optional<Mask>& mask, const char* what)
{
    if (!a.same_shape(b))
        throw DimensionError(std::string(what) + ": images differ in size or channels");
    if (mask)
        require_same_size(a, *mask, what);
}

template <typename F>
double masked_mean(const Image& a, const Image& b, const std::optional<Mask>& mask, F term)
{
    long double sum = 0.0L;
    std::size_t count = 0;
    for (int y = 0; y < a.height(); ++y)
        for (int x = 0; x < a.width(); ++x)
        {
            if (mask && !(*mask)(x, y))
                continue;
            for (int c = 0; c < a.channels(); ++c)
                sum += term(a(x, y, c) - b(x, y, c));
            count += static_cast<std::size_t>(a.channels());
        }
    if (count == 0)
        throw DegenerateLossError("metric over an empty mask");
    return static_cast<double>(sum / static_cast<long double>(count));
}

} // namespace

double l1(const Image& a, const Image& b, const std::optional<Mask>& mask)
{
    check_pair(a, b, mask, "l1");
    return masked_mean(a, b, mask, [](double d) { return static_cast<long double>(std::abs(d)); });
}

double mse(const Image& a, const Image& b, const std::optional<Mask>& mask)
{
    check_pair(a, b, mask, "mse");
    return masked_mean(a, b, mask, [](double d) { return static_cast<long double>(d) * d; });
}

Psnr psnr(const Image& a, const Image& b, const std::optional<Mask>& mask)
{
    const double e = mse(a, b, mask);
    if (e == 0.0)
        return {kPsnrCap, true};
    return {std::min(kPsnrCap, -10.0 * std::log10(e)), false};
}

Image to_grayscale(const Image& image)
{
    if (image.channels() == 1)
        return image;
    if (image.channels() != 3)
        throw DimensionError("to_grayscale: expected 1 or 3 channels");
    Image gray(image.width(), image.height(), 1);
    for (int y = 0; y < image.height(); ++y)
        for (int x = 0; x < image.width(); ++x)
            gray(x, y, 0) = 0.299 * image(x, y, 0) + 0.587 * image(x, y, 1) + 0.114 * image(x, y, 2);
    return gray;
}

namespace {

constexpr int kWindow = 11;
constexpr double kC1 = 0.01 * 0.01;
constexpr double kC2 = 0.03 * 0.03;

std::array<double, kWindow * kWindow> gaussian_window()
{
    std::array<double, kWindow * kWindow> w{};
    double sum = 0.0;
    for (int j = 0; j < kWindow; ++j)
        for (int i = 0; i < kWindow; ++i)
        {
            const double dx = i - kWindow / 2, dy = j - kWindow / 2;
            w[j * kWindow + i] = std::exp(-(dx * dx + dy * dy) / (2.0 * 1.5 * 1.5));
            sum += w[j * kWindow + i];
        }
    for (double& v : w)
        v /= sum;
    return w;
}

} // namespace

double ssim(const Image& a, const Image& b, const std::optional<Mask>& centers)
{
    check_pair(a, b, centers, "ssim");
    if (a.width() < kWindow || a.height() < kWindow)
        throw DimensionError("ssim: image smaller than the 11x11 window");
    const Image ga = to_grayscale(a), gb = to_grayscale(b);
    static const auto window = gaussian_window();
    const int nx = a.width() - kWindow + 1, ny = a.height() - kWindow + 1;
    std::vector<double> row_sum(static_cast<std::size_t>(ny), 0.0);
    std::vector<std::size_t> row_count(static_cast<std::size_t>(ny), 0);
    parallel_for(static_cast<std::size_t>(ny), [&](std::size_t row) {
        const int y0 = static_cast<int>(row);
        for (int x0 = 0; x0 < nx; ++x0)
        {
            if (centers && !(*centers)(x0 + kWindow / 2, y0 + kWindow / 2))
                continue;
            double ma = 0.0, mb = 0.0, saa = 0.0, sbb = 0.0, sab = 0.0;
            for (int j = 0; j < kWindow; ++j)
                for (int i = 0; i < kWindow; ++i)
                {
                    const double w = window[j * kWindow + i];
                    const double va = ga(x0 + i, y0 + j, 0), vb = gb(x0 + i, y0 + j, 0);
                    ma += w * va;
                    mb += w * vb;
                    saa += w * va * va;
                    sbb += w * vb * vb;
                    sab += w * va * vb;
                }
            const double var_a = saa - ma * ma, var_b = sbb - mb * mb, cov = sab - ma * mb;
            row_sum[row] += ((2.0 * ma * mb + kC1) * (2.0 * cov + kC2)) /
                            ((ma * ma + mb * mb + kC1) * (var_a + var_b + kC2));
            ++row_count[row];
        }
    });
    double sum = 0.0;
    std::size_t count = 0;
    for (int r = 0; r < ny; ++r)
    {
        sum += row_sum[r];
        count += row_count[r];
    }
    if (count == 0)
        throw DimensionError("ssim: no window position qualifies");
    return sum / static_cast<double>(count);
}

} // namespace metrics
} // namespace mfe
