/*
 * mfe - a morphable face engine: model building, rendering, fitting and texture recovery.
 *
 * File: src/compositor.cpp
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
#include "mfe/compositor/compositor.hpp"
#include "mfe/core/Error.hpp"

#include <algorithm>
#include <cmath>

namespace mfe {
namespace compositor {

double polygon_area(const std::vector<Eigen::Vector2d>& polygon)
{
    double twice = 0.0;
    for (std::size_t i = 0, n = polygon.size(); i < n; ++i)
    {
        const auto& a = polygon[i];
        const auto& b = polygon[(i + 1) % n];
        twice += a.x() * b.y() - b.x() * a.y();
    }
    return 0.5 * twice;
}

namespace {

double orient(const Eigen::Vector2d& a, const Eigen::Vector2d& b, const Eigen::Vector2d& c)
{
    return (b.x() - a.x()) * (c.y() - a.y()) - (b.y() - a.y()) * (c.x() - a.x());
}

bool segments_cross(const Eigen::Vector2d& a, const Eigen::Vector2d& b, const Eigen::Vector2d& c,
                    const Eigen::Vector2d& d)
{
    const double o1 = orient(a, b, c), o2 = orient(a, b, d), o3 = orient(c, d, a), o4 = orient(c, d, b);
    return ((o1 > 0.0 && o2 < 0.0) || (o1 < 0.0 && o2 > 0.0)) && ((o3 > 0.0 && o4 < 0.0) || (o3 < 0.0 && o4 > 0.0));
}

} // namespace

bool polygon_self_intersects(const std::vector<Eigen::Vector2d>& polygon)
{
    const std::size_t n = polygon.size();
    if (n < 4)
        return false;
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 2; j < n; ++j)
        {
            if (i == 0 && j == n - 1)
                continue; // adjacent through the closing edge
            if (segments_cross(polygon[i], polygon[(i + 1) % n], polygon[j], polygon[(j + 1) % n]))
                return true;
        }
    return false;
}

std::vector<Eigen::Vector2d> convex_hull(std::vector<Eigen::Vector2d> points)
{
    std::sort(points.begin(), points.end(), [](const Eigen::Vector2d& a, const Eigen::Vector2d& b) {
        return a.x() < b.x() || (a.x() == b.x() && a.y() < b.y());
    });
    points.erase(std::unique(points.begin(), points.end()), points.end());
    if (points.size() < 3)
        return points;
    std::vector<Eigen::Vector2d> hull(2 * points.size());
    std::size_t k = 0;
    for (const auto& p : points)
    {
        while (k >= 2 && orient(hull[k - 2], hull[k - 1], p) <= 0.0)
            --k;
        hull[k++] = p;
    }
    for (std::size_t i = points.size() - 1, lower = k + 1; i-- > 0;)
    {
        while (k >= lower && orient(hull[k - 2], hull[k - 1], points[i]) <= 0.0)
            --k;
        hull[k++] = points[i];
    }
    hull.resize(k - 1);
    return hull;
}

Mask fill_polygon(const std::vector<Eigen::Vector2d>& polygon, int width, int height)
{
    Mask mask(width, height);
    const std::size_t n = polygon.size();
    if (n < 3)
        return mask;
    std::vector<double> crossings;
    for (int y = 0; y < height; ++y)
    {
        const double py = y + 0.5;
        crossings.clear();
        for (std::size_t i = 0; i < n; ++i)
        {
            const auto& a = polygon[i];
            const auto& b = polygon[(i + 1) % n];
            if ((a.y() > py) != (b.y() > py))
                crossings.push_back(a.x() + (py - a.y()) * (b.x() - a.x()) / (b.y() - a.y()));
        }
        std::sort(crossings.begin(), crossings.end());
        for (std::size_t k = 0; k + 1 < crossings.size(); k += 2)
        {
            // pixel centres x + 0.5 in [left, right)
            const double left = std::clamp(crossings[k] - 0.5, -1.0, static_cast<double>(width));
            const double right = std::min(crossings[k + 1] - 0.5, static_cast<double>(width));
            for (int x = std::max(0, static_cast<int>(std::ceil(left))); x < width && x < right; ++x)
                mask(x, y) = 1;
        }
    }
    return mask;
}

MouthMask mouth_mask(const std::vector<Eigen::Vector3d>& screen, const std::vector<int>& mouth_loop,
                     const render::Camera& camera, const MouthMaskOptions& options)
{
    MouthMask out;
    out.mask = Mask(camera.width, camera.height);
    std::vector<Eigen::Vector2d> polygon;
    for (int v : mouth_loop)
    {
        if (v < 0 || static_cast<std::size_t>(v) >= screen.size())
            throw DimensionError("mouth loop vertex " + std::to_string(v) + " out of range");
        const Eigen::Vector3d& s = screen[static_cast<std::size_t>(v)];
        if (!(s.z() >= camera.near) || !std::isfinite(s.x()) || !std::isfinite(s.y()))
        {
            out.behind_camera = true;
            return out;
        }
        polygon.emplace_back(s.x(), s.y());
    }
    if (polygon_self_intersects(polygon))
    {
        out.self_intersecting = true;
        polygon = convex_hull(polygon);
    }
    if (std::abs(polygon_area(polygon)) < options.min_area)
    {
        out.degenerate = true;
        return out;
    }
    out.mask = fill_polygon(polygon, camera.width, camera.height);
    return out;
}

Mask effective_mask(const Mask& face_mask, const Mask& mouth)
{
    require_same_size(face_mask, mouth, "effective_mask");
    Mask out(face_mask.width(), face_mask.height());
    for (std::size_t i = 0; i < out.size(); ++i)
        out[i] = face_mask[i] && !mouth[i] ? 1 : 0;
    return out;
}

namespace {

// 3-4 chamfer distance (in pixels) from each set pixel to the nearest unset one.
std::vector<double> inside_distance(const Mask& mask)
{
    const int w = mask.width(), h = mask.height();
    constexpr int kBig = 1 << 28;
    std::vector<int> d(mask.size());
    for (std::size_t i = 0; i < mask.size(); ++i)
        d[i] = mask[i] ? kBig : 0;
    const auto at = [&](int x, int y) -> int { return (x < 0 || y < 0 || x >= w || y >= h) ? kBig : d[y * w + x]; };
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x)
        {
            int& v = d[y * w + x];
            v = std::min({v, at(x - 1, y) + 3, at(x, y - 1) + 3, at(x - 1, y - 1) + 4, at(x + 1, y - 1) + 4});
        }
    for (int y = h - 1; y >= 0; --y)
        for (int x = w - 1; x >= 0; --x)
        {
            int& v = d[y * w + x];
            v = std::min({v, at(x + 1, y) + 3, at(x, y + 1) + 3, at(x + 1, y + 1) + 4, at(x - 1, y + 1) + 4});
        }
    std::vector<double> out(mask.size());
    for (std::size_t i = 0; i < out.size(); ++i)
        out[i] = d[i] >= kBig ? INFINITY : d[i] / 3.0;
    return out;
}

} // namespace

Image composite(const Image& face, const Mask& face_mask, const Mask& mouth, const Image& background,
                int feather_radius)
{
    if (!face.same_shape(background))
        throw DimensionError("composite: face and background differ in size or channels");
    require_same_size(face, face_mask, "composite");
    require_same_size(face, mouth, "composite");
    if (feather_radius < 0)
        throw DimensionError("composite: negative feather radius");
    const Mask effective = effective_mask(face_mask, mouth);
    Image out = background;
    std::vector<double> distance;
    if (feather_radius > 0)
        distance = inside_distance(effective);
    for (int y = 0; y < face.height(); ++y)
        for (int x = 0; x < face.width(); ++x)
        {
            const std::size_t i = static_cast<std::size_t>(y) * face.width() + x;
            if (!effective[i])
                continue;
            const double alpha = feather_radius > 0 ? std::min(1.0, distance[i] / feather_radius) : 1.0;
            for (int c = 0; c < face.channels(); ++c)
                out(x, y, c) = alpha >= 1.0 ? face(x, y, c)
                                            : background(x, y, c) + alpha * (face(x, y, c) - background(x, y, c));
        }
    return out;
}

} // namespace compositor
} // namespace mfe
