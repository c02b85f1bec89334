/*
 * mfe - a morphable face engine: model building, rendering, fitting and texture recovery.
 *
 * File: tests/test_io.cpp
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
#include "support.hpp"

#include "mfe/core/Error.hpp"
#include "mfe/io/png.hpp"

#include "doctest.h"

#include <fstream>

using namespace mfe;

TEST_CASE("PNG round trip is exact for 8-bit values")
{
    Rng rng(1);
    const Image a = io::quantize_8bit(test::random_image(rng, 17, 11));
    const auto dir = test::scratch_dir("png");
    io::write_png(a, dir / "a.png");
    CHECK(io::read_png(dir / "a.png") == a);
    CHECK(io::quantize_8bit(a) == a);
}

TEST_CASE("quantisation rounds to the nearest level and clamps")
{
    Image a(3, 1, 3);
    a(0, 0, 0) = -0.2;
    a(1, 0, 0) = 1.7;
    a(2, 0, 0) = 100.4 / 255.0;
    const Image q = io::quantize_8bit(a);
    CHECK(q(0, 0, 0) == 0.0);
    CHECK(q(1, 0, 0) == 1.0);
    CHECK(q(2, 0, 0) == 100.0 / 255.0);
}

TEST_CASE("mask PNGs")
{
    Rng rng(2);
    const Mask m = test::random_mask(rng, 9, 14);
    const auto dir = test::scratch_dir("mask_png");
    io::write_mask_png(m, dir / "m.png");
    CHECK(io::read_mask_png(dir / "m.png") == m);
    const Image img = io::mask_to_image(m);
    CHECK(img.channels() == 1);
    CHECK(img(0, 0, 0) == (m(0, 0) ? 1.0 : 0.0));
}

TEST_CASE("unreadable files are reported")
{
    const auto dir = test::scratch_dir("png_bad");
    CHECK_THROWS(io::read_png(dir / "missing.png"));
    {
        std::ofstream out(dir / "junk.png");
        out << "not a png";
    }
    CHECK_THROWS(io::read_png(dir / "junk.png"));
}
