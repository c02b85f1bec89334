/*
 * mfe - a morphable face engine: model building, rendering, fitting and texture recovery.
 *
 * File: tests/test_cli.cpp
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

#include "mfe/morphablemodel/MorphableModel.hpp"

#include "doctest.h"

#include <cstdlib>
#include <fstream>
#include <iterator>
#include <sys/wait.h>

using namespace mfe;

namespace {

struct Run
{
    int code = -1;
    std::string out;
};

Run run(const std::string& args, const std::filesystem::path& dir)
{
    const auto log = dir / "stdout.txt";
    const std::string cmd = std::string(MFE_CLI_PATH) + " " + args + " > " + log.string() + " 2>&1";
    const int status = std::system(cmd.c_str());
    Run r;
    r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    std::ifstream in(log);
    r.out.assign(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
    return r;
}

void write_samples(const std::filesystem::path& dir, const std::vector<Mesh>& meshes)
{
    std::filesystem::create_directories(dir);
    for (std::size_t i = 0; i < meshes.size(); ++i)
        write_obj(meshes[i], dir / ("s" + std::to_string(i) + ".obj"));
    morphablemodel::write_index_list({0, 1, 4}, dir / "mouth.txt");
}

Mesh jitter(const Mesh& base, std::uint64_t seed)
{
    Rng rng(seed);
    Mesh m = base;
    for (auto& v : m.vertices)
        v.z() += rng.uniform(-0.25, 0.25);
    return m;
}

} // namespace

TEST_CASE("build-model mirrors the PCA contract")
{
    const auto dir = test::scratch_dir("cli_build");
    const Mesh base = test::grid_mesh(3, 3);
    SUBCASE("identical samples have no variance to model")
    {
        write_samples(dir / "same", {base, base});
        const Run r = run("build-model --samples " + (dir / "same").string() + " --ks 1 --ke 0 --out " +
                              (dir / "m.mfm").string(),
                          dir);
        CHECK(r.code == 2);
        CHECK(r.out.find("rank") != std::string::npos);
    }
    SUBCASE("two samples give one component")
    {
        write_samples(dir / "two", {jitter(base, 1), jitter(base, 2)});
        const Run r = run("build-model --samples " + (dir / "two").string() + " --ks 1 --ke 0 --out " +
                              (dir / "m.mfm").string(),
                          dir);
        CHECK(r.code == 0);
        CHECK(r.out.find("k_s=1") != std::string::npos);
        CHECK(r.out.find("N_v=9") != std::string::npos);
        CHECK(morphablemodel::load_model(dir / "m.mfm").num_shape_components() == 1);
    }
    SUBCASE("N samples allow N-1 components")
    {
        std::vector<Mesh> six;
        for (std::uint64_t s = 0; s < 6; ++s)
            six.push_back(jitter(base, 10 + s));
        write_samples(dir / "six", six);
        const Run r = run("build-model --samples " + (dir / "six").string() + " --ks 5 --ke 0 --out " +
                              (dir / "m.mfm").string(),
                          dir);
        CHECK(r.code == 0);
        CHECK(r.out.find("k_s=5") != std::string::npos);
    }
}

TEST_CASE("usage and input errors exit with 2")
{
    const auto dir = test::scratch_dir("cli_usage");
    CHECK(run("", dir).code == 2);
    CHECK(run("frobnicate", dir).code == 2);
    CHECK(run("metrics --a " + (dir / "none.png").string() + " --b x.png", dir).code == 2);
    CHECK(run("ablate --mode sideways", dir).code == 2);
    CHECK(run("--help", dir).code == 0);
}

TEST_CASE("sample, render, metrics and config precedence")
{
    const auto dir = test::scratch_dir("cli_flow");
    {
        std::ofstream spec(dir / "spec.txt");
        spec << "count = 2\nimage_size = 64\nfocal = 200\ntexture_size = 64\n";
    }
    REQUIRE(run("sample --spec " + (dir / "spec.txt").string() + " --out " + (dir / "c").string(), dir).code == 0);
    REQUIRE(run("render --params " + (dir / "c/0000.params.txt").string() + " --texture " +
                    (dir / "c/0000.tex.png").string() + " --out " + (dir / "r.png").string(),
                dir)
                .code == 0);
    CHECK(std::filesystem::exists(dir / "r.mask.png"));
    const Run m = run("metrics --machine --a " + (dir / "r.png").string() + " --b " + (dir / "c/0000.png").string() +
                          " --mask " + (dir / "r.mask.png").string(),
                      dir);
    CHECK(m.code == 0);
    // Inside the face the corpus image is the quantised render.
    CHECK(m.out.find("l1=") != std::string::npos);
    CHECK(m.out.find("psnr=") != std::string::npos);

    // Config supplies the seed; a flag overrides it.
    {
        std::ofstream cfg(dir / "cfg.toml");
        cfg << "seed = 5\n";
    }
    const std::string sample = "sample --spec " + (dir / "spec.txt").string() + " --out ";
    REQUIRE(run("--config " + (dir / "cfg.toml").string() + " " + sample + (dir / "k5").string(), dir).code == 0);
    REQUIRE(run("--seed 5 " + sample + (dir / "f5").string(), dir).code == 0);
    REQUIRE(run("--config " + (dir / "cfg.toml").string() + " --seed 6 " + sample + (dir / "f6").string(), dir)
                .code == 0);
    auto bytes = [](const std::filesystem::path& p) {
        std::ifstream in(p, std::ios::binary);
        return std::string(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
    };
    CHECK(bytes(dir / "k5/0000.params.txt") == bytes(dir / "f5/0000.params.txt"));
    CHECK(bytes(dir / "k5/0000.params.txt") != bytes(dir / "f6/0000.params.txt"));
}

TEST_CASE("gradcheck and ablate report pass or fail through the exit code")
{
    const auto dir = test::scratch_dir("cli_checks");
    const Run g = run("gradcheck --scenes 2", dir);
    CHECK(g.code == 0);
    CHECK(g.out.find("PASS") != std::string::npos);
    CHECK(run("gradcheck --scenes 1 --tolerance 1e-30", dir).code == 1);
    for (const std::string mode : {"relight", "mouth", "rotations"})
    {
        const Run a = run("ablate --mode " + mode + " --out " + (dir / "abl").string(), dir);
        INFO(a.out);
        CHECK(a.code == 0);
        CHECK(std::filesystem::exists(dir / "abl" / ("ablate_" + mode + ".txt")));
    }
}
