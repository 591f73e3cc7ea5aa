// Copyright Contributors to the pvsm project
// SPDX-License-Identifier: Apache-2.0

#include "oracles.hpp"

#include <gtest/gtest.h>

#include <fstream>

using namespace pvsm;

namespace {

class TempDir : public ::testing::Test {
  protected:
    void
    SetUp() override {
        const auto *info = ::testing::UnitTest::GetInstance()->current_test_info();
        dir = fs::temp_directory_path() / (std::string("pvsm_io_") + info->name());
        fs::remove_all(dir);
        fs::create_directories(dir / "s");
    }
    void
    TearDown() override {
        fs::remove_all(dir);
    }
    fs::path dir;
};

ErrorCode
code_of(const std::function<void()> &f) {
    try {
        f();
    } catch (const Error &e) {
        return e.code();
    }
    ADD_FAILURE() << "no error thrown";
    return ErrorCode::IoFailure;
}

} // namespace

using RawTensor = TempDir;
using Png = TempDir;
using Pfm = TempDir;
using Scene = TempDir;
using Staging = TempDir;

TEST_F(RawTensor, RoundTripIsBitExact) {
    std::mt19937_64 rng(1);
    std::normal_distribution<float> n;
    Image<float> t(4, 4, 6);
    for (float &v : t.data()) {
        v = n(rng);
    }
    t(1, 2, 3) = std::numeric_limits<float>::infinity();
    save_raw_tensor(dir / "a.pvst", t);
    EXPECT_EQ(load_raw_tensor(dir / "a.pvst"), t);
}

TEST_F(RawTensor, TruncatedIsMalformed) {
    save_raw_tensor(dir / "a.pvst", Image<float>(4, 4, 6));
    fs::resize_file(dir / "a.pvst", 100);
    EXPECT_EQ(code_of([&] { load_raw_tensor(dir / "a.pvst"); }), ErrorCode::MalformedHeader);
    fs::resize_file(dir / "a.pvst", 7);
    EXPECT_EQ(code_of([&] { load_raw_tensor(dir / "a.pvst"); }), ErrorCode::MalformedHeader);
    EXPECT_EQ(code_of([&] { load_raw_tensor(dir / "missing.pvst"); }), ErrorCode::MissingFile);
}

TEST_F(RawTensor, PluckerMapRoundTrip) {
    std::mt19937_64 rng(2);
    const PluckerMap map = plucker_map(oracle::generic_camera(rng, 8, 6));
    const PluckerMap back = plucker_map_from_tensor(to_tensor(map));
    ASSERT_EQ(back.size(), map.size());
    for (std::size_t i = 0; i < map.size(); ++i) {
        EXPECT_LE((back.rays()[i].stacked() - map.rays()[i].stacked()).cwiseAbs().maxCoeff(), 1e-6);
    }
}

TEST(Quantize, Convention) {
    EXPECT_EQ(quantize(1.0f), 255);
    EXPECT_EQ(quantize(0.0f), 0);
    EXPECT_EQ(quantize(0.5f), 128);
    EXPECT_EQ(quantize(-0.2f), 0);
    EXPECT_EQ(quantize(1.7f), 255);
}

TEST_F(Png, QuantizedRoundTripIsBitExact) {
    std::mt19937_64 rng(3);
    const ColorImage img = quantized(oracle::random_image(rng, 13, 17));
    save_image(dir / "a.png", img);
    EXPECT_EQ(load_image(dir / "a.png"), img);
    Mask m = make_mask(5, 7);
    m(1, 3) = 1;
    m(4, 6) = 1;
    save_mask(dir / "m.png", m);
    EXPECT_EQ(load_mask(dir / "m.png"), m);
}

TEST_F(Png, MissingFile) {
    EXPECT_EQ(code_of([&] { load_image(dir / "nope.png"); }), ErrorCode::MissingFile);
}

TEST_F(Pfm, RoundTripAndOrientation) {
    DepthMap d = make_depth_map(3, 4);
    for (int r = 0; r < 3; ++r) {
        for (int c = 0; c < 4; ++c) {
            d(r, c) = static_cast<float>(r * 10 + c) + 0.25f;
        }
    }
    save_pfm(dir / "d.pfm", d);
    EXPECT_EQ(load_pfm(dir / "d.pfm"), d);
    // First stored row is the bottom image row.
    std::ifstream in(dir / "d.pfm", std::ios::binary);
    std::string magic, scale;
    int w = 0, h = 0;
    in >> magic >> w >> h >> scale;
    in.get();
    float first = 0;
    in.read(reinterpret_cast<char *>(&first), 4);
    EXPECT_EQ(magic, "Pf");
    EXPECT_EQ(first, 20.25f);
}

TEST_F(Scene, FixtureRoundTrip) {
    const SceneBundle b = make_synthetic_bundle(4, 16, 2);
    save_scene(dir / "s", b);
    const SceneBundle s = load_scene(dir / "s");
    ASSERT_EQ(s.views.size(), 3u);
    EXPECT_EQ(s.context_ids, (std::vector<std::string>{"ctx0", "ctx1"}));
    EXPECT_EQ(s.target_ids, (std::vector<std::string>{"target"}));
    for (std::size_t i = 0; i < b.views.size(); ++i) {
        EXPECT_EQ(s.views[i].color, b.views[i].color);
        EXPECT_EQ(*s.views[i].depth, *b.views[i].depth);
        EXPECT_EQ(s.views[i].camera.intrinsics, b.views[i].camera.intrinsics);
        EXPECT_EQ(s.views[i].camera.extrinsics, b.views[i].camera.extrinsics);
    }
    EXPECT_EQ(s.contexts(s.context_ids).size(), 2u);
    EXPECT_EQ(code_of([&] { s.view("nope"); }), ErrorCode::InvalidSpec);
}

TEST_F(Scene, ReflectionIsConventionMismatch) {
    save_scene(dir / "s", make_synthetic_bundle(4, 16, 1));
    json j = json::parse(std::ifstream(dir / "s" / "scene.json"));
    auto &r = j["views"][0]["camera"]["R"];
    for (int k = 0; k < 3; ++k) {
        r[k] = -r[k].get<double>();
    }
    write_text(dir / "s" / "scene.json", j.dump());
    EXPECT_EQ(code_of([&] { load_scene(dir / "s"); }), ErrorCode::ConventionMismatch);
}

TEST_F(Scene, WrongDepthSizeIsDimensionMismatch) {
    save_scene(dir / "s", make_synthetic_bundle(4, 16, 1));
    save_pfm(dir / "s" / "ctx0.pfm", make_depth_map(8, 16, 1.0f));
    EXPECT_EQ(code_of([&] { load_scene(dir / "s"); }), ErrorCode::DimensionMismatch);
}

TEST_F(Scene, MalformedJson) {
    write_text(dir / "s" / "scene.json", "{\"views\": [");
    EXPECT_EQ(code_of([&] { load_scene(dir / "s"); }), ErrorCode::MalformedJson);
    EXPECT_EQ(code_of([&] { load_scene(dir / "absent"); }), ErrorCode::MissingFile);
}

TEST(CameraJson, RoundTripIsExact) {
    std::mt19937_64 rng(5);
    const Camera c = oracle::generic_camera(rng);
    const Camera back = camera_from_json(json::parse(camera_to_json(c).dump()));
    EXPECT_EQ(back.intrinsics, c.intrinsics);
    EXPECT_EQ(back.extrinsics, c.extrinsics);
    EXPECT_EQ(code_of([&] { camera_from_json({{"fx", 1}}); }), ErrorCode::MalformedJson);
}

TEST_F(Staging, RefusesExistingWithoutForce) {
    fs::create_directories(dir / "out");
    EXPECT_EQ(code_of([&] { StagedDirectory s(dir / "out", false); }), ErrorCode::IoFailure);
    {
        StagedDirectory s(dir / "out", true);
        write_text(s.path() / "x.txt", "hi");
        s.commit();
    }
    EXPECT_TRUE(fs::exists(dir / "out" / "x.txt"));
    {
        StagedDirectory s(dir / "fresh", false);
        write_text(s.path() / "x.txt", "hi");
    }
    EXPECT_FALSE(fs::exists(dir / "fresh"));
}
