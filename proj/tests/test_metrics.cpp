// Copyright Contributors to the pvsm project
// SPDX-License-Identifier: Apache-2.0

#include "oracles.hpp"

#include <gtest/gtest.h>

using namespace pvsm;

TEST(Psnr, ExactMatchIsInfinite) {
    std::mt19937_64 rng(1);
    const ColorImage a = oracle::random_image(rng, 8, 8);
    EXPECT_TRUE(std::isinf(psnr(a, a)));
    EXPECT_GT(psnr(a, a), 0.0);
    EXPECT_EQ(db_to_json(psnr(a, a)), "inf");
}

TEST(Psnr, UniformOffsetGives20dB) {
    std::mt19937_64 rng(2);
    ColorImage gt = oracle::random_image(rng, 16, 16);
    for (float &v : gt.data()) {
        v = 0.1f + 0.8f * v;
    }
    ColorImage pred = gt;
    for (float &v : pred.data()) {
        v += 0.1f;
    }
    const Mask all = make_mask(16, 16, true);
    EXPECT_NEAR(masked_psnr(pred, gt, all), oracle::direct_masked_psnr(pred, gt, all), 1e-10);
    EXPECT_NEAR(masked_psnr(pred, gt, all), 20.0, 1e-4);
}

TEST(Psnr, HalfMaskExcludesOtherHalf) {
    // Exactly representable values so the direct formula gives 10·log10(25).
    ColorImage gt = make_color_image(8, 8, 0.25f), pred = make_color_image(8, 8, 0.25f);
    Mask mask = make_mask(8, 8);
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<float> junk(0.0f, 1.0f);
    for (int r = 0; r < 8; ++r) {
        for (int c = 0; c < 8; ++c) {
            mask(r, c) = c < 4;
            for (int ch = 0; ch < 3; ++ch) {
                pred(r, c, ch) = c < 4 ? ((r + c + ch) % 2 ? 0.45f : 0.05f) : junk(rng);
            }
        }
    }
    const double expected = 10.0 * std::log10(1.0 / 0.04);
    EXPECT_NEAR(masked_psnr(pred, gt, mask), oracle::direct_masked_psnr(pred, gt, mask), 1e-10);
    EXPECT_NEAR(masked_psnr(pred, gt, mask), expected, 1e-5);
    EXPECT_NEAR(expected, 13.979, 5e-4);
}

TEST(Psnr, EmptyMaskThrows) {
    try {
        masked_mse(make_color_image(4, 4), make_color_image(4, 4), make_mask(4, 4));
        FAIL();
    } catch (const Error &e) {
        EXPECT_EQ(e.code(), ErrorCode::EmptyMask);
    }
}

TEST(Psnr, ShapeMismatchThrows) {
    EXPECT_THROW(psnr(make_color_image(4, 4), make_color_image(4, 5)), Error);
}

TEST(Ssim, IdentityAndConstants) {
    std::mt19937_64 rng(4);
    const ColorImage a = oracle::random_image(rng, 24, 30);
    EXPECT_NEAR(ssim(a, a), 1.0, 1e-9);
    EXPECT_NEAR(ssim(make_color_image(16, 16, 0.3f), make_color_image(16, 16, 0.3f)), 1.0, 1e-12);
}

TEST(Ssim, InvertedBinaryImageMatchesDirectFormula) {
    std::mt19937_64 rng(5);
    std::bernoulli_distribution bit(0.5);
    ColorImage gt = make_color_image(20, 23);
    for (float &v : gt.data()) {
        v = bit(rng) ? 1.0f : 0.0f;
    }
    ColorImage pred = gt;
    for (float &v : pred.data()) {
        v = 1.0f - v;
    }
    EXPECT_NEAR(ssim(pred, gt), oracle::direct_ssim(pred, gt), 1e-6);
}

TEST(Ssim, RandomPairsMatchDirectFormula) {
    std::mt19937_64 rng(6);
    for (int i = 0; i < 5; ++i) {
        const ColorImage a = oracle::random_image(rng, 16 + i, 18);
        const ColorImage b = oracle::random_image(rng, 16 + i, 18);
        EXPECT_NEAR(ssim(a, b), oracle::direct_ssim(a, b), 1e-6);
        EXPECT_NEAR(ssim(a, b), ssim(b, a), 1e-12);
    }
}

TEST(Ssim, TooSmall) {
    try {
        ssim(make_color_image(10, 20), make_color_image(10, 20));
        FAIL();
    } catch (const Error &e) {
        EXPECT_EQ(e.code(), ErrorCode::TooSmall);
    }
}

TEST(SeenUnseen, Extremes) {
    const auto all = seen_unseen_split(make_mask(6, 6, true));
    EXPECT_EQ(count_true(all.unseen), 0u);
    const auto none = seen_unseen_split(make_mask(6, 6, false));
    EXPECT_EQ(count_true(none.seen), 0u);
}

TEST(SeenUnseen, DilationIsEuclideanDisc) {
    Mask cov = make_mask(11, 11);
    cov(5, 5) = 1;
    const auto split = seen_unseen_split(cov, 2);
    // Lattice points with x² + y² ≤ 4: 13.
    EXPECT_EQ(count_true(split.seen), 13u);
    EXPECT_EQ(count_true(split.seen) + count_true(split.unseen), 121u);
}

TEST(Evaluate, SplitPartitionsTheMse) {
    std::mt19937_64 rng(7);
    const ColorImage a = oracle::random_image(rng, 20, 20), b = oracle::random_image(rng, 20, 20);
    Mask cov = make_mask(20, 20);
    for (int r = 0; r < 20; ++r) {
        for (int c = 0; c < 9; ++c) {
            cov(r, c) = 1;
        }
    }
    const MetricReport rep = evaluate(a, b, {}, cov);
    ASSERT_TRUE(rep.seen_psnr_db && rep.unseen_psnr_db && rep.ssim);
    const double seen = std::pow(10.0, -*rep.seen_psnr_db / 10), unseen = std::pow(10.0, -*rep.unseen_psnr_db / 10);
    EXPECT_NEAR((9 * seen + 11 * unseen) / 20, rep.mse, 1e-12);
    EXPECT_EQ(rep.valid_pixel_count, 400u);
    const auto j = to_json(rep);
    EXPECT_TRUE(j.contains("psnr_db") && j.contains("ssim") && j.contains("seen_psnr_db"));
}
