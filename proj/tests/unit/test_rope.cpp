// Copyright (C) 2026 The dcmoe Authors
// SPDX-License-Identifier: Apache-2.0

#include <algorithm>
#include <cmath>
#include <vector>

#include <gtest/gtest.h>

#include "oracles.hpp"

#include "dcmoe/core/errors.hpp"
#include "dcmoe/core/finite_diff.hpp"
#include "dcmoe/core/ops.hpp"
#include "dcmoe/core/rng.hpp"
#include "dcmoe/rope/positions.hpp"
#include "dcmoe/rope/rotary.hpp"

namespace {

using namespace dcmoe;
using namespace dcmoe::rope;

PositionId id3(std::int64_t t, std::int64_t h, std::int64_t w) { return {t, h, w}; }
PositionId diag(std::int64_t v) { return {v, v, v}; }

std::vector<PositionId> ids_of(const std::vector<TokenPosition>& toks) {
    std::vector<PositionId> out;
    for (const auto& t : toks) out.push_back(t.id);
    return out;
}

double dot(const std::vector<double>& a, const std::vector<double>& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

TEST(Text, Examples) {
    EXPECT_EQ(assign_text(0, 3), (std::vector<PositionId>{diag(0), diag(1), diag(2)}));
    EXPECT_EQ(assign_text(5, 1), (std::vector<PositionId>{diag(5)}));
    EXPECT_THROW(assign_text(0, 0), ConfigError);
}

TEST(Text, ConcatenationEqualsOneSegment) {
    const std::vector<Segment> two{TextSegment{3}, TextSegment{2}};
    const std::vector<Segment> one{TextSegment{5}};
    EXPECT_EQ(ids_of(assign_sequence(two)), ids_of(assign_sequence(one)));
    const auto ids = ids_of(assign_sequence(two));
    for (std::size_t j = 0; j < ids.size(); ++j) EXPECT_EQ(ids[j], diag(static_cast<std::int64_t>(j)));
}

TEST(Audio, OneUnitRepeatsTwentyTimes) {
    const auto toks = assign_audio(7, 3.0, 1);
    ASSERT_EQ(toks.size(), 20u);
    for (const auto& t : toks) {
        EXPECT_EQ(t.id, diag(7));
        EXPECT_FALSE(t.padding);
        EXPECT_EQ(t.modality, Modality::Audio);
    }
}

TEST(Audio, SixSecondsTwoUnits) {
    const auto toks = assign_audio(10, 6.0, 1);
    ASSERT_EQ(toks.size(), 40u);
    for (std::size_t i = 0; i < 20; ++i) EXPECT_EQ(toks[i].id, diag(10));
    for (std::size_t i = 20; i < 40; ++i) EXPECT_EQ(toks[i].id, diag(13));
}

TEST(Audio, UnitsStepByThreeTheta) {
    for (std::int64_t theta : {1, 2, 5}) {
        const auto toks = assign_audio(0, 30.0, theta);
        ASSERT_EQ(toks.size(), 200u);
        for (std::size_t u = 1; u < 10; ++u) {
            EXPECT_EQ(toks[u * 20].id.t - toks[(u - 1) * 20].id.t, 3 * theta);
            EXPECT_EQ(toks[u * 20].id.h - toks[(u - 1) * 20].id.h, 3 * theta);
        }
    }
}

TEST(Audio, PartialUnitIsPadded) {
    const auto toks = assign_audio(0, 4.5, 1);
    ASSERT_EQ(toks.size(), 40u);
    std::size_t pads = 0;
    for (std::size_t i = 0; i < toks.size(); ++i) {
        pads += toks[i].padding;
        EXPECT_EQ(toks[i].padding, i >= 30);
    }
    EXPECT_EQ(pads, 10u);
    EXPECT_THROW(assign_audio(0, 0.0, 1), ConfigError);
    EXPECT_THROW(assign_audio(0, -3.0, 1), ConfigError);
    EXPECT_THROW(assign_audio(0, 3.0, 0), ConfigError);
}

TEST(Image, SingleToken) {
    const auto layout = assign_image(4, ImageSegment{1, 1});
    EXPECT_EQ(layout.ids, (std::vector<PositionId>{diag(4)}));
}

TEST(Image, FrameSpansStartToStartPlusP) {
    const std::int64_t x = 9;
    const std::size_t p = 3;
    const auto layout = assign_image(x, ImageSegment{p + 1, p + 1});
    EXPECT_EQ(layout.ids.front(), diag(x));
    EXPECT_EQ(layout.ids.back(), id3(x, x + 3, x + 3));
    for (const auto& id : layout.ids) EXPECT_EQ(id.t, x);
}

TEST(Image, PatchOrderPermutesRasterLayout) {
    const ImageSegment img{4, 6, 2, 3};
    const auto layout = assign_image(2, img);
    ASSERT_EQ(layout.order.size(), 24u);
    // The first patch covers rows 0..1 and cols 0..2 before anything else.
    for (std::size_t i = 0; i < 6; ++i) {
        EXPECT_LT(layout.order[i].first, 2u);
        EXPECT_LT(layout.order[i].second, 3u);
    }
    std::vector<PositionId> raster(24);
    for (std::size_t i = 0; i < layout.order.size(); ++i) {
        const auto [r, c] = layout.order[i];
        raster[r * 6 + c] = layout.ids[i];
    }
    const auto plain = assign_image(2, ImageSegment{4, 6});
    EXPECT_EQ(raster, plain.ids);
    for (std::size_t r = 0; r < 4; ++r) {
        for (std::size_t c = 0; c < 6; ++c) {
            EXPECT_EQ(raster[r * 6 + c], id3(2, 2 + static_cast<std::int64_t>(r), 2 + static_cast<std::int64_t>(c)));
        }
    }
    EXPECT_THROW(assign_image(0, ImageSegment{4, 6, 3, 3}), ShapeError);
    EXPECT_THROW(assign_image(0, ImageSegment{0, 6}), ConfigError);
}

TEST(Video, Clamp) {
    EXPECT_EQ(clamp_frame_count(200, 8, 64), 64u);
    EXPECT_EQ(clamp_frame_count(2, 8, 64), 8u);
    EXPECT_EQ(clamp_frame_count(30, 8, 64), 30u);
    EXPECT_THROW(clamp_frame_count(30, 9, 8), ConfigError);
}

TEST(Video, SingleFrameMatchesImage) {
    const VideoSegment v{1.0, 1.0, 3, 3};
    EXPECT_EQ(assign_video(6, v, 1), assign_image(6, ImageSegment{3, 3}).ids);
}

TEST(Video, UnclampedFramesFollowAbsoluteTime) {
    const VideoSegment v{120.0, 0.5, 2, 2};
    for (std::int64_t theta : {1, 2, 3}) {
        const auto ids = assign_video(100, v, theta);
        ASSERT_EQ(ids.size(), 60u * 4u);
        for (std::size_t f = 0; f < 60; ++f) {
            EXPECT_EQ(ids[f * 4].t, 100 + 2 * static_cast<std::int64_t>(f) * theta);
            EXPECT_EQ(ids[f * 4 + 3], id3(ids[f * 4].t, 101, 101)) << "h/w reset per frame";
        }
    }
}

TEST(Video, ClampedFramesSpreadOverDuration) {
    // 200 s at 1 fps is capped at 50 frames spaced 4 s apart.
    const VideoSegment v{200.0, 1.0, 1, 1, 8, 50};
    const auto ids = assign_video(0, v, 1);
    ASSERT_EQ(ids.size(), 50u);
    for (std::size_t f = 0; f < 50; ++f) EXPECT_EQ(ids[f].t, 4 * static_cast<std::int64_t>(f));
    // 2 s at 1 fps is raised to 8 frames spaced 0.25 s apart, rounded.
    const auto up = assign_video(0, VideoSegment{2.0, 1.0, 1, 1, 8, 64}, 4);
    ASSERT_EQ(up.size(), 8u);
    for (std::size_t f = 0; f < 8; ++f) EXPECT_EQ(up[f].t, static_cast<std::int64_t>(f));
    EXPECT_THROW(assign_video(0, VideoSegment{0.0, 1.0, 1, 1}, 1), ConfigError);
    EXPECT_THROW(assign_video(0, VideoSegment{1.0, 0.0, 1, 1}, 1), ConfigError);
}

TEST(Sequence, StartRuleUsesMaxComponent) {
    const std::vector<Segment> segs{TextSegment{4}, ImageSegment{3, 5}, AudioSegment{6.0}, TextSegment{1}};
    const auto toks = assign_sequence(segs);
    ASSERT_EQ(toks.size(), 4u + 15u + 40u + 1u);
    EXPECT_EQ(toks[4].id, diag(4));
    EXPECT_EQ(toks[18].id, id3(4, 6, 8));
    // Image max component is 8, so audio starts at 9.
    EXPECT_EQ(toks[19].id, diag(9));
    EXPECT_EQ(toks[39].id, diag(12));
    EXPECT_EQ(toks.back().id, diag(13));
    EXPECT_EQ(toks.back().modality, Modality::Text);
    EXPECT_THROW(assign_sequence(std::vector<Segment>{}), ConfigError);
}

TEST(Sequence, AudioAfterTextStartsAtY) {
    const std::vector<Segment> segs{TextSegment{12}, AudioSegment{6.0}};
    const auto toks = assign_sequence(segs);
    EXPECT_EQ(toks[12].id, diag(12));
    EXPECT_EQ(toks[32].id, diag(15));
}

// Text of length x, then a 120 s video at 0.5 fps on a (p+1)x(p+1) grid,
// then 120 s of audio.
void check_worked_example(std::int64_t theta) {
    const std::int64_t x = 5;
    const std::size_t side = 4;
    const std::int64_t p = static_cast<std::int64_t>(side) - 1;
    const std::vector<Segment> segs{TextSegment{static_cast<std::size_t>(x)}, VideoSegment{120.0, 0.5, side, side},
                                    AudioSegment{120.0}};
    const auto toks = assign_sequence(segs, theta);
    const std::size_t per_frame = side * side;
    const std::size_t video_tokens = 60 * per_frame;
    ASSERT_EQ(toks.size(), static_cast<std::size_t>(x) + video_tokens + 40 * 20);

    EXPECT_EQ(toks[static_cast<std::size_t>(x) - 1].id, diag(x - 1));
    const std::size_t v0 = static_cast<std::size_t>(x);
    EXPECT_EQ(toks[v0].id, diag(x));
    EXPECT_EQ(toks[v0 + per_frame].id, id3(x + 2 * theta, x, x));
    EXPECT_EQ(toks[v0 + video_tokens - 1].id, id3(x + 118 * theta, x + p, x + p));

    const std::int64_t y = x + 118 * theta + 1;
    const std::size_t a0 = v0 + video_tokens;
    EXPECT_EQ(toks[a0].id, diag(y));
    EXPECT_EQ(toks.back().id, diag(y + 117 * theta));
    for (std::size_t i = toks.size() - 20; i < toks.size(); ++i) EXPECT_EQ(toks[i].id, diag(y + 117 * theta));
}

TEST(Sequence, WorkedExampleThetaOne) { check_worked_example(1); }
TEST(Sequence, WorkedExampleThetaTwo) { check_worked_example(2); }

TEST(Rotary, DefaultSplit) {
    const auto cfg = RopeFreqConfig::with_default_split(24);
    EXPECT_EQ(cfg.d_t, 8u);
    EXPECT_EQ(cfg.d_h, 8u);
    EXPECT_EQ(cfg.d_w, 8u);
    const auto odd = RopeFreqConfig::with_default_split(20);
    EXPECT_EQ(odd.d_t + odd.d_h + odd.d_w, 20u);
    EXPECT_EQ(odd.d_h % 2, 0u);
    EXPECT_GE(odd.d_t, odd.d_h);
    RopeFreqConfig bad{24, 7, 9, 8};
    EXPECT_THROW(bad.validate(), ConfigError);
}

TEST(Rotary, IdentityAtOrigin) {
    const auto cfg = RopeFreqConfig::with_default_split(12);
    const Tensor v = Tensor::randn({12}, 3, 1.0);
    EXPECT_EQ(apply_rope3d(v, diag(0), cfg).to_vector(), v.to_vector());
}

TEST(Rotary, MatchesReferenceAndPreservesNorm) {
    const auto cfg = RopeFreqConfig::with_default_split(24);
    Rng rng(21);
    for (int trial = 0; trial < 100; ++trial) {
        const Tensor v = Tensor::randn({24}, 500 + static_cast<std::uint64_t>(trial), 1.0);
        const PositionId id{static_cast<std::int64_t>((rng.next_u64() % 500)),
                            static_cast<std::int64_t>((rng.next_u64() % 500)),
                            static_cast<std::int64_t>((rng.next_u64() % 500))};
        const auto out = apply_rope3d(v, id, cfg).to_vector();
        const auto ref = oracle::rope_ref(v.to_vector(), id, cfg);
        EXPECT_LE(max_abs_error(out, ref), 1e-12);
        EXPECT_NEAR(std::sqrt(dot(out, out)), std::sqrt(dot(v.to_vector(), v.to_vector())), 1e-12);
    }
}

TEST(Rotary, ScoresDependOnRelativePositionPerComponent) {
    const auto cfg = RopeFreqConfig::with_default_split(24);
    Rng rng(33);
    auto pos = [&] { return static_cast<std::int64_t>((rng.next_u64() % 200)); };
    for (int trial = 0; trial < 100; ++trial) {
        const Tensor q = Tensor::randn({24}, 900 + static_cast<std::uint64_t>(trial), 1.0);
        const Tensor k = Tensor::randn({24}, 1900 + static_cast<std::uint64_t>(trial), 1.0);
        const PositionId m{pos(), pos(), pos()};
        const PositionId n{pos(), pos(), pos()};
        const PositionId s{pos(), pos(), pos()};
        const double base = dot(apply_rope3d(q, m, cfg).to_vector(), apply_rope3d(k, n, cfg).to_vector());
        const PositionId shifts[4] = {s, {s.t, 0, 0}, {0, s.h, 0}, {0, 0, s.w}};
        for (const auto& sh : shifts) {
            const PositionId ms{m.t + sh.t, m.h + sh.h, m.w + sh.w};
            const PositionId ns{n.t + sh.t, n.h + sh.h, n.w + sh.w};
            const double shifted =
                dot(apply_rope3d(q, ms, cfg).to_vector(), apply_rope3d(k, ns, cfg).to_vector());
            EXPECT_NEAR(base, shifted, 1e-9);
        }
    }
}

TEST(Rotary, RowsApplyPerTokenAndBackpropagate) {
    const auto cfg = RopeFreqConfig::with_default_split(6);
    const std::vector<PositionId> ids{diag(0), id3(3, 1, 2), id3(7, 4, 0)};
    Tensor rows = Tensor::randn({3, 6}, 77, 1.0);
    const auto out = apply_rope3d_rows(rows, ids, cfg).to_vector();
    const auto flat = rows.to_vector();
    for (std::size_t r = 0; r < 3; ++r) {
        const std::vector<double> v(flat.begin() + static_cast<std::ptrdiff_t>(r * 6),
                                    flat.begin() + static_cast<std::ptrdiff_t>(r * 6 + 6));
        const auto ref = oracle::rope_ref(v, ids[r], cfg);
        for (std::size_t c = 0; c < 6; ++c) EXPECT_NEAR(out[r * 6 + c], ref[c], 1e-12);
    }
    const Tensor weights = Tensor::randn({3, 6}, 78, 1.0);
    auto loss = [&](const Tensor& x) { return ops::sum(ops::mul(apply_rope3d_rows(x, ids, cfg), weights)); };
    rows.set_requires_grad();
    backward(loss(rows));
    const Tensor fd = finite_diff_grad(loss, rows.clone(), 1e-6);
    EXPECT_LE(max_abs_error(rows.grad().to_vector(), fd.to_vector()), 1e-8);
    EXPECT_THROW(apply_rope3d_rows(rows, std::vector<PositionId>{diag(0)}, cfg), ShapeError);
}

}  // namespace
