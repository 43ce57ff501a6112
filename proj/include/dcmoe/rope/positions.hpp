// Copyright (C) 2026 The dcmoe Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <limits>
#include <span>
#include <string>
#include <utility>
#include <variant>
#include <vector>

namespace dcmoe::rope {

/// (temporal, height, width) rotary coordinate of one token.
struct PositionId {
    std::int64_t t = 0;
    std::int64_t h = 0;
    std::int64_t w = 0;

    std::int64_t max_component() const noexcept;
    bool operator==(const PositionId&) const = default;
};

enum class Modality { Text, Audio, Image, Video };

const char* modality_name(Modality m) noexcept;
Modality modality_from_name(const std::string& name);

/// Audio is tokenized in fixed units of 20 tokens per 3 seconds.
inline constexpr std::size_t kAudioTokensPerUnit = 20;
inline constexpr std::int64_t kAudioUnitSeconds = 3;

struct TextSegment {
    std::size_t tokens = 1;
};

struct AudioSegment {
    double duration_s = 3.0;
};

/// Token grid of one image (or one video frame). The grid is tiled into
/// patch_rows x patch_cols vision patches, traversed patch by patch; 0 means a
/// single patch covering the whole axis.
struct ImageSegment {
    std::size_t rows = 1;
    std::size_t cols = 1;
    std::size_t patch_rows = 0;
    std::size_t patch_cols = 0;
};

struct VideoSegment {
    double duration_s = 1.0;
    double fps = 1.0;
    std::size_t rows = 1;
    std::size_t cols = 1;
    std::size_t min_frames = 1;                                      // f_l
    std::size_t max_frames = std::numeric_limits<std::size_t>::max();  // f_u
    std::size_t patch_rows = 0;
    std::size_t patch_cols = 0;
};

using Segment = std::variant<TextSegment, AudioSegment, ImageSegment, VideoSegment>;

Modality segment_modality(const Segment& segment) noexcept;

struct TokenPosition {
    PositionId id;
    Modality modality = Modality::Text;
    /// Filler token completing a partial trailing audio unit.
    bool padding = false;

    bool operator==(const TokenPosition&) const = default;
};

/// (start + j, start + j, start + j) for j in [0, n).
std::vector<PositionId> assign_text(std::int64_t start, std::size_t n);

/// One triple per 3-second unit u, (y + 3u*theta) on every axis, repeated 20
/// times. A partial final unit is padded to 20 tokens; the filler is flagged.
std::vector<TokenPosition> assign_audio(std::int64_t start, double duration_s, std::int64_t theta);

struct ImageLayout {
    /// (row, col) of each token in sequence (patch-wise) order.
    std::vector<std::pair<std::size_t, std::size_t>> order;
    /// IDs in the same sequence order; they depend only on (row, col).
    std::vector<PositionId> ids;
};

/// t fixed at start; h = start + row, w = start + col.
ImageLayout assign_image(std::int64_t start, const ImageSegment& image);

/// min(max(sampled, f_l), f_u)
std::size_t clamp_frame_count(std::size_t sampled, std::size_t min_frames, std::size_t max_frames);

/// Frames sampled at `fps` (ceil(duration * fps) of them), clamped to
/// [min_frames, max_frames]. An unclamped frame j sits at tau = j / fps; a
/// clamped count is spread evenly, tau = j * duration / f_n. Each frame is laid
/// out like an image with t = start + round(tau * theta).
std::vector<PositionId> assign_video(std::int64_t start, const VideoSegment& video, std::int64_t theta);

/// Assigns consecutive segments. The first starts at 0 and each later segment
/// starts one past the largest component of any earlier ID.
class SequenceAssigner {
  public:
    explicit SequenceAssigner(std::int64_t theta = 1);

    void append(const Segment& segment);
    const std::vector<TokenPosition>& tokens() const noexcept { return tokens_; }
    std::int64_t next_start() const noexcept { return next_start_; }

  private:
    std::int64_t theta_;
    std::int64_t next_start_ = 0;
    std::vector<TokenPosition> tokens_;
};

std::vector<TokenPosition> assign_sequence(std::span<const Segment> segments, std::int64_t theta = 1);

}  // namespace dcmoe::rope
