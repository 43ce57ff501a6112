// Copyright (C) 2026 The dcmoe Authors
// SPDX-License-Identifier: Apache-2.0

#include "dcmoe/rope/positions.hpp"

#include <algorithm>
#include <cmath>

#include "dcmoe/core/errors.hpp"

namespace dcmoe::rope {

std::int64_t PositionId::max_component() const noexcept { return std::max({t, h, w}); }

const char* modality_name(Modality m) noexcept {
    switch (m) {
        case Modality::Text: return "text";
        case Modality::Audio: return "audio";
        case Modality::Image: return "image";
        case Modality::Video: return "video";
    }
    return "?";
}

Modality modality_from_name(const std::string& name) {
    if (name == "text") return Modality::Text;
    if (name == "audio") return Modality::Audio;
    if (name == "image") return Modality::Image;
    if (name == "video") return Modality::Video;
    throw ConfigError("unknown modality '" + name + "'");
}

Modality segment_modality(const Segment& segment) noexcept {
    switch (segment.index()) {
        case 0: return Modality::Text;
        case 1: return Modality::Audio;
        case 2: return Modality::Image;
        default: return Modality::Video;
    }
}

namespace {

void check_theta(std::int64_t theta) {
    if (theta <= 0) {
        throw ConfigError("theta must be a positive integer");
    }
}

std::size_t resolve_patch(std::size_t patch, std::size_t extent, const char* axis) {
    if (patch == 0) {
        return extent;
    }
    if (extent % patch != 0) {
        throw ShapeError(std::string("image ") + axis + " of " + std::to_string(extent) +
                         " tokens is not a multiple of the patch size " + std::to_string(patch));
    }
    return patch;
}

}  // namespace

std::vector<PositionId> assign_text(std::int64_t start, std::size_t n) {
    if (n == 0) {
        throw ConfigError("text segment needs at least one token");
    }
    std::vector<PositionId> ids;
    ids.reserve(n);
    for (std::size_t j = 0; j < n; ++j) {
        const std::int64_t p = start + static_cast<std::int64_t>(j);
        ids.push_back({p, p, p});
    }
    return ids;
}

std::vector<TokenPosition> assign_audio(std::int64_t start, double duration_s, std::int64_t theta) {
    check_theta(theta);
    if (!(duration_s > 0.0) || !std::isfinite(duration_s)) {
        throw ConfigError("audio duration must be positive");
    }
    const double unit = static_cast<double>(kAudioUnitSeconds);
    // Tolerate float noise in durations such as 120.0000000001.
    const auto units = static_cast<std::size_t>(std::ceil(duration_s / unit - 1e-9));
    const double tail_seconds = duration_s - unit * static_cast<double>(units - 1);
    const auto tail_tokens = std::min<std::size_t>(
        kAudioTokensPerUnit,
        static_cast<std::size_t>(std::ceil(static_cast<double>(kAudioTokensPerUnit) * tail_seconds / unit - 1e-9)));

    std::vector<TokenPosition> out;
    out.reserve(units * kAudioTokensPerUnit);
    for (std::size_t u = 0; u < units; ++u) {
        const std::int64_t p = start + kAudioUnitSeconds * static_cast<std::int64_t>(u) * theta;
        for (std::size_t j = 0; j < kAudioTokensPerUnit; ++j) {
            const bool pad = (u + 1 == units) && j >= tail_tokens;
            out.push_back({{p, p, p}, Modality::Audio, pad});
        }
    }
    return out;
}

ImageLayout assign_image(std::int64_t start, const ImageSegment& image) {
    if (image.rows == 0 || image.cols == 0) {
        throw ConfigError("image grid must have at least one row and column");
    }
    const std::size_t pr = resolve_patch(image.patch_rows, image.rows, "rows");
    const std::size_t pc = resolve_patch(image.patch_cols, image.cols, "cols");
    ImageLayout layout;
    layout.order.reserve(image.rows * image.cols);
    layout.ids.reserve(image.rows * image.cols);
    for (std::size_t r0 = 0; r0 < image.rows; r0 += pr) {
        for (std::size_t c0 = 0; c0 < image.cols; c0 += pc) {
            for (std::size_t r = r0; r < r0 + pr; ++r) {
                for (std::size_t c = c0; c < c0 + pc; ++c) {
                    layout.order.emplace_back(r, c);
                    layout.ids.push_back(
                        {start, start + static_cast<std::int64_t>(r), start + static_cast<std::int64_t>(c)});
                }
            }
        }
    }
    return layout;
}

std::size_t clamp_frame_count(std::size_t sampled, std::size_t min_frames, std::size_t max_frames) {
    if (min_frames > max_frames) {
        throw ConfigError("minimum frame count exceeds the maximum");
    }
    return std::min(std::max(sampled, min_frames), max_frames);
}

std::vector<PositionId> assign_video(std::int64_t start, const VideoSegment& video, std::int64_t theta) {
    check_theta(theta);
    if (!(video.duration_s > 0.0) || !(video.fps > 0.0) || !std::isfinite(video.duration_s) ||
        !std::isfinite(video.fps)) {
        throw ConfigError("video duration and fps must be positive");
    }
    if (video.min_frames == 0) {
        throw ConfigError("video must keep at least one frame");
    }
    const auto sampled =
        std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(video.duration_s * video.fps - 1e-9)));
    const std::size_t frames = clamp_frame_count(sampled, video.min_frames, video.max_frames);

    const ImageLayout grid =
        assign_image(0, ImageSegment{video.rows, video.cols, video.patch_rows, video.patch_cols});
    std::vector<PositionId> ids;
    ids.reserve(frames * grid.ids.size());
    for (std::size_t j = 0; j < frames; ++j) {
        const double tau = frames == sampled
                               ? static_cast<double>(j) / video.fps
                               : static_cast<double>(j) * video.duration_s / static_cast<double>(frames);
        const std::int64_t t = start + std::llround(tau * static_cast<double>(theta));
        for (const PositionId& g : grid.ids) {
            ids.push_back({t, start + g.h, start + g.w});
        }
    }
    return ids;
}

SequenceAssigner::SequenceAssigner(std::int64_t theta) : theta_(theta) { check_theta(theta); }

void SequenceAssigner::append(const Segment& segment) {
    const std::int64_t start = next_start_;
    const Modality modality = segment_modality(segment);
    std::vector<TokenPosition> added;
    if (const auto* text = std::get_if<TextSegment>(&segment)) {
        for (const auto& id : assign_text(start, text->tokens)) {
            added.push_back({id, modality, false});
        }
    } else if (const auto* audio = std::get_if<AudioSegment>(&segment)) {
        added = assign_audio(start, audio->duration_s, theta_);
    } else if (const auto* image = std::get_if<ImageSegment>(&segment)) {
        for (const auto& id : assign_image(start, *image).ids) {
            added.push_back({id, modality, false});
        }
    } else {
        for (const auto& id : assign_video(start, std::get<VideoSegment>(segment), theta_)) {
            added.push_back({id, modality, false});
        }
    }
    for (const auto& tok : added) {
        next_start_ = std::max(next_start_, tok.id.max_component() + 1);
    }
    tokens_.insert(tokens_.end(), added.begin(), added.end());
}

std::vector<TokenPosition> assign_sequence(std::span<const Segment> segments, std::int64_t theta) {
    if (segments.empty()) {
        throw ConfigError("segment list is empty");
    }
    SequenceAssigner assigner(theta);
    for (const auto& s : segments) {
        assigner.append(s);
    }
    return assigner.tokens();
}

}  // namespace dcmoe::rope
