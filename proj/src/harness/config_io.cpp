// Copyright (C) 2026 The dcmoe Authors
// SPDX-License-Identifier: Apache-2.0

#include "dcmoe/harness/config_io.hpp"

#include <fstream>

#include "dcmoe/core/errors.hpp"

namespace dcmoe::harness {

using nlohmann::json;

namespace {

template <typename T>
void read_opt(const json& j, const char* key, T& field) {
    if (auto it = j.find(key); it != j.end()) {
        field = it->get<T>();
    }
}

json parse_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw ConfigError("cannot open " + path.string());
    }
    try {
        return json::parse(in);
    } catch (const json::exception& e) {
        throw ConfigError(path.string() + ": " + e.what());
    }
}

}  // namespace

rope::Segment segment_from_json(const json& j) {
    const std::string kind = j.at("kind").get<std::string>();
    if (kind == "text") {
        rope::TextSegment s;
        read_opt(j, "tokens", s.tokens);
        return s;
    }
    if (kind == "audio") {
        rope::AudioSegment s;
        read_opt(j, "duration_s", s.duration_s);
        return s;
    }
    if (kind == "image") {
        rope::ImageSegment s;
        read_opt(j, "rows", s.rows);
        read_opt(j, "cols", s.cols);
        read_opt(j, "patch_rows", s.patch_rows);
        read_opt(j, "patch_cols", s.patch_cols);
        return s;
    }
    if (kind == "video") {
        rope::VideoSegment s;
        read_opt(j, "duration_s", s.duration_s);
        read_opt(j, "fps", s.fps);
        read_opt(j, "rows", s.rows);
        read_opt(j, "cols", s.cols);
        read_opt(j, "f_l", s.min_frames);
        read_opt(j, "f_u", s.max_frames);
        read_opt(j, "patch_rows", s.patch_rows);
        read_opt(j, "patch_cols", s.patch_cols);
        return s;
    }
    throw ConfigError("unknown segment kind '" + kind + "'");
}

json segment_to_json(const rope::Segment& segment) {
    return std::visit(
        [](const auto& s) -> json {
            using S = std::decay_t<decltype(s)>;
            if constexpr (std::is_same_v<S, rope::TextSegment>) {
                return {{"kind", "text"}, {"tokens", s.tokens}};
            } else if constexpr (std::is_same_v<S, rope::AudioSegment>) {
                return {{"kind", "audio"}, {"duration_s", s.duration_s}};
            } else if constexpr (std::is_same_v<S, rope::ImageSegment>) {
                return {{"kind", "image"},
                        {"rows", s.rows},
                        {"cols", s.cols},
                        {"patch_rows", s.patch_rows},
                        {"patch_cols", s.patch_cols}};
            } else {
                return {{"kind", "video"},   {"duration_s", s.duration_s}, {"fps", s.fps},
                        {"rows", s.rows},    {"cols", s.cols},             {"f_l", s.min_frames},
                        {"f_u", s.max_frames}, {"patch_rows", s.patch_rows}, {"patch_cols", s.patch_cols}};
            }
        },
        segment);
}

ToyModelConfig config_from_json(const json& j) {
    try {
        ToyModelConfig cfg = ToyModelConfig::defaults();
        read_opt(j, "layers", cfg.layers);
        read_opt(j, "heads", cfg.heads);
        read_opt(j, "head_dim", cfg.head_dim);
        read_opt(j, "learning_rate", cfg.learning_rate);
        read_opt(j, "steps", cfg.steps);
        read_opt(j, "batch", cfg.batch);
        read_opt(j, "seed", cfg.seed);
        if (auto it = j.find("estimator"); it != j.end()) {
            cfg.estimator = estimator::variant_from_name(it->get<std::string>());
        }

        if (auto it = j.find("moe"); it != j.end()) {
            const json& m = *it;
            read_opt(m, "d_model", cfg.moe.d_model);
            read_opt(m, "n_routed", cfg.moe.n_routed);
            read_opt(m, "n_null", cfg.moe.n_null);
            read_opt(m, "n_shared", cfg.moe.n_shared);
            read_opt(m, "expert_hidden", cfg.moe.expert_hidden);
            read_opt(m, "shared_hidden", cfg.moe.shared_hidden);
            read_opt(m, "top_p", cfg.moe.top_p);
            read_opt(m, "seed", cfg.moe.seed);
            if (auto mode = m.find("routing_mode"); mode != m.end()) {
                cfg.moe.routing_mode = moe::mode_from_name(mode->get<std::string>());
            }
        }

        double base = cfg.rope.base;
        std::vector<std::size_t> split;
        if (auto it = j.find("rope"); it != j.end()) {
            read_opt(*it, "base", base);
            read_opt(*it, "split", split);
        }
        if (split.empty()) {
            cfg.rope = rope::RopeFreqConfig::with_default_split(cfg.head_dim, base);
        } else {
            if (split.size() != 3) throw ConfigError("rope.split must list three block widths");
            cfg.rope = rope::RopeFreqConfig{cfg.head_dim, split[0], split[1], split[2], base};
        }

        if (auto it = j.find("data"); it != j.end()) {
            const json& d = *it;
            read_opt(d, "theta", cfg.data.theta);
            read_opt(d, "n_classes", cfg.data.n_classes);
            read_opt(d, "noise", cfg.data.noise);
            read_opt(d, "resample", cfg.data.resample);
            if (auto segs = d.find("segments"); segs != d.end()) {
                cfg.data.segments.clear();
                for (const auto& s : *segs) {
                    cfg.data.segments.push_back(segment_from_json(s));
                }
            }
        }
        cfg.validate();
        return cfg;
    } catch (const json::exception& e) {
        throw ConfigError(std::string("invalid config: ") + e.what());
    }
}

json config_to_json(const ToyModelConfig& cfg) {
    json segs = json::array();
    for (const auto& s : cfg.data.segments) {
        segs.push_back(segment_to_json(s));
    }
    return {
        {"layers", cfg.layers},
        {"heads", cfg.heads},
        {"head_dim", cfg.head_dim},
        {"learning_rate", cfg.learning_rate},
        {"steps", cfg.steps},
        {"batch", cfg.batch},
        {"seed", cfg.seed},
        {"estimator", estimator::variant_name(cfg.estimator)},
        {"moe",
         {{"d_model", cfg.moe.d_model},
          {"n_routed", cfg.moe.n_routed},
          {"n_null", cfg.moe.n_null},
          {"n_shared", cfg.moe.n_shared},
          {"expert_hidden", cfg.moe.expert_hidden},
          {"shared_hidden", cfg.moe.shared_hidden},
          {"top_p", cfg.moe.top_p},
          {"routing_mode", moe::mode_name(cfg.moe.routing_mode)},
          {"seed", cfg.moe.seed}}},
        {"rope", {{"split", {cfg.rope.d_t, cfg.rope.d_h, cfg.rope.d_w}}, {"base", cfg.rope.base}}},
        {"data",
         {{"theta", cfg.data.theta},
          {"n_classes", cfg.data.n_classes},
          {"noise", cfg.data.noise},
          {"resample", cfg.data.resample},
          {"segments", std::move(segs)}}},
    };
}

ToyModelConfig load_config(const std::filesystem::path& path) { return config_from_json(parse_file(path)); }

SegmentSpec segment_spec_from_json(const json& j) {
    try {
        SegmentSpec spec;
        read_opt(j, "theta", spec.theta);
        for (const auto& s : j.at("segments")) {
            spec.segments.push_back(segment_from_json(s));
        }
        if (spec.segments.empty()) {
            throw ConfigError("segment spec has no segments");
        }
        return spec;
    } catch (const json::exception& e) {
        throw ConfigError(std::string("invalid segment spec: ") + e.what());
    }
}

SegmentSpec load_segment_spec(const std::filesystem::path& path) { return segment_spec_from_json(parse_file(path)); }

}  // namespace dcmoe::harness
