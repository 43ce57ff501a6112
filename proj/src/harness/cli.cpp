// Copyright (C) 2026 The dcmoe Authors
// SPDX-License-Identifier: Apache-2.0

#include "dcmoe/harness/cli.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <optional>
#include <ranges>

#include "CLI11.hpp"
#include "json.hpp"

#include "dcmoe/analytics/reports.hpp"
#include "dcmoe/analytics/trace_io.hpp"
#include "dcmoe/core/errors.hpp"
#include "dcmoe/harness/config_io.hpp"
#include "dcmoe/harness/gradcheck.hpp"
#include "dcmoe/harness/train.hpp"

namespace dcmoe::harness {

namespace {

namespace fs = std::filesystem;

// Raised for bad inputs discovered after argument parsing.
struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

std::ofstream open_out(const fs::path& path) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw UsageError("cannot open " + path.string() + " for writing");
    return out;
}

int cmd_gradcheck(const std::string& config_path, double eps, double tol, std::ostream& out) {
    const ToyModelConfig cfg = config_path.empty() ? ToyModelConfig::gradcheck_defaults() : load_config(config_path);
    GradCheckOptions options;
    options.eps = eps;
    options.tol = tol;
    const GradCheckReport report = grad_check(cfg, options);

    for (const auto& b : report.blocks) {
        out << (b.passed ? "PASS " : "FAIL ") << b.name << " rel_err=" << b.rel_error << " coords=" << b.coordinates
            << " skipped=" << b.skipped << '\n';
    }
    double worst = 0.0;
    for (const auto& u : report.unbiasedness) worst = std::max(worst, u.max_abs_error);
    out << (report.unbiasedness_passed() ? "PASS " : "FAIL ") << "unbiasedness cases=" << report.unbiasedness.size()
        << " max_abs_err=" << worst << '\n';
    if (!report.passed()) {
        out << "failing:";
        for (const auto& name : report.failing_blocks()) out << ' ' << name;
        out << '\n';
        return kExitCheckFailed;
    }
    return kExitOk;
}

int cmd_train(const std::string& config_path, std::optional<std::size_t> steps, std::optional<std::uint64_t> seed,
              const std::string& out_dir, std::ostream& out) {
    ToyModelConfig cfg = config_path.empty() ? ToyModelConfig::defaults() : load_config(config_path);
    if (steps) cfg.steps = *steps;
    if (seed) cfg.seed = *seed;
    const TrainResult result = train(cfg);

    fs::create_directories(out_dir);
    auto loss_out = open_out(fs::path(out_dir) / "loss.csv");
    write_loss_csv(result.losses, loss_out);
    auto trace_out = open_out(fs::path(out_dir) / "trace.csv");
    analytics::write_trace_csv(result.trace, trace_out);

    out << "steps=" << result.losses.size();
    if (!result.losses.empty()) {
        out << " initial_loss=" << result.losses.front() << " final_loss=" << result.losses.back();
    }
    out << " records=" << result.trace.size() << '\n';
    return kExitOk;
}

analytics::Format guess_format(const fs::path& path, const std::string& explicit_format) {
    if (!explicit_format.empty()) return analytics::format_from_name(explicit_format);
    return path.extension() == ".jsonl" ? analytics::Format::Jsonl : analytics::Format::Csv;
}

void write_analysis(const analytics::RoutingTrace& trace, const std::vector<std::size_t>& layers, bool by_modality,
                    bool include_shared, std::ostream& out) {
    using analytics::format_double;
    out << "kind,group,layer,step,key,value\n";
    std::vector<std::optional<std::string>> groups{std::nullopt};
    if (by_modality) {
        groups.clear();
        for (auto& m : analytics::modalities_in(trace)) groups.emplace_back(m);
    }
    for (std::size_t layer : layers) {
        for (const auto& g : groups) {
            analytics::ReportFilter filter;
            filter.modality = g;
            filter.include_shared = include_shared;
            const std::string group = g.value_or("all");
            analytics::ActivationReport rep;
            try {
                rep = analytics::activation_proportions(trace, layer, filter);
            } catch (const analytics::EmptySelectionError&) {
                continue;
            }
            for (const auto& [id, p] : rep.proportion) {
                out << "proportion," << group << ',' << layer << ",all," << id << ',' << format_double(p) << '\n';
            }
            for (const auto& [k, f] : analytics::expert_count_histogram(trace, layer, filter)) {
                out << "k_histogram," << group << ',' << layer << ",all," << k << ',' << format_double(f) << '\n';
            }
            for (const auto& id : rep.proportion | std::views::keys) {
                for (const auto& [step, p] : analytics::dynamics_over_steps(trace, layer, id, filter)) {
                    out << "dynamics," << group << ',' << layer << ',' << step << ',' << id << ','
                        << format_double(p) << '\n';
                }
            }
        }
    }
}

int cmd_analyze(const std::string& trace_path, std::optional<std::size_t> layer, const std::string& group_by,
                const std::string& out_path, bool include_shared, const std::string& format, std::ostream& out) {
    const auto trace = analytics::import_trace(trace_path, guess_format(trace_path, format));
    std::vector<std::size_t> layers = analytics::layers_in(trace);
    if (layer) {
        if (std::find(layers.begin(), layers.end(), *layer) == layers.end()) {
            throw UsageError("layer " + std::to_string(*layer) + " does not appear in the trace");
        }
        layers = {*layer};
    }
    const bool by_modality = group_by == "modality";
    if (out_path.empty()) {
        write_analysis(trace, layers, by_modality, include_shared, out);
    } else {
        auto f = open_out(out_path);
        write_analysis(trace, layers, by_modality, include_shared, f);
    }
    return kExitOk;
}

int cmd_rope_dump(const std::string& segments_path, std::optional<std::int64_t> theta, const std::string& out_path,
                  std::ostream& out) {
    const SegmentSpec spec = load_segment_spec(segments_path);
    const std::int64_t th = theta.value_or(spec.theta);
    if (th <= 0) throw UsageError("theta must be a positive integer");
    const auto tokens = rope::assign_sequence(spec.segments, th);

    auto emit = [&](std::ostream& o) {
        for (std::size_t i = 0; i < tokens.size(); ++i) {
            const auto& tp = tokens[i];
            nlohmann::ordered_json j = {{"index", i},
                                       {"modality", rope::modality_name(tp.modality)},
                                       {"t", tp.id.t},
                                       {"h", tp.id.h},
                                       {"w", tp.id.w},
                                       {"padding", tp.padding}};
            o << j.dump() << '\n';
        }
    };
    if (out_path.empty()) {
        emit(out);
    } else {
        auto f = open_out(out_path);
        emit(f);
    }
    return kExitOk;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Dynamic-capacity MoE toolkit", "dcmoe"};
    app.require_subcommand(1, 1);

    std::string gc_config;
    double gc_eps = 1e-6;
    double gc_tol = 1e-4;
    auto* gc = app.add_subcommand("gradcheck", "Finite-difference and unbiasedness checks");
    gc->add_option("--config", gc_config, "Model config JSON (default: built-in small model)");
    gc->add_option("--eps", gc_eps, "Central-difference step")->capture_default_str()->check(CLI::PositiveNumber);
    gc->add_option("--tol", gc_tol, "Relative-error tolerance per block")->capture_default_str()->check(
        CLI::PositiveNumber);

    std::string tr_config;
    std::optional<std::size_t> tr_steps;
    std::optional<std::uint64_t> tr_seed;
    std::string tr_out;
    auto* tr = app.add_subcommand("train", "Train the toy model and write loss.csv and trace.csv");
    tr->add_option("--config", tr_config, "Model config JSON (default: built-in toy model)");
    tr->add_option("--steps", tr_steps, "Override the number of steps");
    tr->add_option("--seed", tr_seed, "Override the seed");
    tr->add_option("--out", tr_out, "Output directory")->required();

    std::string an_trace;
    std::optional<std::size_t> an_layer;
    std::string an_group = "none";
    std::string an_out;
    std::string an_format;
    bool an_shared = false;
    auto* an = app.add_subcommand("analyze", "Activation proportions, k histograms and dynamics");
    an->add_option("--trace", an_trace, "Trace file (.csv or .jsonl)")->required()->check(CLI::ExistingFile);
    an->add_option("--layer", an_layer, "Layer to report (default: all)");
    an->add_option("--group-by", an_group, "none or modality")
        ->capture_default_str()
        ->check(CLI::IsMember({"none", "modality"}));
    an->add_option("--out", an_out, "Output CSV (default: stdout)");
    an->add_option("--format", an_format, "Trace format override")->check(CLI::IsMember({"csv", "jsonl"}));
    an->add_flag("--include-shared", an_shared, "Count shared experts too");

    std::string rd_segments;
    std::optional<std::int64_t> rd_theta;
    std::string rd_out;
    auto* rd = app.add_subcommand("rope-dump", "Print 3D position IDs for a segment spec as JSONL");
    rd->add_option("--segments", rd_segments, "Segment spec JSON")->required()->check(CLI::ExistingFile);
    rd->add_option("--theta", rd_theta, "Temporal IDs per second (default: from the spec)");
    rd->add_option("--out", rd_out, "Output JSONL (default: stdout)");

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e, out, err);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e, out, err);
    } catch (const CLI::ParseError& e) {
        app.exit(e, out, err);
        err << app.help();
        return kExitUsage;
    }

    try {
        if (gc->parsed()) return cmd_gradcheck(gc_config, gc_eps, gc_tol, out);
        if (tr->parsed()) return cmd_train(tr_config, tr_steps, tr_seed, tr_out, out);
        if (an->parsed()) return cmd_analyze(an_trace, an_layer, an_group, an_out, an_shared, an_format, out);
        if (rd->parsed()) return cmd_rope_dump(rd_segments, rd_theta, rd_out, out);
    } catch (const DivergenceError& e) {
        err << "error: " << e.what() << '\n';
        return kExitCheckFailed;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return kExitUsage;
    }
    err << app.help();
    return kExitUsage;
}

}  // namespace dcmoe::harness
