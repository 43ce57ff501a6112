// Copyright (C) 2026 The dcmoe Authors
// SPDX-License-Identifier: Apache-2.0

// Acceptance suite. Prints one PASS/FAIL line per criterion and exits
// non-zero when any criterion fails. Tolerances and time budgets are fixed
// here and are not configurable.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "oracles.hpp"

#include "dcmoe/analytics/reports.hpp"
#include "dcmoe/analytics/trace.hpp"
#include "dcmoe/analytics/trace_io.hpp"
#include "dcmoe/core/finite_diff.hpp"
#include "dcmoe/core/ops.hpp"
#include "dcmoe/core/rng.hpp"
#include "dcmoe/estimator/estimator.hpp"
#include "dcmoe/estimator/oracle.hpp"
#include "dcmoe/harness/config.hpp"
#include "dcmoe/harness/gradcheck.hpp"
#include "dcmoe/harness/train.hpp"
#include "dcmoe/moe/layer.hpp"
#include "dcmoe/moe/routing.hpp"
#include "dcmoe/rope/positions.hpp"
#include "dcmoe/rope/rotary.hpp"

namespace {

using namespace dcmoe;
using Clock = std::chrono::steady_clock;

struct Outcome {
    bool passed = true;
    std::string detail;
};

class Detail {
  public:
    template <typename T>
    Detail& kv(const std::string& key, const T& value) {
        if (!first_) os_ << ' ';
        first_ = false;
        os_ << key << '=' << value;
        return *this;
    }
    std::string str() const { return os_.str(); }

  private:
    std::ostringstream os_;
    bool first_ = true;
};

// Criterion 1 ---------------------------------------------------------------

constexpr double kValueTol = 1e-15;
constexpr double kGradTol = 1e-12;
constexpr double kEstimatorBudget = 1.0;

Outcome estimator_split() {
    double value_err = 0.0;
    double grad_err = 0.0;
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        Tensor w = Tensor::randn({5, 4}, 7000 + seed, 1.0);
        w.set_requires_grad();
        const Tensor x = Tensor::randn({4}, 8000 + seed, 1.0);
        const Tensor weights = Tensor::randn({5}, 9000 + seed, 1.0);
        for (bool delta : {false, true}) {
            for (bool b : {false, true}) {
                const double scale = std::max(delta ? 1.0 : 0.0, (1.0 + 2.0 * (b ? 1.0 : 0.0)) / 3.0);
                const Tensor o = ops::matvec(w, x);
                const Tensor est = estimator::apply_estimator(o, delta, b);
                const auto ov = o.to_vector();
                const auto ev = est.to_vector();
                for (std::size_t i = 0; i < ov.size(); ++i) value_err = std::max(value_err, std::abs(ev[i] - scale * ov[i]));

                backward(ops::dot(est, weights));
                const auto g_est = w.grad().to_vector();
                w.zero_grad();
                backward(ops::dot(ops::matvec(w, x), weights));
                const auto g_plain = w.grad().to_vector();
                w.zero_grad();
                for (std::size_t i = 0; i < g_est.size(); ++i) {
                    grad_err = std::max(grad_err, std::abs(g_est[i] - 2.0 * g_plain[i]));
                }
            }
        }
    }
    return {value_err <= kValueTol && grad_err <= kGradTol,
            Detail().kv("value_err", value_err).kv("grad_err", grad_err).kv("value_tol", kValueTol).kv("grad_tol", kGradTol).str()};
}

// Criterion 2 ---------------------------------------------------------------

constexpr double kUnbiasedTol = 1e-10;
constexpr double kUnbiasedBudget = 5.0;

Outcome top1_unbiasedness() {
    double worst = 0.0;
    double worst_ref = 0.0;
    std::size_t cases = 0;
    for (std::size_t n_routed : {2, 3, 4}) {
        for (std::size_t n_null : {0, 1}) {
            for (std::uint64_t seed = 0; seed < 20; ++seed) {
                const auto obj = estimator::ClosedFormObjective::random(n_routed, n_null, 8, estimator::Degree::Linear, seed);
                const Tensor z = Tensor::randn({n_routed + n_null}, 40000 + seed * 7 + n_routed, 1.5);
                const auto exact = estimator::exact_gradient_oracle(obj, z).to_vector();
                const auto enumerated = estimator::estimator_expectation(obj, z).to_vector();
                const auto ref = oracle::objective_gradient_ref(oracle::objective_scalars(obj, z));
                worst = std::max(worst, max_abs_error(exact, enumerated));
                worst_ref = std::max(worst_ref, max_abs_error(exact, ref));
                ++cases;
            }
        }
    }
    return {worst <= kUnbiasedTol && worst_ref <= kUnbiasedTol,
            Detail().kv("cases", cases).kv("max_err", worst).kv("autodiff_vs_closed_form", worst_ref).kv("tol", kUnbiasedTol).str()};
}

// Criterion 3 ---------------------------------------------------------------

constexpr double kQuadratureTol = 1e-12;

Outcome heun_quadrature() {
    const std::vector<std::function<double(double)>> g{[](double) { return 1.0; }, [](double t) { return t; },
                                                       [](double t) { return t * t; }};
    const std::vector<std::function<double(double)>> integral{
        [](double a) { return a; }, [](double a) { return a * a / 2.0; }, [](double a) { return a * a * a / 3.0; }};
    double worst = 0.0;
    for (double a : {0.25, 0.5, 1.0, 1.7, 3.0, -2.0}) {
        for (std::size_t i = 0; i < g.size(); ++i) {
            const double rule = (0.25 * g[i](a) + 0.75 * g[i](a / 3.0)) * a;
            worst = std::max(worst, std::abs(rule - integral[i](a)));
            worst = std::max(worst, std::abs(estimator::heun_quadrature(g[i], a) - integral[i](a)));
        }
    }
    bool identity = estimator::coefficient_identity_holds();
    for (int b : {0, 1}) identity = identity && (6.0 - 4.0 * b) * (1.0 + 2.0 * b) / 3.0 == 2.0;
    return {worst <= kQuadratureTol && identity,
            Detail().kv("max_err", worst).kv("tol", kQuadratureTol).kv("coefficient_identity", identity ? "exact" : "broken").str()};
}

// Criterion 4 ---------------------------------------------------------------

constexpr double kTopPBudget = 5.0;

Outcome top_p_oracle() {
    std::uint64_t state = 2024;
    std::size_t vectors = 0;
    std::size_t tied = 0;
    std::size_t mismatches = 0;
    for (int trial = 0; trial < 10000; ++trial) {
        const std::size_t n = 1 + static_cast<std::size_t>(trial % 16);
        std::vector<double> p = oracle::random_simplex(n, state);
        if (trial % 4 == 0) {
            // Coarse integer weights so equal probabilities are common.
            state = state * 6364136223846793005ULL + 1442695040888963407ULL;
            double total = 0.0;
            for (std::size_t i = 0; i < n; ++i) total += (p[i] = static_cast<double>(1 + (state >> (i * 2 % 60)) % 3));
            for (auto& v : p) v /= total;
            bool has_tie = false;
            for (std::size_t i = 0; i < n; ++i) {
                for (std::size_t j = i + 1; j < n; ++j) has_tie = has_tie || p[i] == p[j];
            }
            tied += has_tie ? 1 : 0;
        }
        for (double P : {0.1, 0.7, 1.0}) {
            const auto got = moe::select_top_p_deterministic(p, P).active();
            if (got != oracle::top_p_prefix_oracle(p, P)) ++mismatches;
        }
        ++vectors;
    }
    return {mismatches == 0 && tied > 0, Detail().kv("vectors", vectors).kv("tie_cases", tied).kv("mismatches", mismatches).str()};
}

// Criterion 5 ---------------------------------------------------------------

constexpr double kGradCheckEps = 1e-6;
constexpr double kGradCheckTol = 1e-4;
constexpr double kGradCheckBudget = 60.0;

Outcome full_gradcheck() {
    harness::GradCheckOptions opts;
    opts.eps = kGradCheckEps;
    opts.tol = kGradCheckTol;
    const auto report = harness::grad_check(harness::ToyModelConfig::gradcheck_defaults(), opts);
    double worst = 0.0;
    std::size_t coords = 0;
    std::size_t skipped = 0;
    for (const auto& b : report.blocks) {
        worst = std::max(worst, b.rel_error);
        coords += b.coordinates;
        skipped += b.skipped;
    }
    Detail d;
    d.kv("blocks", report.blocks.size()).kv("coords", coords).kv("skipped", skipped).kv("max_rel_err", worst).kv("tol", kGradCheckTol);
    for (const auto& name : report.failing_blocks()) d.kv("failing", name);
    return {report.blocks_passed() && !report.blocks.empty(), d.str()};
}

// Criterion 6 ---------------------------------------------------------------

Outcome rope_worked_example() {
    std::size_t checks = 0;
    std::size_t failures = 0;
    auto expect = [&](const rope::PositionId& got, const rope::PositionId& want) {
        ++checks;
        failures += got == want ? 0 : 1;
    };
    for (std::int64_t theta : {1, 2}) {
        for (std::size_t x : {1, 5, 37}) {
            for (std::size_t side : {2, 4, 9}) {
                const std::int64_t X = static_cast<std::int64_t>(x);
                const std::int64_t p = static_cast<std::int64_t>(side) - 1;
                const std::vector<rope::Segment> segs{rope::TextSegment{x}, rope::VideoSegment{120.0, 0.5, side, side},
                                                      rope::AudioSegment{120.0}};
                const auto toks = rope::assign_sequence(segs, theta);
                const std::size_t frame = side * side;
                const std::size_t video = 60 * frame;
                if (toks.size() != x + video + 40 * 20) {
                    ++failures;
                    continue;
                }
                expect(toks[x - 1].id, {X - 1, X - 1, X - 1});
                expect(toks[x].id, {X, X, X});
                expect(toks[x + frame].id, {X + 2 * theta, X, X});
                expect(toks[x + video - 1].id, {X + 118 * theta, X + p, X + p});
                const std::int64_t y = X + 118 * theta + 1;
                expect(toks[x + video].id, {y, y, y});
                for (std::size_t i = toks.size() - 20; i < toks.size(); ++i) {
                    expect(toks[i].id, {y + 117 * theta, y + 117 * theta, y + 117 * theta});
                }
            }
        }
    }
    return {failures == 0, Detail().kv("checks", checks).kv("failures", failures).kv("theta", "{1,2}").str()};
}

// Criterion 7 ---------------------------------------------------------------

constexpr double kScoreTol = 1e-9;
constexpr double kNormTol = 1e-12;

double dot(const std::vector<double>& a, const std::vector<double>& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

Outcome rope_relative() {
    const auto cfg = rope::RopeFreqConfig::with_default_split(24);
    Rng rng(77);
    auto pos = [&] { return static_cast<std::int64_t>(rng.next_u64() % 4096); };
    double score_err = 0.0;
    double norm_err = 0.0;
    for (int draw = 0; draw < 100; ++draw) {
        const Tensor q = Tensor::randn({24}, 50000 + static_cast<std::uint64_t>(draw), 1.0);
        const Tensor k = Tensor::randn({24}, 60000 + static_cast<std::uint64_t>(draw), 1.0);
        const rope::PositionId m{pos(), pos(), pos()};
        const rope::PositionId n{pos(), pos(), pos()};
        const rope::PositionId s{pos(), pos(), pos()};
        const auto qm = rope::apply_rope3d(q, m, cfg).to_vector();
        const auto kn = rope::apply_rope3d(k, n, cfg).to_vector();
        const double base = dot(qm, kn);
        const rope::PositionId shifts[4] = {s, {s.t, 0, 0}, {0, s.h, 0}, {0, 0, s.w}};
        for (const auto& sh : shifts) {
            const auto qs = rope::apply_rope3d(q, {m.t + sh.t, m.h + sh.h, m.w + sh.w}, cfg).to_vector();
            const auto ks = rope::apply_rope3d(k, {n.t + sh.t, n.h + sh.h, n.w + sh.w}, cfg).to_vector();
            score_err = std::max(score_err, std::abs(dot(qs, ks) - base));
        }
        const auto qv = q.to_vector();
        norm_err = std::max(norm_err, std::abs(std::sqrt(dot(qm, qm)) - std::sqrt(dot(qv, qv))));
    }
    return {score_err <= kScoreTol && norm_err <= kNormTol,
            Detail().kv("draws", 100).kv("max_score_err", score_err).kv("max_norm_err", norm_err).str()};
}

// Criterion 8 ---------------------------------------------------------------

Outcome null_and_shared() {
    const moe::MoEConfig cfg;  // 4 routed + 1 null + 2 shared, d_model 32, P = 0.7
    const moe::MoELayer layer = moe::MoELayer::init(cfg, 4242);
    const std::size_t null_slot = cfg.n_routed;
    constexpr std::size_t kTokens = 1000;

    std::size_t null_selected = 0;
    std::size_t null_changes = 0;
    const Tensor batch = Tensor::randn({kTokens, cfg.d_model}, 4343, 1.0);
    for (std::size_t t = 0; t < kTokens; ++t) {
        const Tensor x = ops::row(batch, t);
        const Tensor probs = moe::route(x, layer.router).probs;
        // Inference path.
        moe::RoutingDecision d;
        const auto y = moe::moe_forward_infer(x, layer, &d).to_vector();
        // Training path, replayed without the null slot.
        Rng rng = moe::token_stream({1, 0, 0}, t);
        const auto train = moe::moe_forward_train(x, layer, rng);
        null_selected += d.contains(null_slot) ? 1 : 0;
        null_selected += train.decision.contains(null_slot) ? 1 : 0;
        if (d.contains(null_slot)) {
            moe::RoutingDecision pruned;
            for (const auto& c : d.choices) {
                if (c.index != null_slot) pruned.choices.push_back(c);
            }
            if (moe::mix_experts(x, layer, probs, pruned).to_vector() != y) ++null_changes;
        }
        if (train.decision.contains(null_slot)) {
            moe::FrozenRouting pruned;
            for (std::size_t i = 0; i < train.frozen.decision.k(); ++i) {
                if (train.frozen.decision.choices[i].index == null_slot) continue;
                pruned.decision.choices.push_back(train.frozen.decision.choices[i]);
                pruned.offsets.push_back(train.frozen.offsets[i]);
            }
            Rng replay_rng = moe::token_stream({1, 0, 0}, t);
            if (moe::moe_forward_train(x, layer, replay_rng, {}, &pruned).y.to_vector() != train.y.to_vector()) {
                ++null_changes;
            }
        }
    }

    // Shared experts: every trace record carries every shared id, and the
    // layer output minus the routed-only output is their sum for every token.
    const auto out = moe::layer_apply(batch, layer, moe::Phase::Train, {9, 0, 0});
    moe::MoELayer routed_only = layer;
    routed_only.bank.shared.clear();
    routed_only.config.n_shared = 0;
    const auto base = moe::layer_apply(batch, routed_only, moe::Phase::Train, {9, 0, 0});
    analytics::RoutingTrace trace;
    for (std::size_t t = 0; t < kTokens; ++t) trace.record(0, 0, t, "text", out.decisions[t], cfg);
    std::size_t missing_shared = 0;
    for (const auto& r : trace.records()) {
        std::size_t shared = 0;
        for (const auto& s : r.slots) {
            if (s.role == moe::ExpertRole::Shared) ++shared;
        }
        if (shared != cfg.n_shared) ++missing_shared;
    }
    const auto yo = out.outputs.to_vector();
    const auto yb = base.outputs.to_vector();
    double shared_err = 0.0;
    std::size_t zero_shared = 0;
    for (std::size_t t = 0; t < kTokens; ++t) {
        const Tensor x = ops::row(batch, t);
        const auto s0 = layer.bank.shared[0].forward(x).to_vector();
        const auto s1 = layer.bank.shared[1].forward(x).to_vector();
        double mag = 0.0;
        for (std::size_t j = 0; j < cfg.d_model; ++j) {
            const double want = s0[j] + s1[j];
            shared_err = std::max(shared_err, std::abs(yo[t * cfg.d_model + j] - yb[t * cfg.d_model + j] - want));
            mag += std::abs(want);
        }
        if (mag == 0.0) ++zero_shared;
    }
    const bool pass = null_selected > 0 && null_changes == 0 && missing_shared == 0 && zero_shared == 0 &&
                      shared_err <= 1e-12 && base.decisions == out.decisions;
    return {pass, Detail()
                      .kv("tokens", kTokens)
                      .kv("null_selected", null_selected)
                      .kv("null_changes", null_changes)
                      .kv("records_missing_shared", missing_shared)
                      .kv("shared_sum_err", shared_err)
                      .str()};
}

// Criterion 9 ---------------------------------------------------------------

constexpr double kNormalizeTol = 1e-12;

Outcome analytics_normalization() {
    moe::MoEConfig cfg;
    cfg.n_routed = 7;
    cfg.n_null = 2;
    double worst_slots = 0.0;
    double worst_tokens = 0.0;
    std::size_t byte_mismatch = 0;
    std::uint64_t state = 31;
    const char* tags[4] = {"text", "audio", "image", "video"};
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        Rng rng(seed);
        analytics::RoutingTrace trace;
        for (std::size_t i = 0; i < 1000; ++i) {
            const auto p = oracle::random_simplex(cfg.routable(), state);
            trace.record(i % 7, i % 4, i, tags[i % 4], moe::select_top_p_sampled(p, 0.2 + 0.8 * rng.uniform(), rng), cfg);
        }
        for (std::size_t layer : analytics::layers_in(trace)) {
            double slots = 0.0;
            for (const auto& [id, v] : analytics::activation_proportions(trace, layer).proportion) slots += v;
            double tokens = 0.0;
            for (const auto& [k, v] : analytics::expert_count_histogram(trace, layer)) tokens += v;
            worst_slots = std::max(worst_slots, std::abs(slots - 1.0));
            worst_tokens = std::max(worst_tokens, std::abs(tokens - 1.0));
        }
        std::ostringstream first;
        analytics::write_trace_csv(trace, first);
        std::istringstream in(first.str());
        std::ostringstream second;
        analytics::write_trace_csv(analytics::read_trace_csv(in), second);
        if (first.str() != second.str()) ++byte_mismatch;
    }
    return {worst_slots <= kNormalizeTol && worst_tokens <= kNormalizeTol && byte_mismatch == 0,
            Detail().kv("traces", 20).kv("slot_sum_err", worst_slots).kv("token_sum_err", worst_tokens).kv("csv_mismatches", byte_mismatch).str()};
}

// Criterion 10 --------------------------------------------------------------

constexpr double kLossRatio = 0.5;
constexpr double kTrainBudget = 120.0;

Outcome smoke_training() {
    Detail d;
    bool pass = true;
    for (std::uint64_t seed : {0, 1, 2}) {
        harness::ToyModelConfig cfg = harness::ToyModelConfig::defaults();
        cfg.seed = seed;
        cfg.steps = 500;
        const auto result = harness::train(cfg);
        const double ratio = harness::loss_drop_ratio(result.losses);
        pass = pass && ratio <= kLossRatio;
        char buf[96];
        std::snprintf(buf, sizeof buf, "%.4f->%.4f(%.3f)", result.losses.front(), result.losses.back(), ratio);
        d.kv("seed" + std::to_string(seed), buf);
    }
    d.kv("max_ratio", kLossRatio);
    return {pass, d.str()};
}

struct Criterion {
    int id;
    const char* name;
    double budget_s;  // 0 means no time limit
    Outcome (*run)();
};

}  // namespace

int main() {
    const Criterion criteria[] = {
        {1, "estimator forward/backward split", kEstimatorBudget, estimator_split},
        {2, "top-1 unbiasedness (linear f)", kUnbiasedBudget, top1_unbiasedness},
        {3, "heun quadrature exactness", 0.0, heun_quadrature},
        {4, "top-p oracle equivalence", kTopPBudget, top_p_oracle},
        {5, "full-model gradient check", kGradCheckBudget, full_gradcheck},
        {6, "3d rope worked example", 0.0, rope_worked_example},
        {7, "rope relative position", 0.0, rope_relative},
        {8, "null/shared semantics", 0.0, null_and_shared},
        {9, "analytics normalization", 0.0, analytics_normalization},
        {10, "smoke training", kTrainBudget, smoke_training},
    };
    int failed = 0;
    for (const auto& c : criteria) {
        Outcome outcome;
        const auto start = Clock::now();
        try {
            outcome = c.run();
        } catch (const std::exception& e) {
            outcome = {false, std::string("exception: ") + e.what()};
        }
        const double secs = std::chrono::duration<double>(Clock::now() - start).count();
        const bool in_time = c.budget_s <= 0.0 || secs < c.budget_s;
        const bool ok = outcome.passed && in_time;
        failed += ok ? 0 : 1;
        char timing[64];
        if (c.budget_s > 0.0) {
            std::snprintf(timing, sizeof timing, "time=%.3fs/%.0fs", secs, c.budget_s);
        } else {
            std::snprintf(timing, sizeof timing, "time=%.3fs", secs);
        }
        std::cout << (ok ? "PASS" : "FAIL") << " [" << c.id << "] " << c.name << ": " << outcome.detail << ' ' << timing
                  << (in_time ? "" : " (over budget)") << std::endl;
    }
    std::cout << (failed == 0 ? "ALL PASS" : "FAILURES: " + std::to_string(failed)) << std::endl;
    return failed == 0 ? 0 : 1;
}
