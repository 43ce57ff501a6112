// Copyright (C) 2026 The dcmoe Authors
// SPDX-License-Identifier: Apache-2.0

#include <cmath>
#include <limits>
#include <map>
#include <set>
#include <vector>

#include <gtest/gtest.h>

#include "oracles.hpp"

#include "dcmoe/core/errors.hpp"
#include "dcmoe/core/ops.hpp"
#include "dcmoe/core/rng.hpp"
#include "dcmoe/moe/layer.hpp"
#include "dcmoe/moe/routing.hpp"

namespace {

using namespace dcmoe;
using moe::select_top_p_deterministic;
using moe::select_top_p_sampled;

std::set<std::size_t> as_set(const moe::RoutingDecision& d) {
    const auto a = d.active();
    return {a.begin(), a.end()};
}

TEST(Route, ZeroWeightsGiveUniformProbs) {
    moe::Router r{Tensor::zeros({5, 3})};
    const auto out = route(Tensor::randn({3}, 1, 1.0), r);
    for (double p : out.probs.to_vector()) EXPECT_NEAR(p, 0.2, 1e-15);
    EXPECT_EQ(out.argmax, 0u);
}

TEST(Route, ClosedFormTwoSlots) {
    // W = [[ln 2], [0]] and x = [1] give z = [ln 2, 0].
    moe::Router r{Tensor::from({2, 1}, {std::log(2.0), 0.0})};
    const auto out = route(Tensor::vector({1.0}), r);
    EXPECT_NEAR(out.probs[0], 2.0 / 3.0, 1e-15);
    EXPECT_NEAR(out.probs[1], 1.0 / 3.0, 1e-15);
}

TEST(Route, ProbabilitiesSumToOne) {
    moe::Router r{Tensor::randn({7, 6}, 2, 1.0)};
    for (std::uint64_t s = 0; s < 100; ++s) {
        const auto probs = route(Tensor::randn({6}, 100 + s, 3.0), r).probs.to_vector();
        double total = 0.0;
        for (double p : probs) total += p;
        EXPECT_NEAR(total, 1.0, 1e-12);
    }
}

TEST(Route, DimensionMismatch) {
    moe::Router r{Tensor::zeros({4, 3})};
    EXPECT_THROW(route(Tensor::zeros({2}), r), ShapeError);
}

TEST(TopPDeterministic, Examples) {
    auto d = select_top_p_deterministic(std::vector<double>{0.5, 0.3, 0.2}, 0.7);
    EXPECT_EQ(d.active(), (std::vector<std::size_t>{0, 1}));
    EXPECT_EQ(d.k(), 2u);
    d = select_top_p_deterministic(std::vector<double>{0.8, 0.1, 0.1}, 0.7);
    EXPECT_EQ(d.active(), (std::vector<std::size_t>{0}));
    d = select_top_p_deterministic(std::vector<double>{0.1, 0.2, 0.3, 0.4}, 1.0);
    EXPECT_EQ(d.k(), 4u);
}

TEST(TopPDeterministic, TiesPreferLowerIndex) {
    const auto d = select_top_p_deterministic(std::vector<double>{0.2, 0.4, 0.4}, 0.3);
    EXPECT_EQ(d.active(), (std::vector<std::size_t>{1}));
    const auto e = select_top_p_deterministic(std::vector<double>{0.25, 0.25, 0.25, 0.25}, 0.6);
    EXPECT_EQ(e.active(), (std::vector<std::size_t>{0, 1, 2}));
}

TEST(TopPDeterministic, ArgmaxFlagAndGates) {
    const std::vector<double> p{0.1, 0.6, 0.3};
    const auto d = select_top_p_deterministic(p, 0.8);
    ASSERT_EQ(d.k(), 2u);
    EXPECT_TRUE(d.choices[0].is_argmax);
    EXPECT_FALSE(d.choices[1].is_argmax);
    EXPECT_EQ(d.choices[0].gate_prob, 0.6);
    EXPECT_EQ(d.choices[1].gate_prob, 0.3);
    EXPECT_DOUBLE_EQ(d.cumulative_prob(), 0.9);
    // Logit argmax can be supplied; it need not be the top probability after rounding.
    const auto e = select_top_p_deterministic(p, 0.8, 2);
    EXPECT_TRUE(e.choices[1].is_argmax);
}

TEST(TopPDeterministic, MatchesPrefixOracle) {
    std::uint64_t state = 17;
    for (int trial = 0; trial < 2000; ++trial) {
        const std::size_t n = 1 + static_cast<std::size_t>(trial % 16);
        const auto p = oracle::random_simplex(n, state);
        for (double P : {0.1, 0.5, 0.7, 0.9, 1.0}) {
            EXPECT_EQ(select_top_p_deterministic(p, P).active(), oracle::top_p_prefix_oracle(p, P));
        }
    }
}

TEST(TopPDeterministic, SmallThresholdSelectsArgmaxOnly) {
    std::uint64_t state = 5;
    for (int trial = 0; trial < 200; ++trial) {
        const auto p = oracle::random_simplex(6, state);
        const double top = *std::max_element(p.begin(), p.end());
        EXPECT_EQ(select_top_p_deterministic(p, top).k(), 1u);
    }
}

TEST(TopPDeterministic, KMonotoneInThreshold) {
    std::uint64_t state = 9;
    for (int trial = 0; trial < 200; ++trial) {
        const auto p = oracle::random_simplex(8, state);
        std::size_t prev = 0;
        for (double P = 0.05; P <= 1.0; P += 0.05) {
            const std::size_t k = select_top_p_deterministic(p, P).k();
            EXPECT_GE(k, prev);
            prev = k;
        }
    }
}

TEST(TopPDeterministic, RejectsInvalidInput) {
    const std::vector<double> p{0.5, 0.5};
    EXPECT_THROW(select_top_p_deterministic(p, 0.0), ConfigError);
    EXPECT_THROW(select_top_p_deterministic(p, 1.5), ConfigError);
    EXPECT_THROW(select_top_p_deterministic(p, std::nan("")), ConfigError);
    EXPECT_THROW(select_top_p_deterministic(std::vector<double>{}, 0.5), ShapeError);
    EXPECT_THROW(select_top_p_deterministic(std::vector<double>{0.5, 0.6}, 0.5), NumericError);
    EXPECT_THROW(select_top_p_deterministic(std::vector<double>{1.5, -0.5}, 0.5), NumericError);
}

TEST(TopPSampled, OneHotAlwaysPicksIt) {
    Rng rng(3);
    for (int i = 0; i < 1000; ++i) {
        const auto d = select_top_p_sampled(std::vector<double>{1.0, 0.0, 0.0}, 0.7, rng);
        EXPECT_EQ(d.active(), (std::vector<std::size_t>{0}));
    }
    // Even P = 1 stops once only zero-mass slots remain.
    const auto d = select_top_p_sampled(std::vector<double>{1.0, 0.0, 0.0}, 1.0, rng);
    EXPECT_EQ(d.k(), 1u);
}

TEST(TopPSampled, UniformFourWithLowThresholdDrawsTwo) {
    Rng rng(4);
    const std::vector<double> p(4, 0.25);
    for (const auto& [set, prob] : oracle::sampled_set_distribution(p, 0.3)) {
        EXPECT_EQ(set.size(), 2u) << "exact enumeration";
        (void)prob;
    }
    for (int i = 0; i < 5000; ++i) EXPECT_EQ(select_top_p_sampled(p, 0.3, rng).k(), 2u);
}

TEST(TopPSampled, SetFrequenciesMatchExactEnumeration) {
    const std::vector<double> p{0.5, 0.3, 0.2};
    const auto exact = oracle::sampled_set_distribution(p, 0.7);
    Rng rng(11);
    std::map<std::set<std::size_t>, double> freq;
    constexpr int n = 100000;
    double argmax_hits = 0.0;
    for (int i = 0; i < n; ++i) {
        const auto d = select_top_p_sampled(p, 0.7, rng);
        freq[as_set(d)] += 1.0 / n;
        argmax_hits += d.contains(0) ? 1.0 / n : 0.0;
    }
    double exact_argmax = 0.0;
    for (const auto& [set, prob] : exact) {
        EXPECT_NEAR(freq[set], prob, 0.006) << "set of size " << set.size();
        if (set.count(0)) exact_argmax += prob;
    }
    EXPECT_GE(argmax_hits, p[0]);
    EXPECT_NEAR(argmax_hits, exact_argmax, 0.006);
}

TEST(TopPSampled, StopRuleUsesOriginalMass) {
    std::uint64_t state = 23;
    Rng rng(8);
    for (int trial = 0; trial < 500; ++trial) {
        const auto p = oracle::random_simplex(1 + trial % 9, state);
        const auto d = select_top_p_sampled(p, 0.7, rng);
        EXPECT_TRUE(d.cumulative_prob() >= 0.7 || d.k() == p.size());
        // Dropping the last draw must leave the mass below the threshold.
        EXPECT_LT(d.cumulative_prob() - d.choices.back().gate_prob, 0.7);
        EXPECT_EQ(as_set(d).size(), d.k()) << "no slot drawn twice";
    }
}

TEST(TopPSampled, SameStreamSameDecision) {
    const std::vector<double> p{0.1, 0.2, 0.3, 0.4};
    Rng a = Rng::stream(1, {2, 3});
    Rng b = Rng::stream(1, {2, 3});
    for (int i = 0; i < 100; ++i) {
        EXPECT_EQ(select_top_p_sampled(p, 0.9, a), select_top_p_sampled(p, 0.9, b));
    }
}

}  // namespace
