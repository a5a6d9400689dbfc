// Copyright 2026 The sdqrng Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "sdqrng/state_geometry.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace sdqrng;

TEST(OverlapModel, EnergyBoundIsLinearAndClamped) {
    EXPECT_DOUBLE_EQ(overlap_from_model(OverlapKind::EnergyBound, 0.0), 1.0);
    EXPECT_DOUBLE_EQ(overlap_from_model(OverlapKind::EnergyBound, 0.18), 0.64);
    EXPECT_DOUBLE_EQ(overlap_from_model(OverlapKind::EnergyBound, 0.5), 0.0);
    EXPECT_DOUBLE_EQ(overlap_from_model(OverlapKind::EnergyBound, 0.8), 0.0);
}

TEST(OverlapModel, OverlapBoundIsExponential) {
    EXPECT_DOUBLE_EQ(overlap_from_model(OverlapKind::OverlapBound, 0.0), 1.0);
    EXPECT_NEAR(overlap_from_model(OverlapKind::OverlapBound, 1.0), std::exp(-1.0), 1e-15);
    EXPECT_NEAR(overlap_from_model(OverlapKind::OverlapBound, 20.0), 2.061153622438558e-09, 1e-20);
}

TEST(OverlapModel, RejectsBadMu) {
    EXPECT_THROW(overlap_from_model(OverlapKind::EnergyBound, -0.1), DomainError);
    EXPECT_THROW(overlap_from_model(OverlapKind::OverlapBound, std::nan("")), DomainError);
    EXPECT_THROW(overlap_from_model(OverlapKind::OverlapBound, INFINITY), DomainError);
}

TEST(OverlapModel, NamesRoundTrip) {
    for (auto k : {OverlapKind::EnergyBound, OverlapKind::OverlapBound})
        EXPECT_EQ(overlap_kind_from_string(to_string(k)), k);
    EXPECT_THROW(overlap_kind_from_string("fidelity"), DomainError);
}

class GramTest : public ::testing::TestWithParam<std::tuple<int, double>> {};

TEST_P(GramTest, UnitVectorsWithPrescribedOverlap) {
    const auto [n, delta] = GetParam();
    const StateFamily s = build_states(n, delta);
    ASSERT_EQ(s.n(), n);
    const Matrix g = s.gram();
    for (int x = 0; x < n; ++x)
        for (int y = 0; y < n; ++y)
            EXPECT_NEAR(g(x, y), x == y ? 1.0 : delta, 1e-12) << x << "," << y;
    for (int x = 0; x < n; ++x) {
        const Matrix p = s.projector(x);
        EXPECT_NEAR((p * p - p).norm(), 0.0, 1e-12);
        EXPECT_NEAR(p.trace(), 1.0, 1e-12);
    }
}

INSTANTIATE_TEST_SUITE_P(Families, GramTest,
                         ::testing::Combine(::testing::Values(2, 3, 5, 9),
                                            ::testing::Values(0.0, 0.13, 0.64, 0.999, 1.0)));

TEST(BuildStates, FullOverlapGivesIdenticalStates) {
    const StateFamily s = build_states(4, 1.0);
    for (int x = 1; x < 4; ++x)
        EXPECT_NEAR((s.state(x) - s.state(0)).norm(), 0.0, 1e-12);
}

TEST(BuildStates, RejectsBadArguments) {
    EXPECT_THROW(build_states(1, 0.5), DomainError);
    EXPECT_THROW(build_states(3, -0.01), DomainError);
    EXPECT_THROW(build_states(3, 1.01), DomainError);
}
