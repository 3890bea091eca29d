// Copyright 2026 The Nightlights Authors.
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

#include "nightlights/synthworld.h"

#include <cmath>
#include <filesystem>

#include <gtest/gtest.h>

#include "nightlights/errors.h"
#include "nightlights/random.h"
#include "oracles.h"
#include "test_util.h"

namespace nightlights {
namespace {

WorldSpec SmallSpec(uint64_t seed) {
  WorldSpec s;
  s.seed = seed;
  s.min_lat = 10;
  s.max_lat = 12;
  s.min_lng = 30;
  s.max_lng = 32;
  s.n_centers = 6;
  s.country_rows = 2;
  s.country_cols = 2;
  s.region_rows = 1;
  s.region_cols = 2;
  s.laws = {LightLaw{}, LightLaw{LightLaw::Kind::kSaturating, 0.5, {2, 3, 1, 0.1}, 15}};
  s.residual = {2.0, 60, 0.3};
  return s;
}

std::vector<FlowRecord> AsRecords(const FlowCounts& counts) {
  std::vector<FlowRecord> out;
  for (const auto& [k, n] : counts) out.push_back({k.a, k.b, k.t, static_cast<double>(n)});
  return out;
}

TEST(SynthWorld, DeterministicGivenSeed) {
  const World a = Generate(SmallSpec(3));
  const World b = Generate(SmallSpec(3));
  EXPECT_EQ(a.populated, b.populated);
  ASSERT_EQ(a.pairs.size(), b.pairs.size());
  for (std::size_t i = 0; i < a.pairs.size(); ++i) {
    EXPECT_EQ(a.pairs[i].a, b.pairs[i].a);
    EXPECT_EQ(a.pairs[i].n, b.pairs[i].n);
  }
  EXPECT_EQ(a.light, b.light);
  const World c = Generate(SmallSpec(4));
  EXPECT_NE(a.light, c.light);
}

TEST(SynthWorld, TripsAggregateToTrueCounts) {
  const World w = Generate(SmallSpec(5));
  ASSERT_FALSE(w.pairs.empty());
  const IntervalScheme annual{IntervalKind::kAnnual, 2016};
  const IntervalScheme weekly{IntervalKind::kWeekly, 2016};
  TripAggregator agg_a(12, annual), agg_w(12, weekly);
  uint64_t trips = 0;
  ForEachWorldTrip(w, [&](const RawTrip& t) {
    agg_a.Add(t);
    agg_w.Add(t);
    ++trips;
  });
  uint64_t expected = 0;
  for (const PairCount& p : w.pairs) expected += p.n;
  EXPECT_EQ(trips, expected);
  EXPECT_EQ(agg_a.result().dropped, 0u);
  EXPECT_EQ(agg_w.result().dropped, 0u);
  EXPECT_EQ(agg_a.result().counts, TrueFlowCounts(w, annual));
  EXPECT_EQ(agg_w.result().counts, TrueFlowCounts(w, weekly));
}

TEST(SynthWorld, TruthMatchesProfilesAndLaws) {
  const World w = Generate(SmallSpec(6));
  const auto profiles =
      BuildProfiles(AsRecords(TrueFlowCounts(w, {IntervalKind::kAnnual, 2016})));
  ASSERT_EQ(profiles.size(), w.truth.size());
  for (std::size_t i = 0; i < profiles.size(); ++i) {
    const CellTruth& t = w.truth[i];
    EXPECT_EQ(t.profile, profiles[i]);
    const LatLng c = GetCellGeometry(t.cell).centroid;
    EXPECT_EQ(t.region, RegionAt(w.spec, c.lat(), c.lng()));
    EXPECT_DOUBLE_EQ(t.mobility_light,
                     w.spec.laws[static_cast<std::size_t>(t.region)].Evaluate(t.profile));
    EXPECT_DOUBLE_EQ(t.radiance, std::max(0.0, t.mobility_light + t.residual));
  }
}

TEST(SynthWorld, GdpFollowsMobilityLight) {
  const World w = Generate(SmallSpec(7));
  ASSERT_EQ(w.countries.size(), 4u);
  ASSERT_EQ(w.gdp.size(), 4u);
  for (std::size_t i = 0; i < w.countries.size(); ++i) {
    EXPECT_EQ(w.gdp[i].unit_id, w.countries[i].id);
    EXPECT_NEAR(w.gdp[i].gdp, oracle::TotalLight(w.mobility_light, w.countries[i]),
                1e-6 * (1 + w.gdp[i].gdp));
    ASSERT_NE(w.regions.RegionOf(w.countries[i].id), nullptr);
  }
}

TEST(SynthWorld, LightLaw) {
  MobilityProfile p;
  p.out_flow = 2000;
  p.self_flow = 1000;
  p.median_trip_km = 4;
  p.total_trip_km = 10000;
  const LightLaw lin;
  EXPECT_DOUBLE_EQ(lin.Evaluate(p), 1 + 4 * 2 + 6 * 1 + 0.5 * 4 + 0.2 * 10);
  LightLaw sat = lin;
  sat.kind = LightLaw::Kind::kSaturating;
  const double z = lin.Evaluate(p);
  EXPECT_NEAR(sat.Evaluate(p), 20 * (1 - std::exp(-z / 20)), 1e-12);
  EXPECT_LT(sat.Evaluate(p), 20);
}

TEST(SynthWorld, SpecRoundTrip) {
  const WorldSpec s = SmallSpec(9);
  const std::string text = s.Serialize();
  EXPECT_EQ(ParseWorldSpec(text).Serialize(), text);
  EXPECT_THROW(ParseWorldSpec(text + "bogus = 1\n"), InvalidArgumentError);
  WorldSpec bad = s;
  bad.max_lat = bad.min_lat;
  EXPECT_THROW(bad.Validate(), InvalidArgumentError);
  bad = s;
  bad.laws.push_back(LightLaw{});
  EXPECT_THROW(bad.Validate(), InvalidArgumentError);
}

TEST(SynthWorld, SmoothFieldVarianceAndCorrelation) {
  const SmoothField f(1, 4, 200, 9.0);
  CounterRng rng(2);
  double s2 = 0, near = 0, far = 0;
  const int n = 3000;
  for (int k = 0; k < n; ++k) {
    const LatLng p(rng.Uniform(-20, 20), rng.Uniform(-20, 20));
    const double v = f(p);
    s2 += v * v;
    near += v * f(LatLng(p.lat() + 0.05, p.lng()));
    far += v * f(LatLng(p.lat() + 6, p.lng()));
  }
  EXPECT_NEAR(s2 / n, 9.0, 2.0);
  EXPECT_GT(near / s2, 0.95);
  EXPECT_LT(std::abs(far / s2), 0.15);
}

TEST(SynthWorld, LeakageFieldShapes) {
  LeakageSpec s;
  s.max_lat = 2;
  s.max_lng = 2;
  const LeakageData d = LeakageField(s);
  EXPECT_EQ(d.x.rows(), static_cast<Eigen::Index>(d.cells.size()));
  EXPECT_EQ(d.x.cols(), 4);
  EXPECT_EQ(d.coords.size(), d.cells.size());
  EXPECT_GT(d.y.squaredNorm(), 0);
  s.target = LeakageSpec::Target::kZero;
  EXPECT_EQ(LeakageField(s).y.squaredNorm(), 0);
}

TEST(SynthWorld, WritesWorldFiles) {
  const World w = Generate(SmallSpec(10));
  TempDir dir;
  WriteWorld(w, dir.path().string(), true);
  for (const char* f : {"trips.csv.gz", "light.lgrid", "countries.geojson", "regions.csv",
                        "gdp.csv", "truth/spec.txt", "truth/cells.csv", "truth/flows.csv",
                        "truth/mobility_light.lgrid"}) {
    EXPECT_TRUE(std::filesystem::exists(dir.path() / f)) << f;
  }
  EXPECT_EQ(ReadRaster(dir.File("light.lgrid")), w.light);
  EXPECT_EQ(ParseWorldSpec(ReadFile(dir.File("truth/spec.txt"))).Serialize(),
            w.spec.Serialize());
}

}  // namespace
}  // namespace nightlights
