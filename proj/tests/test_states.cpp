#include <gtest/gtest.h>

#include <algorithm>
#include <deque>
#include <map>
#include <numeric>
#include <set>

#include "mixlab/states.hpp"
#include "test_support.hpp"

using namespace mixlab;

namespace {

std::vector<ExclusionConfig> all_configs(int n, int k) {
  std::vector<ExclusionConfig> out;
  for (std::uint64_t m = 0; m < (std::uint64_t{1} << n); ++m) {
    if (std::popcount(m) == k) out.push_back(ExclusionConfig::from_mask(n, m));
  }
  return out;
}

long long brute_inversions(const std::vector<int>& v) {
  long long c = 0;
  for (std::size_t i = 0; i < v.size(); ++i)
    for (std::size_t j = 0; j < v.size(); ++j) c += (i < j && v[i] > v[j]);
  return c;
}

// Adjacent-transposition distance from sigma to the identity by BFS.
std::map<std::vector<int>, int> cayley_distances(int n) {
  std::vector<int> id(n);
  std::iota(id.begin(), id.end(), 1);
  std::map<std::vector<int>, int> dist{{id, 0}};
  std::deque<std::vector<int>> queue{id};
  while (!queue.empty()) {
    auto v = queue.front();
    queue.pop_front();
    for (int i = 0; i + 1 < n; ++i) {
      auto w = v;
      std::swap(w[i], w[i + 1]);
      if (dist.emplace(w, dist[v] + 1).second) queue.push_back(w);
    }
  }
  return dist;
}

}  // namespace

TEST(Permutation, RejectsNonBijection) {
  EXPECT_THROW(Permutation({1, 1, 2}), Error);
  EXPECT_THROW(Permutation({0, 1, 2}), Error);
  EXPECT_THROW(Permutation(std::vector<int>{}), Error);
}

TEST(InversionCount, Examples) {
  EXPECT_EQ(inversion_count(Permutation({1, 2, 3})), 0);
  EXPECT_EQ(inversion_count(Permutation({2, 3, 1})), 2);
  EXPECT_EQ(inversion_count(Permutation::reversal(4)), 6);
}

TEST(InversionCount, EqualsCayleyDistance) {
  for (int n = 1; n <= 5; ++n) {
    for (const auto& [v, d] : cayley_distances(n)) {
      EXPECT_EQ(inversion_count(Permutation(v)), d);
      EXPECT_EQ(brute_inversions(v), d);
    }
  }
}

TEST(ParticleArea, Examples) {
  EXPECT_EQ(particle_area(ExclusionConfig::packed_right(7, 3)), 0);
  EXPECT_EQ(particle_area(ExclusionConfig({1, 1, 0, 0})), 4);
  EXPECT_EQ(particle_area(ExclusionConfig({1, 0, 1})), 1);
}

TEST(ParticleArea, EqualsPathAreaExhaustively) {
  for (int n = 2; n <= 10; ++n) {
    for (int k = 1; k < n; ++k) {
      for (const auto& xi : all_configs(n, k)) {
        EXPECT_EQ(particle_area(xi), path_area(height_map(xi)));
      }
    }
  }
}

TEST(PathArea, ExtremalPaths) {
  for (int n = 2; n <= 12; ++n) {
    for (int k = 1; k < n; ++k) {
      const auto [top, bottom] = extremal_paths(n, k);
      EXPECT_EQ(path_area(top), 0);
      EXPECT_EQ(path_area(bottom), static_cast<long long>(k) * (n - k));
      EXPECT_EQ(path_area(bottom), particle_area(ExclusionConfig::packed_left(n, k)));
    }
  }
}

// The area counts the up-flips separating a path from the top path: check it
// against a shortest-path search in Xi_{14,6}, which contains area-22 paths.
TEST(PathArea, CountsUpFlipsToTop) {
  const int n = 14, k = 6;
  const auto top = extremal_paths(n, k).first;
  std::map<std::vector<int>, int> dist{{std::vector<int>(top.heights().begin(), top.heights().end()), 0}};
  std::deque<LatticePath> queue{top};
  while (!queue.empty()) {
    const LatticePath z = queue.front();
    queue.pop_front();
    const int d = dist[std::vector<int>(z.heights().begin(), z.heights().end())];
    for (int i = 1; i < n; ++i) {
      LatticePath w = z;
      w.resolve_corner(i, false);
      std::vector<int> key(w.heights().begin(), w.heights().end());
      if (dist.emplace(key, d + 1).second) queue.push_back(w);
    }
  }
  EXPECT_EQ(dist.size(), 3003u);  // C(14, 6)
  int with_22 = 0;
  for (const auto& [h, d] : dist) {
    const LatticePath z(h);
    EXPECT_EQ(path_area(z), d);
    with_22 += d == 22;
  }
  EXPECT_GT(with_22, 0);
  // A concrete area-22 configuration.
  const ExclusionConfig xi({0, 1, 0, 0, 1, 1, 0, 0, 1, 0, 0, 1, 1, 0});
  EXPECT_EQ(particle_area(xi), 22);
  EXPECT_EQ(path_area(height_map(xi)), 22);
}

TEST(HeightMap, Examples) {
  const auto z = height_map(ExclusionConfig({1, 0, 1}));
  EXPECT_EQ(std::vector<int>(z.heights().begin(), z.heights().end()), (std::vector<int>{0, -1, 0, -1}));
  EXPECT_EQ(height_inverse(LatticePath({0, -1, 0, -1})), ExclusionConfig({1, 0, 1}));
  const auto empty = height_map(ExclusionConfig({0, 0, 0, 0}));
  for (int i = 0; i <= 4; ++i) EXPECT_EQ(empty(i), i);
  for (int n = 2; n <= 9; ++n) {
    for (int k = 1; k < n; ++k) {
      EXPECT_EQ(height_inverse(extremal_paths(n, k).first), ExclusionConfig::packed_right(n, k));
      EXPECT_EQ(height_inverse(extremal_paths(n, k).second), ExclusionConfig::packed_left(n, k));
    }
  }
}

TEST(HeightMap, BijectionExhaustiveAndRandom) {
  for (int n = 2; n <= 10; ++n) {
    for (int k = 1; k < n; ++k) {
      std::set<std::vector<int>> images;
      for (const auto& xi : all_configs(n, k)) {
        const auto z = height_map(xi);
        EXPECT_EQ(z(0), 0);
        EXPECT_EQ(z(n), n - 2 * k);
        EXPECT_EQ(height_inverse(z), xi);
        EXPECT_EQ(height_map(height_inverse(z)), z);
        images.insert(std::vector<int>(z.heights().begin(), z.heights().end()));
      }
      EXPECT_EQ(images.size(), all_configs(n, k).size());
    }
  }
  Rng rng(11);
  for (int r = 0; r < 1000; ++r) {
    const int n = 2 + static_cast<int>(uniform_below(rng, 200));
    const int k = 1 + static_cast<int>(uniform_below(rng, n - 1));
    const auto xi = mixtest::random_exclusion(n, k, rng);
    EXPECT_EQ(height_inverse(height_map(xi)), xi);
  }
}

TEST(Projection, Examples) {
  EXPECT_EQ(project_to_exclusion(Permutation::identity(5), 2), ExclusionConfig::packed_right(5, 2));
  EXPECT_EQ(project_to_exclusion(Permutation({2, 3, 1}), 1), ExclusionConfig({0, 1, 0}));
  EXPECT_EQ(project_to_exclusion(Permutation({2, 3, 1}), 2), ExclusionConfig({1, 1, 0}));
  EXPECT_THROW(project_to_exclusion(Permutation({2, 3, 1}), 0), Error);
  EXPECT_THROW(project_to_exclusion(Permutation({2, 3, 1}), 3), Error);
}

TEST(Projection, ReconstructionRoundTrip) {
  std::vector<int> v{1, 2, 3, 4, 5};
  do {
    const Permutation s(v);
    const auto levels = projection_levels(s);
    EXPECT_EQ(reconstruct_permutation(levels), s);
  } while (std::next_permutation(v.begin(), v.end()));
  EXPECT_EQ(reconstruct_permutation(projection_levels(Permutation({2, 3, 1}))), Permutation({2, 3, 1}));
  Rng rng(5);
  for (int r = 0; r < 1000; ++r) {
    const int n = 1 + static_cast<int>(uniform_below(rng, 64));
    const auto s = mixtest::random_permutation(n, rng);
    const auto levels = projection_levels(s);
    const auto back = reconstruct_permutation(levels);
    ASSERT_EQ(back, s);
    for (int k = 1; k < n; ++k) EXPECT_EQ(project_to_exclusion(back, k), levels[k]);
  }
}

TEST(Projection, InconsistentLevels) {
  auto levels = projection_levels(Permutation({2, 3, 1}));
  // Site 1 is occupied at level 1 but empty at level 2.
  levels[1] = ExclusionConfig({1, 0, 0});
  levels[2] = ExclusionConfig({0, 1, 1});
  EXPECT_THROW(reconstruct_permutation(levels), Error);
  levels = projection_levels(Permutation({2, 3, 1}));
  levels.pop_back();
  EXPECT_THROW(reconstruct_permutation(levels), Error);
}

TEST(ExtremalPaths, Examples) {
  const auto [top, bottom] = extremal_paths(2, 1);
  EXPECT_EQ(top, LatticePath({0, 1, 0}));
  EXPECT_EQ(bottom, LatticePath({0, -1, 0}));
  EXPECT_THROW(extremal_paths(4, 0), Error);
  EXPECT_THROW(extremal_paths(4, 4), Error);
  const auto fig = extremal_paths(14, 6).first;
  EXPECT_EQ(fig(8), 8);
  EXPECT_EQ(fig(14), 2);
}

TEST(ExtremalPaths, EnvelopeAndGap) {
  for (int n = 2; n <= 32; ++n) {
    for (int k = 1; k < n; ++k) {
      const auto [top, bottom] = extremal_paths(n, k);
      int gap = 0;
      for (int i = 0; i <= n; ++i) gap = std::max(gap, top(i) - bottom(i));
      EXPECT_EQ(gap, 2 * std::min(k, n - k));
      EXPECT_LE(gap, 2 * k);
      if (n <= 10) {
        for (const auto& xi : all_configs(n, k)) {
          const auto z = height_map(xi);
          EXPECT_TRUE(partial_le(bottom, z));
          EXPECT_TRUE(partial_le(z, top));
        }
      }
    }
  }
}

TEST(PartialOrder, IsPartialOrderOnPaths) {
  for (int n = 2; n <= 6; ++n) {
    for (int k = 1; k < n; ++k) {
      const auto configs = all_configs(n, k);
      for (const auto& a : configs) {
        const auto za = height_map(a);
        EXPECT_TRUE(partial_le(za, za));
        for (const auto& b : configs) {
          const auto zb = height_map(b);
          // Exclusion order through the height map.
          EXPECT_EQ(partial_le(a, b), partial_le(za, zb));
          if (partial_le(za, zb) && partial_le(zb, za)) {
            EXPECT_EQ(za, zb);
          }
          for (const auto& c : configs) {
            const auto zc = height_map(c);
            if (partial_le(za, zb) && partial_le(zb, zc)) {
              EXPECT_TRUE(partial_le(za, zc));
            }
          }
        }
      }
    }
  }
}

TEST(PartialOrder, IncomparablePairInXi42) {
  const auto configs = all_configs(4, 2);
  bool found = false;
  for (const auto& a : configs) {
    for (const auto& b : configs) {
      if (!partial_le(a, b) && !partial_le(b, a)) found = true;
    }
  }
  EXPECT_TRUE(found);
  // For instance the two paths through height 0 at site 2 with opposite corners.
  EXPECT_FALSE(partial_le(LatticePath({0, 1, 0, 1, 0}), LatticePath({0, -1, 0, -1, 0})));
  EXPECT_FALSE(partial_le(LatticePath({0, -1, 0, 1, 0}), LatticePath({0, 1, 0, -1, 0})));
  EXPECT_FALSE(partial_le(LatticePath({0, 1, 0, -1, 0}), LatticePath({0, -1, 0, 1, 0})));
}

TEST(PartialOrder, PermutationsThroughAllLevels) {
  std::vector<int> v{1, 2, 3, 4};
  std::vector<Permutation> all;
  do all.emplace_back(v);
  while (std::next_permutation(v.begin(), v.end()));
  for (const auto& a : all) {
    EXPECT_TRUE(partial_le(Permutation::reversal(4), a));
    EXPECT_TRUE(partial_le(a, Permutation::identity(4)));
    for (const auto& b : all) {
      bool expected = true;
      for (int k = 1; k < 4; ++k) expected = expected && partial_le(project_to_exclusion(a, k), project_to_exclusion(b, k));
      EXPECT_EQ(partial_le(a, b), expected);
    }
  }
}

TEST(PartialOrder, ShapeMismatch) {
  EXPECT_THROW(partial_le(LatticePath({0, 1, 0}), LatticePath({0, 1, 0, 1})), Error);
  EXPECT_THROW(partial_le(ExclusionConfig({1, 0, 0}), ExclusionConfig({1, 1, 0})), Error);
  EXPECT_THROW(partial_le(Permutation({1, 2}), Permutation({1, 2, 3})), Error);
  EXPECT_THROW(partial_le(SimplexPoint::constant(3, 1.0), SimplexPoint::constant(4, 1.0)), Error);
}

TEST(Simplex, Invariants) {
  EXPECT_NO_THROW(SimplexPoint(3, {1.0, 2.0}));
  EXPECT_THROW(SimplexPoint(3, {2.0, 1.0}), Error);
  EXPECT_THROW(SimplexPoint(3, {1.0, 4.0}), Error);
  EXPECT_THROW(SimplexPoint(3, {1.0}), Error);
  EXPECT_TRUE(partial_le(SimplexPoint(3, {1.0, 2.0}), SimplexPoint(3, {1.5, 2.0})));
  EXPECT_FALSE(partial_le(SimplexPoint(3, {1.0, 2.5}), SimplexPoint(3, {1.5, 2.0})));
}

TEST(ChainSpecTest, DerivedQuantities) {
  const auto s = ChainSpec::make(Model::ASEP, 10, 5, 0.8);
  EXPECT_NEAR(s.lambda(), 4.0, 1e-12);
  EXPECT_NEAR(s.rho(), 0.2, 1e-15);
  EXPECT_NEAR(s.rho(), std::pow(std::sqrt(0.8) - std::sqrt(0.2), 2), 1e-15);
  EXPECT_THROW(ChainSpec::make(Model::SSEP, 10, 0), Error);
  EXPECT_THROW(ChainSpec::make(Model::SSEP, 10, 10), Error);
  EXPECT_THROW(ChainSpec::make(Model::SSEP, 10, 5, 0.6), Error);
  EXPECT_THROW(ChainSpec::make(Model::ASEP, 10, 5, 0.5), Error);
  EXPECT_THROW(ChainSpec::make(Model::Interchange, 1), Error);
  EXPECT_EQ(ChainSpec::make(Model::Interchange, 5, 3).k(), 0);
  EXPECT_EQ(parse_model("acf"), Model::BiasedCornerFlip);
  EXPECT_FALSE(parse_model("tasep").has_value());
}

TEST(Serialization, RoundTrips) {
  Rng rng(3);
  for (int r = 0; r < 200; ++r) {
    const int n = 2 + static_cast<int>(uniform_below(rng, 40));
    const int k = 1 + static_cast<int>(uniform_below(rng, n - 1));
    const auto xi = mixtest::random_exclusion(n, k, rng);
    EXPECT_EQ(parse_exclusion(format_state(xi)), xi);
    EXPECT_EQ(parse_path(format_state(height_map(xi))), height_map(xi));
    const auto s = mixtest::random_permutation(n, rng);
    EXPECT_EQ(parse_permutation(format_state(s)), s);
    const auto x = mixtest::random_simplex(n, rng);
    EXPECT_EQ(parse_simplex(format_state(x)), x);
  }
  EXPECT_EQ(format_state(ExclusionConfig({1, 0, 1})), "101");
  EXPECT_EQ(format_state(Permutation({2, 3, 1})), "2,3,1");
  EXPECT_EQ(format_state(LatticePath({0, -1, 0, -1})), "0,-1,0,-1");
  EXPECT_THROW(parse_exclusion("10a"), Error);
  EXPECT_THROW(parse_permutation("1,x"), Error);
  EXPECT_THROW(parse_path("0,2"), Error);
  EXPECT_THROW(parse_simplex("1.0,zz"), Error);
}

TEST(ExclusionConfigTest, WideConfigurations) {
  Rng rng(9);
  const auto xi = mixtest::random_exclusion(300, 150, rng);
  EXPECT_EQ(xi.particles(), 150);
  int c = 0;
  for (int x = 1; x <= 300; ++x) {
    c += xi.occupied(x);
    ASSERT_EQ(xi.count_prefix(x), c);
  }
  auto moved = xi;
  for (int i = 1; i < 300; ++i) moved.resolve_pair(i, true);
  EXPECT_EQ(moved.particles(), 150);
}
