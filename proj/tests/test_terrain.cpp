#include <gtest/gtest.h>

#include "lipnav/terrain.hpp"
#include "oracles.hpp"

using namespace lipnav;

namespace {

Terrain stairs() { return generate_terrain({StairsSpec{}, {}}); }
Terrain blocks() { return generate_terrain({BlocksSpec{}, {}}); }

Vec2 random_point_in(const std::vector<Vec2>& fp, std::mt19937_64& g) {
  // Convex combination of the vertices.
  std::vector<double> w(fp.size());
  double sum = 0.0;
  for (double& x : w) sum += (x = oracle::uniform(g, 0.0, 1.0));
  Vec2 p = Vec2::Zero();
  for (std::size_t i = 0; i < fp.size(); ++i) p += w[i] / sum * fp[i];
  return p;
}

void expect_polygons_match_heightfield(const Terrain& t, int samples_per_polygon) {
  auto g = oracle::rng(4);
  for (const auto& poly : t.polygons) {
    const auto fp = poly.footprint();
    for (int i = 0; i < samples_per_polygon; ++i) {
      const Vec2 p = random_point_in(fp, g);
      ASSERT_NEAR(poly.plane_z(p.x(), p.y()), t.height_at(p.x(), p.y()), 1e-6) << "polygon " << poly.id;
    }
    for (const Vec3& v : poly.vertices) ASSERT_NEAR(v.z(), t.height_at(v.x(), v.y()), 1e-6);
  }
}

}  // namespace

TEST(Heightfield, BilinearCornerExample) {
  Heightfield hf(0.0, 0.0, 1.0, 2, 2);
  hf.at_index(1, 1) = 1.0;
  EXPECT_DOUBLE_EQ(hf.height_at(0.5, 0.5), 0.25);
  EXPECT_DOUBLE_EQ(hf.height_at(1.0, 1.0), 1.0);
  EXPECT_DOUBLE_EQ(hf.height_at(1.0, 0.5), 0.5);
  EXPECT_THROW(hf.height_at(1.1, 0.5), OutOfBounds);
  EXPECT_THROW(hf.height_at(0.5, -0.1), OutOfBounds);
  EXPECT_THROW(Heightfield(0, 0, 0.0, 3, 3), InvalidSpec);
}

TEST(Heightfield, ReproducesBilinearFunctionsExactly) {
  Heightfield hf(-1.0, 2.0, 0.1, 21, 11);
  auto f = [](double x, double y) { return 0.3 + 0.7 * x - 0.2 * y + 0.5 * x * y; };
  for (int iy = 0; iy < hf.ny(); ++iy)
    for (int ix = 0; ix < hf.nx(); ++ix) hf.at_index(ix, iy) = f(hf.sample_x(ix), hf.sample_y(iy));
  auto g = oracle::rng(6);
  for (int i = 0; i < 500; ++i) {
    // Inside one cell the bilinear interpolant of a bilinear function is the function itself.
    const double x = oracle::uniform(g, -1.0, 1.0), y = oracle::uniform(g, 2.0, 3.0);
    EXPECT_NEAR(hf.height_at(x, y), f(x, y), 1e-12);
  }
}

TEST(Generators, FlatIsZeroWithOneCoveringPolygon) {
  const Terrain t = generate_terrain({FlatSpec{10.0, 10.0, -5.0}, {}});
  ASSERT_EQ(t.polygons.size(), 1u);
  auto g = oracle::rng(1);
  for (int i = 0; i < 200; ++i) EXPECT_EQ(t.height_at(oracle::uniform(g, -5, 5), oracle::uniform(g, -5, 5)), 0.0);
  EXPECT_EQ(terrain_kind(t.spec), "flat");
}

TEST(Generators, SlopePitch) {
  const Terrain t = generate_terrain({SlopeSpec{}, {}});
  ASSERT_EQ(t.polygons.size(), 1u);
  EXPECT_NEAR(t.polygons[0].pitch, std::atan(0.2), 1e-15);
  EXPECT_EQ(t.polygons[0].roll, 0.0);
  EXPECT_NEAR(t.height_at(3.0, 1.0), 0.6, 1e-12);
  expect_polygons_match_heightfield(t, 200);
}

TEST(Generators, StairsHaveFifteenInsetTreads) {
  const Terrain t = stairs();
  const StairsSpec s;
  const double inset = t.spec.options.edge_inset;
  ASSERT_EQ(t.polygons.size(), 16u);  // ground plus one polygon per tread
  for (int k = 1; k <= 15; ++k) {
    const auto& poly = t.polygon(k);
    for (const Vec3& v : poly.vertices) EXPECT_NEAR(v.z(), 0.17 * k, 1e-12);
    const double cx = s.start + (k - 0.5) * s.run;
    if (k < 15) {
      EXPECT_NEAR(t.height_at(cx, 0.0), 0.17 * k, 1e-12);
    }
    const auto fp = poly.footprint();
    EXPECT_NEAR(fp[0].x(), s.start + (k - 1) * s.run + inset, 1e-12);
    EXPECT_NEAR(fp[0].y(), -0.5 * s.width + inset, 1e-12);
  }
  expect_polygons_match_heightfield(t, 100);
}

TEST(Generators, BlocksAreDisconnectedAndConsistent) {
  const Terrain t = blocks();
  const BlocksSpec s;
  ASSERT_EQ(t.polygons.size(), static_cast<std::size_t>(s.rows * s.cols));
  expect_polygons_match_heightfield(t, 50);
  // Gap centres are pits.
  EXPECT_NEAR(t.height_at(0.5 * s.block_size + 0.5 * s.gap, 0.0), -s.pit_depth, 1e-12);
  EXPECT_NEAR(t.height_at(0.0, 0.5 * s.block_size + 0.5 * s.gap), -s.pit_depth, 1e-12);
  for (const auto& poly : t.polygons) {
    EXPECT_GE(poly.vertices[0].z(), 0.0);
    EXPECT_LE(poly.vertices[0].z(), s.jitter);
  }
  // Same seed gives the same terrain; a different seed changes heights.
  const Terrain again = blocks();
  EXPECT_EQ(again.heightfield.values(), t.heightfield.values());
  BlocksSpec other;
  other.seed = 2;
  EXPECT_NE(generate_terrain({other, {}}).heightfield.values(), t.heightfield.values());
}

TEST(Generators, PolygonsNeverOverlapInPlanView) {
  for (const Terrain& t : {stairs(), blocks()}) {
    for (std::size_t i = 0; i < t.polygons.size(); ++i)
      for (std::size_t j = i + 1; j < t.polygons.size(); ++j)
        EXPECT_GT(convex_distance(t.polygons[i].footprint(), t.polygons[j].footprint()), 1e-9) << i << " " << j;
  }
}

TEST(Generators, InvalidSpecsRaise) {
  EXPECT_THROW(generate_terrain({FlatSpec{0.0, 1.0, 0.0}, {}}), InvalidSpec);
  EXPECT_THROW(generate_terrain({StairsSpec{-0.1}, {}}), InvalidSpec);
  BlocksSpec b;
  b.gap = 0.0;
  EXPECT_THROW(generate_terrain({b, {}}), InvalidSpec);
  TerrainSpec spec;
  spec.options.resolution = 0.0;
  EXPECT_THROW(generate_terrain(spec), InvalidSpec);
}

TEST(Polygon, ExplicitVerticesValidated) {
  const auto tilted = make_polygon(0, {{0, 0, 0}, {1, 0, 0.2}, {1, 1, 0.2}, {0, 1, 0}});
  EXPECT_NEAR(tilted.pitch, std::atan(0.2), 1e-12);
  EXPECT_NEAR(tilted.roll, 0.0, 1e-12);
  EXPECT_NEAR(tilted.plane_normal.norm(), 1.0, 1e-15);
  EXPECT_THROW(make_polygon(0, {{0, 0, 0}, {0, 1, 0}, {1, 1, 0}, {1, 0, 0}}), InvalidSpec);       // clockwise
  EXPECT_THROW(make_polygon(0, {{0, 0, 0}, {1, 0, 0}, {1, 1, 0.3}, {0, 1, 0}}), InvalidSpec);     // warped
  EXPECT_THROW(make_polygon(0, {{0, 0, 0}, {2, 0, 0}, {1, 0.2, 0}, {2, 2, 0}, {0, 2, 0}}), InvalidSpec);  // concave
  EXPECT_THROW(make_polygon(0, {{0, 0, 0}, {1, 0, 0}}), InvalidSpec);
}

TEST(FootholdIndex, SingleCoveringPolygonListedEverywhere) {
  const Terrain t = generate_terrain({FlatSpec{4.0, 4.0, -2.0}, {}});
  for (int ix = -4; ix < 4; ++ix)
    for (int iy = -4; iy < 4; ++iy) EXPECT_EQ(t.index.cell(ix, iy), std::vector<int>{0});
}

TEST(FootholdIndex, FarApartBlocksStaySeparate) {
  std::vector<FootholdPolygon> polys{make_planar_polygon(0, rectangle(0, 0, 0.4, 0.4), Vec3::Zero(), 0, 0),
                                     make_planar_polygon(1, rectangle(5, 0, 5.4, 0.4), Vec3::Zero(), 0, 0)};
  const FootholdIndex idx = build_foothold_index(polys, 0.5, 0.5);
  EXPECT_EQ(idx.cell(0, 0), std::vector<int>{0});
  EXPECT_EQ(idx.cell(10, 0), std::vector<int>{1});
  EXPECT_TRUE(idx.cell(5, 0).empty());
  EXPECT_THROW(build_foothold_index(polys, 0.0, 0.5), InvalidSpec);
}

TEST(FootholdIndex, ExpandedCellInvariantOnGeneratedTerrain) {
  for (const Terrain& t : {stairs(), blocks()}) {
    const auto& idx = t.index;
    const double c = idx.cell_size();
    for (const auto& poly : t.polygons) {
      const auto fp = poly.footprint();
      for (int ix = -8; ix < 30; ++ix) {
        for (int iy = -8; iy < 8; ++iy) {
          const double d = convex_distance(rectangle(ix * c, iy * c, (ix + 1) * c, (iy + 1) * c), fp);
          const auto& list = idx.cell(ix, iy);
          const bool listed = std::find(list.begin(), list.end(), poly.id) != list.end();
          if (d < idx.max_radius() - 1e-9) {
            EXPECT_TRUE(listed) << poly.id << " @ " << ix << "," << iy;
          } else if (d > idx.max_radius() + 1e-9) {
            EXPECT_FALSE(listed);
          }
        }
      }
    }
  }
}

TEST(ProjectFootstep, InsidePolygonIsIdentity) {
  const Terrain t = stairs();
  const Vec2 p(1.0 + 2.5 * 0.29, 0.3);
  const FootholdTarget r = project_footstep(t, p);
  EXPECT_EQ(r.polygon_id, 3);
  EXPECT_EQ(r.projection_distance, 0.0);
  EXPECT_EQ(r.position.x(), p.x());
  EXPECT_EQ(r.position.y(), p.y());
  EXPECT_NEAR(r.position.z(), 0.51, 1e-12);
}

TEST(ProjectFootstep, GapPointSnapsToNearestInsetEdge) {
  const Terrain t = stairs();
  const double edge = 1.0 + 3 * 0.29;  // riser between tread 3 and tread 4
  const Vec2 p(edge + 0.01, -0.2);     // nearer tread 4's inset edge at edge + 0.03
  const FootholdTarget r = project_footstep(t, p);
  EXPECT_EQ(r.polygon_id, 4);
  EXPECT_NEAR(r.position.x(), edge + 0.03, 1e-12);
  EXPECT_NEAR(r.position.y(), -0.2, 1e-12);
  EXPECT_NEAR(r.projection_distance, 0.02, 1e-12);
  EXPECT_NEAR(r.position.z(), 0.68, 1e-12);

  const Vec2 q(edge - 0.01, -0.2);  // nearer tread 3
  const FootholdTarget s = project_footstep(t, q);
  EXPECT_EQ(s.polygon_id, 3);
  EXPECT_NEAR(s.position.x(), edge - 0.03, 1e-12);

  const auto brute = oracle::brute_force_projection(t.polygons, p);
  EXPECT_EQ(brute.id, 4);
  EXPECT_NEAR(brute.distance, r.projection_distance, 1e-12);
}

TEST(ProjectFootstep, MatchesBruteForceOnStairsAndBlocks) {
  auto g = oracle::rng(2024);
  for (const Terrain& t : {stairs(), blocks()}) {
    const auto& hf = t.heightfield;
    int checked = 0, no_foothold = 0;
    for (int i = 0; i < 1500; ++i) {
      const Vec2 p(oracle::uniform(g, hf.origin_x(), hf.max_x()), oracle::uniform(g, hf.origin_y(), hf.max_y()));
      const auto brute = oracle::brute_force_projection(t.polygons, p);
      if (brute.distance > t.index.max_radius()) {
        EXPECT_THROW(project_footstep(t, p), NoFoothold);
        ++no_foothold;
        continue;
      }
      const FootholdTarget r = project_footstep(t, p);
      ASSERT_NEAR(r.projection_distance, brute.distance, 1e-9);
      ASSERT_NEAR((r.position.head<2>() - brute.point).norm(), 0.0, 1e-9);
      ASSERT_NEAR(r.position.z(), t.polygon(r.polygon_id).plane_z(r.position.x(), r.position.y()), 1e-9);
      ++checked;
    }
    EXPECT_GE(checked, 1000);
    (void)no_foothold;
  }
}

TEST(ProjectFootstep, NoOtherPolygonPointIsCloser) {
  const Terrain t = blocks();
  auto g = oracle::rng(77);
  for (int i = 0; i < 100; ++i) {
    const Vec2 p(oracle::uniform(g, -0.3, 5.5), oracle::uniform(g, -1.2, 1.2));
    const FootholdTarget r = project_footstep(t, p);
    for (const auto& poly : t.polygons) {
      const auto fp = poly.footprint();
      // Dense sampling of the boundary and a lattice of interior points.
      for (std::size_t e = 0; e < fp.size(); ++e)
        for (int k = 0; k <= 40; ++k) {
          const Vec2 q = fp[e] + (fp[(e + 1) % fp.size()] - fp[e]) * (k / 40.0);
          ASSERT_LE(r.projection_distance, (q - p).norm() + 1e-9);
        }
    }
  }
}

TEST(ProjectFootstep, FarFromEverythingRaises) {
  std::vector<FootholdPolygon> polys{make_planar_polygon(0, rectangle(0, 0, 0.4, 0.4), Vec3::Zero(), 0, 0)};
  TerrainSpec spec;
  Terrain t = assemble_terrain(spec, Heightfield(-5, -5, 0.5, 21, 21), polys);
  EXPECT_THROW(project_footstep(t, Vec2(3.0, 3.0)), NoFoothold);
  EXPECT_THROW(project_footstep(t, Vec2(0.2, 1.0)), NoFoothold);  // 0.6 m away
  EXPECT_NO_THROW(project_footstep(t, Vec2(0.2, 0.8)));
}

TEST(UpperHull, Examples) {
  const auto line = upper_convex_hull({{0, 0}, {1, 0.5}, {2, 1}, {3, 1.5}});
  for (double s : {0.0, 0.3, 1.7, 3.0}) EXPECT_NEAR(line(s), 0.5 * s, 1e-15);

  const auto peak = upper_convex_hull({{0, 0}, {1, 1}, {2, 0}});
  ASSERT_EQ(peak.knots().size(), 3u);
  EXPECT_DOUBLE_EQ(peak(0.5), 0.5);

  const std::vector<std::pair<double, double>> pts{{0, 0}, {1, 0.2}, {2, 1}};
  const auto chord = upper_convex_hull(pts);
  ASSERT_EQ(chord.knots().size(), 2u);
  EXPECT_DOUBLE_EQ(chord(1.0), 0.5);
  EXPECT_DOUBLE_EQ(oracle::chord_envelope(pts, 1.0), 0.5);

  EXPECT_THROW(upper_convex_hull({{0, 0}}), TooFewSamples);
  EXPECT_THROW(upper_convex_hull({{0, 0}, {0, 1}}), ValidationError);
}

TEST(UpperHull, MatchesChordOracleDominatesAndIsConcave) {
  auto g = oracle::rng(31);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<std::pair<double, double>> pts;
    double s = 0.0;
    const int n = 2 + static_cast<int>(oracle::uniform(g, 0, 25));
    for (int i = 0; i < n; ++i) {
      s += oracle::uniform(g, 0.01, 0.2);
      pts.emplace_back(s, oracle::uniform(g, -0.2, 0.6));
    }
    const auto hull = upper_convex_hull(pts);
    EXPECT_EQ(hull(pts.front().first), pts.front().second);
    EXPECT_EQ(hull(pts.back().first), pts.back().second);
    for (const auto& [si, hi] : pts) EXPECT_GE(hull(si), hi - 1e-12);
    for (int k = 0; k < 20; ++k) {
      const double q = oracle::uniform(g, pts.front().first, pts.back().first);
      EXPECT_NEAR(hull(q), oracle::chord_envelope(pts, q), 1e-12);
    }
    for (int k = 0; k < 20; ++k) {
      const double a = oracle::uniform(g, pts.front().first, pts.back().first);
      const double b = oracle::uniform(g, pts.front().first, pts.back().first);
      EXPECT_GE(hull(0.5 * (a + b)), 0.5 * (hull(a) + hull(b)) - 1e-12);
    }
  }
}

TEST(CorridorHull, FlatIsZero) {
  const Terrain t = generate_terrain({FlatSpec{}, {}});
  const auto env = swing_corridor_hull(t, [](double s) { return Vec2(s, 0.1 * s); }, 0.4, 21);
  for (double s : {0.0, 0.1, 0.25, 0.4}) EXPECT_EQ(env(s), 0.0);
}

TEST(CorridorHull, CrossingOneStairEdge) {
  const Terrain t = stairs();
  const double T = 0.4;
  auto path = [&](double s) { return Vec2(0.8 + s / T * 0.35, 0.0); };  // from ground onto tread 1
  const auto env = swing_corridor_hull(t, path, T, 21);
  EXPECT_NEAR(env(0.0), t.height_at(0.8, 0.0), 1e-12);
  EXPECT_NEAR(env(T), 0.17, 1e-12);
  for (int i = 0; i <= 20; ++i) {
    const double s = T * i / 20;
    const Vec2 p = path(s);
    EXPECT_GE(env(s), t.height_at(p.x(), p.y()) - 1e-12);
  }
  EXPECT_THROW(swing_corridor_hull(t, path, T, 1), TooFewSamples);
  EXPECT_THROW(swing_corridor_hull(t, [](double) { return Vec2(100.0, 0.0); }, T, 5), OutOfBounds);
}

TEST(CorridorHull, StationaryPathFallsBackToPhase) {
  const Terrain t = stairs();
  const auto env = swing_corridor_hull(t, [](double) { return Vec2(1.2, 0.0); }, 0.4, 11);
  EXPECT_NEAR(env(0.2), 0.17, 1e-12);
}
