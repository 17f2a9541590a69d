#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <sstream>

#include "sfb/fdata.hpp"
#include "sfb/simgen.hpp"
#include "testutil.hpp"

using namespace sfb;

TEST_CASE("grid invariants") {
  CHECK_THROWS(Grid({1.0}));
  CHECK_THROWS(Grid({0.0, 0.0}));
  CHECK_THROWS(Grid({0.0, -1.0}));
  Grid g = Grid::equidistant();
  CHECK(g.size() == 50);
  CHECK(g.t_min() == 0.0);
  CHECK(g.t_max() == 1.0);
  double sum = 0.0;
  for (double w : g.cell_weights()) sum += w;
  CHECK(sum == doctest::Approx(1.0).epsilon(1e-15));
}

TEST_CASE("ingest basic three-row csv") {
  std::istringstream in(
      "subject_id,variable,time,value\ns1,v1,0.1,1\ns1,v1,0.2,2\ns1,v1,0.3,3\n");
  auto rep = ingest_long_csv(in);
  CHECK(rep.rows == 3);
  CHECK(rep.set.n() == 1);
  CHECK(rep.set.p() == 1);
  REQUIRE(rep.set.count(0, 0) == 3);
  CHECK(rep.set.observations(0, 0)[0].time == 0.1);
  CHECK(rep.set.observations(0, 0)[2].value == 3.0);
}

TEST_CASE("ingest is order independent") {
  auto a = testutil::from_csv(
      "subject_id,variable,time,value\ns1,v1,0.1,1\ns1,v1,0.2,2\ns1,v1,0.3,3\n");
  auto b = testutil::from_csv(
      "subject_id,variable,time,value\ns1,v1,0.3,3\ns1,v1,0.1,1\ns1,v1,0.2,2\n");
  CHECK(a == b);
}

TEST_CASE("ingest validation errors") {
  // Non-finite value on a specific line.
  std::string text = "subject_id,variable,time,value\n";
  for (int k = 0; k < 5; ++k) text += "s1,v1,0." + std::to_string(k + 1) + ",1\n";
  text += "s1,v1,0.9,NaN\n";  // line 7
  std::istringstream in(text);
  CHECK_THROWS_WITH_AS(ingest_long_csv(in), doctest::Contains("line 7"), std::runtime_error);

  std::istringstream dup("subject_id,variable,time,value\ns1,v1,0.25,1\ns1,v1,0.25,2\n");
  CHECK_THROWS_WITH_AS(ingest_long_csv(dup), doctest::Contains("(s1, v1, 0.25)"),
                       std::runtime_error);

  std::istringstream malformed("subject_id,variable,time,value\ns1,v1\n");
  CHECK_THROWS_WITH_AS(ingest_long_csv(malformed), doctest::Contains("line 2"),
                       std::runtime_error);

  std::istringstream missing_col("subject,var,t,y\ns1,v1,0.1,1\n");
  CHECK_THROWS(ingest_long_csv(missing_col));
}

TEST_CASE("custom schema column names") {
  CsvSchema schema;
  schema.subject = "id";
  schema.time = "month";
  std::istringstream in("id,variable,month,value\na,v,1,2\n");
  auto rep = ingest_long_csv(in, schema);
  CHECK(rep.set.subject_id(0) == "a");
  CHECK(rep.set.observations(0, 0)[0].time == 1.0);
}

TEST_CASE("round trip long csv") {
  auto set = testutil::from_csv(
      "subject_id,variable,time,value\n"
      "s1,v1,0.1,1.25\ns1,v2,0.7,-3.5e-4\ns2,v1,0.33333333333333331,7\n");
  std::ostringstream out;
  write_long_csv(out, set);
  auto again = testutil::from_csv(out.str());
  CHECK(set == again);
}

TEST_CASE("subject with no observations anywhere is rejected") {
  std::vector<std::vector<Observation>> obs(2);  // two subjects, one variable
  obs[0] = {{0.0, 1.0}};
  CHECK_THROWS(SparseSampleSet({"a", "b"}, {"v"}, obs));
  // Zero observations in one variable is fine as long as another has data.
  std::vector<std::vector<Observation>> obs2(2);  // one subject, two variables
  obs2[0] = {{0.0, 1.0}};
  CHECK_NOTHROW(SparseSampleSet({"a"}, {"v1", "v2"}, obs2));
}

TEST_CASE("snap to grid basics") {
  Grid g = Grid::equidistant(5, 0.0, 1.0);  // 0, .25, .5, .75, 1
  auto set = testutil::from_csv(
      "subject_id,variable,time,value\n"
      "s1,v1,0.5,1\ns1,v2,0.25,1\n"
      "s2,v1,0.1,1\n");
  SnapReport snap = snap_to_grid(set, g);
  CHECK(snap.mask.present(0, 0, 2));  // exactly at 0.5
  for (int c = 0; c < 5; ++c) CHECK_FALSE(snap.mask.present(1, 1, c));  // s2 has no v2 data
  CHECK(snap.collapsed == 0);
}

TEST_CASE("snap collapses observations mapping to one cell") {
  Grid g = Grid::equidistant(5, 0.0, 1.0);
  auto set =
      testutil::from_csv("subject_id,variable,time,value\ns1,v1,0.45,1\ns1,v1,0.55,2\n");
  SnapReport snap = snap_to_grid(set, g);
  // Nearest-point oracle: both 0.45 and 0.55 are nearest to 0.5.
  int marked = 0;
  for (int c = 0; c < 5; ++c) marked += snap.mask.present(0, 0, c) ? 1 : 0;
  CHECK(marked == 1);
  CHECK(snap.mask.present(0, 0, 2));
  CHECK(snap.collapsed == 1);
}

TEST_CASE("snap nearest assignment matches brute force") {
  Grid g = Grid::equidistant(13, -1.0, 3.5);
  rng::Engine gen = rng::make_engine(99);
  std::string text = "subject_id,variable,time,value\n";
  for (int k = 0; k < 60; ++k) {
    double t = rng::uniform(gen, -1.0, 3.5);
    char buf[64];
    std::snprintf(buf, sizeof(buf), "s%d,v1,%.17g,%d\n", k, t, k);
    text += buf;
  }
  auto set = testutil::from_csv(text);
  SnapReport snap = snap_to_grid(set, g);
  for (int i = 0; i < set.n(); ++i) {
    double t = set.observations(i, 0)[0].time;
    int best = 0;
    for (int c = 0; c < g.size(); ++c)
      if (std::abs(g[c] - t) < std::abs(g[best] - t)) best = c;
    CHECK(snap.mask.present(i, 0, best));
    long total = 0;
    for (int c = 0; c < g.size(); ++c) total += snap.mask.present(i, 0, c) ? 1 : 0;
    CHECK(total == 1);
  }
}

TEST_CASE("snap rejects observations beyond tolerance") {
  Grid g = Grid::equidistant(5, 0.0, 1.0);
  auto set = testutil::from_csv("subject_id,variable,time,value\ns1,v1,1.4,1\n");
  CHECK_THROWS_WITH_AS(snap_to_grid(set, g), doctest::Contains("s1"), std::runtime_error);
}

TEST_CASE("sparseness summary") {
  GridMask full(3, 1, 4, true);
  auto s1 = sparseness_summary(full);
  CHECK(s1.p_sparse_hat[0] == 0.0);
  CHECK(s1.p_curve_hat[0] == 0.0);

  GridMask half(4, 1, 4, true);
  for (int i = 0; i < 4; ++i) {
    half.set(i, 0, 0, false);
    half.set(i, 0, 1, false);
  }
  auto s2 = sparseness_summary(half);
  CHECK(s2.p_sparse_hat[0] == 1.0);
  CHECK(s2.p_curve_hat[0] == doctest::Approx(0.5));
}

TEST_CASE("sparseness summary tracks the generator") {
  auto curves = testutil::random_curves(100, 1, 50, 5);
  simgen::SparsifyConfig cfg;
  cfg.kind = simgen::SparsifyKind::point;
  cfg.p_sparse = 1.0;
  cfg.p_curve = 0.2;
  cfg.seed = 77;
  GridMask mask = simgen::sparsify(curves, cfg);
  auto s = sparseness_summary(mask);
  CHECK(std::abs(s.p_curve_hat[0] - 0.2) < 0.05);
}

TEST_CASE("total marked cells never exceed total observations") {
  rng::Engine gen = rng::make_engine(123);
  std::string text = "subject_id,variable,time,value\n";
  for (int i = 0; i < 10; ++i)
    for (int k = 0; k < 7; ++k) {
      char buf[64];
      std::snprintf(buf, sizeof(buf), "s%d,v1,%.17g,1\n", i, rng::uniform(gen, 0.0, 1.0));
      text += buf;
    }
  auto set = testutil::from_csv(text);
  Grid g = Grid::equidistant(6);
  SnapReport snap = snap_to_grid(set, g);
  long marked = 0;
  for (int i = 0; i < set.n(); ++i)
    for (int c = 0; c < 6; ++c) marked += snap.mask.present(i, 0, c) ? 1 : 0;
  CHECK(marked <= set.total_observations());
  CHECK(marked + snap.collapsed == set.total_observations());
}

TEST_CASE("ingest, snap and summary are deterministic") {
  std::string text =
      "subject_id,variable,time,value\ns1,v1,0.12,3\ns1,v1,0.5,4\ns2,v1,0.9,5\n";
  auto run = [&] {
    auto set = testutil::from_csv(text);
    SnapReport snap = snap_to_grid(set, Grid::equidistant(9));
    return sparseness_summary(snap.mask);
  };
  auto a = run();
  auto b = run();
  CHECK(a.p_sparse_hat == b.p_sparse_hat);
  CHECK(a.p_curve_hat == b.p_curve_hat);
}

TEST_CASE("to_sparse mirrors mask and curves") {
  auto curves = testutil::random_curves(4, 2, 7, 3);
  GridMask mask(4, 2, 7, true);
  mask.set(1, 0, 3, false);
  auto set = to_sparse(curves, mask);
  CHECK(set.n() == 4);
  CHECK(set.p() == 2);
  CHECK(set.count(1, 0) == 6);
  CHECK(set.count(0, 0) == 7);
  CHECK(set.observations(0, 1)[2].value == curves.at(0, 1, 2));
}
