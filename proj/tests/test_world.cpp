#include <doctest.h>

#include <psoforge/errors.hpp>
#include <psoforge/rng.hpp>
#include <psoforge/world.hpp>

#include "test_helpers.hpp"

#include <set>

using namespace psoforge;

TEST_SUITE_BEGIN("world");

TEST_CASE("two identities respect the requested separation") {
  WorldSpec spec;
  spec.n_identities = 2;
  spec.dim = 2;
  spec.n_classes = 1;
  spec.pc_dim = 1;
  spec.identity_separation = 10.0;
  spec.seed = 7;
  const World w = build_world(spec);
  CHECK((w.means.row(0) - w.means.row(1)).norm() >= 10.0);
}

TEST_CASE("build_world is deterministic in the seed") {
  WorldSpec spec;
  spec.n_identities = 12;
  spec.dim = 16;
  spec.seed = 42;
  const World a = build_world(spec);
  const World b = build_world(spec);
  CHECK(a.means == b.means);
  CHECK(a.predicates == b.predicates);
  CHECK(a.weights == b.weights);

  spec.seed = 43;
  const World c = build_world(spec);
  CHECK(a.means != c.means);
}

TEST_CASE("dimension smaller than the predicate block is a config error") {
  WorldSpec spec;
  spec.n_identities = 4;
  spec.n_classes = 8;
  spec.dim = 4;
  CHECK_THROWS_AS(build_world(spec), ConfigError);
}

TEST_CASE("separation unrealizable in a cramped identity subspace") {
  WorldSpec spec;
  spec.n_identities = 64;
  spec.dim = 10;  // one identity coordinate left
  spec.n_classes = 8;
  spec.pc_dim = 9;
  spec.identity_separation = 2.0;
  spec.identity_radius = 3.0;
  CHECK_THROWS_AS(build_world(spec), ConfigError);
}

TEST_CASE("world invariants: weights simplex, separation, class activity") {
  WorldSpec spec;
  spec.n_identities = 200;
  spec.dim = 16;
  spec.identity_separation = 2.0;
  spec.seed = 3;
  const World w = build_world(spec);
  CHECK(std::abs(w.weights.sum() - 1.0) < 1e-12);
  CHECK(w.weights.minCoeff() > 0.0);
  double min_dist = 1e30;
  for (int i = 0; i < w.n_identities(); ++i)
    for (int j = i + 1; j < w.n_identities(); ++j)
      min_dist = std::min(min_dist, (w.means.row(i) - w.means.row(j)).norm());
  CHECK(min_dist >= spec.identity_separation);
  for (int b = 0; b < w.n_classes(); ++b)
    CHECK(w.predicates.col(b).sum() * 10 >= w.n_identities());
}

TEST_CASE("combo groups share predicate bit-vectors exactly") {
  WorldSpec spec;
  spec.n_identities = 40;
  spec.dim = 16;
  spec.combo_group = 4;
  spec.seed = 9;
  const World w = build_world(spec);
  std::set<std::vector<int>> combos;
  for (int i = 0; i < w.n_identities(); ++i) {
    std::vector<int> bits(w.n_classes());
    for (int b = 0; b < w.n_classes(); ++b) bits[b] = w.predicates(i, b);
    combos.insert(bits);
    // All members of a group carry the group's combo.
    CHECK(w.predicates.row(i) == w.predicates.row((i / 4) * 4));
  }
  CHECK(combos.size() == 10);
}

TEST_CASE("single-label geometry assigns one-hot rows") {
  WorldSpec spec;
  spec.n_identities = 24;
  spec.dim = 16;
  spec.geometry = PredicateGeometry::SingleLabel;
  const World w = build_world(spec);
  for (int i = 0; i < w.n_identities(); ++i)
    CHECK(w.predicates.row(i).sum() == 1);
}

TEST_CASE("zero cluster std reproduces the mean exactly") {
  Matrix means(2, 3);
  means << 1.0, -2.0, 0.5, 40.0, 40.0, 40.0;
  World w = testhelp::literal_world(means, 0.0);
  w.weights << 1.0, 0.0;
  const Dataset ds = sample_dataset(w, 1, 11);
  CHECK(ds.records[0].identity == 0);
  CHECK(ds.records[0].x == means.row(0).transpose());
}

TEST_CASE("sample mean concentrates on the cluster mean") {
  // CLT bound: 3 sigma / sqrt(n) ~ 0.03 for sigma 1, n 10000.
  Matrix means(2, 4);
  means.setZero();
  means.row(0) << 2.0, -1.0, 0.0, 3.0;
  means.row(1).setConstant(100.0);
  World w = testhelp::literal_world(means, 1.0);
  w.weights << 1.0, 0.0;
  const Dataset ds = sample_dataset(w, 10000, 21);
  Vector mean = Vector::Zero(4);
  for (const Record& r : ds.records) mean += r.x;
  mean /= 10000.0;
  for (int i = 0; i < 4; ++i)
    CHECK(std::abs(mean[i] - means(0, i)) < 0.05);
}

TEST_CASE("sampling is deterministic in the seed") {
  WorldSpec spec;
  spec.n_identities = 10;
  spec.dim = 16;
  spec.seed = 5;
  const World w = build_world(spec);
  const Dataset a = sample_dataset(w, 50, 77);
  const Dataset b = sample_dataset(w, 50, 77);
  REQUIRE(a.size() == b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a.records[i].x == b.records[i].x);
    CHECK(a.records[i].identity == b.records[i].identity);
  }
}

TEST_CASE("sampled labels match the world's predicate rows") {
  WorldSpec spec;
  spec.n_identities = 20;
  spec.dim = 16;
  spec.seed = 13;
  const World w = build_world(spec);
  const Dataset ds = sample_dataset(w, 200, 99);
  for (const Record& r : ds.records)
    CHECK(r.labels == w.predicates.row(r.identity).transpose());
}

TEST_CASE("70/10/20 split lands whole identities per split") {
  const Dataset ds = testhelp::grid_dataset(100, 10, 4, 2);
  const Dataset split = split_dataset(ds, 0.7, 0.1, 0.2, 31);
  std::set<int> train_ids, val_ids, test_ids;
  for (const Record& r : split.records) {
    if (r.split == Split::Train) train_ids.insert(r.identity);
    if (r.split == Split::Val) val_ids.insert(r.identity);
    if (r.split == Split::Test) test_ids.insert(r.identity);
  }
  CHECK(train_ids.size() == 70);
  CHECK(val_ids.size() == 10);
  CHECK(test_ids.size() == 20);
}

TEST_CASE("degenerate all-train split") {
  const Dataset ds = testhelp::grid_dataset(5, 3, 4, 2);
  const Dataset split = split_dataset(ds, 1.0, 0.0, 0.0, 1);
  for (const Record& r : split.records) CHECK(r.split == Split::Train);
}

TEST_CASE("no identity spans train and test") {
  const Dataset ds = testhelp::grid_dataset(37, 4, 4, 2);
  const Dataset split = split_dataset(ds, 0.6, 0.2, 0.2, 17);
  std::set<int> train_ids, test_ids;
  for (const Record& r : split.records) {
    if (r.split == Split::Train) train_ids.insert(r.identity);
    if (r.split == Split::Test) test_ids.insert(r.identity);
  }
  for (int id : train_ids) CHECK(test_ids.count(id) == 0);
}

TEST_CASE("stratified split needs at least three identities") {
  const Dataset ds = testhelp::grid_dataset(2, 5, 4, 2);
  CHECK_THROWS_AS(split_dataset(ds, 0.7, 0.1, 0.2, 1), ConfigError);
}

TEST_CASE("fractions must sum to one") {
  const Dataset ds = testhelp::grid_dataset(5, 2, 4, 2);
  CHECK_THROWS_AS(split_dataset(ds, 0.5, 0.1, 0.2, 1), ConfigError);
}

TEST_CASE("subject overlap mode splits at record granularity") {
  const Dataset ds = testhelp::grid_dataset(10, 10, 4, 2);
  const Dataset split = split_dataset(ds, 0.7, 0.1, 0.2, 31, true);
  int n_train = 0, n_val = 0, n_test = 0;
  for (const Record& r : split.records) {
    n_train += r.split == Split::Train;
    n_val += r.split == Split::Val;
    n_test += r.split == Split::Test;
  }
  CHECK(n_train == 70);
  CHECK(n_val == 10);
  CHECK(n_test == 20);
}

TEST_SUITE_END();
