#include "psoforge/world.hpp"

#include "psoforge/errors.hpp"
#include "psoforge/rng.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <set>
#include <string>
#include <vector>

namespace psoforge {

namespace {

void check_spec(const WorldSpec& spec) {
  if (spec.n_identities < 2)
    throw ConfigError("world: n_identities must be >= 2, got " +
                      std::to_string(spec.n_identities));
  if (spec.n_classes < 1) throw ConfigError("world: n_classes must be >= 1");
  if (spec.cluster_std < 0.0)
    throw ConfigError("world: cluster_std must be >= 0");
  if (spec.identity_separation <= 0.0)
    throw ConfigError("world: identity_separation must be > 0");
  const int pc = spec.resolved_pc_dim();
  if (spec.dim < spec.n_classes + 1 || spec.dim <= pc)
    throw ConfigError(
        "world: dim=" + std::to_string(spec.dim) +
        " too small; need predicate block (" + std::to_string(pc) +
        ") plus at least one identity coordinate");
  if (spec.combo_group < 0) throw ConfigError("world: combo_group must be >= 0");
}

/// Identity bit-vector assignment. Each class must end up active for at
/// least 10% of identities.
MatrixI assign_predicates(const WorldSpec& spec, Rng& rng) {
  const int k = spec.n_identities;
  const int c = spec.n_classes;
  MatrixI bits = MatrixI::Zero(k, c);

  if (spec.geometry == PredicateGeometry::SingleLabel) {
    for (int i = 0; i < k; ++i) bits(i, i % c) = 1;
    if (k < c)
      throw ConfigError("world: single-label geometry needs n_identities >= n_classes");
    return bits;
  }

  if (spec.combo_group > 0) {
    const int g = spec.combo_group;
    const int n_combos = (k + g - 1) / g;
    if (c < 63 && n_combos > (1LL << c))
      throw ConfigError("world: more combo groups than distinct bit-vectors");
    for (int attempt = 0; attempt < 64; ++attempt) {
      std::set<std::vector<int>> seen;
      std::vector<std::vector<int>> combos;
      while (static_cast<int>(combos.size()) < n_combos) {
        std::vector<int> v(c);
        for (int b = 0; b < c; ++b) v[b] = rng.uniform() < 0.5 ? 1 : 0;
        if (seen.insert(v).second) combos.push_back(v);
      }
      for (int i = 0; i < k; ++i)
        for (int b = 0; b < c; ++b) bits(i, b) = combos[i / g][b];
      bool ok = true;
      for (int b = 0; b < c; ++b)
        if (bits.col(b).sum() * 10 < k) ok = false;
      if (ok) return bits;
    }
    throw ConfigError("world: could not satisfy 10% class activity with combo groups");
  }

  for (int i = 0; i < k; ++i)
    for (int b = 0; b < c; ++b) bits(i, b) = rng.uniform() < 0.5 ? 1 : 0;
  // Top up rare classes to the 10% floor.
  const int floor_count = (k + 9) / 10;
  for (int b = 0; b < c; ++b) {
    int active = bits.col(b).sum();
    while (active < floor_count) {
      const int i = static_cast<int>(rng.next_u64() % k);
      if (bits(i, b) == 0) {
        bits(i, b) = 1;
        ++active;
      }
    }
  }
  return bits;
}

}  // namespace

int WorldSpec::resolved_pc_dim() const {
  if (pc_dim > 0) return pc_dim;
  return std::min(n_classes + 2, dim - 1);
}

World build_world(const WorldSpec& spec) {
  check_spec(spec);
  Rng rng(derive_seed(spec.seed, "world.build"));

  const int k = spec.n_identities;
  const int d = spec.dim;
  const int c = spec.n_classes;
  const int pc = spec.resolved_pc_dim();
  const int q = d - pc;
  const double radius = spec.identity_radius > 0.0
                            ? spec.identity_radius
                            : 3.0 * spec.identity_separation;
  if (radius * 2.0 < spec.identity_separation)
    throw ConfigError("world: identity_radius too small for requested separation");

  World w;
  w.cluster_std = spec.cluster_std;
  w.predicates = assign_predicates(spec, rng);
  w.weights = Vector::Constant(k, 1.0 / k);
  w.means = Matrix::Zero(k, d);

  for (int i = 0; i < k; ++i)
    for (int b = 0; b < c; ++b)
      if (w.predicates(i, b)) w.means(i, b) = spec.predicate_delta;

  if (spec.covariate_shift != 0.0) {
    Rng shift_rng(derive_seed(spec.seed, "world.shift"));
    Matrix g(c, c);
    for (int i = 0; i < c; ++i)
      for (int j = 0; j < c; ++j) g(i, j) = shift_rng.normal() / std::sqrt(double(c));
    const Matrix distortion = Matrix::Identity(c, c) + spec.covariate_shift * g;
    w.means.leftCols(c) = w.means.leftCols(c) * distortion.transpose();
  }

  // Identity clusters: random directions on a sphere, rejected until the
  // pairwise separation holds. Fails when the subspace is too cramped.
  const double sep2 = spec.identity_separation * spec.identity_separation;
  Matrix id_block(k, q);
  for (int i = 0; i < k; ++i) {
    bool placed = false;
    for (int attempt = 0; attempt < 256 && !placed; ++attempt) {
      Vector u = rng.normal_vector(q);
      const double norm = u.norm();
      if (norm == 0.0) continue;
      u *= radius / norm;
      placed = true;
      for (int j = 0; j < i; ++j) {
        if ((id_block.row(j).transpose() - u).squaredNorm() < sep2) {
          placed = false;
          break;
        }
      }
      if (placed) id_block.row(i) = u.transpose();
    }
    if (!placed)
      throw ConfigError(
          "world: cannot place identity " + std::to_string(i) +
          " with separation " + std::to_string(spec.identity_separation) +
          " in " + std::to_string(q) + " identity coordinates");
  }
  w.means.rightCols(q) = id_block;
  return w;
}

Dataset sample_dataset(const World& world, int n, std::uint64_t seed) {
  if (n < 1) throw ConfigError("sample_dataset: n must be >= 1");
  Rng rng(derive_seed(seed, "world.sample"));
  Dataset ds;
  ds.origin = Origin::Real;
  ds.dim = world.dim();
  ds.n_classes = world.n_classes();
  ds.records.reserve(n);
  const double s0 = world.cluster_std;
  for (int i = 0; i < n; ++i) {
    Record r;
    r.record_id = i;
    r.identity = rng.categorical(world.weights);
    r.labels = world.predicates.row(r.identity).transpose();
    r.x = world.means.row(r.identity).transpose() + s0 * rng.normal_vector(ds.dim);
    r.split = Split::Train;
    ds.records.push_back(std::move(r));
  }
  return ds;
}

Dataset split_dataset(const Dataset& ds, double train_frac, double val_frac,
                      double test_frac, std::uint64_t seed,
                      bool allow_subject_overlap) {
  const double total = train_frac + val_frac + test_frac;
  if (std::abs(total - 1.0) > 1e-9)
    throw ConfigError("split_dataset: fractions must sum to 1");
  if (train_frac < 0 || val_frac < 0 || test_frac < 0)
    throw ConfigError("split_dataset: fractions must be non-negative");

  Dataset out = ds;
  const std::size_t n = ds.records.size();
  Rng rng(derive_seed(seed, "world.split"));

  if (allow_subject_overlap) {
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    rng.shuffle(order);
    const std::size_t n_train = static_cast<std::size_t>(std::llround(train_frac * n));
    const std::size_t n_val = static_cast<std::size_t>(std::llround(val_frac * n));
    for (std::size_t pos = 0; pos < n; ++pos) {
      Split s = pos < n_train ? Split::Train
                : pos < n_train + n_val ? Split::Val
                                        : Split::Test;
      out.records[order[pos]].split = s;
    }
    return out;
  }

  std::vector<int> ids = distinct_identities(ds);
  if (ids.size() < 3)
    throw ConfigError("split_dataset: need at least 3 identities to stratify");
  rng.shuffle(ids);

  // Walk identities in shuffled order, filling each split until its record
  // budget is met; granularity is one identity group.
  std::map<int, std::size_t> per_identity;
  for (const Record& r : ds.records) ++per_identity[r.identity];
  const double budget_train = train_frac * n;
  const double budget_val = (train_frac + val_frac) * n;
  std::map<int, Split> assignment;
  double acc = 0.0;
  for (int id : ids) {
    Split s = acc + 1e-9 < budget_train ? Split::Train
              : acc + 1e-9 < budget_val ? Split::Val
                                        : Split::Test;
    assignment[id] = s;
    acc += static_cast<double>(per_identity[id]);
  }
  for (Record& r : out.records) r.split = assignment[r.identity];
  return out;
}

}  // namespace psoforge
