#pragma once

#include "psoforge/types.hpp"

#include <cstdint>

namespace psoforge {

enum class PredicateGeometry { MultiLabel, SingleLabel };

/// Parameters of the toy population. The ambient space is laid out as
/// [predicate block | spare block | identity block]: the first n_classes
/// coordinates carry predicate offsets (bit b adds +predicate_delta to
/// coordinate b), coordinates up to pc_dim are zero-mean spares, and the
/// remaining coordinates carry identity cluster positions. The pseudo-
/// condition extractor reads [0, pc_dim) and the identity extractor reads
/// [pc_dim, dim), so the two views are exactly complementary.
struct WorldSpec {
  int n_identities = 2;
  int dim = 4;
  double cluster_std = 0.1;
  int n_classes = 8;
  double identity_separation = 1.0;
  /// Radius of the sphere identity clusters are placed on; 0 means
  /// 3 * identity_separation.
  double identity_radius = 0.0;
  PredicateGeometry geometry = PredicateGeometry::MultiLabel;
  /// When > 0, predicate bit-vectors are shared by groups of exactly this
  /// many identities (so no identity is singled out by its predicates).
  int combo_group = 0;
  double predicate_delta = 3.0;
  /// Magnitude of a seeded linear distortion applied to the predicate block
  /// of the means; models site-specific covariate shift.
  double covariate_shift = 0.0;
  /// Width of the pseudo-condition block; 0 means n_classes + 2 (clamped to
  /// leave at least one identity coordinate).
  int pc_dim = 0;
  std::uint64_t seed = 0;

  int resolved_pc_dim() const;
};

struct World {
  Matrix means;       // n_identities x dim
  Vector weights;     // simplex over identities
  MatrixI predicates; // n_identities x n_classes, 0/1
  double cluster_std = 0.0;

  int n_identities() const { return static_cast<int>(means.rows()); }
  int dim() const { return static_cast<int>(means.cols()); }
  int n_classes() const { return static_cast<int>(predicates.cols()); }
};

/// Deterministic in spec.seed. Throws ConfigError when the requested
/// separation cannot be realized in the identity subspace.
World build_world(const WorldSpec& spec);

/// Draw n records: identity ~ weights, x ~ Normal(mean, cluster_std^2 I),
/// labels copied from the identity's predicate row.
Dataset sample_dataset(const World& world, int n, std::uint64_t seed);

/// Assign train/val/test tags by a seeded permutation. By default the
/// permutation is over identities, so no identity spans train and test;
/// with allow_subject_overlap the permutation is over records.
Dataset split_dataset(const Dataset& ds, double train_frac, double val_frac,
                      double test_frac, std::uint64_t seed,
                      bool allow_subject_overlap = false);

}  // namespace psoforge
