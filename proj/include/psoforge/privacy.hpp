#pragma once

#include "psoforge/features.hpp"
#include "psoforge/types.hpp"

#include <cstdint>
#include <optional>
#include <vector>

namespace psoforge {

struct CalibrationMeta {
  double target_auc = 0.0;
  double achieved_auc = 0.0;   // held-out pairs only
  double fnr_at_tau = 0.0;     // same-identity pairs scored <= tau
  double fpr_at_tau = 0.0;     // different-identity pairs scored > tau
};

/// Cosine-threshold re-identification filter over identity embeddings.
/// A pair is a privacy violation iff its similarity is strictly above tau.
struct ReidFilter {
  ExtractorSpec extractor;
  std::optional<double> tau;
  CalibrationMeta meta;

  bool calibrated() const { return tau.has_value(); }
};

struct IdentityPair {
  Vector a;
  Vector b;
  bool same_identity = false;
};

struct CalibrationObjective {
  enum class Kind { YoudenJ, FalseNegativeBudget } kind = Kind::YoudenJ;
  double fn_budget = 0.0;
};

struct AttackReport {
  int n_released = 0;
  int n_correct = 0;
  double accuracy = 0.0;
  double chance = 0.0;
  double threshold = 0.0;  // chance + 3 sigma binomial margin
  bool pass = false;
};

/// Cosine similarity of the identity embeddings; zero-norm embeddings score 0.
double reid_score(const Vector& x, const Vector& x_prime,
                  const ReidFilter& filter, bool* zero_flag = nullptr);

/// 1 = privacy violation (same individual); requires a calibrated filter.
int reid_predict(const Vector& x, const Vector& x_prime, const ReidFilter& filter);

/// Balanced labeled pairs drawn from a dataset for filter calibration and
/// evaluation. Keep calibration, evaluation, and audit pair sets disjoint by
/// deriving them from distinct seeds/splits.
std::vector<IdentityPair> make_identity_pairs(const Dataset& ds, int n_pairs,
                                              std::uint64_t seed);

/// ROC over pair similarities: records the AUCROC and places tau at the
/// requested operating point (Youden's J by default).
ReidFilter calibrate_threshold(const std::vector<IdentityPair>& pairs,
                               const ExtractorSpec& identity_spec,
                               const CalibrationObjective& objective = {});

/// AUCROC of a filter's similarity score on held-out pairs.
double evaluate_pairs_auc(const std::vector<IdentityPair>& pairs,
                          const ReidFilter& filter);

/// Linkage attack: each released record is linked to the identity of its
/// nearest real record in embedding space; accuracy is compared against
/// chance = 1/n_identities at a 3-sigma binomial margin.
AttackReport identity_attack(const Matrix& released_x,
                             const std::vector<int>& source_identities,
                             const Dataset& real,
                             const ExtractorSpec& identity_spec);

}  // namespace psoforge
