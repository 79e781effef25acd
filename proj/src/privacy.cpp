#include "psoforge/privacy.hpp"

#include "psoforge/classifier.hpp"
#include "psoforge/errors.hpp"
#include "psoforge/rng.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <string>

namespace psoforge {

double reid_score(const Vector& x, const Vector& x_prime,
                  const ReidFilter& filter, bool* zero_flag) {
  const Vector ea = identity_embedding(x, filter.extractor);
  const Vector eb = identity_embedding(x_prime, filter.extractor);
  const double na = ea.norm();
  const double nb = eb.norm();
  if (na == 0.0 || nb == 0.0) {
    if (zero_flag) *zero_flag = true;
    return 0.0;
  }
  if (zero_flag) *zero_flag = false;
  return ea.dot(eb) / (na * nb);
}

int reid_predict(const Vector& x, const Vector& x_prime,
                 const ReidFilter& filter) {
  if (!filter.calibrated())
    throw ConfigError("reid_predict: filter is not calibrated");
  return reid_score(x, x_prime, filter) > *filter.tau ? 1 : 0;
}

std::vector<IdentityPair> make_identity_pairs(const Dataset& ds, int n_pairs,
                                              std::uint64_t seed) {
  if (n_pairs < 2) throw ConfigError("make_identity_pairs: need n_pairs >= 2");
  std::map<int, std::vector<std::size_t>> by_identity;
  for (std::size_t i = 0; i < ds.size(); ++i)
    by_identity[ds.records[i].identity].push_back(i);

  std::vector<int> ids_with_two;
  for (const auto& [id, members] : by_identity)
    if (members.size() >= 2) ids_with_two.push_back(id);
  if (ids_with_two.empty() || by_identity.size() < 2)
    throw DataError("make_identity_pairs: dataset cannot form both pair classes");

  Rng rng(derive_seed(seed, "privacy.pairs"));
  std::vector<IdentityPair> pairs;
  pairs.reserve(n_pairs);
  for (int i = 0; i < n_pairs; ++i) {
    IdentityPair p;
    p.same_identity = (i % 2 == 0);
    if (p.same_identity) {
      const auto& members =
          by_identity[ids_with_two[rng.next_u64() % ids_with_two.size()]];
      const std::size_t a = rng.next_u64() % members.size();
      std::size_t b = rng.next_u64() % (members.size() - 1);
      if (b >= a) ++b;
      p.a = ds.records[members[a]].x;
      p.b = ds.records[members[b]].x;
    } else {
      const std::size_t a = rng.next_u64() % ds.size();
      std::size_t b = a;
      while (ds.records[b].identity == ds.records[a].identity)
        b = rng.next_u64() % ds.size();
      p.a = ds.records[a].x;
      p.b = ds.records[b].x;
    }
    pairs.push_back(std::move(p));
  }
  return pairs;
}

namespace {

std::vector<double> pair_scores(const std::vector<IdentityPair>& pairs,
                                const ReidFilter& filter) {
  std::vector<double> s(pairs.size());
  for (std::size_t i = 0; i < pairs.size(); ++i)
    s[i] = reid_score(pairs[i].a, pairs[i].b, filter);
  return s;
}

}  // namespace

ReidFilter calibrate_threshold(const std::vector<IdentityPair>& pairs,
                               const ExtractorSpec& identity_spec,
                               const CalibrationObjective& objective) {
  ReidFilter filter;
  filter.extractor = identity_spec;

  std::size_t n_same = 0;
  for (const auto& p : pairs) n_same += p.same_identity ? 1 : 0;
  if (n_same == 0 || n_same == pairs.size())
    throw DataError("calibrate_threshold: need both same- and different-identity pairs");

  const std::vector<double> scores = pair_scores(pairs, filter);
  std::vector<int> labels(pairs.size());
  for (std::size_t i = 0; i < pairs.size(); ++i)
    labels[i] = pairs[i].same_identity ? 1 : 0;

  // Candidate thresholds are the observed scores; prediction is score > tau.
  std::vector<double> candidates = scores;
  std::sort(candidates.begin(), candidates.end());
  candidates.erase(std::unique(candidates.begin(), candidates.end()),
                   candidates.end());
  candidates.insert(candidates.begin(), candidates.front() - 1.0);

  const double n_pos = static_cast<double>(n_same);
  const double n_neg = static_cast<double>(pairs.size() - n_same);
  double best_tau = candidates.front();
  double best_j = -2.0;
  double best_fnr = 1.0, best_fpr = 1.0;
  for (const double tau : candidates) {
    double tp = 0, fp = 0;
    for (std::size_t i = 0; i < pairs.size(); ++i) {
      if (scores[i] > tau) {
        if (labels[i]) ++tp;
        else ++fp;
      }
    }
    const double tpr = tp / n_pos;
    const double fpr = fp / n_neg;
    const double fnr = 1.0 - tpr;
    bool take = false;
    if (objective.kind == CalibrationObjective::Kind::YoudenJ) {
      take = tpr - fpr > best_j + 1e-15;
      if (take) best_j = tpr - fpr;
    } else {
      // Largest tau whose false-negative rate stays within budget.
      take = fnr <= objective.fn_budget + 1e-15;
    }
    if (take) {
      best_tau = tau;
      best_fnr = fnr;
      best_fpr = fpr;
    }
  }

  filter.tau = best_tau;
  filter.meta.achieved_auc = auroc(scores, labels);
  filter.meta.fnr_at_tau = best_fnr;
  filter.meta.fpr_at_tau = best_fpr;
  return filter;
}

double evaluate_pairs_auc(const std::vector<IdentityPair>& pairs,
                          const ReidFilter& filter) {
  const std::vector<double> scores = pair_scores(pairs, filter);
  std::vector<int> labels(pairs.size());
  for (std::size_t i = 0; i < pairs.size(); ++i)
    labels[i] = pairs[i].same_identity ? 1 : 0;
  return auroc(scores, labels);
}

AttackReport identity_attack(const Matrix& released_x,
                             const std::vector<int>& source_identities,
                             const Dataset& real,
                             const ExtractorSpec& identity_spec) {
  if (released_x.cols() == 0) throw DataError("identity_attack: empty released set");
  if (static_cast<std::size_t>(released_x.cols()) != source_identities.size())
    throw DataError("identity_attack: sidecar does not match released set");
  if (real.empty()) throw DataError("identity_attack: empty real set");

  const Matrix m = extractor_matrix(identity_spec);
  const Matrix real_emb = m * feature_matrix(real);      // q x n_real
  const Matrix rel_emb = m * released_x;                 // q x n_released

  const Vector real_sq = real_emb.colwise().squaredNorm();
  AttackReport report;
  report.n_released = static_cast<int>(released_x.cols());
  for (int i = 0; i < report.n_released; ++i) {
    // Nearest real record by embedding distance; lowest index wins ties.
    Vector d2 = real_sq - 2.0 * (real_emb.transpose() * rel_emb.col(i));
    Eigen::Index best;
    d2.minCoeff(&best);
    if (real.records[best].identity == source_identities[i]) ++report.n_correct;
  }
  report.accuracy =
      static_cast<double>(report.n_correct) / report.n_released;
  const double k = static_cast<double>(distinct_identities(real).size());
  report.chance = 1.0 / k;
  report.threshold =
      report.chance + 3.0 * std::sqrt(report.chance * (1.0 - report.chance) /
                                      report.n_released);
  report.pass = report.accuracy <= report.threshold;
  return report;
}

}  // namespace psoforge
