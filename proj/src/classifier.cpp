#include "psoforge/classifier.hpp"

#include "psoforge/errors.hpp"
#include "psoforge/rng.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <string>

namespace psoforge {

namespace {

constexpr double kProbEps = 1e-7;
constexpr double kOutputClamp = 1e-12;

inline double clamp_prob(double q) {
  return std::min(1.0 - kProbEps, std::max(kProbEps, q));
}

Matrix sigmoid(const Matrix& z) {
  return ((-z.array()).exp() + 1.0).inverse().matrix();
}

}  // namespace

double bce(const Vector& p, const Vector& q) {
  double acc = 0.0;
  for (Eigen::Index j = 0; j < p.size(); ++j) {
    const double qc = clamp_prob(q[j]);
    acc -= p[j] * std::log(qc) + (1.0 - p[j]) * std::log(1.0 - qc);
  }
  return acc;
}

double bce_loss(const Matrix& w, const Vector& b, const Matrix& x,
                const Matrix& y) {
  const Matrix p = sigmoid((w * x).colwise() + b);
  double acc = 0.0;
  for (Eigen::Index i = 0; i < x.cols(); ++i) acc += bce(y.col(i), p.col(i));
  return acc / static_cast<double>(x.cols());
}

void bce_gradient(const Matrix& w, const Vector& b, const Matrix& x,
                  const Matrix& y, Matrix& grad_w, Vector& grad_b) {
  const double n = static_cast<double>(x.cols());
  const Matrix residual = sigmoid((w * x).colwise() + b) - y;  // C x N
  grad_w = residual * x.transpose() / n;
  grad_b = residual.rowwise().sum() / n;
}

Classifier train_multilabel(const Dataset& train, const Dataset& val,
                            const Hyper& hyper) {
  if (train.empty()) throw ConfigError("train: empty training set");
  if (val.empty()) throw ConfigError("train: empty validation set");
  const int c = train.n_classes;
  const int d = train.dim;

  const Matrix x = feature_matrix(train);
  const Matrix y = label_matrix(train);
  const Matrix xv = feature_matrix(val);
  const Matrix yv = label_matrix(val);
  const double n_val = static_cast<double>(xv.cols());

  Classifier clf;
  clf.weights = Matrix::Zero(c, d);
  clf.bias = Vector::Zero(c);
  clf.trained_on = train.origin;
  clf.train_meta = hyper;

  // Classes with a single label value get a prior-only bias and are frozen.
  std::vector<bool> frozen(c, false);
  for (int j = 0; j < c; ++j) {
    const double pos = y.row(j).sum();
    if (pos == 0.0 || pos == static_cast<double>(x.cols())) {
      frozen[j] = true;
      clf.degenerate_classes.push_back(j);
      const double prior = clamp_prob(pos / static_cast<double>(x.cols()));
      clf.bias[j] = std::log(prior / (1.0 - prior));
    }
  }

  auto val_bce = [&](const Matrix& w, const Vector& b) {
    const Matrix p = sigmoid((w * xv).colwise() + b);
    double acc = 0.0;
    for (Eigen::Index i = 0; i < p.cols(); ++i) acc += bce(yv.col(i), p.col(i));
    return acc / n_val;
  };

  Matrix w = clf.weights;
  Vector b = clf.bias;
  Matrix best_w = w;
  Vector best_b = b;
  double best = val_bce(w, b);

  Matrix grad_w;
  Vector grad_b;
  for (int t = 0; t < hyper.epochs; ++t) {
    const double lr = hyper.learning_rate * 0.5 *
                      (1.0 + std::cos(M_PI * static_cast<double>(t) /
                                      std::max(1, hyper.epochs)));
    bce_gradient(w, b, x, y, grad_w, grad_b);
    for (int j = 0; j < c; ++j) {
      if (frozen[j]) continue;
      w.row(j) -= lr * grad_w.row(j);
      b[j] -= lr * grad_b[j];
    }
    const double score = val_bce(w, b);
    if (score < best) {
      best = score;
      best_w = w;
      best_b = b;
    }
  }
  clf.weights = best_w;
  clf.bias = best_b;
  return clf;
}

Vector predict_proba(const Classifier& clf, const Vector& x) {
  Vector p = sigmoid(clf.weights * x + clf.bias);
  for (Eigen::Index j = 0; j < p.size(); ++j)
    p[j] = std::min(1.0 - kOutputClamp, std::max(kOutputClamp, p[j]));
  return p;
}

Matrix predict_proba(const Classifier& clf, const Matrix& x) {
  Matrix p = sigmoid((clf.weights * x).colwise() + clf.bias);
  return p.array().min(1.0 - kOutputClamp).max(kOutputClamp).matrix();
}

Vector predict_logits(const Classifier& clf, const Vector& x) {
  return clf.weights * x + clf.bias;
}

double dataset_bce(const Classifier& clf, const Dataset& ds) {
  return bce_loss(clf.weights, clf.bias, feature_matrix(ds), label_matrix(ds));
}

double auroc(const std::vector<double>& scores, const std::vector<int>& labels) {
  if (scores.size() != labels.size() || scores.empty())
    throw EvalError("auroc: scores and labels must be non-empty and aligned");
  const std::size_t n = scores.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });

  double rank_sum_pos = 0.0;
  std::size_t n_pos = 0, n_neg = 0;
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    while (j < n && scores[order[j]] == scores[order[i]]) ++j;
    const double avg_rank = 0.5 * static_cast<double>(i + 1 + j);  // 1-based
    for (std::size_t t = i; t < j; ++t) {
      if (labels[order[t]] == 1) {
        rank_sum_pos += avg_rank;
        ++n_pos;
      } else {
        ++n_neg;
      }
    }
    i = j;
  }
  if (n_pos == 0 || n_neg == 0)
    throw EvalError("auroc: need at least one positive and one negative");
  const double u =
      rank_sum_pos - 0.5 * static_cast<double>(n_pos) * (n_pos + 1);
  return u / (static_cast<double>(n_pos) * static_cast<double>(n_neg));
}

MacroAuc macro_auroc(const Classifier& clf, const Dataset& ds) {
  if (ds.empty()) throw EvalError("macro_auroc: empty dataset");
  const Matrix x = feature_matrix(ds);
  const Matrix p = predict_proba(clf, x);
  MacroAuc out;
  out.per_class.assign(ds.n_classes, 0.0);
  out.valid.assign(ds.n_classes, false);
  double acc = 0.0;
  int n_valid = 0;
  for (int j = 0; j < ds.n_classes; ++j) {
    std::vector<double> scores(ds.size());
    std::vector<int> labels(ds.size());
    for (std::size_t i = 0; i < ds.size(); ++i) {
      scores[i] = p(j, i);
      labels[i] = ds.records[i].labels[j];
    }
    const int pos = std::accumulate(labels.begin(), labels.end(), 0);
    if (pos == 0 || pos == static_cast<int>(labels.size())) continue;
    out.per_class[j] = auroc(scores, labels);
    out.valid[j] = true;
    acc += out.per_class[j];
    ++n_valid;
  }
  if (n_valid == 0) throw EvalError("macro_auroc: no class with both labels");
  out.macro = acc / n_valid;
  return out;
}

std::vector<double> crossval_auroc(const Dataset& ds, int k, const Hyper& hyper,
                                   std::uint64_t seed,
                                   bool allow_subject_overlap) {
  if (k < 2) throw ConfigError("crossval: k must be >= 2");
  std::vector<int> fold_of(ds.size());
  Rng rng(derive_seed(seed, "crossval.folds"));

  if (allow_subject_overlap) {
    std::vector<std::size_t> order(ds.size());
    std::iota(order.begin(), order.end(), 0);
    rng.shuffle(order);
    for (std::size_t pos = 0; pos < order.size(); ++pos)
      fold_of[order[pos]] = static_cast<int>(pos % k);
  } else {
    std::vector<int> ids = distinct_identities(ds);
    if (static_cast<int>(ids.size()) < k)
      throw ConfigError("crossval: fewer identities than folds under stratification");
    rng.shuffle(ids);
    std::map<int, int> fold_of_identity;
    for (std::size_t pos = 0; pos < ids.size(); ++pos)
      fold_of_identity[ids[pos]] = static_cast<int>(pos % k);
    for (std::size_t i = 0; i < ds.size(); ++i)
      fold_of[i] = fold_of_identity[ds.records[i].identity];
  }

  std::vector<double> scores;
  scores.reserve(k);
  for (int f = 0; f < k; ++f) {
    Dataset train_fold, test_fold;
    train_fold.origin = test_fold.origin = ds.origin;
    train_fold.dim = test_fold.dim = ds.dim;
    train_fold.n_classes = test_fold.n_classes = ds.n_classes;
    for (std::size_t i = 0; i < ds.size(); ++i)
      (fold_of[i] == f ? test_fold : train_fold).records.push_back(ds.records[i]);
    if (train_fold.empty() || test_fold.empty())
      throw EvalError("crossval: empty fold " + std::to_string(f));
    // Checkpoint selection inside CV uses the fold's own training subset.
    const Classifier clf = train_multilabel(train_fold, train_fold, hyper);
    scores.push_back(macro_auroc(clf, test_fold).macro);
  }
  return scores;
}

}  // namespace psoforge
