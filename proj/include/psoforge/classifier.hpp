#pragma once

#include "psoforge/types.hpp"

#include <cstdint>
#include <vector>

namespace psoforge {

struct Hyper {
  int epochs = 100;
  double learning_rate = 0.5;
  std::uint64_t seed = 0;
};

/// Multi-label linear classifier with sigmoid outputs.
struct Classifier {
  Matrix weights;  // n_classes x dim
  Vector bias;     // n_classes
  Origin trained_on = Origin::Real;
  Hyper train_meta;
  /// Classes that had a single label value in train and were fitted with a
  /// prior-only bias.
  std::vector<int> degenerate_classes;

  int n_classes() const { return static_cast<int>(weights.rows()); }
  int dim() const { return static_cast<int>(weights.cols()); }
};

/// Full-batch gradient descent on mean BCE with a cosine-annealed learning
/// rate; returns the parameter snapshot with the lowest validation BCE
/// (initialization included, so zero epochs returns the zero model).
Classifier train_multilabel(const Dataset& train, const Dataset& val,
                            const Hyper& hyper);

/// sigmoid(Wx + b), clamped away from exact 0/1.
Vector predict_proba(const Classifier& clf, const Vector& x);
/// Column-wise predictions for a batch of feature columns.
Matrix predict_proba(const Classifier& clf, const Matrix& x);
Vector predict_logits(const Classifier& clf, const Vector& x);

/// Binary cross-entropy between probability vectors; q is clamped to
/// [1e-7, 1 - 1e-7] before the logs.
double bce(const Vector& p, const Vector& q);

/// Mean BCE of a classifier over a dataset (the training objective).
double dataset_bce(const Classifier& clf, const Dataset& ds);

/// Analytic gradient of the mean-BCE objective at (W, b); exposed for the
/// finite-difference oracle.
void bce_gradient(const Matrix& w, const Vector& b, const Matrix& x,
                  const Matrix& y, Matrix& grad_w, Vector& grad_b);
double bce_loss(const Matrix& w, const Vector& b, const Matrix& x,
                const Matrix& y);

/// Mann-Whitney AUCROC with ties counted 1/2.
double auroc(const std::vector<double>& scores, const std::vector<int>& labels);

struct MacroAuc {
  double macro = 0.0;
  std::vector<double> per_class;
  std::vector<bool> valid;  // classes lacking a positive or negative are skipped
};

MacroAuc macro_auroc(const Classifier& clf, const Dataset& ds);

/// k-fold cross-validation macro AUCROC; folds are identity-stratified
/// unless allow_subject_overlap is set.
std::vector<double> crossval_auroc(const Dataset& ds, int k, const Hyper& hyper,
                                   std::uint64_t seed,
                                   bool allow_subject_overlap = false);

}  // namespace psoforge
