#pragma once

#include "psoforge/classifier.hpp"
#include "psoforge/privacy.hpp"
#include "psoforge/types.hpp"

#include <optional>
#include <string>

namespace psoforge {

struct GaussianMoments {
  Vector mu;
  Matrix sigma;  // symmetric PSD
  long n = 0;
};

/// Sample mean and unbiased covariance of the columns of `samples`.
GaussianMoments gaussian_moments(const Matrix& samples);

/// 2-Wasserstein distance between Gaussians:
/// ||mu1 - mu2||^2 + tr(S1 + S2 - 2 (S1 S2)^{1/2}), with the matrix square
/// root taken through the symmetric form S1^{1/2} S2 S1^{1/2}.
double frechet_distance(const GaussianMoments& a, const GaussianMoments& b);

/// Image-retrieval score: the number of distinct real records that are the
/// 1-nearest-neighbour of at least one synthetic record, normalized by the
/// expected distinct count n(1 - (1 - 1/n)^N) of a perfect uniform generator.
/// Columns of both matrices are embeddings from the same extractor.
double irs(const Matrix& real_embeddings, const Matrix& synth_embeddings);

struct GapResult {
  double auroc_real = 0.0;
  double auroc_synth = 0.0;
  double gap = 0.0;  // auroc_synth - auroc_real
};

/// Trains one classifier on real and one on synthetic data (both checkpoint
/// selected on the real validation split) and evaluates both on real test.
GapResult real_synth_gap(const Dataset& real_train, const Dataset& synth_train,
                         const Dataset& real_val, const Dataset& real_test,
                         const Hyper& hyper);

struct EvalReport {
  double fid = 0.0;
  double irs = 0.0;
  double auroc_real = 0.0;
  double auroc_synth = 0.0;
  double gap = 0.0;
  std::optional<AttackReport> privacy;
  int drops = 0;
};

std::string report_to_json(const EvalReport& report);
std::string report_csv_header();
std::string report_csv_row(const std::string& name, const EvalReport& report);

}  // namespace psoforge
