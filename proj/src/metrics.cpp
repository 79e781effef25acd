#include "psoforge/metrics.hpp"

#include "psoforge/errors.hpp"

#include <Eigen/Eigenvalues>
#include <nlohmann/json.hpp>

#include <cmath>
#include <sstream>
#include <vector>

namespace psoforge {

namespace {

constexpr double kEigTolerance = 1e-6;

Matrix psd_sqrt(const Matrix& s) {
  Eigen::SelfAdjointEigenSolver<Matrix> eig(s);
  if (eig.info() != Eigen::Success)
    throw EvalError("frechet: eigendecomposition failed");
  Vector lambda = eig.eigenvalues();
  for (Eigen::Index i = 0; i < lambda.size(); ++i) {
    if (lambda[i] < -kEigTolerance)
      throw EvalError("frechet: covariance not PSD (eigenvalue " +
                      std::to_string(lambda[i]) + ")");
    lambda[i] = std::sqrt(std::max(0.0, lambda[i]));
  }
  return eig.eigenvectors() * lambda.asDiagonal() *
         eig.eigenvectors().transpose();
}

}  // namespace

GaussianMoments gaussian_moments(const Matrix& samples) {
  const Eigen::Index n = samples.cols();
  if (n < 2) throw EvalError("gaussian_moments: need at least 2 samples");
  GaussianMoments m;
  m.n = static_cast<long>(n);
  m.mu = samples.rowwise().mean();
  const Matrix centered = samples.colwise() - m.mu;
  m.sigma = centered * centered.transpose() / static_cast<double>(n - 1);
  m.sigma = 0.5 * (m.sigma + m.sigma.transpose());
  return m;
}

double frechet_distance(const GaussianMoments& a, const GaussianMoments& b) {
  if (a.mu.size() != b.mu.size())
    throw EvalError("frechet: dimension mismatch");
  const Matrix a_half = psd_sqrt(a.sigma);
  Matrix inner = a_half * b.sigma * a_half;
  inner = 0.5 * (inner + inner.transpose());
  Eigen::SelfAdjointEigenSolver<Matrix> eig(inner);
  if (eig.info() != Eigen::Success)
    throw EvalError("frechet: eigendecomposition failed");
  double trace_sqrt = 0.0;
  for (Eigen::Index i = 0; i < eig.eigenvalues().size(); ++i) {
    const double lambda = eig.eigenvalues()[i];
    if (lambda < -kEigTolerance)
      throw EvalError("frechet: product matrix not PSD");
    trace_sqrt += std::sqrt(std::max(0.0, lambda));
  }
  const double d2 = (a.mu - b.mu).squaredNorm() + a.sigma.trace() +
                    b.sigma.trace() - 2.0 * trace_sqrt;
  return std::max(0.0, d2);
}

double irs(const Matrix& real_embeddings, const Matrix& synth_embeddings) {
  if (real_embeddings.rows() != synth_embeddings.rows())
    throw EvalError("irs: embedding dimension mismatch");
  const Eigen::Index n = real_embeddings.cols();
  const Eigen::Index big_n = synth_embeddings.cols();
  if (n < 1 || big_n < 1) throw EvalError("irs: empty embedding set");

  const Vector real_sq = real_embeddings.colwise().squaredNorm();
  std::vector<bool> retrieved(n, false);
  for (Eigen::Index j = 0; j < big_n; ++j) {
    Vector d2 =
        real_sq - 2.0 * (real_embeddings.transpose() * synth_embeddings.col(j));
    Eigen::Index best;
    d2.minCoeff(&best);
    retrieved[best] = true;
  }
  long k = 0;
  for (bool r : retrieved) k += r ? 1 : 0;

  const double nn = static_cast<double>(n);
  const double expected =
      nn * (1.0 - std::pow(1.0 - 1.0 / nn, static_cast<double>(big_n)));
  return static_cast<double>(k) / expected;
}

GapResult real_synth_gap(const Dataset& real_train, const Dataset& synth_train,
                         const Dataset& real_val, const Dataset& real_test,
                         const Hyper& hyper) {
  const Classifier clf_real = train_multilabel(real_train, real_val, hyper);
  const Classifier clf_synth = train_multilabel(synth_train, real_val, hyper);
  GapResult out;
  out.auroc_real = macro_auroc(clf_real, real_test).macro;
  out.auroc_synth = macro_auroc(clf_synth, real_test).macro;
  out.gap = out.auroc_synth - out.auroc_real;
  return out;
}

std::string report_to_json(const EvalReport& report) {
  nlohmann::json j;
  j["fid"] = report.fid;
  j["irs"] = report.irs;
  j["auroc_real"] = report.auroc_real;
  j["auroc_synth"] = report.auroc_synth;
  j["gap"] = report.gap;
  j["drops"] = report.drops;
  if (report.privacy) {
    j["privacy"] = {{"n_released", report.privacy->n_released},
                    {"n_correct", report.privacy->n_correct},
                    {"accuracy", report.privacy->accuracy},
                    {"chance", report.privacy->chance},
                    {"threshold", report.privacy->threshold},
                    {"pass", report.privacy->pass}};
  } else {
    j["privacy"] = nullptr;
  }
  return j.dump(2);
}

std::string report_csv_header() {
  return "name,fid,irs,auroc_real,auroc_synth,gap,drops,privacy_accuracy,privacy_pass";
}

std::string report_csv_row(const std::string& name, const EvalReport& report) {
  std::ostringstream out;
  out << name << ',' << report.fid << ',' << report.irs << ','
      << report.auroc_real << ',' << report.auroc_synth << ',' << report.gap
      << ',' << report.drops << ',';
  if (report.privacy)
    out << report.privacy->accuracy << ','
        << (report.privacy->pass ? "pass" : "fail");
  else
    out << ",";
  return out.str();
}

}  // namespace psoforge
