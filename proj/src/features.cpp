#include "psoforge/features.hpp"

#include "psoforge/errors.hpp"
#include "psoforge/rng.hpp"

#include <Eigen/QR>

#include <string>

namespace psoforge {

namespace {

void check_spec(const ExtractorSpec& spec) {
  if (spec.out_dim < 1 || spec.out_dim > spec.in_dim)
    throw ConfigError("extractor: need 1 <= out_dim <= in_dim, got out_dim=" +
                      std::to_string(spec.out_dim) +
                      " in_dim=" + std::to_string(spec.in_dim));
}

Matrix orthogonal_mix(int m, std::uint64_t seed) {
  Rng rng(derive_seed(seed, "extractor.mix"));
  Matrix g(m, m);
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < m; ++j) g(i, j) = rng.normal();
  Eigen::HouseholderQR<Matrix> qr(g);
  Matrix q = qr.householderQ() * Matrix::Identity(m, m);
  // Fix signs so the factorization is unique.
  Matrix r = qr.matrixQR().triangularView<Eigen::Upper>();
  for (int j = 0; j < m; ++j)
    if (r(j, j) < 0) q.col(j) *= -1.0;
  return q;
}

}  // namespace

ExtractorSpec default_pseudo_condition_spec(int dim, int pc_dim) {
  return ExtractorSpec{ExtractorKind::PseudoCondition, dim, pc_dim, 0};
}

ExtractorSpec default_identity_spec(int dim, int pc_dim) {
  return ExtractorSpec{ExtractorKind::Identity, dim, dim - pc_dim, 0};
}

Matrix extractor_matrix(const ExtractorSpec& spec) {
  check_spec(spec);
  Matrix m = Matrix::Zero(spec.out_dim, spec.in_dim);
  const int offset =
      spec.kind == ExtractorKind::PseudoCondition ? 0 : spec.in_dim - spec.out_dim;
  for (int i = 0; i < spec.out_dim; ++i) m(i, offset + i) = 1.0;
  if (spec.seed != 0) m = orthogonal_mix(spec.out_dim, spec.seed) * m;
  return m;
}

Vector pseudo_condition(const Vector& x, const ExtractorSpec& spec,
                        bool* zero_flag) {
  if (spec.kind != ExtractorKind::PseudoCondition)
    throw ConfigError("pseudo_condition: wrong extractor kind");
  Vector y = extractor_matrix(spec) * x;
  const double norm = y.norm();
  if (norm > 0.0) {
    y /= norm;
    if (zero_flag) *zero_flag = false;
  } else if (zero_flag) {
    *zero_flag = true;
  }
  return y;
}

Vector identity_embedding(const Vector& x, const ExtractorSpec& spec) {
  if (spec.kind != ExtractorKind::Identity)
    throw ConfigError("identity_embedding: wrong extractor kind");
  return extractor_matrix(spec) * x;
}

Matrix pseudo_condition_rows(const Matrix& m, const ExtractorSpec& spec) {
  Matrix out(m.rows(), spec.out_dim);
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    out.row(i) = pseudo_condition(m.row(i).transpose(), spec).transpose();
  return out;
}

}  // namespace psoforge
