#pragma once

#include "psoforge/types.hpp"

#include <cstdint>

namespace psoforge {

enum class ExtractorKind { PseudoCondition, Identity };

/// Fixed linear feature extractors. The pseudo-condition extractor reads the
/// leading coordinate block and L2-normalizes, the identity extractor reads
/// the trailing block; with default specs the two views are complementary.
/// A nonzero seed composes the block projection with a seeded orthogonal
/// mixing of the output coordinates.
struct ExtractorSpec {
  ExtractorKind kind = ExtractorKind::PseudoCondition;
  int in_dim = 0;
  int out_dim = 0;
  std::uint64_t seed = 0;
};

ExtractorSpec default_pseudo_condition_spec(int dim, int pc_dim);
ExtractorSpec default_identity_spec(int dim, int pc_dim);

/// out_dim x in_dim projection realizing the spec.
Matrix extractor_matrix(const ExtractorSpec& spec);

/// c_s = normalize(M x). Takes a bare feature vector only: labels and
/// identity are not reachable from this interface. A zero input is returned
/// unnormalized and flagged.
Vector pseudo_condition(const Vector& x, const ExtractorSpec& spec,
                        bool* zero_flag = nullptr);

/// Identity-block projection, unnormalized; consumed by the privacy filter.
Vector identity_embedding(const Vector& x, const ExtractorSpec& spec);

/// Rows are pseudo_condition applied to the rows of m (e.g. world means).
Matrix pseudo_condition_rows(const Matrix& m, const ExtractorSpec& spec);

}  // namespace psoforge
