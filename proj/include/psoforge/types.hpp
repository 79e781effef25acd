#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <string>
#include <vector>

namespace psoforge {

template <typename T>
using DenseMatrix = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic>;
template <typename T>
using DenseVector = Eigen::Matrix<T, Eigen::Dynamic, 1>;

using Matrix = DenseMatrix<double>;
using Vector = DenseVector<double>;
using MatrixI = DenseMatrix<int>;
using VectorI = DenseVector<int>;

enum class Split { Train, Val, Test };
enum class Origin { Real, Synthetic };

const char* to_string(Split s);
const char* to_string(Origin o);
Split split_from_string(const std::string& s);
Origin origin_from_string(const std::string& s);

/// One sample: feature vector, binary label vector, and (for real data)
/// the identity of the individual it was drawn from. Synthetic records
/// carry identity == -1; their source identity lives only in the audit
/// sidecar, never in the released dataset.
struct Record {
  std::int64_t record_id = 0;
  int identity = -1;
  Split split = Split::Train;
  VectorI labels;
  Vector x;
};

struct Dataset {
  std::vector<Record> records;
  Origin origin = Origin::Real;
  int dim = 0;
  int n_classes = 0;

  std::size_t size() const { return records.size(); }
  bool empty() const { return records.empty(); }
};

/// Columns are records, in dataset order.
Matrix feature_matrix(const Dataset& ds);
/// n_classes x n matrix of 0/1 values.
Matrix label_matrix(const Dataset& ds);
Dataset subset_split(const Dataset& ds, Split s);
std::vector<int> distinct_identities(const Dataset& ds);
/// Per-class positive counts.
VectorI label_histogram(const Dataset& ds);

}  // namespace psoforge
