#include "psoforge/types.hpp"

#include "psoforge/errors.hpp"

#include <algorithm>
#include <set>

namespace psoforge {

const char* to_string(Split s) {
  switch (s) {
    case Split::Train: return "train";
    case Split::Val: return "val";
    case Split::Test: return "test";
  }
  return "train";
}

const char* to_string(Origin o) {
  return o == Origin::Real ? "real" : "synthetic";
}

Split split_from_string(const std::string& s) {
  if (s == "train") return Split::Train;
  if (s == "val") return Split::Val;
  if (s == "test") return Split::Test;
  throw DataError("unknown split tag '" + s + "'");
}

Origin origin_from_string(const std::string& s) {
  if (s == "real") return Origin::Real;
  if (s == "synthetic") return Origin::Synthetic;
  throw DataError("unknown origin tag '" + s + "'");
}

Matrix feature_matrix(const Dataset& ds) {
  Matrix x(ds.dim, ds.records.size());
  for (std::size_t i = 0; i < ds.records.size(); ++i) x.col(i) = ds.records[i].x;
  return x;
}

Matrix label_matrix(const Dataset& ds) {
  Matrix y(ds.n_classes, ds.records.size());
  for (std::size_t i = 0; i < ds.records.size(); ++i)
    y.col(i) = ds.records[i].labels.cast<double>();
  return y;
}

Dataset subset_split(const Dataset& ds, Split s) {
  Dataset out;
  out.origin = ds.origin;
  out.dim = ds.dim;
  out.n_classes = ds.n_classes;
  for (const Record& r : ds.records)
    if (r.split == s) out.records.push_back(r);
  return out;
}

std::vector<int> distinct_identities(const Dataset& ds) {
  std::set<int> ids;
  for (const Record& r : ds.records) ids.insert(r.identity);
  return std::vector<int>(ids.begin(), ids.end());
}

VectorI label_histogram(const Dataset& ds) {
  VectorI h = VectorI::Zero(ds.n_classes);
  for (const Record& r : ds.records) h += r.labels;
  return h;
}

}  // namespace psoforge
