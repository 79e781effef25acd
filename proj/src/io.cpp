#include "psoforge/io.hpp"

#include "psoforge/errors.hpp"

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <unordered_map>
#include <vector>

namespace psoforge {

namespace {

std::vector<std::string> split_line(const std::string& line, char sep) {
  std::vector<std::string> out;
  std::string token;
  std::istringstream in(line);
  while (std::getline(in, token, sep)) out.push_back(token);
  if (!line.empty() && line.back() == sep) out.push_back("");
  return out;
}

long parse_long(const std::string& token, const std::string& context) {
  char* end = nullptr;
  const long v = std::strtol(token.c_str(), &end, 10);
  if (end == token.c_str() || *end != '\0')
    throw DataError(context + ": bad integer '" + token + "'");
  return v;
}

std::map<std::string, std::string> parse_header_fields(
    const std::string& line, const std::string& magic, const std::string& path) {
  std::istringstream in(line);
  std::string tag;
  in >> tag;
  if (tag != magic)
    throw DataError(path + ":1: expected " + magic + " header, got '" + tag +
                    "' (schema version mismatch)");
  std::map<std::string, std::string> fields;
  std::string kv;
  while (in >> kv) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos)
      throw DataError(path + ":1: malformed header field '" + kv + "'");
    fields[kv.substr(0, eq)] = kv.substr(eq + 1);
  }
  return fields;
}

std::string header_field(const std::map<std::string, std::string>& fields,
                         const std::string& key, const std::string& path) {
  const auto it = fields.find(key);
  if (it == fields.end())
    throw DataError(path + ":1: missing header field '" + key + "'");
  return it->second;
}

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot open '" + path + "' for writing");
  return out;
}

std::ifstream open_in(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open '" + path + "' for reading");
  return in;
}

}  // namespace

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.16e", v);
  return buf;
}

double parse_double(const std::string& token, const std::string& context) {
  char* end = nullptr;
  const double v = std::strtod(token.c_str(), &end);
  if (end == token.c_str() || *end != '\0')
    throw DataError(context + ": bad float '" + token + "'");
  return v;
}

void write_dsv(const Dataset& ds, const std::string& path) {
  std::ofstream out = open_out(path);
  out << "DSV1 dim=" << ds.dim << " n=" << ds.records.size()
      << " classes=" << ds.n_classes << " origin=" << to_string(ds.origin)
      << '\n';
  for (const Record& r : ds.records) {
    out << r.record_id << ',';
    if (ds.origin == Origin::Real) out << r.identity << ',';
    out << to_string(r.split) << ',';
    for (int b = 0; b < ds.n_classes; ++b) out << r.labels[b];
    for (int i = 0; i < ds.dim; ++i) out << ',' << format_double(r.x[i]);
    out << '\n';
  }
}

Dataset read_dsv(const std::string& path) {
  std::ifstream in = open_in(path);
  std::string line;
  if (!std::getline(in, line)) throw DataError(path + ": empty file");
  const auto fields = parse_header_fields(line, "DSV1", path);
  Dataset ds;
  ds.dim = static_cast<int>(parse_long(header_field(fields, "dim", path), path));
  ds.n_classes =
      static_cast<int>(parse_long(header_field(fields, "classes", path), path));
  ds.origin = origin_from_string(header_field(fields, "origin", path));
  const long n = parse_long(header_field(fields, "n", path), path);

  const std::size_t expected_tokens =
      (ds.origin == Origin::Real ? 4 : 3) + static_cast<std::size_t>(ds.dim);
  long line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto tokens = split_line(line, ',');
    const std::string where = path + ":" + std::to_string(line_no);
    if (tokens.size() != expected_tokens)
      throw DataError(where + ": expected " + std::to_string(expected_tokens) +
                      " fields, got " + std::to_string(tokens.size()));
    Record r;
    std::size_t t = 0;
    r.record_id = parse_long(tokens[t++], where);
    if (ds.origin == Origin::Real)
      r.identity = static_cast<int>(parse_long(tokens[t++], where));
    r.split = split_from_string(tokens[t++]);
    const std::string& bits = tokens[t++];
    if (static_cast<int>(bits.size()) != ds.n_classes)
      throw DataError(where + ": expected " + std::to_string(ds.n_classes) +
                      " label bits, got " + std::to_string(bits.size()));
    r.labels.resize(ds.n_classes);
    for (int b = 0; b < ds.n_classes; ++b) {
      if (bits[b] != '0' && bits[b] != '1')
        throw DataError(where + ": label bits must be 0/1");
      r.labels[b] = bits[b] - '0';
    }
    r.x.resize(ds.dim);
    for (int i = 0; i < ds.dim; ++i) r.x[i] = parse_double(tokens[t++], where);
    ds.records.push_back(std::move(r));
  }
  if (static_cast<long>(ds.records.size()) != n)
    throw DataError(path + ": header n=" + std::to_string(n) + " but " +
                    std::to_string(ds.records.size()) + " records found");
  return ds;
}

void write_emb(const std::vector<std::int64_t>& record_ids,
               const Matrix& embeddings, const std::string& path) {
  if (static_cast<std::size_t>(embeddings.cols()) != record_ids.size())
    throw DataError("write_emb: record_ids and embeddings misaligned");
  std::ofstream out = open_out(path);
  out << "EMB1 dim=" << embeddings.rows() << " n=" << embeddings.cols() << '\n';
  for (Eigen::Index i = 0; i < embeddings.cols(); ++i) {
    out << record_ids[i];
    for (Eigen::Index j = 0; j < embeddings.rows(); ++j)
      out << ',' << format_double(embeddings(j, i));
    out << '\n';
  }
}

std::pair<std::vector<std::int64_t>, Matrix> read_emb(const std::string& path) {
  std::ifstream in = open_in(path);
  std::string line;
  if (!std::getline(in, line)) throw DataError(path + ": empty file");
  const auto fields = parse_header_fields(line, "EMB1", path);
  const long dim = parse_long(header_field(fields, "dim", path), path);
  const long n = parse_long(header_field(fields, "n", path), path);
  std::vector<std::int64_t> ids;
  Matrix emb(dim, n);
  long line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const std::string where = path + ":" + std::to_string(line_no);
    const auto tokens = split_line(line, ',');
    if (static_cast<long>(tokens.size()) != dim + 1)
      throw DataError(where + ": wrong field count");
    if (static_cast<long>(ids.size()) >= n)
      throw DataError(where + ": more rows than header n");
    for (long j = 0; j < dim; ++j)
      emb(j, ids.size()) = parse_double(tokens[j + 1], where);
    ids.push_back(parse_long(tokens[0], where));
  }
  if (static_cast<long>(ids.size()) != n)
    throw DataError(path + ": header n mismatch");
  return {std::move(ids), std::move(emb)};
}

void write_clf(const Classifier& clf, const std::string& path) {
  std::ofstream out = open_out(path);
  out << "CLF1 classes=" << clf.n_classes() << " dim=" << clf.dim()
      << " trained_on=" << to_string(clf.trained_on)
      << " epochs=" << clf.train_meta.epochs
      << " lr=" << format_double(clf.train_meta.learning_rate)
      << " seed=" << clf.train_meta.seed << '\n';
  for (int j = 0; j < clf.n_classes(); ++j) {
    for (int i = 0; i < clf.dim(); ++i)
      out << (i ? "," : "") << format_double(clf.weights(j, i));
    out << '\n';
  }
  for (int j = 0; j < clf.n_classes(); ++j)
    out << (j ? "," : "") << format_double(clf.bias[j]);
  out << '\n';
}

Classifier read_clf(const std::string& path) {
  std::ifstream in = open_in(path);
  std::string line;
  if (!std::getline(in, line)) throw DataError(path + ": empty file");
  const auto fields = parse_header_fields(line, "CLF1", path);
  const long c = parse_long(header_field(fields, "classes", path), path);
  const long d = parse_long(header_field(fields, "dim", path), path);
  Classifier clf;
  clf.trained_on = origin_from_string(header_field(fields, "trained_on", path));
  clf.train_meta.epochs =
      static_cast<int>(parse_long(header_field(fields, "epochs", path), path));
  clf.train_meta.learning_rate =
      parse_double(header_field(fields, "lr", path), path);
  clf.train_meta.seed = static_cast<std::uint64_t>(
      parse_long(header_field(fields, "seed", path), path));
  clf.weights.resize(c, d);
  clf.bias.resize(c);
  long line_no = 1;
  for (long j = 0; j < c; ++j) {
    if (!std::getline(in, line)) throw DataError(path + ": truncated weights");
    ++line_no;
    const std::string where = path + ":" + std::to_string(line_no);
    const auto tokens = split_line(line, ',');
    if (static_cast<long>(tokens.size()) != d)
      throw DataError(where + ": expected " + std::to_string(d) + " weights");
    for (long i = 0; i < d; ++i)
      clf.weights(j, i) = parse_double(tokens[i], where);
  }
  if (!std::getline(in, line)) throw DataError(path + ": missing bias row");
  ++line_no;
  const auto tokens = split_line(line, ',');
  if (static_cast<long>(tokens.size()) != c)
    throw DataError(path + ":" + std::to_string(line_no) + ": expected " +
                    std::to_string(c) + " biases");
  for (long j = 0; j < c; ++j)
    clf.bias[j] = parse_double(tokens[j], path + ":" + std::to_string(line_no));
  return clf;
}

void write_rid(const ReidFilter& filter, const std::string& path) {
  if (!filter.calibrated())
    throw ConfigError("write_rid: filter is not calibrated");
  std::ofstream out = open_out(path);
  out << "RID1 in_dim=" << filter.extractor.in_dim
      << " emb_dim=" << filter.extractor.out_dim
      << " extractor_seed=" << filter.extractor.seed
      << " tau=" << format_double(*filter.tau)
      << " auc=" << format_double(filter.meta.achieved_auc)
      << " fnr=" << format_double(filter.meta.fnr_at_tau)
      << " fpr=" << format_double(filter.meta.fpr_at_tau)
      << " target=" << format_double(filter.meta.target_auc) << '\n';
}

ReidFilter read_rid(const std::string& path) {
  std::ifstream in = open_in(path);
  std::string line;
  if (!std::getline(in, line)) throw DataError(path + ": empty file");
  const auto fields = parse_header_fields(line, "RID1", path);
  ReidFilter filter;
  filter.extractor.kind = ExtractorKind::Identity;
  filter.extractor.in_dim =
      static_cast<int>(parse_long(header_field(fields, "in_dim", path), path));
  filter.extractor.out_dim =
      static_cast<int>(parse_long(header_field(fields, "emb_dim", path), path));
  filter.extractor.seed = static_cast<std::uint64_t>(
      parse_long(header_field(fields, "extractor_seed", path), path));
  filter.tau = parse_double(header_field(fields, "tau", path), path);
  filter.meta.achieved_auc = parse_double(header_field(fields, "auc", path), path);
  filter.meta.fnr_at_tau = parse_double(header_field(fields, "fnr", path), path);
  filter.meta.fpr_at_tau = parse_double(header_field(fields, "fpr", path), path);
  filter.meta.target_auc = parse_double(header_field(fields, "target", path), path);
  return filter;
}

AuditSidecar make_sidecar(const GenerationResult& gen) {
  AuditSidecar sidecar;
  sidecar.entries = gen.provenance;
  sidecar.dropped_source_ids = gen.dropped_source_ids;
  sidecar.dropped_rounds = gen.dropped_rounds;
  return sidecar;
}

void write_aud(const AuditSidecar& sidecar, const std::string& path) {
  std::ofstream out = open_out(path);
  out << "AUD1 n=" << sidecar.entries.size()
      << " dropped=" << sidecar.dropped_source_ids.size() << '\n';
  for (const ProvenanceEntry& e : sidecar.entries) {
    out << e.record_id << ',' << e.source_record_id << ','
        << format_double(e.guidance_used) << ',' << e.candidates_filtered << ','
        << format_double(e.final_bce) << '\n';
  }
  for (std::size_t i = 0; i < sidecar.dropped_source_ids.size(); ++i)
    out << "drop," << sidecar.dropped_source_ids[i] << ','
        << sidecar.dropped_rounds[i] << '\n';
}

AuditSidecar read_aud(const std::string& path) {
  std::ifstream in = open_in(path);
  std::string line;
  if (!std::getline(in, line)) throw DataError(path + ": empty file");
  const auto fields = parse_header_fields(line, "AUD1", path);
  const long n = parse_long(header_field(fields, "n", path), path);
  const long dropped = parse_long(header_field(fields, "dropped", path), path);
  AuditSidecar sidecar;
  long line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const std::string where = path + ":" + std::to_string(line_no);
    const auto tokens = split_line(line, ',');
    if (!tokens.empty() && tokens[0] == "drop") {
      if (tokens.size() != 3) throw DataError(where + ": malformed drop row");
      sidecar.dropped_source_ids.push_back(parse_long(tokens[1], where));
      sidecar.dropped_rounds.push_back(
          static_cast<int>(parse_long(tokens[2], where)));
      continue;
    }
    if (tokens.size() != 5) throw DataError(where + ": expected 5 fields");
    ProvenanceEntry e;
    e.record_id = parse_long(tokens[0], where);
    e.source_record_id = parse_long(tokens[1], where);
    e.guidance_used = parse_double(tokens[2], where);
    e.candidates_filtered = static_cast<int>(parse_long(tokens[3], where));
    e.final_bce = parse_double(tokens[4], where);
    sidecar.entries.push_back(e);
  }
  if (static_cast<long>(sidecar.entries.size()) != n ||
      static_cast<long>(sidecar.dropped_source_ids.size()) != dropped)
    throw DataError(path + ": header counts do not match rows");
  return sidecar;
}

std::vector<int> resolve_source_identities(const AuditSidecar& sidecar,
                                           const Dataset& real) {
  std::unordered_map<std::int64_t, int> identity_of;
  for (const Record& r : real.records) identity_of[r.record_id] = r.identity;
  std::vector<int> out;
  out.reserve(sidecar.entries.size());
  for (const ProvenanceEntry& e : sidecar.entries) {
    const auto it = identity_of.find(e.source_record_id);
    if (it == identity_of.end())
      throw DataError("sidecar source record " +
                      std::to_string(e.source_record_id) +
                      " not present in the real dataset");
    out.push_back(it->second);
  }
  return out;
}

std::map<std::string, std::string> read_kv_config(const std::string& path) {
  std::ifstream in = open_in(path);
  std::map<std::string, std::string> kv;
  std::string line;
  long line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      if (line.find_first_not_of(" \t\r") != std::string::npos)
        throw DataError(path + ":" + std::to_string(line_no) +
                        ": expected 'key = value'");
      continue;
    }
    auto trim = [](std::string s) {
      const auto a = s.find_first_not_of(" \t\r");
      const auto b = s.find_last_not_of(" \t\r");
      return a == std::string::npos ? std::string() : s.substr(a, b - a + 1);
    };
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty())
      throw DataError(path + ":" + std::to_string(line_no) + ": empty key");
    kv[key] = value;
  }
  return kv;
}

void write_kv_config(const std::map<std::string, std::string>& kv,
                     const std::string& path) {
  std::ofstream out = open_out(path);
  for (const auto& [k, v] : kv) out << k << " = " << v << '\n';
}

WorldSpec world_spec_from_kv(const std::map<std::string, std::string>& kv) {
  WorldSpec spec;
  auto get = [&](const std::string& key) -> const std::string* {
    const auto it = kv.find(key);
    return it == kv.end() ? nullptr : &it->second;
  };
  auto get_int = [&](const std::string& key, int fallback) {
    const std::string* v = get(key);
    return v ? static_cast<int>(parse_long(*v, "world config " + key)) : fallback;
  };
  auto get_double = [&](const std::string& key, double fallback) {
    const std::string* v = get(key);
    return v ? parse_double(*v, "world config " + key) : fallback;
  };
  spec.n_identities = get_int("n_identities", spec.n_identities);
  spec.dim = get_int("dim", spec.dim);
  spec.cluster_std = get_double("cluster_std", spec.cluster_std);
  spec.n_classes = get_int("n_classes", spec.n_classes);
  spec.identity_separation =
      get_double("identity_separation", spec.identity_separation);
  spec.identity_radius = get_double("identity_radius", spec.identity_radius);
  spec.combo_group = get_int("combo_group", spec.combo_group);
  spec.predicate_delta = get_double("predicate_delta", spec.predicate_delta);
  spec.covariate_shift = get_double("covariate_shift", spec.covariate_shift);
  spec.pc_dim = get_int("pc_dim", spec.pc_dim);
  if (const std::string* v = get("seed"))
    spec.seed = static_cast<std::uint64_t>(
        std::strtoull(v->c_str(), nullptr, 10));
  if (const std::string* v = get("predicate_geometry")) {
    if (*v == "multi_label") spec.geometry = PredicateGeometry::MultiLabel;
    else if (*v == "single_label") spec.geometry = PredicateGeometry::SingleLabel;
    else throw DataError("world config predicate_geometry: unknown value '" + *v + "'");
  }
  return spec;
}

std::map<std::string, std::string> world_spec_to_kv(const WorldSpec& spec) {
  std::map<std::string, std::string> kv;
  kv["n_identities"] = std::to_string(spec.n_identities);
  kv["dim"] = std::to_string(spec.dim);
  kv["cluster_std"] = format_double(spec.cluster_std);
  kv["n_classes"] = std::to_string(spec.n_classes);
  kv["identity_separation"] = format_double(spec.identity_separation);
  kv["identity_radius"] = format_double(spec.identity_radius);
  kv["predicate_geometry"] = spec.geometry == PredicateGeometry::MultiLabel
                                 ? "multi_label"
                                 : "single_label";
  kv["combo_group"] = std::to_string(spec.combo_group);
  kv["predicate_delta"] = format_double(spec.predicate_delta);
  kv["covariate_shift"] = format_double(spec.covariate_shift);
  kv["pc_dim"] = std::to_string(spec.pc_dim);
  kv["seed"] = std::to_string(spec.seed);
  return kv;
}

void write_run_lock(const std::map<std::string, std::string>& kv,
                    const std::string& out_dir) {
  std::filesystem::path dir(out_dir);
  if (!dir.empty()) std::filesystem::create_directories(dir);
  write_kv_config(kv, (dir / "run.lock").string());
}

}  // namespace psoforge
