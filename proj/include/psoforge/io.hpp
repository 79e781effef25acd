#pragma once

#include "psoforge/classifier.hpp"
#include "psoforge/pipeline.hpp"
#include "psoforge/privacy.hpp"
#include "psoforge/types.hpp"
#include "psoforge/world.hpp"

#include <map>
#include <string>
#include <vector>

namespace psoforge {

/// Scientific notation with 17 significant digits: exact double round-trip.
std::string format_double(double v);
double parse_double(const std::string& token, const std::string& context);

// --- DSV1: datasets ---------------------------------------------------------
// Header: DSV1 dim=<d> n=<n> classes=<k> origin=<real|synthetic>
// Real row:      record_id,identity,split,<k bits>,<d floats>
// Synthetic row: record_id,split,<k bits>,<d floats>   (no identity column)
void write_dsv(const Dataset& ds, const std::string& path);
Dataset read_dsv(const std::string& path);

// --- EMB1: cached embeddings -------------------------------------------------
// Header: EMB1 dim=<m> n=<n>; rows: record_id,<m floats>
void write_emb(const std::vector<std::int64_t>& record_ids, const Matrix& embeddings,
               const std::string& path);
std::pair<std::vector<std::int64_t>, Matrix> read_emb(const std::string& path);

// --- CLF1: classifiers -------------------------------------------------------
void write_clf(const Classifier& clf, const std::string& path);
Classifier read_clf(const std::string& path);

// --- RID1: calibrated re-identification filters ------------------------------
void write_rid(const ReidFilter& filter, const std::string& path);
ReidFilter read_rid(const std::string& path);

// --- AUD1: audit sidecar (never shipped with released data) ------------------
// Header: AUD1 n=<released> dropped=<count>
// Row:  record_id,source_record_id,guidance_used,n_candidates_filtered,final_bce
// Drop: drop,<source_record_id>,<rounds>
// Source identities are resolved by joining source_record_id against the
// real dataset.
struct AuditSidecar {
  std::vector<ProvenanceEntry> entries;
  std::vector<std::int64_t> dropped_source_ids;
  std::vector<int> dropped_rounds;
};
AuditSidecar make_sidecar(const GenerationResult& gen);
void write_aud(const AuditSidecar& sidecar, const std::string& path);
AuditSidecar read_aud(const std::string& path);

/// Ground-truth source identities for the released records, in order.
std::vector<int> resolve_source_identities(const AuditSidecar& sidecar,
                                           const Dataset& real);

// --- flat key = value config files -------------------------------------------
std::map<std::string, std::string> read_kv_config(const std::string& path);
void write_kv_config(const std::map<std::string, std::string>& kv,
                     const std::string& path);

WorldSpec world_spec_from_kv(const std::map<std::string, std::string>& kv);
std::map<std::string, std::string> world_spec_to_kv(const WorldSpec& spec);

/// Resolved-config echo written next to every command's outputs.
void write_run_lock(const std::map<std::string, std::string>& kv,
                    const std::string& out_dir);

}  // namespace psoforge
