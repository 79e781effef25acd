#pragma once

#include "psoforge/classifier.hpp"
#include "psoforge/generator.hpp"
#include "psoforge/privacy.hpp"
#include "psoforge/types.hpp"
#include "psoforge/world.hpp"

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace psoforge {

/// Where the condition vector comes from: the pseudo-condition extractor
/// (default) or the real-data classifier's normalized logits (the documented
/// negative-result configuration).
enum class ConditionSource { PseudoCondition, ClassifierLogits };

struct PipelineConfig {
  int batch = 32;
  double guidance = 1.2;
  double decrement = 0.1;
  double guidance_floor = 0.0;
  int max_rounds = 13;
  double kernel_width = 0.15;
  NoiseSchedule schedule{};
  ConditionSource condition_source = ConditionSource::PseudoCondition;
  std::uint64_t seed = 0;
};

struct ProvenanceEntry {
  std::int64_t record_id = -1;         // released id; -1 for dropped records
  std::int64_t source_record_id = -1;
  double guidance_used = 0.0;
  int rounds = 0;
  int candidates_filtered = 0;
  double final_bce = 0.0;
};

struct GenerationResult {
  Dataset released;                        // origin = synthetic, no identities
  std::vector<ProvenanceEntry> provenance; // one entry per released record
  std::vector<std::int64_t> dropped_source_ids;
  std::vector<int> dropped_rounds;

  int drops() const { return static_cast<int>(dropped_source_ids.size()); }
};

/// Precomputed state shared by every per-record generation: the analytic
/// denoiser, the noise schedule, and the identity embeddings of the real
/// training records grouped by identity (the filter screens candidates
/// against every training record of the source identity).
class PipelineContext {
 public:
  PipelineContext(const World& world, const Dataset& real_train,
                  const Classifier& clf_real, const ReidFilter& filter,
                  const ExtractorSpec& pc_spec, const PipelineConfig& cfg);

  const World& world;
  const Dataset& real_train;
  const Classifier& clf_real;
  const ReidFilter& filter;
  ExtractorSpec pc_spec;
  PipelineConfig cfg;

  MixtureDenoiser denoiser;
  std::vector<double> sigmas;
  Matrix identity_projection;              // q x dim
  std::map<int, Matrix> train_embeddings;  // identity -> q x members, unnormalized
  std::map<int, Vector> train_emb_norms;

  Vector condition_vector(const Vector& x) const;
};

struct CounterpartOutcome {
  bool released = false;
  Record synthetic;       // identity == -1; labels copied from the source
  ProvenanceEntry provenance;
};

/// One PSO-secure counterpart for a real record: generate a candidate batch
/// conditioned on the record's pseudo-condition, drop every candidate the
/// re-identification filter links to the source identity, and return the
/// survivor minimizing the BCE between the real classifier's predictions on
/// the original and the candidate. When a round leaves no survivors the
/// guidance strength is reduced by the configured decrement and the batch is
/// re-sampled with fresh noise; exhausting the floor or the round budget
/// drops the record.
CounterpartOutcome pso_secure_counterpart(const PipelineContext& ctx,
                                          const Record& x);

/// One counterpart per real training record, in dataset order. Unsatisfiable
/// records are dropped and reported, never released.
GenerationResult generate_dataset(const World& world, const Dataset& real_train,
                                  const Classifier& clf_real,
                                  const ReidFilter& filter,
                                  const ExtractorSpec& pc_spec,
                                  const PipelineConfig& cfg);

/// Ablation baseline: one unconditional sample (strength 0) per real record,
/// labels copied, no filtering and no selection.
Dataset generate_unconditional_baseline(const World& world,
                                        const Dataset& real_train,
                                        const PipelineConfig& cfg);

struct SiteConfig {
  std::string name;
  WorldSpec world_spec;
  int n_records = 0;
};

struct CrossSiteReport {
  std::vector<std::string> sites;
  Matrix auroc_real;    // train site x test site
  Matrix auroc_synth;   // train site x test site
  Vector auroc_combined;  // combined synthetic model per test site
  std::vector<int> drops;
};

/// The data-sharing scenario: run the pipeline per site, train per-site
/// synthetic classifiers and one classifier on the pooled synthetic data,
/// and evaluate everything on every site's real test split.
CrossSiteReport cross_site_share(const std::vector<SiteConfig>& sites,
                                 const Hyper& hyper, const PipelineConfig& cfg,
                                 double calibration_target_auc,
                                 std::uint64_t seed);

std::string cross_site_to_json(const CrossSiteReport& report);

}  // namespace psoforge
