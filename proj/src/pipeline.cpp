#include "psoforge/pipeline.hpp"

#include "psoforge/errors.hpp"
#include "psoforge/rng.hpp"

#include <nlohmann/json.hpp>

#include <cmath>
#include <limits>
#include <string>

namespace psoforge {

namespace {

Matrix classifier_condition_targets(const World& world, const Classifier& clf) {
  Matrix targets(world.n_identities(), clf.n_classes());
  for (int k = 0; k < world.n_identities(); ++k) {
    Vector logits = predict_logits(clf, world.means.row(k).transpose());
    const double norm = logits.norm();
    if (norm > 0.0) logits /= norm;
    targets.row(k) = logits.transpose();
  }
  return targets;
}

MixtureDenoiser make_denoiser(const World& world, const Classifier& clf,
                              const ExtractorSpec& pc_spec,
                              ConditionSource source) {
  if (source == ConditionSource::ClassifierLogits)
    return MixtureDenoiser(world, classifier_condition_targets(world, clf));
  return MixtureDenoiser(world, pc_spec);
}

}  // namespace

PipelineContext::PipelineContext(const World& world_in,
                                 const Dataset& real_train_in,
                                 const Classifier& clf_real_in,
                                 const ReidFilter& filter_in,
                                 const ExtractorSpec& pc_spec_in,
                                 const PipelineConfig& cfg_in)
    : world(world_in),
      real_train(real_train_in),
      clf_real(clf_real_in),
      filter(filter_in),
      pc_spec(pc_spec_in),
      cfg(cfg_in),
      denoiser(make_denoiser(world_in, clf_real_in, pc_spec_in,
                             cfg_in.condition_source)),
      sigmas(sigma_schedule(cfg_in.schedule)),
      identity_projection(extractor_matrix(filter_in.extractor)) {
  if (!filter.calibrated())
    throw ConfigError("pipeline: filter must be calibrated");
  if (cfg.batch < 1) throw ConfigError("pipeline: batch must be >= 1");
  if (cfg.max_rounds < 1) throw ConfigError("pipeline: max_rounds must be >= 1");
  if (cfg.guidance < cfg.guidance_floor)
    throw ConfigError("pipeline: guidance below guidance_floor");

  std::map<int, std::vector<std::size_t>> members;
  for (std::size_t i = 0; i < real_train.size(); ++i)
    members[real_train.records[i].identity].push_back(i);
  for (const auto& [id, idx] : members) {
    Matrix emb(identity_projection.rows(), idx.size());
    Vector norms(idx.size());
    for (std::size_t j = 0; j < idx.size(); ++j) {
      emb.col(j) = identity_projection * real_train.records[idx[j]].x;
      norms[j] = emb.col(j).norm();
    }
    train_embeddings[id] = std::move(emb);
    train_emb_norms[id] = std::move(norms);
  }
}

Vector PipelineContext::condition_vector(const Vector& x) const {
  if (cfg.condition_source == ConditionSource::ClassifierLogits) {
    Vector logits = predict_logits(clf_real, x);
    const double norm = logits.norm();
    if (norm > 0.0) logits /= norm;
    return logits;
  }
  return pseudo_condition(x, pc_spec);
}

CounterpartOutcome pso_secure_counterpart(const PipelineContext& ctx,
                                          const Record& x) {
  const Vector c_s = ctx.condition_vector(x.x);
  const Vector log_compat = ctx.denoiser.log_compat(c_s, ctx.cfg.kernel_width);
  const Vector p_real = predict_proba(ctx.clf_real, x.x);
  const double tau = *ctx.filter.tau;
  const auto members_it = ctx.train_embeddings.find(x.identity);
  if (members_it == ctx.train_embeddings.end())
    throw ConfigError("pso_secure_counterpart: record identity not in training set");
  const Matrix& same_identity = members_it->second;
  const Vector& same_identity_norms = ctx.train_emb_norms.at(x.identity);

  const std::uint64_t record_stream = derive_seed(
      ctx.cfg.seed, "pipeline.record", static_cast<std::uint64_t>(x.record_id));

  CounterpartOutcome out;
  out.provenance.source_record_id = x.record_id;

  int filtered_total = 0;
  for (int round = 0; round < ctx.cfg.max_rounds; ++round) {
    const double w = ctx.cfg.guidance - round * ctx.cfg.decrement;
    if (w < ctx.cfg.guidance_floor - 1e-12) break;

    const std::uint64_t round_seed =
        derive_seed(record_stream, "round", static_cast<std::uint64_t>(round));
    const std::vector<Candidate> batch =
        sample_batch(ctx.denoiser, w == 0.0 ? nullptr : &log_compat, w,
                     ctx.cfg.batch, ctx.sigmas, round_seed, x.record_id);

    // Privacy screen: a candidate survives only if the filter clears it
    // against every real training record of the source identity. The score
    // arithmetic matches reid_score exactly so the release invariant can be
    // re-checked downstream without tolerance.
    int best = -1;
    double best_bce = std::numeric_limits<double>::infinity();
    for (int j = 0; j < ctx.cfg.batch; ++j) {
      const Vector emb = ctx.identity_projection * batch[j].x_prime;
      const double norm = emb.norm();
      bool violates = false;
      for (Eigen::Index m = 0; m < same_identity.cols(); ++m) {
        const double na = same_identity_norms[m];
        const double score =
            (na == 0.0 || norm == 0.0)
                ? 0.0
                : same_identity.col(m).dot(emb) / (na * norm);
        if (score > tau) {
          violates = true;
          break;
        }
      }
      if (violates) {
        ++filtered_total;
        continue;
      }
      const double score = bce(p_real, predict_proba(ctx.clf_real, batch[j].x_prime));
      if (score < best_bce) {  // strict: ties keep the lowest candidate index
        best_bce = score;
        best = j;
      }
    }

    if (best >= 0) {
      out.released = true;
      out.synthetic.record_id = -1;  // assigned by generate_dataset
      out.synthetic.identity = -1;
      out.synthetic.split = x.split;
      out.synthetic.labels = x.labels;
      out.synthetic.x = batch[best].x_prime;
      out.provenance.guidance_used = w;
      out.provenance.rounds = round + 1;
      out.provenance.candidates_filtered = filtered_total;
      out.provenance.final_bce = best_bce;
      return out;
    }
  }

  out.released = false;
  out.provenance.rounds = ctx.cfg.max_rounds;
  out.provenance.candidates_filtered = filtered_total;
  return out;
}

GenerationResult generate_dataset(const World& world, const Dataset& real_train,
                                  const Classifier& clf_real,
                                  const ReidFilter& filter,
                                  const ExtractorSpec& pc_spec,
                                  const PipelineConfig& cfg) {
  if (real_train.empty()) throw ConfigError("generate_dataset: empty train set");
  const PipelineContext ctx(world, real_train, clf_real, filter, pc_spec, cfg);

  GenerationResult result;
  result.released.origin = Origin::Synthetic;
  result.released.dim = real_train.dim;
  result.released.n_classes = real_train.n_classes;

  for (const Record& x : real_train.records) {
    CounterpartOutcome outcome = pso_secure_counterpart(ctx, x);
    if (!outcome.released) {
      result.dropped_source_ids.push_back(x.record_id);
      result.dropped_rounds.push_back(outcome.provenance.rounds);
      continue;
    }
    outcome.synthetic.record_id =
        static_cast<std::int64_t>(result.released.records.size());
    outcome.provenance.record_id = outcome.synthetic.record_id;
    result.released.records.push_back(std::move(outcome.synthetic));
    result.provenance.push_back(outcome.provenance);
  }
  return result;
}

Dataset generate_unconditional_baseline(const World& world,
                                        const Dataset& real_train,
                                        const PipelineConfig& cfg) {
  if (real_train.empty())
    throw ConfigError("generate_unconditional_baseline: empty train set");
  const MixtureDenoiser denoiser(world, Matrix());
  const std::vector<double> sigmas = sigma_schedule(cfg.schedule);

  Dataset out;
  out.origin = Origin::Synthetic;
  out.dim = real_train.dim;
  out.n_classes = real_train.n_classes;
  for (const Record& x : real_train.records) {
    const std::uint64_t seed =
        derive_seed(cfg.seed, "baseline.record",
                    static_cast<std::uint64_t>(x.record_id));
    const std::vector<Candidate> batch =
        sample_batch(denoiser, nullptr, 0.0, 1, sigmas, seed, x.record_id);
    Record r;
    r.record_id = static_cast<std::int64_t>(out.records.size());
    r.identity = -1;
    r.split = x.split;
    r.labels = x.labels;
    r.x = batch[0].x_prime;
    out.records.push_back(std::move(r));
  }
  return out;
}

CrossSiteReport cross_site_share(const std::vector<SiteConfig>& sites,
                                 const Hyper& hyper, const PipelineConfig& cfg,
                                 double calibration_target_auc,
                                 std::uint64_t seed) {
  if (sites.size() < 1) throw ConfigError("cross_site: need at least one site");
  const int n_classes = sites.front().world_spec.n_classes;
  const int dim = sites.front().world_spec.dim;
  for (const SiteConfig& s : sites)
    if (s.world_spec.n_classes != n_classes || s.world_spec.dim != dim)
      throw ConfigError("cross_site: sites must share n_classes and dim");

  const int s_count = static_cast<int>(sites.size());
  CrossSiteReport report;
  report.auroc_real = Matrix::Zero(s_count, s_count);
  report.auroc_synth = Matrix::Zero(s_count, s_count);
  report.auroc_combined = Vector::Zero(s_count);

  struct SiteRun {
    Dataset train, val, test;
    Classifier clf_real, clf_synth;
    Dataset synth;
  };
  std::vector<SiteRun> runs(s_count);
  Dataset combined_synth, combined_val;

  for (int i = 0; i < s_count; ++i) {
    const SiteConfig& site = sites[i];
    report.sites.push_back(site.name);
    const World world = build_world(site.world_spec);
    const std::uint64_t site_seed = derive_seed(seed, "site", i);

    Dataset all = sample_dataset(world, site.n_records,
                                 derive_seed(site_seed, "sample"));
    all = split_dataset(all, 0.7, 0.1, 0.2, derive_seed(site_seed, "split"));
    SiteRun& run = runs[i];
    run.train = subset_split(all, Split::Train);
    run.val = subset_split(all, Split::Val);
    run.test = subset_split(all, Split::Test);

    run.clf_real = train_multilabel(run.train, run.val, hyper);

    const int pc_dim = site.world_spec.resolved_pc_dim();
    const ExtractorSpec pc_spec = default_pseudo_condition_spec(dim, pc_dim);
    const ExtractorSpec id_spec = default_identity_spec(dim, pc_dim);
    const auto pairs = make_identity_pairs(run.train, 2000,
                                           derive_seed(site_seed, "pairs"));
    ReidFilter filter = calibrate_threshold(pairs, id_spec);
    filter.meta.target_auc = calibration_target_auc;

    PipelineConfig site_cfg = cfg;
    site_cfg.seed = derive_seed(site_seed, "pipeline");
    const GenerationResult gen =
        generate_dataset(world, run.train, run.clf_real, filter, pc_spec, site_cfg);
    report.drops.push_back(gen.drops());
    run.synth = gen.released;

    run.clf_synth = train_multilabel(run.synth, run.val, hyper);

    if (i == 0) {
      combined_synth = run.synth;
      combined_val = run.val;
    } else {
      for (const Record& r : run.synth.records) {
        Record copy = r;
        copy.record_id = static_cast<std::int64_t>(combined_synth.records.size());
        combined_synth.records.push_back(std::move(copy));
      }
      for (const Record& r : run.val.records) combined_val.records.push_back(r);
    }
  }

  const Classifier clf_combined =
      train_multilabel(combined_synth, combined_val, hyper);

  for (int i = 0; i < s_count; ++i) {
    for (int j = 0; j < s_count; ++j) {
      report.auroc_real(i, j) = macro_auroc(runs[i].clf_real, runs[j].test).macro;
      report.auroc_synth(i, j) = macro_auroc(runs[i].clf_synth, runs[j].test).macro;
    }
    report.auroc_combined[i] = macro_auroc(clf_combined, runs[i].test).macro;
  }
  return report;
}

std::string cross_site_to_json(const CrossSiteReport& report) {
  nlohmann::json j;
  j["sites"] = report.sites;
  const int s = static_cast<int>(report.sites.size());
  auto matrix_to_json = [&](const Matrix& m) {
    std::vector<std::vector<double>> rows;
    for (int i = 0; i < s; ++i) {
      std::vector<double> row;
      for (int k = 0; k < s; ++k) row.push_back(m(i, k));
      rows.push_back(row);
    }
    return rows;
  };
  j["auroc_real"] = matrix_to_json(report.auroc_real);
  j["auroc_synth"] = matrix_to_json(report.auroc_synth);
  std::vector<double> combined;
  for (int i = 0; i < s; ++i) combined.push_back(report.auroc_combined[i]);
  j["auroc_combined"] = combined;
  j["drops"] = report.drops;
  return j.dump(2);
}

}  // namespace psoforge
