// Acceptance suite: one pass/fail line per criterion. Run with no arguments
// for the full suite or with a criterion number for a single entry.

#include <psoforge/classifier.hpp>
#include <psoforge/features.hpp>
#include <psoforge/generator.hpp>
#include <psoforge/io.hpp>
#include <psoforge/metrics.hpp>
#include <psoforge/pipeline.hpp>
#include <psoforge/presets.hpp>
#include <psoforge/privacy.hpp>
#include <psoforge/rng.hpp>
#include <psoforge/world.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

using namespace psoforge;

namespace {

struct Outcome {
  bool pass = true;
  std::string detail;

  void require(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      if (!detail.empty()) detail += "; ";
      detail += "FAILED: " + what;
    }
  }
  void note(const std::string& what) {
    if (!detail.empty()) detail += "; ";
    detail += what;
  }
};

Matrix embed_records(const Dataset& ds, const ExtractorSpec& pc_spec) {
  Matrix out(pc_spec.out_dim, ds.size());
  for (std::size_t i = 0; i < ds.size(); ++i)
    out.col(i) = pseudo_condition(ds.records[i].x, pc_spec);
  return out;
}

struct PipelineRun {
  World world;
  Dataset train, val, test;
  Classifier clf;
  ReidFilter filter;
  ExtractorSpec pc_spec;
  ExtractorSpec id_spec;
  GenerationResult gen;
};

PipelineRun run_pipeline(const WorldSpec& spec, int n_records, bool with_splits,
                         const PipelineConfig& cfg, const Hyper& hyper,
                         std::uint64_t seed) {
  PipelineRun run;
  run.world = build_world(spec);
  Dataset all = sample_dataset(run.world, n_records, derive_seed(seed, "sample"));
  if (with_splits) {
    all = split_dataset(all, 0.7, 0.1, 0.2, derive_seed(seed, "split"));
    run.train = subset_split(all, Split::Train);
    run.val = subset_split(all, Split::Val);
    run.test = subset_split(all, Split::Test);
  } else {
    run.train = all;
    run.val = all;
  }
  run.clf = train_multilabel(run.train, run.val, hyper);
  run.pc_spec = default_pseudo_condition_spec(spec.dim, spec.resolved_pc_dim());
  run.id_spec = default_identity_spec(spec.dim, spec.resolved_pc_dim());
  const auto pairs =
      make_identity_pairs(run.train, 2000, derive_seed(seed, "pairs"));
  run.filter = calibrate_threshold(pairs, run.id_spec);
  run.filter.meta.target_auc = 0.96;
  PipelineConfig run_cfg = cfg;
  run_cfg.seed = derive_seed(seed, "pipeline");
  run.gen = generate_dataset(run.world, run.train, run.clf, run.filter,
                             run.pc_spec, run_cfg);
  return run;
}

// --- criterion 1: Frechet oracle --------------------------------------------

void criterion_frechet(Outcome& out) {
  auto moments_1d = [](double mu, double sd) {
    GaussianMoments m;
    m.mu = Vector::Constant(1, mu);
    m.sigma = Matrix::Constant(1, 1, sd * sd);
    m.n = 2;
    return m;
  };
  Rng rng(1001);
  double worst = 0.0;
  for (int trial = 0; trial < 50; ++trial) {
    const double m1 = 4.0 * rng.normal();
    const double m2 = 4.0 * rng.normal();
    const double s1 = 0.1 + 2.5 * rng.uniform();
    const double s2 = 0.1 + 2.5 * rng.uniform();
    const double expected = (m1 - m2) * (m1 - m2) + (s1 - s2) * (s1 - s2);
    const double got = frechet_distance(moments_1d(m1, s1), moments_1d(m2, s2));
    worst = std::max(worst, std::abs(got - expected));
  }
  out.require(worst <= 1e-9, "1D closed form, worst error " + std::to_string(worst));

  Matrix samples(4, 60);
  for (int i = 0; i < 240; ++i) samples(i % 4, i / 4) = rng.normal();
  const GaussianMoments a = gaussian_moments(samples);
  out.require(frechet_distance(a, a) <= 1e-9, "identical moments");

  GaussianMoments shifted = a;
  Vector d(4);
  d << 1.0, -0.5, 2.0, 0.25;
  shifted.mu += d;
  out.require(std::abs(frechet_distance(a, shifted) - d.squaredNorm()) <= 1e-9,
              "mean-shift case");
  std::ostringstream msg;
  msg << "worst 1D error " << worst;
  out.note(msg.str());
}

// --- criterion 2: IRS oracle -------------------------------------------------

void criterion_irs(Outcome& out) {
  const int n = 1000;
  Matrix real(2, n), synth(2, n);
  for (int i = 0; i < n; ++i) {
    real.col(i) << 10.0 * i, 0.0;
    synth.col(i) << 10.0 * i + 0.1, 0.0;
  }
  const double closed =
      1.0 / (1.0 - std::pow(1.0 - 1.0 / double(n), double(n)));
  const double got = irs(real, synth);
  out.require(std::abs(got - closed) <= 1e-12, "perfect retrieval closed form");
  {
    std::ostringstream msg;
    msg << "perfect-retrieval IRS " << got;
    out.note(msg.str());
  }

  Rng rng(1002);
  const int m = 500;
  Matrix modes(2, m);
  for (int i = 0; i < m; ++i) modes.col(i) << 10.0 * i, 0.0;
  double acc = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    Matrix draws(2, m);
    for (int i = 0; i < m; ++i) {
      const int k = static_cast<int>(rng.next_u64() % m);
      draws.col(i) << 10.0 * k + 0.01 * rng.normal(), 0.0;
    }
    acc += irs(modes, draws);
  }
  const double mean = acc / 100.0;
  out.require(mean >= 0.97 && mean <= 1.03,
              "uniform-generator mean " + std::to_string(mean));
  std::ostringstream msg;
  msg << "uniform-generator mean IRS " << mean;
  out.note(msg.str());
}

// --- criterion 3: release invariant ------------------------------------------

void criterion_release_invariant(Outcome& out) {
  const WorldSpec spec = world_preset("default");
  PipelineConfig cfg;
  Hyper hyper;
  const PipelineRun run = run_pipeline(spec, 2000, false, cfg, hyper, 3001);

  int violations = 0;
  for (std::size_t i = 0; i < run.gen.released.size(); ++i) {
    const auto& prov = run.gen.provenance[i];
    const Record& source = run.train.records[prov.source_record_id];
    violations +=
        reid_predict(source.x, run.gen.released.records[i].x, run.filter);
  }
  out.require(violations == 0,
              std::to_string(violations) + " violating released pairs");

  const auto dir = std::filesystem::temp_directory_path() / "psoforge_accept";
  std::filesystem::create_directories(dir);
  const std::string path = (dir / "released.dsv").string();
  write_dsv(run.gen.released, path);
  std::ifstream in(path);
  std::string header, first_row;
  std::getline(in, header);
  std::getline(in, first_row);
  const long commas = std::count(first_row.begin(), first_row.end(), ',');
  out.require(header.find("origin=synthetic") != std::string::npos,
              "released header origin");
  out.require(commas == 2 + spec.dim, "released rows have no identity column");
  std::ostringstream msg;
  msg << run.gen.released.size() << " released, " << run.gen.drops()
      << " dropped, 0 violations";
  out.note(msg.str());
}

// --- criterion 4: diversity ordering -----------------------------------------

void criterion_diversity(Outcome& out) {
  const WorldSpec spec = world_preset("diversity");
  PipelineConfig cfg;
  Hyper hyper;
  const PipelineRun run = run_pipeline(spec, 256, false, cfg, hyper, 4001);

  PipelineConfig base_cfg = cfg;
  base_cfg.seed = derive_seed(4001, "baseline");
  const Dataset baseline =
      generate_unconditional_baseline(run.world, run.train, base_cfg);
  // Same N: keep only baseline counterparts of records the pipeline released.
  Dataset baseline_matched;
  baseline_matched.origin = Origin::Synthetic;
  baseline_matched.dim = baseline.dim;
  baseline_matched.n_classes = baseline.n_classes;
  for (const ProvenanceEntry& prov : run.gen.provenance)
    baseline_matched.records.push_back(baseline.records[prov.source_record_id]);

  const Matrix real_emb = embed_records(run.train, run.pc_spec);
  const Matrix pipe_emb = embed_records(run.gen.released, run.pc_spec);
  const Matrix base_emb = embed_records(baseline_matched, run.pc_spec);
  const double irs_pipe = irs(real_emb, pipe_emb);
  const double irs_base = irs(real_emb, base_emb);
  out.require(irs_pipe >= 1.2 * irs_base, "ordering violated");
  std::ostringstream msg;
  msg << "pipeline IRS " << irs_pipe << " vs unconditional " << irs_base
      << " (ratio " << irs_pipe / std::max(irs_base, 1e-12) << ")";
  out.note(msg.str());
}

// --- criterion 5: downstream gap ---------------------------------------------

void criterion_gap(Outcome& out) {
  const WorldSpec spec = world_preset("default");
  PipelineConfig cfg;
  Hyper hyper;
  const PipelineRun run = run_pipeline(spec, 2857, true, cfg, hyper, 5001);

  PipelineConfig base_cfg = cfg;
  base_cfg.seed = derive_seed(5001, "baseline");
  const Dataset baseline =
      generate_unconditional_baseline(run.world, run.train, base_cfg);

  const GapResult pipe =
      real_synth_gap(run.train, run.gen.released, run.val, run.test, hyper);
  const GapResult uncond =
      real_synth_gap(run.train, baseline, run.val, run.test, hyper);

  out.require(pipe.gap >= -0.02,
              "pipeline gap " + std::to_string(pipe.gap) + " below -2pp");
  out.require(pipe.gap > uncond.gap, "pipeline does not beat unconditional");
  std::ostringstream msg;
  msg << "real AUCROC " << pipe.auroc_real << ", pipeline " << pipe.auroc_synth
      << " (gap " << pipe.gap << "), unconditional gap " << uncond.gap
      << ", drops " << run.gen.drops();
  out.note(msg.str());
}

// --- criterion 6: re-identification calibration ------------------------------

void criterion_reid_calibration(Outcome& out) {
  const WorldSpec spec = world_preset("paperlike");
  const World world = build_world(spec);
  Dataset all = sample_dataset(world, 3000, 6001);
  all = split_dataset(all, 0.7, 0.1, 0.2, 6002);
  const Dataset train = subset_split(all, Split::Train);
  const Dataset test = subset_split(all, Split::Test);

  const ExtractorSpec id_spec =
      default_identity_spec(spec.dim, spec.resolved_pc_dim());
  const auto calib_pairs = make_identity_pairs(train, 2000, 6003);
  ReidFilter filter = calibrate_threshold(calib_pairs, id_spec);
  filter.meta.target_auc = 0.96;

  const auto heldout_pairs = make_identity_pairs(test, 2000, 6004);
  const double auc = evaluate_pairs_auc(heldout_pairs, filter);
  out.require(auc >= 0.93 && auc <= 0.99,
              "held-out re-id AUCROC " + std::to_string(auc));
  std::ostringstream msg;
  msg << "held-out re-id AUCROC " << auc << " (train-pair AUCROC "
      << filter.meta.achieved_auc << ")";
  out.note(msg.str());
}

// --- criterion 7: PSO audit ---------------------------------------------------

void criterion_pso_audit(Outcome& out) {
  const WorldSpec spec = world_preset("default");
  PipelineConfig cfg;
  Hyper hyper;
  const PipelineRun run = run_pipeline(spec, 1000, false, cfg, hyper, 7001);

  Matrix released_x(spec.dim, run.gen.released.size());
  std::vector<int> sources;
  for (std::size_t i = 0; i < run.gen.released.size(); ++i) {
    released_x.col(i) = run.gen.released.records[i].x;
    sources.push_back(
        run.train.records[run.gen.provenance[i].source_record_id].identity);
  }
  const AttackReport pipe_attack =
      identity_attack(released_x, sources, run.train, run.id_spec);
  out.require(pipe_attack.pass, "pipeline output failed the audit (accuracy " +
                                    std::to_string(pipe_attack.accuracy) + ")");

  std::vector<int> own;
  for (const Record& r : run.train.records) own.push_back(r.identity);
  const AttackReport self_attack =
      identity_attack(feature_matrix(run.train), own, run.train, run.id_spec);
  out.require(self_attack.accuracy == 1.0, "self-linkage accuracy not 1.0");
  out.require(!self_attack.pass, "real release must fail the audit");
  std::ostringstream msg;
  msg << "pipeline linkage " << pipe_attack.accuracy << " (threshold "
      << pipe_attack.threshold << "), real release linkage "
      << self_attack.accuracy;
  out.note(msg.str());
}

// --- criterion 8: guidance fallback ------------------------------------------

void criterion_fallback(Outcome& out) {
  const WorldSpec spec = world_preset("tight");
  PipelineConfig cfg;
  cfg.guidance_floor = 1.0;  // adversarial config: exhaust after three rounds
  Hyper hyper;
  hyper.epochs = 40;
  const PipelineRun run = run_pipeline(spec, 64, false, cfg, hyper, 8001);

  int fallback_records = 0;
  int at_one_point_one = 0;
  double worst_grid = 0.0;
  for (const ProvenanceEntry& prov : run.gen.provenance) {
    const int k = prov.rounds - 1;
    worst_grid = std::max(
        worst_grid, std::abs(prov.guidance_used - (1.2 - 0.1 * k)));
    if (prov.rounds >= 2) ++fallback_records;
    if (prov.rounds == 2) {
      ++at_one_point_one;
      if (std::abs(prov.guidance_used - 1.1) > 1e-12)
        out.require(false, "round-2 guidance not 1.1");
    }
  }
  out.require(fallback_records >= 1, "no record needed a decrement round");
  out.require(at_one_point_one >= 1, "no record released at guidance 1.1");
  out.require(worst_grid <= 1e-12, "guidance not on the 0.1 grid");
  out.require(run.gen.drops() >= 1, "no record exhausted the floor");

  // Dropped records never appear in the released set.
  std::set<std::int64_t> released_sources;
  for (const ProvenanceEntry& prov : run.gen.provenance)
    released_sources.insert(prov.source_record_id);
  for (std::int64_t dropped : run.gen.dropped_source_ids)
    out.require(!released_sources.count(dropped), "dropped record released");

  std::ostringstream msg;
  msg << fallback_records << " records needed fallback, " << at_one_point_one
      << " released at 1.1, " << run.gen.drops() << " dropped at the floor";
  out.note(msg.str());
}

// --- criterion 9: sampler consistency ----------------------------------------

void criterion_sampler(Outcome& out) {
  Vector mu(8);
  mu << 3.0, -2.0, 1.5, 1.0, -1.0, 2.0, -3.0, 1.0;
  Matrix means(1, 8);
  means.row(0) = mu.transpose();
  World world;
  world.means = means;
  world.weights = Vector::Constant(1, 1.0);
  world.predicates = MatrixI::Zero(1, 1);
  world.cluster_std = 1.0;

  const MixtureDenoiser denoiser(world, Matrix());
  NoiseSchedule schedule;  // 64 steps
  const auto sigmas = sigma_schedule(schedule);
  const int n = 10000;
  const auto batch = sample_batch(denoiser, nullptr, 0.0, n, sigmas, 9001);
  Matrix x(8, n);
  for (int i = 0; i < n; ++i) x.col(i) = batch[i].x_prime;

  const Vector mean = x.rowwise().mean();
  const Matrix centered = x.colwise() - mean;
  const Vector stddev =
      (centered.rowwise().squaredNorm() / double(n - 1)).cwiseSqrt();
  double worst_mean = 0.0, worst_std = 0.0;
  for (int i = 0; i < 8; ++i) {
    worst_mean = std::max(worst_mean, std::abs(mean[i] - mu[i]) / std::abs(mu[i]));
    worst_std = std::max(worst_std, std::abs(stddev[i] - 1.0));
  }
  out.require(worst_mean <= 0.02, "mean off by " + std::to_string(worst_mean));
  out.require(worst_std <= 0.02, "std off by " + std::to_string(worst_std));

  // Guidance identities, bit-exact, on 1000 random inputs.
  Matrix means2(2, 4);
  means2.row(0) << 1.0, 0.0, 3.0, 0.0;
  means2.row(1) << -1.0, 0.0, -3.0, 0.0;
  World w2;
  w2.means = means2;
  w2.weights = Vector::Constant(2, 0.5);
  w2.predicates = MatrixI::Zero(2, 1);
  w2.cluster_std = 0.4;
  const ExtractorSpec pc = default_pseudo_condition_spec(4, 2);
  Rng rng(9002);
  bool exact = true;
  for (int trial = 0; trial < 1000; ++trial) {
    const Vector xin = rng.normal_vector(4) * 2.0;
    const double sigma = 0.05 + 4.0 * rng.uniform();
    Vector c_s = rng.normal_vector(2);
    c_s /= c_s.norm();
    if (guided_denoise(xin, sigma, c_s, 1.0, w2, pc, 0.3) !=
        conditional_denoise(xin, sigma, c_s, w2, pc, 0.3))
      exact = false;
    if (guided_denoise(xin, sigma, c_s, 0.0, w2, pc, 0.3) !=
        gmm_denoise(xin, sigma, w2))
      exact = false;
  }
  out.require(exact, "guidance identities not bit-exact");
  std::ostringstream msg;
  msg << "worst mean error " << worst_mean << ", worst std error " << worst_std;
  out.note(msg.str());
}

// --- criterion 10: cross-site data sharing ------------------------------------

void criterion_cross_site(Outcome& out) {
  std::vector<SiteConfig> sites(3);
  const char* names[3] = {"site_a", "site_b", "site_c"};
  for (int i = 0; i < 3; ++i) {
    WorldSpec spec = world_preset("default");
    spec.n_identities = 120;
    spec.covariate_shift = 0.3;
    spec.seed = 1010 + i;
    sites[i].name = names[i];
    sites[i].world_spec = spec;
    sites[i].n_records = 500;
  }
  Hyper hyper;
  PipelineConfig cfg;
  const CrossSiteReport report = cross_site_share(sites, hyper, cfg, 0.96, 10001);

  double combined_mean = 0.0, synth_grid_mean = 0.0;
  for (int j = 0; j < 3; ++j) combined_mean += report.auroc_combined[j] / 3.0;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) synth_grid_mean += report.auroc_synth(i, j) / 9.0;
  out.require(combined_mean >= synth_grid_mean,
              "combined mean below per-site mean");
  double worst_drop = 0.0;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j)
      worst_drop = std::max(
          worst_drop, report.auroc_real(i, j) - report.auroc_synth(i, j));
  out.require(worst_drop <= 0.03,
              "synthetic more than 3pp below real (worst " +
                  std::to_string(worst_drop) + ")");
  std::ostringstream msg;
  msg << "combined mean " << combined_mean << ", per-site grid mean "
      << synth_grid_mean << ", worst real-synth drop " << worst_drop;
  out.note(msg.str());
}

// --- criterion 11: classifier numerics ----------------------------------------

void criterion_classifier_numerics(Outcome& out) {
  Rng rng(1101);
  double worst = 0.0;
  for (int trial = 0; trial < 20; ++trial) {
    const int c = 3, d = 5, n = 12;
    Matrix x(d, n), y(c, n), w(c, d);
    Vector b(c);
    for (int i = 0; i < d * n; ++i) x(i % d, i / d) = rng.normal();
    for (int i = 0; i < c * n; ++i) y(i % c, i / c) = rng.uniform() < 0.5;
    for (int i = 0; i < c * d; ++i) w(i % c, i / c) = 0.3 * rng.normal();
    for (int j = 0; j < c; ++j) b[j] = 0.3 * rng.normal();
    Matrix gw;
    Vector gb;
    bce_gradient(w, b, x, y, gw, gb);
    const double h = 1e-6;
    for (int probe = 0; probe < 5; ++probe) {
      const int j = static_cast<int>(rng.next_u64() % c);
      const int i = static_cast<int>(rng.next_u64() % d);
      Matrix wp = w, wm = w;
      wp(j, i) += h;
      wm(j, i) -= h;
      const double numeric =
          (bce_loss(wp, b, x, y) - bce_loss(wm, b, x, y)) / (2.0 * h);
      worst = std::max(worst, std::abs(numeric - gw(j, i)) /
                                  std::max(1.0, std::abs(numeric)));
    }
  }
  out.require(worst <= 1e-5, "gradient check worst " + std::to_string(worst));

  const double hand = auroc({0.1, 0.4, 0.35, 0.8}, {0, 0, 1, 1});
  out.require(hand == 0.75, "AUCROC hand-check");
  std::ostringstream msg;
  msg << "worst gradient error " << worst << ", hand-check AUCROC " << hand;
  out.note(msg.str());
}

struct Criterion {
  int id;
  const char* name;
  std::function<void(Outcome&)> run;
};

const std::vector<Criterion>& criteria() {
  static const std::vector<Criterion> list = {
      {1, "frechet-oracle", criterion_frechet},
      {2, "irs-oracle", criterion_irs},
      {3, "release-invariant", criterion_release_invariant},
      {4, "diversity-ordering", criterion_diversity},
      {5, "downstream-gap", criterion_gap},
      {6, "reid-calibration", criterion_reid_calibration},
      {7, "pso-audit", criterion_pso_audit},
      {8, "guidance-fallback", criterion_fallback},
      {9, "sampler-consistency", criterion_sampler},
      {10, "cross-site-sharing", criterion_cross_site},
      {11, "classifier-numerics", criterion_classifier_numerics},
  };
  return list;
}

bool run_criterion(const Criterion& c) {
  Outcome out;
  const auto start = std::chrono::steady_clock::now();
  try {
    c.run(out);
  } catch (const std::exception& e) {
    out.pass = false;
    out.note(std::string("exception: ") + e.what());
  }
  const double seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
          .count();
  std::printf("[%s] %2d %-20s %s (%.1fs)\n", out.pass ? "PASS" : "FAIL", c.id,
              c.name, out.detail.c_str(), seconds);
  std::fflush(stdout);
  return out.pass;
}

}  // namespace

int main(int argc, char** argv) {
  bool all_pass = true;
  if (argc > 1) {
    const int wanted = std::atoi(argv[1]);
    bool found = false;
    for (const Criterion& c : criteria()) {
      if (c.id == wanted) {
        found = true;
        all_pass = run_criterion(c);
      }
    }
    if (!found) {
      std::fprintf(stderr, "error: unknown criterion %d\n", wanted);
      return 2;
    }
    return all_pass ? 0 : 1;
  }
  for (const Criterion& c : criteria()) all_pass &= run_criterion(c);
  return all_pass ? 0 : 1;
}
