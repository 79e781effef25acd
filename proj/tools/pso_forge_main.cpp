// pso-forge: PSO-secure synthetic dataset generation and evaluation.
//
// Subcommands: make-world, train, generate, evaluate, audit, cross-site,
// table. Exit codes: 0 ok, 2 config error, 3 data error, 4 generation ended
// with unsatisfiable records.

#include <psoforge/classifier.hpp>
#include <psoforge/errors.hpp>
#include <psoforge/features.hpp>
#include <psoforge/generator.hpp>
#include <psoforge/io.hpp>
#include <psoforge/metrics.hpp>
#include <psoforge/pipeline.hpp>
#include <psoforge/presets.hpp>
#include <psoforge/privacy.hpp>
#include <psoforge/rng.hpp>
#include <psoforge/world.hpp>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

using namespace psoforge;
namespace fs = std::filesystem;

namespace {

std::map<std::string, std::string> g_resolved;  // echoed into run.lock

void resolve(const std::string& key, const std::string& value) {
  g_resolved[key] = value;
}
void resolve(const std::string& key, const char* value) {
  g_resolved[key] = value;
}
void resolve(const std::string& key, double value) {
  g_resolved[key] = format_double(value);
}
template <typename T>
void resolve(const std::string& key, T value) {
  g_resolved[key] = std::to_string(value);
}

void finish_run(const std::string& primary_output) {
  fs::path out(primary_output);
  write_run_lock(g_resolved, out.parent_path().string());
}

WorldSpec load_world_spec(const std::string& config_path,
                          const std::string& preset,
                          const std::vector<std::string>& overrides) {
  std::map<std::string, std::string> kv;
  if (!preset.empty()) kv = world_spec_to_kv(world_preset(preset));
  if (!config_path.empty()) {
    for (const auto& [k, v] : read_kv_config(config_path)) kv[k] = v;
  }
  for (const std::string& item : overrides) {
    const auto eq = item.find('=');
    if (eq == std::string::npos)
      throw ConfigError("--set expects key=value, got '" + item + "'");
    kv[item.substr(0, eq)] = item.substr(eq + 1);
  }
  if (kv.empty())
    throw ConfigError("make-world needs --config or --preset");
  return world_spec_from_kv(kv);
}

struct ScheduleFlags {
  int steps = 64;
  double sigma_min = 0.002;
  double sigma_max = 80.0;
  double rho = 7.0;

  void attach(CLI::App* cmd) {
    cmd->add_option("--steps", steps, "ODE integration steps");
    cmd->add_option("--sigma-min", sigma_min, "schedule minimum sigma");
    cmd->add_option("--sigma-max", sigma_max, "schedule maximum sigma");
    cmd->add_option("--rho", rho, "schedule exponent");
  }
  NoiseSchedule schedule() const { return {steps, sigma_min, sigma_max, rho}; }
  void echo() const {
    resolve("steps", steps);
    resolve("sigma_min", sigma_min);
    resolve("sigma_max", sigma_max);
    resolve("rho", rho);
  }
};

Dataset load_train_split(const std::string& path) {
  const Dataset ds = read_dsv(path);
  Dataset train = subset_split(ds, Split::Train);
  if (train.empty())
    throw DataError(path + ": no train-split records");
  return train;
}

// ---------------------------------------------------------------------------

int cmd_make_world(const std::string& config, const std::string& preset,
                   const std::vector<std::string>& overrides,
                   const std::string& out_dir, int n_records,
                   std::vector<double> fractions, bool single_label,
                   std::uint64_t seed, int n_pairs) {
  WorldSpec spec = load_world_spec(config, preset, overrides);
  if (single_label) spec.geometry = PredicateGeometry::SingleLabel;
  if (fractions.size() != 3)
    throw ConfigError("--fractions expects train,val,test");

  for (const auto& [k, v] : world_spec_to_kv(spec)) resolve("world." + k, v);
  resolve("n_records", n_records);
  resolve("seed", seed);
  resolve("fractions", std::to_string(fractions[0]) + "," +
                           std::to_string(fractions[1]) + "," +
                           std::to_string(fractions[2]));

  const World world = build_world(spec);
  Dataset ds = sample_dataset(world, n_records, derive_seed(seed, "sample"));
  ds = split_dataset(ds, fractions[0], fractions[1], fractions[2],
                     derive_seed(seed, "split"));

  fs::create_directories(out_dir);
  const fs::path dir(out_dir);
  write_kv_config(world_spec_to_kv(spec), (dir / "world.cfg").string());
  write_dsv(ds, (dir / "data.dsv").string());

  // Calibrate the re-identification filter on train pairs; record the
  // held-out AUCROC from validation pairs (falling back to train when no
  // validation split was requested).
  const Dataset train = subset_split(ds, Split::Train);
  const Dataset val = subset_split(ds, Split::Val);
  const ExtractorSpec id_spec =
      default_identity_spec(spec.dim, spec.resolved_pc_dim());
  const auto calib_pairs =
      make_identity_pairs(train, n_pairs, derive_seed(seed, "calib"));
  ReidFilter filter = calibrate_threshold(calib_pairs, id_spec);
  filter.meta.target_auc = 0.96;
  const Dataset& heldout = val.empty() ? train : val;
  const auto eval_pairs =
      make_identity_pairs(heldout, n_pairs, derive_seed(seed, "eval"));
  filter.meta.achieved_auc = evaluate_pairs_auc(eval_pairs, filter);
  write_rid(filter, (dir / "filter.rid").string());

  finish_run((dir / "data.dsv").string());
  std::cout << "world: " << spec.n_identities << " identities, dim "
            << spec.dim << ", " << ds.size() << " records\n"
            << "re-id filter: tau " << *filter.tau << ", held-out AUCROC "
            << filter.meta.achieved_auc << "\n";
  return 0;
}

int cmd_train(const std::string& on, const std::vector<std::string>& train_paths,
              const std::string& val_path, const std::string& out_path,
              int epochs, double lr, std::uint64_t seed) {
  if (train_paths.empty()) throw ConfigError("train: need --train");
  Dataset train;
  for (std::size_t i = 0; i < train_paths.size(); ++i) {
    Dataset part = read_dsv(train_paths[i]);
    Dataset split = subset_split(part, Split::Train);
    if (split.empty()) split = part;  // synthetic files may be unsplit
    if (i == 0) {
      train = split;
    } else {
      if (split.dim != train.dim || split.n_classes != train.n_classes)
        throw DataError("train: mismatched dataset schemas");
      for (Record& r : split.records) {
        r.record_id = static_cast<std::int64_t>(train.records.size());
        train.records.push_back(std::move(r));
      }
    }
  }
  if (on == "real" && train.origin != Origin::Real)
    throw ConfigError("train --on real expects a real dataset");
  if (on == "synthetic" && train.origin != Origin::Synthetic)
    throw ConfigError("train --on synthetic expects a synthetic dataset");
  if (on == "combined") train.origin = Origin::Synthetic;

  const Dataset val_all = read_dsv(val_path);
  Dataset val = subset_split(val_all, Split::Val);
  if (val.empty()) val = val_all;

  Hyper hyper;
  hyper.epochs = epochs;
  hyper.learning_rate = lr;
  hyper.seed = seed;
  resolve("on", on);
  resolve("epochs", epochs);
  resolve("lr", lr);
  resolve("seed", seed);

  const Classifier clf = train_multilabel(train, val, hyper);
  write_clf(clf, out_path);
  finish_run(out_path);
  std::cout << "trained on " << train.size() << " records ("
            << to_string(train.origin) << "), val BCE "
            << dataset_bce(clf, val) << "\n";
  return 0;
}

int cmd_generate(const std::string& world_path, const std::string& train_path,
                 const std::string& clf_path, const std::string& filter_path,
                 const std::string& out_path, const std::string& audit_path,
                 const ScheduleFlags& sf, int batch, double guidance,
                 double decrement, double floor, int max_rounds,
                 double kernel_width, const std::string& extractor,
                 bool unconditional_baseline, std::uint64_t seed) {
  const WorldSpec spec = world_spec_from_kv(read_kv_config(world_path));
  const World world = build_world(spec);
  const Dataset train = load_train_split(train_path);
  if (train.dim != spec.dim || train.n_classes != spec.n_classes)
    throw DataError("generate: dataset does not match the world config");

  PipelineConfig cfg;
  cfg.batch = batch;
  cfg.guidance = guidance;
  cfg.decrement = decrement;
  cfg.guidance_floor = floor;
  cfg.max_rounds = max_rounds;
  cfg.kernel_width = kernel_width;
  cfg.schedule = sf.schedule();
  cfg.seed = seed;
  if (extractor == "classifier")
    cfg.condition_source = ConditionSource::ClassifierLogits;
  else if (extractor != "pseudo")
    throw ConfigError("--extractor must be pseudo or classifier");

  sf.echo();
  resolve("batch", batch);
  resolve("guidance", guidance);
  resolve("guidance_decrement", decrement);
  resolve("guidance_floor", floor);
  resolve("max_rounds", max_rounds);
  resolve("kernel_width", kernel_width);
  resolve("extractor", extractor);
  resolve("seed", seed);
  resolve("baseline", unconditional_baseline ? "unconditional" : "off");

  if (unconditional_baseline) {
    const Dataset baseline = generate_unconditional_baseline(world, train, cfg);
    write_dsv(baseline, out_path);
    finish_run(out_path);
    std::cout << "baseline: " << baseline.size() << " records\n";
    return 0;
  }

  const Classifier clf = read_clf(clf_path);
  const ReidFilter filter = read_rid(filter_path);
  const ExtractorSpec pc_spec =
      default_pseudo_condition_spec(spec.dim, spec.resolved_pc_dim());

  const GenerationResult gen =
      generate_dataset(world, train, clf, filter, pc_spec, cfg);
  write_dsv(gen.released, out_path);
  write_aud(make_sidecar(gen), audit_path);
  finish_run(out_path);
  std::cout << "released " << gen.released.size() << " records, dropped "
            << gen.drops() << "\n";
  return gen.drops() > 0 ? 4 : 0;
}

int cmd_evaluate(const std::string& real_path, const std::string& synth_path,
                 const std::string& clf_real_path, const std::string& world_path,
                 const std::string& audit_path, const std::string& out_path,
                 int epochs, double lr, std::uint64_t seed) {
  const Dataset real = read_dsv(real_path);
  const Dataset synth_all = read_dsv(synth_path);
  Dataset synth = subset_split(synth_all, Split::Train);
  if (synth.empty()) synth = synth_all;

  const Dataset real_train = subset_split(real, Split::Train);
  const Dataset real_val = subset_split(real, Split::Val);
  const Dataset real_test = subset_split(real, Split::Test);

  int pc_dim = std::min(real.n_classes + 2, real.dim - 1);
  if (!world_path.empty()) {
    const WorldSpec spec = world_spec_from_kv(read_kv_config(world_path));
    pc_dim = spec.resolved_pc_dim();
  }
  const ExtractorSpec pc_spec = default_pseudo_condition_spec(real.dim, pc_dim);

  resolve("epochs", epochs);
  resolve("lr", lr);
  resolve("seed", seed);
  resolve("pc_dim", pc_dim);

  auto embed = [&](const Dataset& ds) {
    Matrix out(pc_spec.out_dim, ds.size());
    for (std::size_t i = 0; i < ds.size(); ++i)
      out.col(i) = pseudo_condition(ds.records[i].x, pc_spec);
    return out;
  };

  EvalReport report;
  const Matrix real_emb = embed(real_train);
  const Matrix synth_emb = embed(synth);
  report.fid = frechet_distance(gaussian_moments(real_emb),
                                gaussian_moments(synth_emb));
  report.irs = irs(real_emb, synth_emb);
  report.drops = static_cast<int>(real_train.size()) -
                 static_cast<int>(synth.size());

  if (!real_val.empty() && !real_test.empty()) {
    Hyper hyper;
    hyper.epochs = epochs;
    hyper.learning_rate = lr;
    hyper.seed = seed;
    const GapResult gap =
        real_synth_gap(real_train, synth, real_val, real_test, hyper);
    report.auroc_real = gap.auroc_real;
    report.auroc_synth = gap.auroc_synth;
    report.gap = gap.gap;
  }

  if (!audit_path.empty()) {
    const AuditSidecar sidecar = read_aud(audit_path);
    const ExtractorSpec id_spec = default_identity_spec(real.dim, pc_dim);
    const std::vector<int> sources = resolve_source_identities(sidecar, real);
    report.privacy =
        identity_attack(feature_matrix(synth), sources, real_train, id_spec);
  }

  std::ofstream(out_path) << report_to_json(report) << "\n";
  const fs::path csv = fs::path(out_path).replace_extension(".csv");
  std::ofstream(csv) << report_csv_header() << "\n"
                     << report_csv_row(synth_path, report) << "\n";
  finish_run(out_path);
  std::cout << report_to_json(report) << "\n";
  return 0;
}

int cmd_audit(const std::string& released_path, const std::string& sidecar_path,
              const std::string& real_path, const std::string& world_path) {
  const Dataset released = read_dsv(released_path);
  const Dataset real = read_dsv(real_path);
  const AuditSidecar sidecar = read_aud(sidecar_path);
  if (sidecar.entries.size() != released.size())
    throw DataError("audit: sidecar does not match the released dataset");

  int pc_dim = std::min(real.n_classes + 2, real.dim - 1);
  if (!world_path.empty()) {
    const WorldSpec spec = world_spec_from_kv(read_kv_config(world_path));
    pc_dim = spec.resolved_pc_dim();
  }
  const ExtractorSpec id_spec = default_identity_spec(real.dim, pc_dim);
  const std::vector<int> sources = resolve_source_identities(sidecar, real);
  const AttackReport report =
      identity_attack(feature_matrix(released), sources, real, id_spec);

  nlohmann::json j = {{"n_released", report.n_released},
                      {"n_correct", report.n_correct},
                      {"accuracy", report.accuracy},
                      {"chance", report.chance},
                      {"threshold", report.threshold},
                      {"pass", report.pass},
                      {"dropped", sidecar.dropped_source_ids.size()}};
  std::cout << j.dump(2) << "\n";
  return 0;
}

int cmd_cross_site(const std::vector<std::string>& site_configs,
                   const std::string& out_dir, int n_records,
                   const ScheduleFlags& sf, int batch, double guidance,
                   double kernel_width, int epochs, double lr,
                   std::uint64_t seed) {
  if (site_configs.size() < 2)
    throw ConfigError("cross-site: need at least two --sites configs");
  std::vector<SiteConfig> sites;
  for (const std::string& path : site_configs) {
    SiteConfig site;
    site.name = fs::path(path).stem().string();
    site.world_spec = world_spec_from_kv(read_kv_config(path));
    site.n_records = n_records;
    sites.push_back(std::move(site));
  }
  Hyper hyper;
  hyper.epochs = epochs;
  hyper.learning_rate = lr;
  hyper.seed = seed;
  PipelineConfig cfg;
  cfg.batch = batch;
  cfg.guidance = guidance;
  cfg.kernel_width = kernel_width;
  cfg.schedule = sf.schedule();

  sf.echo();
  resolve("n_records", n_records);
  resolve("batch", batch);
  resolve("guidance", guidance);
  resolve("kernel_width", kernel_width);
  resolve("epochs", epochs);
  resolve("lr", lr);
  resolve("seed", seed);

  const CrossSiteReport report = cross_site_share(sites, hyper, cfg, 0.96, seed);
  fs::create_directories(out_dir);
  const fs::path dir(out_dir);
  std::ofstream((dir / "cross_site.json").string())
      << cross_site_to_json(report) << "\n";

  // Table-2-style grid: per-site real and synthetic rows plus the pooled row.
  std::ostringstream csv;
  csv << "train";
  for (const auto& name : report.sites) csv << ",test_" << name;
  csv << "\n";
  for (std::size_t i = 0; i < report.sites.size(); ++i) {
    csv << "real_" << report.sites[i];
    for (std::size_t j = 0; j < report.sites.size(); ++j)
      csv << "," << report.auroc_real(i, j);
    csv << "\n";
  }
  for (std::size_t i = 0; i < report.sites.size(); ++i) {
    csv << "synthetic_" << report.sites[i];
    for (std::size_t j = 0; j < report.sites.size(); ++j)
      csv << "," << report.auroc_synth(i, j);
    csv << "\n";
  }
  csv << "synthetic_pooled";
  for (std::size_t j = 0; j < report.sites.size(); ++j)
    csv << "," << report.auroc_combined[j];
  csv << "\n";
  std::ofstream((dir / "table2.csv").string()) << csv.str();

  finish_run((dir / "cross_site.json").string());
  std::cout << cross_site_to_json(report) << "\n";
  return 0;
}

int cmd_table(const std::string& mode, const std::vector<std::string>& reports,
              const std::string& cross_path,
              const std::vector<std::string>& datasets, int folds,
              bool allow_subject_overlap, int epochs, double lr,
              std::uint64_t seed, const std::string& out_path) {
  std::ostringstream csv;
  if (mode == "table1") {
    if (reports.empty()) throw ConfigError("table1 needs --reports name=path");
    csv << "name,fid,irs,gap_pp,auroc_synth,auroc_real\n";
    for (const std::string& item : reports) {
      const auto eq = item.find('=');
      if (eq == std::string::npos)
        throw ConfigError("--reports expects name=path, got '" + item + "'");
      const std::string name = item.substr(0, eq);
      std::ifstream in(item.substr(eq + 1));
      if (!in) throw DataError("cannot open report " + item.substr(eq + 1));
      nlohmann::json j;
      in >> j;
      csv << name << ',' << double(j["fid"]) << ',' << double(j["irs"]) << ','
          << 100.0 * double(j["gap"]) << ',' << double(j["auroc_synth"]) << ','
          << double(j["auroc_real"]) << "\n";
    }
  } else if (mode == "table2") {
    if (cross_path.empty()) throw ConfigError("table2 needs --cross");
    std::ifstream in(cross_path);
    if (!in) throw DataError("cannot open " + cross_path);
    nlohmann::json j;
    in >> j;
    const auto& sites = j["sites"];
    csv << "train";
    for (const auto& s : sites) csv << ",test_" << std::string(s);
    csv << "\n";
    for (std::size_t i = 0; i < sites.size(); ++i) {
      csv << "real_" << std::string(sites[i]);
      for (std::size_t k = 0; k < sites.size(); ++k)
        csv << "," << double(j["auroc_real"][i][k]);
      csv << "\n";
    }
    for (std::size_t i = 0; i < sites.size(); ++i) {
      csv << "synthetic_" << std::string(sites[i]);
      for (std::size_t k = 0; k < sites.size(); ++k)
        csv << "," << double(j["auroc_synth"][i][k]);
      csv << "\n";
    }
    csv << "synthetic_pooled";
    for (std::size_t k = 0; k < sites.size(); ++k)
      csv << "," << double(j["auroc_combined"][k]);
    csv << "\n";
  } else if (mode == "ranking") {
    if (datasets.empty()) throw ConfigError("ranking needs --datasets name=path");
    Hyper hyper;
    hyper.epochs = epochs;
    hyper.learning_rate = lr;
    hyper.seed = seed;
    struct Row {
      std::string name;
      std::vector<double> scores;
    };
    std::vector<Row> rows;
    for (const std::string& item : datasets) {
      const auto eq = item.find('=');
      if (eq == std::string::npos)
        throw ConfigError("--datasets expects name=path, got '" + item + "'");
      Row row;
      row.name = item.substr(0, eq);
      Dataset ds = read_dsv(item.substr(eq + 1));
      if (ds.origin == Origin::Synthetic && !distinct_identities(ds).empty() &&
          !allow_subject_overlap) {
        // Synthetic data has no identities; fold at record granularity.
        row.scores = crossval_auroc(ds, folds, hyper, seed, true);
      } else {
        row.scores = crossval_auroc(ds, folds, hyper, seed, allow_subject_overlap);
      }
      rows.push_back(std::move(row));
    }
    csv << "name";
    for (int f = 0; f < folds; ++f) csv << ",fold_" << f;
    csv << ",mean,mean_rank\n";
    for (const Row& row : rows) {
      double mean = 0.0, mean_rank = 0.0;
      for (int f = 0; f < folds; ++f) {
        mean += row.scores[f] / folds;
        double rank = 1.0;
        for (const Row& other : rows)
          if (other.scores[f] > row.scores[f]) rank += 1.0;
        mean_rank += rank / folds;
      }
      csv << row.name;
      for (int f = 0; f < folds; ++f) csv << ',' << row.scores[f];
      csv << ',' << mean << ',' << mean_rank << "\n";
    }
  } else {
    throw ConfigError("table: mode must be table1, table2, or ranking");
  }
  std::ofstream(out_path) << csv.str();
  std::cout << csv.str();
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"PSO-secure synthetic dataset generation and evaluation"};
  app.require_subcommand(1);

  // make-world
  auto* mk = app.add_subcommand("make-world",
                                "build a world, sample a dataset, calibrate "
                                "the re-identification filter");
  std::string mk_config, mk_preset, mk_out = "out";
  std::vector<std::string> mk_overrides;
  int mk_records = 1000, mk_pairs = 2000;
  std::vector<double> mk_fractions = {0.7, 0.1, 0.2};
  bool mk_single_label = false;
  std::uint64_t mk_seed = 0;
  mk->add_option("--config", mk_config, "world config file (key = value)");
  mk->add_option("--preset", mk_preset, "named preset: default|paperlike|tight|diversity");
  mk->add_option("--set", mk_overrides, "override world config keys (key=value)");
  mk->add_option("--out", mk_out, "output directory");
  mk->add_option("--n-records", mk_records, "records to sample");
  mk->add_option("--fractions", mk_fractions, "train,val,test fractions")
      ->expected(3);
  mk->add_flag("--single-label", mk_single_label,
               "restrict predicates to one-hot rows");
  mk->add_option("--seed", mk_seed, "global seed");
  mk->add_option("--n-pairs", mk_pairs, "calibration pairs");

  // train
  auto* tr = app.add_subcommand("train", "train a multi-label classifier");
  std::string tr_on = "real", tr_val, tr_out = "clf.clf";
  std::vector<std::string> tr_train;
  int tr_epochs = 100;
  double tr_lr = 0.5;
  std::uint64_t tr_seed = 0;
  tr->add_option("--on", tr_on, "real|synthetic|combined");
  tr->add_option("--train", tr_train, "training dataset(s)")->required();
  tr->add_option("--val", tr_val, "validation dataset")->required();
  tr->add_option("--out", tr_out, "output CLF1 path");
  tr->add_option("--epochs", tr_epochs, "training epochs");
  tr->add_option("--lr", tr_lr, "initial learning rate");
  tr->add_option("--seed", tr_seed, "global seed");

  // generate
  auto* gen = app.add_subcommand("generate", "PSO-secure synthetic counterparts");
  std::string gen_world, gen_train, gen_clf, gen_filter, gen_out = "synth.dsv",
              gen_audit = "synth.aud", gen_extractor = "pseudo";
  ScheduleFlags gen_sched;
  int gen_batch = 32, gen_rounds = 13;
  double gen_guidance = 1.2, gen_decrement = 0.1, gen_floor = 0.0,
         gen_kernel = 0.15;
  bool gen_baseline = false;
  std::uint64_t gen_seed = 0;
  gen->add_option("--world", gen_world, "world config")->required();
  gen->add_option("--train", gen_train, "real training dataset")->required();
  gen->add_option("--clf", gen_clf, "real-data classifier (CLF1)");
  gen->add_option("--filter", gen_filter, "calibrated filter (RID1)");
  gen->add_option("--out", gen_out, "released dataset path");
  gen->add_option("--audit", gen_audit, "audit sidecar path");
  gen_sched.attach(gen);
  gen->add_option("--batch", gen_batch, "candidate batch size");
  gen->add_option("--guidance", gen_guidance, "initial guidance strength");
  gen->add_option("--guidance-decrement", gen_decrement, "fallback decrement");
  gen->add_option("--guidance-floor", gen_floor, "minimum guidance strength");
  gen->add_option("--max-rounds", gen_rounds, "fallback round budget");
  gen->add_option("--kernel-width", gen_kernel, "condition kernel width");
  gen->add_option("--extractor", gen_extractor,
                  "condition source: pseudo|classifier");
  gen->add_flag("--unconditional-baseline", gen_baseline,
                "emit the w=0, no-selection ablation instead");
  gen->add_option("--seed", gen_seed, "global seed");

  // evaluate
  auto* ev = app.add_subcommand("evaluate", "FID, IRS, downstream gap, audit");
  std::string ev_real, ev_synth, ev_clf, ev_world, ev_audit,
      ev_out = "report.json";
  int ev_epochs = 100;
  double ev_lr = 0.5;
  std::uint64_t ev_seed = 0;
  ev->add_option("--real", ev_real, "real dataset with splits")->required();
  ev->add_option("--synth", ev_synth, "synthetic dataset")->required();
  ev->add_option("--clf-real", ev_clf, "real classifier (reserved)");
  ev->add_option("--world", ev_world, "world config (for extractor dims)");
  ev->add_option("--audit", ev_audit, "audit sidecar; adds the privacy attack");
  ev->add_option("--out", ev_out, "report path (.json; .csv written beside)");
  ev->add_option("--epochs", ev_epochs, "downstream training epochs");
  ev->add_option("--lr", ev_lr, "downstream learning rate");
  ev->add_option("--seed", ev_seed, "global seed");

  // audit
  auto* au = app.add_subcommand("audit", "identity linkage attack");
  std::string au_released, au_sidecar, au_real, au_world;
  au->add_option("--released", au_released, "released dataset")->required();
  au->add_option("--sidecar", au_sidecar, "audit sidecar (AUD1)")->required();
  au->add_option("--real", au_real, "real dataset")->required();
  au->add_option("--world", au_world, "world config (for extractor dims)");

  // cross-site
  auto* cs = app.add_subcommand("cross-site", "multi-site data sharing scenario");
  std::vector<std::string> cs_sites;
  std::string cs_out = "cross_site";
  int cs_records = 500, cs_epochs = 100, cs_batch = 32;
  double cs_lr = 0.5, cs_guidance = 1.2, cs_kernel = 0.15;
  ScheduleFlags cs_sched;
  std::uint64_t cs_seed = 0;
  cs->add_option("--sites", cs_sites, "world configs, one per site")->required();
  cs->add_option("--out", cs_out, "output directory");
  cs->add_option("--n-records", cs_records, "records per site");
  cs_sched.attach(cs);
  cs->add_option("--batch", cs_batch, "candidate batch size");
  cs->add_option("--guidance", cs_guidance, "guidance strength");
  cs->add_option("--kernel-width", cs_kernel, "condition kernel width");
  cs->add_option("--epochs", cs_epochs, "classifier epochs");
  cs->add_option("--lr", cs_lr, "classifier learning rate");
  cs->add_option("--seed", cs_seed, "global seed");

  // table
  auto* tb = app.add_subcommand("table", "assemble CSV tables from reports");
  std::string tb_mode = "table1", tb_cross, tb_out = "table.csv";
  std::vector<std::string> tb_reports, tb_datasets;
  int tb_folds = 10, tb_epochs = 100;
  double tb_lr = 0.5;
  bool tb_overlap = false;
  std::uint64_t tb_seed = 0;
  tb->add_option("--mode", tb_mode, "table1|table2|ranking");
  tb->add_option("--reports", tb_reports, "name=report.json pairs (table1)");
  tb->add_option("--cross", tb_cross, "cross_site.json (table2)");
  tb->add_option("--datasets", tb_datasets, "name=data.dsv pairs (ranking)");
  tb->add_option("--folds", tb_folds, "cross-validation folds");
  tb->add_flag("--allow-subject-overlap", tb_overlap,
               "fold at record granularity");
  tb->add_option("--epochs", tb_epochs, "classifier epochs");
  tb->add_option("--lr", tb_lr, "classifier learning rate");
  tb->add_option("--seed", tb_seed, "global seed");
  tb->add_option("--out", tb_out, "output CSV path");

  CLI11_PARSE(app, argc, argv);

  try {
    if (mk->parsed())
      return cmd_make_world(mk_config, mk_preset, mk_overrides, mk_out,
                            mk_records, mk_fractions, mk_single_label, mk_seed,
                            mk_pairs);
    if (tr->parsed())
      return cmd_train(tr_on, tr_train, tr_val, tr_out, tr_epochs, tr_lr,
                       tr_seed);
    if (gen->parsed()) {
      if (!gen_baseline && (gen_clf.empty() || gen_filter.empty()))
        throw ConfigError("generate: --clf and --filter are required");
      return cmd_generate(gen_world, gen_train, gen_clf, gen_filter, gen_out,
                          gen_audit, gen_sched, gen_batch, gen_guidance,
                          gen_decrement, gen_floor, gen_rounds, gen_kernel,
                          gen_extractor, gen_baseline, gen_seed);
    }
    if (ev->parsed())
      return cmd_evaluate(ev_real, ev_synth, ev_clf, ev_world, ev_audit, ev_out,
                          ev_epochs, ev_lr, ev_seed);
    if (au->parsed()) return cmd_audit(au_released, au_sidecar, au_real, au_world);
    if (cs->parsed())
      return cmd_cross_site(cs_sites, cs_out, cs_records, cs_sched, cs_batch,
                            cs_guidance, cs_kernel, cs_epochs, cs_lr, cs_seed);
    if (tb->parsed())
      return cmd_table(tb_mode, tb_reports, tb_cross, tb_datasets, tb_folds,
                       tb_overlap, tb_epochs, tb_lr, tb_seed, tb_out);
  } catch (const ConfigError& e) {
    std::cerr << "error: config: " << e.what() << "\n";
    return 2;
  } catch (const DataError& e) {
    std::cerr << "error: data: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
  return 2;
}
