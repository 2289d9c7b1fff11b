// lgen: source selection, dual-encoder training, evaluation and analysis
// over VEMB embedding files.
//
// Exit codes: 0 success, 1 usage error, 2 data error, 3 verification failure.

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "lgen/lgen.hpp"

namespace fs = std::filesystem;
using namespace lgen;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitData = 2;
constexpr int kExitVerify = 3;

struct Options {
  std::string config;
  std::string echo;
  std::optional<std::string> preset, task, mode, target, out_dir, checkpoint;
  std::optional<std::uint64_t> seed, cka_seed, gc_seed;
  std::optional<double> lambda, lr;
  std::optional<int> batch_size, max_epochs, max_steps, eval_every;
  std::optional<std::size_t> hidden, arc_dim, embedding_dim, sample_size, fixtures;
  std::vector<double> lambda_grid;
  std::vector<std::string> sources, dev, eval, candidates;
  bool no_inv = false, no_spc = false, force_distinct = false;
};

void add_run_options(CLI::App* sub, Options& o) {
  sub->add_option("-c,--config", o.config, "JSON config file");
  sub->add_option("--echo-config", o.echo, "write the resolved config to this file");
  sub->add_option("--preset", o.preset, "mbert-like or xlmr-like");
  sub->add_option("--seed", o.seed, "random seed");
  sub->add_option("-o,--out", o.out_dir, "output directory");
}

void add_train_options(CLI::App* sub, Options& o) {
  sub->add_option("--task", o.task, "dep or pos");
  sub->add_option("--mode", o.mode, "baseline, alignment or vacai");
  sub->add_option("--lambda", o.lambda, "gradient reversal strength");
  sub->add_option("--lr", o.lr, "Adam learning rate");
  sub->add_option("--batch-size", o.batch_size);
  sub->add_option("--max-epochs", o.max_epochs);
  sub->add_option("--max-steps", o.max_steps);
  sub->add_option("--eval-every", o.eval_every, "dev evaluation period in steps");
  sub->add_option("--hidden", o.hidden, "encoder/discriminator hidden width (0 = d)");
  sub->add_option("--arc-dim", o.arc_dim, "arc projection width (0 = d)");
  sub->add_flag("--no-inv-loss", o.no_inv, "drop the invariant-branch loss");
  sub->add_flag("--no-spc-loss", o.no_spc, "drop the specific-branch loss");
  sub->add_option("--source", o.sources, "source corpus id:conllu[:vemb[:tokens]] (twice)");
  sub->add_option("--dev", o.dev, "dev corpus spec (repeatable)");
  sub->add_option("--embedding-dim", o.embedding_dim, "expected VEMB width (0 = any)");
}

// Only options given on the command line become overrides.
Json overrides_from(const Options& o) {
  Json j = Json::object();
  auto set = [&](const char* section, const char* key, auto value) { j[section][key] = value; };
  if (o.preset) j["preset"] = *o.preset;
  if (o.seed) j["seed"] = *o.seed;
  if (o.task) j["task"] = *o.task;
  if (o.mode) set("train", "mode", *o.mode);
  if (o.lambda) set("train", "lambda", *o.lambda);
  if (o.lr) set("train", "lr", *o.lr);
  if (o.batch_size) set("train", "batch_size", *o.batch_size);
  if (o.max_epochs) set("train", "max_epochs", *o.max_epochs);
  if (o.max_steps) set("train", "max_steps", *o.max_steps);
  if (o.eval_every) set("train", "eval_every", *o.eval_every);
  if (o.hidden) set("train", "hidden", *o.hidden);
  if (o.arc_dim) set("train", "arc_dim", *o.arc_dim);
  if (o.no_inv) set("train", "use_inv_loss", false);
  if (o.no_spc) set("train", "use_spc_loss", false);
  if (!o.lambda_grid.empty()) set("train", "lambda_grid", o.lambda_grid);
  if (!o.sources.empty()) set("data", "sources", o.sources);
  if (!o.dev.empty()) set("data", "dev", o.dev);
  if (!o.eval.empty()) set("data", "eval", o.eval);
  if (!o.candidates.empty()) set("data", "candidates", o.candidates);
  if (o.target) set("data", "target", *o.target);
  if (o.embedding_dim) set("data", "embedding_dim", *o.embedding_dim);
  if (o.force_distinct) set("data", "force_distinct", true);
  if (o.sample_size) set("cka", "sample_size", *o.sample_size);
  if (o.cka_seed) set("cka", "seed", *o.cka_seed);
  if (o.fixtures) set("gradcheck", "fixtures", *o.fixtures);
  if (o.gc_seed) set("gradcheck", "seed", *o.gc_seed);
  if (o.out_dir) set("output", "dir", *o.out_dir);
  if (o.checkpoint) set("output", "checkpoint", *o.checkpoint);
  return j;
}

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  write_binary_file(path.string(), text);
}

// Resolves the config and echoes it to stderr, the output directory and the
// requested echo file.
Json resolve_and_echo(const Options& o, const std::string& command) {
  const Json file = o.config.empty() ? Json() : read_config_file(o.config);
  const Json doc = resolve_config(file, overrides_from(o));
  const std::string text = doc.dump(2) + "\n";
  std::cerr << "# lgen " << command << " resolved config\n" << text;
  const std::string dir = doc["output"]["dir"].get<std::string>();
  if (!dir.empty()) write_text(fs::path(dir) / (command + ".config.json"), text);
  if (!o.echo.empty()) write_text(o.echo, text);
  return doc;
}

std::size_t embedding_dim(const Json& doc) { return doc["data"]["embedding_dim"].get<std::size_t>(); }

std::vector<VarietyCorpus> load_list(const Json& doc, const char* key) {
  std::vector<VarietyCorpus> out;
  for (const std::string& spec : spec_list(doc, key)) out.push_back(load_spec(spec, embedding_dim(doc)));
  return out;
}

std::vector<const VarietyCorpus*> pointers(const std::vector<VarietyCorpus>& v) {
  std::vector<const VarietyCorpus*> out;
  for (const auto& c : v) out.push_back(&c);
  return out;
}

std::vector<VarietyCorpus> load_sources(const Json& doc) {
  std::vector<VarietyCorpus> src = load_list(doc, "sources");
  if (src.size() != 2) throw UsageError("exactly two --source corpora are required, got " + std::to_string(src.size()));
  return src;
}

// Writes to <out>/<name> when an output directory is set, stdout otherwise.
void emit(const Json& doc, const std::string& name, const std::string& text) {
  const std::string dir = doc["output"]["dir"].get<std::string>();
  if (dir.empty()) {
    std::cout << text;
  } else {
    write_text(fs::path(dir) / name, text);
    std::cerr << "wrote " << (fs::path(dir) / name).string() << "\n";
  }
}

std::string checkpoint_path(const Json& doc) {
  std::string p = doc["output"]["checkpoint"].get<std::string>();
  const std::string dir = doc["output"]["dir"].get<std::string>();
  if (p.empty() && !dir.empty()) p = (fs::path(dir) / "model.ckpt").string();
  return p;
}

// ---------------------------------------------------------------------------

int cmd_select_sources(const Options& o) {
  const Json doc = resolve_and_echo(o, "select-sources");
  const std::string target_spec = doc["data"]["target"].get<std::string>();
  if (target_spec.empty()) throw UsageError("select-sources needs --target");
  const VarietyCorpus target = load_spec(target_spec, embedding_dim(doc));
  const std::vector<VarietyCorpus> cands = load_list(doc, "candidates");
  if (cands.empty()) throw UsageError("select-sources needs at least one --candidate");
  const SelectionReport rep = topping_pair(target, pointers(cands), doc["data"]["force_distinct"].get<bool>());

  std::string tsv = "# target " + rep.target_id + "; tj over all sentences of each corpus file\n";
  tsv += "variety_id\tcentroid_distance\ttj_score\n";
  Json report;
  report["target"] = rep.target_id;
  report["tj_scope"] = "all sentences";
  report["candidates"] = Json::array();
  for (const VarietyCorpus& c : cands) {
    double dist = 0.0, tj = 0.0;
    for (const auto& r : rep.sim_ranking)
      if (r.variety_id == c.variety_id) dist = r.score;
    for (const auto& r : rep.overlap_ranking)
      if (r.variety_id == c.variety_id) tj = r.score;
    tsv += c.variety_id + "\t" + format_number(dist) + "\t" + format_number(tj) + "\n";
    report["candidates"].push_back({{"variety_id", c.variety_id}, {"centroid_distance", dist}, {"tj_score", tj}});
  }
  tsv += "pair\t" + rep.selected_pair.first + "\t" + rep.selected_pair.second + "\n";
  report["pair"] = {{"sim", rep.selected_pair.first}, {"overlap", rep.selected_pair.second}};
  std::cout << tsv;
  const std::string dir = doc["output"]["dir"].get<std::string>();
  if (!dir.empty()) write_text(fs::path(dir) / "selection.json", report.dump(2) + "\n");
  return kExitOk;
}

int cmd_train(const Options& o) {
  const Json doc = resolve_and_echo(o, "train");
  const TrainConfig cfg = train_config(doc);
  const TaskKind task = config_task(doc);
  const std::vector<VarietyCorpus> src = load_sources(doc);
  const std::vector<VarietyCorpus> dev = load_list(doc, "dev");
  TrainResult r = train(src[0], src[1], cfg, task, pointers(dev));
  emit(doc, "trace.tsv", format_trace(r.trace));
  const std::string ckpt = checkpoint_path(doc);
  if (!ckpt.empty()) {
    if (fs::path(ckpt).has_parent_path()) fs::create_directories(fs::path(ckpt).parent_path());
    save_checkpoint(ckpt, r.model);
    std::cerr << "wrote " << ckpt << "\n";
  }
  std::cerr << "steps " << r.trace.size() << ", best step " << r.best_step;
  if (r.best_dev_metric) std::cerr << ", best dev " << format_number(*r.best_dev_metric);
  std::cerr << "\n";
  return kExitOk;
}

std::string eval_table(const DualEncoderModel& model, const std::vector<VarietyCorpus>& corpora) {
  std::string out = model.task == TaskKind::dep ? "variety\tsentences\twords\tuas\tlas\n"
                                                : "variety\tsentences\twords\taccuracy\tprecision\trecall\tf1\n";
  auto row = [&](const std::string& id, const EvalResult& e) {
    out += id + "\t" + std::to_string(e.sentences) + "\t" + std::to_string(e.words());
    if (model.task == TaskKind::dep) {
      out += "\t" + format_number(e.attachment.uas()) + "\t" + format_number(e.attachment.las());
    } else {
      out += "\t" + format_number(e.tags.accuracy()) + "\t" + format_number(e.tags.precision()) + "\t" +
             format_number(e.tags.recall()) + "\t" + format_number(e.tags.f1());
    }
    out += "\n";
  };
  for (const VarietyCorpus& c : corpora) row(c.variety_id, evaluate(model, c));
  if (corpora.size() > 1) row("all", evaluate(model, pointers(corpora)));
  return out;
}

int cmd_evaluate(const Options& o) {
  const Json doc = resolve_and_echo(o, "evaluate");
  const std::string ckpt = doc["output"]["checkpoint"].get<std::string>();
  if (ckpt.empty()) throw UsageError("evaluate needs --checkpoint");
  const DualEncoderModel model = load_checkpoint(ckpt);
  const std::vector<VarietyCorpus> corpora = load_list(doc, "eval");
  if (corpora.empty()) throw UsageError("evaluate needs at least one --eval corpus");
  emit(doc, "eval.tsv", eval_table(model, corpora));
  return kExitOk;
}

int cmd_analyze_cka(const Options& o) {
  const Json doc = resolve_and_echo(o, "analyze-cka");
  const std::vector<VarietyCorpus> corpora = load_list(doc, "eval");
  if (corpora.size() < 2) throw UsageError("analyze-cka needs at least two --eval corpora");
  std::optional<DualEncoderModel> model;
  const std::string ckpt = doc["output"]["checkpoint"].get<std::string>();
  if (!ckpt.empty()) model = load_checkpoint(ckpt);
  const CkaReport rep = cka_report(model ? &*model : nullptr, pointers(corpora),
                                   doc["cka"]["sample_size"].get<std::size_t>(), doc["cka"]["seed"].get<std::uint64_t>());
  std::cout << format_cka_tsv(rep);
  const std::string dir = doc["output"]["dir"].get<std::string>();
  if (!dir.empty()) {
    write_text(fs::path(dir) / "cka.tsv", format_cka_tsv(rep));
    for (std::size_t i = 0; i < rep.variety_ids.size(); ++i) {
      write_text(fs::path(dir) / ("features_" + rep.variety_ids[i] + ".csv"), format_features_csv(rep.features[i]));
    }
  }
  return kExitOk;
}

int cmd_synth(const Options& o) {
  const Json doc = resolve_and_echo(o, "synth");
  const std::string dir = doc["output"]["dir"].get<std::string>();
  if (dir.empty()) throw UsageError("synth needs --out");
  const SynthConfig cfg = synth_config(doc);
  const SynthCorpora data = generate(cfg);
  for (const auto* split : {&data.train, &data.dev, &data.test}) {
    for (const VarietyCorpus& c : *split) {
      const std::string stem = c.variety_id + "." + to_string(c.split);
      write_text(fs::path(dir) / (stem + ".conllu"), write_conllu(c.sentences));
      write_text(fs::path(dir) / (stem + ".tok"), write_token_sidecar(c));
      write_embeddings((fs::path(dir) / (stem + ".vemb")).string(), c);
    }
  }
  write_text(fs::path(dir) / "manifest.txt", data.manifest);
  std::cout << data.manifest;
  return kExitOk;
}

int cmd_gradcheck(const Options& o) {
  const Json doc = resolve_and_echo(o, "gradcheck");
  const GradSuiteReport rep = run_gradcheck_suite(doc["gradcheck"]["seed"].get<std::uint64_t>(),
                                                  doc["gradcheck"]["fixtures"].get<std::size_t>());
  std::cout << format_gradcheck(rep);
  char line[96];
  std::snprintf(line, sizeof line, "fixtures %zu, max relative error %.3e, tolerance %.0e\n", rep.fixtures,
                rep.max_error(), kGradTolerance);
  std::cerr << line;
  return rep.passed() ? kExitOk : kExitVerify;
}

int cmd_sweep_lambda(const Options& o) {
  const Json doc = resolve_and_echo(o, "sweep-lambda");
  const TrainConfig cfg = train_config(doc);
  const std::vector<VarietyCorpus> src = load_sources(doc);
  const std::vector<VarietyCorpus> dev = load_list(doc, "dev");
  const auto rows = lambda_sweep(src[0], src[1], cfg, config_task(doc), pointers(dev));
  std::string out = "lambda\tdev_metric\tbest_step\n";
  for (const SweepRow& r : rows) {
    out += format_number(r.lambda) + "\t" + format_number(r.dev_metric) + "\t" + std::to_string(r.best_step) + "\n";
  }
  emit(doc, "sweep.tsv", out);
  return kExitOk;
}

int cmd_ablate(const Options& o) {
  const Json doc = resolve_and_echo(o, "ablate");
  const TrainConfig cfg = train_config(doc);
  const std::vector<VarietyCorpus> src = load_sources(doc);
  const std::vector<VarietyCorpus> dev = load_list(doc, "dev");
  const std::vector<VarietyCorpus> eval = load_list(doc, "eval");
  const auto rows = ablation_suite(src[0], src[1], cfg, config_task(doc), pointers(dev), pointers(eval));
  std::string out = "row\tuse_inv_loss\tuse_spc_loss";
  for (const VarietyCorpus& e : eval) out += "\t" + e.variety_id;
  out += "\tmean\n";
  for (const AblationRow& r : rows) {
    out += r.label + "\t" + (r.flags.use_inv_loss ? "1" : "0") + "\t" + (r.flags.use_spc_loss ? "1" : "0");
    for (double m : r.metrics) out += "\t" + format_number(m);
    out += "\t" + format_number(r.mean()) + "\n";
  }
  emit(doc, "ablation.tsv", out);
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"lgen: source selection and dual-encoder training for low-resource varieties"};
  app.require_subcommand(1, 1);
  Options o;

  auto* sel = app.add_subcommand("select-sources", "rank candidate sources for a target variety");
  add_run_options(sel, o);
  sel->add_option("--target", o.target, "target corpus spec")->required(false);
  sel->add_option("--candidate", o.candidates, "candidate corpus spec (repeatable)");
  sel->add_option("--embedding-dim", o.embedding_dim);
  sel->add_flag("--force-distinct", o.force_distinct, "never select the same variety twice");

  auto* tr = app.add_subcommand("train", "train on two source varieties");
  add_run_options(tr, o);
  add_train_options(tr, o);
  tr->add_option("--checkpoint", o.checkpoint, "checkpoint output path");

  auto* ev = app.add_subcommand("evaluate", "score a checkpoint on labeled corpora");
  add_run_options(ev, o);
  ev->add_option("--checkpoint", o.checkpoint, "checkpoint to load");
  ev->add_option("--eval", o.eval, "evaluation corpus spec (repeatable)");
  ev->add_option("--embedding-dim", o.embedding_dim);

  auto* ck = app.add_subcommand("analyze-cka", "pairwise linear CKA between varieties");
  add_run_options(ck, o);
  ck->add_option("--checkpoint", o.checkpoint, "model whose joint features are compared (omit for raw features)");
  ck->add_option("--eval", o.eval, "corpus spec (repeatable)");
  ck->add_option("--sample-size", o.sample_size, "rows per variety (0 = smallest corpus)");
  ck->add_option("--cka-seed", o.cka_seed, "row sampling seed");
  ck->add_option("--embedding-dim", o.embedding_dim);

  auto* sy = app.add_subcommand("synth", "write a synthetic variety suite");
  add_run_options(sy, o);

  auto* gc = app.add_subcommand("gradcheck", "finite-difference check of every gradient");
  add_run_options(gc, o);
  gc->add_option("--fixtures", o.fixtures, "number of seeded fixtures");
  gc->add_option("--gradcheck-seed", o.gc_seed, "fixture seed");

  auto* sw = app.add_subcommand("sweep-lambda", "train once per lambda in the grid");
  add_run_options(sw, o);
  add_train_options(sw, o);
  sw->add_option("--lambda-grid", o.lambda_grid, "lambda values")->delimiter(',');

  auto* ab = app.add_subcommand("ablate", "loss-component ablation");
  add_run_options(ab, o);
  add_train_options(ab, o);
  ab->add_option("--eval", o.eval, "evaluation corpus spec (repeatable)");

  if (argc < 2) {
    std::cerr << app.help();
    return kExitUsage;
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e, std::cerr, std::cerr);
    return kExitUsage;
  }

  try {
    if (*sel) return cmd_select_sources(o);
    if (*tr) return cmd_train(o);
    if (*ev) return cmd_evaluate(o);
    if (*ck) return cmd_analyze_cka(o);
    if (*sy) return cmd_synth(o);
    if (*gc) return cmd_gradcheck(o);
    if (*sw) return cmd_sweep_lambda(o);
    if (*ab) return cmd_ablate(o);
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitData;
  } catch (const nlohmann::json::exception& e) {
    std::cerr << "usage error: config: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::filesystem::filesystem_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitData;
  }
  return kExitUsage;
}
