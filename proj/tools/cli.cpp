#include "cli.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <ostream>
#include <sstream>
#include <string>

#include "ggsa/ggsa.hpp"

namespace ggsa::cli {
namespace {

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

struct ModelFlags {
  std::string config_path;
  std::uint64_t seed = 1;
  bool seed_set = false;
  std::string variant;
  std::string composition;

  void add(CLI::App& app) {
    app.add_option("--config", config_path, "key=value model config file");
    app.add_option("--seed", seed, "random seed")->each([this](const std::string&) { seed_set = true; });
    app.add_option("--variant", variant, "encoder variant")->check(CLI::IsMember({"ggsa", "iggsa", "global"}));
    app.add_option("--composition", composition, "composition module")
        ->check(CLI::IsMember({"maxpool", "attention"}));
  }

  ModelConfig resolve(ModelConfig base = {}) const {
    ModelConfig cfg = config_path.empty() ? base : load_config_file(config_path, base);
    if (seed_set) cfg.seed = seed;
    if (!variant.empty()) cfg.variant = parse_variant(variant);
    if (!composition.empty()) cfg.composition = parse_composition(composition);
    cfg.validate();
    return cfg;
  }
};

// ---- gen-data

struct GenDataCmd {
  std::string out_dir;
  std::string task = "topic";
  std::uint64_t seed = 7;
  std::size_t train = 0, dev = 0, test = 0, candidates = 0, vocab = 0;
  std::vector<std::string> overrides;

  void add(CLI::App& app) {
    app.add_option("--out", out_dir, "output directory")->required();
    app.add_option("--task", task, "synthetic task")->check(CLI::IsMember({"topic", "polysemy"}));
    app.add_option("--seed", seed, "generator seed");
    app.add_option("--train", train, "training questions");
    app.add_option("--dev", dev, "dev questions");
    app.add_option("--test", test, "test questions");
    app.add_option("--candidates", candidates, "candidates per question");
    app.add_option("--vocab", vocab, "vocabulary size");
    app.add_option("--spec", overrides, "generator field override, key=value (repeatable)");
  }

  int run(std::ostream& out) const {
    SyntheticSpec spec = parse_task(task) == TaskKind::kTopic ? SyntheticSpec::topic_default()
                                                              : SyntheticSpec::polysemy_default();
    spec.seed = seed;
    if (train) spec.train_questions = train;
    if (dev) spec.dev_questions = dev;
    if (test) spec.test_questions = test;
    if (candidates) spec.candidates = candidates;
    if (vocab) spec.vocab_size = vocab;
    for (const std::string& kv : overrides) {
      const auto eq = kv.find('=');
      if (eq == std::string::npos) throw ConfigError("--spec expects key=value, got '" + kv + "'");
      set_spec_value(spec, std::string_view(kv).substr(0, eq), std::string_view(kv).substr(eq + 1));
    }
    const Dataset ds = generate_dataset(spec);
    write_dataset(out_dir, ds);
    out << "generated " << to_string(spec.task) << " dataset in " << out_dir << ": " << ds.train.size() << "/"
        << ds.dev.size() << "/" << ds.test.size() << " questions\n";
    out << "task=" << to_string(spec.task) << "\nseed=" << spec.seed << "\nvocab_size=" << spec.vocab_size
        << "\ntrain=" << ds.train.size() << "\ndev=" << ds.dev.size() << "\ntest=" << ds.test.size() << "\n";
    return kExitOk;
  }
};

// ---- train

struct TrainCmd {
  ModelFlags model;
  std::string data_dir;
  std::string out_dir;
  std::string loss = "pairwise";
  std::size_t epochs = 20;
  std::size_t batch = 32;
  std::size_t negatives = 1;
  double lr = 1e-4;
  double target = 2.0;
  bool freeze = false;

  void add(CLI::App& app) {
    model.add(app);
    app.add_option("--data", data_dir, "dataset directory (train.tsv, dev.tsv, test.tsv)")->required();
    app.add_option("--out", out_dir, "directory for model.ckpt and train_log.txt");
    app.add_option("--loss", loss, "training loss")->check(CLI::IsMember({"pairwise", "pointwise"}));
    app.add_option("--epochs", epochs, "epochs");
    app.add_option("--batch-size", batch, "questions per optimizer step");
    app.add_option("--negatives", negatives, "sampled negatives per question (pairwise)");
    app.add_option("--lr", lr, "learning rate");
    app.add_option("--target-p1", target, "stop once dev P@1 reaches this value");
    app.add_flag("--freeze-embeddings", freeze, "keep the embedding table fixed");
  }

  template <typename T>
  int run_typed(const ModelConfig& cfg, const Dataset& data, std::ostream& out) const {
    EncoderParams<T> params = EncoderParams<T>::init(cfg);
    TrainConfig tc;
    tc.loss = parse_loss(loss);
    tc.epochs = epochs;
    tc.batch_size = batch;
    tc.negatives = negatives;
    tc.optimizer.learning_rate = lr;
    tc.seed = cfg.seed;
    tc.freeze_embeddings = freeze;
    tc.target_dev_p_at_1 = target;
    std::ofstream log_file;
    if (!out_dir.empty()) {
      std::filesystem::create_directories(out_dir);
      log_file.open(std::filesystem::path(out_dir) / "train_log.txt");
    }
    tc.on_epoch = [&](const EpochLog& e) {
      std::ostringstream line;
      line << "epoch=" << e.epoch << " train_loss=" << fmt(e.train_loss) << " dev_p_at_1=" << fmt(e.dev_p_at_1)
           << " dev_mrr=" << fmt(e.dev_mrr) << " seconds=" << fmt(e.seconds) << "\n";
      out << line.str() << std::flush;
      if (log_file) log_file << line.str();
    };
    out << "training " << to_string(cfg.variant) << " + " << to_string(cfg.composition) << " with " << loss
        << " loss on " << data.train.size() << " questions\n";
    const TrainResult result = train(cfg, params, tc, data);
    if (result.diverged) throw TrainingDivergedError(result.divergence + " (best-dev parameters restored)");
    out << "best_epoch=" << result.best_epoch << "\nbest_dev_p_at_1=" << fmt(result.best_dev_p_at_1) << "\n";
    if (!data.test.empty()) {
      const RankMetrics test = evaluate(cfg, params, data.test, scoring_for(tc.loss));
      out << "test_p_at_1=" << fmt(test.p_at_1) << "\ntest_mrr=" << fmt(test.mrr) << "\n";
    }
    if (!out_dir.empty()) {
      const auto path = std::filesystem::path(out_dir) / "model.ckpt";
      save_checkpoint(path, cfg, params);
      out << "checkpoint=" << path.string() << "\n";
    }
    return kExitOk;
  }

  int run(std::ostream& out) const {
    const ModelConfig cfg = model.resolve();
    const Dataset data = read_dataset(data_dir);
    return cfg.precision == Precision::kDouble ? run_typed<double>(cfg, data, out) : run_typed<float>(cfg, data, out);
  }
};

// ---- eval

struct EvalCmd {
  std::string checkpoint;
  std::string data_dir;
  std::string split = "test";
  std::string loss = "pairwise";

  void add(CLI::App& app) {
    app.add_option("--checkpoint", checkpoint, "model checkpoint")->required();
    app.add_option("--data", data_dir, "dataset directory")->required();
    app.add_option("--split", split, "split to score")->check(CLI::IsMember({"train", "dev", "test"}));
    app.add_option("--loss", loss, "loss the model was trained with (selects scoring)")
        ->check(CLI::IsMember({"pairwise", "pointwise"}));
  }

  template <typename T>
  RankMetrics score(const Checkpoint& ckpt, const std::vector<QAExample>& examples) const {
    EncoderParams<T> params = checkpoint_params<T>(ckpt);
    check_examples(examples, ckpt.config.vocab_size, ckpt.config.max_question_len, ckpt.config.max_answer_len);
    return evaluate(ckpt.config, params, examples, scoring_for(parse_loss(loss)));
  }

  int run(std::ostream& out) const {
    const Checkpoint ckpt = load_checkpoint(checkpoint);
    const Dataset data = read_dataset(data_dir);
    const auto& examples = split == "train" ? data.train : split == "dev" ? data.dev : data.test;
    const RankMetrics m = ckpt.config.precision == Precision::kDouble ? score<double>(ckpt, examples)
                                                                      : score<float>(ckpt, examples);
    out << split << ": P@1 " << fmt(m.p_at_1) << ", MRR " << fmt(m.mrr) << " over " << m.questions
        << " questions\n";
    out << "split=" << split << "\nquestions=" << m.questions << "\np_at_1=" << fmt(m.p_at_1) << "\nmrr=" << fmt(m.mrr)
        << "\n";
    return kExitOk;
  }
};

// ---- bench

struct BenchCmd {
  BenchOptions opt;
  std::vector<std::string> kinds;
  std::string out_dir;

  void add(CLI::App& app) {
    app.add_option("--lengths", opt.lengths, "sequence lengths")->delimiter(',');
    app.add_option("--dim", opt.dim, "model width D");
    app.add_option("--heads", opt.heads, "heads n");
    app.add_option("--group-size", opt.group_size, "group size l");
    app.add_option("--window", opt.window, "local window (odd; default l rounded up to odd)");
    app.add_option("--kinds", kinds, "subset of global,group,local")
        ->delimiter(',')
        ->check(CLI::IsMember({"global", "group", "local"}));
    app.add_option("--reps", opt.reps, "timed repetitions");
    app.add_option("--warmups", opt.warmups, "untimed warm-up runs");
    app.add_option("--seed", opt.seed, "input seed");
    app.add_option("--note", opt.note, "free-text machine note");
    app.add_option("--out", out_dir, "directory for bench.csv and bench_records.txt");
  }

  int run(std::ostream& out) {
    if (!kinds.empty()) {
      opt.kinds.clear();
      for (const auto& k : kinds) opt.kinds.push_back(parse_attention_kind(k));
    }
    const auto reports = bench_attention(opt);
    std::ostringstream csv, records;
    csv << kBenchCsvHeader << "\n";
    for (const auto& r : reports) {
      csv << to_csv_row(r) << "\n";
      records << to_record(r) << "\n";
    }
    out << csv.str() << records.str();
    if (!out_dir.empty()) {
      std::filesystem::create_directories(out_dir);
      std::ofstream(std::filesystem::path(out_dir) / "bench.csv") << csv.str();
      std::ofstream(std::filesystem::path(out_dir) / "bench_records.txt") << records.str();
    }
    return kExitOk;
  }
};

// ---- gradcheck

struct GradcheckCmd {
  ModelFlags model;
  std::string loss = "pairwise";
  double tolerance = kGradcheckTolerance;
  std::string out_dir;

  void add(CLI::App& app) {
    model.add(app);
    app.add_option("--loss", loss, "loss to differentiate")->check(CLI::IsMember({"pairwise", "pointwise"}));
    app.add_option("--tolerance", tolerance, "maximum relative error");
    app.add_option("--out", out_dir, "directory for gradcheck.txt");
  }

  int run(std::ostream& out) const {
    GradcheckOptions opt = GradcheckOptions::toy();
    opt.model = model.resolve(opt.model);
    opt.loss = parse_loss(loss);
    opt.seed = opt.model.seed;
    const GradcheckReport r = gradcheck(opt);
    std::ostringstream text;
    for (const auto& p : r.params)
      text << "param=" << p.name << " elements=" << p.elements << " max_rel_error=" << fmt(p.max_rel_error) << "\n";
    text << "elements=" << r.elements << "\nloss=" << fmt(r.loss) << "\nmax_rel_error=" << fmt(r.max_rel_error)
         << "\nworst_param=" << r.worst_param << "\ntolerance=" << fmt(tolerance)
         << "\npassed=" << (r.max_rel_error <= tolerance ? 1 : 0) << "\n";
    out << "gradient check over " << r.elements << " elements: max relative error " << fmt(r.max_rel_error) << " ("
        << r.worst_param << ")\n"
        << text.str();
    if (!out_dir.empty()) {
      std::filesystem::create_directories(out_dir);
      std::ofstream(std::filesystem::path(out_dir) / "gradcheck.txt") << text.str();
    }
    return r.max_rel_error <= tolerance ? kExitOk : kExitGradcheckFailed;
  }
};

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Gated group self-attention encoders for answer selection"};
  app.name("ggsa");
  app.require_subcommand(1);

  GenDataCmd gen;
  TrainCmd tr;
  EvalCmd ev;
  BenchCmd bench;
  GradcheckCmd grad;
  gen.add(*app.add_subcommand("gen-data", "generate a synthetic answer-selection dataset"));
  tr.add(*app.add_subcommand("train", "train an encoder and save the best-dev checkpoint"));
  ev.add(*app.add_subcommand("eval", "score a dataset split with a checkpoint"));
  bench.add(*app.add_subcommand("bench", "time global, group and local-window attention"));
  grad.add(*app.add_subcommand("gradcheck", "compare gradients with central finite differences"));

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err) == 0 ? kExitOk : kExitUsage;
  }

  try {
    const std::string name = app.get_subcommands().front()->get_name();
    if (name == "gen-data") return gen.run(out);
    if (name == "train") return tr.run(out);
    if (name == "eval") return ev.run(out);
    if (name == "bench") return bench.run(out);
    return grad.run(out);
  } catch (const Error& e) {
    err << "error[" << e.category() << "]: " << e.what() << "\n";
    return kExitRuntime;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
}

}  // namespace ggsa::cli
