#include "commands.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>

#include "cqa/checkpoint.hpp"
#include "cqa/data.hpp"
#include "cqa/eval.hpp"
#include "cqa/model.hpp"
#include "cqa/training.hpp"

namespace cqa::cli {
namespace {

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

std::string fmt(const char* spec, double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, spec, x);
  return buf;
}

/// TrainConfig resolved from defaults, an optional key=value file, then
/// command-line overrides.
struct ConfigOptions {
  std::string file;
  std::map<std::string, std::string> overrides;
  std::set<std::string> explicit_keys;

  void attach(CLI::App& app) {
    app.add_option("--config", file, "key=value configuration file");
    for (const auto& key : TrainConfig::keys()) {
      app.add_option("--" + key, overrides[key], "override " + key);
    }
  }

  TrainConfig resolve(const CLI::App& app) {
    TrainConfig c;
    try {
      if (!file.empty()) {
        std::ifstream in(file);
        if (!in) throw UsageError("cannot read config file " + file);
        std::string line;
        for (std::size_t n = 1; std::getline(in, line); ++n) {
          auto hash = line.find('#');
          if (hash != std::string::npos) line.erase(hash);
          auto first = line.find_first_not_of(" \t\r");
          if (first == std::string::npos) continue;
          auto eq = line.find('=');
          if (eq == std::string::npos) {
            throw UsageError(file + ":" + std::to_string(n) + ": expected key=value");
          }
          auto trim = [](std::string s) {
            auto b = s.find_first_not_of(" \t\r");
            auto e = s.find_last_not_of(" \t\r");
            return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
          };
          const std::string key = trim(line.substr(0, eq));
          c.set(key, trim(line.substr(eq + 1)));
          explicit_keys.insert(key);
        }
      }
      for (const auto& key : TrainConfig::keys()) {
        if (app.count("--" + key) > 0) {
          c.set(key, overrides[key]);
          explicit_keys.insert(key);
        }
      }
      c.validate();
    } catch (const std::invalid_argument& e) {
      throw UsageError(e.what());
    }
    return c;
  }
};

Task parse_task(const std::string& s) {
  try {
    return task_from_string(s);
  } catch (const std::exception& e) {
    throw UsageError(e.what());
  }
}

void write_text(const std::string& path, const std::string& text, std::ostream& fallback) {
  if (path.empty() || path == "-") {
    fallback << text;
    return;
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << text;
}

/// Rejects explicitly configured architecture keys that disagree with the
/// checkpoint.
void check_architecture(const ModelConfig& ckpt, const TrainConfig& config,
                        const std::set<std::string>& explicit_keys) {
  const ModelConfig asked = config.model_config(ckpt.vocab_size);
  const auto have = ckpt.echo();
  const auto want = asked.echo();
  std::string mismatch;
  for (const auto& [key, value] : want) {
    if (!explicit_keys.count(key)) continue;
    auto it = have.find(key);
    if (it != have.end() && it->second != value) {
      mismatch += " " + key + " (checkpoint " + it->second + ", config " + value + ")";
    }
  }
  if (!mismatch.empty()) {
    throw std::runtime_error("architecture mismatch between checkpoint and config:" + mismatch);
  }
}

std::string json_summary(const EvalSummary& s) {
  std::ostringstream o;
  o << "{\"map\": " << fmt("%.6f", s.map) << ", \"precision\": " << fmt("%.6f", s.f1.precision)
    << ", \"recall\": " << fmt("%.6f", s.f1.recall) << ", \"f1\": " << fmt("%.6f", s.f1.f1)
    << ", \"queries\": " << s.queries << ", \"instances\": " << s.instances << "}\n";
  return o.str();
}

std::string format_rankings(const std::vector<RankedList>& lists) {
  std::ostringstream o;
  for (const auto& l : lists) {
    for (const auto& e : l.entries) {
      o << l.query_id << ' ' << e.candidate_id << ' ' << fmt("%.10f", e.score) << '\n';
    }
  }
  return o.str();
}

// ---------------------------------------------------------------- train

struct TrainArgs {
  ConfigOptions cfg;
  std::string train_path, dev_path, embeddings_path, checkpoint_path, log_path, init_path;
  std::string task = "A";
};

int cmd_train(TrainArgs& a, const CLI::App& app, std::ostream& out, std::ostream& err) {
  TrainConfig config = a.cfg.resolve(app);
  const Task task = parse_task(a.task);
  const Corpus full = load_corpus(a.train_path, task);
  Corpus train_part, dev_part;
  if (!a.dev_path.empty()) {
    train_part = full;
    dev_part = load_corpus(a.dev_path, task);
  } else {
    std::tie(train_part, dev_part) = split_dev(full, config.dev_fraction, config.seed);
  }

  Rng init_rng(config.seed);
  Vocabulary vocab;
  Model model;
  if (!a.init_path.empty()) {
    const Checkpoint pre = load_checkpoint(a.init_path);
    vocab = pre.vocab;
    ModelConfig target = config.model_config(vocab.size());
    target.embed_dim = pre.model.embed_dim;
    model = transfer_init(pre, target, init_rng);
  } else {
    vocab = Vocabulary::from_corpora({&train_part});
    std::optional<EmbeddingTable> table;
    if (!a.embeddings_path.empty()) {
      table = load_embeddings(a.embeddings_path, vocab, init_rng, config.init_scale);
      for (const auto& w : table->warnings) err << "warning: " << w << '\n';
      config.embed_dim = table->table.cols;
    }
    model = Model(config.model_config(vocab.size()), &init_rng);
    if (table) model.params().value(model.embedding()) = table->table;
  }

  const auto train_set = make_examples(train_part, vocab);
  const auto dev_set = dev_part.queries.empty() ? std::vector<Example>{}
                                                : make_examples(dev_part, vocab);
  std::ofstream log_file;
  if (!a.log_path.empty() && a.log_path != "-") {
    log_file.open(a.log_path, std::ios::binary | std::ios::trunc);
    if (!log_file) throw std::runtime_error("cannot write " + a.log_path);
  }
  std::ostream& log = log_file.is_open() ? log_file : out;
  for (const auto& [k, v] : config.echo()) log << "# " << k << '=' << v << '\n';
  log << "# task=" << to_string(task) << '\n';
  log << "# vocab_size=" << vocab.size() << '\n';
  log << "# train_instances=" << train_set.size() << '\n';
  log << "# dev_instances=" << dev_set.size() << '\n';
  if (!a.init_path.empty()) log << "# transfer_from=" << a.init_path << '\n';
  log.flush();

  TrainResult result;
  try {
    result = train(model, train_set, dev_set, config,
                   [&](const EpochRecord& r) { log << format_epoch(r) << std::endl; });
  } catch (const DivergenceError& e) {
    err << "error: " << e.what() << '\n';
    return kExitFailure;
  }
  log << "best_epoch=" << result.best_epoch << '\n';
  save_checkpoint(model, vocab, a.checkpoint_path, config.echo());
  return kExitOk;
}

// ---------------------------------------------------------------- evaluate / predict

struct ScoreArgs {
  ConfigOptions cfg;
  std::string checkpoint_path, corpus_path, output_path;
  std::string task = "A";
  bool random_baseline = false;
};

struct Loaded {
  Checkpoint ckpt;
  Model model;
  Corpus corpus;
  std::vector<Example> examples;
};

Loaded load_for_scoring(ScoreArgs& a, const TrainConfig& config) {
  Loaded l;
  l.ckpt = load_checkpoint(a.checkpoint_path);
  check_architecture(l.ckpt.model, config, a.cfg.explicit_keys);
  l.model = model_from_checkpoint(l.ckpt);
  l.corpus = load_corpus(a.corpus_path, parse_task(a.task));
  l.examples = make_examples(l.corpus, l.ckpt.vocab);
  return l;
}

int cmd_evaluate(ScoreArgs& a, const CLI::App& app, std::ostream& out) {
  const TrainConfig config = a.cfg.resolve(app);
  if (a.random_baseline) {
    const Corpus corpus = load_corpus(a.corpus_path, parse_task(a.task));
    Rng rng(config.seed);
    out << json_summary(summarize(random_baseline(corpus, rng), config.map_skip_unanswerable));
    return kExitOk;
  }
  if (a.checkpoint_path.empty()) throw UsageError("evaluate needs --checkpoint or --random-baseline");
  const Loaded l = load_for_scoring(a, config);
  out << json_summary(evaluate_model(l.model, l.examples, config.f1_threshold,
                                     config.map_skip_unanswerable));
  return kExitOk;
}

int cmd_predict(ScoreArgs& a, const CLI::App& app, std::ostream& out) {
  const TrainConfig config = a.cfg.resolve(app);
  const Loaded l = load_for_scoring(a, config);
  write_text(a.output_path, format_rankings(score_examples(l.model, l.examples).lists), out);
  return kExitOk;
}

int cmd_combine(ScoreArgs& a, const CLI::App& app, std::ostream& out) {
  const TrainConfig config = a.cfg.resolve(app);
  const Loaded l = load_for_scoring(a, config);
  const ScoredSet scored = score_examples(l.model, l.examples, config.f1_threshold);
  const auto combined = combine_with_ir(scored.lists, ir_ranks_of(l.corpus));
  const auto ir = ir_rankings(l.corpus);
  const bool skip = config.map_skip_unanswerable;
  out << "{\"model_map\": " << fmt("%.6f", map_score(scored.lists, skip))
      << ", \"ir_map\": " << fmt("%.6f", map_score(ir, skip))
      << ", \"combined_map\": " << fmt("%.6f", map_score(combined, skip)) << "}\n";
  if (!a.output_path.empty()) write_text(a.output_path, format_rankings(combined), out);
  return kExitOk;
}

int cmd_dump_attention(ScoreArgs& a, const CLI::App& app, std::ostream& out) {
  const TrainConfig config = a.cfg.resolve(app);
  const Loaded l = load_for_scoring(a, config);
  write_text(a.output_path,
             format_attention_dump(dump_attention(l.model, l.corpus, l.ckpt.vocab,
                                                  config.f1_threshold)),
             out);
  return kExitOk;
}

// ---------------------------------------------------------------- augment

struct AugmentArgs {
  std::string corpus_path, task_a_path, output_path;
  std::string task = "B";
};

int cmd_augment(AugmentArgs& a, std::ostream& out) {
  const Corpus corpus = load_corpus(a.corpus_path, parse_task(a.task));
  Corpus result;
  if (!a.task_a_path.empty()) {
    result = merged_corpus(corpus, load_corpus(a.task_a_path, Task::A));
  } else {
    result = augmented_corpus(corpus);
  }
  write_text(a.output_path, format_corpus(result), out);
  out << "instances: " << corpus.instance_count() << " -> " << result.instance_count() << '\n';
  return kExitOk;
}

// ---------------------------------------------------------------- gradcheck

struct GradcheckArgs {
  std::uint64_t seed = 1;
  bool fault = false;
};

int cmd_gradcheck(const GradcheckArgs& a, std::ostream& out) {
  bool ok = true;
  for (const auto& run : gradcheck_all(a.seed, a.fault)) {
    for (const auto& t : run.report.tensors) {
      const bool pass = t.max_rel_error < kGradcheckTolerance;
      ok = ok && pass;
      out << to_string(run.topology) << '\t' << t.name << '\t' << fmt("%.3e", t.max_rel_error)
          << '\t' << (pass ? "ok" : "FAIL") << '\n';
    }
  }
  out << (ok ? "gradcheck passed\n" : "gradcheck FAILED\n");
  return ok ? kExitOk : kExitFailure;
}

// ---------------------------------------------------------------- synth

struct SynthArgs {
  SyntheticSpec spec;
  std::string output_path;
  std::string task = "A";
};

int cmd_synth(SynthArgs& a, std::ostream& out) {
  Corpus c = generate_synthetic_corpus(a.spec);
  c.task = parse_task(a.task);
  write_text(a.output_path, format_corpus(c), out);
  return kExitOk;
}

}  // namespace

std::vector<GradcheckRun> gradcheck_all(std::uint64_t seed, bool fault) {
  std::vector<GradcheckRun> runs;
  for (Topology topo : {Topology::parallel, Topology::serialized, Topology::attention,
                        Topology::multitask}) {
    ModelConfig mc;
    mc.topology = topo;
    mc.vocab_size = 7;
    mc.embed_dim = 4;
    mc.cell_count = 8;
    mc.mlp_hidden = 8;
    mc.attention_hidden = 8;
    mc.ir_rank_slots = 3;
    mc.init_scale = 1.0;
    Rng rng(seed);
    Model model(mc, &rng);
    model.set_gradient_fault(fault);

    auto seq = [&](std::size_t len) {
      TokenIds ids(len);
      for (auto& t : ids) t = static_cast<int>(rng.index(mc.vocab_size));
      return ids;
    };
    std::vector<Example> examples;
    for (std::size_t k = 0; k < 5; ++k) {
      Example ex;
      ex.query_id = "g";
      ex.candidate_id = std::to_string(k);
      ex.first = seq(1 + k);
      ex.second = seq(5 - k);
      ex.bridge = seq(1 + (k + 2) % 5);
      ex.label = static_cast<int>(k % 2);
      ex.aux_labels = {static_cast<int>((k / 2) % 2), static_cast<int>((k + 1) % 2)};
      if (k < 4) ex.ir_rank = static_cast<int>(k % 3) + 1;
      examples.push_back(std::move(ex));
    }
    ParamSet& ps = model.params();
    auto loss = [&] {
      double total = 0.0;
      for (const auto& ex : examples) total += model.loss(ex, kDefaultBeta);
      return total;
    };
    auto backward = [&] {
      ps.zero_grads();
      for (const auto& ex : examples) model.accumulate_gradients(ex, kDefaultBeta, 1.0);
    };
    runs.push_back({topo, grad_check(ps, loss, backward, kGradcheckEpsilon)});
  }
  return runs;
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"LSTM pair encoder with attention for community question answering", "cqa"};
  app.require_subcommand(1);

  TrainArgs train_args;
  auto* train_cmd = app.add_subcommand("train", "train a model and write the best checkpoint");
  train_cmd->add_option("--train", train_args.train_path, "training corpus")->required();
  train_cmd->add_option("--dev", train_args.dev_path, "dev corpus (default: split of --train)");
  train_cmd->add_option("--embeddings", train_args.embeddings_path, "pretrained vectors");
  train_cmd->add_option("--init-checkpoint", train_args.init_path,
                        "initialize all but the softmax layer from this checkpoint");
  train_cmd->add_option("--checkpoint", train_args.checkpoint_path, "output checkpoint")
      ->required();
  train_cmd->add_option("--log", train_args.log_path, "epoch log (default stdout)");
  train_cmd->add_option("--task", train_args.task, "A, B or C");
  train_args.cfg.attach(*train_cmd);

  std::map<std::string, ScoreArgs> score_args;
  auto scoring = [&](const std::string& name, const std::string& help, bool needs_ckpt) {
    ScoreArgs& s = score_args[name];
    auto* c = app.add_subcommand(name, help);
    auto* ck = c->add_option("--checkpoint", s.checkpoint_path, "model checkpoint");
    if (needs_ckpt) ck->required();
    c->add_option("--corpus", s.corpus_path, "input corpus")->required();
    c->add_option("--task", s.task, "A, B or C");
    c->add_option("--output", s.output_path, "output file (default stdout)");
    s.cfg.attach(*c);
    return c;
  };
  auto* eval_cmd = scoring("evaluate", "print MAP, precision, recall and F1", false);
  eval_cmd->add_flag("--random-baseline", score_args["evaluate"].random_baseline,
                     "score with the seeded random baseline instead of a model");
  auto* predict_cmd = scoring("predict", "write query_id candidate_id score lines", true);
  auto* combine_cmd = scoring("combine", "average model and IR rank positions", true);
  auto* dump_cmd = scoring("dump-attention", "write per-instance attention weights", true);

  AugmentArgs augment_args;
  auto* augment_cmd = app.add_subcommand("augment", "augment question pairs");
  augment_cmd->add_option("--corpus", augment_args.corpus_path, "labeled corpus")->required();
  augment_cmd->add_option("--task", augment_args.task, "task of --corpus (B, or C with --task-a)");
  augment_cmd->add_option("--task-a", augment_args.task_a_path, "task-A corpus to merge in");
  augment_cmd->add_option("--output", augment_args.output_path, "augmented corpus")->required();

  GradcheckArgs gc_args;
  auto* gc_cmd = app.add_subcommand("gradcheck", "finite-difference check of every topology");
  gc_cmd->add_option("--seed", gc_args.seed, "initialization seed");
  gc_cmd->add_flag("--inject-fault", gc_args.fault, "corrupt one backward pass (negative control)");

  SynthArgs synth_args;
  auto* synth_cmd = app.add_subcommand("synth", "generate a planted-keyword corpus");
  SyntheticSpec& sp = synth_args.spec;
  synth_cmd->add_option("--output", synth_args.output_path, "output corpus (default stdout)");
  synth_cmd->add_option("--task", synth_args.task, "task tag of the corpus");
  synth_cmd->add_option("--vocab-size", sp.vocab_size);
  synth_cmd->add_option("--groups", sp.groups);
  synth_cmd->add_option("--candidates", sp.candidates);
  synth_cmd->add_option("--keywords", sp.keywords);
  synth_cmd->add_option("--min-length", sp.min_length);
  synth_cmd->add_option("--max-length", sp.max_length);
  synth_cmd->add_option("--positive-rate", sp.positive_rate);
  synth_cmd->add_option("--ir-noise", sp.ir_noise);
  synth_cmd->add_option("--id-prefix", sp.id_prefix);
  synth_cmd->add_option("--seed", sp.seed);
  synth_cmd->add_flag("--triples", sp.triples, "emit relQ text and auxiliary labels");
  synth_cmd->add_flag("!--no-distractors", sp.distractors, "omit distractor tokens");
  synth_cmd->add_flag("!--no-ir-ranks", sp.with_ir_ranks, "omit IR ranks");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return kExitOk;
    err << "usage error: " << e.what() << '\n';
    return kExitUsage;
  }

  try {
    if (*train_cmd) return cmd_train(train_args, *train_cmd, out, err);
    if (*eval_cmd) return cmd_evaluate(score_args["evaluate"], *eval_cmd, out);
    if (*predict_cmd) return cmd_predict(score_args["predict"], *predict_cmd, out);
    if (*combine_cmd) return cmd_combine(score_args["combine"], *combine_cmd, out);
    if (*dump_cmd) return cmd_dump_attention(score_args["dump-attention"], *dump_cmd, out);
    if (*augment_cmd) return cmd_augment(augment_args, out);
    if (*gc_cmd) return cmd_gradcheck(gc_args, out);
    if (*synth_cmd) return cmd_synth(synth_args, out);
  } catch (const UsageError& e) {
    err << "usage error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitFailure;
  }
  return kExitUsage;
}

int run(int argc, char** argv, std::ostream& out, std::ostream& err) {
  std::vector<std::string> args;
  for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
  return run(args, out, err);
}

}  // namespace cqa::cli
