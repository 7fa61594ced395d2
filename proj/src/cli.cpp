#include "reentry/cli.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <fstream>
#include <iostream>
#include <memory>
#include <sstream>

#include "reentry/checkpoint.hpp"
#include "reentry/corpus.hpp"
#include "reentry/eval.hpp"
#include "reentry/gradcheck.hpp"
#include "reentry/labeling.hpp"
#include "reentry/manifest.hpp"
#include "reentry/model.hpp"
#include "reentry/synth.hpp"
#include "reentry/training.hpp"

namespace reentry::cli {

namespace fs = std::filesystem;

namespace {

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::map<std::string, double> parse_pattern_map(const std::string& csv) {
  std::map<std::string, double> out;
  std::istringstream ss(csv);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    const auto colon = item.find(':');
    if (colon == std::string::npos) throw UsageError("expected PATTERN:VALUE, got '" + item + "'");
    try {
      out[item.substr(0, colon)] = std::stod(item.substr(colon + 1));
    } catch (const std::logic_error&) {
      throw UsageError("bad number in '" + item + "'");
    }
  }
  return out;
}

std::array<double, 3> parse_ratios(const std::string& csv) {
  std::array<double, 3> r{};
  std::istringstream ss(csv);
  std::string item;
  std::size_t k = 0;
  while (std::getline(ss, item, ',')) {
    if (k >= 3) throw UsageError("--ratios takes exactly three values");
    try {
      r[k++] = std::stod(item);
    } catch (const std::logic_error&) {
      throw UsageError("bad ratio '" + item + "'");
    }
  }
  if (k != 3) throw UsageError("--ratios takes exactly three values");
  return r;
}

labeling::TaskSet tasks_arg(const std::string& csv) {
  try {
    return labeling::parse_tasks(csv);
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
}

std::ofstream open_output(const fs::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  return out;
}

// Instances of `convs` with histories drawn from `history_source` and the
// requested auxiliary labels inverted.
std::vector<corpus::Instance> make_instances(const std::vector<corpus::Conversation>& convs,
                                             const std::vector<corpus::Conversation>& history_source,
                                             std::size_t history_cap, std::size_t min_prefix,
                                             const labeling::TaskSet& invert) {
  auto instances = corpus::extract_instances(convs, min_prefix);
  corpus::build_histories(instances, history_source, history_cap);
  if (invert.any()) {
    for (auto& inst : instances) inst = labeling::invert_labels(std::move(inst), invert);
  }
  return instances;
}

std::vector<corpus::EncodedInstance> encode_all(const std::vector<corpus::Instance>& instances,
                                                const corpus::Vocabulary& vocab) {
  std::vector<corpus::EncodedInstance> out;
  out.reserve(instances.size());
  for (const auto& inst : instances) out.push_back(corpus::encode(inst, vocab));
  return out;
}

// ---------------------------------------------------------------------------

struct SynthArgs {
  std::string out;
  std::string preset = "reddit";
  std::string config_path;
  std::string patterns;
  std::string rates;
  std::optional<std::size_t> n;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> vocab_size;
  std::optional<std::size_t> user_pool;
  std::optional<std::size_t> len_min;
  std::optional<std::size_t> len_max;
};

int do_synth(const SynthArgs& a) {
  synth::SynthConfig cfg;
  if (a.preset == "reddit") {
    cfg = synth::default_config();
  } else if (a.preset == "benchmark") {
    cfg = synth::benchmark_config();
  } else {
    throw UsageError("unknown preset '" + a.preset + "' (expected reddit or benchmark)");
  }
  if (!a.config_path.empty()) {
    std::ifstream in(a.config_path);
    if (!in) throw std::runtime_error("cannot open " + a.config_path);
    cfg = synth::config_from_json(nlohmann::json::parse(in));
  }
  if (!a.patterns.empty()) cfg.pattern_weights = parse_pattern_map(a.patterns);
  if (!a.rates.empty()) cfg.reentry_rates = parse_pattern_map(a.rates);
  if (a.n) cfg.n_conversations = *a.n;
  if (a.seed) cfg.seed = *a.seed;
  if (a.vocab_size) cfg.vocab_size = *a.vocab_size;
  if (a.user_pool) cfg.user_pool = *a.user_pool;
  if (a.len_min) cfg.turn_len_min = *a.len_min;
  if (a.len_max) cfg.turn_len_max = *a.len_max;

  const auto convs = synth::generate_corpus(cfg);
  corpus::write_jsonl(fs::path(a.out), convs);
  const std::string echo = a.out + ".config.json";
  open_output(echo) << synth::to_json(cfg).dump(2) << '\n';

  RunManifest m;
  m.subcommand = "synth";
  m.config = synth::to_json(cfg);
  m.config["preset"] = a.preset;
  m.seed = cfg.seed;
  if (!a.config_path.empty()) m.add_input(a.config_path);
  m.outputs = {a.out, echo};
  write_manifest(a.out + ".manifest.json", m);
  std::cerr << "wrote " << convs.size() << " conversations to " << a.out << '\n';
  return 0;
}

struct IngestArgs {
  std::string in;
  std::string out;
  bool reddit_clean = false;
};

int do_ingest(const IngestArgs& a) {
  std::size_t skipped = 0;
  const auto convs = corpus::ingest_jsonl(fs::path(a.in), {a.reddit_clean}, [&](const std::string& w) {
    ++skipped;
    std::cerr << "warning: " << w << '\n';
  });
  corpus::write_jsonl(fs::path(a.out), convs);
  RunManifest m;
  m.subcommand = "ingest";
  m.config = {{"reddit_clean", a.reddit_clean}};
  m.add_input(a.in);
  m.outputs = {a.out};
  write_manifest(a.out + ".manifest.json", m);
  std::cerr << "ingested " << convs.size() << " conversations (" << skipped << " skipped)\n";
  return 0;
}

struct LabelsArgs {
  std::string in;
  std::string out = "-";
  std::string history_from;
  std::size_t history_cap = 10;
  std::size_t min_prefix = 2;
  std::string invert;
  std::string manifest;
};

int do_labels(const LabelsArgs& a) {
  const auto invert = tasks_arg(a.invert);
  const auto convs = corpus::ingest_jsonl(fs::path(a.in));
  const auto history_source =
      a.history_from.empty() ? convs : corpus::ingest_jsonl(fs::path(a.history_from));
  const auto instances = make_instances(convs, history_source, a.history_cap, a.min_prefix, invert);
  if (a.out == "-") {
    corpus::write_instances(std::cout, instances);
  } else {
    auto out = open_output(a.out);
    corpus::write_instances(out, instances);
  }
  RunManifest m;
  m.subcommand = "labels";
  m.config = {{"history_cap", a.history_cap},
              {"min_prefix", a.min_prefix},
              {"invert", labeling::format_tasks(invert)}};
  m.add_input(a.in);
  if (!a.history_from.empty()) m.add_input(a.history_from);
  if (a.out != "-") m.outputs = {a.out};
  const std::string manifest = !a.manifest.empty() ? a.manifest
                               : a.out != "-"      ? a.out + ".manifest.json"
                                                   : "";
  if (!manifest.empty()) write_manifest(manifest, m);
  return 0;
}

struct StatsArgs {
  std::string in;
  std::size_t min_prefix = 2;
  std::string manifest;
};

int do_stats(const StatsArgs& a) {
  const auto convs = corpus::ingest_jsonl(fs::path(a.in));
  const auto stats = labeling::pattern_stats(corpus::extract_instances(convs, a.min_prefix));
  std::vector<std::pair<std::string, labeling::PatternCount>> rows(stats.begin(), stats.end());
  std::stable_sort(rows.begin(), rows.end(),
                   [](const auto& x, const auto& y) { return x.second.count > y.second.count; });
  std::cout << "pattern\tcount\treentry_rate\n";
  std::cout.setf(std::ios::fixed);
  std::cout.precision(4);
  for (const auto& [pattern, c] : rows) std::cout << pattern << '\t' << c.count << '\t' << c.rate() << '\n';
  if (!a.manifest.empty()) {
    RunManifest m;
    m.subcommand = "stats";
    m.config = {{"min_prefix", a.min_prefix}};
    m.add_input(a.in);
    write_manifest(a.manifest, m);
  }
  return 0;
}

struct SplitArgs {
  std::string in;
  std::string out_dir;
  std::string ratios = "0.8,0.1,0.1";
  std::uint64_t seed = 7;
};

int do_split(const SplitArgs& a) {
  const auto ratios = parse_ratios(a.ratios);
  const auto convs = corpus::ingest_jsonl(fs::path(a.in));
  const auto parts = corpus::split(convs, ratios, a.seed);
  fs::create_directories(a.out_dir);
  const fs::path dir(a.out_dir);
  corpus::write_jsonl(dir / "train.jsonl", parts.train);
  corpus::write_jsonl(dir / "valid.jsonl", parts.valid);
  corpus::write_jsonl(dir / "test.jsonl", parts.test);
  RunManifest m;
  m.subcommand = "split";
  m.config = {{"ratios", ratios}};
  m.seed = a.seed;
  m.add_input(a.in);
  m.outputs = {(dir / "train.jsonl").string(), (dir / "valid.jsonl").string(),
               (dir / "test.jsonl").string()};
  write_manifest(dir / "manifest.json", m);
  std::cerr << "split " << convs.size() << " conversations into " << parts.train.size() << '/'
            << parts.valid.size() << '/' << parts.test.size() << '\n';
  return 0;
}

struct TrainArgs {
  std::string train_path;
  std::string valid_path;
  std::string out_dir;
  std::string tasks;
  std::string invert;
  bool no_history = false;
  bool no_attention = false;
  std::string attention_over = "conv";
  std::string aux_weight_mode = "paper";
  std::uint64_t seed = 1;
  double lr = 1e-4;
  std::size_t batch_size = 32;
  std::size_t epochs = 30;
  std::size_t patience = 5;
  double l2 = 1e-5;
  double dropout = 0.2;
  std::size_t embed_dim = 200;
  std::size_t hidden_dim = 200;
  std::size_t history_cap = 10;
  std::size_t min_count = 1;
  std::size_t min_prefix = 2;
  std::optional<double> lambda;
  std::optional<double> mu;
  double alpha_sp = 0.2;
  double alpha_rt = 0.2;
  double alpha_ta = 0.2;
  double threshold = 0.5;
  std::string embeddings;
  bool quiet = false;
};

int do_train(const TrainArgs& a) {
  training::TrainConfig tc;
  tc.learning_rate = a.lr;
  tc.batch_size = a.batch_size;
  tc.max_epochs = a.epochs;
  tc.patience = a.patience;
  tc.l2 = a.l2;
  tc.seed = a.seed;
  tc.tasks = tasks_arg(a.tasks);
  tc.invert = tasks_arg(a.invert);
  tc.lambda_main = a.lambda;
  tc.mu_main = a.mu;
  tc.alpha_sp = a.alpha_sp;
  tc.alpha_rt = a.alpha_rt;
  tc.alpha_ta = a.alpha_ta;
  tc.threshold = a.threshold;
  try {
    tc.aux_weight_mode = training::parse_aux_weight_mode(a.aux_weight_mode);
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
  training::validate(tc);

  const auto train_convs = corpus::ingest_jsonl(fs::path(a.train_path));
  const auto valid_convs = corpus::ingest_jsonl(fs::path(a.valid_path));
  const auto vocab = corpus::build_vocab(train_convs, a.min_count);

  model::ModelConfig mc;
  mc.vocab_size = vocab.size();
  mc.embed_dim = a.embed_dim;
  mc.hidden_dim = a.hidden_dim;
  mc.dropout = a.dropout;
  mc.history_cap = a.history_cap;
  mc.use_history = !a.no_history;
  mc.use_attention = !a.no_attention;
  try {
    mc.attention_over = model::parse_attention_over(a.attention_over);
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
  model::ModelParams params(mc);
  params.initialize(mix_seed(a.seed, 0x1417));
  if (!a.embeddings.empty()) {
    for (auto& [id, vec] : corpus::load_embeddings(a.embeddings, vocab, mc.embed_dim)) {
      for (std::size_t c = 0; c < vec.size(); ++c) {
        params.embedding.value.at(static_cast<std::size_t>(id), c) = vec[c];
      }
    }
  }

  const auto train_instances =
      encode_all(make_instances(train_convs, train_convs, a.history_cap, a.min_prefix, tc.invert), vocab);
  const auto valid_instances =
      encode_all(make_instances(valid_convs, train_convs, a.history_cap, a.min_prefix, tc.invert), vocab);

  fs::create_directories(a.out_dir);
  const fs::path dir(a.out_dir);
  const auto ckpt_path = dir / "best.ckpt";
  const auto log_path = dir / "log.jsonl";
  auto log_out = open_output(log_path);

  training::TrainCallbacks callbacks;
  callbacks.on_epoch = [&](const training::EpochLog& log) {
    log_out << training::to_json(log).dump() << '\n';
    log_out.flush();
    if (!a.quiet) {
      std::cerr << "epoch " << log.epoch << " loss " << log.train_total << " valid f1 "
                << log.valid.f1 << " (" << log.wall_seconds << "s)\n";
    }
  };
  callbacks.on_best = [&](const training::EpochLog& log, const model::ModelParams& p,
                          std::size_t step) {
    model::CheckpointInfo info;
    info.step = step;
    info.epoch = log.epoch;
    info.extra = {{"train_config", training::to_json(tc)}, {"valid", eval::to_json(log.valid)}};
    model::save_checkpoint(ckpt_path, mc, p, vocab, info);
  };
  const auto result = training::train(train_instances, valid_instances, params, mc, tc, callbacks);

  RunManifest m;
  m.subcommand = "train";
  m.config = {{"model", model::to_json(mc)},
              {"train", training::to_json(tc)},
              {"min_count", a.min_count},
              {"min_prefix", a.min_prefix},
              {"embeddings", a.embeddings},
              {"loss_weights",
               {{"lambda_main", result.weights.lambda_main},
                {"mu_main", result.weights.mu_main},
                {"lambda_sp", result.weights.lambda_sp},
                {"lambda_rt", result.weights.lambda_rt}}}};
  m.seed = a.seed;
  m.add_input(a.train_path);
  m.add_input(a.valid_path);
  if (!a.embeddings.empty()) m.add_input(a.embeddings);
  m.outputs = {ckpt_path.string(), log_path.string()};
  write_manifest(dir / "manifest.json", m);
  if (!a.quiet) {
    std::cerr << "best valid f1 " << result.best_f1 << " at epoch " << result.best_epoch << " ("
              << train_instances.size() << " train / " << valid_instances.size()
              << " valid instances, " << params.count() << " parameters)\n";
  }
  return 0;
}

struct EvalArgs {
  std::string checkpoint;
  std::string test_path;
  std::string history_from;
  std::size_t min_prefix = 2;
  std::optional<double> threshold;
  bool per_pattern = false;
  std::size_t min_group = 10;
  bool json = false;
  std::string out;
  std::string manifest;
};

int do_eval(const EvalArgs& a) {
  auto ck = model::load_checkpoint(a.checkpoint);
  const auto test_convs = corpus::ingest_jsonl(fs::path(a.test_path));
  const std::vector<corpus::Conversation> history_source =
      a.history_from.empty() ? std::vector<corpus::Conversation>{}
                             : corpus::ingest_jsonl(fs::path(a.history_from));
  const auto instances =
      make_instances(test_convs, history_source, ck.config.history_cap, a.min_prefix, {});
  if (instances.empty()) throw std::runtime_error("no instances in " + a.test_path);
  const auto encoded = encode_all(instances, ck.vocab);
  const double threshold = a.threshold.value_or(
      ck.info.extra.contains("train_config")
          ? ck.info.extra["train_config"].value("threshold", 0.5)
          : 0.5);

  const auto scores = training::predict(encoded, *ck.params, ck.config);
  std::vector<int> labels;
  for (const auto& inst : instances) labels.push_back(inst.y_main);
  const auto report = eval::evaluate(scores, labels, threshold);

  std::ostringstream text;
  if (a.json) {
    nlohmann::json j = {{"metrics", eval::to_json(report)}};
    if (a.per_pattern) {
      for (const auto& [p, r] : eval::pattern_breakdown(instances, scores, a.min_group, threshold)) {
        j["patterns"][p] = eval::to_json(r);
      }
    }
    text << j.dump(2) << '\n';
  } else {
    text << eval::tsv_header() << '\n' << eval::to_tsv(report) << '\n';
    if (a.per_pattern) {
      text << '\n' << "pattern\t" << eval::tsv_header() << '\n';
      for (const auto& [p, r] : eval::pattern_breakdown(instances, scores, a.min_group, threshold)) {
        text << p << '\t' << eval::to_tsv(r) << '\n';
      }
    }
  }
  if (a.out.empty()) {
    std::cout << text.str();
  } else {
    open_output(a.out) << text.str();
  }

  RunManifest m;
  m.subcommand = "eval";
  m.config = {{"min_prefix", a.min_prefix},
              {"threshold", threshold},
              {"per_pattern", a.per_pattern},
              {"min_group", a.min_group}};
  m.add_input(a.checkpoint);
  m.add_input(a.test_path);
  if (!a.history_from.empty()) m.add_input(a.history_from);
  if (!a.out.empty()) m.outputs = {a.out};
  const std::string manifest = !a.manifest.empty() ? a.manifest
                               : !a.out.empty()    ? a.out + ".manifest.json"
                                                   : "";
  if (!manifest.empty()) write_manifest(manifest, m);
  return 0;
}

struct GradcheckArgs {
  std::uint64_t seed = 1;
  std::size_t instances = 3;
  double eps = 1e-5;
  double tol = 1e-4;
};

int do_gradcheck(const GradcheckArgs& a) {
  nn::GradCheckOptions opts;
  opts.eps = a.eps;
  opts.tolerance = a.tol;
  bool ok = true;

  {
    nn::GruParams cell("gru", 3, 4);
    Rng rng(a.seed);
    std::vector<nn::Parameter*> ps;
    cell.collect(ps);
    for (auto* p : ps)
      for (auto& v : p->value.values()) v = rng.uniform(-0.8, 0.8);
    std::vector<double> x0{0.3, -0.7, 0.5}, h0{0.1, -0.2, 0.4, 0.05};
    auto loss = [&](bool with_grad) {
      nn::Tape t;
      const auto h = nn::gru_cell(t, cell, t.constant(x0), t.constant(h0));
      const auto l = t.dot(h, t.constant({1.0, -2.0, 0.5, 1.5}));
      if (with_grad) t.backward(l);
      return t.scalar(l);
    };
    opts.seed = a.seed;
    const auto r = nn::grad_check(loss, ps, opts);
    std::cout << "gru_cell\tchecked=" << r.checked << "\tmax_rel_err=" << r.max_relative_error
              << '\t' << (r.passed() ? "PASS" : "FAIL") << '\n';
    ok = ok && r.passed();
  }

  const auto config = gradcheck::tiny_config();
  training::LossWeights weights;
  weights.lambda_main = 1.7;
  weights.mu_main = 0.8;
  weights.lambda_sp = 0.6;
  weights.lambda_rt = 1.3;
  Rng rng(mix_seed(a.seed, 99));
  for (std::size_t k = 0; k < a.instances; ++k) {
    model::ModelParams params(config);
    gradcheck::randomize(params, mix_seed(a.seed, k));
    const auto inst = gradcheck::random_instance(rng, config.vocab_size);
    opts.seed = mix_seed(a.seed, 1000 + k);
    const auto r = gradcheck::check_model(inst, params, config, weights, {true, true, true}, opts);
    std::cout << "model[" << k << "]\tturns=" << inst.context.size()
              << "\thistory=" << inst.history.size() << "\tchecked=" << r.checked
              << "\tmax_rel_err=" << r.max_relative_error << '\t' << (r.passed() ? "PASS" : "FAIL")
              << '\n';
    for (const auto& v : r.violators) {
      std::cout << "  violator " << v.parameter << '[' << v.index << "] analytic=" << v.analytic
                << " numeric=" << v.numeric << '\n';
    }
    ok = ok && r.passed();
  }
  return ok ? 0 : 1;
}

}  // namespace

int run(int argc, char** argv) {
  CLI::App app{"Conversation re-entry prediction with self-supervised auxiliary tasks"};
  app.require_subcommand(1);
  app.set_version_flag("--version", kVersion);
  // Repeated options: the last occurrence wins, so scripts can append overrides.
  app.option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);

  SynthArgs synth_args;
  auto* synth_cmd = app.add_subcommand("synth", "Generate a synthetic conversation corpus");
  synth_cmd->add_option("--out", synth_args.out, "Output JSONL")->required();
  synth_cmd->add_option("--preset", synth_args.preset, "reddit | benchmark")->capture_default_str();
  synth_cmd->add_option("--config", synth_args.config_path, "JSON generator config");
  synth_cmd->add_option("--patterns", synth_args.patterns, "Pattern weights, e.g. AB:0.6,ABC:0.4");
  synth_cmd->add_option("--rates", synth_args.rates, "Re-entry rates, e.g. AB:0.27,ABC:0.1");
  synth_cmd->add_option("--n", synth_args.n, "Number of conversations");
  synth_cmd->add_option("--seed", synth_args.seed, "Random seed");
  synth_cmd->add_option("--vocab-size", synth_args.vocab_size, "Filler vocabulary size");
  synth_cmd->add_option("--user-pool", synth_args.user_pool, "Number of distinct users");
  synth_cmd->add_option("--turn-len-min", synth_args.len_min, "Minimum filler words per turn");
  synth_cmd->add_option("--turn-len-max", synth_args.len_max, "Maximum filler words per turn");

  IngestArgs ingest_args;
  auto* ingest_cmd = app.add_subcommand("ingest", "Tokenize a raw conversation JSONL file");
  ingest_cmd->add_option("--in", ingest_args.in, "Raw JSONL")->required();
  ingest_cmd->add_option("--out", ingest_args.out, "Tokenized JSONL")->required();
  ingest_cmd->add_flag("--reddit-clean", ingest_args.reddit_clean,
                       "Drop tokens without letters and replace links with URL");

  LabelsArgs labels_args;
  auto* labels_cmd = app.add_subcommand("labels", "Dump prediction instances with all labels");
  labels_cmd->add_option("--in", labels_args.in, "Conversation JSONL")->required();
  labels_cmd->add_option("--out", labels_args.out, "Output JSONL ('-' for stdout)")->capture_default_str();
  labels_cmd->add_option("--history-from", labels_args.history_from,
                         "Training corpus for chatting histories (default: --in)");
  labels_cmd->add_option("--history-cap", labels_args.history_cap)->capture_default_str();
  labels_cmd->add_option("--min-prefix", labels_args.min_prefix)->capture_default_str();
  labels_cmd->add_option("--invert", labels_args.invert, "Auxiliary labels to invert: sp,rt,ta");
  labels_cmd->add_option("--manifest", labels_args.manifest, "Manifest path");

  StatsArgs stats_args;
  auto* stats_cmd = app.add_subcommand("stats", "Thread-pattern counts and re-entry rates (TSV)");
  stats_cmd->add_option("--in", stats_args.in, "Conversation JSONL")->required();
  stats_cmd->add_option("--min-prefix", stats_args.min_prefix)->capture_default_str();
  stats_cmd->add_option("--manifest", stats_args.manifest, "Manifest path");

  SplitArgs split_args;
  auto* split_cmd = app.add_subcommand("split", "Conversation-level train/valid/test split");
  split_cmd->add_option("--in", split_args.in, "Conversation JSONL")->required();
  split_cmd->add_option("--out-dir", split_args.out_dir, "Output directory")->required();
  split_cmd->add_option("--ratios", split_args.ratios)->capture_default_str();
  split_cmd->add_option("--seed", split_args.seed)->capture_default_str();

  TrainArgs train_args;
  auto* train_cmd = app.add_subcommand("train", "Train the re-entry model");
  train_cmd->add_option("--train", train_args.train_path, "Training conversations")->required();
  train_cmd->add_option("--valid", train_args.valid_path, "Validation conversations")->required();
  train_cmd->add_option("--out-dir", train_args.out_dir, "Run directory")->required();
  train_cmd->add_option("--tasks", train_args.tasks, "Auxiliary tasks: any of sp,rt,ta");
  train_cmd->add_option("--invert", train_args.invert, "Auxiliary labels to invert: sp,rt,ta");
  train_cmd->add_flag("--no-history", train_args.no_history, "Zero-initialize the target turn");
  train_cmd->add_flag("--no-attention", train_args.no_attention, "Mean pooling instead of attention");
  train_cmd->add_option("--attention-over", train_args.attention_over, "turn | conv")->capture_default_str();
  train_cmd->add_option("--aux-weight-mode", train_args.aux_weight_mode, "paper | inverse")
      ->capture_default_str();
  train_cmd->add_option("--seed", train_args.seed)->capture_default_str();
  train_cmd->add_option("--lr", train_args.lr)->capture_default_str();
  train_cmd->add_option("--batch-size", train_args.batch_size)->capture_default_str();
  train_cmd->add_option("--epochs", train_args.epochs)->capture_default_str();
  train_cmd->add_option("--patience", train_args.patience)->capture_default_str();
  train_cmd->add_option("--l2", train_args.l2)->capture_default_str();
  train_cmd->add_option("--dropout", train_args.dropout)->capture_default_str();
  train_cmd->add_option("--embed-dim", train_args.embed_dim)->capture_default_str();
  train_cmd->add_option("--hidden-dim", train_args.hidden_dim)->capture_default_str();
  train_cmd->add_option("--history-cap", train_args.history_cap)->capture_default_str();
  train_cmd->add_option("--min-count", train_args.min_count)->capture_default_str();
  train_cmd->add_option("--min-prefix", train_args.min_prefix)->capture_default_str();
  train_cmd->add_option("--lambda", train_args.lambda, "Main-loss positive weight (default #neg/#pos)");
  train_cmd->add_option("--mu", train_args.mu, "Main-loss negative weight (default 1)");
  train_cmd->add_option("--alpha-sp", train_args.alpha_sp)->capture_default_str();
  train_cmd->add_option("--alpha-rt", train_args.alpha_rt)->capture_default_str();
  train_cmd->add_option("--alpha-ta", train_args.alpha_ta)->capture_default_str();
  train_cmd->add_option("--threshold", train_args.threshold)->capture_default_str();
  train_cmd->add_option("--embeddings", train_args.embeddings, "Pretrained embedding text file");
  train_cmd->add_flag("--quiet", train_args.quiet, "No progress output");

  EvalArgs eval_args;
  auto* eval_cmd = app.add_subcommand("eval", "Evaluate a checkpoint");
  eval_cmd->add_option("--checkpoint", eval_args.checkpoint)->required();
  eval_cmd->add_option("--test", eval_args.test_path, "Conversations to evaluate")->required();
  eval_cmd->add_option("--history-from", eval_args.history_from, "Training corpus for histories");
  eval_cmd->add_option("--min-prefix", eval_args.min_prefix)->capture_default_str();
  eval_cmd->add_option("--threshold", eval_args.threshold, "Decision threshold (default: training value)");
  eval_cmd->add_flag("--per-pattern", eval_args.per_pattern, "Add a per-thread-pattern table");
  eval_cmd->add_option("--min-group", eval_args.min_group, "Smaller pattern groups go to 'other'")
      ->capture_default_str();
  eval_cmd->add_flag("--json", eval_args.json, "JSON output");
  eval_cmd->add_option("--out", eval_args.out, "Write the report here instead of stdout");
  eval_cmd->add_option("--manifest", eval_args.manifest, "Manifest path");

  GradcheckArgs gc_args;
  auto* gc_cmd = app.add_subcommand("gradcheck", "Finite-difference gradient checks");
  gc_cmd->add_option("--seed", gc_args.seed)->capture_default_str();
  gc_cmd->add_option("--instances", gc_args.instances)->capture_default_str();
  gc_cmd->add_option("--eps", gc_args.eps)->capture_default_str();
  gc_cmd->add_option("--tol", gc_args.tol)->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "error: " << e.what() << "\n\n" << app.help();
    return 2;
  }

  try {
    if (synth_cmd->parsed()) return do_synth(synth_args);
    if (ingest_cmd->parsed()) return do_ingest(ingest_args);
    if (labels_cmd->parsed()) return do_labels(labels_args);
    if (stats_cmd->parsed()) return do_stats(stats_args);
    if (split_cmd->parsed()) return do_split(split_args);
    if (train_cmd->parsed()) return do_train(train_args);
    if (eval_cmd->parsed()) return do_eval(eval_args);
    if (gc_cmd->parsed()) return do_gradcheck(gc_args);
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 2;
}

int run(const std::vector<std::string>& args) {
  std::vector<std::string> storage{"reentry"};
  storage.insert(storage.end(), args.begin(), args.end());
  std::vector<char*> argv;
  for (auto& s : storage) argv.push_back(s.data());
  return run(static_cast<int>(argv.size()), argv.data());
}

}  // namespace reentry::cli
