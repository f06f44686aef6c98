// Copyright 2026 The zloss Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <CLI11.hpp>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <sstream>

#include "zloss/bench.hpp"
#include "zloss/corpus.hpp"
#include "zloss/losses.hpp"
#include "zloss/metrics.hpp"
#include "zloss/ngram_model.hpp"
#include "zloss/rng.hpp"
#include "zloss/trainer.hpp"

namespace fs = std::filesystem;
using namespace zloss;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 1;
constexpr int kExitData = 2;
constexpr int kExitNumeric = 3;

std::ifstream open_input(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path);
  return in;
}

std::ofstream open_output(const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path);
  return out;
}

// ---- flat key=value config files (flags > file > defaults) ----

std::map<std::string, std::string> read_flat_config(const std::string& path) {
  std::ifstream in = open_input(path);
  std::map<std::string, std::string> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    std::size_t start = line.find_first_not_of(" \t");
    if (start == std::string::npos || line[start] == '#') continue;
    auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError(path + ":" + std::to_string(lineno) +
                        ": expected key=value");
    auto trim = [](std::string s) {
      std::size_t b = s.find_first_not_of(" \t");
      std::size_t e = s.find_last_not_of(" \t");
      return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
    };
    out[trim(line.substr(0, eq))] = trim(line.substr(eq + 1));
  }
  return out;
}

std::vector<std::size_t> parse_size_list(const std::string& text) {
  std::vector<std::size_t> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ','))
    if (!item.empty()) out.push_back(std::stoul(item));
  return out;
}

// Applies file values to every option the user did not pass on the command
// line. `setters` maps the documented config keys onto the bound variables.
class ConfigBinder {
 public:
  explicit ConfigBinder(CLI::App* sub) : sub_(sub) {}

  template <class T>
  void bind(const std::string& key, T& target) {
    setters_[key] = [&target](const std::string& v) { assign(target, v); };
  }

  void apply(const std::map<std::string, std::string>& file) const {
    for (const auto& [key, value] : file) {
      auto it = setters_.find(key);
      if (it == setters_.end())
        throw ConfigError("unknown config key: " + key);
      const CLI::Option* opt = sub_->get_option_no_throw("--" + key);
      if (opt != nullptr && opt->count() > 0) continue;  // flag wins
      it->second(value);
    }
  }

 private:
  template <class T>
  static void assign(T& t, const std::string& v) {
    if constexpr (std::is_same_v<T, std::string>) {
      t = v;
    } else if constexpr (std::is_same_v<T, bool>) {
      t = v == "true" || v == "1" || v == "yes" || v == "on";
    } else if constexpr (std::is_floating_point_v<T>) {
      t = std::stod(v);
    } else if constexpr (std::is_integral_v<T>) {
      t = static_cast<T>(std::stoull(v));
    } else {
      t = parse_size_list(v);
    }
  }

  CLI::App* sub_;
  std::map<std::string, std::function<void(const std::string&)>> setters_;
};

// ---- shared run options, bound to CLI11 flags ----

struct RunOptions {
  std::string train_path;
  std::string valid_path;
  std::string test_path;
  std::string vocab_path;
  std::string out_dir = "run";
  std::string loss = "zloss";
  std::string head = "factored";
  std::string activation = "tanh";
  std::string plateau_metric = "top1";
  double a = 0.1;
  double b = 10.0;
  std::size_t context = 6;
  std::size_t batch = 250;
  double eta = 0.1;
  std::size_t emb = 64;
  std::vector<std::size_t> hidden = {256};
  std::vector<std::size_t> k_set = {1, 5, 10, 20, 50, 100};
  std::uint64_t seed = 1;
  double init_scale = 1.0;
  bool output_bias = false;
  std::size_t refactor_period = 512;
  std::size_t epochs = 1;
  std::size_t eval_every = 0;
  std::size_t patience = 2;
  double decay = 0.5;
  std::string sweep;
  std::string preset;
};

void apply_preset(RunOptions& opt) {
  if (opt.preset.empty()) return;
  if (opt.preset == "fig1") {
    // reference Z-loss curve parameters (paired with D = 1000 classes)
    opt.loss = "zloss";
    opt.a = 0.1;
    opt.b = 10.0;
  } else if (opt.preset == "ptb") {
    opt.context = 6;
    opt.batch = 250;
  } else {
    throw ConfigError("unknown preset: " + opt.preset);
  }
}

ModelConfig model_config(const RunOptions& opt, std::size_t vocab_size) {
  ModelConfig mc;
  mc.vocab_size = vocab_size;
  mc.context_len = opt.context;
  mc.emb_dim = opt.emb;
  mc.hidden_sizes = opt.hidden;
  mc.activation = activation_from_name(opt.activation);
  mc.head = head_kind_from_name(opt.head);
  mc.loss = loss_kind_from_name(opt.loss);
  mc.zparams = {opt.a, opt.b};
  mc.seed = opt.seed;
  mc.init_scale = opt.init_scale;
  mc.output_bias = opt.output_bias;
  mc.refactor_period = opt.refactor_period;
  mc.validate();
  return mc;
}

TrainConfig train_config(const RunOptions& opt, std::size_t vocab_size) {
  TrainConfig tc;
  tc.eta0 = opt.eta;
  tc.batch_size = opt.batch;
  tc.plateau_patience = opt.patience;
  tc.plateau_factor = opt.decay;
  tc.plateau_metric = plateau_metric_from_name(opt.plateau_metric);
  tc.max_epochs = opt.epochs;
  tc.eval_every = opt.eval_every;
  tc.k_set.clear();
  for (std::size_t k : opt.k_set)
    if (k < vocab_size) tc.k_set.push_back(k);
  if (tc.k_set.empty())
    throw ConfigError("no k in --kset is below the vocabulary size");
  tc.shuffle = true;
  tc.shuffle_seed = opt.seed;
  return tc;
}

void write_config_snapshot(const RunOptions& opt, const fs::path& path) {
  std::ofstream out(path);
  out << "loss=" << opt.loss << "\nhead=" << opt.head << "\na=" << opt.a
      << "\nb=" << opt.b << "\ncontext=" << opt.context
      << "\nbatch=" << opt.batch << "\neta=" << opt.eta << "\nemb=" << opt.emb
      << "\nhidden=";
  for (std::size_t i = 0; i < opt.hidden.size(); ++i)
    out << (i ? "," : "") << opt.hidden[i];
  out << "\nactivation=" << opt.activation << "\nkset=";
  for (std::size_t i = 0; i < opt.k_set.size(); ++i)
    out << (i ? "," : "") << opt.k_set[i];
  out << "\nseed=" << opt.seed << "\ninit-scale=" << opt.init_scale
      << "\noutput-bias=" << (opt.output_bias ? "true" : "false")
      << "\nrefactor-period=" << opt.refactor_period
      << "\nepochs=" << opt.epochs << "\neval-every=" << opt.eval_every
      << "\npatience=" << opt.patience << "\ndecay=" << opt.decay
      << "\nplateau-metric=" << opt.plateau_metric << "\ntrain="
      << opt.train_path << "\nvalid=" << opt.valid_path
      << "\ntest=" << opt.test_path << "\nvocab=" << opt.vocab_path << "\n";
}

// ---- build-vocab ----

int cmd_build_vocab(const std::string& corpus, const std::string& out,
                    std::size_t max_size, std::uint64_t min_count) {
  std::ifstream in = open_input(corpus);
  std::optional<std::size_t> cap;
  if (max_size > 0) cap = max_size;
  std::optional<std::uint64_t> floor;
  if (min_count > 1) floor = min_count;
  Vocab vocab = Vocab::build(in, cap, floor);
  std::ofstream os = open_output(out);
  vocab.save(os);
  std::cout << "vocab: " << vocab.size() << " ids (unk id "
            << vocab.unk_id() << ") -> " << out << "\n";
  return kExitOk;
}

// ---- train ----

struct SweepSpec {
  std::string param;
  std::vector<double> values;
};

SweepSpec parse_sweep(const std::string& text) {
  SweepSpec spec;
  auto eq = text.find('=');
  if (eq == std::string::npos)
    throw ConfigError("--sweep expects param=v1,v2,...");
  spec.param = text.substr(0, eq);
  if (spec.param != "a" && spec.param != "b" && spec.param != "eta")
    throw ConfigError("--sweep supports a, b or eta");
  std::stringstream ss(text.substr(eq + 1));
  std::string item;
  while (std::getline(ss, item, ','))
    if (!item.empty()) spec.values.push_back(std::stod(item));
  if (spec.values.empty()) throw ConfigError("--sweep has no values");
  return spec;
}

int run_single_training(RunOptions opt, const Vocab& vocab,
                        const NgramDataset& train_data,
                        const NgramDataset& valid_data,
                        const NgramDataset* test_data) {
  fs::create_directories(opt.out_dir);
  write_config_snapshot(opt, fs::path(opt.out_dir) / "config.txt");

  ModelConfig mc = model_config(opt, vocab.size());
  TrainConfig tc = train_config(opt, vocab.size());
  NgramModel model(mc, vocab.freqs());

  std::ofstream jsonl = open_output(
      (fs::path(opt.out_dir) / "trainlog.jsonl").string());
  TrainLog log = train(model, train_data, valid_data, tc, &jsonl);

  std::ofstream ckpt = open_output(
      (fs::path(opt.out_dir) / "checkpoint.bin").string());
  model.save(ckpt);

  const NgramDataset& final_data = test_data ? *test_data : valid_data;
  MetricsReport report = evaluate(model, final_data, tc.k_set);
  std::ofstream rp = open_output(
      (fs::path(opt.out_dir) / "report.json").string());
  rp << report.to_json() << "\n";
  std::cout << "run " << opt.out_dir << ": " << report.to_json() << "\n";
  if (!log.records.empty())
    std::cout << "  evaluations: " << log.records.size()
              << ", degenerate skipped: " << log.total_degenerate_skipped
              << "\n";
  return kExitOk;
}

int cmd_train(RunOptions opt) {
  apply_preset(opt);
  if (opt.train_path.empty() || opt.valid_path.empty() ||
      opt.vocab_path.empty())
    throw ConfigError("train needs --train, --valid and --vocab");
  std::ifstream vf = open_input(opt.vocab_path);
  Vocab vocab = Vocab::load(vf);
  std::ifstream tf = open_input(opt.train_path);
  NgramDataset train_data = encode_ngrams(tf, vocab, opt.context + 1);
  if (train_data.size() == 0) throw DataError("training corpus is empty");
  std::ifstream vf2 = open_input(opt.valid_path);
  NgramDataset valid_data = encode_ngrams(vf2, vocab, opt.context + 1);
  NgramDataset test_data;
  bool have_test = !opt.test_path.empty();
  if (have_test) {
    std::ifstream tf2 = open_input(opt.test_path);
    test_data = encode_ngrams(tf2, vocab, opt.context + 1);
  }

  if (opt.sweep.empty())
    return run_single_training(opt, vocab, train_data, valid_data,
                               have_test ? &test_data : nullptr);

  SweepSpec spec = parse_sweep(opt.sweep);
  fs::path base = opt.out_dir;
  for (double value : spec.values) {
    RunOptions sub = opt;
    if (spec.param == "a") sub.a = value;
    if (spec.param == "b") sub.b = value;
    if (spec.param == "eta") sub.eta = value;
    std::ostringstream dir;
    dir << spec.param << "=" << value;
    sub.out_dir = (base / dir.str()).string();
    // each grid point trains from scratch
    int rc = run_single_training(sub, vocab, train_data, valid_data,
                                 have_test ? &test_data : nullptr);
    if (rc != kExitOk) return rc;
  }
  return kExitOk;
}

// ---- eval ----

int cmd_eval(const std::string& checkpoint, const std::string& vocab_path,
             const std::string& data_path, std::vector<std::size_t> k_set,
             const std::string& out) {
  std::ifstream cf = open_input(checkpoint);
  NgramModel model = NgramModel::load(cf);
  std::ifstream vf = open_input(vocab_path);
  Vocab vocab = Vocab::load(vf);
  if (vocab.size() != model.config().vocab_size)
    throw ConfigError("vocab size does not match the checkpoint");
  std::ifstream df = open_input(data_path);
  NgramDataset data =
      encode_ngrams(df, vocab, model.config().context_len + 1);
  std::erase_if(k_set, [&](std::size_t k) { return k >= vocab.size(); });
  if (k_set.empty()) throw ConfigError("no usable k in --kset");
  MetricsReport report = evaluate(model, data, k_set);
  if (out.empty()) {
    std::cout << report.to_json() << "\n";
  } else {
    std::ofstream os = open_output(out);
    os << report.to_json() << "\n";
  }
  return kExitOk;
}

// ---- gradcheck ----

int cmd_gradcheck(const std::string& loss, std::vector<std::size_t> dims,
                  std::size_t trials, double eps, double a, double b,
                  bool explicit_params, std::uint64_t seed) {
  std::vector<LossKind> kinds;
  if (loss == "all") {
    kinds = {LossKind::kZLoss,      LossKind::kMse,
             LossKind::kTaylor,     LossKind::kLogSoftmax,
             LossKind::kCeSigmoid,  LossKind::kSz};
  } else {
    kinds = {loss_kind_from_name(loss)};
  }
  bool ok = true;
  for (LossKind kind : kinds) {
    std::vector<ZLossParams> grid;
    if (explicit_params) {
      grid = {{a, b}};
    } else if (kind == LossKind::kZLoss) {
      for (double ga : {0.1, 1.0, 10.0})
        for (double gb : {0.0, 10.0, 28.0}) grid.push_back({ga, gb});
    } else if (kind == LossKind::kSz) {
      grid = {{0.1, 0.0}, {1.0, 0.0}};
    } else {
      grid = {{1.0, 0.0}};
    }
    // mse values grow with ||o||^2; draw it in the near-one-hot regime it
    // actually trains in so the FD oracle keeps its digits
    double scale = kind == LossKind::kMse ? 0.25 : 1.0;
    for (std::size_t dim : dims) {
      Rng rng(seed);
      double worst = 0.0;
      std::size_t done = 0;
      std::size_t attempts = 0;
      while (done < trials && attempts < 4 * trials) {
        ++attempts;
        Vec o(dim);
        for (auto& v : o) v = rng.gaussian() * scale;
        std::size_t c = rng.index(dim);
        GradCheckResult r =
            grad_check(kind, o, c, grid[done % grid.size()], eps);
        if (r.skipped_degenerate) continue;
        worst = std::max(worst, r.max_rel_error);
        ++done;
      }
      double bound = kind == LossKind::kMse ? 1e-9 : 1e-6;
      bool pass = done == trials && worst <= bound;
      ok = ok && pass;
      std::printf("loss=%-10s D=%-5zu trials=%zu max_rel_err=%.3e  %s\n",
                  loss_kind_name(kind), dim, done, worst,
                  pass ? "ok" : "FAIL");
    }
  }
  return ok ? kExitOk : kExitNumeric;
}

// ---- bench ----

int cmd_bench(std::vector<std::size_t> dlist, std::size_t d,
              std::size_t steps, std::size_t batch,
              const std::string& heads_csv, const std::string& dense_loss,
              double epoch_examples, const std::string& out,
              bool output_only, std::uint64_t seed) {
  BenchConfig config;
  config.class_counts = dlist;
  config.dim = d;
  config.steps = steps;
  config.batch = batch;
  config.dense_loss = loss_kind_from_name(dense_loss);
  config.epoch_examples = epoch_examples;
  config.include_total = !output_only;
  config.seed = seed;
  config.heads.clear();
  std::stringstream ss(heads_csv);
  std::string item;
  while (std::getline(ss, item, ','))
    if (!item.empty()) config.heads.push_back(head_kind_from_name(item));
  if (config.heads.empty()) throw ConfigError("--heads is empty");
  std::vector<BenchRow> rows = run_bench(config);
  std::string csv = bench_csv(rows);
  if (out.empty()) {
    std::cout << csv;
  } else {
    std::ofstream os = open_output(out);
    os << csv;
    std::cout << "bench -> " << out << "\n";
  }
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "zloss: spherical-loss training for very large output layers"};
  app.require_subcommand(1);

  // build-vocab
  auto* sc_vocab = app.add_subcommand("build-vocab",
                                      "build a frequency-ordered vocabulary");
  std::string corpus_path;
  std::string vocab_out = "vocab.txt";
  std::size_t max_size = 0;
  std::uint64_t min_count = 1;
  sc_vocab->add_option("--corpus", corpus_path, "training text, one sentence per line")
      ->required();
  sc_vocab->add_option("--out", vocab_out, "output vocab file");
  sc_vocab->add_option("--max-size", max_size, "keep the most frequent N tokens (0 = all)");
  sc_vocab->add_option("--min-count", min_count, "drop tokens rarer than this");

  // train
  RunOptions opt;
  std::string train_config_path;
  auto* sc_train = app.add_subcommand("train", "train an n-gram language model");
  sc_train->add_option("--config", train_config_path,
                       "flat key=value config file (flags win)");
  sc_train->add_option("--train", opt.train_path, "training corpus");
  sc_train->add_option("--valid", opt.valid_path, "validation corpus");
  sc_train->add_option("--test", opt.test_path, "test corpus (final report)");
  sc_train->add_option("--vocab", opt.vocab_path, "vocab file from build-vocab");
  sc_train->add_option("--out", opt.out_dir, "run directory");
  sc_train->add_option("--loss", opt.loss,
                       "zloss|mse|taylor|logsoftmax|ce|sz");
  sc_train->add_option("--head", opt.head, "dense|factored|hsm");
  sc_train->add_option("--a", opt.a, "Z-loss scale hyperparameter");
  sc_train->add_option("--b", opt.b, "Z-loss shift hyperparameter");
  sc_train->add_option("--context", opt.context, "context length (n-1)");
  sc_train->add_option("--batch", opt.batch, "minibatch size");
  sc_train->add_option("--eta", opt.eta, "initial learning rate");
  sc_train->add_option("--emb", opt.emb, "embedding dimension");
  sc_train->add_option("--hidden", opt.hidden, "hidden layer sizes")
      ->delimiter(',');
  sc_train->add_option("--activation", opt.activation, "tanh|relu");
  sc_train->add_option("--kset", opt.k_set, "top-k set")->delimiter(',');
  sc_train->add_option("--seed", opt.seed, "random seed");
  sc_train->add_option("--init-scale", opt.init_scale, "weight init scale");
  sc_train->add_flag("--output-bias", opt.output_bias,
                     "append a constant-1 hidden feature");
  sc_train->add_option("--refactor-period", opt.refactor_period,
                       "factored layer refactorization period");
  sc_train->add_option("--epochs", opt.epochs, "training epochs");
  sc_train->add_option("--eval-every", opt.eval_every,
                       "evaluate every N examples (0: per epoch)");
  sc_train->add_option("--patience", opt.patience, "plateau patience");
  sc_train->add_option("--decay", opt.decay, "plateau decay factor");
  sc_train->add_option("--plateau-metric", opt.plateau_metric,
                       "top1|top5|mrr");
  sc_train->add_option("--sweep", opt.sweep,
                       "grid, e.g. a=0.05,0.1,0.2,0.4 (one run dir per value)");
  sc_train->add_option("--preset", opt.preset, "fig1|ptb parameter presets");

  ConfigBinder train_binder(sc_train);
  train_binder.bind("train", opt.train_path);
  train_binder.bind("valid", opt.valid_path);
  train_binder.bind("test", opt.test_path);
  train_binder.bind("vocab", opt.vocab_path);
  train_binder.bind("out", opt.out_dir);
  train_binder.bind("loss", opt.loss);
  train_binder.bind("head", opt.head);
  train_binder.bind("a", opt.a);
  train_binder.bind("b", opt.b);
  train_binder.bind("context", opt.context);
  train_binder.bind("batch", opt.batch);
  train_binder.bind("eta", opt.eta);
  train_binder.bind("emb", opt.emb);
  train_binder.bind("hidden", opt.hidden);
  train_binder.bind("activation", opt.activation);
  train_binder.bind("kset", opt.k_set);
  train_binder.bind("seed", opt.seed);
  train_binder.bind("init-scale", opt.init_scale);
  train_binder.bind("output-bias", opt.output_bias);
  train_binder.bind("refactor-period", opt.refactor_period);
  train_binder.bind("epochs", opt.epochs);
  train_binder.bind("eval-every", opt.eval_every);
  train_binder.bind("patience", opt.patience);
  train_binder.bind("decay", opt.decay);
  train_binder.bind("plateau-metric", opt.plateau_metric);
  train_binder.bind("sweep", opt.sweep);
  train_binder.bind("preset", opt.preset);

  // eval
  auto* sc_eval = app.add_subcommand("eval", "evaluate a checkpoint");
  std::string ckpt_path;
  std::string eval_vocab;
  std::string eval_data;
  std::string eval_out;
  std::vector<std::size_t> eval_kset = {1, 5, 10, 20, 50, 100};
  sc_eval->add_option("--checkpoint", ckpt_path)->required();
  sc_eval->add_option("--vocab", eval_vocab)->required();
  sc_eval->add_option("--data", eval_data)->required();
  sc_eval->add_option("--kset", eval_kset)->delimiter(',');
  sc_eval->add_option("--out", eval_out, "report path (default: stdout)");

  // gradcheck
  auto* sc_grad = app.add_subcommand(
      "gradcheck", "finite-difference validation of loss gradients");
  std::string grad_loss = "all";
  std::vector<std::size_t> grad_dims = {5, 50, 1000};
  std::size_t grad_trials = 100;
  double grad_eps = 1e-5;
  double grad_a = 0.1;
  double grad_b = 10.0;
  std::uint64_t grad_seed = 20260809;
  sc_grad->add_option("--loss", grad_loss, "loss kind or 'all'");
  sc_grad->add_option("--dims", grad_dims, "output dimensions")
      ->delimiter(',');
  sc_grad->add_option("--trials", grad_trials, "random trials per dimension");
  sc_grad->add_option("--eps", grad_eps, "finite difference step");
  auto* opt_a = sc_grad->add_option("--a", grad_a, "fix the a parameter");
  sc_grad->add_option("--b", grad_b, "fix the b parameter");
  sc_grad->add_option("--seed", grad_seed, "random seed");

  // bench
  auto* sc_bench = app.add_subcommand(
      "bench", "output-layer scaling benchmark (CSV)");
  std::string bench_config_path;
  sc_bench->add_option("--config", bench_config_path,
                       "flat key=value config file (flags win)");
  std::vector<std::size_t> dlist = {20000, 200000};
  std::size_t bench_d = 512;
  std::size_t bench_steps = 2000;
  std::size_t bench_batch = 100;
  std::string bench_heads = "dense,factored,hsm";
  std::string bench_loss = "logsoftmax";
  double epoch_examples = 150e6;
  std::string bench_out;
  bool bench_output_only = false;
  std::uint64_t bench_seed = 7;
  sc_bench->add_option("--dlist", dlist, "class counts")->delimiter(',');
  sc_bench->add_option("--d", bench_d, "hidden dimension");
  sc_bench->add_option("--steps", bench_steps, "examples per timing");
  sc_bench->add_option("--batch", bench_batch, "whole-model minibatch size");
  sc_bench->add_option("--heads", bench_heads, "subset of dense,factored,hsm");
  sc_bench->add_option("--loss", bench_loss, "dense head loss kind");
  sc_bench->add_option("--epoch-examples", epoch_examples,
                       "examples per extrapolated epoch");
  sc_bench->add_option("--out", bench_out, "CSV path (default: stdout)");
  sc_bench->add_flag("--output-only", bench_output_only,
                     "skip the whole-model timing");
  sc_bench->add_option("--seed", bench_seed, "random seed");

  ConfigBinder bench_binder(sc_bench);
  bench_binder.bind("dlist", dlist);
  bench_binder.bind("d", bench_d);
  bench_binder.bind("steps", bench_steps);
  bench_binder.bind("batch", bench_batch);
  bench_binder.bind("heads", bench_heads);
  bench_binder.bind("loss", bench_loss);
  bench_binder.bind("epoch-examples", epoch_examples);
  bench_binder.bind("out", bench_out);
  bench_binder.bind("output-only", bench_output_only);
  bench_binder.bind("seed", bench_seed);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitConfig;
  }

  try {
    if (!train_config_path.empty())
      train_binder.apply(read_flat_config(train_config_path));
    if (!bench_config_path.empty())
      bench_binder.apply(read_flat_config(bench_config_path));
    if (sc_vocab->parsed())
      return cmd_build_vocab(corpus_path, vocab_out, max_size, min_count);
    if (sc_train->parsed()) return cmd_train(opt);
    if (sc_eval->parsed())
      return cmd_eval(ckpt_path, eval_vocab, eval_data, eval_kset, eval_out);
    if (sc_grad->parsed())
      return cmd_gradcheck(grad_loss, grad_dims, grad_trials, grad_eps,
                           grad_a, grad_b, !opt_a->empty(), grad_seed);
    if (sc_bench->parsed())
      return cmd_bench(dlist, bench_d, bench_steps, bench_batch, bench_heads,
                       bench_loss, epoch_examples, bench_out,
                       bench_output_only, bench_seed);
  } catch (const ConfigError& e) {
    std::cerr << "configuration error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const DataError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return kExitData;
  } catch (const NumericError& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return kExitNumeric;
  }
  return kExitConfig;
}
