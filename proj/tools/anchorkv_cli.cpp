// Copyright (C) 2026 The anchorkv Authors
// SPDX-License-Identifier: Apache-2.0

// Command-line driver: train, generate, needle, analyze, bench.
// Exit codes: 0 success, 1 input error, 2 numeric error.

#include <CLI11.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "anchorkv/analysis/heatmap.hpp"
#include "anchorkv/analysis/record.hpp"
#include "anchorkv/analysis/sparsity.hpp"
#include "anchorkv/analysis/wov.hpp"
#include "anchorkv/anchor/anchored_sequence.hpp"
#include "anchorkv/anchor/laa.hpp"
#include "anchorkv/errors.hpp"
#include "anchorkv/harness/bench.hpp"
#include "anchorkv/harness/corpus.hpp"
#include "anchorkv/harness/eval.hpp"
#include "anchorkv/harness/train.hpp"
#include "anchorkv/harness/vocab.hpp"
#include "anchorkv/model/checkpoint.hpp"
#include "anchorkv/model/decode.hpp"
#include "anchorkv/model/weights.hpp"

namespace {

using namespace anchorkv;
using harness::Vocabulary;

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open '" + path + "'");
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

/// Writes `text` to `path`, or to stdout when the path is "-" or empty.
void write_output(const std::string& path, const std::string& text) {
  if (path.empty() || path == "-") {
    std::cout << text;
    return;
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot write '" + path + "'");
  out << text;
  if (!out) throw InputError("failed writing '" + path + "'");
}

cache::PolicySpec parse_policy(const std::string& text) {
  return cache::PolicySpec::parse(text, Vocabulary::kLinebreak, Vocabulary::kAnchor);
}

harness::CorpusStyle parse_style(const std::string& s) {
  if (s == "lines") return harness::CorpusStyle::kLines;
  if (s == "membership") return harness::CorpusStyle::kMembership;
  throw InputError("corpus style must be 'lines' or 'membership', got '" + s + "'");
}

/// Prompt text from --prompt or --prompt-file; a trailing newline in a file
/// is kept, so a prompt may end on a completed line.
std::vector<TokenId> read_prompt(const std::string& text, const std::string& file) {
  if (!file.empty()) return Vocabulary::encode(read_file(file));
  if (text.empty()) throw InputError("give a prompt with --prompt or --prompt-file");
  return Vocabulary::encode(text);
}

/// Attention plan for analysis: anchored models see the anchor plan.
struct Planned {
  std::vector<TokenId> tokens;
  model::AttentionPlan plan;
};

Planned plan_for(const model::ModelWeights& w, const std::vector<TokenId>& raw) {
  if (w.config.taa_layers.empty()) return {raw, model::AttentionPlan::causal(raw.size())};
  const auto seq = anchor::plant_anchors(raw, Vocabulary::kLinebreak, Vocabulary::kAnchor);
  return {seq.tokens, anchor::make_anchor_plan(seq, w.config.n_heads)};
}

struct TrainArgs {
  std::string config, style = "lines", out = "model.akv", loss_csv;
  std::size_t steps = 400, batch = 8, tokens = 400000, sequence_tokens = 192, max_list = 128;
  std::size_t warmup = 20;
  double lr = 3e-3;
  bool anchored = false, curriculum = false;
};

int run_train(const TrainArgs& a, std::uint64_t seed) {
  model::ModelConfig cfg;
  if (!a.config.empty()) cfg = model::ModelConfig::from_json(read_file(a.config));
  if (a.anchored && cfg.taa_layers.empty()) {
    for (std::size_t l = 0; l < cfg.n_layers; ++l) cfg.taa_layers.insert(l);
    cfg.laa_anchor_layer = 0;
  }
  cfg.seed = seed;
  numerics::Rng init(seed);
  auto w = model::init_model(cfg, init);

  harness::TrainOptions o;
  o.steps = a.steps;
  o.batch_size = a.batch;
  o.lr = a.lr;
  o.warmup = a.warmup;
  o.anchored = a.anchored;
  o.seed = seed;
  std::ostringstream losses;
  losses << "step,loss\n";
  o.on_step = [&](std::size_t step, double loss) {
    losses << step << ',' << loss << '\n';
    if ((step + 1) % 50 == 0) std::fprintf(stderr, "step %zu loss %.4f\n", step + 1, loss);
  };

  const auto style = parse_style(a.style);
  harness::TrainReport report;
  if (style == harness::CorpusStyle::kMembership && a.curriculum) {
    const auto stages = harness::default_membership_curriculum();
    report = harness::train_membership(w, stages, o, a.tokens);
  } else {
    harness::CorpusOptions co;
    co.sequence_tokens = a.sequence_tokens;
    co.min_list = 2;
    co.max_list = a.max_list;
    numerics::Rng rng(seed + 1);
    const auto corpus = harness::make_corpus(rng, a.tokens, style, co);
    if (style == harness::CorpusStyle::kMembership)
      o.target_weights = [](std::span<const TokenId> t) {
        return harness::membership_target_weights(t);
      };
    report = harness::train(w, corpus, o);
  }
  model::save_checkpoint(w, a.out);
  if (!a.loss_csv.empty()) write_output(a.loss_csv, losses.str());
  std::printf("trained %zu steps, final loss %.4f, saved %s\n", report.losses.size(),
              report.losses.empty() ? 0.0 : report.losses.back(), a.out.c_str());
  return 0;
}

struct GenerateArgs {
  std::string checkpoint, prompt, prompt_file, policy = "dense", budget_json;
  std::size_t max_new = 64;
  bool no_mhpe = false;
};

int run_generate(const GenerateArgs& a) {
  const auto w = model::load_checkpoint(a.checkpoint);
  const auto prompt = read_prompt(a.prompt, a.prompt_file);
  const auto spec = parse_policy(a.policy);
  model::DecodeOptions opts;
  opts.use_mhpe = !a.no_mhpe;
  // Runs a session directly so the cache budget can be reported.
  model::DecodeSession session(w, spec, opts);
  if (prompt.empty()) throw InputError("generate: empty prompt");
  auto logits = session.prefill(prompt);
  std::vector<TokenId> out = prompt;
  for (std::size_t i = 0; i < a.max_new; ++i) {
    const TokenId t = model::greedy_token(logits, w.config.anchor_token_id);
    out.push_back(t);
    if (i + 1 == a.max_new || session.position() + 2 > w.config.max_seq) break;
    logits = session.feed(t);
  }
  std::cout << Vocabulary::decode(out) << '\n';
  if (!a.budget_json.empty()) write_output(a.budget_json, session.budget().to_json() + "\n");
  return 0;
}

struct NeedleArgs {
  std::string checkpoint, policy = "dense", out;
  std::vector<std::size_t> lengths{16, 32, 64, 128};
  std::vector<double> depths{0.0, 0.25, 0.5, 0.75, 1.0};
  std::size_t trials = 32;
};

int run_needle(const NeedleArgs& a, std::uint64_t seed) {
  const auto w = model::load_checkpoint(a.checkpoint);
  const auto grid =
      harness::eval_needle_grid(w, parse_policy(a.policy), a.lengths, a.depths, a.trials, seed);
  write_output(a.out, grid.to_csv());
  return 0;
}

struct AnalyzeArgs {
  std::string checkpoint, out, json, eigen_out, prompt, prompt_file;
  std::size_t sequences = 8, sequence_tokens = 192, exclude_sinks = 0, layer = 0;
  int head = -1;
};

int run_sparsity(const AnalyzeArgs& a, std::uint64_t seed) {
  const auto w = model::load_checkpoint(a.checkpoint);
  harness::CorpusOptions co;
  co.sequence_tokens = a.sequence_tokens;
  numerics::Rng rng(seed);
  const auto corpus = harness::make_corpus(rng, a.sequences * a.sequence_tokens,
                                           harness::CorpusStyle::kLines, co);
  std::vector<analysis::AttentionRecord> records;
  for (const auto& s : corpus) {
    const auto p = plan_for(w, s);
    records.push_back(analysis::capture_attention(w, p.tokens, p.plan));
  }
  const auto classes = analysis::TokenClasses::linebreak_vs_other(
      w.config.vocab_size, Vocabulary::kLinebreak, Vocabulary::kAnchor);
  const auto report = analysis::sparsity_report(records, classes, a.exclude_sinks);
  write_output(a.out, report.to_csv());
  if (!a.json.empty()) write_output(a.json, report.to_json() + "\n");
  return 0;
}

int run_wov(const AnalyzeArgs& a) {
  const auto report = analysis::wov_eigen_report(model::load_checkpoint(a.checkpoint));
  write_output(a.out, report.to_csv());
  if (!a.eigen_out.empty()) write_output(a.eigen_out, report.eigenvalues_csv());
  return 0;
}

int run_heatmap(const AnalyzeArgs& a) {
  const auto w = model::load_checkpoint(a.checkpoint);
  const auto p = plan_for(w, read_prompt(a.prompt, a.prompt_file));
  const auto record = analysis::capture_attention(w, p.tokens, p.plan);
  std::vector<std::string> labels;
  for (TokenId t : p.tokens) labels.push_back(Vocabulary::label(t));
  const std::optional<std::size_t> head =
      a.head < 0 ? std::nullopt : std::optional<std::size_t>(static_cast<std::size_t>(a.head));
  write_output(a.out, analysis::export_heatmap(record, a.layer, head, labels));
  return 0;
}

struct BenchArgs {
  std::string checkpoint, out;
  std::vector<std::string> policies{"dense", "anchor"};
  std::size_t prompt_len = 512, gen_len = 512, repeats = 5;
};

int run_bench(const BenchArgs& a, std::uint64_t seed) {
  auto w = model::load_checkpoint(a.checkpoint);
  // Planted anchors add at most one position per line; leave room for them.
  w.config.max_seq = std::max(w.config.max_seq, 2 * (a.prompt_len + a.gen_len) + 2);
  harness::CorpusOptions co;
  co.sequence_tokens = a.prompt_len + 64;
  numerics::Rng rng(seed);
  auto prompt = harness::make_corpus(rng, 1, harness::CorpusStyle::kLines, co).front();
  prompt.resize(a.prompt_len);
  harness::BenchOptions bo;
  bo.repeats = a.repeats;
  std::ostringstream csv;
  csv << harness::RuntimeReport::csv_header() << '\n';
  for (const auto& p : a.policies)
    csv << harness::bench_runtime(w, parse_policy(p), prompt, a.gen_len, bo).csv_row() << '\n';
  write_output(a.out, csv.str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"anchorkv: anchor-based KV cache compression on a toy transformer"};
  app.require_subcommand(1);
  std::uint64_t seed = 0;
  app.add_option("--seed", seed, "Seed for every randomized step")->capture_default_str();

  TrainArgs ta;
  auto* train = app.add_subcommand("train", "Train a model and write an AKV1 checkpoint");
  train->add_option("--config", ta.config, "Model config JSON (defaults otherwise)");
  train->add_option("--corpus", ta.style, "Corpus style: lines | membership")->capture_default_str();
  train->add_option("--steps", ta.steps)->capture_default_str();
  train->add_option("--batch", ta.batch)->capture_default_str();
  train->add_option("--lr", ta.lr)->capture_default_str();
  train->add_option("--warmup", ta.warmup)->capture_default_str();
  train->add_option("--tokens", ta.tokens, "Corpus size in tokens")->capture_default_str();
  train->add_option("--sequence-tokens", ta.sequence_tokens)->capture_default_str();
  train->add_option("--max-list", ta.max_list, "Longest membership list")->capture_default_str();
  train->add_flag("--anchored", ta.anchored,
                  "Plant anchors and train with anchor attention (all layers TAA, LAA from "
                  "layer 0, unless the config names TAA layers)");
  train->add_flag("--curriculum", ta.curriculum, "Membership: staged list lengths");
  train->add_option("--out", ta.out, "Checkpoint path")->capture_default_str();
  train->add_option("--loss-csv", ta.loss_csv, "Write step,loss to this file");

  GenerateArgs ga;
  auto* gen = app.add_subcommand("generate", "Greedy generation under a KV policy");
  gen->add_option("--checkpoint", ga.checkpoint)->required();
  gen->add_option("--prompt", ga.prompt, "Prompt text");
  gen->add_option("--prompt-file", ga.prompt_file, "Prompt file");
  gen->add_option("--max-new", ga.max_new)->capture_default_str();
  gen->add_option("--policy", ga.policy, "dense | window:W | streaming:S,W | h2o:F | anchor[:S]")
      ->capture_default_str();
  gen->add_flag("--no-mhpe", ga.no_mhpe, "Rotate anchor keys at their own position");
  gen->add_option("--budget-json", ga.budget_json, "Write the cache budget report here");

  NeedleArgs na;
  auto* needle = app.add_subcommand("needle", "Needle-in-a-haystack accuracy grid (CSV)");
  needle->add_option("--checkpoint", na.checkpoint)->required();
  needle->add_option("--policy", na.policy)->capture_default_str();
  needle->add_option("--lengths", na.lengths)->delimiter(',')->capture_default_str();
  needle->add_option("--depths", na.depths)->delimiter(',')->capture_default_str();
  needle->add_option("--trials", na.trials)->capture_default_str();
  needle->add_option("--out", na.out, "CSV path (stdout by default)");

  AnalyzeArgs aa;
  auto* analyze = app.add_subcommand("analyze", "Attention sparsity, W_OV spectra, heatmaps");
  analyze->require_subcommand(1);
  auto* sparsity = analyze->add_subcommand("sparsity", "Per-layer Gini and top-2 (CSV, JSON)");
  auto* wov = analyze->add_subcommand("wov", "Eigenvalues of each head's W_V W_O (CSV)");
  auto* heatmap = analyze->add_subcommand("heatmap", "One layer's attention grid (CSV)");
  for (auto* sub : {sparsity, wov, heatmap}) {
    sub->add_option("--checkpoint", aa.checkpoint)->required();
    sub->add_option("--out", aa.out, "CSV path (stdout by default)");
  }
  sparsity->add_option("--json", aa.json, "Also write the JSON report here");
  sparsity->add_option("--sequences", aa.sequences)->capture_default_str();
  sparsity->add_option("--sequence-tokens", aa.sequence_tokens)->capture_default_str();
  sparsity->add_option("--exclude-sinks", aa.exclude_sinks)->capture_default_str();
  wov->add_option("--eigen-out", aa.eigen_out, "Full eigenvalue dump");
  heatmap->add_option("--prompt", aa.prompt);
  heatmap->add_option("--prompt-file", aa.prompt_file);
  heatmap->add_option("--layer", aa.layer)->capture_default_str();
  heatmap->add_option("--head", aa.head, "Head index; negative averages heads")
      ->capture_default_str();

  BenchArgs ba;
  auto* bench = app.add_subcommand("bench", "Prefill and decode timings (CSV)");
  bench->add_option("--checkpoint", ba.checkpoint)->required();
  bench->add_option("--prompt-len", ba.prompt_len)->capture_default_str();
  bench->add_option("--gen-len", ba.gen_len)->capture_default_str();
  bench->add_option("--repeats", ba.repeats)->capture_default_str();
  bench->add_option("--policy", ba.policies, "Repeatable")->capture_default_str();
  bench->add_option("--out", ba.out, "CSV path (stdout by default)");

  for (auto* sub : {train, needle, sparsity, bench})
    sub->add_option("--seed", seed, "Seed for every randomized step")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (*train) return run_train(ta, seed);
    if (*gen) return run_generate(ga);
    if (*needle) return run_needle(na, seed);
    if (*sparsity) return run_sparsity(aa, seed);
    if (*wov) return run_wov(aa);
    if (*heatmap) return run_heatmap(aa);
    if (*bench) return run_bench(ba, seed);
  } catch (const Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return e.exit_code();
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 1;
}
