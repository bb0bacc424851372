// Copyright (C) 2026 The anchorkv Authors
// SPDX-License-Identifier: Apache-2.0

// Acceptance checks. Prints one PASS/FAIL line per criterion and exits
// non-zero if any fails. Optional arguments select criteria by number.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <exception>
#include <functional>
#include <numeric>
#include <set>
#include <sstream>
#include <string>

#include "anchorkv/analysis/record.hpp"
#include "anchorkv/analysis/sparsity.hpp"
#include "anchorkv/analysis/wov.hpp"
#include "anchorkv/anchor/anchored_sequence.hpp"
#include "anchorkv/anchor/laa.hpp"
#include "anchorkv/anchor/mask.hpp"
#include "anchorkv/anchor/mhpe.hpp"
#include "anchorkv/cache/budget.hpp"
#include "anchorkv/cache/policy.hpp"
#include "anchorkv/harness/bench.hpp"
#include "anchorkv/harness/corpus.hpp"
#include "anchorkv/harness/eval.hpp"
#include "anchorkv/harness/train.hpp"
#include "anchorkv/harness/vocab.hpp"
#include "anchorkv/model/attention.hpp"
#include "anchorkv/model/forward.hpp"
#include "anchorkv/model/rope.hpp"
#include "anchorkv/model/weights.hpp"
#include "oracles.hpp"

namespace anchorkv {
namespace {

using cache::PolicySpec;
using harness::Vocabulary;
using model::AttentionPlan;
using model::ModelConfig;
using model::ModelWeights;
using numerics::Matrix;

constexpr TokenId kLb = Vocabulary::kLinebreak;
constexpr TokenId kAnc = Vocabulary::kAnchor;

struct Outcome {
  bool pass = false;
  std::string detail;
};

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

Matrix random_matrix(std::size_t r, std::size_t c, numerics::Rng& rng) {
  Matrix m(r, c);
  for (double& v : m.storage()) v = rng.normal();
  return m;
}

std::vector<TokenId> random_tokens(numerics::Rng& rng, std::size_t n) {
  std::vector<TokenId> t(n);
  for (auto& x : t) x = rng.below(6) == 0 ? kLb : static_cast<TokenId>(rng.below(95));
  return t;
}

ModelWeights make_model(ModelConfig cfg, std::uint64_t seed) {
  numerics::Rng rng(seed);
  return model::init_model(cfg, rng);
}

// 1 -----------------------------------------------------------------------
Outcome mask_oracle() {
  const auto t0 = std::chrono::steady_clock::now();
  std::size_t cases = 0, mismatches = 0;
  for (std::size_t n = 1; n <= 32; ++n)
    for (const auto& anchors : oracle::anchor_subsets(n, 4)) {
      ++cases;
      mismatches += anchor::build_anchor_mask(n, anchors).bias() != oracle::algorithm1_mask(n, anchors);
    }
  const double secs = seconds_since(t0);
  return {mismatches == 0 && secs < 30.0,
          fmt("%zu masks, %zu mismatches, %.1fs (limit 30s)", cases, mismatches, secs)};
}

// 2 -----------------------------------------------------------------------
Outcome attention_correctness() {
  numerics::Rng rng(2);
  ModelConfig cfg;
  cfg.d_model = 32;
  cfg.n_layers = 3;
  cfg.taa_layers = {1, 2};
  cfg.laa_anchor_layer = 1;
  const auto w = make_model(cfg, 21);

  double worst_row = 0.0;
  std::size_t rows = 0;
  for (int t = 0; t < 20; ++t) {
    const auto seq = anchor::plant_anchors(random_tokens(rng, 10 + rng.below(60)), kLb, kAnc);
    const auto trace = model::forward(w, seq.tokens, anchor::make_anchor_plan(seq, cfg.n_heads), true);
    for (const auto& layer : trace.attention)
      for (const auto& head : layer)
        for (std::size_t r = 0; r < head.rows(); ++r, ++rows) {
          const auto row = head.row(r);
          worst_row = std::max(worst_row, std::abs(std::accumulate(row.begin(), row.end(), 0.0) - 1.0));
        }
  }

  ModelConfig dense = cfg;
  dense.taa_layers.clear();
  dense.laa_anchor_layer.reset();
  const auto wd = make_model(dense, 22);
  double worst_cut = 0.0;
  for (int t = 0; t < 50; ++t) {
    const std::size_t n = 4 + rng.below(40);
    std::vector<TokenId> tokens(n);
    for (auto& x : tokens) x = static_cast<TokenId>(rng.below(96));
    const std::size_t j = 1 + rng.below(n - 1);
    AttentionPlan masked = AttentionPlan::causal(n);
    masked.dense_mask.hide_column(j);
    masked.taa_mask = masked.dense_mask;
    const auto full = model::forward(wd, tokens, masked).logits;
    auto cut = tokens;
    cut.erase(cut.begin() + static_cast<std::ptrdiff_t>(j));
    AttentionPlan plan = AttentionPlan::causal(n - 1);
    for (std::size_t i = j; i + 1 < n; ++i) plan.positions[i] = static_cast<std::int64_t>(i + 1);
    const auto reduced = model::forward(wd, cut, plan).logits;
    for (std::size_t i = 0, r = 0; i < n; ++i) {
      if (i == j) continue;
      for (std::size_t c = 0; c < full.cols(); ++c)
        worst_cut = std::max(worst_cut, std::abs(full(i, c) - reduced(r, c)));
      ++r;
    }
  }
  return {worst_row <= 1e-9 && worst_cut <= 1e-8,
          fmt("%zu rows, max |sum-1| %.2e (limit 1e-9); 50 cut cases, max diff %.2e (limit 1e-8)",
              rows, worst_row, worst_cut)};
}

// 3 -----------------------------------------------------------------------
Outcome gradient_fidelity() {
  const auto t0 = std::chrono::steady_clock::now();
  struct Variant {
    const char* name;
    bool taa;
    bool mhpe;
    bool laa;
  };
  const Variant variants[] = {{"dense", false, false, false},
                              {"taa", true, false, false},
                              {"taa+mhpe", true, true, false},
                              {"taa+mhpe+laa", true, true, true}};
  double worst = 0.0;
  std::string worst_at;
  std::size_t tensors = 0;
  for (const auto& v : variants) {
    ModelConfig cfg;
    cfg.d_model = 16;
    cfg.n_layers = 2;
    cfg.max_seq = 64;
    if (v.taa) cfg.taa_layers = {0, 1};
    if (v.laa) cfg.laa_anchor_layer = 0;
    const auto w = make_model(cfg, 31);
    numerics::Rng rng(32);
    std::vector<model::TrainingExample> batch;
    for (int e = 0; e < 2; ++e) {
      auto tokens = random_tokens(rng, 14);
      tokens[4] = tokens[9] = kLb;
      const auto seq = anchor::plant_anchors(tokens, kLb, kAnc);
      anchor::AnchorPlanOptions opts;
      opts.sinks = 1;
      opts.mhpe = v.mhpe;
      batch.push_back({seq.tokens,
                       v.taa ? anchor::make_anchor_plan(seq, cfg.n_heads, opts)
                             : AttentionPlan::causal(seq.size()),
                       {}});
    }
    for (const auto& r : oracle::finite_difference_check(w, batch, 1e-5)) {
      ++tensors;
      if (r.rel_error > worst) {
        worst = r.rel_error;
        worst_at = std::string(v.name) + "/" + r.tensor;
      }
    }
  }
  const double secs = seconds_since(t0);
  return {worst < 1e-4 && secs < 300.0,
          fmt("%zu tensors over 4 configs, max rel error %.2e at %s (limit 1e-4), %.1fs (limit 300s)",
              tensors, worst, worst_at.c_str(), secs)};
}

// 4 -----------------------------------------------------------------------
Outcome rope_mhpe_identities() {
  numerics::Rng rng(4);
  double worst_norm = 0.0, worst_shift = 0.0;
  bool unit_exact = true;
  auto dot = [](const std::vector<double>& a, const std::vector<double>& b) {
    return std::inner_product(a.begin(), a.end(), b.begin(), 0.0);
  };
  for (int t = 0; t < 100; ++t) {
    const std::size_t d = 2 * (1 + rng.below(16));
    std::vector<double> q(d), k(d);
    for (double& x : q) x = rng.normal();
    for (double& x : k) x = rng.normal();
    const auto m = static_cast<std::int64_t>(rng.below(4096));
    const auto n = static_cast<std::int64_t>(rng.below(4096));
    const auto c = static_cast<std::int64_t>(rng.below(4096));
    const auto rq = model::apply_rope(q, m, 10000.0);
    worst_norm = std::max(worst_norm, std::abs(std::sqrt(dot(rq, rq)) - std::sqrt(dot(q, q))));
    worst_shift = std::max(
        worst_shift, std::abs(dot(rq, model::apply_rope(k, n, 1e4)) -
                              dot(model::apply_rope(q, m + c, 1e4), model::apply_rope(k, n + c, 1e4))));

    // A unit span compresses one position; every head rotates to it.
    const std::size_t heads = 1 + rng.below(8);
    const anchor::AnchorSpan span{m, m + 2};
    const auto positions = anchor::span_head_positions(span, heads);
    std::vector<double> keys(heads * d);
    for (double& x : keys) x = rng.normal();
    const auto rotated = anchor::mhpe_rotate_keys(keys, positions, 10000.0);
    for (std::size_t h = 0; h < heads; ++h) {
      const auto ref = model::apply_rope(std::span<const double>(keys).subspan(h * d, d), m + 1, 1e4);
      unit_exact = unit_exact && positions[h] == m + 1 &&
                   std::equal(ref.begin(), ref.end(), rotated.begin() + static_cast<std::ptrdiff_t>(h * d));
    }
  }
  return {worst_norm <= 1e-9 && worst_shift <= 1e-9 && unit_exact,
          fmt("norm %.2e, shift %.2e (limit 1e-9) over 100 cases; unit-span MHPE %s", worst_norm,
              worst_shift, unit_exact ? "exact" : "differs")};
}

// 5 -----------------------------------------------------------------------
Outcome laa_sanity() {
  numerics::Rng rng(5);
  bool bit_equal = true;
  double worst = 0.0;
  for (int t = 0; t < 50; ++t) {
    const std::size_t n = 2 + rng.below(30), dk = 2 * (1 + rng.below(8));
    const auto q = random_matrix(n, dk, rng), k = random_matrix(n, dk, rng),
               v = random_matrix(n, dk, rng);
    std::vector<std::size_t> anchors;
    for (std::size_t p = 1; p < n; ++p)
      if (rng.below(4) == 0) anchors.push_back(p);
    const auto mask = anchor::build_anchor_mask(n, anchors);
    const double scale = 1.0 / std::sqrt(static_cast<double>(dk));
    const auto ref = model::attend_head(q, k, v, nullptr, nullptr, &mask.bias(), scale);
    const auto empty = anchor::laa_attend(q, k, v, Matrix(), Matrix(), mask, dk);
    bit_equal = bit_equal && empty.output == ref.output && empty.weights == ref.weights;
    const auto dup = anchor::laa_attend(q, k, v, k, v, mask, dk);
    worst = std::max(worst, numerics::max_abs_diff(dup.output, ref.output));
  }
  return {bit_equal && worst <= 1e-9,
          fmt("empty anchor KV %s; duplicated KV max diff %.2e (limit 1e-9)",
              bit_equal ? "bit-identical" : "differs", worst)};
}

// 6 -----------------------------------------------------------------------
Outcome memory_arithmetic() {
  const auto bytes = cache::estimate_cache_bytes(32, 1024, 4096, 2, 32);
  const double dense = cache::ratio_gb_per_token(1.73, 55.74);
  const double anchor = cache::ratio_gb_per_token(0.53, 56.12);
  const double e_dense = std::abs(dense / 3.10e-2 - 1.0), e_anchor = std::abs(anchor / 9.44e-3 - 1.0);
  return {bytes == 17179869184ull && e_dense <= 0.005 && e_anchor <= 0.005,
          fmt("bytes %llu (want 17179869184); dense %.4e (%.2f%% off), anchor %.4e (%.2f%% off), "
              "limit 0.5%%",
              static_cast<unsigned long long>(bytes), dense, 100 * e_dense, anchor, 100 * e_anchor)};
}

// 7 -----------------------------------------------------------------------
Outcome budget_accounting() {
  std::vector<TokenId> raw;
  for (int line = 0; line < 10; ++line) {
    for (int i = 0; i < 9; ++i) raw.push_back(Vocabulary::id_of(static_cast<char>('a' + line)));
    raw.push_back(kLb);
  }
  const auto planted = anchor::plant_anchors(raw, kLb, kAnc).tokens;
  std::vector<std::size_t> sizes;
  for (const auto& s : cache::simulate_policy(PolicySpec::anchor(kLb, kAnc, 4), planted))
    sizes.push_back(s.size());
  const auto report = cache::budget_of(sizes, raw.size());

  bool window_ok = true;
  const std::vector<TokenId> stream(300, 1);
  for (std::size_t w : {1u, 7u, 32u, 128u, 512u}) {
    const auto trace = cache::simulate_policy(PolicySpec::window_of(w), stream);
    for (std::size_t s = 0; s < trace.size(); ++s)
      window_ok = window_ok && trace[s].size() == std::min(s + 1, w);
  }
  return {report.budget_percent == 24.0 && window_ok,
          fmt("anchor peak %zu of %zu = %.4f%% (want 24%%); window sizes %s", report.peak_retained,
              raw.size(), report.budget_percent, window_ok ? "== min(step+1, w)" : "wrong")};
}

// 8 -----------------------------------------------------------------------
Outcome sparsity_metrics() {
  numerics::Rng rng(8);
  double worst_pair = 0.0, worst_scale = 0.0;
  for (int t = 0; t < 100; ++t) {
    std::vector<double> w(1 + rng.below(512));
    for (double& x : w) x = rng.uniform();
    const double g = analysis::gini_double_sum(w);
    worst_pair = std::max(worst_pair, std::abs(g - analysis::gini_sorted(w)));
    const double c = 1e-3 + 1e3 * rng.uniform();
    for (double& x : w) x *= c;
    worst_scale = std::max(worst_scale, std::abs(analysis::gini_double_sum(w) - g));
  }
  bool one_hot = true;
  for (std::size_t n = 1; n <= 512; ++n) {
    std::vector<double> w(n, 0.0);
    w[n - 1] = 1.0;
    const double want = static_cast<double>(n - 1) / static_cast<double>(n);
    one_hot = one_hot && analysis::gini_double_sum(w) == want && analysis::gini_sorted(w) == want;
  }
  return {worst_pair <= 1e-9 && worst_scale <= 1e-12 && one_hot,
          fmt("double-sum vs sorted %.2e (limit 1e-9); scale %.2e (limit 1e-12); one-hot %s",
              worst_pair, worst_scale, one_hot ? "exact" : "inexact")};
}

// 9 -----------------------------------------------------------------------
Outcome eigen_report() {
  ModelConfig cfg;
  cfg.d_model = 32;
  cfg.n_layers = 2;
  auto w = make_model(cfg, 9);
  double worst_trace = 0.0;
  for (const auto& h : analysis::wov_eigen_report(w).heads) {
    const Matrix p = analysis::head_ov_product(w, h.layer, h.head);
    double trace = 0.0;
    for (std::size_t i = 0; i < p.rows(); ++i) trace += p(i, i);
    worst_trace = std::max(
        worst_trace, std::abs(std::accumulate(h.eigenvalues.begin(), h.eigenvalues.end(), 0.0) - trace));
  }
  for (auto& layer : w.layers) layer.wo = layer.wv.transposed();
  double gram = 0.0;
  for (const auto& h : analysis::wov_eigen_report(w).heads) gram = std::max(gram, h.neg_fraction);
  for (auto& layer : w.layers) layer.wo *= -1.0;
  double negated = 1.0;
  for (const auto& h : analysis::wov_eigen_report(w).heads) negated = std::min(negated, h.neg_fraction);
  return {gram == 0.0 && negated == 1.0 && worst_trace <= 1e-8,
          fmt("gram neg fraction %.3f (want 0), negated %.3f (want 1), trace diff %.2e (limit 1e-8)",
              gram, negated, worst_trace)};
}

// 10 and 12 share the trained lines models.
struct LinesModels {
  ModelWeights dense;
  ModelWeights anchored;
  std::vector<harness::Sequence> held_out;
  double train_seconds = 0.0;
};

const LinesModels& lines_models() {
  static const LinesModels models = [] {
    const auto t0 = std::chrono::steady_clock::now();
    harness::CorpusOptions co;
    co.sequence_tokens = 192;
    numerics::Rng corpus_rng(1), held_rng(99);
    const auto corpus = harness::make_corpus(corpus_rng, 400000, harness::CorpusStyle::kLines, co);
    LinesModels m{ModelWeights{}, ModelWeights{}, {}, 0.0};
    m.held_out = harness::make_corpus(held_rng, 40 * 192, harness::CorpusStyle::kLines, co);
    auto train = [&](bool anchored) {
      ModelConfig cfg;  // 4 layers, d_model 64
      if (anchored) {
        cfg.taa_layers = {0, 1, 2, 3};
        cfg.laa_anchor_layer = 0;
      }
      auto w = make_model(cfg, 7);
      harness::TrainOptions o;
      o.steps = 400;
      o.batch_size = 8;
      o.lr = 3e-3;
      o.warmup = 20;
      o.anchored = anchored;
      harness::train(w, corpus, o);
      return w;
    };
    m.dense = train(false);
    m.anchored = train(true);
    m.train_seconds = seconds_since(t0);
    return m;
  }();
  return models;
}

// 10 ----------------------------------------------------------------------
Outcome training_analog() {
  const auto t0 = std::chrono::steady_clock::now();
  const auto& m = lines_models();
  const auto dense = harness::evaluate(m.dense, PolicySpec::dense(), m.held_out);
  const auto anchored = harness::evaluate(m.anchored, PolicySpec::anchor(kLb, kAnc), m.held_out);
  const double secs = seconds_since(t0) + m.train_seconds;
  const double ratio = anchored.perplexity() / dense.perplexity();
  const double gap = 100.0 * std::abs(anchored.accuracy() - dense.accuracy());
  return {anchored.peak_budget_percent <= 30.0 && ratio <= 1.15 && gap <= 3.0 && secs < 1800.0,
          fmt("budget %.1f%% (limit 30%%); ppl %.4f vs dense %.4f, ratio %.4f (limit 1.15); "
              "acc %.4f vs %.4f, gap %.2f pts (limit 3); %.0fs (limit 1800s)",
              anchored.peak_budget_percent, anchored.perplexity(), dense.perplexity(), ratio,
              anchored.accuracy(), dense.accuracy(), gap, secs)};
}

// 11 ----------------------------------------------------------------------
Outcome needle_analog() {
  const auto t0 = std::chrono::steady_clock::now();
  auto train = [](bool anchored) {
    ModelConfig cfg;
    cfg.d_model = 32;
    cfg.n_layers = 2;
    if (anchored) {
      cfg.taa_layers = {0, 1};
      cfg.laa_anchor_layer = 0;
    }
    auto w = make_model(cfg, 7);
    harness::TrainOptions o;
    o.lr = 1e-3;
    o.warmup = 20;
    o.anchored = anchored;
    o.seed = 11;
    const auto stages = harness::default_membership_curriculum();
    harness::train_membership(w, stages, o);
    return w;
  };
  const std::vector<std::size_t> lengths{16, 32, 64, 128};
  const std::vector<double> depths{0.0, 0.25, 0.5, 0.75, 1.0};
  constexpr std::size_t kTrials = 32;
  constexpr std::size_t kWindow = 16;

  const auto dense_w = train(false);
  const auto dense = harness::eval_needle_grid(dense_w, PolicySpec::dense(), lengths, depths, kTrials, 5);
  const auto window =
      harness::eval_needle_grid(dense_w, PolicySpec::window_of(kWindow), lengths, depths, kTrials, 5);
  const auto anchor_w = train(true);
  const auto anchored =
      harness::eval_needle_grid(anchor_w, PolicySpec::anchor(kLb, kAnc), lengths, depths, kTrials, 5);

  double dense_min = 1.0, anchor_min = 1.0, window_max = 0.0;
  std::size_t outside = 0;
  for (std::size_t a = 0; a < lengths.size(); ++a)
    for (std::size_t b = 0; b < depths.size(); ++b) {
      dense_min = std::min(dense_min, dense.accuracy[a][b]);
      anchor_min = std::min(anchor_min, anchored.accuracy[a][b]);
      // The answer is predicted from the last prompt position, which sees the
      // final kWindow positions only.
      if (window.needle_distance[a][b] > kWindow) {
        ++outside;
        window_max = std::max(window_max, window.accuracy[a][b]);
      }
    }
  const double secs = seconds_since(t0);
  return {dense_min >= 0.9 && anchor_min >= 0.8 && outside > 0 && window_max <= 0.6 && secs < 900.0,
          fmt("min dense %.3f (limit 0.9); min anchor %.3f (limit 0.8); max window(%zu) %.3f over "
              "%zu outside cells (limit 0.6); %.0fs (limit 900s)",
              dense_min, anchor_min, kWindow, window_max, outside, secs)};
}

// 12 ----------------------------------------------------------------------
Outcome throughput_direction() {
  const auto& m = lines_models();
  ModelWeights w = m.anchored;
  w.config.max_seq = 8192;
  harness::CorpusOptions co;
  co.sequence_tokens = 4096;
  numerics::Rng rng(12);
  auto prompt = harness::make_corpus(rng, 1, harness::CorpusStyle::kLines, co).front();
  prompt.resize(2048);
  harness::BenchOptions bo;
  bo.repeats = 5;
  const auto dense = harness::bench_runtime(w, PolicySpec::dense(), prompt, 2048, bo);
  const auto anchored = harness::bench_runtime(w, PolicySpec::anchor(kLb, kAnc), prompt, 2048, bo);
  return {anchored.throughput >= dense.throughput,
          fmt("anchor %.1f tok/s (budget %.1f%%) vs dense %.1f tok/s, median of 5",
              anchored.throughput, anchored.cache.budget_percent, dense.throughput)};
}

}  // namespace
}  // namespace anchorkv

int main(int argc, char** argv) {
  using anchorkv::Outcome;
  const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria{
      {"mask oracle equivalence", anchorkv::mask_oracle},
      {"attention correctness", anchorkv::attention_correctness},
      {"gradient fidelity", anchorkv::gradient_fidelity},
      {"RoPE/MHPE identities", anchorkv::rope_mhpe_identities},
      {"LAA sanity", anchorkv::laa_sanity},
      {"memory arithmetic", anchorkv::memory_arithmetic},
      {"budget accounting", anchorkv::budget_accounting},
      {"sparsity metrics", anchorkv::sparsity_metrics},
      {"eigen report", anchorkv::eigen_report},
      {"training analog", anchorkv::training_analog},
      {"needle analog", anchorkv::needle_analog},
      {"throughput direction", anchorkv::throughput_direction},
  };
  std::set<std::size_t> selected;
  for (int i = 1; i < argc; ++i) {
    const int k = std::atoi(argv[i]);
    if (k < 1 || k > static_cast<int>(criteria.size())) {
      std::fprintf(stderr, "usage: %s [criterion numbers 1..%zu]\n", argv[0], criteria.size());
      return 1;
    }
    selected.insert(static_cast<std::size_t>(k));
  }
  int failures = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    if (!selected.empty() && !selected.contains(i + 1)) continue;
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    failures += !o.pass;
    std::printf("%s %2zu %s: %s\n", o.pass ? "PASS" : "FAIL", i + 1, criteria[i].first,
                o.detail.c_str());
    std::fflush(stdout);
  }
  return failures == 0 ? 0 : 1;
}
