// Copyright (C) 2026 The anchorkv Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <cmath>
#include <numeric>
#include <sstream>

#include "anchorkv/anchor/anchored_sequence.hpp"
#include "anchorkv/anchor/laa.hpp"
#include "anchorkv/errors.hpp"
#include "anchorkv/harness/corpus.hpp"
#include "anchorkv/harness/vocab.hpp"
#include "anchorkv/model/checkpoint.hpp"
#include "anchorkv/model/decode.hpp"
#include "anchorkv/model/forward.hpp"
#include "anchorkv/model/optimizer.hpp"
#include "anchorkv/model/rope.hpp"
#include "anchorkv/model/weights.hpp"
#include "oracles.hpp"

namespace anchorkv {
namespace {

using harness::Vocabulary;
using model::AttentionPlan;
using model::ModelConfig;
using model::ModelWeights;
using numerics::Matrix;

ModelConfig small_config(std::size_t layers = 2, std::size_t d = 16) {
  ModelConfig cfg;
  cfg.d_model = d;
  cfg.n_layers = layers;
  cfg.max_seq = 256;
  return cfg;
}

ModelWeights make_model(const ModelConfig& cfg, std::uint64_t seed = 5) {
  numerics::Rng rng(seed);
  return model::init_model(cfg, rng);
}

std::vector<TokenId> random_tokens(numerics::Rng& rng, std::size_t n, std::size_t vocab = 95) {
  std::vector<TokenId> t(n);
  for (auto& x : t) x = static_cast<TokenId>(rng.below(vocab));
  return t;
}

double row_sum(std::span<const double> row) { return std::accumulate(row.begin(), row.end(), 0.0); }

TEST(ModelConfig, ValidateRejectsInconsistentSettings) {
  ModelConfig cfg = small_config();
  cfg.n_heads = 3;
  EXPECT_THROW(cfg.validate(), ConfigError);
  cfg = small_config();
  cfg.anchor_token_id = 97;
  EXPECT_THROW(cfg.validate(), ConfigError);
  cfg = small_config();
  cfg.taa_layers = {1};
  cfg.laa_anchor_layer = 0;
  EXPECT_THROW(cfg.validate(), ConfigError);
  cfg = small_config();
  cfg.d_model = 12;
  cfg.n_heads = 4;  // head dim 3 is odd
  EXPECT_THROW(cfg.validate(), ConfigError);
}

TEST(ModelConfig, JsonRoundTrip) {
  ModelConfig cfg = small_config();
  cfg.taa_layers = {0, 1};
  cfg.laa_anchor_layer = 0;
  cfg.seed = 99;
  EXPECT_EQ(ModelConfig::from_json(cfg.to_json()), cfg);
}

TEST(ModelConfig, UnknownFieldIsConfigError) {
  EXPECT_THROW(ModelConfig::from_json(R"({"d_model": 16, "colour": 1})"), ConfigError);
  EXPECT_THROW(ModelConfig::from_json("not json"), ConfigError);
}

TEST(InitModel, SameSeedIsBitIdentical) {
  const auto a = make_model(small_config(), 3);
  const auto b = make_model(small_config(), 3);
  std::vector<Matrix> ma, mb;
  a.for_each([&](const std::string&, const Matrix& m) { ma.push_back(m); });
  b.for_each([&](const std::string&, const Matrix& m) { mb.push_back(m); });
  EXPECT_EQ(ma, mb);
}

TEST(InitModel, ShapeContract) {
  const auto w = make_model(small_config());
  EXPECT_EQ(w.layers[0].wq.rows(), 16u);
  EXPECT_EQ(w.layers[0].wq.cols(), 16u);
  EXPECT_EQ(w.layers[0].w_in.cols(), 64u);
  EXPECT_EQ(w.embedding.rows(), 97u);
}

TEST(InitModel, EmbeddingStdNearDeclared) {
  ModelConfig cfg = small_config(2, 64);
  cfg.vocab_size = 256;
  cfg.anchor_token_id = 255;
  const auto w = make_model(cfg);
  double s2 = 0.0;
  for (double v : w.embedding.storage()) s2 += v * v;
  const double std_dev = std::sqrt(s2 / static_cast<double>(w.embedding.size()));
  EXPECT_GE(std_dev, 0.015);
  EXPECT_LE(std_dev, 0.025);
}

TEST(InitModel, InvalidConfigIsConfigError) {
  ModelConfig cfg = small_config();
  cfg.n_layers = 0;
  numerics::Rng rng(1);
  EXPECT_THROW(model::init_model(cfg, rng), ConfigError);
}

TEST(Rope, PositionZeroIsIdentity) {
  const std::vector<double> x{0.3, -1.2, 2.5, 0.7};
  EXPECT_EQ(model::apply_rope(x, 0, 10000.0), x);
}

TEST(Rope, PreservesNorm) {
  numerics::Rng rng(21);
  for (int t = 0; t < 100; ++t) {
    std::vector<double> x(16);
    for (double& v : x) v = rng.normal();
    const auto y = model::apply_rope(x, static_cast<std::int64_t>(rng.below(5000)), 10000.0);
    double nx = 0.0, ny = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
      nx += x[i] * x[i];
      ny += y[i] * y[i];
    }
    EXPECT_NEAR(std::sqrt(nx), std::sqrt(ny), 1e-9);
  }
}

TEST(Rope, RelativeShiftIdentity) {
  numerics::Rng rng(22);
  for (int t = 0; t < 100; ++t) {
    std::vector<double> q(8), k(8);
    for (double& v : q) v = rng.normal();
    for (double& v : k) v = rng.normal();
    const auto m = static_cast<std::int64_t>(rng.below(300));
    const auto n = static_cast<std::int64_t>(rng.below(300));
    const auto c = static_cast<std::int64_t>(rng.below(300));
    auto dot = [](const std::vector<double>& a, const std::vector<double>& b) {
      return std::inner_product(a.begin(), a.end(), b.begin(), 0.0);
    };
    EXPECT_NEAR(dot(model::apply_rope(q, m, 1e4), model::apply_rope(k, n, 1e4)),
                dot(model::apply_rope(q, m + c, 1e4), model::apply_rope(k, n + c, 1e4)), 1e-9);
  }
}

TEST(Rope, FirstPairRotatesByPosition) {
  // t = 0 has theta_0 = 1, so the first pair turns by exactly `position` radians.
  const auto y = model::apply_rope(std::vector<double>{1, 0, 0, 0}, 2, 10000.0);
  EXPECT_NEAR(y[0], std::cos(2.0), 1e-15);
  EXPECT_NEAR(y[1], std::sin(2.0), 1e-15);
}

TEST(Rope, OddHeadDimIsConfigError) {
  EXPECT_THROW(model::apply_rope(std::vector<double>{1, 2, 3}, 1, 10000.0), ConfigError);
}

TEST(Forward, SingleTokenAttendsToItself) {
  const auto w = make_model(small_config());
  const std::vector<TokenId> t{7};
  const auto trace = model::forward(w, t, AttentionPlan::causal(1), true);
  EXPECT_TRUE(trace.logits.all_finite());
  for (const auto& layer : trace.attention)
    for (const auto& head : layer) EXPECT_EQ(head(0, 0), 1.0);
}

TEST(Forward, RepeatedRunsAreBitIdentical) {
  const auto w = make_model(small_config());
  numerics::Rng rng(1);
  const auto t = random_tokens(rng, 20);
  EXPECT_EQ(model::forward(w, t, AttentionPlan::causal(20)).logits,
            model::forward(w, t, AttentionPlan::causal(20)).logits);
}

TEST(Forward, AttentionRowsSumToOne) {
  ModelConfig cfg = small_config(3);
  cfg.taa_layers = {0, 1, 2};
  cfg.laa_anchor_layer = 0;
  const auto w = make_model(cfg);
  numerics::Rng rng(2);
  auto tokens = random_tokens(rng, 30);
  for (std::size_t i = 4; i < tokens.size(); i += 5) tokens[i] = Vocabulary::kLinebreak;
  const auto seq = anchor::plant_anchors(tokens, Vocabulary::kLinebreak, Vocabulary::kAnchor);
  const auto plan = anchor::make_anchor_plan(seq, cfg.n_heads);
  const auto trace = model::forward(w, seq.tokens, plan, true);
  for (const auto& layer : trace.attention)
    for (const auto& head : layer)
      for (std::size_t r = 0; r < head.rows(); ++r) EXPECT_NEAR(row_sum(head.row(r)), 1.0, 1e-9);
}

TEST(Forward, MaskedPositionEqualsRemovedPosition) {
  const auto w = make_model(small_config());
  numerics::Rng rng(3);
  for (int t = 0; t < 10; ++t) {
    const std::size_t n = 6 + rng.below(20);
    const auto tokens = random_tokens(rng, n);
    const std::size_t j = 1 + rng.below(n - 1);
    AttentionPlan masked = AttentionPlan::causal(n);
    masked.dense_mask.hide_column(j);
    masked.taa_mask = masked.dense_mask;
    const auto full = model::forward(w, tokens, masked);

    std::vector<TokenId> cut = tokens;
    cut.erase(cut.begin() + static_cast<std::ptrdiff_t>(j));
    AttentionPlan plan = AttentionPlan::causal(n - 1);
    for (std::size_t i = j; i < n - 1; ++i) plan.positions[i] = static_cast<std::int64_t>(i + 1);
    const auto reduced = model::forward(w, cut, plan);
    for (std::size_t i = 0, r = 0; i < n; ++i) {
      if (i == j) continue;
      for (std::size_t c = 0; c < full.logits.cols(); ++c)
        EXPECT_NEAR(full.logits(i, c), reduced.logits(r, c), 1e-8);
      ++r;
    }
  }
}

TEST(Forward, VocabularyRelabelingIsEquivariant) {
  const auto w = make_model(small_config());
  ModelWeights p = w;
  // Swap two token ids in the embedding (and thus the tied output layer).
  const std::size_t a = 10, b = 20;
  for (std::size_t c = 0; c < w.embedding.cols(); ++c)
    std::swap(p.embedding(a, c), p.embedding(b, c));
  std::vector<TokenId> t{10, 3, 20, 10, 5};
  std::vector<TokenId> tp{20, 3, 10, 20, 5};
  const auto x = model::forward(w, t, AttentionPlan::causal(5)).logits;
  const auto y = model::forward(p, tp, AttentionPlan::causal(5)).logits;
  for (std::size_t r = 0; r < 5; ++r)
    for (std::size_t c = 0; c < x.cols(); ++c) {
      const std::size_t cp = c == a ? b : c == b ? a : c;
      EXPECT_NEAR(x(r, c), y(r, cp), 1e-12);
    }
}

TEST(Forward, ErrorsOnBadInput) {
  const auto w = make_model(small_config());
  const std::vector<TokenId> t{1, 2, 3};
  EXPECT_THROW(model::forward(w, t, AttentionPlan::causal(2)), ShapeError);
  EXPECT_THROW(model::forward(w, std::vector<TokenId>{1, 200}, AttentionPlan::causal(2)),
               InputError);
  std::vector<TokenId> longer(300, 1);
  EXPECT_THROW(model::forward(w, longer, AttentionPlan::causal(300)), LengthError);
}

TEST(Forward, NonFiniteActivationIsNumericError) {
  auto w = make_model(small_config());
  w.layers[1].wv(0, 0) = std::numeric_limits<double>::infinity();
  const std::vector<TokenId> t{1, 2, 3};
  try {
    model::forward(w, t, AttentionPlan::causal(3));
    FAIL() << "expected NumericError";
  } catch (const NumericError& e) {
    EXPECT_NE(std::string(e.what()).find("layer 1"), std::string::npos);
    EXPECT_EQ(e.exit_code(), 2);
  }
}

TEST(Loss, UniformLogitsGiveLogVocab) {
  auto w = make_model(small_config());
  w.embedding.fill(0.0);
  model::TrainingExample ex{{1, 2, 3, 4}, AttentionPlan::causal(4), {}};
  const auto lg = model::loss_and_grads(w, std::vector<model::TrainingExample>{ex});
  EXPECT_NEAR(lg.loss, std::log(97.0), 1e-6);
  EXPECT_EQ(lg.targets, 3u);
}

TEST(Loss, NoTargetsIsInputError) {
  const auto w = make_model(small_config());
  model::TrainingExample ex{{1}, AttentionPlan::causal(1), {}};
  EXPECT_THROW(model::loss_and_grads(w, std::vector<model::TrainingExample>{ex}), InputError);
  model::TrainingExample zero{{1, 2, 3}, AttentionPlan::causal(3), {0.0, 0.0}};
  EXPECT_THROW(model::loss_and_grads(w, std::vector<model::TrainingExample>{zero}), InputError);
}

TEST(Loss, AnchorTargetsAreExcluded) {
  const auto w = make_model(small_config());
  const std::vector<TokenId> raw{1, Vocabulary::kLinebreak, 2, 3};
  const auto seq = anchor::plant_anchors(raw, Vocabulary::kLinebreak, Vocabulary::kAnchor);
  model::TrainingExample ex{seq.tokens, AttentionPlan::causal(seq.size()), {}};
  EXPECT_EQ(model::loss_and_grads(w, std::vector<model::TrainingExample>{ex}).targets, 3u);
}

TEST(Loss, TargetWeightsFormWeightedMean) {
  const auto w = make_model(small_config());
  const std::vector<TokenId> t{5, 6, 7, 8};
  const auto plan = AttentionPlan::causal(4);
  const auto per = model::forward(w, t, plan).logits;
  auto ce = [&](std::size_t i) {
    const auto row = per.row(i);
    double mx = *std::max_element(row.begin(), row.end()), z = 0.0;
    for (double v : row) z += std::exp(v - mx);
    return mx + std::log(z) - row[static_cast<std::size_t>(t[i + 1])];
  };
  model::TrainingExample ex{t, plan, {0.0, 2.0, 1.0}};
  const double expect = (2.0 * ce(1) + 1.0 * ce(2)) / 3.0;
  EXPECT_NEAR(model::loss_and_grads(w, std::vector<model::TrainingExample>{ex}).loss, expect,
              1e-12);
  model::TrainingExample bad{t, plan, {1.0}};
  EXPECT_THROW(model::loss_and_grads(w, std::vector<model::TrainingExample>{bad}), ShapeError);
}

model::TrainingExample anchored_example(const ModelConfig& cfg, numerics::Rng& rng, bool mhpe) {
  auto tokens = random_tokens(rng, 14, 90);
  tokens[3] = tokens[8] = Vocabulary::kLinebreak;
  const auto seq = anchor::plant_anchors(tokens, Vocabulary::kLinebreak, Vocabulary::kAnchor);
  anchor::AnchorPlanOptions options;
  options.mhpe = mhpe;
  options.sinks = 1;
  return {seq.tokens, anchor::make_anchor_plan(seq, cfg.n_heads, options), {}};
}

void expect_gradients_match(const ModelConfig& cfg, bool mhpe) {
  const auto w = make_model(cfg, 8);
  numerics::Rng rng(9);
  std::vector<model::TrainingExample> batch{anchored_example(cfg, rng, mhpe),
                                            anchored_example(cfg, rng, mhpe)};
  for (const auto& r : oracle::finite_difference_check(w, batch))
    EXPECT_LT(r.rel_error, 1e-4) << r.tensor;
}

TEST(Gradients, DenseMatchesFiniteDifferences) {
  ModelConfig cfg = small_config();
  const auto w = make_model(cfg, 8);
  numerics::Rng rng(10);
  std::vector<model::TrainingExample> batch{
      {random_tokens(rng, 12), AttentionPlan::causal(12), {}}};
  for (const auto& r : oracle::finite_difference_check(w, batch))
    EXPECT_LT(r.rel_error, 1e-4) << r.tensor;
}

TEST(Gradients, TaaMhpeLaaMatchesFiniteDifferences) {
  ModelConfig cfg = small_config();
  cfg.taa_layers = {0, 1};
  cfg.laa_anchor_layer = 0;
  expect_gradients_match(cfg, true);
}

TEST(Optimizer, ZeroGradientZeroDecayLeavesWeights) {
  auto w = make_model(small_config());
  const auto before = w;
  model::AdamOptions opts;
  opts.weight_decay = 0.0;
  auto state = model::AdamState::for_weights(w, opts);
  model::train_step(w, ModelWeights::zeros_like(w), state, 1e-3);
  EXPECT_EQ(w.embedding, before.embedding);
  EXPECT_EQ(w.layers[1].w_out, before.layers[1].w_out);
}

std::vector<model::TrainingExample> lines_batch() {
  numerics::Rng rng(31);
  harness::CorpusOptions o;
  o.sequence_tokens = 50;
  std::vector<model::TrainingExample> batch;
  for (const auto& s : harness::make_corpus(rng, 200, harness::CorpusStyle::kLines, o))
    batch.push_back({s, AttentionPlan::causal(s.size()), {}});
  return batch;
}

TEST(Optimizer, LossDecreasesOverFirstSteps) {
  auto w = make_model(small_config(2, 32), 4);
  auto state = model::AdamState::for_weights(w);
  const auto batch = lines_batch();
  std::vector<double> losses;
  for (int s = 0; s < 21; ++s) {
    auto lg = model::loss_and_grads(w, batch);
    losses.push_back(lg.loss);
    model::train_step(w, lg.grads, state, 1e-3);
  }
  int rises = 0;
  for (std::size_t i = 1; i < losses.size(); ++i) rises += losses[i] > losses[i - 1];
  EXPECT_LE(rises, 2);
  EXPECT_LT(losses.back(), losses.front());
}

TEST(Optimizer, SameSeedSameWeights) {
  auto run = [] {
    auto w = make_model(small_config(), 4);
    auto state = model::AdamState::for_weights(w);
    const auto batch = lines_batch();
    for (int s = 0; s < 10; ++s) {
      auto lg = model::loss_and_grads(w, batch);
      model::clip_grad_norm(lg.grads, 1.0);
      model::train_step(w, lg.grads, state, 1e-3);
    }
    return w;
  };
  const auto a = run(), b = run();
  EXPECT_EQ(a.embedding, b.embedding);
  EXPECT_EQ(a.layers[0].wq, b.layers[0].wq);
}

TEST(Optimizer, ClipScalesToMaxNorm) {
  auto w = make_model(small_config());
  auto g = ModelWeights::zeros_like(w);
  g.embedding(0, 0) = 3.0;
  g.final_gain(0, 0) = 4.0;
  EXPECT_DOUBLE_EQ(model::clip_grad_norm(g, 1.0), 5.0);
  EXPECT_NEAR(g.embedding(0, 0), 0.6, 1e-15);
  EXPECT_NEAR(g.final_gain(0, 0), 0.8, 1e-15);
}

TEST(Generate, ZeroNewTokensReturnsPrompt) {
  const auto w = make_model(small_config());
  const std::vector<TokenId> p{4, 5, 6};
  EXPECT_EQ(model::generate(w, p, 0, cache::PolicySpec::dense()), p);
}

TEST(Generate, DenseMatchesReforwardOracle) {
  const auto w = make_model(small_config(), 6);
  numerics::Rng rng(41);
  for (int t = 0; t < 10; ++t) {
    const auto prompt = random_tokens(rng, 1 + rng.below(12));
    EXPECT_EQ(model::generate(w, prompt, 12, cache::PolicySpec::dense()),
              oracle::reforward_generate(w, prompt, 12));
  }
}

TEST(Generate, WideWindowEqualsDense) {
  const auto w = make_model(small_config(), 6);
  numerics::Rng rng(42);
  const auto prompt = random_tokens(rng, 10);
  EXPECT_EQ(model::generate(w, prompt, 20, cache::PolicySpec::window_of(64)),
            model::generate(w, prompt, 20, cache::PolicySpec::dense()));
}

TEST(Generate, EmptyPromptAndLengthErrors) {
  ModelConfig cfg = small_config();
  cfg.max_seq = 8;
  const auto w = make_model(cfg);
  EXPECT_THROW(model::generate(w, std::vector<TokenId>{}, 3, cache::PolicySpec::dense()),
               InputError);
  EXPECT_THROW(model::generate(w, std::vector<TokenId>(9, 1), 3, cache::PolicySpec::dense()),
               LengthError);
}

TEST(Generate, GreedyTiesGoToLowestIdAndSkipAnchor) {
  const std::vector<double> logits{0.5, 2.0, 2.0, 3.0};
  EXPECT_EQ(model::greedy_token(logits, 3), 1);
  EXPECT_EQ(model::greedy_token(logits, -1), 3);
}

ModelConfig anchored_config() {
  ModelConfig cfg = small_config(3);
  cfg.taa_layers = {0, 1, 2};
  cfg.laa_anchor_layer = 0;
  return cfg;
}

TEST(DecodeSession, AnchorPolicyMatchesForwardWithAnchorPlan) {
  const auto cfg = anchored_config();
  const auto w = make_model(cfg, 12);
  const auto text = Vocabulary::encode("ab=1\ncd=ab\nprint(cd)\nx");
  const auto seq = anchor::plant_anchors(text, Vocabulary::kLinebreak, Vocabulary::kAnchor);
  const auto trace = model::forward(w, seq.tokens, anchor::make_anchor_plan(seq, cfg.n_heads));
  model::DecodeSession session(w, cache::PolicySpec::anchor(Vocabulary::kLinebreak,
                                                            Vocabulary::kAnchor));
  for (TokenId t : text) {
    const auto logits = session.feed(t);
    const std::size_t last = session.position() - 1;
    for (std::size_t c = 0; c < logits.size(); ++c) EXPECT_EQ(logits[c], trace.logits(last, c));
  }
  EXPECT_EQ(session.stream(), seq.tokens);
}

TEST(DecodeSession, AnchorLineEvictionLeavesSinksAnchorsAndCurrent) {
  const auto cfg = anchored_config();
  const auto w = make_model(cfg);
  model::DecodeSession session(w, cache::PolicySpec::anchor(Vocabulary::kLinebreak,
                                                            Vocabulary::kAnchor, 4));
  session.prefill(Vocabulary::encode("abcdefgh\nijklmn\n"));
  session.feed(Vocabulary::id_of('o'));
  const auto& anchors = session.policy().anchors();
  ASSERT_EQ(anchors.size(), 2u);
  for (std::size_t l = 0; l < cfg.n_layers; ++l)
    EXPECT_EQ(session.cached_positions(l).size(), 4 + anchors.size() + 1);
}

TEST(DecodeSession, FeedingAnAnchorIsInputError) {
  const auto w = make_model(anchored_config());
  model::DecodeSession session(w, cache::PolicySpec::anchor(Vocabulary::kLinebreak,
                                                            Vocabulary::kAnchor));
  EXPECT_THROW(session.feed(Vocabulary::kAnchor), InputError);
}

TEST(Checkpoint, RoundTripIsExact) {
  const auto w = make_model(anchored_config(), 14);
  std::stringstream buf;
  model::save_checkpoint(w, buf);
  const auto r = model::load_checkpoint(buf);
  EXPECT_EQ(r.config, w.config);
  std::vector<Matrix> a, b;
  w.for_each([&](const std::string&, const Matrix& m) { a.push_back(m); });
  r.for_each([&](const std::string&, const Matrix& m) { b.push_back(m); });
  EXPECT_EQ(a, b);
}

TEST(Checkpoint, StartsWithMagic) {
  std::stringstream buf;
  model::save_checkpoint(make_model(small_config()), buf);
  EXPECT_EQ(buf.str().substr(0, 4), "AKV1");
}

TEST(Checkpoint, CorruptInputIsInputError) {
  std::stringstream bad("XXXX");
  EXPECT_THROW(model::load_checkpoint(bad), InputError);
  std::stringstream buf;
  model::save_checkpoint(make_model(small_config()), buf);
  std::stringstream truncated(buf.str().substr(0, buf.str().size() / 2));
  EXPECT_THROW(model::load_checkpoint(truncated), InputError);
  EXPECT_THROW(model::load_checkpoint(std::string("/nonexistent/ckpt.akv")), InputError);
}

}  // namespace
}  // namespace anchorkv
