// Copyright (C) 2026 The anchorkv Authors
// SPDX-License-Identifier: Apache-2.0

#include "anchorkv/analysis/sparsity.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include <nlohmann/json.hpp>

#include "anchorkv/errors.hpp"

namespace anchorkv::analysis {

namespace {

double checked_sum(std::span<const double> w) {
  if (w.empty()) throw InputError("gini: empty vector");
  double sum = 0.0;
  for (double v : w) {
    if (!(v >= 0.0)) throw InputError("gini: entries must be non-negative");
    sum += v;
  }
  if (sum == 0.0) throw InputError("gini: undefined for an all-zero vector");
  return sum;
}

}  // namespace

double gini_double_sum(std::span<const double> w) {
  const double sum = checked_sum(w);
  const double n = static_cast<double>(w.size());
  double diffs = 0.0;
  for (double a : w)
    for (double b : w) diffs += std::abs(a - b);
  // 2 n^2 mean == 2 n sum, written without the rounding of sum / n.
  return diffs / (2.0 * n * sum);
}

double gini_sorted(std::span<const double> w) {
  const double sum = checked_sum(w);
  std::vector<double> s(w.begin(), w.end());
  std::sort(s.begin(), s.end());
  const double n = static_cast<double>(s.size());
  double acc = 0.0;
  for (std::size_t i = 0; i < s.size(); ++i)
    acc += (2.0 * static_cast<double>(i + 1) - n - 1.0) * s[i];
  return acc / (n * sum);
}

double gini(std::span<const double> w) {
  return w.size() <= kGiniDoubleSumLimit ? gini_double_sum(w) : gini_sorted(w);
}

double top2_sum(std::span<const double> w) {
  if (w.size() < 2) throw InputError("top2_sum: needs at least two entries");
  double first = -INFINITY, second = -INFINITY;
  for (double v : w) {
    if (v > first) {
      second = first;
      first = v;
    } else if (v > second) {
      second = v;
    }
  }
  return first + second;
}

TokenClasses TokenClasses::linebreak_vs_other(std::size_t vocab_size, TokenId linebreak_id,
                                              TokenId anchor_id) {
  TokenClasses c;
  c.names = {"linebreak", "other"};
  c.of_token.assign(vocab_size, 1);
  if (linebreak_id >= 0 && static_cast<std::size_t>(linebreak_id) < vocab_size)
    c.of_token[static_cast<std::size_t>(linebreak_id)] = 0;
  if (anchor_id >= 0 && static_cast<std::size_t>(anchor_id) < vocab_size) {
    c.names.emplace_back("anchor");
    c.of_token[static_cast<std::size_t>(anchor_id)] = 2;
  }
  return c;
}

MaxDistribution attention_max_distribution(std::span<const AttentionRecord> records,
                                           const TokenClasses& classes,
                                           std::size_t exclude_sinks) {
  MaxDistribution out;
  out.names = classes.names;
  out.counts.assign(classes.names.size(), 0);
  for (const auto& rec : records) {
    for (const auto& layer : rec.weights) {
      for (const Matrix& w : layer) {
        for (std::size_t i = exclude_sinks; i < w.rows(); ++i) {
          const auto row = w.row(i);
          std::size_t best = exclude_sinks;
          for (std::size_t j = exclude_sinks + 1; j <= i && j < row.size(); ++j)
            if (row[j] > row[best]) best = j;
          const auto token = static_cast<std::size_t>(rec.tokens.at(best));
          if (token >= classes.of_token.size())
            throw InputError("token id " + std::to_string(token) + " has no class");
          ++out.counts.at(classes.of_token[token]);
          ++out.rows;
        }
      }
    }
  }
  out.ratios.assign(out.counts.size(), 0.0);
  if (out.rows > 0)
    for (std::size_t c = 0; c < out.counts.size(); ++c)
      out.ratios[c] = static_cast<double>(out.counts[c]) / static_cast<double>(out.rows);
  return out;
}

SparsityReport sparsity_report(std::span<const AttentionRecord> records,
                               const TokenClasses& classes, std::size_t exclude_sinks) {
  SparsityReport rep;
  rep.aggregation =
      "mean over rows i >= 1 (causal prefix 0..i), all heads and all sequences of the layer";
  const std::size_t layers = records.empty() ? 0 : records.front().layers();
  rep.gini.assign(layers, 0.0);
  rep.top2.assign(layers, 0.0);
  rep.rows.assign(layers, 0);
  for (const auto& rec : records) {
    if (rec.layers() != layers) throw InputError("records disagree on layer count");
    for (std::size_t l = 0; l < layers; ++l) {
      for (const Matrix& w : rec.weights[l]) {
        for (std::size_t i = 1; i < w.rows(); ++i) {
          const auto prefix = w.row(i).first(i + 1);
          rep.gini[l] += gini(prefix);
          rep.top2[l] += top2_sum(prefix);
          ++rep.rows[l];
        }
      }
    }
  }
  for (std::size_t l = 0; l < layers; ++l) {
    if (rep.rows[l] == 0) continue;
    rep.gini[l] /= static_cast<double>(rep.rows[l]);
    rep.top2[l] /= static_cast<double>(rep.rows[l]);
  }
  rep.max_distribution = attention_max_distribution(records, classes, exclude_sinks);
  return rep;
}

std::string SparsityReport::to_csv() const {
  std::ostringstream out;
  out.precision(17);
  out << "layer,gini,top2\n";
  for (std::size_t l = 0; l < gini.size(); ++l) out << l << ',' << gini[l] << ',' << top2[l] << '\n';
  return out.str();
}

std::string SparsityReport::to_json() const {
  nlohmann::json j;
  j["aggregation"] = aggregation;
  j["gini"] = gini;
  j["top2"] = top2;
  j["rows"] = rows;
  nlohmann::json dist;
  dist["rows"] = max_distribution.rows;
  for (std::size_t c = 0; c < max_distribution.names.size(); ++c)
    dist["classes"][max_distribution.names[c]] = {{"count", max_distribution.counts[c]},
                                                  {"ratio", max_distribution.ratios[c]}};
  j["max_distribution"] = dist;
  return j.dump(2);
}

}  // namespace anchorkv::analysis
