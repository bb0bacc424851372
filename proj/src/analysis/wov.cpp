// Copyright (C) 2026 The anchorkv Authors
// SPDX-License-Identifier: Apache-2.0

#include "anchorkv/analysis/wov.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "anchorkv/errors.hpp"
#include "anchorkv/numerics/linalg.hpp"

namespace anchorkv::analysis {

using numerics::Matrix;

Matrix head_ov_product(const model::ModelWeights& weights, std::size_t layer, std::size_t head) {
  const auto& cfg = weights.config;
  if (layer >= cfg.n_layers || head >= cfg.n_heads)
    throw InputError("layer/head out of range");
  const std::size_t d = cfg.d_model;
  const std::size_t dk = cfg.head_dim();
  const auto& lw = weights.layers[layer];
  const Matrix wv = lw.wv.col_block(head * dk, dk);
  Matrix wo(dk, d);
  for (std::size_t r = 0; r < dk; ++r) {
    const auto src = lw.wo.row(head * dk + r);
    std::copy(src.begin(), src.end(), wo.row(r).begin());
  }
  return numerics::matmul(wv, wo);
}

WovReport wov_eigen_report(const model::ModelWeights& weights) {
  const auto& cfg = weights.config;
  WovReport rep;
  for (std::size_t l = 0; l < cfg.n_layers; ++l) {
    for (std::size_t h = 0; h < cfg.n_heads; ++h) {
      const Matrix sym = numerics::symmetric_part(head_ov_product(weights, l, h));
      WovHead out;
      out.layer = l;
      out.head = h;
      for (std::size_t i = 0; i < sym.rows(); ++i) out.trace += sym(i, i);
      out.eigenvalues = numerics::symmetric_eigenvalues(sym);
      double peak = 0.0;
      for (double v : out.eigenvalues) peak = std::max(peak, std::abs(v));
      std::size_t negative = 0;
      for (double v : out.eigenvalues) {
        if (std::abs(v) <= kWovZeroTolerance * peak || v == 0.0) continue;
        ++out.nonzero;
        negative += v < 0.0;
      }
      out.neg_fraction =
          out.nonzero == 0 ? 0.0
                           : static_cast<double>(negative) / static_cast<double>(out.nonzero);
      rep.heads.push_back(std::move(out));
    }
  }
  return rep;
}

std::string WovReport::to_csv() const {
  std::ostringstream out;
  out.precision(17);
  out << "layer,head,neg_fraction\n";
  for (const auto& h : heads) out << h.layer << ',' << h.head << ',' << h.neg_fraction << '\n';
  return out.str();
}

std::string WovReport::eigenvalues_csv() const {
  std::ostringstream out;
  out.precision(17);
  out << "layer,head,index,eigenvalue\n";
  for (const auto& h : heads)
    for (std::size_t i = 0; i < h.eigenvalues.size(); ++i)
      out << h.layer << ',' << h.head << ',' << i << ',' << h.eigenvalues[i] << '\n';
  return out.str();
}

}  // namespace anchorkv::analysis
