// Copyright (C) 2026 The anchorkv Authors
// SPDX-License-Identifier: Apache-2.0

#include "anchorkv/model/checkpoint.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <istream>
#include <limits>
#include <ostream>

#include "anchorkv/errors.hpp"
#include "anchorkv/numerics/rng.hpp"

namespace anchorkv::model {

namespace {

constexpr char kMagic[4] = {'A', 'K', 'V', '1'};

void put_u32(std::ostream& out, std::uint32_t v) {
  char b[4];
  for (int i = 0; i < 4; ++i) b[i] = static_cast<char>((v >> (8 * i)) & 0xffu);
  out.write(b, 4);
}

void put_f64(std::ostream& out, double v) {
  const auto bits = std::bit_cast<std::uint64_t>(v);
  char b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<char>((bits >> (8 * i)) & 0xffu);
  out.write(b, 8);
}

void get_bytes(std::istream& in, char* dst, std::size_t n) {
  in.read(dst, static_cast<std::streamsize>(n));
  if (static_cast<std::size_t>(in.gcount()) != n) throw InputError("checkpoint is truncated");
}

std::uint32_t get_u32(std::istream& in) {
  unsigned char b[4];
  get_bytes(in, reinterpret_cast<char*>(b), 4);
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(b[i]) << (8 * i);
  return v;
}

double get_f64(std::istream& in) {
  unsigned char b[8];
  get_bytes(in, reinterpret_cast<char*>(b), 8);
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(b[i]) << (8 * i);
  return std::bit_cast<double>(v);
}

std::uint32_t checked_u32(std::size_t v) {
  if (v > std::numeric_limits<std::uint32_t>::max()) throw InputError("checkpoint field too large");
  return static_cast<std::uint32_t>(v);
}

}  // namespace

void save_checkpoint(const ModelWeights& weights, std::ostream& out) {
  out.write(kMagic, 4);
  const std::string config = weights.config.to_json();
  put_u32(out, checked_u32(config.size()));
  out.write(config.data(), static_cast<std::streamsize>(config.size()));
  std::size_t count = 0;
  weights.for_each([&](const std::string&, const Matrix&) { ++count; });
  put_u32(out, checked_u32(count));
  weights.for_each([&](const std::string& name, const Matrix& m) {
    put_u32(out, checked_u32(name.size()));
    out.write(name.data(), static_cast<std::streamsize>(name.size()));
    put_u32(out, checked_u32(m.rows()));
    put_u32(out, checked_u32(m.cols()));
    for (double v : m.storage()) put_f64(out, v);
  });
  if (!out) throw InputError("failed to write checkpoint");
}

void save_checkpoint(const ModelWeights& weights, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot open " + path + " for writing");
  save_checkpoint(weights, out);
}

ModelWeights load_checkpoint(std::istream& in) {
  char magic[4];
  get_bytes(in, magic, 4);
  if (std::memcmp(magic, kMagic, 4) != 0) throw InputError("not an AKV1 checkpoint");
  const std::uint32_t config_len = get_u32(in);
  std::string config_text(config_len, '\0');
  get_bytes(in, config_text.data(), config_len);
  ModelConfig cfg;
  try {
    cfg = ModelConfig::from_json(config_text);
  } catch (const ConfigError& e) {
    throw InputError(std::string("checkpoint config: ") + e.what());
  }

  // Shapes come from a zero-initialized model of the stored config.
  numerics::Rng rng(0);
  ModelWeights w = ModelWeights::zeros_like(init_model(cfg, rng));
  std::size_t expected = 0;
  w.for_each([&](const std::string&, const Matrix&) { ++expected; });
  if (get_u32(in) != expected) throw InputError("checkpoint tensor count does not match config");
  w.for_each([&](const std::string& name, Matrix& m) {
    const std::uint32_t len = get_u32(in);
    if (len > 4096) throw InputError("checkpoint tensor name too long");
    std::string stored(len, '\0');
    get_bytes(in, stored.data(), len);
    if (stored != name) throw InputError("checkpoint has tensor '" + stored + "' where '" + name + "' belongs");
    const std::uint32_t rows = get_u32(in);
    const std::uint32_t cols = get_u32(in);
    if (rows != m.rows() || cols != m.cols())
      throw InputError("checkpoint tensor '" + name + "' has the wrong shape");
    for (double& v : m.storage()) v = get_f64(in);
  });
  return w;
}

ModelWeights load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open checkpoint " + path);
  return load_checkpoint(in);
}

}  // namespace anchorkv::model
