// Copyright 2026 The gazekit Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "gazekit/regressor.hpp"

#include <cmath>
#include <cstring>
#include <fstream>
#include <iostream>
#include <random>

#include "gazekit/error.hpp"

namespace gazekit {

namespace {

constexpr char kMagic[8] = {'G', 'Z', 'K', 'T', 'C', 'K', 'P', '1'};

void write_u64(std::ostream& out, std::uint64_t v) { out.write(reinterpret_cast<const char*>(&v), sizeof v); }

std::uint64_t read_u64(std::istream& in) {
  std::uint64_t v = 0;
  in.read(reinterpret_cast<char*>(&v), sizeof v);
  if (!in) throw DataError("checkpoint: truncated file");
  return v;
}

void write_matrix(std::ostream& out, const Matrix& m) {
  write_u64(out, static_cast<std::uint64_t>(m.rows()));
  write_u64(out, static_cast<std::uint64_t>(m.cols()));
  out.write(reinterpret_cast<const char*>(m.data()), static_cast<std::streamsize>(sizeof(double) * m.size()));
}

Matrix read_matrix(std::istream& in) {
  const auto rows = static_cast<Eigen::Index>(read_u64(in));
  const auto cols = static_cast<Eigen::Index>(read_u64(in));
  if (rows < 0 || cols < 0 || rows * cols > (1LL << 30)) throw DataError("checkpoint: bad matrix shape");
  Matrix m(rows, cols);
  in.read(reinterpret_cast<char*>(m.data()), static_cast<std::streamsize>(sizeof(double) * m.size()));
  if (!in) throw DataError("checkpoint: truncated file");
  return m;
}

}  // namespace

TokenRegressor::TokenRegressor(std::unique_ptr<Encoder> encoder, std::uint64_t seed) : encoder_(std::move(encoder)) {
  if (!encoder_) throw UsageError("TokenRegressor: null encoder");
  const int h = encoder_->spec().hidden_size;
  std::mt19937_64 rng(seed ^ 0x9E3779B97F4A7C15ULL);
  const double bound = 1.0 / std::sqrt(static_cast<double>(h));
  std::uniform_real_distribution<double> dist(-bound, bound);
  Matrix w(h, kNumFeatures);
  for (Eigen::Index i = 0; i < w.size(); ++i) w.data()[i] = dist(rng);
  head_w_ = {"head.weight", ad::leaf(std::move(w), true), true};
  head_b_ = {"head.bias", ad::leaf(Matrix::Zero(1, kNumFeatures), true), false};
  set_requires_grad(encoder_->spec().trainable, encoder_->spec().trainable);
}

void TokenRegressor::set_output_normalizer(const RowVector& shift, const RowVector& scale) {
  if (shift.size() != kNumFeatures || scale.size() != kNumFeatures || !(scale.array() > 0.0).all()) {
    throw UsageError("output normalizer: expected 8 shifts and 8 positive scales");
  }
  out_shift_ = shift;
  out_scale_ = scale;
}

TokenRegressor::Forward TokenRegressor::forward(std::span<const std::string> words) const {
  const Tokenization tok = encoder_->tokenize(words);
  std::vector<int> word_of_piece = tok.word_of_piece;
  const auto alignment = align_subwords(tok.n_words_kept, word_of_piece);
  const ad::Var hidden = encoder_->encode(tok);
  const ad::Var first = ad::gather_rows(hidden, alignment.first_piece);
  const ad::Var z = ad::add_row(ad::matmul(first, head_w_.var), head_b_.var);
  return {ad::affine_const(z, out_scale_, out_shift_), tok.n_words_kept};
}

std::vector<SentencePrediction> TokenRegressor::predict(const std::vector<std::vector<std::string>>& sentences) const {
  std::vector<SentencePrediction> out;
  out.reserve(sentences.size());
  for (const auto& words : sentences) {
    SentencePrediction p;
    const auto n = static_cast<Eigen::Index>(words.size());
    p.values = FeatureMatrix::Zero(n, kNumFeatures);
    p.mask = Mask::Constant(n, false);
    if (n > 0) {
      const auto f = forward(words);
      p.values.topRows(f.n_words_kept) = f.predictions->value;
      p.mask.head(f.n_words_kept).setConstant(true);
    }
    out.push_back(std::move(p));
  }
  return out;
}

std::vector<SentencePrediction> TokenRegressor::predict(const FeatureDataset& d) const {
  std::vector<std::vector<std::string>> words;
  words.reserve(d.sentences.size());
  for (const auto& s : d.sentences) words.push_back(s.tokens);
  auto out = predict(words);
  for (std::size_t i = 0; i < out.size(); ++i) {
    const auto kept = out[i].mask.count();
    if (kept < static_cast<Eigen::Index>(d.sentences[i].tokens.size())) {
      std::cerr << "warning: sentence " << d.sentences[i].sentence_id << " truncated to " << kept << " of "
                << d.sentences[i].tokens.size() << " words by the encoder length limit\n";
    }
    out[i].mask = out[i].mask && d.sentences[i].mask;
  }
  return out;
}

std::vector<ad::Parameter*> TokenRegressor::parameters() {
  auto out = encoder_->parameters();
  out.push_back(&head_w_);
  out.push_back(&head_b_);
  return out;
}

std::vector<const ad::Parameter*> TokenRegressor::parameters() const {
  auto ps = const_cast<TokenRegressor*>(this)->parameters();
  return {ps.begin(), ps.end()};
}

void TokenRegressor::set_requires_grad(bool encoder, bool head) {
  for (auto* p : encoder_->parameters()) p->var->requires_grad = encoder;
  head_w_.var->requires_grad = head;
  head_b_.var->requires_grad = head;
}

void TokenRegressor::save(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw RuntimeFailure("cannot write checkpoint " + path.string());
  out.write(kMagic, sizeof kMagic);
  const auto params = parameters();
  write_u64(out, params.size());
  for (const auto* p : params) {
    write_u64(out, p->name.size());
    out.write(p->name.data(), static_cast<std::streamsize>(p->name.size()));
    write_matrix(out, p->value());
  }
  write_matrix(out, out_shift_);
  write_matrix(out, out_scale_);
  if (!out) throw RuntimeFailure("error writing checkpoint " + path.string());
}

void TokenRegressor::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw UsageError("cannot open checkpoint " + path.string());
  char magic[sizeof kMagic];
  in.read(magic, sizeof magic);
  if (!in || std::memcmp(magic, kMagic, sizeof kMagic) != 0) throw DataError("checkpoint: bad magic in " + path.string());
  auto params = parameters();
  if (read_u64(in) != params.size()) throw DataError("checkpoint: parameter count mismatch");
  for (auto* p : params) {
    const auto len = read_u64(in);
    if (len > 4096) throw DataError("checkpoint: bad parameter name");
    std::string name(len, '\0');
    in.read(name.data(), static_cast<std::streamsize>(len));
    if (name != p->name) throw DataError("checkpoint: expected parameter " + p->name + ", found " + name);
    Matrix m = read_matrix(in);
    if (m.rows() != p->value().rows() || m.cols() != p->value().cols()) {
      throw DataError("checkpoint: shape mismatch for " + name);
    }
    p->value() = std::move(m);
  }
  const Matrix shift = read_matrix(in);
  const Matrix scale = read_matrix(in);
  if (shift.size() != kNumFeatures || scale.size() != kNumFeatures) throw DataError("checkpoint: bad normalizer");
  set_output_normalizer(shift.row(0), scale.row(0));
}

TokenRegressor build_regressor(const EncoderSpec& spec, std::uint64_t seed) {
  return TokenRegressor(make_encoder(spec, seed), seed);
}

}  // namespace gazekit
