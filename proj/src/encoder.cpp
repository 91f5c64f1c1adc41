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

#include "gazekit/encoder.hpp"

#include <cmath>
#include <random>

#include "gazekit/error.hpp"
#include "gazekit/utf8.hpp"

namespace gazekit {

namespace {

struct KnownEncoder {
  const char* short_name;
  const char* checkpoint;
  int hidden;
  int batch;
};

// Published checkpoints with their hidden sizes and fine-tuning batch sizes.
constexpr KnownEncoder kKnown[] = {
    {"bert-nl", "wietsedv/bert-base-dutch-cased", 768, 16},
    {"bert-en", "bert-base-uncased", 768, 16},
    {"bert-de", "bert-base-german-cased", 768, 8},
    {"bert-ru", "DeepPavlov/rubert-base-cased", 768, 8},
    {"bert-multi", "bert-base-multilingual-cased", 768, 16},
    {"xlm-en", "xlm-mlm-en-2048", 2048, 2},
    {"xlm-ende", "xlm-mlm-ende-1024", 1024, 8},
    {"xlm-17", "xlm-mlm-17-1280", 1280, 8},
    {"xlm-100", "xlm-mlm-100-1280", 1280, 8},
};

const KnownEncoder* find_known(const std::string& name) {
  for (const auto& k : kKnown) {
    if (name == k.short_name || name == k.checkpoint) return &k;
  }
  return nullptr;
}

ad::Parameter make_param(std::string name, Eigen::Index rows, Eigen::Index cols, std::mt19937_64& rng,
                         double sd, bool decay = true) {
  std::normal_distribution<double> dist(0.0, sd);
  Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = dist(rng);
  return {std::move(name), ad::leaf(std::move(m), true), decay};
}

ad::Parameter make_const_param(std::string name, Eigen::Index cols, double v) {
  return {std::move(name), ad::leaf(Matrix::Constant(1, cols, v), true), false};
}

std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

}  // namespace

std::optional<EncoderSpec> known_encoder(const std::string& name) {
  if (name == "tiny" || name == "desk") return EncoderSpec{};
  if (const auto* k = find_known(name)) {
    EncoderSpec s;
    s.checkpoint_id = k->checkpoint;
    s.hidden_size = k->hidden;
    s.backend = "huggingface";
    return s;
  }
  return std::nullopt;
}

int default_batch_size(const EncoderSpec& spec) {
  if (const auto* k = find_known(spec.checkpoint_id)) return k->batch;
  return 16;
}

std::vector<std::string> known_encoder_names() {
  std::vector<std::string> out{"tiny"};
  for (const auto& k : kKnown) out.emplace_back(k.short_name);
  return out;
}

SubwordAlignment align_subwords(int n_words, std::span<const int> word_of_piece) {
  SubwordAlignment a;
  a.first_piece.assign(static_cast<std::size_t>(n_words), -1);
  a.owner.resize(word_of_piece.size());
  a.is_first.assign(word_of_piece.size(), false);
  int last_word = -1;
  for (std::size_t p = 0; p < word_of_piece.size(); ++p) {
    const int w = word_of_piece[p];
    if (w < 0) continue;
    if (w >= n_words) {
      throw DataError("align_subwords: piece " + std::to_string(p) + " refers to word " + std::to_string(w) +
                      " of " + std::to_string(n_words));
    }
    if (w < last_word) throw DataError("align_subwords: pieces are not in word order at piece " + std::to_string(p));
    a.owner[p] = w;
    if (a.first_piece[static_cast<std::size_t>(w)] < 0) {
      a.first_piece[static_cast<std::size_t>(w)] = static_cast<int>(p);
      a.is_first[p] = true;
    }
    last_word = w;
  }
  for (int w = 0; w < n_words; ++w) {
    if (a.first_piece[static_cast<std::size_t>(w)] < 0) {
      throw DataError("align_subwords: word " + std::to_string(w) + " has no pieces");
    }
  }
  return a;
}

// ---------------------------------------------------------------------------
// DeskEncoder
// ---------------------------------------------------------------------------

DeskEncoder::DeskEncoder(EncoderSpec spec, std::uint64_t seed) : spec_(std::move(spec)) {
  const int h = spec_.hidden_size;
  if (h <= 0 || spec_.layers < 0 || spec_.heads <= 0 || h % spec_.heads != 0 || spec_.ffn_size <= 0 ||
      spec_.vocab_size <= 3 || spec_.max_positions < 3) {
    throw UsageError("desk encoder: invalid architecture for '" + spec_.checkpoint_id + "'");
  }
  std::mt19937_64 rng(seed);
  constexpr double sd = 0.02;
  tok_emb_ = make_param("embeddings.piece", spec_.vocab_size, h, rng, sd);
  pos_emb_ = make_param("embeddings.position", spec_.max_positions, h, rng, sd);
  shape_emb_ = make_param("embeddings.shape", 2 * (kMaxLengthBucket + 1), h, rng, sd);
  emb_ln_g_ = make_const_param("embeddings.ln.gain", h, 1.0);
  emb_ln_b_ = make_const_param("embeddings.ln.bias", h, 0.0);
  for (int l = 0; l < spec_.layers; ++l) {
    const std::string p = "layer" + std::to_string(l) + ".";
    Layer L{
        make_param(p + "attn.q.weight", h, h, rng, sd),
        make_const_param(p + "attn.q.bias", h, 0.0),
        make_param(p + "attn.k.weight", h, h, rng, sd),
        make_const_param(p + "attn.k.bias", h, 0.0),
        make_param(p + "attn.v.weight", h, h, rng, sd),
        make_const_param(p + "attn.v.bias", h, 0.0),
        make_param(p + "attn.out.weight", h, h, rng, sd),
        make_const_param(p + "attn.out.bias", h, 0.0),
        make_const_param(p + "attn.ln.gain", h, 1.0),
        make_const_param(p + "attn.ln.bias", h, 0.0),
        make_param(p + "ffn.in.weight", h, spec_.ffn_size, rng, sd),
        make_const_param(p + "ffn.in.bias", spec_.ffn_size, 0.0),
        make_param(p + "ffn.out.weight", spec_.ffn_size, h, rng, sd),
        make_const_param(p + "ffn.out.bias", h, 0.0),
        make_const_param(p + "ffn.ln.gain", h, 1.0),
        make_const_param(p + "ffn.ln.bias", h, 0.0),
    };
    layers_.push_back(std::move(L));
  }
}

std::vector<std::string> DeskEncoder::word_pieces(const std::string& word) {
  const std::u32string lower = utf8::to_lower(utf8::decode(word));
  std::vector<std::string> out;
  for (std::size_t at = 0; at < lower.size(); at += kPieceChars) {
    std::string piece = utf8::encode(lower.substr(at, kPieceChars));
    out.push_back(at == 0 ? piece : "##" + piece);
  }
  if (out.empty()) out.emplace_back();
  return out;
}

int DeskEncoder::piece_id(const std::string& piece) const {
  return 3 + static_cast<int>(fnv1a(piece) % static_cast<std::uint64_t>(spec_.vocab_size - 3));
}

Tokenization DeskEncoder::tokenize(std::span<const std::string> words) const {
  Tokenization t;
  t.n_words = static_cast<int>(words.size());
  t.pieces.emplace_back("[CLS]");
  t.ids.push_back(kClsId);
  t.word_of_piece.push_back(-1);
  t.shape_ids.push_back(0);
  const std::size_t budget = static_cast<std::size_t>(spec_.max_positions) - 1;  // room for [SEP]
  for (std::size_t w = 0; w < words.size(); ++w) {
    const auto pieces = word_pieces(words[w]);
    if (t.pieces.size() + pieces.size() > budget) break;
    const int bucket = std::min<int>(static_cast<int>(utf8::length(words[w])), kMaxLengthBucket);
    for (std::size_t k = 0; k < pieces.size(); ++k) {
      t.pieces.push_back(pieces[k]);
      t.ids.push_back(piece_id(pieces[k]));
      t.word_of_piece.push_back(static_cast<int>(w));
      t.shape_ids.push_back(2 * bucket + (k == 0 ? 0 : 1));
    }
    ++t.n_words_kept;
  }
  t.pieces.emplace_back("[SEP]");
  t.ids.push_back(kSepId);
  t.word_of_piece.push_back(-1);
  t.shape_ids.push_back(1);
  return t;
}

ad::Var DeskEncoder::encode(const Tokenization& tok) const {
  const auto n = static_cast<int>(tok.ids.size());
  if (n > spec_.max_positions) throw UsageError("desk encoder: sequence longer than max_positions");
  std::vector<int> positions(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) positions[static_cast<std::size_t>(i)] = i;

  ad::Var x = ad::add(ad::add(ad::gather_rows(tok_emb_.var, tok.ids), ad::gather_rows(pos_emb_.var, positions)),
                      ad::gather_rows(shape_emb_.var, tok.shape_ids));
  x = ad::layer_norm(x, emb_ln_g_.var, emb_ln_b_.var);

  const int head_dim = spec_.hidden_size / spec_.heads;
  const double inv_sqrt = 1.0 / std::sqrt(static_cast<double>(head_dim));
  for (const auto& L : layers_) {
    const ad::Var q = ad::add_row(ad::matmul(x, L.wq.var), L.bq.var);
    const ad::Var k = ad::add_row(ad::matmul(x, L.wk.var), L.bk.var);
    const ad::Var v = ad::add_row(ad::matmul(x, L.wv.var), L.bv.var);
    std::vector<ad::Var> heads;
    for (int hd = 0; hd < spec_.heads; ++hd) {
      const auto qh = ad::cols(q, hd * head_dim, head_dim);
      const auto kh = ad::cols(k, hd * head_dim, head_dim);
      const auto vh = ad::cols(v, hd * head_dim, head_dim);
      const auto att = ad::softmax_rows(ad::scale(ad::matmul(qh, ad::transpose(kh)), inv_sqrt));
      heads.push_back(ad::matmul(att, vh));
    }
    const ad::Var attn = ad::add_row(ad::matmul(ad::hcat(heads), L.wo.var), L.bo.var);
    x = ad::layer_norm(ad::add(x, attn), L.ln1_g.var, L.ln1_b.var);
    const ad::Var ff =
        ad::add_row(ad::matmul(ad::gelu(ad::add_row(ad::matmul(x, L.w1.var), L.b1.var)), L.w2.var), L.b2.var);
    x = ad::layer_norm(ad::add(x, ff), L.ln2_g.var, L.ln2_b.var);
  }
  return x;
}

std::vector<ad::Parameter*> DeskEncoder::parameters() {
  std::vector<ad::Parameter*> out{&tok_emb_, &pos_emb_, &shape_emb_, &emb_ln_g_, &emb_ln_b_};
  for (auto& L : layers_) {
    for (auto* p : {&L.wq, &L.bq, &L.wk, &L.bk, &L.wv, &L.bv, &L.wo, &L.bo, &L.ln1_g, &L.ln1_b, &L.w1, &L.b1,
                    &L.w2, &L.b2, &L.ln2_g, &L.ln2_b}) {
      out.push_back(p);
    }
  }
  return out;
}

std::unique_ptr<Encoder> make_encoder(const EncoderSpec& spec, std::uint64_t seed) {
  if (spec.checkpoint_id.empty()) throw UsageError("encoder checkpoint_id is empty");
  if (spec.hidden_size <= 0) throw UsageError("encoder hidden_size must be positive");
  if (const auto* k = find_known(spec.checkpoint_id); k && k->hidden != spec.hidden_size) {
    throw UsageError("hidden-size mismatch for '" + spec.checkpoint_id + "': configured " +
                     std::to_string(spec.hidden_size) + ", checkpoint has " + std::to_string(k->hidden));
  }
  if (spec.backend == "desk") return std::make_unique<DeskEncoder>(spec, seed);
  if (spec.backend == "huggingface") {
    throw RuntimeFailure("cannot resolve checkpoint '" + spec.checkpoint_id +
                         "': the huggingface backend is not available in this build");
  }
  throw UsageError("unknown encoder backend '" + spec.backend + "'");
}

}  // namespace gazekit
