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

#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "gazekit/autodiff.hpp"

namespace gazekit {

/// Identifies an encoder and how to obtain it.
struct EncoderSpec {
  std::string checkpoint_id = "tiny";
  int hidden_size = 32;
  std::string backend = "desk";
  bool trainable = true;  ///< false evaluates the pretrained encoder and head as-is

  // Desk-scale architecture; ignored by other backends.
  int layers = 2;
  int heads = 2;
  int ffn_size = 64;
  int vocab_size = 4096;
  int max_positions = 128;
};

/// Looks up a known encoder by short name ("tiny", "bert-en", "xlm-100", ...)
/// or checkpoint identifier. Returns nullopt for unknown names.
std::optional<EncoderSpec> known_encoder(const std::string& name);
/// Default batch size for an encoder (16, 8 or 2 for the published models).
int default_batch_size(const EncoderSpec& spec);
std::vector<std::string> known_encoder_names();

/// Subword pieces of a sentence, including the special pieces around it.
struct Tokenization {
  std::vector<std::string> pieces;
  std::vector<int> ids;
  std::vector<int> word_of_piece;  ///< owning word, -1 for special pieces
  std::vector<int> shape_ids;      ///< word-shape bucket of each piece
  int n_words = 0;                 ///< words in the input
  int n_words_kept = 0;            ///< words whose first piece fits the length limit
};

struct SubwordAlignment {
  std::vector<int> first_piece;  ///< per word: index of its first piece
  std::vector<std::optional<int>> owner;  ///< per piece: word index, nullopt for special pieces
  std::vector<bool> is_first;    ///< per piece: piece is the first of its word
};

/// Aligns words to pieces given the per-piece word index. Throws DataError
/// if a word has no piece or words are not in order.
SubwordAlignment align_subwords(int n_words, std::span<const int> word_of_piece);

/// Opaque sequence encoder producing one hidden vector per piece.
class Encoder {
 public:
  virtual ~Encoder() = default;

  virtual const EncoderSpec& spec() const = 0;
  virtual Tokenization tokenize(std::span<const std::string> words) const = 0;
  /// n_pieces x hidden_size.
  virtual ad::Var encode(const Tokenization& tok) const = 0;
  virtual std::vector<ad::Parameter*> parameters() = 0;
};

/// Randomly initialized BERT-style encoder small enough for CPU tests.
///
/// Input pieces come from lowercasing each word and cutting it into chunks of
/// at most kPieceChars code points; chunks after the first carry a "##"
/// prefix. Pieces are hashed into the vocabulary. The input embedding is the
/// sum of piece, position and word-shape embeddings; the word-shape bucket
/// encodes the owning word's length and whether the piece continues a word.
class DeskEncoder final : public Encoder {
 public:
  static constexpr int kPieceChars = 4;
  static constexpr int kMaxLengthBucket = 16;
  static constexpr int kPadId = 0;
  static constexpr int kClsId = 1;
  static constexpr int kSepId = 2;

  DeskEncoder(EncoderSpec spec, std::uint64_t seed);

  const EncoderSpec& spec() const override { return spec_; }
  Tokenization tokenize(std::span<const std::string> words) const override;
  ad::Var encode(const Tokenization& tok) const override;
  std::vector<ad::Parameter*> parameters() override;

  /// Word pieces of a single word, without special pieces.
  static std::vector<std::string> word_pieces(const std::string& word);

 private:
  struct Layer {
    ad::Parameter wq, bq, wk, bk, wv, bv, wo, bo;
    ad::Parameter ln1_g, ln1_b;
    ad::Parameter w1, b1, w2, b2;
    ad::Parameter ln2_g, ln2_b;
  };

  int piece_id(const std::string& piece) const;

  EncoderSpec spec_;
  ad::Parameter tok_emb_, pos_emb_, shape_emb_, emb_ln_g_, emb_ln_b_;
  std::vector<Layer> layers_;
};

/// Builds the encoder for a spec. Throws RuntimeFailure when the backend
/// cannot resolve the checkpoint and UsageError on a hidden-size mismatch.
std::unique_ptr<Encoder> make_encoder(const EncoderSpec& spec, std::uint64_t seed);

}  // namespace gazekit
