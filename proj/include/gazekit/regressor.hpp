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
#include <filesystem>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "gazekit/autodiff.hpp"
#include "gazekit/encoder.hpp"
#include "gazekit/prediction.hpp"

namespace gazekit {

/// Encoder with a linear head shared across positions, read out at the first
/// piece of every word.
///
/// Head outputs pass through a fixed per-feature output normalizer,
/// prediction = shift + scale * (h W + b). The normalizer is not trained; the
/// trainer sets it to the training-target mean and standard deviation so the
/// head works in unit-variance space. A freshly built regressor has the
/// identity normalizer.
class TokenRegressor final : public Predictor {
 public:
  TokenRegressor(std::unique_ptr<Encoder> encoder, std::uint64_t seed);

  const EncoderSpec& spec() const { return encoder_->spec(); }
  const Encoder& encoder() const { return *encoder_; }

  ad::Parameter& head_weight() { return head_w_; }  ///< hidden x kNumFeatures
  ad::Parameter& head_bias() { return head_b_; }    ///< 1 x kNumFeatures
  const ad::Parameter& head_weight() const { return head_w_; }
  const ad::Parameter& head_bias() const { return head_b_; }

  void set_output_normalizer(const RowVector& shift, const RowVector& scale);
  const RowVector& output_shift() const { return out_shift_; }
  const RowVector& output_scale() const { return out_scale_; }

  struct Forward {
    ad::Var predictions;  ///< n_words_kept x kNumFeatures
    int n_words_kept = 0;
  };
  Forward forward(std::span<const std::string> words) const;

  std::string name() const override { return spec().checkpoint_id; }
  std::vector<SentencePrediction> predict(const FeatureDataset& d) const override;
  std::vector<SentencePrediction> predict(const std::vector<std::vector<std::string>>& sentences) const;

  /// Encoder parameters followed by the head.
  std::vector<ad::Parameter*> parameters();
  std::vector<const ad::Parameter*> parameters() const;
  void set_requires_grad(bool encoder, bool head);

  void save(const std::filesystem::path& path) const;
  /// Loads parameters saved by save() into a regressor of the same spec.
  void load(const std::filesystem::path& path);

 private:
  std::unique_ptr<Encoder> encoder_;
  ad::Parameter head_w_;
  ad::Parameter head_b_;
  RowVector out_shift_ = RowVector::Zero(kNumFeatures);
  RowVector out_scale_ = RowVector::Ones(kNumFeatures);
};

TokenRegressor build_regressor(const EncoderSpec& spec, std::uint64_t seed);

}  // namespace gazekit
