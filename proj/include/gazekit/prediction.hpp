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

#include <string>
#include <vector>

#include "gazekit/features.hpp"
#include "gazekit/types.hpp"

namespace gazekit {

/// Per-word predictions for one sentence in standardized units.
struct SentencePrediction {
  FeatureMatrix values;  ///< words x kNumFeatures
  Mask mask;             ///< false for words the predictor could not score
};

/// Anything that maps a feature dataset's sentences to per-word predictions.
class Predictor {
 public:
  virtual ~Predictor() = default;
  virtual std::string name() const = 0;
  virtual std::vector<SentencePrediction> predict(const FeatureDataset& d) const = 0;
};

}  // namespace gazekit
