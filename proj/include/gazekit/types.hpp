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

#include <Eigen/Core>

#include <array>
#include <cstddef>
#include <optional>
#include <string>
#include <string_view>

namespace gazekit {

/// Number of gaze features predicted per word.
inline constexpr int kNumFeatures = 8;

/// Column order of every feature matrix in the toolkit.
enum class Feature : int { nFix = 0, FFD, FPD, TRT, MFD, fProp, nRefix, reProp };

inline constexpr std::array<std::string_view, kNumFeatures> kFeatureNames = {
    "nFix", "FFD", "FPD", "TRT", "MFD", "fProp", "nRefix", "reProp"};

inline constexpr std::string_view feature_name(Feature f) {
  return kFeatureNames[static_cast<std::size_t>(f)];
}

std::optional<Feature> parse_feature(std::string_view name);

template <typename Scalar>
using FeatureRow = Eigen::Matrix<Scalar, 1, kNumFeatures>;

template <typename Scalar>
using FeatureMatrixT = Eigen::Matrix<Scalar, Eigen::Dynamic, kNumFeatures, Eigen::RowMajor>;

using FeatureMatrix = FeatureMatrixT<double>;
using FeatureVector = FeatureRow<double>;
using Mask = Eigen::Array<bool, Eigen::Dynamic, 1>;

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using RowVector = Eigen::RowVectorXd;

}  // namespace gazekit
