/*
 * Copyright (c) 2026 The SVGNet Authors
 *
 * Licensed under the Apache License, Version 2.0;
 * You may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an 'AS IS' BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#pragma once

// Standalone SVG rendering of one scene with attention-weighted opacity.

#include <string>
#include <vector>

#include "svgnet/evaluation.hpp"
#include "svgnet/model.hpp"

namespace svgnet::viz {

inline constexpr double kMinOpacity = 0.15;

/// kMinOpacity + (1 - kMinOpacity) * score / max_score; kMinOpacity when
/// max_score is zero.
double attention_opacity(double score, double max_score);

/// Renders in the normalized agent frame with +y up. attention is the
/// sample's row from extract_attention; caps must match the model that
/// produced it. Unmasked raw scores are embedded in a <metadata
/// id="attention"> JSON block and as data-score attributes.
std::string render_scene_svg(const scene::NormalizedSample& sample, const eval::Trajectory& prediction,
                             const std::vector<model::AttentionEntry>& attention, const scene::BatchCaps& caps);

}  // namespace svgnet::viz
