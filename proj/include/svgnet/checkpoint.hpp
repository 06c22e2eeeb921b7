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

// Checkpoint directory layout:
//   config.json     model configuration
//   manifest.json   {"format_version":1,"params":[{"name","shape","offset"}]}
//   params.bin      little-endian float32 values, manifest order; offset in bytes
//   optimizer.json  optional, same manifest schema plus "step"
//   optimizer.bin

#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "svgnet/nn.hpp"

namespace svgnet::nn {

inline constexpr int kCheckpointFormatVersion = 1;

template <typename T>
struct NamedTensor {
  std::string name;
  const Tensor<T>* tensor;
};

/// Writes manifest + blob atomically.
template <typename T>
void write_tensor_blob(const std::filesystem::path& manifest_path, const std::filesystem::path& blob_path,
                       const std::vector<NamedTensor<T>>& tensors, std::int64_t step = -1);

struct BlobEntry {
  std::string name;
  Shape shape;
  std::size_t offset = 0;
};

struct LoadedBlob {
  std::vector<BlobEntry> entries;
  std::vector<float> values;  // whole blob
  std::int64_t step = -1;
};

LoadedBlob read_tensor_blob(const std::filesystem::path& manifest_path, const std::filesystem::path& blob_path);

/// Copies blob values into matching parameters; every parameter must be
/// present with the same shape.
template <typename T>
void assign_parameters(const LoadedBlob& blob, ParameterSet<T>& params);

}  // namespace svgnet::nn
