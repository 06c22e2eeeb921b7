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

#include "svgnet/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <unordered_map>

#include <nlohmann/json.hpp>

#include "svgnet/io.hpp"

namespace svgnet::nn {

static_assert(std::endian::native == std::endian::little, "checkpoint I/O assumes a little-endian host");

template <typename T>
void write_tensor_blob(const std::filesystem::path& manifest_path, const std::filesystem::path& blob_path,
                       const std::vector<NamedTensor<T>>& tensors, std::int64_t step) {
  nlohmann::json entries = nlohmann::json::array();
  std::string blob;
  for (const auto& t : tensors) {
    nlohmann::json e = nlohmann::json::object();
    e["name"] = t.name;
    e["shape"] = t.tensor->shape();
    e["offset"] = blob.size();
    entries.push_back(std::move(e));
    for (const T v : t.tensor->values()) {
      const float f = static_cast<float>(v);
      char bytes[sizeof(float)];
      std::memcpy(bytes, &f, sizeof(float));
      blob.append(bytes, sizeof(float));
    }
  }
  nlohmann::json manifest = nlohmann::json::object();
  manifest["format_version"] = kCheckpointFormatVersion;
  manifest["params"] = std::move(entries);
  if (step >= 0) manifest["step"] = step;
  io::write_file_atomic(blob_path, blob);
  io::write_file_atomic(manifest_path, manifest.dump(2) + "\n");
}

LoadedBlob read_tensor_blob(const std::filesystem::path& manifest_path, const std::filesystem::path& blob_path) {
  nlohmann::json manifest;
  try {
    manifest = nlohmann::json::parse(io::read_file(manifest_path));
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::IoError, "bad checkpoint manifest '" + manifest_path.string() + "': " + e.what());
  }
  const std::string blob = io::read_file(blob_path);
  if (blob.size() % sizeof(float) != 0) fail(ErrorCode::IoError, "checkpoint blob size is not a multiple of 4");
  LoadedBlob out;
  try {
    if (manifest.at("format_version").get<int>() != kCheckpointFormatVersion) {
      fail(ErrorCode::IoError, "unsupported checkpoint format version");
    }
    if (manifest.contains("step")) out.step = manifest["step"].get<std::int64_t>();
    for (const auto& e : manifest.at("params")) {
      BlobEntry entry{e.at("name").get<std::string>(), e.at("shape").get<Shape>(), e.at("offset").get<std::size_t>()};
      if (entry.offset % sizeof(float) != 0 || entry.offset + shape_numel(entry.shape) * sizeof(float) > blob.size()) {
        fail(ErrorCode::IoError, "checkpoint entry '" + entry.name + "' exceeds the blob");
      }
      out.entries.push_back(std::move(entry));
    }
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::IoError, std::string("bad checkpoint manifest: ") + e.what());
  }
  out.values.resize(blob.size() / sizeof(float));
  std::memcpy(out.values.data(), blob.data(), blob.size());
  return out;
}

template <typename T>
void assign_parameters(const LoadedBlob& blob, ParameterSet<T>& params) {
  std::unordered_map<std::string, const BlobEntry*> by_name;
  for (const auto& e : blob.entries) by_name.emplace(e.name, &e);
  for (auto& p : params.items()) {
    const auto it = by_name.find(p.name);
    if (it == by_name.end()) fail(ErrorCode::IoError, "checkpoint lacks parameter '" + p.name + "'");
    const BlobEntry& e = *it->second;
    if (e.shape != p.var.shape()) {
      fail(ErrorCode::IoError, "checkpoint shape mismatch for '" + p.name + "': " + shape_to_string(e.shape) + " vs " +
                                   shape_to_string(p.var.shape()));
    }
    auto& dst = p.var.mutable_value();
    const float* src = blob.values.data() + e.offset / sizeof(float);
    for (std::size_t i = 0; i < dst.numel(); ++i) dst[i] = static_cast<T>(src[i]);
  }
}

template void write_tensor_blob<float>(const std::filesystem::path&, const std::filesystem::path&,
                                       const std::vector<NamedTensor<float>>&, std::int64_t);
template void write_tensor_blob<double>(const std::filesystem::path&, const std::filesystem::path&,
                                        const std::vector<NamedTensor<double>>&, std::int64_t);
template void assign_parameters<float>(const LoadedBlob&, ParameterSet<float>&);
template void assign_parameters<double>(const LoadedBlob&, ParameterSet<double>&);

}  // namespace svgnet::nn
