#pragma once
// On-disk formats: RFPX paired-line datasets (binary, little-endian, f32
// payload) with JSON sidecar manifests, and RFCK model checkpoints. All
// writes go through a temp file + rename so readers never see partial data.

#include <string>

#include <json.hpp>

#include "rfx/model.hpp"
#include "rfx/rfsim.hpp"

namespace rfx::io {

using json = nlohmann::json;

// RFPX: magic "RFPX", u16 version=1, u32 n_pairs, u32 L, f32 fs, f32 fc,
// then n_pairs x (L f32 low samples, L f32 high samples).
void write_dataset(const sim::PairedDataset& ds, const std::string& path,
                   const json& manifest);
sim::PairedDataset read_dataset(const std::string& path);
json read_manifest(const std::string& path);  // path is the dataset path
std::string manifest_path(const std::string& dataset_path);

// RFCK: magic "RFCK", u16 version=1, u32 header bytes, JSON header with the
// model config and a named parameter table (shapes + byte offsets), then
// contiguous f32 little-endian arrays. Saving snaps in-memory parameters to
// their f32-rounded values so a reloaded model reproduces the saved one's
// forward pass exactly.
void save_checkpoint(model::ModelParams& params, const std::string& path,
                     const json& extra = json::object());
model::ModelParams load_checkpoint(const std::string& path,
                                   json* extra = nullptr);

void atomic_write(const std::string& path, const std::string& bytes);

}  // namespace rfx::io
