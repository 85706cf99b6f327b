#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>

#include "garnet/embedding.hpp"
#include "garnet/similarity_map.hpp"

namespace garnet {

// A trained encoder together with the map fitted from its training split.
//
// On-disk layout (all integers and floats little-endian):
//
//   "GARNETCK"  u32 version
//   u32 input_dim  u32 hidden_count  u32 width...
//   str task
//   f64 beta1 f64 beta2 f64 epsilon
//   f64 base_lr f64 decay u32 step_size u64 optimizer_step u64 iterations_per_epoch
//   f64 margin u64 seed u64 iterations u64 batch_size
//   u64 value_count  f64 parameter values (parameter order, row-major)
//   u32 cluster_count, per cluster:
//     str label f64 bandwidth f64 threshold f64 coverage f64 cx f64 cy
//     u64 point_count  (f64 x, f64 y)...
//
// where str is u32 length followed by the bytes.
struct ModelCheckpoint {
  static constexpr std::string_view kMagic = "GARNETCK";
  static constexpr std::uint32_t kVersion = 1;

  Network net;
  Task task = Task::shape;
  AdamSettings adam;
  StepSchedule schedule;
  std::uint64_t optimizer_step = 0;
  std::uint64_t iterations_per_epoch = 0;
  double margin = 1.0;
  std::uint64_t seed = 0;
  std::uint64_t iterations = 0;
  std::uint64_t batch_size = 0;
  SimilarityMap map;
};

std::string serialize(const ModelCheckpoint& checkpoint);
// `source` names the origin in parse errors.
ModelCheckpoint deserialize(std::string_view bytes, const std::string& source = "checkpoint");

void save_checkpoint(const std::filesystem::path& path, const ModelCheckpoint& checkpoint);
ModelCheckpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace garnet
