#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "garnet/frame.hpp"
#include "garnet/similarity_map.hpp"

namespace garnet {

// One recorded grasp-and-drop of one garment.
struct VideoSequence {
  std::string garment_id;  // identifies the physical garment instance
  std::uint32_t video = 0;  // repetition index for that garment
  std::string shape;
  std::string weight;
  std::uint32_t group = 0;  // cross-validation group, 1-based
  std::vector<FeatureFrame> frames;
};

struct Dataset {
  std::vector<std::string> shapes;
  std::vector<std::string> weights;
  std::size_t dimension = 0;
  std::size_t frames_per_sequence = 0;
  double sample_rate_hz = 10.0;
  Channel channel = Channel::depth;
  std::vector<VideoSequence> sequences;

  const std::vector<std::string>& categories(Task task) const { return task == Task::shape ? shapes : weights; }
  const std::string& label(const VideoSequence& seq, Task task) const {
    return task == Task::shape ? seq.shape : seq.weight;
  }
  // Position of the sequence's label for `task` within categories(task).
  std::size_t label_index(const VideoSequence& seq, Task task) const;
  std::size_t frame_count() const { return sequences.size() * frames_per_sequence; }

  // Checks every type invariant; throws ConfigError naming the offender.
  void validate() const;
};

// Parameters of the synthetic grasp-and-drop generator.
//
// Each frame is a logistic squash of a latent D-vector. The leading
// "geometry" dimensions travel from a shared crumpled start (plus a small
// class-specific part) to a class-specific hanging end along a smoothstep
// progress curve. The trailing "dynamics" dimensions (dynamics_fraction of D)
// carry a weight-tier signature under extra per-frame noise. A per-instance offset and per-video and
// per-frame noise cover all dimensions. Everything random is drawn from the
// seed in a fixed order.
struct SynthSpec {
  std::vector<std::string> shapes{"pants", "shirt", "sweater", "towel", "tshirt"};
  std::vector<std::string> weights{"light", "medium", "heavy"};
  // instance_tiers[shape][instance] names the weight tier of that garment.
  // Every shape spans all tiers and every instance group holds all tiers.
  std::vector<std::vector<std::string>> instance_tiers{
      {"heavy", "medium", "heavy", "light"},
      {"light", "medium", "light", "heavy"},
      {"medium", "heavy", "light", "heavy"},
      {"medium", "light", "heavy", "medium"},
      {"light", "heavy", "medium", "light"},
  };
  std::size_t videos_per_instance = 10;
  std::size_t frames_per_video = 60;
  std::size_t dimension = 64;
  double sample_rate_hz = 10.0;
  Channel channel = Channel::depth;

  double class_gap = 1.0;        // scale of class-specific path displacement
  double start_share = 0.35;     // fraction of class_gap present in the crumpled start
  double tier_gap = 1.0;         // scale of weight-tier signature
  double dynamics_fraction = 0.25;
  double instance_spread = 0.05; // per-garment offset scale
  double video_noise = 0.1;      // per-video offset scale
  double frame_noise = 0.15;     // per-frame noise scale
  double dynamics_noise = 1.0;   // extra per-frame noise on the dynamics dimensions

  std::size_t instances_per_shape() const { return instance_tiers.empty() ? 0 : instance_tiers.front().size(); }
  // Multiplies every noise scale.
  SynthSpec with_noise(double factor) const;
  void validate() const;
};

Dataset synth_generate(const SynthSpec& spec, std::uint64_t seed);

struct Fold {
  std::uint32_t test_group = 0;
  std::vector<std::size_t> train;  // indices into Dataset::sequences
  std::vector<std::size_t> test;
};

// Leave-one-group-out folds: fold k tests group k and trains on the rest.
// Indices are ordered by (garment_id, video) so the result does not depend on
// the order sequences were loaded in. Throws ConfigError when a category is
// missing one of the groups.
std::vector<Fold> loocv_splits(const Dataset& dataset);

// Feature-record file: "GARNETFR", u32 dimension, u32 frame count, then
// frame-major little-endian float32 values.
void write_feature_record(const std::filesystem::path& path, std::span<const FeatureFrame> frames);
std::vector<FeatureFrame> read_feature_record(const std::filesystem::path& path, Channel channel = Channel::depth);

struct GrayImage {
  std::size_t width = 0;
  std::size_t height = 0;
  std::uint32_t max_value = 255;
  std::vector<std::uint16_t> pixels;  // row-major
};

// Portable graymap, binary (P5) or ASCII (P2), maxval <= 255.
GrayImage read_pgm(const std::filesystem::path& path);
void write_pgm(const std::filesystem::path& path, const GrayImage& image);
// Block-averages onto a sqrt(D) x sqrt(D) grid and divides by max_value.
FeatureFrame image_to_frame(const GrayImage& image, std::size_t dimension, Channel channel = Channel::depth);

// Reads a manifest and every frame file it references. A sequence path is
// either a feature-record file or a directory of .pgm frames (sorted by name).
Dataset ingest(const std::filesystem::path& manifest);

// Writes `dataset` as a manifest plus one feature-record file per sequence
// under `directory`. Returns the manifest path.
std::filesystem::path export_dataset(const Dataset& dataset, const std::filesystem::path& directory);

}  // namespace garnet
