#pragma once

#include <cstddef>
#include <string_view>
#include <vector>

namespace garnet {

// Which sensor stream a frame came from. Only used for bookkeeping in
// reports; the pipeline treats both identically.
enum class Channel { depth, rgb };

std::string_view to_string(Channel channel);
Channel parse_channel(std::string_view text);

// One observation: a normalized feature vector standing in for a video frame.
// Values are stored in single precision so that feature-record files
// round-trip exactly.
struct FeatureFrame {
  std::vector<float> values;
  Channel channel = Channel::depth;

  std::size_t dimension() const { return values.size(); }
};

}  // namespace garnet
