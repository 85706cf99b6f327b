#include "garnet/frame.hpp"

#include <string>

#include "garnet/errors.hpp"

namespace garnet {

std::string_view to_string(Channel channel) { return channel == Channel::depth ? "depth" : "rgb"; }

Channel parse_channel(std::string_view text) {
  if (text == "depth") return Channel::depth;
  if (text == "rgb") return Channel::rgb;
  throw ConfigError("unknown channel '" + std::string(text) + "' (expected depth or rgb)");
}

}  // namespace garnet
