#include "garnet/dataset.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <map>
#include <random>
#include <set>
#include <sstream>
#include <tuple>

#include "binary_io.hpp"
#include "garnet/errors.hpp"

namespace garnet {

namespace fs = std::filesystem;

namespace {

constexpr std::string_view kRecordMagic = "GARNETFR";
constexpr std::string_view kManifestHeader = "garnet-manifest 1";

std::string sequence_name(const VideoSequence& seq) {
  return seq.garment_id + "#" + std::to_string(seq.video);
}

std::size_t index_of(const std::vector<std::string>& names, const std::string& name, const char* what) {
  const auto it = std::find(names.begin(), names.end(), name);
  if (it == names.end()) throw ConfigError(std::string("undeclared ") + what + " '" + name + "'");
  return static_cast<std::size_t>(it - names.begin());
}

std::string trim(std::string_view s) {
  std::size_t b = 0;
  std::size_t e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return std::string(s.substr(b, e - b));
}

std::vector<std::string> split_list(std::string_view s) {
  std::vector<std::string> out;
  std::stringstream ss{std::string(s)};
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

std::string join(const std::vector<std::string>& items) {
  std::string out;
  for (std::size_t i = 0; i < items.size(); ++i) {
    if (i) out += ", ";
    out += items[i];
  }
  return out;
}

}  // namespace

std::size_t Dataset::label_index(const VideoSequence& seq, Task task) const {
  return index_of(categories(task), label(seq, task), task == Task::shape ? "shape" : "weight tier");
}

void Dataset::validate() const {
  if (shapes.size() < 2) throw ConfigError("dataset declares fewer than two shapes");
  if (weights.size() < 2) throw ConfigError("dataset declares fewer than two weight tiers");
  if (dimension == 0) throw ConfigError("dataset dimension must be positive");
  std::map<std::string, std::tuple<std::string, std::string, std::uint32_t>> garments;
  std::set<std::pair<std::string, std::uint32_t>> seen;
  for (const auto& seq : sequences) {
    const std::string name = sequence_name(seq);
    index_of(shapes, seq.shape, "shape");
    index_of(weights, seq.weight, "weight tier");
    if (!seen.insert({seq.garment_id, seq.video}).second) throw ConfigError("duplicate sequence " + name);
    if (seq.frames.size() != frames_per_sequence) {
      throw ConfigError("sequence " + name + " has " + std::to_string(seq.frames.size()) + " frames, expected " +
                        std::to_string(frames_per_sequence));
    }
    for (const auto& f : seq.frames) {
      if (f.dimension() != dimension) {
        throw ConfigError("sequence " + name + " has a frame of dimension " + std::to_string(f.dimension()) +
                          ", expected " + std::to_string(dimension));
      }
      for (float v : f.values) {
        if (!std::isfinite(v) || v < 0.0f || v > 1.0f) {
          throw ConfigError("sequence " + name + " has a frame value outside [0, 1]");
        }
      }
    }
    const auto record = std::make_tuple(seq.shape, seq.weight, seq.group);
    const auto [it, inserted] = garments.emplace(seq.garment_id, record);
    if (!inserted && it->second != record) {
      throw ConfigError("garment " + seq.garment_id + " has inconsistent labels or group across sequences");
    }
  }
}

SynthSpec SynthSpec::with_noise(double factor) const {
  SynthSpec s = *this;
  s.video_noise *= factor;
  s.frame_noise *= factor;
  s.dynamics_noise *= factor;
  return s;
}

void SynthSpec::validate() const {
  if (shapes.size() < 2) throw ConfigError("synthetic spec needs at least two shapes");
  if (weights.size() < 1) throw ConfigError("synthetic spec needs weight tiers");
  if (instance_tiers.size() != shapes.size()) throw ConfigError("instance_tiers must have one row per shape");
  const std::size_t instances = instances_per_shape();
  if (instances < 2) throw ConfigError("synthetic spec needs at least two instances per shape");
  for (const auto& row : instance_tiers) {
    if (row.size() != instances) throw ConfigError("instance_tiers rows differ in length");
    for (const auto& tier : row) index_of(weights, tier, "weight tier");
  }
  if (videos_per_instance == 0 || frames_per_video < 2 || dimension < 2) {
    throw ConfigError("synthetic spec sizes must be positive (frames >= 2, dimension >= 2)");
  }
  if (!(dynamics_fraction > 0.0 && dynamics_fraction < 1.0)) throw ConfigError("dynamics_fraction must lie in (0, 1)");
  for (double v : {class_gap, start_share, tier_gap, instance_spread, video_noise, frame_noise, dynamics_noise}) {
    if (!std::isfinite(v) || v < 0.0) throw ConfigError("synthetic spec scales must be finite and >= 0");
  }
}

Dataset synth_generate(const SynthSpec& spec, std::uint64_t seed) {
  spec.validate();
  const std::size_t dim = spec.dimension;
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  auto draw = [&](double scale) {
    std::vector<double> v(dim);
    for (double& x : v) x = scale * normal(rng);
    return v;
  };
  // Dimensions [0, geometry_dims) carry the shape path, the rest the tier.
  const auto dynamics_dims = std::clamp<std::size_t>(
      static_cast<std::size_t>(std::llround(spec.dynamics_fraction * static_cast<double>(dim))), 1, dim - 1);
  const std::size_t geometry_dims = dim - dynamics_dims;
  auto mask = [&](std::vector<double> v, bool geometry) {
    for (std::size_t d = 0; d < dim; ++d) {
      if ((d < geometry_dims) != geometry) v[d] = 0.0;
    }
    return v;
  };

  const std::vector<double> common_start = mask(draw(1.0), true);
  std::vector<std::vector<double>> class_start;
  std::vector<std::vector<double>> class_end;
  for (std::size_t c = 0; c < spec.shapes.size(); ++c) {
    class_start.push_back(mask(draw(spec.class_gap * spec.start_share), true));
    class_end.push_back(mask(draw(spec.class_gap), true));
  }
  std::vector<std::vector<double>> tier_signature;
  for (std::size_t t = 0; t < spec.weights.size(); ++t) tier_signature.push_back(mask(draw(spec.tier_gap), false));
  std::vector<std::vector<std::vector<double>>> instance_offset(spec.shapes.size());
  for (std::size_t c = 0; c < spec.shapes.size(); ++c) {
    for (std::size_t i = 0; i < spec.instances_per_shape(); ++i) {
      instance_offset[c].push_back(draw(spec.instance_spread));
    }
  }

  Dataset ds;
  ds.shapes = spec.shapes;
  ds.weights = spec.weights;
  ds.dimension = dim;
  ds.frames_per_sequence = spec.frames_per_video;
  ds.sample_rate_hz = spec.sample_rate_hz;
  ds.channel = spec.channel;

  const double dynamics_frame_noise = std::hypot(spec.frame_noise, spec.dynamics_noise);
  const double last = static_cast<double>(spec.frames_per_video - 1);
  for (std::size_t c = 0; c < spec.shapes.size(); ++c) {
    for (std::size_t i = 0; i < spec.instances_per_shape(); ++i) {
      const std::string& tier = spec.instance_tiers[c][i];
      const auto& sig = tier_signature[index_of(spec.weights, tier, "weight tier")];
      for (std::size_t v = 0; v < spec.videos_per_instance; ++v) {
        VideoSequence seq;
        seq.garment_id = spec.shapes[c] + "-" + std::to_string(i + 1);
        seq.video = static_cast<std::uint32_t>(v);
        seq.shape = spec.shapes[c];
        seq.weight = tier;
        seq.group = static_cast<std::uint32_t>(i + 1);
        const std::vector<double> video_offset = draw(spec.video_noise);
        for (std::size_t t = 0; t < spec.frames_per_video; ++t) {
          const double u = static_cast<double>(t) / last;
          const double s = u * u * (3.0 - 2.0 * u);
          FeatureFrame frame;
          frame.channel = spec.channel;
          frame.values.resize(dim);
          for (std::size_t d = 0; d < dim; ++d) {
            const double latent = (common_start[d] + class_start[c][d]) * (1.0 - s) + class_end[c][d] * s +
                                  sig[d] + instance_offset[c][i][d] + video_offset[d] +
                                  (d < geometry_dims ? spec.frame_noise : dynamics_frame_noise) * normal(rng);
            frame.values[d] = static_cast<float>(1.0 / (1.0 + std::exp(-latent)));
          }
          seq.frames.push_back(std::move(frame));
        }
        ds.sequences.push_back(std::move(seq));
      }
    }
  }
  return ds;
}

std::vector<Fold> loocv_splits(const Dataset& dataset) {
  std::vector<std::size_t> order(dataset.sequences.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    const auto& sa = dataset.sequences[a];
    const auto& sb = dataset.sequences[b];
    return std::tie(sa.garment_id, sa.video) < std::tie(sb.garment_id, sb.video);
  });

  std::set<std::uint32_t> groups;
  std::map<std::string, std::set<std::uint32_t>> groups_by_shape;
  for (const auto& seq : dataset.sequences) {
    groups.insert(seq.group);
    groups_by_shape[seq.shape].insert(seq.group);
  }
  if (groups.size() < 2) throw ConfigError("cross-validation needs at least two instance groups");
  for (const auto& shape : dataset.shapes) {
    for (std::uint32_t g : groups) {
      if (!groups_by_shape[shape].count(g)) {
        throw ConfigError("category '" + shape + "' has no garment in group " + std::to_string(g));
      }
    }
  }

  std::vector<Fold> folds;
  for (std::uint32_t g : groups) {
    Fold fold;
    fold.test_group = g;
    for (std::size_t idx : order) {
      (dataset.sequences[idx].group == g ? fold.test : fold.train).push_back(idx);
    }
    folds.push_back(std::move(fold));
  }
  return folds;
}

void write_feature_record(const fs::path& path, std::span<const FeatureFrame> frames) {
  detail::ByteWriter w;
  w.raw(kRecordMagic);
  const std::size_t dim = frames.empty() ? 0 : frames.front().dimension();
  w.u32(static_cast<std::uint32_t>(dim));
  w.u32(static_cast<std::uint32_t>(frames.size()));
  for (const auto& f : frames) {
    if (f.dimension() != dim) throw InputError("feature record frames must share one dimension");
    for (float v : f.values) w.f32(v);
  }
  detail::write_file(path, w.bytes());
}

std::vector<FeatureFrame> read_feature_record(const fs::path& path, Channel channel) {
  const std::string bytes = detail::read_file(path);
  detail::ByteReader r(bytes, path.string());
  if (r.raw(std::min(bytes.size(), kRecordMagic.size())) != kRecordMagic) r.fail(0, "bad feature-record magic");
  const std::size_t dim_at = r.offset();
  const std::uint32_t dim = r.u32();
  const std::uint32_t count = r.u32();
  if (dim == 0 && count != 0) r.fail(dim_at, "zero dimension");
  if (r.remaining() != static_cast<std::size_t>(dim) * count * 4) {
    r.fail(r.offset(), "payload holds " + std::to_string(r.remaining()) + " bytes, header declares " +
                           std::to_string(static_cast<std::size_t>(dim) * count * 4));
  }
  std::vector<FeatureFrame> frames(count);
  for (auto& f : frames) {
    f.channel = channel;
    f.values.resize(dim);
    for (float& v : f.values) v = r.f32();
  }
  return frames;
}

namespace {

class PgmScanner {
 public:
  PgmScanner(std::string_view data, std::string source) : data_(data), source_(std::move(source)) {}

  [[noreturn]] void fail(const std::string& what) const {
    throw ParseError(source_ + ": " + what + " at byte offset " + std::to_string(pos_));
  }

  void skip_space() {
    while (pos_ < data_.size()) {
      const char c = data_[pos_];
      if (c == '#') {
        while (pos_ < data_.size() && data_[pos_] != '\n') ++pos_;
      } else if (std::isspace(static_cast<unsigned char>(c))) {
        ++pos_;
      } else {
        break;
      }
    }
  }

  std::uint32_t number() {
    skip_space();
    const std::size_t start = pos_;
    std::uint64_t v = 0;
    while (pos_ < data_.size() && std::isdigit(static_cast<unsigned char>(data_[pos_]))) {
      v = v * 10 + static_cast<std::uint64_t>(data_[pos_] - '0');
      if (v > 0xffffffu) fail("number too large");
      ++pos_;
    }
    if (pos_ == start) fail("expected a decimal number");
    return static_cast<std::uint32_t>(v);
  }

  std::string_view data_;
  std::string source_;
  std::size_t pos_ = 0;
};

}  // namespace

GrayImage read_pgm(const fs::path& path) {
  const std::string bytes = detail::read_file(path);
  PgmScanner s(bytes, path.string());
  if (bytes.size() < 2 || bytes[0] != 'P' || (bytes[1] != '5' && bytes[1] != '2')) s.fail("not a P2/P5 graymap");
  const bool binary = bytes[1] == '5';
  s.pos_ = 2;
  GrayImage img;
  img.width = s.number();
  img.height = s.number();
  img.max_value = s.number();
  if (img.width == 0 || img.height == 0) s.fail("empty image");
  if (img.max_value == 0 || img.max_value > 255) s.fail("only 8-bit graymaps are supported");
  const std::size_t n = img.width * img.height;
  img.pixels.resize(n);
  if (binary) {
    if (s.pos_ >= bytes.size() || !std::isspace(static_cast<unsigned char>(bytes[s.pos_]))) {
      s.fail("expected whitespace after header");
    }
    ++s.pos_;
    if (bytes.size() - s.pos_ < n) s.fail("truncated pixel data");
    for (std::size_t i = 0; i < n; ++i) {
      img.pixels[i] = static_cast<unsigned char>(bytes[s.pos_ + i]);
      if (img.pixels[i] > img.max_value) {
        s.pos_ += i;
        s.fail("pixel exceeds maxval");
      }
    }
  } else {
    for (std::size_t i = 0; i < n; ++i) {
      const std::uint32_t v = s.number();
      if (v > img.max_value) s.fail("pixel exceeds maxval");
      img.pixels[i] = static_cast<std::uint16_t>(v);
    }
  }
  return img;
}

void write_pgm(const fs::path& path, const GrayImage& image) {
  std::string out = "P5\n" + std::to_string(image.width) + " " + std::to_string(image.height) + "\n" +
                    std::to_string(image.max_value) + "\n";
  for (std::uint16_t p : image.pixels) out.push_back(static_cast<char>(p));
  detail::write_file(path, out);
}

FeatureFrame image_to_frame(const GrayImage& image, std::size_t dimension, Channel channel) {
  const auto side = static_cast<std::size_t>(std::llround(std::sqrt(static_cast<double>(dimension))));
  if (side == 0 || side * side != dimension) {
    throw InputError("image frames need a square feature dimension, got " + std::to_string(dimension));
  }
  if (image.width < side || image.height < side) {
    throw InputError("image " + std::to_string(image.width) + "x" + std::to_string(image.height) +
                     " is smaller than the " + std::to_string(side) + "x" + std::to_string(side) + " grid");
  }
  if (image.pixels.size() != image.width * image.height) throw InputError("image pixel count mismatch");
  FeatureFrame frame;
  frame.channel = channel;
  frame.values.resize(dimension);
  for (std::size_t by = 0; by < side; ++by) {
    const std::size_t y0 = by * image.height / side;
    const std::size_t y1 = (by + 1) * image.height / side;
    for (std::size_t bx = 0; bx < side; ++bx) {
      const std::size_t x0 = bx * image.width / side;
      const std::size_t x1 = (bx + 1) * image.width / side;
      double sum = 0.0;
      for (std::size_t y = y0; y < y1; ++y) {
        for (std::size_t x = x0; x < x1; ++x) sum += image.pixels[y * image.width + x];
      }
      const double mean = sum / static_cast<double>((y1 - y0) * (x1 - x0));
      frame.values[by * side + bx] = static_cast<float>(mean / image.max_value);
    }
  }
  return frame;
}

Dataset ingest(const fs::path& manifest) {
  const std::string text = detail::read_file(manifest);
  const std::string source = manifest.string();
  const fs::path base = manifest.parent_path();

  Dataset ds;
  bool have_header = false;
  bool in_table = false;
  std::size_t line_start = 0;
  auto fail = [&](const std::string& what) -> void {
    throw ParseError(source + ": " + what + " at byte offset " + std::to_string(line_start));
  };
  struct Row {
    VideoSequence seq;
    fs::path path;
  };
  std::vector<Row> rows;

  while (line_start < text.size()) {
    std::size_t end = text.find('\n', line_start);
    if (end == std::string::npos) end = text.size();
    const std::string line = trim(std::string_view(text).substr(line_start, end - line_start));
    if (line.empty() || line[0] == '#') {
      line_start = end + 1;
      continue;
    }
    if (!have_header) {
      if (line != kManifestHeader) fail("expected '" + std::string(kManifestHeader) + "'");
      have_header = true;
    } else if (in_table) {
      std::istringstream fields(line);
      Row row;
      std::string path;
      if (!(fields >> row.seq.garment_id >> row.seq.video >> row.seq.shape >> row.seq.weight >> row.seq.group >>
            path)) {
        fail("sequence rows need: garment_id video shape weight group path");
      }
      std::string extra;
      if (fields >> extra) fail("trailing field '" + extra + "' in sequence row");
      row.path = base / path;
      rows.push_back(std::move(row));
    } else if (line == "sequences:") {
      in_table = true;
    } else {
      const auto colon = line.find(':');
      if (colon == std::string::npos) fail("expected 'key: value'");
      const std::string key = trim(std::string_view(line).substr(0, colon));
      const std::string value = trim(std::string_view(line).substr(colon + 1));
      try {
        if (key == "dimension") {
          ds.dimension = std::stoul(value);
        } else if (key == "frames_per_sequence") {
          ds.frames_per_sequence = std::stoul(value);
        } else if (key == "sample_rate_hz") {
          ds.sample_rate_hz = std::stod(value);
        } else if (key == "channel") {
          ds.channel = parse_channel(value);
        } else if (key == "shapes") {
          ds.shapes = split_list(value);
        } else if (key == "weights") {
          ds.weights = split_list(value);
        } else {
          fail("unknown key '" + key + "'");
        }
      } catch (const std::logic_error&) {
        fail("bad value for '" + key + "'");
      } catch (const ConfigError& e) {
        fail(e.what());
      }
    }
    line_start = end + 1;
  }
  if (!have_header) {
    line_start = 0;
    fail("empty manifest");
  }

  for (Row& row : rows) {
    VideoSequence seq = std::move(row.seq);
    std::error_code ec;
    if (!fs::exists(row.path, ec)) throw ConfigError("manifest " + source + " references missing file: " + row.path.string());
    if (fs::is_directory(row.path)) {
      std::vector<fs::path> images;
      for (const auto& entry : fs::directory_iterator(row.path)) {
        if (entry.path().extension() == ".pgm") images.push_back(entry.path());
      }
      std::sort(images.begin(), images.end());
      for (const auto& img : images) seq.frames.push_back(image_to_frame(read_pgm(img), ds.dimension, ds.channel));
    } else {
      seq.frames = read_feature_record(row.path, ds.channel);
    }
    ds.sequences.push_back(std::move(seq));
  }
  ds.validate();
  return ds;
}

fs::path export_dataset(const Dataset& dataset, const fs::path& directory) {
  dataset.validate();
  fs::create_directories(directory / "sequences");
  std::ostringstream m;
  m.precision(17);
  m << kManifestHeader << "\n";
  m << "dimension: " << dataset.dimension << "\n";
  m << "frames_per_sequence: " << dataset.frames_per_sequence << "\n";
  m << "sample_rate_hz: " << dataset.sample_rate_hz << "\n";
  m << "channel: " << to_string(dataset.channel) << "\n";
  m << "shapes: " << join(dataset.shapes) << "\n";
  m << "weights: " << join(dataset.weights) << "\n";
  m << "sequences:\n";
  m << "# garment_id video shape weight group path\n";
  for (const auto& seq : dataset.sequences) {
    std::ostringstream name;
    name << seq.garment_id << "_v" << seq.video << ".gfr";
    const fs::path rel = fs::path("sequences") / name.str();
    write_feature_record(directory / rel, seq.frames);
    m << seq.garment_id << ' ' << seq.video << ' ' << seq.shape << ' ' << seq.weight << ' ' << seq.group << ' '
      << rel.generic_string() << "\n";
  }
  const fs::path manifest = directory / "manifest.txt";
  detail::write_file(manifest, m.str());
  return manifest;
}

}  // namespace garnet
