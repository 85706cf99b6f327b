#include "garnet/checkpoint.hpp"

#include <utility>
#include <vector>

#include "binary_io.hpp"
#include "garnet/errors.hpp"

namespace garnet {

std::string serialize(const ModelCheckpoint& ck) {
  detail::ByteWriter w;
  w.raw(ModelCheckpoint::kMagic);
  w.u32(ModelCheckpoint::kVersion);
  w.u32(static_cast<std::uint32_t>(ck.net.input_dim()));
  w.u32(static_cast<std::uint32_t>(ck.net.hidden_widths().size()));
  for (std::size_t width : ck.net.hidden_widths()) w.u32(static_cast<std::uint32_t>(width));
  w.str(to_string(ck.task));
  w.f64(ck.adam.beta1);
  w.f64(ck.adam.beta2);
  w.f64(ck.adam.epsilon);
  w.f64(ck.schedule.base_lr);
  w.f64(ck.schedule.decay);
  w.u32(ck.schedule.step_size);
  w.u64(ck.optimizer_step);
  w.u64(ck.iterations_per_epoch);
  w.f64(ck.margin);
  w.u64(ck.seed);
  w.u64(ck.iterations);
  w.u64(ck.batch_size);

  w.u64(ck.net.parameter_count());
  for (const Matrix& p : ck.net.parameters()) {
    for (Eigen::Index i = 0; i < p.size(); ++i) w.f64(p.data()[i]);
  }

  w.u32(static_cast<std::uint32_t>(ck.map.size()));
  for (const GarmentCluster& c : ck.map.clusters()) {
    w.str(c.label());
    w.f64(c.bandwidth());
    w.f64(c.threshold());
    w.f64(c.coverage());
    w.f64(c.centroid().x);
    w.f64(c.centroid().y);
    w.u64(c.points().size());
    for (const GSPoint& p : c.points()) {
      w.f64(p.x);
      w.f64(p.y);
    }
  }
  return w.bytes();
}

ModelCheckpoint deserialize(std::string_view bytes, const std::string& source) {
  detail::ByteReader r(bytes, source);
  if (bytes.size() < ModelCheckpoint::kMagic.size() || r.raw(ModelCheckpoint::kMagic.size()) != ModelCheckpoint::kMagic) {
    r.fail(0, "bad checkpoint magic");
  }
  const std::size_t version_at = r.offset();
  if (r.u32() != ModelCheckpoint::kVersion) r.fail(version_at, "unsupported checkpoint version");

  ModelCheckpoint ck;
  const std::uint32_t input_dim = r.u32();
  const std::size_t hidden_at = r.offset();
  const std::uint32_t hidden_count = r.u32();
  if (hidden_count > 64) r.fail(hidden_at, "implausible hidden layer count");
  std::vector<std::size_t> hidden;
  for (std::uint32_t i = 0; i < hidden_count; ++i) hidden.push_back(r.u32());
  const std::size_t task_at = r.offset();
  try {
    ck.task = parse_task(r.str(64));
  } catch (const ConfigError&) {
    r.fail(task_at, "unknown task tag");
  }
  ck.adam.beta1 = r.f64();
  ck.adam.beta2 = r.f64();
  ck.adam.epsilon = r.f64();
  ck.schedule.base_lr = r.f64();
  ck.schedule.decay = r.f64();
  ck.schedule.step_size = r.u32();
  ck.optimizer_step = r.u64();
  ck.iterations_per_epoch = r.u64();
  ck.margin = r.f64();
  ck.seed = r.u64();
  ck.iterations = r.u64();
  ck.batch_size = r.u64();

  // Rebuild the parameter shapes from the architecture header.
  std::vector<Matrix> params;
  std::size_t fan_in = input_dim;
  for (std::size_t layer = 0; layer <= hidden.size(); ++layer) {
    const std::size_t fan_out = layer < hidden.size() ? hidden[layer] : Network::kOutputDim;
    params.emplace_back(fan_out, fan_in);
    params.emplace_back(1, fan_out);
    if (layer < hidden.size()) params.emplace_back(1, 1);
    fan_in = fan_out;
  }
  std::size_t expected = 0;
  for (const Matrix& p : params) expected += static_cast<std::size_t>(p.size());
  const std::size_t count_at = r.offset();
  if (r.u64() != expected) r.fail(count_at, "parameter count does not match the declared layer widths");
  for (Matrix& p : params) {
    for (Eigen::Index i = 0; i < p.size(); ++i) p.data()[i] = r.f64();
  }
  try {
    ck.net = Network::from_parameters(input_dim, hidden, std::move(params));
  } catch (const InputError& e) {
    r.fail(count_at, e.what());
  }

  const std::uint32_t cluster_count = r.u32();
  std::vector<GarmentCluster> clusters;
  for (std::uint32_t c = 0; c < cluster_count; ++c) {
    const std::size_t cluster_at = r.offset();
    std::string label = r.str(4096);
    const double bandwidth = r.f64();
    const double threshold = r.f64();
    const double coverage = r.f64();
    const double cx = r.f64();
    const double cy = r.f64();
    const std::uint64_t m = r.u64();
    if (m > r.remaining() / 16) r.fail(cluster_at, "cluster point count exceeds file size");
    std::vector<GSPoint> points(m);
    for (GSPoint& p : points) {
      p.x = r.f64();
      p.y = r.f64();
    }
    try {
      clusters.push_back(GarmentCluster::restore(std::move(label), std::move(points), {cx, cy}, bandwidth,
                                                 threshold, coverage));
    } catch (const InputError& e) {
      r.fail(cluster_at, e.what());
    }
  }
  try {
    ck.map = SimilarityMap(ck.task, std::move(clusters));
  } catch (const ConfigError& e) {
    r.fail(r.offset(), e.what());
  }
  if (!r.done()) r.fail(r.offset(), "trailing bytes after checkpoint");
  return ck;
}

void save_checkpoint(const std::filesystem::path& path, const ModelCheckpoint& checkpoint) {
  detail::write_file(path, serialize(checkpoint));
}

ModelCheckpoint load_checkpoint(const std::filesystem::path& path) {
  return deserialize(detail::read_file(path), path.string());
}

}  // namespace garnet
