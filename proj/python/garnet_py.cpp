#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

#include "cli.hpp"
#include "garnet/checkpoint.hpp"
#include "garnet/errors.hpp"
#include "garnet/pipeline.hpp"
#include "garnet/report.hpp"

namespace py = pybind11;
using namespace garnet;

namespace {

using FloatArray = py::array_t<float, py::array::c_style | py::array::forcecast>;
using DoubleArray = py::array_t<double, py::array::c_style | py::array::forcecast>;

std::vector<FeatureFrame> frames_from(const FloatArray& a) {
  if (a.ndim() != 2) throw InputError("frames must be a 2-D array (frames x dimension)");
  const auto rows = static_cast<std::size_t>(a.shape(0));
  const auto cols = static_cast<std::size_t>(a.shape(1));
  std::vector<FeatureFrame> out(rows);
  const float* data = a.data();
  for (std::size_t r = 0; r < rows; ++r) out[r].values.assign(data + r * cols, data + (r + 1) * cols);
  return out;
}

std::vector<GSPoint> points_from(const DoubleArray& a) {
  if (a.ndim() != 2 || a.shape(1) != 2) throw InputError("points must be an (n, 2) array");
  std::vector<GSPoint> out(static_cast<std::size_t>(a.shape(0)));
  const double* data = a.data();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = {data[2 * i], data[2 * i + 1]};
  return out;
}

py::array_t<double> points_to(const std::vector<GSPoint>& pts) {
  py::array_t<double> out({static_cast<py::ssize_t>(pts.size()), py::ssize_t{2}});
  auto v = out.mutable_unchecked<2>();
  for (std::size_t i = 0; i < pts.size(); ++i) {
    v(i, 0) = pts[i].x;
    v(i, 1) = pts[i].y;
  }
  return out;
}

py::object label_or_none(const SimilarityMap& map, ClusterId id) {
  if (!id) return py::none();
  return py::str(map.label(*id));
}

RunConfig make_config(Task task, std::uint64_t iterations, std::uint64_t seed, double coverage, double bandwidth,
                      std::size_t batch_size, double margin) {
  RunConfig cfg;
  cfg.train.task = task;
  cfg.train.iterations = iterations;
  cfg.train.seed = seed;
  cfg.train.batch_size = batch_size;
  cfg.train.margin = margin;
  cfg.coverage = coverage;
  cfg.bandwidth = bandwidth;
  cfg.validate();
  return cfg;
}

std::string loocv_json(const Dataset& ds, const RunConfig& cfg) {
  const LoocvModels models = train_loocv(ds, cfg);
  nlohmann::ordered_json j;
  for (VoteMode mode : {VoteMode::decision_point, VoteMode::similarity_point}) {
    ReportContext ctx;
    ctx.task = cfg.train.task;
    ctx.mode = mode;
    ctx.channel = ds.channel;
    ctx.coverage = cfg.coverage;
    ctx.bandwidth = cfg.bandwidth;
    ctx.decision = cfg.decision;
    j[std::string(to_string(mode))] =
        to_json(summarize(ctx, ds.categories(cfg.train.task), evaluate_loocv(models, mode, cfg.decision)));
  }
  return j.dump();
}

}  // namespace

PYBIND11_MODULE(_garnet, m) {
  m.doc() = "Similarity-map garment classification with early stopping";

  static py::exception<Error> base(m, "GarnetError", PyExc_RuntimeError);
  static py::exception<InputError> input(m, "InputError", base.ptr());
  static py::exception<ConfigError> config(m, "ConfigError", base.ptr());
  static py::exception<NumericError> numeric(m, "NumericError", base.ptr());
  static py::exception<ParseError> parse(m, "ParseError", base.ptr());
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const InputError& e) {
      py::set_error(input, e.what());
    } catch (const ConfigError& e) {
      py::set_error(config, e.what());
    } catch (const NumericError& e) {
      py::set_error(numeric, e.what());
    } catch (const ParseError& e) {
      py::set_error(parse, e.what());
    } catch (const Error& e) {
      py::set_error(base, e.what());
    }
  });

  py::enum_<Task>(m, "Task").value("shape", Task::shape).value("weight", Task::weight);
  py::enum_<VoteMode>(m, "VoteMode")
      .value("decision_point", VoteMode::decision_point)
      .value("similarity_point", VoteMode::similarity_point);

  py::class_<Dataset>(m, "Dataset")
      .def_readonly("shapes", &Dataset::shapes)
      .def_readonly("weights", &Dataset::weights)
      .def_readonly("dimension", &Dataset::dimension)
      .def_readonly("frames_per_sequence", &Dataset::frames_per_sequence)
      .def_readonly("sample_rate_hz", &Dataset::sample_rate_hz)
      .def("__len__", [](const Dataset& d) { return d.sequences.size(); })
      .def("frame_count", &Dataset::frame_count)
      .def("sequence", [](const Dataset& d, std::size_t i) {
        const VideoSequence& s = d.sequences.at(i);
        py::dict out;
        out["garment_id"] = s.garment_id;
        out["video"] = s.video;
        out["shape"] = s.shape;
        out["weight"] = s.weight;
        out["group"] = s.group;
        return out;
      })
      .def("frames", [](const Dataset& d, std::size_t i) {
        const auto& frames = d.sequences.at(i).frames;
        py::array_t<float> out({static_cast<py::ssize_t>(frames.size()), static_cast<py::ssize_t>(d.dimension)});
        float* dst = out.mutable_data();
        for (const auto& f : frames) dst = std::copy(f.values.begin(), f.values.end(), dst);
        return out;
      });

  m.def(
      "synth_generate",
      [](std::uint64_t seed, double noise) {
        return synth_generate(SynthSpec{}.with_noise(noise), derive_seed(seed, kSynthStream));
      },
      py::arg("seed") = 1, py::arg("noise") = 1.0,
      "Default synthetic dataset; seeded exactly like the command-line tool.");
  m.def("ingest", [](const std::string& path) { return ingest(path); }, py::arg("manifest"));
  m.def(
      "export_dataset",
      [](const Dataset& d, const std::string& dir) { return export_dataset(d, dir).string(); }, py::arg("dataset"),
      py::arg("directory"));
  m.def(
      "loocv_splits",
      [](const Dataset& d) {
        py::list out;
        for (const Fold& f : loocv_splits(d)) out.append(py::make_tuple(f.test_group, f.train, f.test));
        return out;
      },
      py::arg("dataset"), "List of (test_group, train_indices, test_indices).");

  py::class_<ModelCheckpoint>(m, "Model")
      .def_property_readonly("task", [](const ModelCheckpoint& c) { return c.task; })
      .def_property_readonly("input_dim", [](const ModelCheckpoint& c) { return c.net.input_dim(); })
      .def_property_readonly("labels",
                             [](const ModelCheckpoint& c) {
                               std::vector<std::string> out;
                               for (const auto& cl : c.map.clusters()) out.push_back(cl.label());
                               return out;
                             })
      .def_property_readonly("coverage",
                             [](const ModelCheckpoint& c) { return c.map.clusters().front().coverage(); })
      .def("embed",
           [](const ModelCheckpoint& c, const FloatArray& frames) {
             return points_to(embed_frames(c.net, frames_from(frames)));
           })
      .def(
          "classify", [](const ModelCheckpoint& c, double x, double y) { return label_or_none(c.map, classify_point(c.map, {x, y})); },
          py::arg("x"), py::arg("y"))
      .def(
          "stream",
          [](const ModelCheckpoint& c, const FloatArray& frames, const std::string& mode, double threshold,
             std::size_t min_frames) {
            const auto r = evaluate_sequence(c.net, c.map, frames_from(frames), parse_vote_mode(mode),
                                             {threshold, min_frames});
            py::dict out;
            out["prediction"] = label_or_none(c.map, r.prediction);
            out["stop_frame"] = r.stop ? py::object(py::int_(r.stop->frame)) : py::object(py::none());
            out["frames_used"] = r.state.frame_count();
            py::list votes;
            for (const auto& v : r.state.votes()) votes.append(label_or_none(c.map, v));
            out["votes"] = votes;
            out["decision_points"] = points_to(r.state.decision_points());
            return out;
          },
          py::arg("frames"), py::arg("mode") = "dp", py::arg("threshold") = 0.8, py::arg("min_frames") = 5)
      .def("refit", [](ModelCheckpoint& c, double coverage) { c.map.fit_regions(coverage); }, py::arg("coverage"))
      .def("points",
           [](const ModelCheckpoint& c) {
             py::dict out;
             for (const auto& cl : c.map.clusters()) out[py::str(cl.label())] = points_to(cl.points());
             return out;
           })
      .def("save", [](const ModelCheckpoint& c, const std::string& path) { save_checkpoint(path, c); })
      .def("to_bytes", [](const ModelCheckpoint& c) { return py::bytes(serialize(c)); })
      .def_static("load", [](const std::string& path) { return load_checkpoint(path); })
      .def_static("from_bytes", [](const py::bytes& b) { return deserialize(std::string(b)); });

  m.def(
      "fit_model",
      [](const Dataset& d, Task task, std::uint64_t iterations, std::uint64_t seed,
         std::optional<std::vector<std::size_t>> train, double coverage, double bandwidth, std::size_t batch_size,
         double margin) {
        const RunConfig cfg = make_config(task, iterations, seed, coverage, bandwidth, batch_size, margin);
        std::vector<std::size_t> idx;
        if (train) {
          idx = *train;
        } else {
          for (std::size_t i = 0; i < d.sequences.size(); ++i) idx.push_back(i);
        }
        py::gil_scoped_release release;
        return fit_model(d, idx, cfg);
      },
      py::arg("dataset"), py::arg("task") = Task::shape, py::arg("iterations") = 20000, py::arg("seed") = 1,
      py::arg("train") = py::none(), py::arg("coverage") = 0.95, py::arg("bandwidth") = 0.0,
      py::arg("batch_size") = 32, py::arg("margin") = 1.0);

  m.def(
      "_evaluate_loocv",
      [](const Dataset& d, Task task, std::uint64_t iterations, std::uint64_t seed, double coverage, double bandwidth,
         std::size_t batch_size, double margin) {
        const RunConfig cfg = make_config(task, iterations, seed, coverage, bandwidth, batch_size, margin);
        py::gil_scoped_release release;
        return loocv_json(d, cfg);
      },
      py::arg("dataset"), py::arg("task"), py::arg("iterations"), py::arg("seed"), py::arg("coverage"),
      py::arg("bandwidth"), py::arg("batch_size"), py::arg("margin"));

  m.def(
      "kde_density",
      [](const DoubleArray& points, double bandwidth, double x, double y) {
        return kde_density(points_from(points), bandwidth, {x, y});
      },
      py::arg("points"), py::arg("bandwidth"), py::arg("x"), py::arg("y"));
  m.def(
      "scott_bandwidth", [](const DoubleArray& points) { return scott_bandwidth(points_from(points)); },
      py::arg("points"));
  m.def("triplet_loss", &triplet_loss, py::arg("pp"), py::arg("np"), py::arg("margin"));

  m.def(
      "run_cli",
      [](const std::vector<std::string>& args) {
        std::ostringstream out, err;
        int code = 0;
        {
          py::gil_scoped_release release;
          code = cli::run(args, out, err);
        }
        return py::make_tuple(code, out.str(), err.str());
      },
      py::arg("args"), "Runs the command-line tool in-process; returns (exit_code, stdout, stderr).");
}
