#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "splitreloc/errors.hpp"
#include "splitreloc/executor.hpp"
#include "splitreloc/fusion.hpp"
#include "splitreloc/planner.hpp"
#include "splitreloc/sim.hpp"
#include "splitreloc/trajectory.hpp"
#include "splitreloc/wire.hpp"

namespace py = pybind11;
namespace sr = splitreloc;

namespace {

sr::Tensor tensor_from_array(
    const py::array_t<float, py::array::c_style | py::array::forcecast>& arr) {
  if (arr.ndim() < 1 || arr.ndim() > 4) {
    throw py::value_error("tensor rank must be 1..4");
  }
  sr::Shape shape;
  shape.rank = static_cast<uint32_t>(arr.ndim());
  for (uint32_t i = 0; i < shape.rank; ++i) {
    shape.dims[i] = static_cast<uint32_t>(arr.shape(i));
  }
  sr::Tensor t(shape);
  std::memcpy(t.data.data(), arr.data(), sizeof(float) * t.data.size());
  return t;
}

py::array_t<float> array_from_tensor(const sr::Tensor& t) {
  std::vector<py::ssize_t> dims;
  for (uint32_t i = 0; i < t.shape.rank; ++i) dims.push_back(t.shape.dims[i]);
  py::array_t<float> arr(dims);
  std::memcpy(arr.mutable_data(), t.data.data(), sizeof(float) * t.data.size());
  return arr;
}

sr::Frame frame_from_array(
    const py::array_t<uint8_t, py::array::c_style | py::array::forcecast>& arr) {
  if (arr.ndim() != 3 || arr.shape(2) != 3) {
    throw py::value_error("frame must be an (H, W, 3) uint8 array");
  }
  sr::Frame f;
  f.height = static_cast<uint32_t>(arr.shape(0));
  f.width = static_cast<uint32_t>(arr.shape(1));
  f.rgb.assign(arr.data(), arr.data() + arr.size());
  return f;
}

py::array_t<uint8_t> array_from_frame(const sr::Frame& f) {
  py::array_t<uint8_t> arr({static_cast<py::ssize_t>(f.height),
                            static_cast<py::ssize_t>(f.width), py::ssize_t(3)});
  std::memcpy(arr.mutable_data(), f.rgb.data(), f.rgb.size());
  return arr;
}

std::vector<uint8_t> bytes_to_vec(const py::bytes& b) {
  std::string s = b;
  return std::vector<uint8_t>(s.begin(), s.end());
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "split-inference offloading toolkit for DNN camera relocalization";

  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const sr::Error& e) {
      switch (e.code()) {
        case sr::Errc::invalid_argument:
        case sr::Errc::parse_error:
        case sr::Errc::validation_error:
        case sr::Errc::alignment_error:
          PyErr_SetString(PyExc_ValueError, e.what());
          break;
        default:
          PyErr_SetString(PyExc_RuntimeError, e.what());
      }
    }
  });

  // pose math
  py::class_<sr::Quaternion>(m, "Quaternion")
      .def(py::init<double, double, double, double>(), py::arg("w") = 1.0,
           py::arg("x") = 0.0, py::arg("y") = 0.0, py::arg("z") = 0.0)
      .def_readwrite("w", &sr::Quaternion::w)
      .def_readwrite("x", &sr::Quaternion::x)
      .def_readwrite("y", &sr::Quaternion::y)
      .def_readwrite("z", &sr::Quaternion::z)
      .def("__repr__", [](const sr::Quaternion& q) {
        return "Quaternion(" + std::to_string(q.w) + ", " + std::to_string(q.x) +
               ", " + std::to_string(q.y) + ", " + std::to_string(q.z) + ")";
      });

  py::class_<sr::Pose>(m, "Pose")
      .def(py::init([](std::array<double, 3> t, const sr::Quaternion& q) {
             return sr::Pose{{t[0], t[1], t[2]}, q};
           }),
           py::arg("t") = std::array<double, 3>{0, 0, 0},
           py::arg("q") = sr::Quaternion{})
      .def_property(
          "t",
          [](const sr::Pose& p) {
            return std::array<double, 3>{p.t.x, p.t.y, p.t.z};
          },
          [](sr::Pose& p, std::array<double, 3> t) { p.t = {t[0], t[1], t[2]}; })
      .def_readwrite("q", &sr::Pose::q);

  m.def("quat_log", [](const sr::Quaternion& q) {
    sr::LogQuat v = sr::quat_log(q);
    return std::array<double, 3>{v.x, v.y, v.z};
  });
  m.def("quat_exp", [](std::array<double, 3> v) {
    return sr::quat_exp(sr::LogQuat{v[0], v[1], v[2]});
  });
  m.def("translation_error", [](std::array<double, 3> a, std::array<double, 3> b) {
    return sr::translation_error({a[0], a[1], a[2]}, {b[0], b[1], b[2]});
  });
  m.def("rotation_error_deg", &sr::rotation_error_deg);
  m.def("fuse_pair", &sr::fuse_pair);
  m.def("parse_homogeneous_matrix",
        [](const std::string& text) { return sr::parse_homogeneous_matrix(text); });

  // trajectories
  py::class_<sr::TrajectorySample>(m, "TrajectorySample")
      .def(py::init([](double t, const sr::Pose& pose) {
             return sr::TrajectorySample{t, pose};
           }),
           py::arg("t"), py::arg("pose"))
      .def_readwrite("t", &sr::TrajectorySample::t)
      .def_readwrite("pose", &sr::TrajectorySample::pose);

  py::class_<sr::Trajectory>(m, "Trajectory")
      .def(py::init<>())
      .def_readwrite("samples", &sr::Trajectory::samples)
      .def("__len__", &sr::Trajectory::size);

  m.def("load_trajectory_csv", &sr::load_trajectory_csv);
  m.def("save_trajectory_csv", &sr::save_trajectory_csv);

  // network model
  py::class_<sr::LayerGraph>(m, "LayerGraph")
      .def_readonly("resolution", &sr::LayerGraph::resolution)
      .def_readonly("feature_dim", &sr::LayerGraph::feature_dim)
      .def_property_readonly("cut_names",
                             [](const sr::LayerGraph& g) {
                               std::vector<std::string> names;
                               for (const auto& c : g.cut_points) names.push_back(c.name);
                               return names;
                             })
      .def_property_readonly("layer_names",
                             [](const sr::LayerGraph& g) {
                               std::vector<std::string> names;
                               for (const auto& l : g.layers) names.push_back(l.name);
                               return names;
                             })
      .def("total_flops", &sr::LayerGraph::total_flops)
      .def("prefix_flops",
           [](const sr::LayerGraph& g, const std::string& cut) {
             return g.prefix_flops_at(g.cut_pos(cut));
           })
      .def("activation_shape",
           [](const sr::LayerGraph& g, const std::string& cut) {
             sr::Shape s = g.activation_shape_at(g.cut_pos(cut));
             std::vector<uint32_t> dims;
             for (uint32_t i = 0; i < s.rank; ++i) dims.push_back(s.dims[i]);
             return dims;
           });

  m.def("build_backbone", &sr::build_backbone, py::arg("input_resolution"),
        py::arg("feature_dim"));
  m.def("cut_payload_bytes", &sr::cut_payload_bytes);

  py::class_<sr::WeightSet>(m, "WeightSet")
      .def_readonly("seed", &sr::WeightSet::seed);
  m.def("init_weights", &sr::init_weights, py::arg("graph"), py::arg("seed"));

  m.def("synthetic_frame",
        [](uint32_t h, uint32_t w, uint64_t seed, uint64_t index) {
          return array_from_frame(sr::synthetic_frame(h, w, seed, index));
        },
        py::arg("height"), py::arg("width"), py::arg("seed"), py::arg("frame_index"));
  m.def("preprocess",
        [](const py::array_t<uint8_t, py::array::c_style | py::array::forcecast>& f,
           uint32_t res) {
          return array_from_tensor(sr::preprocess(frame_from_array(f), res));
        },
        py::arg("frame"), py::arg("res"));
  m.def("execute",
        [](const sr::LayerGraph& g, const sr::WeightSet& w,
           const py::array_t<float, py::array::c_style | py::array::forcecast>& x,
           const std::string& from_cut, const std::string& to_cut) {
          return array_from_tensor(sr::execute(g, w, tensor_from_array(x), from_cut, to_cut));
        },
        py::arg("graph"), py::arg("weights"), py::arg("input"), py::arg("from_cut"),
        py::arg("to_cut"));
  m.def("decode_pose",
        [](const py::array_t<float, py::array::c_style | py::array::forcecast>& h) {
          return sr::decode_pose(tensor_from_array(h));
        });

  // planner
  py::class_<sr::CostProfile>(m, "CostProfile")
      .def(py::init<>())
      .def_readwrite("c_client_s_per_gflop", &sr::CostProfile::c_client_s_per_gflop)
      .def_readwrite("c_server_s_per_gflop", &sr::CostProfile::c_server_s_per_gflop)
      .def_readwrite("bandwidth_bytes_per_s", &sr::CostProfile::bandwidth_bytes_per_s)
      .def_readwrite("rtt_overhead_s", &sr::CostProfile::rtt_overhead_s)
      .def_readwrite("preprocess_s", &sr::CostProfile::preprocess_s)
      .def_readwrite("response_bytes", &sr::CostProfile::response_bytes);

  py::class_<sr::SplitPlan>(m, "SplitPlan")
      .def_readonly("predicted", &sr::SplitPlan::predicted)
      .def_readonly("ranking", &sr::SplitPlan::ranking)
      .def_readonly("best_cut", &sr::SplitPlan::best_cut);

  py::class_<sr::CutMeasurement>(m, "CutMeasurement")
      .def(py::init([](const std::string& cut, double mean,
                       std::optional<double> single) {
             sr::CutMeasurement m2;
             m2.cut_name = cut;
             m2.mean_latency_s = mean;
             m2.single_frame_s = single;
             return m2;
           }),
           py::arg("cut_name"), py::arg("mean_latency_s"),
           py::arg("single_frame_s") = std::nullopt)
      .def_readwrite("cut_name", &sr::CutMeasurement::cut_name)
      .def_readwrite("mean_latency_s", &sr::CutMeasurement::mean_latency_s)
      .def_readwrite("single_frame_s", &sr::CutMeasurement::single_frame_s);

  py::class_<sr::CalibrationResult>(m, "CalibrationResult")
      .def_readonly("profile", &sr::CalibrationResult::profile)
      .def_readonly("residuals", &sr::CalibrationResult::residuals)
      .def_readonly("rss", &sr::CalibrationResult::rss)
      .def_readonly("spearman", &sr::CalibrationResult::spearman)
      .def_readonly("notes", &sr::CalibrationResult::notes);

  m.def("predict_latency", &sr::predict_latency);
  m.def("plan", &sr::plan);
  m.def("calibrate", &sr::calibrate, py::arg("graph"), py::arg("measurements"),
        py::arg("include_single_frames") = false);
  m.def("load_measurements_csv", &sr::load_measurements_csv);
  m.def("spearman_rho", &sr::spearman_rho);

  // pipeline simulation
  py::enum_<sr::DropPolicy>(m, "DropPolicy")
      .value("drop_if_busy", sr::DropPolicy::drop_if_busy)
      .value("block", sr::DropPolicy::block);

  py::enum_<sr::ServiceKind>(m, "ServiceKind")
      .value("constant", sr::ServiceKind::constant)
      .value("lognormal", sr::ServiceKind::lognormal);

  py::class_<sr::ServiceModel>(m, "ServiceModel")
      .def(py::init<>())
      .def_readwrite("kind", &sr::ServiceModel::kind)
      .def_readwrite("mean_s", &sr::ServiceModel::mean_s)
      .def_readwrite("sigma", &sr::ServiceModel::sigma)
      .def_readwrite("seed", &sr::ServiceModel::seed);

  py::class_<sr::SimScenario>(m, "SimScenario")
      .def(py::init<>())
      .def_readwrite("fps", &sr::SimScenario::fps)
      .def_readwrite("duration_s", &sr::SimScenario::duration_s)
      .def_readwrite("policy", &sr::SimScenario::policy)
      .def_readwrite("service", &sr::SimScenario::service)
      .def_readwrite("route", &sr::SimScenario::route);

  py::class_<sr::SimReport>(m, "SimReport")
      .def_readonly("frames_captured", &sr::SimReport::frames_captured)
      .def_readonly("poses_produced", &sr::SimReport::poses_produced)
      .def_readonly("frames_dropped", &sr::SimReport::frames_dropped)
      .def_readonly("pose_timestamps", &sr::SimReport::pose_timestamps)
      .def_readonly("mean_service_s", &sr::SimReport::mean_service_s)
      .def_readonly("median_service_s", &sr::SimReport::median_service_s)
      .def_readonly("covered_distance_m", &sr::SimReport::covered_distance_m);

  py::class_<sr::ReplayReport>(m, "ReplayReport")
      .def_readonly("frames_processed", &sr::ReplayReport::frames_processed)
      .def_readonly("covered_distance_m", &sr::ReplayReport::covered_distance_m)
      .def_readonly("per_frame_s", &sr::ReplayReport::per_frame_s)
      .def_readonly("wall_time_s", &sr::ReplayReport::wall_time_s);

  m.def("simulate_realtime", &sr::simulate_realtime);
  m.def("simulate_replay", &sr::simulate_replay, py::arg("frame_count"),
        py::arg("per_frame_s"), py::arg("wall_time_s"), py::arg("route"));
  m.def("covered_distance", &sr::covered_distance);

  // fusion study
  py::class_<sr::NoiseModel>(m, "NoiseModel")
      .def(py::init<>())
      .def_readwrite("sigma_m", &sr::NoiseModel::sigma_m)
      .def_readwrite("outlier_prob", &sr::NoiseModel::outlier_prob)
      .def_readwrite("outlier_scale", &sr::NoiseModel::outlier_scale)
      .def_readwrite("orientation_sigma_deg", &sr::NoiseModel::orientation_sigma_deg)
      .def_readwrite("seed", &sr::NoiseModel::seed);

  py::class_<sr::StreamSummary>(m, "StreamSummary")
      .def_readonly("mean", &sr::StreamSummary::mean)
      .def_readonly("median", &sr::StreamSummary::median)
      .def_readonly("variance", &sr::StreamSummary::variance);

  py::class_<sr::EvalResult>(m, "EvalResult")
      .def_readonly("losses", &sr::EvalResult::losses)
      .def_readonly("summary", &sr::EvalResult::summary);

  py::class_<sr::FusionStudyConfig>(m, "FusionStudyConfig")
      .def(py::init<>())
      .def_readwrite("radius_m", &sr::FusionStudyConfig::radius_m)
      .def_readwrite("speed_mps", &sr::FusionStudyConfig::speed_mps)
      .def_readwrite("fps", &sr::FusionStudyConfig::fps)
      .def_readwrite("duration_s", &sr::FusionStudyConfig::duration_s)
      .def_readwrite("gps", &sr::FusionStudyConfig::gps)
      .def_readwrite("dnn", &sr::FusionStudyConfig::dnn)
      .def_readwrite("gps_orientation_absent",
                     &sr::FusionStudyConfig::gps_orientation_absent)
      .def_readwrite("hist_bin_m", &sr::FusionStudyConfig::hist_bin_m);

  py::class_<sr::FusionReport>(m, "FusionReport")
      .def_readonly("gps_loss", &sr::FusionReport::gps_loss)
      .def_readonly("dnn_loss", &sr::FusionReport::dnn_loss)
      .def_readonly("fused_loss", &sr::FusionReport::fused_loss)
      .def_readonly("gps", &sr::FusionReport::gps)
      .def_readonly("dnn", &sr::FusionReport::dnn)
      .def_readonly("fused", &sr::FusionReport::fused);

  m.def("gen_trajectory", &sr::gen_trajectory, py::arg("radius_m"),
        py::arg("speed_mps"), py::arg("fps"), py::arg("duration_s"));
  m.def("corrupt", &sr::corrupt);
  m.def("fuse_streams", &sr::fuse_streams);
  m.def("evaluate", &sr::evaluate);
  m.def("run_fusion_study", &sr::run_fusion_study);

  // wire protocol
  py::enum_<sr::Status>(m, "Status")
      .value("ok", sr::Status::ok)
      .value("bad_cut", sr::Status::bad_cut)
      .value("shape_mismatch", sr::Status::shape_mismatch)
      .value("internal", sr::Status::internal);

  py::class_<sr::InferRequest>(m, "InferRequest")
      .def(py::init<>())
      .def_readwrite("request_id", &sr::InferRequest::request_id)
      .def_readwrite("cut_index", &sr::InferRequest::cut_index)
      .def_property(
          "tensor",
          [](const sr::InferRequest& r) {
            return array_from_tensor(sr::Tensor(r.shape, r.payload));
          },
          [](sr::InferRequest& r,
             const py::array_t<float, py::array::c_style | py::array::forcecast>& a) {
            sr::Tensor t = tensor_from_array(a);
            r.shape = t.shape;
            r.payload = std::move(t.data);
          });

  py::class_<sr::InferResponse>(m, "InferResponse")
      .def(py::init<>())
      .def_readwrite("request_id", &sr::InferResponse::request_id)
      .def_readwrite("status", &sr::InferResponse::status)
      .def_readwrite("pose", &sr::InferResponse::pose)
      .def_readwrite("server_compute_ns", &sr::InferResponse::server_compute_ns);

  m.def("encode_request", [](const sr::InferRequest& r) {
    auto v = sr::encode_request(r);
    return py::bytes(reinterpret_cast<const char*>(v.data()), v.size());
  });
  m.def("decode_request", [](const py::bytes& b) {
    auto v = bytes_to_vec(b);
    return sr::decode_request(v);
  });
  m.def("encode_response", [](const sr::InferResponse& r) {
    auto v = sr::encode_response(r);
    return py::bytes(reinterpret_cast<const char*>(v.data()), v.size());
  });
  m.def("decode_response", [](const py::bytes& b) {
    auto v = bytes_to_vec(b);
    return sr::decode_response(v);
  });

#ifdef VERSION_INFO
  m.attr("__version__") = VERSION_INFO;
#else
  m.attr("__version__") = "dev";
#endif
}
