#include <sstream>
#include <string>
#include <vector>

#include <pybind11/eigen.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "cli.hpp"
#include "hyrf/codec/bundle.hpp"
#include "hyrf/error.hpp"
#include "hyrf/geometry.hpp"
#include "hyrf/io/checkpoint.hpp"
#include "hyrf/io/synth.hpp"
#include "hyrf/metrics.hpp"
#include "hyrf/pipeline.hpp"

namespace py = pybind11;
using namespace hyrf;

namespace {

using Array = py::array_t<double, py::array::c_style | py::array::forcecast>;

Array to_numpy(const Image& img) {
    Array a({img.height, img.width, img.channels});
    std::copy(img.data.begin(), img.data.end(), a.mutable_data());
    return a;
}

Image from_numpy(const Array& a) {
    if (a.ndim() != 3) throw InvalidInput("expected an H x W x C array");
    Image img(static_cast<int>(a.shape(1)), static_cast<int>(a.shape(0)), static_cast<int>(a.shape(2)));
    std::copy(a.data(), a.data() + a.size(), img.data.begin());
    return img;
}

FrameResult render_view(const io::Checkpoint& ck, const Camera& cam, int threads, bool cull) {
    RenderOptions o;
    o.threads = threads;
    o.cull = cull;
    py::gil_scoped_release release;
    return render_frame(ck.model, cam, o);
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Hybrid radiance fields: rendering, metrics, codec and the command line";

    py::register_exception<InvalidInput>(m, "InvalidInput", PyExc_ValueError);
    py::register_exception<DataError>(m, "DataError", PyExc_IOError);
    py::register_exception<CorruptStream>(m, "CorruptStream", PyExc_ValueError);
    py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
    py::register_exception<DivergenceError>(m, "DivergenceError", PyExc_ArithmeticError);

    py::class_<Camera>(m, "Camera")
        .def_static("look_at", &Camera::look_at, py::arg("eye"), py::arg("target"), py::arg("up"),
                    py::arg("fov_x"), py::arg("width"), py::arg("height"), py::arg("near") = 0.2)
        .def_readonly("width", &Camera::width)
        .def_readonly("height", &Camera::height)
        .def_readonly("fx", &Camera::fx)
        .def_readonly("fy", &Camera::fy)
        .def_property_readonly("center", &Camera::center);

    py::class_<io::Checkpoint>(m, "Checkpoint")
        .def_static("load", &io::load_checkpoint, py::arg("path"))
        .def("save", [](const io::Checkpoint& ck, const std::string& p) { io::save_checkpoint(p, ck); })
        .def_readonly("iteration", &io::Checkpoint::iteration)
        .def_property_readonly("n_gaussians", [](const io::Checkpoint& ck) { return ck.model.gaussians.size(); })
        .def_property_readonly("camera_names",
                               [](const io::Checkpoint& ck) {
                                   std::vector<std::string> n;
                                   for (const auto& c : ck.cameras) n.push_back(c.name);
                                   return n;
                               })
        .def(
            "camera",
            [](const io::Checkpoint& ck, std::size_t i) {
                if (i >= ck.cameras.size()) throw py::index_error("camera index out of range");
                return ck.cameras[i].camera;
            },
            py::arg("index"))
        .def(
            "render",
            [](const io::Checkpoint& ck, const Camera& cam, int threads, bool cull) {
                return to_numpy(render_view(ck, cam, threads, cull).image);
            },
            py::arg("camera"), py::arg("threads") = 1, py::arg("cull") = true,
            "H x W x 3 float64 image in [0, 1]")
        .def(
            "transmittance",
            [](const io::Checkpoint& ck, const Camera& cam) {
                return to_numpy(render_view(ck, cam, 1, true).foreground.transmittance);
            },
            py::arg("camera"));

    m.def(
        "synth",
        [](std::uint64_t seed, int n_gaussians, int n_cameras, int size) {
            io::SynthSpec s;
            s.seed = seed;
            s.n_gaussians = n_gaussians;
            s.n_cameras = n_cameras;
            s.width = s.height = size;
            const io::SynthScene scene = io::synth_scene(s);
            io::Checkpoint ck;
            ck.model = scene.model;
            ck.cameras = io::camera_records(scene.data);
            py::list images;
            for (const auto& v : scene.data.views) images.append(to_numpy(v.image));
            return py::make_tuple(ck, images);
        },
        py::arg("seed") = 7, py::arg("n_gaussians") = 64, py::arg("n_cameras") = 8, py::arg("size") = 64,
        "Ground-truth checkpoint and its rendered views");

    m.def(
        "compress",
        [](const io::Checkpoint& ck, int stages, int codebook) {
            codec::BundleOptions o;
            o.rvq.stages = stages;
            o.rvq.codebook_size = codebook;
            const auto b = codec::compress_model(ck, o);
            return py::bytes(reinterpret_cast<const char*>(b.bytes.data()), b.bytes.size());
        },
        py::arg("checkpoint"), py::arg("stages") = 6, py::arg("codebook") = 64);
    m.def(
        "decompress",
        [](const py::bytes& b) {
            const std::string s = b;
            return codec::decompress_model(std::span(reinterpret_cast<const std::uint8_t*>(s.data()), s.size()));
        },
        py::arg("bundle"));

    m.def("psnr", [](const Array& a, const Array& b) { return psnr(from_numpy(a), from_numpy(b)); });
    m.def("ssim", [](const Array& a, const Array& b) { return ssim(from_numpy(a), from_numpy(b)); });
    m.def("contract", &contract, py::arg("point"));

    m.def(
        "run",
        [](std::vector<std::string> args) {
            args.insert(args.begin(), "hyrf");
            std::vector<const char*> argv;
            for (const auto& a : args) argv.push_back(a.c_str());
            std::ostringstream out, err;
            int code;
            {
                py::gil_scoped_release release;
                code = cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
            }
            return py::make_tuple(code, out.str(), err.str());
        },
        py::arg("args"), "Runs the command line; returns (exit code, stdout, stderr)");
}
