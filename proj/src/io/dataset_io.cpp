#include "hyrf/io/dataset_io.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <random>
#include <sstream>

#include <Eigen/Geometry>
#include <json.hpp>

#include "hyrf/error.hpp"
#include "hyrf/io/image_io.hpp"
#include "hyrf/io/ply.hpp"

namespace hyrf::io {

namespace fs = std::filesystem;
using nlohmann::json;

DatasetFormat dataset_format_from_string(const std::string& s) {
    if (s == "auto") return DatasetFormat::Auto;
    if (s == "transforms" || s == "transforms-json") return DatasetFormat::TransformsJson;
    if (s == "colmap" || s == "colmap-text") return DatasetFormat::ColmapText;
    throw InvalidInput("unknown dataset format '" + s + "' (expected auto|transforms|colmap)");
}

double focal_from_fov(double fov, int pixels) { return 0.5 * pixels / std::tan(0.5 * fov); }

Camera camera_from_opengl_c2w(const Eigen::Matrix4d& c2w, double fx, double fy, int width,
                              int height, double near) {
    Eigen::Matrix3d r = c2w.topLeftCorner<3, 3>();
    r.col(1) = -r.col(1);
    r.col(2) = -r.col(2);
    Camera cam;
    cam.rotation = r.transpose();
    cam.translation = -cam.rotation * c2w.topRightCorner<3, 1>();
    cam.fx = fx;
    cam.fy = fy;
    cam.cx = 0.5 * width;
    cam.cy = 0.5 * height;
    cam.width = width;
    cam.height = height;
    cam.near = near;
    return cam;
}

Eigen::Matrix4d opengl_c2w(const Camera& cam) {
    Eigen::Matrix3d r = cam.rotation.transpose();
    r.col(1) = -r.col(1);
    r.col(2) = -r.col(2);
    Eigen::Matrix4d m = Eigen::Matrix4d::Identity();
    m.topLeftCorner<3, 3>() = r;
    m.topRightCorner<3, 1>() = cam.center();
    return m;
}

namespace {

json read_json(const fs::path& p) {
    std::ifstream in(p);
    if (!in) throw DataError("cannot open '" + p.string() + "'");
    try {
        return json::parse(in);
    } catch (const json::parse_error& e) {
        throw DataError(p.string() + ": " + e.what());
    }
}

fs::path resolve_image(const fs::path& root, const std::string& rel, const fs::path& origin) {
    fs::path p = root / rel;
    if (fs::exists(p)) return p;
    for (const char* ext : {".png", ".npy"}) {
        fs::path q = p;
        q += ext;
        if (fs::exists(q)) return q;
    }
    throw DataError(origin.string() + ": image '" + rel + "' not found");
}

void random_points(Dataset& d, const LoadOptions& opts) {
    const Aabb box = scene_aabb(d, AabbSource::Cameras);
    std::mt19937_64 rng(opts.seed);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (std::size_t i = 0; i < opts.random_points; ++i) {
        Eigen::Vector3d p, c;
        for (int k = 0; k < 3; ++k) {
            p[k] = box.min_corner[k] + u(rng) * (box.max_corner[k] - box.min_corner[k]);
        }
        for (int k = 0; k < 3; ++k) c[k] = u(rng);
        d.points.push_back(p);
        d.colors.push_back(c);
    }
}

void load_frames(const fs::path& root, const fs::path& file, bool test, const LoadOptions& opts,
                 Dataset& d) {
    const json j = read_json(file);
    try {
        const auto& frames = j.at("frames");
        if (!frames.is_array() || frames.empty()) {
            throw DataError(file.string() + ": 'frames' must be a non-empty array");
        }
        for (std::size_t f = 0; f < frames.size(); ++f) {
            const auto& fr = frames[f];
            View v;
            const std::string rel = fr.at("file_path").get<std::string>();
            const fs::path img_path = resolve_image(root, rel, file);
            v.name = fs::path(rel).stem().string();
            v.image = read_image(img_path.string());
            if (v.image.channels != 3) {
                throw DataError(img_path.string() + ": expected a 3-channel image");
            }
            const int w = v.image.width, h = v.image.height;
            if ((j.contains("w") && j["w"].get<int>() != w) ||
                (j.contains("h") && j["h"].get<int>() != h)) {
                throw DataError(img_path.string() + ": image size differs from the declared w/h");
            }
            double fx, fy;
            if (j.contains("fl_x")) {
                fx = j["fl_x"].get<double>();
                fy = j.contains("fl_y") ? j["fl_y"].get<double>() : fx;
            } else {
                fx = focal_from_fov(j.at("camera_angle_x").get<double>(), w);
                fy = j.contains("camera_angle_y") ? focal_from_fov(j["camera_angle_y"].get<double>(), h)
                                                  : fx;
            }
            const auto& m = fr.at("transform_matrix");
            if (!m.is_array() || m.size() < 3) {
                throw DataError(file.string() + ": frame " + std::to_string(f) +
                                " has a malformed transform_matrix");
            }
            Eigen::Matrix4d c2w = Eigen::Matrix4d::Identity();
            for (int r = 0; r < static_cast<int>(std::min<std::size_t>(4, m.size())); ++r) {
                for (int c = 0; c < 4; ++c) c2w(r, c) = m.at(r).at(c).get<double>();
            }
            v.camera = camera_from_opengl_c2w(c2w, fx, fy, w, h, opts.near);
            if (j.contains("cx")) v.camera.cx = j["cx"].get<double>();
            if (j.contains("cy")) v.camera.cy = j["cy"].get<double>();
            try {
                v.camera.validate();
            } catch (const InvalidInput& e) {
                throw DataError(file.string() + ": frame " + std::to_string(f) + ": " + e.what());
            }
            v.test = test;
            d.views.push_back(std::move(v));
        }
    } catch (const json::exception& e) {
        throw DataError(file.string() + ": " + e.what());
    }
}

Dataset load_transforms(const fs::path& root, const LoadOptions& opts) {
    Dataset d;
    if (fs::exists(root / "transforms_train.json")) {
        load_frames(root, root / "transforms_train.json", false, opts, d);
        if (fs::exists(root / "transforms_test.json")) {
            load_frames(root, root / "transforms_test.json", true, opts, d);
        }
    } else {
        load_frames(root, root / "transforms.json", false, opts, d);
        assign_split(d, opts.test_every);
    }
    fs::path ply;
    for (const char* name : {"points3d.ply", "points3D.ply"}) {
        if (fs::exists(root / name)) ply = root / name;
    }
    if (!ply.empty()) {
        PointCloud pc = read_ply(ply.string());
        d.points = std::move(pc.positions);
        d.colors = std::move(pc.colors);
    }
    if (d.points.empty()) random_points(d, opts);
    return d;
}

// Non-comment lines of a COLMAP text file with their 1-based line numbers.
// Blank lines are kept because images.txt uses them for empty point lists.
std::vector<std::pair<int, std::string>> colmap_lines(const fs::path& p) {
    std::ifstream in(p);
    if (!in) throw DataError("cannot open '" + p.string() + "'");
    std::vector<std::pair<int, std::string>> out;
    std::string line;
    int no = 0;
    while (std::getline(in, line)) {
        ++no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (!line.empty() && line[0] == '#') continue;
        out.emplace_back(no, line);
    }
    return out;
}

bool blank(const std::string& s) { return s.find_first_not_of(" \t") == std::string::npos; }

Dataset load_colmap(const fs::path& root, const fs::path& sparse, const LoadOptions& opts) {
    struct Intrinsics {
        int w, h;
        double fx, fy, cx, cy;
    };
    std::map<long, Intrinsics> cams;
    const fs::path cam_file = sparse / "cameras.txt";
    for (const auto& [no, line] : colmap_lines(cam_file)) {
        if (blank(line)) continue;
        std::istringstream is(line);
        long id;
        std::string model;
        Intrinsics k{};
        if (!(is >> id >> model >> k.w >> k.h)) {
            throw DataError(cam_file.string() + ":" + std::to_string(no) + ": malformed camera line");
        }
        if (model == "PINHOLE") {
            is >> k.fx >> k.fy >> k.cx >> k.cy;
        } else if (model == "SIMPLE_PINHOLE") {
            is >> k.fx >> k.cx >> k.cy;
            k.fy = k.fx;
        } else {
            throw DataError(cam_file.string() + ":" + std::to_string(no) + ": camera model '" +
                            model + "' is not supported (PINHOLE or SIMPLE_PINHOLE)");
        }
        if (!is) {
            throw DataError(cam_file.string() + ":" + std::to_string(no) + ": missing parameters");
        }
        cams[id] = k;
    }

    Dataset d;
    const fs::path img_file = sparse / "images.txt";
    const auto lines = colmap_lines(img_file);
    for (std::size_t i = 0; i < lines.size(); ++i) {
        const auto& [no, line] = lines[i];
        if (blank(line)) continue;
        std::istringstream is(line);
        long id, cam_id;
        double qw, qx, qy, qz, tx, ty, tz;
        std::string name;
        if (!(is >> id >> qw >> qx >> qy >> qz >> tx >> ty >> tz >> cam_id >> name)) {
            throw DataError(img_file.string() + ":" + std::to_string(no) + ": malformed image line");
        }
        ++i;  // the following line lists 2-D points
        auto it = cams.find(cam_id);
        if (it == cams.end()) {
            throw DataError(img_file.string() + ":" + std::to_string(no) + ": unknown camera id " +
                            std::to_string(cam_id));
        }
        const Intrinsics& k = it->second;
        View v;
        v.name = name;
        const Eigen::Quaterniond q(qw, qx, qy, qz);
        if (q.norm() < 1e-12) {
            throw DataError(img_file.string() + ":" + std::to_string(no) + ": zero quaternion");
        }
        v.camera.rotation = q.normalized().toRotationMatrix();
        v.camera.translation = Eigen::Vector3d(tx, ty, tz);
        v.camera.fx = k.fx;
        v.camera.fy = k.fy;
        v.camera.cx = k.cx;
        v.camera.cy = k.cy;
        v.camera.width = k.w;
        v.camera.height = k.h;
        v.camera.near = opts.near;
        const fs::path img_path = root / "images" / name;
        if (!fs::exists(img_path)) {
            throw DataError(img_file.string() + ":" + std::to_string(no) + ": image '" +
                            img_path.string() + "' not found");
        }
        v.image = read_image(img_path.string());
        if (v.image.width != k.w || v.image.height != k.h) {
            throw DataError(img_path.string() + ": size " + std::to_string(v.image.width) + "x" +
                            std::to_string(v.image.height) + " differs from camera " +
                            std::to_string(k.w) + "x" + std::to_string(k.h));
        }
        d.views.push_back(std::move(v));
    }
    if (d.views.empty()) throw DataError(img_file.string() + ": no images");
    // COLMAP order is arbitrary; sort by name for a stable split.
    std::stable_sort(d.views.begin(), d.views.end(),
                     [](const View& a, const View& b) { return a.name < b.name; });
    assign_split(d, opts.test_every);

    const fs::path pts_file = sparse / "points3D.txt";
    if (fs::exists(pts_file)) {
        for (const auto& [no, line] : colmap_lines(pts_file)) {
            if (blank(line)) continue;
            std::istringstream is(line);
            long id;
            double x, y, z, r, g, b;
            if (!(is >> id >> x >> y >> z >> r >> g >> b)) {
                throw DataError(pts_file.string() + ":" + std::to_string(no) + ": malformed point line");
            }
            d.points.emplace_back(x, y, z);
            d.colors.push_back(Eigen::Vector3d(r, g, b) / 255.0);
        }
    }
    if (d.points.empty()) random_points(d, opts);
    return d;
}

}  // namespace

Dataset load_dataset(const std::string& root_str, const LoadOptions& opts) {
    const fs::path root(root_str);
    if (!fs::is_directory(root)) throw DataError("dataset directory '" + root_str + "' does not exist");

    fs::path sparse;
    for (const fs::path& cand : {root / "sparse" / "0", root / "sparse", root}) {
        if (fs::exists(cand / "cameras.txt") && fs::exists(cand / "images.txt")) {
            sparse = cand;
            break;
        }
    }
    const bool has_json =
        fs::exists(root / "transforms.json") || fs::exists(root / "transforms_train.json");

    DatasetFormat fmt = opts.format;
    if (fmt == DatasetFormat::Auto) {
        if (has_json) {
            fmt = DatasetFormat::TransformsJson;
        } else if (!sparse.empty()) {
            fmt = DatasetFormat::ColmapText;
        } else {
            throw DataError("'" + root_str +
                            "' holds no recognized dataset: expected transforms.json (or "
                            "transforms_train.json) or cameras.txt + images.txt (optionally under "
                            "sparse/0/)");
        }
    }
    if (fmt == DatasetFormat::TransformsJson) {
        if (!has_json) throw DataError("'" + root_str + "': transforms.json not found");
        return load_transforms(root, opts);
    }
    if (sparse.empty()) throw DataError("'" + root_str + "': cameras.txt / images.txt not found");
    return load_colmap(root, sparse, opts);
}

}  // namespace hyrf::io
