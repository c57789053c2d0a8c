#include "hyrf/dataset.hpp"

#include <algorithm>
#include <cmath>

#include "hyrf/error.hpp"

namespace hyrf {

std::vector<const View*> Dataset::train_views() const {
    std::vector<const View*> out;
    for (const auto& v : views) {
        if (!v.test) out.push_back(&v);
    }
    return out;
}

std::vector<const View*> Dataset::test_views() const {
    std::vector<const View*> out;
    for (const auto& v : views) {
        if (v.test) out.push_back(&v);
    }
    return out;
}

void assign_split(Dataset& d, int test_every) {
    if (test_every < 0) throw InvalidInput("test_every must be >= 0");
    for (std::size_t i = 0; i < d.views.size(); ++i) {
        d.views[i].test = test_every > 0 && i % std::size_t(test_every) == 0;
    }
}

AabbSource aabb_source_from_string(const std::string& s) {
    if (s == "cameras") return AabbSource::Cameras;
    if (s == "fixed") return AabbSource::Fixed;
    if (s == "percentile") return AabbSource::Percentile;
    throw InvalidInput("unknown aabb source '" + s + "' (expected cameras|fixed|percentile)");
}

std::string to_string(AabbSource s) {
    switch (s) {
        case AabbSource::Cameras: return "cameras";
        case AabbSource::Fixed: return "fixed";
        case AabbSource::Percentile: return "percentile";
    }
    return "unknown";
}

Aabb scene_aabb(const Dataset& d, AabbSource src, double fixed_half) {
    Aabb box;
    switch (src) {
        case AabbSource::Fixed:
            if (!(fixed_half > 0.0)) throw InvalidInput("fixed AABB half-size must be positive");
            box.min_corner = Eigen::Vector3d::Constant(-fixed_half);
            box.max_corner = Eigen::Vector3d::Constant(fixed_half);
            break;
        case AabbSource::Cameras: {
            if (d.views.empty()) throw DataError("camera AABB needs at least one camera");
            box.min_corner = box.max_corner = d.views.front().camera.center();
            for (const auto& v : d.views) {
                const Eigen::Vector3d c = v.camera.center();
                box.min_corner = box.min_corner.cwiseMin(c);
                box.max_corner = box.max_corner.cwiseMax(c);
            }
            // A single camera or a planar rig leaves flat axes; widen them.
            const double span = (box.max_corner - box.min_corner).maxCoeff();
            const double floor_half = span > 0.0 ? 0.05 * span : std::max(1.0, box.min_corner.norm());
            for (int k = 0; k < 3; ++k) {
                const double mid = 0.5 * (box.min_corner[k] + box.max_corner[k]);
                const double half = std::max(0.5 * (box.max_corner[k] - box.min_corner[k]), floor_half);
                box.min_corner[k] = mid - half;
                box.max_corner[k] = mid + half;
            }
            break;
        }
        case AabbSource::Percentile: {
            if (d.points.empty()) throw DataError("percentile AABB needs initial points");
            const std::size_t n = d.points.size();
            std::vector<double> axis(n);
            for (int k = 0; k < 3; ++k) {
                for (std::size_t i = 0; i < n; ++i) axis[i] = d.points[i][k];
                std::sort(axis.begin(), axis.end());
                const auto lo = static_cast<std::size_t>(std::floor(0.01 * double(n - 1)));
                const auto hi = static_cast<std::size_t>(std::ceil(0.99 * double(n - 1)));
                box.min_corner[k] = axis[lo];
                box.max_corner[k] = axis[hi];
            }
            break;
        }
    }
    box.validate();
    return box;
}

double camera_extent(const std::vector<Camera>& cams) {
    if (cams.empty()) return 1.0;
    Eigen::Vector3d mean = Eigen::Vector3d::Zero();
    for (const auto& c : cams) mean += c.center();
    mean /= double(cams.size());
    double r = 0.0;
    for (const auto& c : cams) r = std::max(r, (c.center() - mean).norm());
    return r > 0.0 ? 1.1 * r : 1.0;
}

}  // namespace hyrf
