#pragma once

#include <string>
#include <vector>

#include <Eigen/Core>

#include "hyrf/camera.hpp"
#include "hyrf/geometry.hpp"
#include "hyrf/image.hpp"

namespace hyrf {

struct View {
    std::string name;
    Camera camera;
    Image image;
    bool test = false;
};

struct Dataset {
    std::vector<View> views;
    std::vector<Eigen::Vector3d> points;
    /// Per-point colors in [0, 1].
    std::vector<Eigen::Vector3d> colors;

    std::vector<const View*> train_views() const;
    std::vector<const View*> test_views() const;
};

/// Marks every `test_every`-th view (index 0, n, 2n, ...) as a test view;
/// 0 puts every view in the training split.
void assign_split(Dataset& d, int test_every);

enum class AabbSource { Cameras, Fixed, Percentile };

AabbSource aabb_source_from_string(const std::string& s);
std::string to_string(AabbSource s);

/// Scene box: min/max of camera centers, the fixed cube [-half, half]^3, or
/// the 1st/99th percentile of the initial points per axis.
Aabb scene_aabb(const Dataset& d, AabbSource src, double fixed_half = 1.3);

/// Radius of the camera rig: 1.1 x the largest distance of a camera center
/// from their mean. Used to scale the position learning rate.
double camera_extent(const std::vector<Camera>& cams);

}  // namespace hyrf
