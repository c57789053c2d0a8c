#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "hyrf/dataset.hpp"
#include "hyrf/model.hpp"

namespace hyrf::io {

struct SynthSpec {
    std::uint64_t seed = 7;
    int n_gaussians = 64;
    int n_cameras = 8;
    int width = 64;
    int height = 64;
    double fov_x = 0.9;
    double orbit_radius = 2.6;
    /// Cameras fan out in azimuth around view 0 (degrees between neighbours).
    double azimuth_step_deg = 20.0;
    /// View 0 sits at this elevation, the others alternate `spread` below and above it.
    double elevation_deg = 20.0;
    double elevation_spread_deg = 12.0;
    /// Gaussian centers are uniform in a ball of this radius (0 puts them all at the origin).
    double scene_radius = 0.7;
    /// Gaussian colors are drawn from these, with a little jitter; empty uses a built-in set.
    std::vector<Eigen::Vector3d> palette;
    Eigen::Vector3d background{0.08, 0.10, 0.14};
    /// Std-dev of the noise added to the exported initial points.
    double point_jitter = 0.02;
    int test_every = 8;
    SceneClass scene_class = SceneClass::Synthetic;
};

struct SynthScene {
    Dataset data;
    HyrfModel model;
    /// OpenGL camera-to-world matrix of each view, as written to transforms.json.
    std::vector<Eigen::Matrix4d> c2w;
};

/// Known Gaussian scene with orbiting cameras. Ground-truth images are
/// rendered by the renderer from the ground-truth model. Camera matrices go
/// through the same conversion the transforms-json loader applies, so a
/// written-then-loaded dataset reproduces the images exactly.
SynthScene synth_scene(const SynthSpec& spec);

/// Writes transforms.json, images/r_XXX.npy (float64), points3d.ply and
/// gt.ckpt (ground-truth checkpoint) and synth.cfg (matching training
/// settings) into `dir`, creating it if needed.
void write_synth(const SynthScene& scene, const SynthSpec& spec, const std::string& dir);

}  // namespace hyrf::io
