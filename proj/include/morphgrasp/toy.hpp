#pragma once

#include <cstdint>
#include <string>

#include "morphgrasp/dataset.hpp"

namespace mg {

struct ToyParams {
    int object_points = 256;    // samples per object cloud
    int gripper_points = 128;   // samples per gripper cloud
    int grasps_per_pair = 4;    // grasp records per gripper-object pairing
    int knn = 8;                // neighbor count stored in cloud caches
    bool grasps = true;         // emit grasp files (off = assets only)
    bool extra_grippers = false;  // add three more hand designs (2-5 fingers)
    bool canonical_grasps = false;  // shared per-index approach directions so
                                    // contact patterns depend only on the hand
};

// Writes a synthetic desk-scale dataset under `dir`: articulated toy grippers
// (three by default, six with extra_grippers), three primitive objects
// (sphere, box, cylinder), cloud/morphology caches under dir/cache, and grasp
// records produced by seeding a pose around the object and fitting the
// keypoints to nearby surface points with inverse kinematics. Deterministic
// per seed, byte for byte.
DatasetManifest make_toy_dataset(const std::string& dir, std::uint64_t seed,
                                 const ToyParams& params = {});

}  // namespace mg
