#include "morphgrasp/obb.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <array>
#include <cmath>
#include <limits>

#include "morphgrasp/errors.hpp"

namespace mg {

namespace {

// Extents along the columns of R; returns the volume.
double box_volume(const Mat3& r, const std::vector<Vec3>& pts, Vec3* lo_out = nullptr,
                  Vec3* hi_out = nullptr) {
    Vec3 lo{std::numeric_limits<double>::infinity(), std::numeric_limits<double>::infinity(),
            std::numeric_limits<double>::infinity()};
    Vec3 hi = lo * -1.0;
    Mat3 rt = r.transposed();
    for (const Vec3& p : pts) {
        Vec3 local = rt * p;
        lo.x = std::min(lo.x, local.x);
        lo.y = std::min(lo.y, local.y);
        lo.z = std::min(lo.z, local.z);
        hi.x = std::max(hi.x, local.x);
        hi.y = std::max(hi.y, local.y);
        hi.z = std::max(hi.z, local.z);
    }
    if (lo_out) *lo_out = lo;
    if (hi_out) *hi_out = hi;
    Vec3 e = hi - lo;
    return e.x * e.y * e.z;
}

Mat3 pca_axes(const std::vector<Vec3>& pts) {
    Vec3 mean{0, 0, 0};
    for (const Vec3& p : pts) mean = mean + p;
    mean = mean * (1.0 / static_cast<double>(pts.size()));
    Eigen::Matrix3d cov = Eigen::Matrix3d::Zero();
    for (const Vec3& p : pts) {
        Eigen::Vector3d d(p.x - mean.x, p.y - mean.y, p.z - mean.z);
        cov += d * d.transpose();
    }
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> es(cov);
    Eigen::Matrix3d axes = es.eigenvectors();
    if (axes.determinant() < 0) axes.col(2) *= -1.0;
    Mat3 r;
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) r(i, j) = axes(i, j);
    return r;
}

Mat3 refine(Mat3 r, const std::vector<Vec3>& pts) {
    const Vec3 axes[3] = {{1, 0, 0}, {0, 1, 0}, {0, 0, 1}};
    double vol = box_volume(r, pts);
    double step = 8.0 * M_PI / 180.0;
    const double min_step = 0.125 * M_PI / 180.0;
    while (step >= min_step) {
        bool improved = false;
        for (int axis = 0; axis < 3; ++axis) {
            for (double sign : {1.0, -1.0}) {
                // rotate in the box frame so each move tilts one box axis pair
                Mat3 cand = r * rotation_axis_angle(axes[axis], sign * step);
                double v = box_volume(cand, pts);
                if (v < vol * (1.0 - 1e-12)) {
                    r = cand;
                    vol = v;
                    improved = true;
                }
            }
        }
        if (!improved) step *= 0.5;
    }
    return r;
}

OrientedBox finalize(const Mat3& r, const std::vector<Vec3>& pts) {
    Vec3 lo, hi;
    box_volume(r, pts, &lo, &hi);
    Vec3 ext = hi - lo;
    Vec3 mid = (lo + hi) * 0.5;

    std::array<int, 3> order = {0, 1, 2};
    double e[3] = {ext.x, ext.y, ext.z};
    std::sort(order.begin(), order.end(), [&](int a, int b) { return e[a] > e[b]; });

    OrientedBox box;
    double sorted_e[3];
    double sorted_mid[3];
    double mid_arr[3] = {mid.x, mid.y, mid.z};
    for (int c = 0; c < 3; ++c) {
        int src = order[c];
        box.rotation.set_col(c, r.col(src));
        sorted_e[c] = e[src];
        sorted_mid[c] = mid_arr[src];
    }
    if (box.rotation.det() < 0) {
        box.rotation.set_col(2, -box.rotation.col(2));
        sorted_mid[2] *= -1.0;
    }
    box.extents = {sorted_e[0], sorted_e[1], sorted_e[2]};
    box.center = box.rotation * Vec3{sorted_mid[0], sorted_mid[1], sorted_mid[2]};
    return box;
}

}  // namespace

OrientedBox obb_of_points(const std::vector<Vec3>& points) {
    if (points.empty()) throw EmptyMesh("no points for bounding box");
    Mat3 identity;
    Mat3 best = refine(identity, points);
    double best_vol = box_volume(best, points);
    if (points.size() >= 2) {
        Mat3 from_pca = refine(pca_axes(points), points);
        double v = box_volume(from_pca, points);
        if (v < best_vol) best = from_pca;
    }
    return finalize(best, points);
}

OrientedBox min_volume_obb(const TriMesh& mesh) {
    if (mesh.vertices.empty()) throw EmptyMesh("cannot bound an empty mesh");
    return obb_of_points(mesh.vertices);
}

std::pair<Vec3, Vec3> link_summary(const TriMesh& mesh, const Transform& world_transform) {
    if (mesh.vertices.empty()) throw EmptyMesh("cannot summarize an empty mesh");
    std::vector<Vec3> pts;
    pts.reserve(mesh.vertices.size());
    for (const Vec3& v : mesh.vertices) pts.push_back(world_transform.apply(v));
    OrientedBox box = obb_of_points(pts);
    return {box.center, box.extents};
}

}  // namespace mg
