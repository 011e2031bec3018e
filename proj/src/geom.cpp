#include "morphgrasp/geom.hpp"

namespace mg {

Mat3 rotation_x(double a) {
    double c = std::cos(a), s = std::sin(a);
    Mat3 r;
    r.m = {1, 0, 0, 0, c, -s, 0, s, c};
    return r;
}

Mat3 rotation_y(double a) {
    double c = std::cos(a), s = std::sin(a);
    Mat3 r;
    r.m = {c, 0, s, 0, 1, 0, -s, 0, c};
    return r;
}

Mat3 rotation_z(double a) {
    double c = std::cos(a), s = std::sin(a);
    Mat3 r;
    r.m = {c, -s, 0, s, c, 0, 0, 0, 1};
    return r;
}

Mat3 rotation_rpy(double roll, double pitch, double yaw) {
    return rotation_z(yaw) * rotation_y(pitch) * rotation_x(roll);
}

Mat3 rotation_axis_angle(const Vec3& axis, double angle) {
    double n = axis.norm();
    if (n == 0.0) return Mat3::identity();
    Vec3 u = axis * (1.0 / n);
    double c = std::cos(angle), s = std::sin(angle), t = 1.0 - c;
    Mat3 r;
    r.m = {c + u.x * u.x * t,       u.x * u.y * t - u.z * s, u.x * u.z * t + u.y * s,
           u.y * u.x * t + u.z * s, c + u.y * u.y * t,       u.y * u.z * t - u.x * s,
           u.z * u.x * t - u.y * s, u.z * u.y * t + u.x * s, c + u.z * u.z * t};
    return r;
}

Quat Quat::normalized() const {
    double n = norm();
    if (n == 0.0) return Quat{};
    return {w / n, x / n, y / n, z / n};
}

Mat3 Quat::to_matrix() const {
    Quat q = normalized();
    Mat3 r;
    r.m = {1 - 2 * (q.y * q.y + q.z * q.z), 2 * (q.x * q.y - q.z * q.w),
           2 * (q.x * q.z + q.y * q.w),     2 * (q.x * q.y + q.z * q.w),
           1 - 2 * (q.x * q.x + q.z * q.z), 2 * (q.y * q.z - q.x * q.w),
           2 * (q.x * q.z - q.y * q.w),     2 * (q.y * q.z + q.x * q.w),
           1 - 2 * (q.x * q.x + q.y * q.y)};
    return r;
}

Quat Quat::operator*(const Quat& o) const {
    return {w * o.w - x * o.x - y * o.y - z * o.z,
            w * o.x + x * o.w + y * o.z - z * o.y,
            w * o.y - x * o.z + y * o.w + z * o.x,
            w * o.z + x * o.y - y * o.x + z * o.w};
}

Quat Quat::from_axis_angle(const Vec3& aa) {
    double angle = aa.norm();
    if (angle < 1e-300) return Quat{};
    Vec3 u = aa * (1.0 / angle);
    double h = 0.5 * angle;
    double s = std::sin(h);
    return {std::cos(h), u.x * s, u.y * s, u.z * s};
}

Quat Quat::from_matrix(const Mat3& r) {
    // Shepperd's method, branch on the largest diagonal term.
    double tr = r(0, 0) + r(1, 1) + r(2, 2);
    Quat q;
    if (tr > 0.0) {
        double s = std::sqrt(tr + 1.0) * 2.0;
        q.w = 0.25 * s;
        q.x = (r(2, 1) - r(1, 2)) / s;
        q.y = (r(0, 2) - r(2, 0)) / s;
        q.z = (r(1, 0) - r(0, 1)) / s;
    } else if (r(0, 0) > r(1, 1) && r(0, 0) > r(2, 2)) {
        double s = std::sqrt(1.0 + r(0, 0) - r(1, 1) - r(2, 2)) * 2.0;
        q.w = (r(2, 1) - r(1, 2)) / s;
        q.x = 0.25 * s;
        q.y = (r(0, 1) + r(1, 0)) / s;
        q.z = (r(0, 2) + r(2, 0)) / s;
    } else if (r(1, 1) > r(2, 2)) {
        double s = std::sqrt(1.0 + r(1, 1) - r(0, 0) - r(2, 2)) * 2.0;
        q.w = (r(0, 2) - r(2, 0)) / s;
        q.x = (r(0, 1) + r(1, 0)) / s;
        q.y = 0.25 * s;
        q.z = (r(1, 2) + r(2, 1)) / s;
    } else {
        double s = std::sqrt(1.0 + r(2, 2) - r(0, 0) - r(1, 1)) * 2.0;
        q.w = (r(1, 0) - r(0, 1)) / s;
        q.x = (r(0, 2) + r(2, 0)) / s;
        q.y = (r(1, 2) + r(2, 1)) / s;
        q.z = 0.25 * s;
    }
    return q.normalized();
}

}  // namespace mg
