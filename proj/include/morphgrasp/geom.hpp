#pragma once

#include <array>
#include <cmath>

namespace mg {

struct Vec3 {
    double x = 0.0, y = 0.0, z = 0.0;

    Vec3() = default;
    Vec3(double x_, double y_, double z_) : x(x_), y(y_), z(z_) {}

    Vec3 operator+(const Vec3& o) const { return {x + o.x, y + o.y, z + o.z}; }
    Vec3 operator-(const Vec3& o) const { return {x - o.x, y - o.y, z - o.z}; }
    Vec3 operator*(double s) const { return {x * s, y * s, z * s}; }
    Vec3 operator-() const { return {-x, -y, -z}; }
    Vec3& operator+=(const Vec3& o) {
        x += o.x;
        y += o.y;
        z += o.z;
        return *this;
    }

    double dot(const Vec3& o) const { return x * o.x + y * o.y + z * o.z; }
    Vec3 cross(const Vec3& o) const {
        return {y * o.z - z * o.y, z * o.x - x * o.z, x * o.y - y * o.x};
    }
    double norm() const { return std::sqrt(dot(*this)); }
    double squared_norm() const { return dot(*this); }
    Vec3 normalized() const {
        double n = norm();
        return n > 0.0 ? Vec3{x / n, y / n, z / n} : Vec3{};
    }
    double operator[](int i) const { return i == 0 ? x : (i == 1 ? y : z); }
};

inline Vec3 operator*(double s, const Vec3& v) { return v * s; }

// Row-major 3x3 matrix.
struct Mat3 {
    std::array<double, 9> m{1, 0, 0, 0, 1, 0, 0, 0, 1};

    static Mat3 identity() { return Mat3{}; }

    double operator()(int r, int c) const { return m[3 * r + c]; }
    double& operator()(int r, int c) { return m[3 * r + c]; }

    Vec3 operator*(const Vec3& v) const {
        return {m[0] * v.x + m[1] * v.y + m[2] * v.z,
                m[3] * v.x + m[4] * v.y + m[5] * v.z,
                m[6] * v.x + m[7] * v.y + m[8] * v.z};
    }
    Mat3 operator*(const Mat3& o) const {
        Mat3 r;
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j) {
                double s = 0.0;
                for (int k = 0; k < 3; ++k) s += (*this)(i, k) * o(k, j);
                r(i, j) = s;
            }
        return r;
    }
    Mat3 transposed() const {
        Mat3 r;
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j) r(i, j) = (*this)(j, i);
        return r;
    }
    Vec3 col(int c) const { return {m[c], m[3 + c], m[6 + c]}; }
    void set_col(int c, const Vec3& v) {
        m[c] = v.x;
        m[3 + c] = v.y;
        m[6 + c] = v.z;
    }
    double det() const {
        return m[0] * (m[4] * m[8] - m[5] * m[7]) - m[1] * (m[3] * m[8] - m[5] * m[6]) +
               m[2] * (m[3] * m[7] - m[4] * m[6]);
    }
};

Mat3 rotation_x(double a);
Mat3 rotation_y(double a);
Mat3 rotation_z(double a);

// URDF rpy semantics: extrinsic rotations about the fixed X, then Y, then Z
// axes, i.e. R = Rz(yaw) * Ry(pitch) * Rx(roll).
Mat3 rotation_rpy(double roll, double pitch, double yaw);

// Rodrigues formula; `axis` need not be normalized (zero axis gives identity).
Mat3 rotation_axis_angle(const Vec3& axis, double angle);

// Unit quaternion, scalar-first (w, x, y, z).
struct Quat {
    double w = 1.0, x = 0.0, y = 0.0, z = 0.0;

    double norm() const { return std::sqrt(w * w + x * x + y * y + z * z); }
    Quat normalized() const;
    Mat3 to_matrix() const;
    Quat operator*(const Quat& o) const;
    static Quat from_axis_angle(const Vec3& axis_angle);  // |v| = angle, v/|v| = axis
    static Quat from_matrix(const Mat3& r);
};

// Rigid transform p -> r*p + t.
struct Transform {
    Mat3 r;
    Vec3 t;

    static Transform identity() { return {}; }

    Vec3 apply(const Vec3& p) const { return r * p + t; }
    Transform compose(const Transform& o) const { return {r * o.r, r * o.t + t}; }
    Transform inverse() const {
        Mat3 rt = r.transposed();
        return {rt, -(rt * t)};
    }
};

}  // namespace mg
