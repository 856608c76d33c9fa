#pragma once

#include <array>
#include <cmath>

namespace cuspflow {

struct Vec2 {
    double x = 0.0, y = 0.0;

    Vec2() = default;
    Vec2(double x_, double y_) : x(x_), y(y_) {}

    Vec2 operator+(Vec2 o) const { return {x + o.x, y + o.y}; }
    Vec2 operator-(Vec2 o) const { return {x - o.x, y - o.y}; }
    Vec2 operator-() const { return {-x, -y}; }
    Vec2 operator*(double s) const { return {x * s, y * s}; }
    Vec2 operator/(double s) const { return {x / s, y / s}; }
    Vec2& operator+=(Vec2 o) { x += o.x; y += o.y; return *this; }
    Vec2& operator-=(Vec2 o) { x -= o.x; y -= o.y; return *this; }
    Vec2& operator*=(double s) { x *= s; y *= s; return *this; }

    double norm() const { return std::hypot(x, y); }
    Vec2 perp() const { return {-y, x}; } // CCW rotation by 90 degrees
};

inline Vec2 operator*(double s, Vec2 v) { return v * s; }
inline double dot(Vec2 a, Vec2 b) { return a.x * b.x + a.y * b.y; }
// planar cross product u x v = u1 v2 - u2 v1
inline double cross(Vec2 a, Vec2 b) { return a.x * b.y - a.y * b.x; }

struct Mat2 {
    // row-major: [[a, b], [c, d]]
    double a = 0.0, b = 0.0, c = 0.0, d = 0.0;

    Mat2() = default;
    Mat2(double a_, double b_, double c_, double d_) : a(a_), b(b_), c(c_), d(d_) {}

    static Mat2 identity() { return {1.0, 0.0, 0.0, 1.0}; }

    Vec2 operator*(Vec2 v) const { return {a * v.x + b * v.y, c * v.x + d * v.y}; }
    Mat2 operator*(Mat2 m) const {
        return {a * m.a + b * m.c, a * m.b + b * m.d,
                c * m.a + d * m.c, c * m.b + d * m.d};
    }
    Mat2 operator+(Mat2 m) const { return {a + m.a, b + m.b, c + m.c, d + m.d}; }
    Mat2 operator-(Mat2 m) const { return {a - m.a, b - m.b, c - m.c, d - m.d}; }
    Mat2 operator*(double s) const { return {a * s, b * s, c * s, d * s}; }

    double trace() const { return a + d; }
    double det() const { return a * d - b * c; }
    Mat2 transpose() const { return {a, c, b, d}; }

    Vec2 solve(Vec2 rhs) const {
        const double dt = det();
        return {(rhs.x * d - b * rhs.y) / dt, (a * rhs.y - rhs.x * c) / dt};
    }
};

inline Mat2 operator*(double s, Mat2 m) { return m * s; }
inline Mat2 outer(Vec2 u, Vec2 v) { return {u.x * v.x, u.x * v.y, u.y * v.x, u.y * v.y}; }

// symmetric rank-3 tensor of second derivatives of a plane map:
// T[k] is the Hessian of component k.
struct Ten3 {
    std::array<Mat2, 2> h;
    // contraction T(u (x) v) -> Vec2
    Vec2 apply(Vec2 u, Vec2 v) const {
        auto quad = [&](const Mat2& m) {
            return u.x * (m.a * v.x + m.b * v.y) + u.y * (m.c * v.x + m.d * v.y);
        };
        return {quad(h[0]), quad(h[1])};
    }
};

} // namespace cuspflow
