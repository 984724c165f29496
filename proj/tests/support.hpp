#pragma once

#include <chrono>
#include <cmath>
#include <numbers>

#include "agl/profile.hpp"

namespace agl::test {

inline constexpr double pi = std::numbers::pi;

// Default profile on [1e-3, R] solved once per binary.
inline const Profile<double>& default_profile(double R = 40.0, Eigen::Index nodes = 2048) {
    static const Profile<double> p = solve_profile(build_grid(1e-3, R, nodes, GridKind::geometric), 1e-10);
    return p;
}

// sin^2 bump on [a, b], zero outside.
inline Vec<double> bump(const RadialGrid<double>& g, double a, double b) {
    return sample(g, [&](double r) {
        if (r <= a || r >= b) return 0.0;
        const double s = std::sin(pi * (r - a) / (b - a));
        return s * s;
    });
}

inline double rel(double a, double b) { return std::abs(a - b) / std::max({std::abs(a), std::abs(b), 1e-300}); }

class Stopwatch {
public:
    double seconds() const {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0_).count();
    }

private:
    std::chrono::steady_clock::time_point t0_ = std::chrono::steady_clock::now();
};

}  // namespace agl::test
