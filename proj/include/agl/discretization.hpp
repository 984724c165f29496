#pragma once

#include <Eigen/Dense>

#include <vector>

#include "agl/errors.hpp"

namespace agl {

template <typename Scalar>
using Vec = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

enum class GridKind { uniform, geometric, custom };

/**
 * @brief Truncated radial interval [r_min, r_max] with the quantities the
 * staggered forms need.
 *
 * Terms carrying 1/r^2 use weights_r2, which makes g = r an exact discrete
 * solution of -(r g')' + g/r = 0.
 *
 * Cell c spans [r_c, r_{c+1}]. omega(c) is the exact cell integral of r dr,
 * and each node carries half of the omega of its neighbouring cells, so the
 * weights integrate g = 1 exactly against r dr.
 */
template <typename Scalar>
struct RadialGrid {
    Scalar r_min{};
    Scalar r_max{};
    GridKind kind = GridKind::uniform;
    Vec<Scalar> nodes;
    Vec<Scalar> weights;
    Vec<Scalar> weights_r2;  // weights for g/r^2 against r dr, i.e. trapezoid on g/r dr
    Vec<Scalar> h;      // cell widths
    Vec<Scalar> rho;    // cell midpoints
    Vec<Scalar> omega;  // h * rho

    Eigen::Index size() const { return nodes.size(); }
    Eigen::Index cells() const { return nodes.size() - 1; }
};

template <typename Scalar>
RadialGrid<Scalar> build_grid(Scalar r_min, Scalar r_max, Eigen::Index n_nodes, GridKind kind);

// Grid on arbitrary strictly increasing nodes (used when support endpoints
// must sit on nodes). Two nodes suffice for quadrature; differentiate needs three.
template <typename Scalar>
RadialGrid<Scalar> grid_from_nodes(const Vec<Scalar>& nodes);

// Geometric grid of the same log-density as `like`, reaching r_max, with the
// given radii inserted as nodes.
template <typename Scalar>
RadialGrid<Scalar> extended_grid(const RadialGrid<Scalar>& like, Scalar r_max,
                                 const std::vector<Scalar>& insert);

template <typename Scalar>
Scalar integrate(const RadialGrid<Scalar>& grid, const Vec<Scalar>& g);

template <typename Scalar>
Vec<Scalar> differentiate(const RadialGrid<Scalar>& grid, const Vec<Scalar>& g);

// Per-cell difference quotients and averages.
template <typename Scalar>
Vec<Scalar> cell_diff(const RadialGrid<Scalar>& grid, const Vec<Scalar>& g);

template <typename Scalar>
Vec<Scalar> cell_avg(const RadialGrid<Scalar>& grid, const Vec<Scalar>& g);

template <typename Scalar>
void check_shape(const RadialGrid<Scalar>& grid, const Vec<Scalar>& g, const char* what = "function");

// Samples g(r) on the grid.
template <typename Scalar, typename F>
Vec<Scalar> sample(const RadialGrid<Scalar>& grid, F&& g) {
    Vec<Scalar> out(grid.size());
    for (Eigen::Index i = 0; i < grid.size(); ++i) out(i) = g(grid.nodes(i));
    return out;
}

}  // namespace agl
