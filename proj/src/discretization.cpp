#include "agl/discretization.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace agl {

namespace {

template <typename Scalar>
void fill_cells(RadialGrid<Scalar>& g) {
    const Eigen::Index n = g.nodes.size();
    g.h = g.nodes.tail(n - 1) - g.nodes.head(n - 1);
    g.rho = (g.nodes.tail(n - 1) + g.nodes.head(n - 1)) / Scalar(2);
    g.omega = g.h.cwiseProduct(g.rho);
    g.weights = Vec<Scalar>::Zero(n);
    g.weights.head(n - 1) += g.omega / Scalar(2);
    g.weights.tail(n - 1) += g.omega / Scalar(2);
    g.weights_r2 = Vec<Scalar>::Zero(n);
    g.weights_r2.head(n - 1) += g.h / Scalar(2);
    g.weights_r2.tail(n - 1) += g.h / Scalar(2);
    g.weights_r2 = g.weights_r2.cwiseQuotient(g.nodes);
    g.r_min = g.nodes(0);
    g.r_max = g.nodes(n - 1);
}

}  // namespace

template <typename Scalar>
RadialGrid<Scalar> build_grid(Scalar r_min, Scalar r_max, Eigen::Index n_nodes, GridKind kind) {
    if (!(r_min > 0) || !(r_max > r_min))
        throw ParameterError("build_grid: need 0 < r_min < r_max");
    if (n_nodes < 16)
        throw ParameterError("build_grid: need at least 16 nodes, got " + std::to_string(n_nodes));
    if (kind == GridKind::custom)
        throw ParameterError("build_grid: custom grids come from grid_from_nodes");

    RadialGrid<Scalar> g;
    g.kind = kind;
    g.nodes.resize(n_nodes);
    const Scalar last = Scalar(n_nodes - 1);
    if (kind == GridKind::uniform) {
        for (Eigen::Index i = 0; i < n_nodes; ++i)
            g.nodes(i) = r_min + (r_max - r_min) * (Scalar(i) / last);
    } else {
        const Scalar lr = std::log(r_max / r_min);
        for (Eigen::Index i = 0; i < n_nodes; ++i)
            g.nodes(i) = r_min * std::exp(lr * (Scalar(i) / last));
    }
    g.nodes(0) = r_min;
    g.nodes(n_nodes - 1) = r_max;
    fill_cells(g);
    return g;
}

template <typename Scalar>
RadialGrid<Scalar> grid_from_nodes(const Vec<Scalar>& nodes) {
    if (nodes.size() < 2) throw ParameterError("grid_from_nodes: need at least 2 nodes");
    if (!(nodes(0) > 0)) throw ParameterError("grid_from_nodes: nodes must be positive");
    for (Eigen::Index i = 1; i < nodes.size(); ++i)
        if (!(nodes(i) > nodes(i - 1)))
            throw ParameterError("grid_from_nodes: nodes must be strictly increasing");
    RadialGrid<Scalar> g;
    g.kind = GridKind::custom;
    g.nodes = nodes;
    fill_cells(g);
    return g;
}

template <typename Scalar>
RadialGrid<Scalar> extended_grid(const RadialGrid<Scalar>& like, Scalar r_max,
                                 const std::vector<Scalar>& insert) {
    using std::log;
    const Scalar per_log = Scalar(like.size() - 1) / log(like.r_max / like.r_min);
    const Scalar top = std::max(r_max, like.r_max);
    const auto n = static_cast<Eigen::Index>(std::ceil(per_log * log(top / like.r_min))) + 1;
    const RadialGrid<Scalar> base = build_grid(like.r_min, top, std::max<Eigen::Index>(n, 16),
                                               GridKind::geometric);

    std::vector<Scalar> pts(base.nodes.data(), base.nodes.data() + base.size());
    const Scalar step = std::exp(Scalar(1) / per_log) - Scalar(1);
    for (Scalar x : insert) {
        if (!(x > like.r_min) || !(x < top)) continue;
        // drop base nodes that would make a sliver cell next to x
        std::erase_if(pts, [&](Scalar p) {
            return p != pts.front() && p != pts.back() && std::abs(p - x) < Scalar(0.25) * step * x;
        });
        pts.insert(std::upper_bound(pts.begin(), pts.end(), x), x);
    }
    Vec<Scalar> nodes = Eigen::Map<Vec<Scalar>>(pts.data(), Eigen::Index(pts.size()));
    return grid_from_nodes(nodes);
}

template <typename Scalar>
void check_shape(const RadialGrid<Scalar>& grid, const Vec<Scalar>& g, const char* what) {
    if (g.size() != grid.size())
        throw ShapeError(std::string(what) + ": length " + std::to_string(g.size()) +
                         " does not match grid of " + std::to_string(grid.size()) + " nodes");
}

template <typename Scalar>
Scalar integrate(const RadialGrid<Scalar>& grid, const Vec<Scalar>& g) {
    check_shape(grid, g, "integrate");
    return grid.weights.dot(g);
}

template <typename Scalar>
Vec<Scalar> differentiate(const RadialGrid<Scalar>& grid, const Vec<Scalar>& g) {
    check_shape(grid, g, "differentiate");
    const Eigen::Index n = grid.size();
    if (n < 3) throw ParameterError("differentiate: need at least 3 nodes");
    const auto& r = grid.nodes;
    Vec<Scalar> d(n);
    for (Eigen::Index i = 1; i + 1 < n; ++i) {
        const Scalar h0 = r(i) - r(i - 1), h1 = r(i + 1) - r(i);
        d(i) = -h1 / (h0 * (h0 + h1)) * g(i - 1) + (h1 - h0) / (h0 * h1) * g(i) +
               h0 / (h1 * (h0 + h1)) * g(i + 1);
    }
    // one-sided three-point formula at x0 with neighbours at x0+a, x0+b
    auto edge = [](Scalar a, Scalar b, Scalar g0, Scalar g1, Scalar g2) {
        return -(a + b) / (a * b) * g0 + b / (a * (b - a)) * g1 - a / (b * (b - a)) * g2;
    };
    d(0) = edge(r(1) - r(0), r(2) - r(0), g(0), g(1), g(2));
    d(n - 1) = edge(r(n - 2) - r(n - 1), r(n - 3) - r(n - 1), g(n - 1), g(n - 2), g(n - 3));
    return d;
}

template <typename Scalar>
Vec<Scalar> cell_diff(const RadialGrid<Scalar>& grid, const Vec<Scalar>& g) {
    check_shape(grid, g, "cell_diff");
    const Eigen::Index n = grid.size();
    return (g.tail(n - 1) - g.head(n - 1)).cwiseQuotient(grid.h);
}

template <typename Scalar>
Vec<Scalar> cell_avg(const RadialGrid<Scalar>& grid, const Vec<Scalar>& g) {
    check_shape(grid, g, "cell_avg");
    const Eigen::Index n = grid.size();
    return (g.tail(n - 1) + g.head(n - 1)) / Scalar(2);
}

template RadialGrid<double> build_grid<double>(double, double, Eigen::Index, GridKind);
template RadialGrid<double> grid_from_nodes<double>(const Vec<double>&);
template RadialGrid<double> extended_grid<double>(const RadialGrid<double>&, double,
                                                  const std::vector<double>&);
template void check_shape<double>(const RadialGrid<double>&, const Vec<double>&, const char*);
template double integrate<double>(const RadialGrid<double>&, const Vec<double>&);
template Vec<double> differentiate<double>(const RadialGrid<double>&, const Vec<double>&);
template Vec<double> cell_diff<double>(const RadialGrid<double>&, const Vec<double>&);
template Vec<double> cell_avg<double>(const RadialGrid<double>&, const Vec<double>&);

}  // namespace agl
