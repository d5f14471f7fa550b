#include "conecal/minimality_lab.hpp"

#include <boost/graph/adjacency_list.hpp>
#include <boost/graph/boykov_kolmogorov_max_flow.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <deque>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>
#include <stdexcept>

namespace conecal {

const char* to_string(LatticeMode mode)
{
    return mode == LatticeMode::axisymmetric ? "axisymmetric" : "full";
}

const char* to_string(BoundaryData data)
{
    return data == BoundaryData::split ? "split" : "all_source";
}

const char* to_string(Stencil stencil)
{
    return stencil == Stencil::axis ? "axis" : "crofton26";
}

const char* to_string(MaxFlowSolver solver)
{
    return solver == MaxFlowSolver::boykov_kolmogorov ? "boykov_kolmogorov" : "dinic";
}

void LatticeSpec::validate() const
{
    if (!(spacing > 0.0 && spacing < shell && shell < radius)) {
        throw std::invalid_argument("LatticeSpec: need 0 < spacing < shell < radius");
    }
    if (stencil == Stencil::crofton26 && mode == LatticeMode::full && cone.n() != 2) {
        throw std::invalid_argument("LatticeSpec: crofton26 needs a 3-dimensional lattice");
    }
}

Json LatticeSpec::to_json() const
{
    return {{"n", cone.n()},         {"lambda", cone.lambda()}, {"radius", radius},
            {"spacing", spacing},    {"mode", to_string(mode)}, {"shell", shell},
            {"boundary", to_string(boundary)}, {"stencil", to_string(stencil)}};
}

double CutProblem::labeling_capacity(const std::vector<std::uint8_t>& source_side) const
{
    if (static_cast<int>(source_side.size()) != node_count) {
        throw std::invalid_argument("labeling_capacity: one label per node expected");
    }
    double sum = 0.0;
    for (const CutArc& a : arcs) {
        if (source_side[a.u] != source_side[a.v]) {
            sum += a.capacity;
        }
    }
    return sum;
}

double sphere_area(int k)
{
    return 2.0 * std::pow(M_PI, 0.5 * (k + 1)) / std::tgamma(0.5 * (k + 1));
}

namespace {

double cos_power_integral(int p, double from, double to)
{
    auto f = [p](double phi) { return std::pow(std::cos(phi), p); };
    return boost::math::quadrature::gauss_kronrod<double, 61>::integrate(f, from, to, 15, 1e-15);
}

}  // namespace

double plane_area(const ConeParams& cone, double radius)
{
    const int n = cone.n();
    return sphere_area(n - 2) * std::pow(radius, n) / n *
           cos_power_integral(n - 2, std::atan(cone.lambda()), M_PI / 2);
}

double plane_area_boundary_rate(const ConeParams& cone, double radius)
{
    const int n = cone.n();
    const double sigma = sphere_area(n - 2);
    const double r_max = radius / std::sqrt(cone.one_plus_lambda_sq());
    const double cone_side =
        sigma * std::sqrt(cone.one_plus_lambda_sq()) * std::pow(r_max, n - 1) / (n - 1);
    const double sphere_side = sigma * std::pow(radius, n - 1) *
                               cos_power_integral(n - 2, std::atan(cone.lambda()), M_PI / 2);
    return cone_side + sphere_side;
}

// ---------------------------------------------------------------------------
// Lattice
// ---------------------------------------------------------------------------

namespace {

struct Offset {
    std::vector<int> d;
    /// Capacity per unit facet measure h^{dims-1} and unit area weight.
    double w;
};

// Solid angles of the Voronoi cells of the 26 lattice directions on S^2, by class
// (axis, face diagonal, body diagonal); 6a + 12b + 8c = 4 pi.
constexpr double kSolidAngleAxis = 0.5753520741621388;
constexpr double kSolidAngleFace = 0.4646771464241579;
constexpr double kSolidAngleBody = 0.4422665575511254;

// First nonzero entry positive: one representative per undirected direction.
bool positive(const std::vector<int>& d)
{
    for (int v : d) {
        if (v != 0) {
            return v > 0;
        }
    }
    return false;
}

std::vector<Offset> crofton_raw()
{
    std::vector<Offset> out;
    for (int a = -1; a <= 1; ++a) {
        for (int b = -1; b <= 1; ++b) {
            for (int c = -1; c <= 1; ++c) {
                std::vector<int> d{a, b, c};
                if (!positive(d)) {
                    continue;
                }
                const int nonzero = (a != 0) + (b != 0) + (c != 0);
                const double solid = nonzero == 1   ? kSolidAngleAxis
                                     : nonzero == 2 ? kSolidAngleFace
                                                    : kSolidAngleBody;
                out.push_back({d, solid / (M_PI * std::sqrt(static_cast<double>(nonzero)))});
            }
        }
    }
    return out;
}

double raw_cost(const std::vector<Offset>& offsets, const Vector& m)
{
    const Vector unit = m.normalized();
    double sum = 0.0;
    for (const Offset& o : offsets) {
        double dot = 0.0;
        for (std::size_t i = 0; i < o.d.size(); ++i) {
            dot += unit[static_cast<int>(i)] * o.d[i];
        }
        sum += o.w * std::abs(dot);
    }
    return sum;
}

std::vector<Offset> stencil_offsets(Stencil stencil, int dims)
{
    if (stencil == Stencil::axis) {
        std::vector<Offset> out;
        for (int a = 0; a < dims; ++a) {
            std::vector<int> d(dims, 0);
            d[a] = 1;
            out.push_back({d, 1.0});
        }
        return out;
    }
    if (dims != 3) {
        throw std::invalid_argument("crofton26 stencil needs a 3-dimensional lattice");
    }
    std::vector<Offset> out = crofton_raw();
    const double axis_cost = raw_cost(out, Vector::Unit(3, 0));
    for (Offset& o : out) {
        o.w /= axis_cost;
    }
    return out;
}

constexpr int kOutside = -1;

struct Grid {
    int dims = 0;
    std::vector<int> lo;
    std::vector<int> extent;
    std::vector<long long> stride;
    long long size = 1;
};

// Physical (x_1, r, t) of a point given in grid coordinates scaled by h.
struct Reduced {
    double x1;
    double r;
    double t;
};

Reduced reduce(const std::vector<double>& y, LatticeMode mode)
{
    const std::size_t d = y.size();
    if (mode == LatticeMode::axisymmetric) {
        return {y[0], y[1], y[2]};
    }
    double r_sq = 0.0;
    for (std::size_t i = 1; i + 1 < d; ++i) {
        r_sq += y[i] * y[i];
    }
    return {y[0], std::sqrt(r_sq), y[d - 1]};
}

}  // namespace

CutProblem build_lattice(const LatticeSpec& spec)
{
    spec.validate();
    const int n = spec.cone.n();
    const double h = spec.spacing;
    const double lambda = spec.cone.lambda();
    const int cells_per_radius = static_cast<int>(std::ceil(spec.radius / h));

    Grid grid;
    grid.dims = spec.mode == LatticeMode::axisymmetric ? 3 : n + 1;
    for (int a = 0; a < grid.dims; ++a) {
        const bool signed_axis =
            a + 1 < grid.dims && (spec.mode == LatticeMode::full || a == 0);
        grid.lo.push_back(signed_axis ? -cells_per_radius : 0);
        grid.extent.push_back(signed_axis ? 2 * cells_per_radius : cells_per_radius);
    }
    grid.stride.assign(grid.dims, 1);
    for (int a = grid.dims - 2; a >= 0; --a) {
        grid.stride[a] = grid.stride[a + 1] * grid.extent[a + 1];
    }
    grid.size = grid.stride[0] * grid.extent[0];

    const double sigma = spec.mode == LatticeMode::axisymmetric ? sphere_area(n - 2) : 1.0;
    const double facet_measure = std::pow(h, grid.dims - 1);
    auto weight = [&](double r) {
        return spec.mode == LatticeMode::axisymmetric ? sigma * std::pow(r, n - 2) : 1.0;
    };

    CutProblem problem;
    problem.spacing = h;
    const double nan = std::numeric_limits<double>::quiet_NaN();
    problem.node_position.assign(2, {nan, nan, nan});
    std::vector<int> node(static_cast<std::size_t>(grid.size), kOutside);
    std::vector<int> idx(grid.dims, 0);
    std::vector<double> y(grid.dims);

    auto to_physical = [&](const std::vector<int>& index, std::vector<double>& out) {
        for (int a = 0; a < grid.dims; ++a) {
            out[a] = (grid.lo[a] + index[a] + 0.5) * h;
        }
    };

    for (long long flat = 0; flat < grid.size; ++flat) {
        long long rem = flat;
        for (int a = 0; a < grid.dims; ++a) {
            idx[a] = static_cast<int>(rem / grid.stride[a]);
            rem %= grid.stride[a];
        }
        to_physical(idx, y);
        const Reduced p = reduce(y, spec.mode);
        const double rho = std::hypot(p.x1, p.r);
        const double dist = std::hypot(rho, p.t);
        if (!(p.t > lambda * rho) || !(dist < spec.radius)) {
            continue;
        }
        if (dist > spec.radius - spec.shell) {
            const bool to_source = spec.boundary == BoundaryData::all_source || p.x1 > 0.0;
            node[flat] = to_source ? CutProblem::kSource : CutProblem::kSink;
        } else {
            node[flat] = problem.node_count++;
            problem.node_position.push_back({p.x1, p.r, p.t});
        }
    }
    if (problem.free_nodes() == 0) {
        throw std::domain_error("build_lattice: no free cell; spacing too coarse");
    }

    const std::vector<Offset> offsets = stencil_offsets(spec.stencil, grid.dims);
    const bool axisymmetric = spec.mode == LatticeMode::axisymmetric;
    std::vector<int> other(grid.dims);
    std::vector<double> y2(grid.dims);
    auto add_arc = [&](int u, int v, double w) {
        // Capacity from the midpoint of the two centers.
        for (int a = 0; a < grid.dims; ++a) {
            y[a] = 0.5 * (y[a] + y2[a]);
        }
        const Reduced f = reduce(y, spec.mode);
        problem.arcs.push_back({u, v, w * weight(f.r) * facet_measure});
        problem.facets.push_back({f.x1, std::sqrt(f.x1 * f.x1 + f.r * f.r + f.t * f.t)});
    };

    for (long long flat = 0; flat < grid.size; ++flat) {
        const int u = node[flat];
        if (u == kOutside) {
            continue;
        }
        long long rem = flat;
        for (int a = 0; a < grid.dims; ++a) {
            idx[a] = static_cast<int>(rem / grid.stride[a]);
            rem %= grid.stride[a];
        }
        for (const Offset& o : offsets) {
            bool inside = true;
            for (int a = 0; a < grid.dims && inside; ++a) {
                other[a] = idx[a] + o.d[a];
                inside = other[a] >= 0 && other[a] < grid.extent[a];
            }
            if (!inside) {
                continue;
            }
            long long flat2 = 0;
            for (int a = 0; a < grid.dims; ++a) {
                flat2 += other[a] * grid.stride[a];
            }
            const int v = node[flat2];
            if (v == kOutside || (u < 2 && u == v)) {
                continue;
            }
            to_physical(idx, y);
            to_physical(other, y2);
            add_arc(u, v, o.w);
        }
        // Arcs of direction (d0, +-1, d2) between cell (i, 0, k) and its partner
        // (i + d0, 0, k + d2) cross the axis r = 0. Under the reflection r -> -r they
        // form one reduced arc with midpoint at r = 0, so they only carry weight for
        // n = 2.
        if (axisymmetric && spec.stencil != Stencil::axis && idx[1] == 0) {
            static constexpr int kPairs[4][2] = {{0, 1}, {1, -1}, {1, 0}, {1, 1}};
            for (const auto& pair : kPairs) {
                other = {idx[0] + pair[0], 0, idx[2] + pair[1]};
                if (other[0] < 0 || other[0] >= grid.extent[0] || other[2] < 0 ||
                    other[2] >= grid.extent[2]) {
                    continue;
                }
                const int v = node[other[0] * grid.stride[0] + other[2] * grid.stride[2]];
                if (v == kOutside || (u < 2 && u == v)) {
                    continue;
                }
                const std::vector<int> direction{std::abs(pair[0]), 1, std::abs(pair[1])};
                const auto match = std::find_if(offsets.begin(), offsets.end(), [&](const Offset& o) {
                    return std::abs(o.d[0]) == direction[0] && std::abs(o.d[1]) == 1 &&
                           std::abs(o.d[2]) == direction[2];
                });
                to_physical(idx, y);
                to_physical(other, y2);
                y[1] = 0.0;
                y2[1] = 0.0;
                add_arc(u, v, match->w);
            }
        }
    }
    return problem;
}

double stencil_plane_cost(Stencil stencil, const Vector& m)
{
    return raw_cost(stencil_offsets(stencil, static_cast<int>(m.size())), m);
}

double plane_capacity(const CutProblem& problem)
{
    if (static_cast<int>(problem.node_position.size()) != problem.node_count) {
        throw std::invalid_argument("plane_capacity: problem has no node geometry");
    }
    std::vector<std::uint8_t> side(problem.node_count, 0);
    side[CutProblem::kSource] = 1;
    for (int v = 2; v < problem.node_count; ++v) {
        side[v] = problem.node_position[v][0] > 0.0 ? 1 : 0;
    }
    return problem.labeling_capacity(side);
}

// ---------------------------------------------------------------------------
// Solvers
// ---------------------------------------------------------------------------

namespace {

// Residual network shared by the cut extraction: arc 2k is u->v, 2k+1 is v->u.
struct Residual {
    std::vector<int> head;
    std::vector<int> next;
    std::vector<int> first;
    std::vector<int> to;
    std::vector<double> cap;

    explicit Residual(const CutProblem& p)
        : first(p.node_count, -1)
    {
        const std::size_t m = p.arcs.size();
        to.reserve(2 * m);
        cap.reserve(2 * m);
        next.reserve(2 * m);
        for (const CutArc& a : p.arcs) {
            add(a.u, a.v, a.capacity);
            add(a.v, a.u, a.capacity);
        }
    }

    void add(int u, int v, double c)
    {
        to.push_back(v);
        cap.push_back(c);
        next.push_back(first[u]);
        first[u] = static_cast<int>(to.size()) - 1;
    }
};

double saturation_floor(const CutProblem& p)
{
    double max_cap = 0.0;
    for (const CutArc& a : p.arcs) {
        max_cap = std::max(max_cap, a.capacity);
    }
    return 1e-12 * max_cap;
}

std::vector<std::uint8_t> reachable_from(int start, const Residual& g, double floor)
{
    std::vector<std::uint8_t> seen(g.first.size(), 0);
    std::deque<int> queue{start};
    seen[start] = 1;
    while (!queue.empty()) {
        const int u = queue.front();
        queue.pop_front();
        for (int e = g.first[u]; e != -1; e = g.next[e]) {
            if (g.cap[e] > floor && !seen[g.to[e]]) {
                seen[g.to[e]] = 1;
                queue.push_back(g.to[e]);
            }
        }
    }
    return seen;
}

class Dinic {
  public:
    Dinic(Residual& g, double floor)
        : g_(g), floor_(floor), level_(g.first.size()), it_(g.first.size())
    {
    }

    double run(int s, int t)
    {
        double total = 0.0;
        while (bfs(s, t)) {
            std::copy(g_.first.begin(), g_.first.end(), it_.begin());
            while (true) {
                const double pushed = push(s, t, std::numeric_limits<double>::infinity());
                if (!(pushed > 0.0)) {
                    break;
                }
                total += pushed;
            }
        }
        return total;
    }

  private:
    bool bfs(int s, int t)
    {
        std::fill(level_.begin(), level_.end(), -1);
        std::deque<int> queue{s};
        level_[s] = 0;
        while (!queue.empty()) {
            const int u = queue.front();
            queue.pop_front();
            for (int e = g_.first[u]; e != -1; e = g_.next[e]) {
                if (g_.cap[e] > floor_ && level_[g_.to[e]] < 0) {
                    level_[g_.to[e]] = level_[u] + 1;
                    queue.push_back(g_.to[e]);
                }
            }
        }
        return level_[t] >= 0;
    }

    // Iterative blocking-flow DFS along the level graph.
    double push(int s, int t, double limit)
    {
        std::vector<int> path;
        int u = s;
        while (true) {
            if (u == t) {
                double f = limit;
                for (int e : path) {
                    f = std::min(f, g_.cap[e]);
                }
                for (int e : path) {
                    g_.cap[e] -= f;
                    g_.cap[e ^ 1] += f;
                }
                return f;
            }
            int& e = it_[u];
            while (e != -1 && !(g_.cap[e] > floor_ && level_[g_.to[e]] == level_[u] + 1)) {
                e = g_.next[e];
            }
            if (e == -1) {
                if (path.empty()) {
                    return 0.0;
                }
                level_[u] = -1;
                const int back = path.back();
                path.pop_back();
                u = g_.to[back ^ 1];
                it_[u] = g_.next[it_[u]];
                continue;
            }
            path.push_back(e);
            u = g_.to[e];
        }
    }

    Residual& g_;
    double floor_;
    std::vector<int> level_;
    std::vector<int> it_;
};

double run_boykov_kolmogorov(const CutProblem& p, Residual& residual)
{
    using Traits = boost::adjacency_list_traits<boost::vecS, boost::vecS, boost::directedS>;
    using Graph = boost::adjacency_list<
        boost::vecS, boost::vecS, boost::directedS,
        boost::property<boost::vertex_color_t, boost::default_color_type,
                        boost::property<boost::vertex_distance_t, long,
                                        boost::property<boost::vertex_predecessor_t,
                                                        Traits::edge_descriptor>>>,
        boost::property<boost::edge_capacity_t, double,
                        boost::property<boost::edge_residual_capacity_t, double,
                                        boost::property<boost::edge_reverse_t,
                                                        Traits::edge_descriptor>>>>;
    Graph g(static_cast<std::size_t>(p.node_count));
    auto capacity = get(boost::edge_capacity, g);
    auto reverse = get(boost::edge_reverse, g);
    auto residual_cap = get(boost::edge_residual_capacity, g);
    std::vector<Traits::edge_descriptor> forward;
    std::vector<Traits::edge_descriptor> backward;
    forward.reserve(p.arcs.size());
    backward.reserve(p.arcs.size());
    for (const CutArc& a : p.arcs) {
        const auto e1 = add_edge(a.u, a.v, g).first;
        const auto e2 = add_edge(a.v, a.u, g).first;
        capacity[e1] = a.capacity;
        capacity[e2] = a.capacity;
        reverse[e1] = e2;
        reverse[e2] = e1;
        forward.push_back(e1);
        backward.push_back(e2);
    }
    const double flow = boost::boykov_kolmogorov_max_flow(g, CutProblem::kSource, CutProblem::kSink);
    for (std::size_t k = 0; k < p.arcs.size(); ++k) {
        residual.cap[2 * k] = residual_cap[forward[k]];
        residual.cap[2 * k + 1] = residual_cap[backward[k]];
    }
    return flow;
}

}  // namespace

CutResult solve_mincut(const CutProblem& problem, MaxFlowSolver solver)
{
    for (const CutArc& a : problem.arcs) {
        if (a.u < 0 || a.v < 0 || a.u >= problem.node_count || a.v >= problem.node_count ||
            !(a.capacity >= 0.0)) {
            throw std::invalid_argument("solve_mincut: malformed arc");
        }
    }
    Residual residual(problem);
    const double floor = saturation_floor(problem);
    const Residual pristine = residual;

    CutResult result;
    result.solver = to_string(solver);
    if (solver == MaxFlowSolver::boykov_kolmogorov) {
        result.flow = run_boykov_kolmogorov(problem, residual);
    } else {
        result.flow = Dinic(residual, floor).run(CutProblem::kSource, CutProblem::kSink);
    }

    result.source_side = reachable_from(CutProblem::kSource, residual, floor);
    if (result.source_side[CutProblem::kSink]) {
        throw std::logic_error("solve_mincut: sink still reachable after max flow");
    }
    result.value = problem.labeling_capacity(result.source_side);

    const auto from_source = reachable_from(CutProblem::kSource, pristine, 0.0);
    const auto from_sink = reachable_from(CutProblem::kSink, pristine, 0.0);
    for (int v = 2; v < problem.node_count; ++v) {
        if (!from_source[v] && !from_sink[v]) {
            ++result.unreachable_nodes;
        }
    }

    const double nan = std::numeric_limits<double>::quiet_NaN();
    result.vertex_clearance = nan;
    result.max_facet_offset = nan;
    double clearance = std::numeric_limits<double>::infinity();
    double offset = 0.0;
    for (std::size_t k = 0; k < problem.arcs.size(); ++k) {
        const CutArc& a = problem.arcs[k];
        if (result.source_side[a.u] == result.source_side[a.v] || a.capacity == 0.0) {
            continue;
        }
        result.cut_arcs.push_back(static_cast<int>(k));
        if (problem.has_geometry()) {
            clearance = std::min(clearance, problem.facets[k].distance);
            offset = std::max(offset, std::abs(problem.facets[k].x1));
        }
    }
    if (problem.has_geometry() && !result.cut_arcs.empty()) {
        result.vertex_clearance = clearance;
        result.max_facet_offset = offset;
    }
    return result;
}

double relative_gap(double a, double b)
{
    const double scale = std::max({std::abs(a), std::abs(b), 1e-300});
    return std::abs(a - b) / scale;
}

// ---------------------------------------------------------------------------
// Dump format
// ---------------------------------------------------------------------------

void dump_problem(const CutProblem& problem, std::ostream& out)
{
    out << "conecal-cut-problem 1\n";
    out << "nodes " << problem.node_count << '\n';
    out << "terminals " << CutProblem::kSource << ' ' << CutProblem::kSink << '\n';
    out << "arcs " << problem.arcs.size() << '\n';
    char buf[64];
    for (const CutArc& a : problem.arcs) {
        std::snprintf(buf, sizeof buf, "%.17g", a.capacity);
        out << a.u << ' ' << a.v << ' ' << buf << '\n';
    }
}

CutProblem load_problem(std::istream& in)
{
    auto expect = [&](const char* word) {
        std::string got;
        if (!(in >> got) || got != word) {
            throw std::runtime_error(std::string("load_problem: expected '") + word + "'");
        }
    };
    expect("conecal-cut-problem");
    int version = 0;
    if (!(in >> version) || version != 1) {
        throw std::runtime_error("load_problem: unsupported version");
    }
    CutProblem p;
    expect("nodes");
    if (!(in >> p.node_count) || p.node_count < 2) {
        throw std::runtime_error("load_problem: bad node count");
    }
    expect("terminals");
    int s = -1;
    int t = -1;
    if (!(in >> s >> t) || s != CutProblem::kSource || t != CutProblem::kSink) {
        throw std::runtime_error("load_problem: terminals must be 0 1");
    }
    expect("arcs");
    std::size_t m = 0;
    if (!(in >> m)) {
        throw std::runtime_error("load_problem: bad arc count");
    }
    p.arcs.resize(m);
    for (CutArc& a : p.arcs) {
        if (!(in >> a.u >> a.v >> a.capacity) || a.u < 0 || a.v < 0 || a.u >= p.node_count ||
            a.v >= p.node_count || !(a.capacity >= 0.0)) {
            throw std::runtime_error("load_problem: bad arc line");
        }
    }
    return p;
}

// ---------------------------------------------------------------------------
// Experiments
// ---------------------------------------------------------------------------

MinimalityClaim claim_for(const ConeParams& cone)
{
    if (cone.n() == 2) {
        return MinimalityClaim::unstable;
    }
    if (cone.n() >= 4 && cone.lambda() <= lambda_bar(cone.n())) {
        return MinimalityClaim::minimal;
    }
    return MinimalityClaim::exploratory;
}

PlaneComparison compare_values(const CutProblem& problem, const CutResult& result)
{
    PlaneComparison c;
    c.value = result.value;
    c.plane = plane_capacity(problem);
    c.ratio = c.plane > 0.0 ? c.value / c.plane : std::numeric_limits<double>::quiet_NaN();
    c.vertex_clearance = result.vertex_clearance;
    c.max_facet_offset = result.max_facet_offset;
    return c;
}

namespace {

Json finite_or_null(double v)
{
    return std::isfinite(v) ? Json(v) : Json(nullptr);
}

}  // namespace

ReportRecord compare_to_plane(const LatticeSpec& spec, const CutProblem& problem,
                              const CutResult& result, double tol_h, double margin)
{
    const PlaneComparison c = compare_values(problem, result);
    ReportRecord r;
    r.check = "mincut_vs_plane";
    r.n = spec.cone.n();
    r.lambda = spec.cone.lambda();
    r.statistic = c.ratio;
    r.parameters = spec.to_json();
    r.details = {{"cut_value", c.value},
                 {"plane_capacity", c.plane},
                 {"vertex_clearance", finite_or_null(c.vertex_clearance)},
                 {"max_facet_offset", finite_or_null(c.max_facet_offset)},
                 {"free_nodes", problem.free_nodes()},
                 {"arcs", problem.arcs.size()},
                 {"solver", result.solver}};
    switch (claim_for(spec.cone)) {
    case MinimalityClaim::minimal:
        r.tolerance = 1.0 - tol_h;
        r.pass = c.ratio >= r.tolerance;
        r.details["verdict"] = *r.pass ? "consistent-with-minimality" : "plane-beaten";
        break;
    case MinimalityClaim::unstable:
        r.tolerance = 1.0 - margin;
        r.pass = c.ratio < r.tolerance;
        r.details["verdict"] = *r.pass ? "plane-beaten" : "no-instability-detected";
        break;
    case MinimalityClaim::exploratory:
        r.tolerance = 1.0 - tol_h;
        r.details["verdict"] = "exploratory";
        break;
    }
    return r;
}

std::vector<ClearancePoint> vertex_skip_probe(const LatticeSpec& base,
                                              const std::vector<double>& spacings)
{
    std::vector<ClearancePoint> out;
    for (double h : spacings) {
        LatticeSpec spec = base;
        spec.spacing = h;
        const CutProblem problem = build_lattice(spec);
        const CutResult result = solve_mincut(problem);
        const PlaneComparison c = compare_values(problem, result);
        out.push_back({h, result.vertex_clearance, c.ratio});
    }
    return out;
}

namespace {

ReportRecord agreement_record(const LatticeSpec& spec, const CutProblem& problem,
                              const CutResult& bk, const CutResult& dinic, double tol)
{
    ReportRecord r;
    r.check = "mincut_solver_agreement";
    r.n = spec.cone.n();
    r.lambda = spec.cone.lambda();
    r.statistic = std::max({relative_gap(bk.flow, dinic.flow), relative_gap(bk.value, bk.flow),
                            relative_gap(dinic.value, dinic.flow)});
    r.tolerance = tol;
    r.pass = r.statistic <= tol;
    r.parameters = spec.to_json();
    r.details = {{"bk_flow", bk.flow},
                 {"dinic_flow", dinic.flow},
                 {"bk_cut", bk.value},
                 {"dinic_cut", dinic.value},
                 {"free_nodes", problem.free_nodes()}};
    return r;
}

ReportRecord near_plane_record(const LatticeSpec& spec, const CutResult& result, double spacings)
{
    ReportRecord near;
    near.check = "mincut_facets_near_plane";
    near.n = spec.cone.n();
    near.lambda = spec.cone.lambda();
    near.statistic = result.max_facet_offset;
    near.tolerance = spacings * spec.spacing;
    near.pass = std::isfinite(result.max_facet_offset) && near.statistic <= near.tolerance;
    near.parameters = spec.to_json();
    return near;
}

}  // namespace

VerificationReport run_mincut_suite(const MincutSuiteConfig& cfg)
{
    if (cfg.probe_spacings.size() < 2 ||
        !std::is_sorted(cfg.probe_spacings.rbegin(), cfg.probe_spacings.rend(),
                        std::less_equal<double>())) {
        throw std::invalid_argument("mincut suite: probe spacings must strictly decrease");
    }
    VerificationReport report;

    auto spec_for = [&](int n, double lambda, double h, LatticeMode mode) {
        LatticeSpec spec{ConeParams(n, lambda)};
        spec.radius = cfg.radius;
        spec.shell = cfg.shell;
        spec.spacing = h;
        spec.mode = mode;
        spec.stencil = cfg.stencil;
        return spec;
    };

    // Minimal case.
    {
        const LatticeSpec spec = spec_for(cfg.minimal_n, cfg.minimal_lambda, cfg.minimal_spacing,
                                          LatticeMode::axisymmetric);
        const CutProblem problem = build_lattice(spec);
        const CutResult bk = solve_mincut(problem, MaxFlowSolver::boykov_kolmogorov);
        const CutResult dinic = solve_mincut(problem, MaxFlowSolver::dinic);
        report.records.push_back(compare_to_plane(spec, problem, bk, cfg.tol_h, cfg.instability_margin));
        report.records.push_back(agreement_record(spec, problem, bk, dinic, cfg.solver_agreement));

        report.records.push_back(near_plane_record(spec, bk, cfg.facet_offset_spacings));

        // The plane labeling measured by the lattice against the exact area.
        ReportRecord area;
        area.check = "plane_capacity_vs_area";
        area.n = spec.cone.n();
        area.lambda = spec.cone.lambda();
        const double exact = plane_area(spec.cone, spec.radius);
        area.statistic = std::abs(plane_capacity(problem) - exact);
        area.tolerance = 2.0 * spec.spacing * plane_area_boundary_rate(spec.cone, spec.radius);
        area.pass = area.statistic <= area.tolerance;
        area.parameters = spec.to_json();
        area.details = {{"plane_capacity", plane_capacity(problem)}, {"plane_area", exact}};
        report.records.push_back(area);
    }

    // Contrast: where the plane is minimal the cut keeps passing through the vertex,
    // so the clearance shrinks with the spacing.
    {
        const LatticeSpec spec = spec_for(cfg.minimal_n, cfg.minimal_lambda, cfg.minimal_spacing,
                                          LatticeMode::axisymmetric);
        const auto curve = vertex_skip_probe(spec, cfg.probe_spacings);
        ReportRecord probe;
        probe.check = "vertex_clearance_shrinks";
        probe.n = spec.cone.n();
        probe.lambda = spec.cone.lambda();
        Json points = Json::array();
        double largest_ratio = 0.0;
        for (std::size_t i = 0; i < curve.size(); ++i) {
            points.push_back({{"spacing", curve[i].spacing},
                              {"clearance", finite_or_null(curve[i].clearance)},
                              {"ratio", curve[i].ratio}});
            if (i > 0) {
                largest_ratio = std::max(largest_ratio, curve[i].clearance / curve[i - 1].clearance);
            }
        }
        probe.statistic = largest_ratio;
        probe.tolerance = cfg.clearance_refinement_ratio;
        probe.pass = std::isfinite(largest_ratio) && largest_ratio < probe.tolerance;
        probe.parameters = spec.to_json();
        probe.parameters["spacings"] = cfg.probe_spacings;
        probe.details = {{"curve", points}};
        report.records.push_back(probe);
    }

    // Unstable case and its vertex-skipping probe.
    {
        const LatticeSpec spec = spec_for(cfg.unstable_n, cfg.unstable_lambda,
                                          cfg.unstable_spacing, LatticeMode::axisymmetric);
        const CutProblem problem = build_lattice(spec);
        const CutResult bk = solve_mincut(problem, MaxFlowSolver::boykov_kolmogorov);
        const CutResult dinic = solve_mincut(problem, MaxFlowSolver::dinic);
        report.records.push_back(compare_to_plane(spec, problem, bk, cfg.tol_h, cfg.instability_margin));
        report.records.push_back(agreement_record(spec, problem, bk, dinic, cfg.solver_agreement));

        const auto curve = vertex_skip_probe(spec, cfg.probe_spacings);
        ReportRecord probe;
        probe.check = "vertex_clearance";
        probe.n = spec.cone.n();
        probe.lambda = spec.cone.lambda();
        Json points = Json::array();
        double worst_ratio = std::numeric_limits<double>::infinity();
        for (std::size_t i = 0; i < curve.size(); ++i) {
            points.push_back({{"spacing", curve[i].spacing},
                              {"clearance", finite_or_null(curve[i].clearance)},
                              {"ratio", curve[i].ratio}});
            if (i > 0) {
                worst_ratio = std::min(worst_ratio, curve[i].clearance / curve[i - 1].clearance);
            }
        }
        const ClearancePoint& finest = curve.back();
        const bool far_from_lattice =
            finest.clearance >= cfg.clearance_spacings * finest.spacing;
        probe.statistic = worst_ratio;
        probe.tolerance = cfg.clearance_refinement_ratio;
        probe.pass = std::isfinite(worst_ratio) && worst_ratio >= probe.tolerance && far_from_lattice;
        probe.parameters = spec.to_json();
        probe.parameters["spacings"] = cfg.probe_spacings;
        probe.details = {{"curve", points},
                         {"finest_clearance_in_spacings", finest.clearance / finest.spacing},
                         {"required_spacings", cfg.clearance_spacings}};
        report.records.push_back(probe);

        // Same n = 2 problem on the full 3-d lattice: more competitors, same plane.
        const LatticeSpec full_axis = spec_for(cfg.unstable_n, cfg.unstable_lambda,
                                               cfg.full_mode_spacing, LatticeMode::axisymmetric);
        LatticeSpec full = full_axis;
        full.mode = LatticeMode::full;
        const CutProblem pa = build_lattice(full_axis);
        const CutProblem pf = build_lattice(full);
        const CutResult ra = solve_mincut(pa);
        const CutResult rf = solve_mincut(pf);
        ReportRecord cross;
        cross.check = "full_vs_axisymmetric";
        cross.n = spec.cone.n();
        cross.lambda = spec.cone.lambda();
        cross.statistic = relative_gap(plane_capacity(pa), plane_capacity(pf));
        cross.tolerance = cfg.solver_agreement;
        cross.pass = cross.statistic <= cross.tolerance &&
                     rf.value <= ra.value * (1.0 + cfg.solver_agreement);
        cross.parameters = full.to_json();
        cross.details = {{"axisymmetric_cut", ra.value},
                         {"full_cut", rf.value},
                         {"axisymmetric_plane", plane_capacity(pa)},
                         {"full_plane", plane_capacity(pf)}};
        report.records.push_back(cross);
    }

    for (int n : cfg.exploratory_n) {
        const LatticeSpec spec = spec_for(n, cfg.exploratory_lambda, cfg.exploratory_spacing,
                                          LatticeMode::axisymmetric);
        const CutProblem problem = build_lattice(spec);
        report.records.push_back(compare_to_plane(spec, problem, solve_mincut(problem), cfg.tol_h,
                                                  cfg.instability_margin));
    }
    return report;
}

Json MincutCase::to_json() const
{
    return {{"n", n}, {"lambda", lambda}, {"spacing", spacing}, {"mode", to_string(mode)}};
}

LatticeSpec case_spec(const MincutSuiteConfig& cfg, const MincutCase& c)
{
    LatticeSpec spec{ConeParams(c.n, c.lambda)};
    spec.radius = cfg.radius;
    spec.shell = cfg.shell;
    spec.spacing = c.spacing;
    spec.mode = c.mode;
    spec.stencil = cfg.stencil;
    return spec;
}

VerificationReport run_mincut_cases(const MincutSuiteConfig& cfg,
                                    const std::vector<MincutCase>& cases)
{
    VerificationReport report;
    for (const MincutCase& c : cases) {
        const LatticeSpec spec = case_spec(cfg, c);
        const CutProblem problem = build_lattice(spec);
        const CutResult bk = solve_mincut(problem, MaxFlowSolver::boykov_kolmogorov);
        const CutResult dinic = solve_mincut(problem, MaxFlowSolver::dinic);
        report.records.push_back(compare_to_plane(spec, problem, bk, cfg.tol_h, cfg.instability_margin));
        report.records.push_back(agreement_record(spec, problem, bk, dinic, cfg.solver_agreement));
        if (claim_for(spec.cone) == MinimalityClaim::minimal) {
            report.records.push_back(near_plane_record(spec, bk, cfg.facet_offset_spacings));
        }
    }
    return report;
}

}  // namespace conecal
