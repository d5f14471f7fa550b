#pragma once

#include "conecal/verifier.hpp"

#include <array>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace conecal {

// ---------------------------------------------------------------------------
// Lattice discretization of the relative perimeter in Omega_lambda n B_R
// ---------------------------------------------------------------------------

enum class LatticeMode {
    /// Cells in (x_1, r, t), r = |x'|; facets weighted by |S^{n-2}| r^{n-2}.
    axisymmetric,
    /// Unit-weight cells in all n+1 coordinates.
    full,
};

enum class BoundaryData {
    /// Shell cells go to the source when x_1 > 0 and to the sink when x_1 < 0.
    split,
    /// Every shell cell goes to the source.
    all_source,
};

/// Neighborhood of the cut graph.
enum class Stencil {
    /// Face neighbors only: measures the axis-aligned plane exactly and
    /// over-counts a surface with unit normal m by |m|_1.
    axis,
    /// All 26 neighbors of a 3-d lattice with Cauchy-Crofton weights, scaled so
    /// that axis-aligned planes are still measured exactly.
    crofton26,
};

const char* to_string(LatticeMode mode);
const char* to_string(BoundaryData data);
const char* to_string(Stencil stencil);

/// Cost per unit area that the stencil assigns to a plane with normal m; only the
/// direction of m matters.
double stencil_plane_cost(Stencil stencil, const Vector& m);

struct LatticeSpec {
    ConeParams cone;
    double radius = 1.0;
    double spacing = 0.02;
    LatticeMode mode = LatticeMode::axisymmetric;
    /// Cells with center in R - shell < |(x, t)| < R are wired to a terminal.
    double shell = 0.1;
    BoundaryData boundary = BoundaryData::split;
    Stencil stencil = Stencil::axis;

    /// Throws std::invalid_argument unless 0 < spacing < shell < radius, or when
    /// crofton26 is requested on a lattice that is not 3-dimensional.
    void validate() const;
    Json to_json() const;
};

/// Where an arc's facet sits: x_1 of the arc midpoint and its distance to the vertex.
struct FacetGeometry {
    double x1 = 0.0;
    double distance = 0.0;
};

/// Undirected arc; both directions carry `capacity`.
struct CutArc {
    int u = 0;
    int v = 0;
    double capacity = 0.0;
};

/// Shell cells are contracted into node 0 (source) and node 1 (sink); lattice
/// cells outside the shell are nodes 2, 3, ... Cells outside the cone do not
/// exist, so a cut can end on S_lambda at no cost.
struct CutProblem {
    static constexpr int kSource = 0;
    static constexpr int kSink = 1;

    int node_count = 2;
    std::vector<CutArc> arcs;
    /// Empty for a problem read back from a dump; otherwise one entry per arc.
    std::vector<FacetGeometry> facets;
    /// (x_1, r, t) of each node center (NaN for the terminals); empty when loaded
    /// from a dump.
    std::vector<std::array<double, 3>> node_position;
    double spacing = 0.0;

    int free_nodes() const { return node_count - 2; }
    bool has_geometry() const { return !facets.empty(); }
    /// Sum of capacities of arcs whose ends carry different labels.
    double labeling_capacity(const std::vector<std::uint8_t>& source_side) const;
};

/// Throws std::domain_error if no free cell survives (spacing too coarse).
CutProblem build_lattice(const LatticeSpec& spec);

/// Capacity of the labeling {x_1 > 0}.
double plane_capacity(const CutProblem& problem);

/// |S^k|.
double sphere_area(int k);

/// H^n(H_lambda n B_R) = |S^{n-2}| R^n / n * int_{atan lambda}^{pi/2} cos^{n-2}.
double plane_area(const ConeParams& cone, double radius);

/// Length of the boundary of the (r, t) cross-section of H_lambda n B_R along the
/// cone and the sphere, weighted by |S^{n-2}| r^{n-2}: the first-order change of
/// plane_area under a unit normal offset of that boundary.
double plane_area_boundary_rate(const ConeParams& cone, double radius);

// ---------------------------------------------------------------------------
// Max-flow / min-cut
// ---------------------------------------------------------------------------

enum class MaxFlowSolver { boykov_kolmogorov, dinic };

const char* to_string(MaxFlowSolver solver);

struct CutResult {
    std::string solver;
    /// Max-flow value reported by the solver.
    double flow = 0.0;
    /// Capacity of the extracted cut; equals flow up to rounding.
    double value = 0.0;
    std::vector<std::uint8_t> source_side;
    std::vector<int> cut_arcs;
    /// min distance of a cut facet to the vertex; NaN without geometry or cut.
    double vertex_clearance = 0.0;
    /// max |x_1| over cut facets; NaN without geometry or cut.
    double max_facet_offset = 0.0;
    /// Free nodes with no path of positive capacity to either terminal.
    int unreachable_nodes = 0;
};

/// The source side is everything reachable from the source in the residual graph.
CutResult solve_mincut(const CutProblem& problem,
                       MaxFlowSolver solver = MaxFlowSolver::boykov_kolmogorov);

/// |a - b| / max(|a|, |b|, tiny).
double relative_gap(double a, double b);

// ---------------------------------------------------------------------------
// Problem dump: "conecal-cut-problem 1", then "nodes N", "terminals s t",
// "arcs M" and M lines "u v capacity".
// ---------------------------------------------------------------------------

void dump_problem(const CutProblem& problem, std::ostream& out);
/// Throws std::runtime_error on malformed input.
CutProblem load_problem(std::istream& in);

// ---------------------------------------------------------------------------
// Experiments
// ---------------------------------------------------------------------------

enum class MinimalityClaim {
    /// n >= 4 and lambda <= lambda_bar(n): the plane should not be beaten.
    minimal,
    /// n = 2: the plane should be beaten.
    unstable,
    /// Anything else: data only.
    exploratory,
};

MinimalityClaim claim_for(const ConeParams& cone);

struct PlaneComparison {
    double value = 0.0;
    double plane = 0.0;
    double ratio = 0.0;
    double vertex_clearance = 0.0;
    double max_facet_offset = 0.0;
};

PlaneComparison compare_values(const CutProblem& problem, const CutResult& result);

/// Record "mincut_vs_plane". minimal: pass iff ratio >= 1 - tol_h. unstable: pass
/// iff ratio < 1 - margin. exploratory: informational.
ReportRecord compare_to_plane(const LatticeSpec& spec, const CutProblem& problem,
                              const CutResult& result, double tol_h, double margin);

struct ClearancePoint {
    double spacing = 0.0;
    double clearance = 0.0;
    double ratio = 0.0;
};

/// Re-solves the spec at each spacing.
std::vector<ClearancePoint> vertex_skip_probe(const LatticeSpec& base,
                                              const std::vector<double>& spacings);

struct MincutSuiteConfig {
    double radius = 1.0;
    double shell = 0.1;
    int minimal_n = 4;
    double minimal_lambda = 0.3;
    double minimal_spacing = 0.02;
    int unstable_n = 2;
    double unstable_lambda = 1.0;
    double unstable_spacing = 0.02;
    std::vector<double> probe_spacings{0.08, 0.04, 0.02};
    /// Full-mode cross-check of the axisymmetric weights at n = 2.
    double full_mode_spacing = 1.0 / 24.0;
    std::vector<int> exploratory_n{3};
    double exploratory_lambda = 0.3;
    double exploratory_spacing = 0.04;
    /// Relative ratio slack for the minimal case.
    double tol_h = 0.05;
    /// The unstable case must beat the plane by this relative margin.
    double instability_margin = 0.01;
    /// Cut facets of the minimal case must lie within this many spacings of x_1 = 0.
    double facet_offset_spacings = 2.0;
    /// The clearance at the finest probe spacing, in spacings, must exceed this.
    double clearance_spacings = 3.0;
    /// Each halving of the spacing may shrink the clearance by at most this factor.
    /// A cut through the vertex has clearance O(h) and shrinks by 1/2 per halving.
    double clearance_refinement_ratio = 0.7071067811865476;
    Stencil stencil = Stencil::crofton26;
    double solver_agreement = 1e-9;
    std::uint64_t seed = 1;
};

VerificationReport run_mincut_suite(const MincutSuiteConfig& config);

/// A single lattice experiment; radius, shell and stencil come from the suite config.
struct MincutCase {
    int n = 4;
    double lambda = 0.3;
    double spacing = 0.02;
    LatticeMode mode = LatticeMode::axisymmetric;

    Json to_json() const;
};

LatticeSpec case_spec(const MincutSuiteConfig& config, const MincutCase& c);

/// Per case: "mincut_vs_plane" with the semantics of claim_for, "mincut_solver_agreement",
/// and for minimal cases "mincut_facets_near_plane".
VerificationReport run_mincut_cases(const MincutSuiteConfig& config,
                                    const std::vector<MincutCase>& cases);

}  // namespace conecal
