// Acceptance run: one PASS/FAIL line per criterion. Every threshold below is pinned
// here and compared against the raw record statistics, so loosening a default in
// the library cannot turn a line green.

#include "conecal/calibration.hpp"
#include "conecal/minimality_lab.hpp"
#include "conecal/verifier.hpp"

#include "brute_force_cut.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <functional>
#include <set>
#include <string>
#include <tuple>
#include <vector>

using namespace conecal;

namespace {

namespace pinned {
constexpr double identity = 1e-12;
constexpr double hodge = 1e-12;
constexpr double hodge_divergence = 1e-6;
constexpr double hodge_step = 1e-4;
constexpr double bisection = 1e-10;
constexpr double norm_bound = 1.0 + 1e-9;
constexpr double hyperplane = 1e-10;
constexpr double tangency = 1e-10;
constexpr double divergence = 1e-6;
constexpr double divergence_step = 1e-4;
constexpr double min_order = 1.9;
constexpr double dual_path = 1e-12;
constexpr double box_order_lo = 1.7;
constexpr double box_order_hi = 2.3;
constexpr double box_flux_fine = 2.5e-5;
constexpr double cone_face = 1e-10;
constexpr double tube_slope_slack = 0.1;
constexpr double minimal_ratio = 0.95;
constexpr double facet_spacings = 2.0;
constexpr double solver_agreement = 1e-9;
constexpr double brute_force = 1e-12;
constexpr double unstable_ratio = 0.99;
constexpr double metric_fault = 1e-6;

constexpr double runtime_identities = 60.0;
constexpr double runtime_hodge = 60.0;
constexpr double runtime_threshold = 1.0;
constexpr double runtime_calibration = 600.0;
constexpr double runtime_dual_path = 60.0;
constexpr double runtime_flux = 300.0;
constexpr double runtime_minimal = 900.0;
constexpr double runtime_unstable = 600.0;
}  // namespace pinned

struct Line {
    int id;
    std::string title;
    bool pass;
    std::string detail;
};

std::vector<Line> lines;

void report_line(int id, const std::string& title, bool pass, const std::string& detail)
{
    lines.push_back({id, title, pass, detail});
    std::printf("[%s] %d. %s: %s\n", pass ? "PASS" : "FAIL", id, title.c_str(), detail.c_str());
    std::fflush(stdout);
}

std::string fmt(const char* format, ...) __attribute__((format(printf, 1, 2)));
std::string fmt(const char* format, ...)
{
    char buf[512];
    va_list args;
    va_start(args, format);
    std::vsnprintf(buf, sizeof buf, format, args);
    va_end(args);
    return buf;
}

template <class F>
double timed(F&& f)
{
    const auto start = std::chrono::steady_clock::now();
    f();
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

std::vector<const ReportRecord*> select(const VerificationReport& r, const std::string& check)
{
    std::vector<const ReportRecord*> out;
    for (const ReportRecord& rec : r.records) {
        if (rec.check == check) {
            out.push_back(&rec);
        }
    }
    return out;
}

// Largest statistic over the records of one check; fails on an empty selection.
struct Worst {
    double value = 0.0;
    std::size_t count = 0;
    bool ok = true;
};

Worst worst_below(const VerificationReport& r, const std::string& check, double bound)
{
    Worst w;
    for (const ReportRecord* rec : select(r, check)) {
        w.value = std::max(w.value, rec->statistic);
        w.ok = w.ok && std::isfinite(rec->statistic) && rec->statistic < bound;
        ++w.count;
    }
    w.ok = w.ok && w.count > 0;
    return w;
}

// ---------------------------------------------------------------------------

VerificationReport identity_report;
double identity_seconds = 0.0;

void criteria_1_and_2()
{
    IdentitySuiteConfig cfg;
    cfg.n_values = {2, 3, 4, 5, 6, 7};
    cfg.lambdas = {0.1, 0.5, 1.0, 2.0};
    cfg.samples = 10000;
    cfg.hodge_pairs = 100;
    cfg.step = pinned::hodge_step;
    identity_seconds = timed([&] { identity_report = run_identity_suite(cfg); });
    const std::size_t cells = cfg.n_values.size() * cfg.lambdas.size();

    bool ok = true;
    double worst = 0.0;
    for (const char* check :
         {"metric_det", "drho_norm", "dtheta_norm", "drho_dtheta_inner", "psi0_norm"}) {
        const Worst w = worst_below(identity_report, check, pinned::identity);
        ok = ok && w.ok && w.count == cells;
        worst = std::max(worst, w.value);
    }
    ok = ok && identity_seconds < pinned::runtime_identities;
    report_line(1, "metric identities", ok,
                fmt("%zu (n, lambda) cells x 1e4 points, worst %.2e < %.0e; %.1f s (suite incl. "
                    "Hodge) < %.0f s",
                    cells, worst, pinned::identity, identity_seconds,
                    pinned::runtime_identities));

    bool hok = true;
    double hworst = 0.0;
    for (const char* check :
         {"star_involution", "star_isometry", "star_volume", "star_flat_contraction"}) {
        const Worst w = worst_below(identity_report, check, pinned::hodge);
        hok = hok && w.ok && w.count == cells;
        hworst = std::max(hworst, w.value);
    }
    const Worst div = worst_below(identity_report, "star_d_contraction_divergence",
                                  pinned::hodge_divergence);
    hok = hok && div.ok && div.count == cells && identity_seconds < pinned::runtime_hodge;
    report_line(2, "Hodge identities", hok,
                fmt("100 pairs per cell, algebraic worst %.2e < %.0e; star d i_X nu vs div X "
                    "worst %.2e < %.0e at step %.0e",
                    hworst, pinned::hodge, div.value, pinned::hodge_divergence,
                    pinned::hodge_step));
}

VerificationReport threshold_report;

void criterion_3()
{
    ThresholdSuiteConfig cfg;
    cfg.n_values = {3, 4, 5, 6, 7, 8, 9, 10};
    cfg.tol = pinned::bisection;
    const double seconds = timed([&] { threshold_report = run_threshold_suite(cfg); });

    bool ok = true;
    double worst = 0.0;
    std::set<int> bisected;
    std::set<int> certified;
    for (const ReportRecord* r : select(threshold_report, "threshold_bisect")) {
        ok = ok && r->statistic <= pinned::bisection;
        worst = std::max(worst, r->statistic);
        bisected.insert(r->n);
    }
    for (const ReportRecord* r : select(threshold_report, "boundary_certificate")) {
        // Exact rational value of the feasibility polynomial at (lambda_bar, n - 3).
        ok = ok && r->statistic == 0.0 && r->gamma && *r->gamma == r->n - 3;
        certified.insert(r->n);
    }
    const std::set<int> expected{4, 5, 6, 7, 8, 9, 10};
    ok = ok && bisected == expected && certified == expected;
    const auto range = select(threshold_report, "threshold_range");
    const bool empty_n3 = range.size() == 1 && range[0]->n == 3 && range[0]->pass.value_or(false);
    ok = ok && empty_n3 && seconds < pinned::runtime_threshold;
    report_line(3, "threshold sharpness", ok,
                fmt("bisection worst %.2e <= %.0e for n=4..10; exact certificate = 0 for %zu n; "
                    "n=3 empty range: %s; %.3f s < %.0f s",
                    worst, pinned::bisection, certified.size(), empty_n3 ? "yes" : "no", seconds,
                    pinned::runtime_threshold));
}

void criteria_4_and_5()
{
    CalibrationSuiteConfig cfg;
    cfg.n_values = {4, 5, 6, 7};
    cfg.lambda_factors = {0.5, 1.0};
    cfg.samples = 100000;
    cfg.divergence_samples = 10000;
    cfg.dual_path_samples = 1000;
    cfg.steps = {10.0 * pinned::divergence_step, pinned::divergence_step};
    cfg.rho_min = 0.1;
    cfg.rho_max = 10.0;
    cfg.r_min_rel = 1e-3;
    VerificationReport report;
    const double seconds = timed([&] { report = run_calibration_suite(cfg); });
    const std::size_t cells = cfg.n_values.size() * cfg.lambda_factors.size();

    const Worst norm = worst_below(report, "norm_bound", std::nextafter(pinned::norm_bound, 2.0));
    const Worst hyper = worst_below(report, "hyperplane_e1", pinned::hyperplane);
    const Worst tang = worst_below(report, "surface_tangency", pinned::tangency);
    const Worst div = worst_below(report, "divergence", pinned::divergence);
    double min_order = 1e300;
    for (const ReportRecord* r : select(report, "divergence")) {
        min_order = std::min(min_order, r->order.value_or(-1.0));
    }
    const bool ok = norm.ok && norm.count == cells && hyper.ok && hyper.count == cells &&
                    tang.ok && tang.count == cells && div.ok && div.count == cells &&
                    min_order >= pinned::min_order && seconds < pinned::runtime_calibration;
    report_line(4, "calibration field", ok,
                fmt("%zu cells x 1e5 samples: max|Z| %.12f; |Z-e1| %.1e; |<Z,nu>| %.1e; "
                    "r|div Z| %.1e at step %.0e, order >= %.3f; %.1f s < %.0f s",
                    cells, norm.value, hyper.value, tang.value, div.value,
                    pinned::divergence_step, min_order, seconds, pinned::runtime_calibration));

    // The dual path is timed on its own, with the same plans as the suite.
    bool dok = true;
    double dworst = 0.0;
    double dorder = 1e300;
    std::size_t dcount = 0;
    const double dseconds = timed([&] {
        for (int n : cfg.n_values) {
            for (double factor : cfg.lambda_factors) {
                const ConeParams cone(n, factor * lambda_bar(n));
                const CalibrationParams params = CalibrationParams::with_default_gamma(cone);
                SamplePlan plan{cone, SampleRegion::interior, 0.1, 10.0, 1e-3};
                plan.count = 1000;
                plan.seed = derive_seed(cfg.seed, "acceptance/dual/" + std::to_string(n) + "/" +
                                                      std::to_string(factor));
                Tolerances tol;
                tol.dual_path = pinned::dual_path;
                tol.numeric_d_min_order = pinned::min_order;
                const ReportRecord r = check_dual_path(plan, params, {1e-3, 1e-4}, tol);
                dworst = std::max(dworst, r.statistic);
                dorder = std::min(dorder, r.order.value_or(-1.0));
                dok = dok && r.statistic <= pinned::dual_path && r.pass.value_or(false);
                ++dcount;
            }
        }
    });
    dok = dok && dcount == cells && dorder >= pinned::min_order &&
          dseconds < pinned::runtime_dual_path;
    report_line(5, "dual-path omega_h", dok,
                fmt("%zu cells x 1e3 points: closed vs product rule %.2e <= %.0e; numeric d "
                    "order >= %.3f; %.1f s < %.0f s",
                    dcount, dworst, pinned::dual_path, dorder, dseconds,
                    pinned::runtime_dual_path));
}

void criterion_6()
{
    FluxSuiteConfig cfg;
    cfg.tube_n_values = {4, 5};
    cfg.tube_eps = {0.2, 0.1, 0.05};
    VerificationReport report;
    const double seconds = timed([&] { report = run_flux_suite(cfg); });

    const auto boxes = select(report, "box_flux");
    bool box_ok = boxes.size() >= 2;
    double box_fine = 0.0;
    double box_order = 0.0;
    if (box_ok) {
        box_fine = boxes.back()->statistic;
        box_order = boxes.back()->order.value_or(0.0);
        box_ok = boxes.back()->statistic < boxes.front()->statistic &&
                 box_fine <= pinned::box_flux_fine && box_order >= pinned::box_order_lo &&
                 box_order <= pinned::box_order_hi;
    }
    const Worst face = worst_below(report, "prism_cone_face", pinned::cone_face);
    bool slope_ok = true;
    std::string slopes;
    std::set<int> seen;
    for (const ReportRecord* r : select(report, "tube_flux_slope")) {
        slope_ok = slope_ok && r->statistic >= (r->n - 2) - pinned::tube_slope_slack;
        slopes += fmt(" n=%d:%.3f", r->n, r->statistic);
        seen.insert(r->n);
    }
    slope_ok = slope_ok && seen == std::set<int>{4, 5};
    const bool ok = box_ok && face.ok && slope_ok && seconds < pinned::runtime_flux;
    report_line(6, "flux suite", ok,
                fmt("box flux %.2e order %.3f in [%.1f, %.1f]; cone face %.1e <= %.0e; tube "
                    "slopes%s (>= n-2-%.1f); %.1f s < %.0f s",
                    box_fine, box_order, pinned::box_order_lo, pinned::box_order_hi, face.value,
                    pinned::cone_face, slopes.c_str(), pinned::tube_slope_slack, seconds,
                    pinned::runtime_flux));
}

void criteria_7_and_8()
{
    MincutSuiteConfig cfg;
    cfg.radius = 1.0;
    cfg.minimal_n = 4;
    cfg.minimal_lambda = 0.3;
    cfg.minimal_spacing = 0.02;
    cfg.unstable_n = 2;
    cfg.unstable_lambda = 1.0;
    cfg.unstable_spacing = 0.02;
    cfg.probe_spacings = {0.08, 0.04, 0.02};

    // Minimal case, both solvers.
    bool ok7 = false;
    std::string d7;
    const double s7 = timed([&] {
        const MincutCase c{cfg.minimal_n, cfg.minimal_lambda, cfg.minimal_spacing,
                           LatticeMode::axisymmetric};
        const LatticeSpec spec = case_spec(cfg, c);
        const CutProblem p = build_lattice(spec);
        const CutResult bk = solve_mincut(p, MaxFlowSolver::boykov_kolmogorov);
        const CutResult dinic = solve_mincut(p, MaxFlowSolver::dinic);
        const double plane = plane_capacity(p);
        const double ratio = bk.value / plane;
        const double gap = std::max({relative_gap(bk.flow, dinic.flow),
                                     relative_gap(bk.value, bk.flow),
                                     relative_gap(dinic.value, dinic.flow)});
        const bool near = std::isfinite(bk.max_facet_offset) &&
                          bk.max_facet_offset <= pinned::facet_spacings * spec.spacing;

        // Exhaustive enumeration on tiny lattices.
        double brute_gap = 0.0;
        int brute_cases = 0;
        int max_free = 0;
        for (const auto& [n, lambda, h] : std::vector<std::tuple<int, double, double>>{
                 {2, 1.0, 0.2}, {3, 0.3, 0.25}, {4, 0.3, 0.25}}) {
            for (Stencil st : {Stencil::axis, Stencil::crofton26}) {
                LatticeSpec tiny{ConeParams(n, lambda)};
                tiny.spacing = h;
                tiny.shell = 1.05 * h;
                tiny.stencil = st;
                const CutProblem tp = build_lattice(tiny);
                max_free = std::max(max_free, tp.free_nodes());
                const double oracle = conecal::testing::brute_force_mincut(tp);
                for (MaxFlowSolver s : {MaxFlowSolver::boykov_kolmogorov, MaxFlowSolver::dinic}) {
                    brute_gap = std::max(brute_gap, relative_gap(solve_mincut(tp, s).value, oracle));
                }
                ++brute_cases;
            }
        }
        ok7 = ratio >= pinned::minimal_ratio && near && gap <= pinned::solver_agreement &&
              brute_gap <= pinned::brute_force && max_free <= 20;
        d7 = fmt("n=4 lambda=0.3 h=0.02 (%d free cells): ratio %.6f >= %.2f; facets within "
                 "%.3g <= 2h; BK vs Dinic %.1e <= %.0e; brute force on %d lattices (<= %d free "
                 "cells) gap %.1e",
                 p.free_nodes(), ratio, pinned::minimal_ratio, bk.max_facet_offset, gap,
                 pinned::solver_agreement, brute_cases, max_free, brute_gap);
    });
    report_line(7, "discrete minimality", ok7 && s7 < pinned::runtime_minimal,
                d7 + fmt("; %.1f s < %.0f s", s7, pinned::runtime_minimal));

    // Unstable case and its clearance curve.
    bool ok8 = false;
    std::string d8;
    const double s8 = timed([&] {
        const MincutCase c{cfg.unstable_n, cfg.unstable_lambda, cfg.unstable_spacing,
                           LatticeMode::axisymmetric};
        const LatticeSpec spec = case_spec(cfg, c);
        const CutProblem p = build_lattice(spec);
        const CutResult r = solve_mincut(p);
        const double ratio = r.value / plane_capacity(p);
        const auto curve = vertex_skip_probe(spec, cfg.probe_spacings);
        double worst_ratio = 1e300;
        std::string points;
        for (std::size_t i = 0; i < curve.size(); ++i) {
            points += fmt(" h=%.2f:%.3f", curve[i].spacing, curve[i].clearance);
            if (i > 0) {
                worst_ratio = std::min(worst_ratio, curve[i].clearance / curve[i - 1].clearance);
            }
        }
        // Bounded below: no refinement step shrinks the clearance by 2^{-1/2} or more
        // (a cut through the vertex halves it), and the finest clearance is >= 3h.
        const bool bounded = std::isfinite(worst_ratio) && worst_ratio >= std::sqrt(0.5) &&
                             curve.back().clearance >= 3.0 * curve.back().spacing;
        ok8 = ratio < pinned::unstable_ratio && bounded;
        d8 = fmt("n=2 lambda=1 h=0.02: ratio %.6f < %.2f; clearance%s (min refinement ratio "
                 "%.3f >= 0.707)",
                 ratio, pinned::unstable_ratio, points.c_str(), worst_ratio);
    });
    report_line(8, "instability control", ok8 && s8 < pinned::runtime_unstable,
                d8 + fmt("; %.1f s < %.0f s", s8, pinned::runtime_unstable));
}

void criterion_9()
{
    bool gamma_ok = true;
    int gamma_cases = 0;
    double min_lhs = 1e300;
    for (const ReportRecord* r : select(threshold_report, "feasibility_negative_control")) {
        gamma_ok = gamma_ok && r->statistic > 0.0 && r->gamma &&
                   std::abs(*r->gamma - 2.0 * (r->n - 3)) < 1e-12;
        min_lhs = std::min(min_lhs, r->statistic);
        ++gamma_cases;
    }
    gamma_ok = gamma_ok && gamma_cases == 7;

    IdentitySuiteConfig cfg;
    cfg.n_values = {4};
    cfg.lambdas = {0.5};
    cfg.samples = 1000;
    cfg.hodge_pairs = 20;
    cfg.metric_fault = pinned::metric_fault;
    const VerificationReport faulty = run_identity_suite(cfg);
    std::set<std::string> failing;
    for (const ReportRecord* r : faulty.failures()) {
        failing.insert(r->check);
    }
    // The fault sits in g^{-1}: that record fails, while det g and the frame Gram matrix,
    // computed from g itself, stay clean.
    auto passes = [&](const char* check) {
        const auto recs = select(faulty, check);
        return recs.size() == 1 && recs[0]->pass.value_or(false);
    };
    const bool pinpointed = !faulty.all_passed() && failing.count("metric_inverse") &&
                            passes("metric_det") && passes("frame_gram");
    report_line(9, "negative controls", gamma_ok && pinpointed,
                fmt("gamma = 2 gamma_bar at lambda_bar: lhs > 0 for %d n (min %.3g); metric "
                    "fault %.0e: %zu failing records incl. metric_inverse=%s, metric_det and "
                    "frame_gram pass=%s",
                    gamma_cases, min_lhs, pinned::metric_fault, failing.size(),
                    failing.count("metric_inverse") ? "yes" : "no",
                    passes("metric_det") && passes("frame_gram") ? "yes" : "no"));
}

}  // namespace

int main()
{
    const std::vector<std::pair<const char*, std::function<void()>>> steps = {
        {"1-2", criteria_1_and_2}, {"3", criterion_3},      {"4-5", criteria_4_and_5},
        {"6", criterion_6},        {"7-8", criteria_7_and_8}, {"9", criterion_9},
    };
    for (const auto& [name, step] : steps) {
        try {
            step();
        } catch (const std::exception& e) {
            std::printf("[FAIL] criteria %s: exception: %s\n", name, e.what());
            lines.push_back({0, name, false, e.what()});
        }
    }
    const auto failed = std::count_if(lines.begin(), lines.end(), [](const Line& l) { return !l.pass; });
    std::printf("acceptance: %zu lines, %ld failed\n", lines.size(), static_cast<long>(failed));
    return failed == 0 && lines.size() == 9 ? 0 : 1;
}
