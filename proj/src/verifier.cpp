#include "conecal/verifier.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <random>
#include <sstream>
#include <stdexcept>

namespace conecal {

// ---------------------------------------------------------------------------
// Sampling
// ---------------------------------------------------------------------------

const char* to_string(SampleRegion region)
{
    switch (region) {
    case SampleRegion::interior:
        return "interior";
    case SampleRegion::surface:
        return "surface";
    case SampleRegion::hyperplane:
        return "hyperplane";
    }
    return "unknown";
}

void SamplePlan::validate() const
{
    if (!(rho_min > 0.0) || !(rho_max >= rho_min)) {
        throw std::invalid_argument("SamplePlan: need 0 < rho_min <= rho_max");
    }
    if (!(r_min_rel > 0.0) || !(r_min_rel <= 1.0)) {
        throw std::invalid_argument("SamplePlan: axis clearance must lie in (0, 1]");
    }
    if (count < 1) {
        throw std::invalid_argument("SamplePlan: count must be >= 1");
    }
}

Json SamplePlan::to_json() const
{
    return {{"region", to_string(region)}, {"rho_min", rho_min}, {"rho_max", rho_max},
            {"r_min_rel", r_min_rel},      {"count", count},     {"seed", seed}};
}

std::vector<AmbientPoint> draw_samples(const SamplePlan& plan)
{
    plan.validate();
    const int n = plan.cone.n();
    std::mt19937_64 rng(plan.seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::normal_distribution<double> gauss;
    const double theta_max = std::acos(plan.r_min_rel);
    const double log_lo = std::log(plan.rho_min);
    const double log_span = std::log(plan.rho_max) - log_lo;
    const double lambda = plan.cone.lambda();

    std::vector<AmbientPoint> out;
    out.reserve(static_cast<std::size_t>(plan.count));
    Vector dir(n - 1);
    for (int s = 0; s < plan.count; ++s) {
        const double rho = std::exp(log_lo + log_span * unit(rng));
        double theta = (2.0 * unit(rng) - 1.0) * theta_max;
        if (plan.region == SampleRegion::hyperplane) {
            theta = 0.0;
        }
        do {
            for (int i = 0; i < n - 1; ++i) {
                dir[i] = gauss(rng);
            }
        } while (dir.norm() < 1e-12);
        dir.normalize();
        const double lift = 0.01 + 2.0 * unit(rng);

        Vector x(n);
        x[0] = rho * std::sin(theta);
        x.tail(n - 1) = rho * std::cos(theta) * dir;
        const double surface_t = lambda * x.norm();
        double t = surface_t;
        switch (plan.region) {
        case SampleRegion::interior:
            t = surface_t + rho * lift;
            break;
        case SampleRegion::surface:
            break;
        case SampleRegion::hyperplane:
            t = (s % 2 == 0) ? surface_t : surface_t + rho * lift;
            break;
        }
        out.push_back({std::move(x), t});
    }
    return out;
}

std::uint64_t derive_seed(std::uint64_t base, std::string_view tag)
{
    // FNV-1a over the tag, folded into a splitmix64 step of the base.
    std::uint64_t h = 1469598103934665603ull;
    for (char c : tag) {
        h ^= static_cast<unsigned char>(c);
        h *= 1099511628211ull;
    }
    std::uint64_t z = base + 0x9e3779b97f4a7c15ull + h;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
}

// ---------------------------------------------------------------------------
// Tolerances and reports
// ---------------------------------------------------------------------------

#define CONECAL_TOLERANCE_FIELDS(X)                                                               \
    X(identity)                                                                                   \
    X(hodge_divergence)                                                                           \
    X(norm_slack)                                                                                 \
    X(feasibility_slack)                                                                          \
    X(hyperplane)                                                                                 \
    X(tangency)                                                                                   \
    X(vertical)                                                                                   \
    X(divergence)                                                                                 \
    X(divergence_min_order)                                                                       \
    X(dual_path)                                                                                  \
    X(numeric_d_min_order)                                                                        \
    X(numeric_d_floor)                                                                            \
    X(box_flux_coarse)                                                                            \
    X(box_flux_fine)                                                                              \
    X(box_order_band)                                                                             \
    X(cone_face)                                                                                  \
    X(control_flux)                                                                               \
    X(tube_slope_slack)                                                                           \
    X(area_slope)                                                                                 \
    X(tube_ratio_slack)                                                                           \
    X(threshold)

Json Tolerances::to_json() const
{
    Json j = Json::object();
#define X(name) j[#name] = name;
    CONECAL_TOLERANCE_FIELDS(X)
#undef X
    return j;
}

Tolerances Tolerances::from_json(const Json& j)
{
    Tolerances t;
    if (!j.is_object()) {
        throw std::invalid_argument("tolerances: expected an object");
    }
    for (const auto& [key, value] : j.items()) {
        bool known = false;
#define X(name)                                                                                   \
    if (key == #name) {                                                                           \
        t.name = value.get<double>();                                                             \
        known = true;                                                                             \
    }
        CONECAL_TOLERANCE_FIELDS(X)
#undef X
        if (!known) {
            throw std::invalid_argument("tolerances: unknown key '" + key + "'");
        }
    }
    return t;
}

#undef CONECAL_TOLERANCE_FIELDS

Json ReportRecord::to_json() const
{
    Json j;
    j["check"] = check;
    j["n"] = n;
    j["lambda"] = lambda;
    j["gamma"] = gamma ? Json(*gamma) : Json(nullptr);
    j["statistic"] = statistic;
    j["tolerance"] = tolerance;
    j["order"] = order ? Json(*order) : Json(nullptr);
    j["pass"] = pass ? Json(*pass) : Json(nullptr);
    j["seed"] = seed;
    j["parameters"] = parameters;
    j["details"] = details;
    return j;
}

bool VerificationReport::all_passed() const
{
    return failures().empty();
}

std::vector<const ReportRecord*> VerificationReport::failures() const
{
    std::vector<const ReportRecord*> out;
    for (const ReportRecord& r : records) {
        if (r.pass.has_value() && !*r.pass) {
            out.push_back(&r);
        }
    }
    return out;
}

void VerificationReport::append(const VerificationReport& other)
{
    records.insert(records.end(), other.records.begin(), other.records.end());
}

Json VerificationReport::to_json() const
{
    Json j;
    j["schema_version"] = kSchemaVersion;
    j["config"] = config;
    Json recs = Json::array();
    for (const ReportRecord& r : records) {
        recs.push_back(r.to_json());
    }
    j["records"] = std::move(recs);
    int passed = 0;
    int failed = 0;
    int informational = 0;
    for (const ReportRecord& r : records) {
        if (!r.pass) {
            ++informational;
        } else if (*r.pass) {
            ++passed;
        } else {
            ++failed;
        }
    }
    j["summary"] = {{"passed", passed}, {"failed", failed}, {"informational", informational}};
    j["environment"] = environment;
    return j;
}

namespace {

std::string fmt_double(double v)
{
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

}  // namespace

std::string VerificationReport::to_csv() const
{
    std::ostringstream out;
    out << "check,n,lambda,gamma,statistic,tolerance,order,pass,seed\n";
    for (const ReportRecord& r : records) {
        out << r.check << ',' << r.n << ',' << fmt_double(r.lambda) << ','
            << (r.gamma ? fmt_double(*r.gamma) : "") << ',' << fmt_double(r.statistic) << ','
            << fmt_double(r.tolerance) << ',' << (r.order ? fmt_double(*r.order) : "") << ','
            << (r.pass ? (*r.pass ? "true" : "false") : "") << ',' << r.seed << '\n';
    }
    return out.str();
}

// ---------------------------------------------------------------------------
// Pointwise checks
// ---------------------------------------------------------------------------

AmbientField calibration_field(const CalibrationParams& params)
{
    return [params](const AmbientPoint& p) { return Z_at(p, params); };
}

namespace {

ReportRecord make_record(std::string check, const SamplePlan& plan, const CalibrationParams& params)
{
    ReportRecord r;
    r.check = std::move(check);
    r.n = params.cone.n();
    r.lambda = params.cone.lambda();
    r.gamma = params.gamma;
    r.seed = plan.seed;
    r.parameters = plan.to_json();
    return r;
}

void require_region(const SamplePlan& plan, SampleRegion region, const char* who)
{
    if (plan.region != region) {
        throw std::invalid_argument(std::string(who) + ": expects a " + to_string(region) +
                                    " sample plan");
    }
}

Json point_json(const AmbientPoint& p)
{
    Json x = Json::array();
    for (Eigen::Index i = 0; i < p.x.size(); ++i) {
        x.push_back(p.x[i]);
    }
    return {{"x", x}, {"t", p.t}};
}

}  // namespace

ReportRecord check_norm_bound(const SamplePlan& plan, const CalibrationParams& params,
                              const Tolerances& tol)
{
    require_region(plan, SampleRegion::interior, "check_norm_bound");
    ReportRecord r = make_record("norm_bound", plan, params);
    double worst = -1.0;
    AmbientPoint where;
    for (const AmbientPoint& p : draw_samples(plan)) {
        const double z = Z_at(p, params).norm();
        if (z > worst) {
            worst = z;
            where = p;
        }
    }
    const double lhs = feasibility(params.cone, params.gamma).lhs;
    r.statistic = worst;
    r.tolerance = 1.0 + tol.norm_slack;
    if (lhs <= tol.feasibility_slack) {
        r.pass = worst <= r.tolerance;
    }
    r.details = {{"feasibility_lhs", lhs}, {"maximizer", point_json(where)}};
    return r;
}

ReportRecord check_hyperplane(const SamplePlan& plan, const CalibrationParams& params,
                              const Tolerances& tol)
{
    require_region(plan, SampleRegion::hyperplane, "check_hyperplane");
    ReportRecord r = make_record("hyperplane_e1", plan, params);
    const int n = params.cone.n();
    Vector e1 = Vector::Zero(n + 1);
    e1[0] = 1.0;
    double worst = 0.0;
    double worst_norm = 0.0;
    for (const AmbientPoint& p : draw_samples(plan)) {
        const Vector z = Z_at(p, params);
        worst = std::max(worst, (z - e1).norm());
        worst_norm = std::max(worst_norm, std::abs(z.norm() - 1.0));
    }
    r.statistic = worst;
    r.tolerance = tol.hyperplane;
    r.pass = worst <= tol.hyperplane;
    r.details = {{"max_abs_norm_minus_one", worst_norm}};
    return r;
}

ReportRecord check_tangency(const SamplePlan& plan, const CalibrationParams& params,
                            const Tolerances& tol)
{
    require_region(plan, SampleRegion::surface, "check_tangency");
    ReportRecord r = make_record("surface_tangency", plan, params);
    double worst = 0.0;
    AmbientPoint where;
    for (const AmbientPoint& p : draw_samples(plan)) {
        const double dot = std::abs(Z_at(p, params).dot(surface_normal(p, params.cone)));
        if (dot >= worst) {
            worst = dot;
            where = p;
        }
    }
    r.statistic = worst;
    r.tolerance = tol.tangency;
    r.pass = worst <= tol.tangency;
    r.details = {{"maximizer", point_json(where)}};
    return r;
}

ReportRecord check_vertical_invariance(const SamplePlan& plan, const CalibrationParams& params,
                                       const Tolerances& tol)
{
    require_region(plan, SampleRegion::interior, "check_vertical_invariance");
    ReportRecord r = make_record("vertical_invariance", plan, params);
    double worst = 0.0;
    for (const AmbientPoint& p : draw_samples(plan)) {
        const AmbientPoint foot{p.x, params.cone.lambda() * p.x.norm()};
        worst = std::max(worst, (Z_at(p, params) - Z_at(foot, params)).cwiseAbs().maxCoeff());
    }
    r.statistic = worst;
    r.tolerance = tol.vertical;
    r.pass = worst <= tol.vertical;
    return r;
}

double ambient_divergence(const AmbientField& field, const AmbientPoint& p, double h)
{
    if (!(h > 0.0)) {
        throw std::invalid_argument("ambient_divergence: step must be positive");
    }
    const int n = p.dim();
    double sum = 0.0;
    for (int i = 0; i <= n; ++i) {
        AmbientPoint plus = p;
        AmbientPoint minus = p;
        if (i < n) {
            plus.x[i] += h;
            minus.x[i] -= h;
        } else {
            plus.t += h;
            minus.t -= h;
        }
        sum += (field(plus)[i] - field(minus)[i]) / (2.0 * h);
    }
    return sum;
}

namespace {

double fitted_order(double coarse_err, double fine_err, double coarse_step, double fine_step)
{
    if (!(coarse_err > 0.0) || !(fine_err > 0.0)) {
        return std::numeric_limits<double>::quiet_NaN();
    }
    return std::log(coarse_err / fine_err) / std::log(coarse_step / fine_step);
}

}  // namespace

ReportRecord check_divergence(const SamplePlan& plan, const CalibrationParams& params,
                              const std::vector<double>& steps, const Tolerances& tol)
{
    require_region(plan, SampleRegion::interior, "check_divergence");
    if (steps.size() < 2) {
        throw std::invalid_argument("check_divergence: need at least two steps");
    }
    ReportRecord r = make_record("divergence", plan, params);
    const AmbientField field = calibration_field(params);
    const auto points = draw_samples(plan);
    std::vector<double> worst(steps.size(), 0.0);
    std::vector<double> worst_raw(steps.size(), 0.0);
    for (const AmbientPoint& p : points) {
        const double rr = p.x.tail(p.dim() - 1).norm();
        for (std::size_t s = 0; s < steps.size(); ++s) {
            const double div = ambient_divergence(field, p, steps[s] * rr);
            worst[s] = std::max(worst[s], rr * std::abs(div));
            worst_raw[s] = std::max(worst_raw[s], std::abs(div));
        }
    }
    r.statistic = worst.back();
    r.tolerance = tol.divergence;
    const double order = fitted_order(worst.front(), worst.back(), steps.front(), steps.back());
    if (std::isfinite(order)) {
        r.order = order;
    }
    r.pass = r.statistic <= tol.divergence && r.order && *r.order >= tol.divergence_min_order;
    Json per_step = Json::array();
    for (std::size_t s = 0; s < steps.size(); ++s) {
        per_step.push_back(
            {{"step", steps[s]}, {"max_scaled_div", worst[s]}, {"max_abs_div", worst_raw[s]}});
    }
    r.parameters["steps"] = steps;
    r.parameters["stencil"] = "h = step * r(p), statistic r(p) |div Z|";
    r.details = {{"per_step", per_step}, {"min_order", tol.divergence_min_order}};
    return r;
}

ReportRecord check_dual_path(const SamplePlan& plan, const CalibrationParams& params,
                             const std::vector<double>& steps, const Tolerances& tol)
{
    require_region(plan, SampleRegion::interior, "check_dual_path");
    if (steps.size() < 2) {
        throw std::invalid_argument("check_dual_path: need at least two steps");
    }
    ReportRecord r = make_record("omega_h_dual_path", plan, params);
    const FormField psi_h = [&params](const BasePoint& x) { return psi_h_at(x, params); };
    double worst_closed = 0.0;
    std::vector<double> worst_numeric(steps.size(), 0.0);
    for (const AmbientPoint& p : draw_samples(plan)) {
        const BasePoint x = base_of(p);
        const KForm closed = omega_h_at(x, params);
        worst_closed = std::max(worst_closed, max_abs_diff(closed, omega_h_product_rule(x, params)));
        for (std::size_t s = 0; s < steps.size(); ++s) {
            const KForm d = exterior_derivative_numeric(psi_h, x, steps[s] * x.r());
            worst_numeric[s] = std::max(worst_numeric[s], max_abs_diff(d, closed));
        }
    }
    const double order =
        fitted_order(worst_numeric.front(), worst_numeric.back(), steps.front(), steps.back());
    if (std::isfinite(order)) {
        r.order = order;
    }
    const bool order_ok = (r.order && *r.order >= tol.numeric_d_min_order) ||
                          worst_numeric.back() <= tol.numeric_d_floor;
    r.statistic = worst_closed;
    r.tolerance = tol.dual_path;
    r.pass = worst_closed <= tol.dual_path && order_ok;
    Json per_step = Json::array();
    for (std::size_t s = 0; s < steps.size(); ++s) {
        per_step.push_back({{"step", steps[s]}, {"max_numeric_diff", worst_numeric[s]}});
    }
    r.parameters["steps"] = steps;
    r.parameters["stencil"] = "h = step * r(x)";
    r.details = {{"per_step", per_step},
                 {"min_order", tol.numeric_d_min_order},
                 {"order_floor", tol.numeric_d_floor}};
    return r;
}

// ---------------------------------------------------------------------------
// Flux quadrature
// ---------------------------------------------------------------------------

const FaceFlux& FluxResult::face(std::string_view name) const
{
    for (const FaceFlux& f : faces) {
        if (f.face == name) {
            return f;
        }
    }
    throw std::out_of_range("FluxResult: no face named " + std::string(name));
}

namespace {

// Midpoint rule on a d-dimensional box with m nodes per axis.
template <class F>
double midpoint_sum(const std::vector<double>& lo, const std::vector<double>& hi, int m, F&& f)
{
    const std::size_t d = lo.size();
    std::vector<double> width(d);
    double cell = 1.0;
    for (std::size_t k = 0; k < d; ++k) {
        width[k] = (hi[k] - lo[k]) / m;
        cell *= width[k];
    }
    std::vector<int> idx(d, 0);
    std::vector<double> node(d);
    double sum = 0.0;
    while (true) {
        for (std::size_t k = 0; k < d; ++k) {
            node[k] = lo[k] + (idx[k] + 0.5) * width[k];
        }
        sum += f(node);
        std::size_t k = 0;
        while (k < d && ++idx[k] == m) {
            idx[k] = 0;
            ++k;
        }
        if (k == d) {
            break;
        }
    }
    return sum * cell;
}

double axis_distance_lower_bound(const Vector& lo, const Vector& hi)
{
    double sq = 0.0;
    for (Eigen::Index j = 1; j < lo.size(); ++j) {
        const double d = (lo[j] > 0.0) ? lo[j] : (hi[j] < 0.0 ? -hi[j] : 0.0);
        sq += d * d;
    }
    return std::sqrt(sq);
}

double max_radius(const Vector& lo, const Vector& hi)
{
    double sq = 0.0;
    for (Eigen::Index j = 0; j < lo.size(); ++j) {
        sq += std::max(lo[j] * lo[j], hi[j] * hi[j]);
    }
    return std::sqrt(sq);
}

void validate_xbox(const Vector& lo, const Vector& hi, const ConeParams& cone, const char* who)
{
    if (lo.size() != cone.n() || hi.size() != cone.n()) {
        throw std::invalid_argument(std::string(who) + ": extents must have n entries");
    }
    for (Eigen::Index j = 0; j < lo.size(); ++j) {
        if (!(lo[j] < hi[j])) {
            throw std::invalid_argument(std::string(who) + ": empty extent");
        }
    }
    if (!(axis_distance_lower_bound(lo, hi) > 0.0)) {
        throw DomainError(std::string(who) + ": region touches the plane x' = 0");
    }
}

// The face {x_i = c} of an x-box: the remaining coordinates, in order.
std::vector<int> other_axes(int n, int i)
{
    std::vector<int> axes;
    for (int j = 0; j < n; ++j) {
        if (j != i) {
            axes.push_back(j);
        }
    }
    return axes;
}

std::string face_name(const char* axis, int i, bool upper)
{
    return std::string(axis) + std::to_string(i + 1) + (upper ? "_hi" : "_lo");
}

FluxResult box_flux(const BoxRegion& box, const ConeParams& cone, const AmbientField& field,
                    const FluxOptions& opt)
{
    validate_xbox(box.lo, box.hi, cone, "box flux");
    if (!(box.t0 < box.t1)) {
        throw std::invalid_argument("box flux: need t0 < t1");
    }
    if (!(box.t0 > cone.lambda() * max_radius(box.lo, box.hi))) {
        throw DomainError("box flux: region leaves the open cone");
    }
    const int n = cone.n();
    const int m = opt.resolution;
    FluxResult result;
    AmbientPoint p{Vector(n), 0.5 * (box.t0 + box.t1)};

    for (int i = 0; i < n; ++i) {
        const auto axes = other_axes(n, i);
        for (bool upper : {false, true}) {
            const double sign = upper ? 1.0 : -1.0;
            p.x[i] = upper ? box.hi[i] : box.lo[i];
            std::vector<double> lo;
            std::vector<double> hi;
            for (int j : axes) {
                lo.push_back(box.lo[j]);
                hi.push_back(box.hi[j]);
            }
            if (!opt.assume_t_invariant) {
                lo.push_back(box.t0);
                hi.push_back(box.t1);
            }
            FaceFlux face{face_name("x", i, upper), 0.0, 0.0};
            const double t_length = opt.assume_t_invariant ? box.t1 - box.t0 : 1.0;
            face.value = t_length * midpoint_sum(lo, hi, m, [&](const std::vector<double>& node) {
                for (std::size_t k = 0; k < axes.size(); ++k) {
                    p.x[axes[k]] = node[k];
                }
                if (!opt.assume_t_invariant) {
                    p.t = node.back();
                }
                const double normal = field(p)[i];
                face.max_normal = std::max(face.max_normal, std::abs(normal));
                ++result.evaluations;
                return sign * normal;
            });
            result.total += face.value;
            result.faces.push_back(face);
        }
    }

    if (!opt.assume_t_invariant) {
        std::vector<double> lo(box.lo.data(), box.lo.data() + n);
        std::vector<double> hi(box.hi.data(), box.hi.data() + n);
        for (bool upper : {false, true}) {
            const double sign = upper ? 1.0 : -1.0;
            p.t = upper ? box.t1 : box.t0;
            FaceFlux face{upper ? "t_hi" : "t_lo", 0.0, 0.0};
            face.value = midpoint_sum(lo, hi, m, [&](const std::vector<double>& node) {
                for (int k = 0; k < n; ++k) {
                    p.x[k] = node[k];
                }
                const double normal = field(p)[n];
                face.max_normal = std::max(face.max_normal, std::abs(normal));
                ++result.evaluations;
                return sign * normal;
            });
            result.total += face.value;
            result.faces.push_back(face);
        }
    }
    return result;
}

FluxResult prism_flux(const ConePrismRegion& prism, const ConeParams& cone,
                      const AmbientField& field, const FluxOptions& opt)
{
    validate_xbox(prism.lo, prism.hi, cone, "prism flux");
    const double lambda = cone.lambda();
    if (!(prism.t_top > lambda * max_radius(prism.lo, prism.hi))) {
        throw DomainError("prism flux: top face does not clear the cone");
    }
    const int n = cone.n();
    const int m = opt.resolution;
    FluxResult result;
    AmbientPoint p{Vector(n), 0.0};

    for (int i = 0; i < n; ++i) {
        const auto axes = other_axes(n, i);
        for (bool upper : {false, true}) {
            const double sign = upper ? 1.0 : -1.0;
            p.x[i] = upper ? prism.hi[i] : prism.lo[i];
            std::vector<double> lo;
            std::vector<double> hi;
            for (int j : axes) {
                lo.push_back(prism.lo[j]);
                hi.push_back(prism.hi[j]);
            }
            FaceFlux face{face_name("x", i, upper), 0.0, 0.0};
            face.value = midpoint_sum(lo, hi, m, [&](const std::vector<double>& node) {
                for (std::size_t k = 0; k < axes.size(); ++k) {
                    p.x[axes[k]] = node[k];
                }
                const double t_lo = lambda * p.x.norm();
                const double length = prism.t_top - t_lo;
                double value = 0.0;
                if (opt.assume_t_invariant) {
                    p.t = t_lo + 0.5 * length;
                    const double normal = field(p)[i];
                    value = length * normal;
                    face.max_normal = std::max(face.max_normal, std::abs(normal));
                    ++result.evaluations;
                } else {
                    const double dt = length / m;
                    for (int k = 0; k < m; ++k) {
                        p.t = t_lo + (k + 0.5) * dt;
                        const double normal = field(p)[i];
                        face.max_normal = std::max(face.max_normal, std::abs(normal));
                        value += dt * normal;
                        ++result.evaluations;
                    }
                }
                return sign * value;
            });
            result.total += face.value;
            result.faces.push_back(face);
        }
    }

    std::vector<double> lo(prism.lo.data(), prism.lo.data() + n);
    std::vector<double> hi(prism.hi.data(), prism.hi.data() + n);
    {
        FaceFlux face{"t_top", 0.0, 0.0};
        p.t = prism.t_top;
        face.value = midpoint_sum(lo, hi, m, [&](const std::vector<double>& node) {
            for (int k = 0; k < n; ++k) {
                p.x[k] = node[k];
            }
            const double normal = field(p)[n];
            face.max_normal = std::max(face.max_normal, std::abs(normal));
            ++result.evaluations;
            return normal;
        });
        result.total += face.value;
        result.faces.push_back(face);
    }
    {
        // Outward normal is -nu; the graph t = lambda |x| has area element sqrt(1+lambda^2) dx.
        FaceFlux face{"cone", 0.0, 0.0};
        const double area_factor = std::sqrt(cone.one_plus_lambda_sq());
        face.value = midpoint_sum(lo, hi, m, [&](const std::vector<double>& node) {
            for (int k = 0; k < n; ++k) {
                p.x[k] = node[k];
            }
            p.t = lambda * p.x.norm();
            const double normal = field(p).dot(surface_normal(p, cone));
            face.max_normal = std::max(face.max_normal, std::abs(normal));
            ++result.evaluations;
            return -normal * area_factor;
        });
        result.total += face.value;
        result.faces.push_back(face);
    }
    return result;
}

struct SphereNode {
    Vector omega;
    double weight;
};

// Midpoint rule on S^k in hyperspherical angles.
std::vector<SphereNode> sphere_nodes(int k, int m)
{
    std::vector<SphereNode> nodes;
    if (k == 0) {
        nodes.push_back({Vector::Constant(1, 1.0), 1.0});
        nodes.push_back({Vector::Constant(1, -1.0), 1.0});
        return nodes;
    }
    std::vector<double> lo(k, 0.0);
    std::vector<double> hi(k, M_PI);
    hi[k - 1] = 2.0 * M_PI;
    // The azimuth uses 2m nodes: fold it into the generic grid by splitting [0, 2pi).
    std::vector<int> counts(k, m);
    counts[k - 1] = 2 * m;
    std::vector<int> idx(k, 0);
    while (true) {
        Vector omega(k + 1);
        double weight = 1.0;
        double sin_prod = 1.0;
        for (int j = 0; j < k; ++j) {
            const double width = (hi[j] - lo[j]) / counts[j];
            const double phi = lo[j] + (idx[j] + 0.5) * width;
            weight *= width * std::pow(std::sin(phi), k - 1 - j);
            omega[j] = sin_prod * std::cos(phi);
            sin_prod *= std::sin(phi);
        }
        omega[k] = sin_prod;
        nodes.push_back({omega, weight});
        int j = 0;
        while (j < k && ++idx[j] == counts[j]) {
            idx[j] = 0;
            ++j;
        }
        if (j == k) {
            break;
        }
    }
    return nodes;
}

// Integrates integrand(point, outward normal) over the tube lateral surface.
template <class F>
double tube_integral(double eps, const ConeParams& cone, const FluxOptions& opt,
                     long long& evaluations, F&& integrand)
{
    if (!(eps > 0.0)) {
        throw std::invalid_argument("tube flux: eps must be positive");
    }
    const int n = cone.n();
    const double lambda = cone.lambda();
    const double reach_sq = 1.0 / cone.one_plus_lambda_sq() - eps * eps;
    if (reach_sq <= 0.0) {
        return 0.0;
    }
    const double a = std::sqrt(reach_sq);
    const auto sphere = sphere_nodes(n - 2, opt.angle_resolution);
    const int m = opt.resolution;
    const double dx = 2.0 * a / m;
    const double scale = std::pow(eps, n - 2);
    AmbientPoint p{Vector(n), 0.0};
    Vector nu = Vector::Zero(n + 1);
    double sum = 0.0;
    for (int ix = 0; ix < m; ++ix) {
        const double x1 = -a + (ix + 0.5) * dx;
        const double rho = std::sqrt(x1 * x1 + eps * eps);
        const double t_lo = lambda * rho;
        const double t_hi = std::sqrt(std::max(0.0, 1.0 - rho * rho));
        const double length = t_hi - t_lo;
        p.x[0] = x1;
        for (const SphereNode& node : sphere) {
            p.x.tail(n - 1) = eps * node.omega;
            // Outward from Omega^eps means pointing into A^eps.
            nu.segment(1, n - 1) = -node.omega;
            double value = 0.0;
            if (opt.assume_t_invariant) {
                p.t = t_lo + 0.5 * length;
                value = length * integrand(p, nu);
                ++evaluations;
            } else {
                const double dt = length / m;
                for (int k = 0; k < m; ++k) {
                    p.t = t_lo + (k + 0.5) * dt;
                    value += dt * integrand(p, nu);
                    ++evaluations;
                }
            }
            sum += node.weight * value;
        }
    }
    return sum * dx * scale;
}

FluxResult tube_flux(const TubeRegion& tube, const ConeParams& cone, const AmbientField& field,
                     const FluxOptions& opt)
{
    FluxResult result;
    FaceFlux face{"tube", 0.0, 0.0};
    face.value = tube_integral(tube.eps, cone, opt, result.evaluations,
                               [&](const AmbientPoint& p, const Vector& nu) {
                                   const double normal = field(p).dot(nu);
                                   face.max_normal = std::max(face.max_normal, std::abs(normal));
                                   return opt.absolute ? std::abs(normal) : normal;
                               });
    result.total = face.value;
    result.faces.push_back(face);
    return result;
}

}  // namespace

FluxResult flux_integral(const FluxRegion& region, const ConeParams& cone,
                         const AmbientField& field, const FluxOptions& options)
{
    if (options.resolution < 1 || options.angle_resolution < 1) {
        throw std::invalid_argument("flux_integral: resolution must be >= 1");
    }
    return std::visit(
        [&](const auto& r) -> FluxResult {
            using T = std::decay_t<decltype(r)>;
            if constexpr (std::is_same_v<T, BoxRegion>) {
                return box_flux(r, cone, field, options);
            } else if constexpr (std::is_same_v<T, ConePrismRegion>) {
                return prism_flux(r, cone, field, options);
            } else {
                return tube_flux(r, cone, field, options);
            }
        },
        region);
}

double tube_area(double eps, const ConeParams& cone, const FluxOptions& options)
{
    long long evaluations = 0;
    return tube_integral(eps, cone, options, evaluations,
                         [](const AmbientPoint&, const Vector&) { return 1.0; });
}

double loglog_slope(const std::vector<double>& x, const std::vector<double>& y)
{
    if (x.size() != y.size() || x.size() < 2) {
        throw std::invalid_argument("loglog_slope: need at least two matching points");
    }
    const auto k = static_cast<double>(x.size());
    double sx = 0.0;
    double sy = 0.0;
    double sxx = 0.0;
    double sxy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        if (!(x[i] > 0.0) || !(y[i] > 0.0)) {
            throw std::domain_error("loglog_slope: values must be positive");
        }
        const double lx = std::log(x[i]);
        const double ly = std::log(y[i]);
        sx += lx;
        sy += ly;
        sxx += lx * lx;
        sxy += lx * ly;
    }
    return (k * sxy - sx * sy) / (k * sxx - sx * sx);
}

}  // namespace conecal
