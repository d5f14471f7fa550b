#pragma once

#include "conecal/calibration.hpp"

#include <json.hpp>

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace conecal {

using Json = nlohmann::json;

// ---------------------------------------------------------------------------
// Sampling
// ---------------------------------------------------------------------------

enum class SampleRegion { interior, surface, hyperplane };

const char* to_string(SampleRegion region);

/// Points of Omega'_lambda u S'_lambda drawn uniformly in (log rho, theta,
/// direction of x'), with r >= r_min_rel * rho.
struct SamplePlan {
    ConeParams cone;
    SampleRegion region = SampleRegion::interior;
    double rho_min = 0.1;
    double rho_max = 10.0;
    double r_min_rel = 1e-3;
    int count = 1000;
    std::uint64_t seed = 0;

    /// Throws std::invalid_argument on an inconsistent plan.
    void validate() const;
    Json to_json() const;
};

/// Deterministic in the plan. Interior points sit at t = lambda rho + rho (0.01 + 2U);
/// surface points at t = lambda |x| exactly; hyperplane points have x_1 = 0 and
/// alternate between the surface and the interior.
std::vector<AmbientPoint> draw_samples(const SamplePlan& plan);

/// Stable per-check seed derived from a base seed and a tag.
std::uint64_t derive_seed(std::uint64_t base, std::string_view tag);

// ---------------------------------------------------------------------------
// Tolerances and report records
// ---------------------------------------------------------------------------

struct Tolerances {
    double identity = 1e-12;
    double hodge_divergence = 1e-6;
    double norm_slack = 1e-9;
    double feasibility_slack = 1e-12;
    double hyperplane = 1e-10;
    double tangency = 1e-10;
    double vertical = 0.0;
    double divergence = 1e-6;
    double divergence_min_order = 1.9;
    double dual_path = 1e-12;
    double numeric_d_min_order = 1.9;
    double numeric_d_floor = 1e-9;
    double box_flux_coarse = 1e-4;
    double box_flux_fine = 2.5e-5;
    double box_order_band = 0.3;
    double cone_face = 1e-10;
    double control_flux = 1e-12;
    double tube_slope_slack = 0.1;
    double area_slope = 0.05;
    double tube_ratio_slack = 0.2;
    double threshold = 1e-10;

    Json to_json() const;
    /// Missing keys keep their defaults; unknown keys throw std::invalid_argument.
    static Tolerances from_json(const Json& j);
};

struct ReportRecord {
    std::string check;
    int n = 0;
    double lambda = 0.0;
    std::optional<double> gamma;
    double statistic = 0.0;
    double tolerance = 0.0;
    std::optional<double> order;
    /// nullopt marks an informational record.
    std::optional<bool> pass;
    std::uint64_t seed = 0;
    Json parameters = Json::object();
    Json details = Json::object();

    Json to_json() const;
};

struct VerificationReport {
    static constexpr int kSchemaVersion = 1;

    Json config = Json::object();
    std::vector<ReportRecord> records;
    /// Host-dependent fields live here so the rest of the report is reproducible.
    Json environment = Json::object();

    bool all_passed() const;
    std::vector<const ReportRecord*> failures() const;
    void append(const VerificationReport& other);

    Json to_json() const;
    std::string to_csv() const;
};

// ---------------------------------------------------------------------------
// Pointwise checks of the calibrating field
// ---------------------------------------------------------------------------

using AmbientField = std::function<Vector(const AmbientPoint&)>;

AmbientField calibration_field(const CalibrationParams& params);

/// max |Z|. Pass semantics only when the feasibility polynomial is <= feasibility_slack.
ReportRecord check_norm_bound(const SamplePlan& plan, const CalibrationParams& params,
                              const Tolerances& tol);
/// max |Z - e_1| on a hyperplane plan.
ReportRecord check_hyperplane(const SamplePlan& plan, const CalibrationParams& params,
                              const Tolerances& tol);
/// max |<Z, nu>| on a surface plan.
ReportRecord check_tangency(const SamplePlan& plan, const CalibrationParams& params,
                            const Tolerances& tol);
/// max |Z(x, t) - Z(x, lambda |x|)| on an interior plan.
ReportRecord check_vertical_invariance(const SamplePlan& plan, const CalibrationParams& params,
                                       const Tolerances& tol);

/// Central-difference Euclidean divergence in the n+1 ambient coordinates.
double ambient_divergence(const AmbientField& field, const AmbientPoint& p, double h);

/// For each relative step s the stencil width is h = s r(p) and the statistic is
/// max r |div_h Z|, the divergence in the units of the point's own scale. The
/// record statistic is taken at the last step; order is fitted over the first
/// and last. Throws DomainError if a stencil leaves Omega'_lambda.
ReportRecord check_divergence(const SamplePlan& plan, const CalibrationParams& params,
                              const std::vector<double>& steps, const Tolerances& tol);

/// Closed bracket form vs product rule (statistic) and vs the numeric d of psi_h at
/// two relative steps (order).
ReportRecord check_dual_path(const SamplePlan& plan, const CalibrationParams& params,
                             const std::vector<double>& steps, const Tolerances& tol);

// ---------------------------------------------------------------------------
// Flux quadrature
// ---------------------------------------------------------------------------

/// [lo, hi] x [t0, t1] in R^n x R.
struct BoxRegion {
    Vector lo;
    Vector hi;
    double t0 = 0.0;
    double t1 = 0.0;
};

/// {x in [lo, hi], lambda |x| <= t <= t_top}: one face lies on S_lambda.
struct ConePrismRegion {
    Vector lo;
    Vector hi;
    double t_top = 0.0;
};

/// Lateral surface B_1 n Omega_lambda n {|x'| = eps}.
struct TubeRegion {
    double eps = 0.1;
};

using FluxRegion = std::variant<BoxRegion, ConePrismRegion, TubeRegion>;

struct FluxOptions {
    /// Midpoint nodes per face dimension (box, prism) or per x_1 (tube).
    int resolution = 64;
    /// Nodes per polar angle on S^{n-2} for the tube; the azimuth gets twice as many.
    int angle_resolution = 8;
    /// When set, the t-integral of a t-invariant field is taken exactly and the
    /// cancelling t-faces of a box are skipped.
    bool assume_t_invariant = true;
    /// Tube only: integrate |<F, nu>| instead of the signed flux.
    bool absolute = true;
};

struct FaceFlux {
    std::string face;
    double value = 0.0;
    /// max |<F, nu>| over quadrature nodes.
    double max_normal = 0.0;
};

struct FluxResult {
    double total = 0.0;
    std::vector<FaceFlux> faces;
    long long evaluations = 0;

    const FaceFlux& face(std::string_view name) const;
};

/// Outward-normal midpoint quadrature over the boundary of the region.
/// Throws DomainError when a box or prism touches x' = 0 or leaves the cone.
FluxResult flux_integral(const FluxRegion& region, const ConeParams& cone,
                         const AmbientField& field, const FluxOptions& options);

/// Area of the tube lateral surface by the same quadrature (field = unit normal).
double tube_area(double eps, const ConeParams& cone, const FluxOptions& options);

/// Least-squares slope of log y against log x.
double loglog_slope(const std::vector<double>& x, const std::vector<double>& y);

// ---------------------------------------------------------------------------
// Suites
// ---------------------------------------------------------------------------

/// A cone parameter given either as a number or relative to lambda_bar(n):
/// "0.3", "bar", "bar*0.5".
struct LambdaChoice {
    double value = 0.0;
    bool relative = false;

    /// Throws std::invalid_argument on anything else.
    static LambdaChoice parse(std::string_view token);
    std::string to_string() const;
    /// Throws std::invalid_argument for a relative choice with n < 3.
    double resolve(int n) const;
};

struct IdentitySuiteConfig {
    std::vector<int> n_values{2, 3, 4, 5, 6, 7};
    std::vector<double> lambdas{0.1, 0.5, 1.0, 2.0};
    /// Additional lambdas as multiples of lambda_bar(n); n where that is not a
    /// positive number get an informational "lambda_range" record.
    std::vector<double> lambda_factors;
    int samples = 10000;
    int hodge_pairs = 100;
    double step = 1e-4;
    std::uint64_t seed = 1;
    /// Added to every diagonal entry of the inverse metric (negative control).
    double metric_fault = 0.0;
    Tolerances tol;
};

VerificationReport run_identity_suite(const IdentitySuiteConfig& config);

struct ThresholdSuiteConfig {
    std::vector<int> n_values{3, 4, 5, 6, 7, 8, 9, 10};
    double tol = 1e-10;
    std::uint64_t seed = 1;
    Tolerances tolerances;
};

VerificationReport run_threshold_suite(const ThresholdSuiteConfig& config);

struct CalibrationSuiteConfig {
    std::vector<int> n_values{4, 5, 6, 7};
    /// Multiples of lambda_bar(n).
    std::vector<double> lambda_factors{0.5, 1.0};
    /// Additional absolute lambdas.
    std::vector<double> lambdas;
    std::optional<double> gamma;
    int samples = 100000;
    int divergence_samples = 10000;
    int dual_path_samples = 1000;
    std::vector<double> steps{1e-3, 1e-4};
    double rho_min = 0.1;
    double rho_max = 10.0;
    double r_min_rel = 1e-3;
    std::uint64_t seed = 1;
    Tolerances tol;
};

VerificationReport run_calibration_suite(const CalibrationSuiteConfig& config);

struct FluxSuiteConfig {
    int box_n = 4;
    double box_lambda = 0.3;
    double box_lo = 0.2;
    double box_hi = 0.6;
    double box_t0 = 0.5;
    double box_t1 = 1.0;
    std::vector<int> box_resolutions{64, 128};
    int prism_resolution = 32;
    double prism_t_top = 1.0;
    std::vector<int> tube_n_values{4, 5};
    double tube_lambda = 0.3;
    std::vector<double> tube_eps{0.2, 0.1, 0.05};
    std::vector<double> ratio_eps{0.3, 0.15};
    int tube_resolution = 200;
    int tube_angle_resolution = 8;
    std::uint64_t seed = 1;
    Tolerances tol;
};

VerificationReport run_flux_suite(const FluxSuiteConfig& config);

}  // namespace conecal
