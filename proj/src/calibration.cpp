#include "conecal/calibration.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace conecal {

double lambda_bar(int n)
{
    if (n <= 2) {
        throw std::invalid_argument("lambda_bar: requires n >= 3, got " + std::to_string(n));
    }
    return 0.5 * (n - 3) / std::sqrt(static_cast<double>(n - 2));
}

double gamma_bar(const ConeParams& cone)
{
    const double m = cone.n() - 1;
    const double ratio = m / (2.0 * cone.one_plus_lambda_sq());
    if (!(ratio > 1.0)) {
        throw std::domain_error("gamma_bar: (n-1)/(2(1+lambda^2)) <= 1, no positive minimizer");
    }
    return m * (ratio - 1.0);
}

CalibrationParams::CalibrationParams(ConeParams cone_, double gamma_) : cone(cone_), gamma(gamma_)
{
    if (!(gamma > 0.0) || !std::isfinite(gamma)) {
        throw std::invalid_argument("CalibrationParams: gamma must be positive");
    }
}

CalibrationParams CalibrationParams::with_default_gamma(const ConeParams& cone)
{
    return CalibrationParams(cone, gamma_bar(cone));
}

Rational feasibility_lhs_exact(int n, const Rational& lambda_sq, const Rational& gamma)
{
    const Rational m(n - 1);
    const Rational a = 1 + gamma / m;
    return a * a - (1 + gamma) / (1 + lambda_sq);
}

FeasibilityReport feasibility(const ConeParams& cone, double gamma,
                              const std::optional<ExactInputs>& exact)
{
    if (!(gamma > 0.0)) {
        throw std::invalid_argument("feasibility: gamma must be positive");
    }
    const double m = cone.n() - 1;
    const double a = 1.0 + gamma / m;

    FeasibilityReport report;
    report.gamma_used = gamma;
    report.lhs = a * a - (1.0 + gamma) / cone.one_plus_lambda_sq();
    report.feasible = report.lhs <= 0.0;
    if (exact) {
        report.lhs_exact = feasibility_lhs_exact(cone.n(), exact->lambda_sq, exact->gamma);
        report.feasible = *report.lhs_exact <= 0;
    }
    return report;
}

FeasibilityReport boundary_certificate(int n)
{
    if (n < 4) {
        throw std::domain_error("boundary_certificate: lambda_bar(n) > 0 requires n >= 4");
    }
    const ConeParams cone(n, lambda_bar(n));
    ExactInputs exact{Rational(Rational((n - 3) * (n - 3)) / Rational(4 * (n - 2))),
                      Rational(n - 3)};
    return feasibility(cone, static_cast<double>(n - 3), exact);
}

double threshold_bisect(int n, double tol)
{
    if (n <= 2) {
        throw std::invalid_argument("threshold_bisect: requires n >= 3");
    }
    if (!(tol > 0.0)) {
        throw std::invalid_argument("threshold_bisect: tol must be positive");
    }
    const auto feasible_at = [n](double lambda) {
        const ConeParams cone(n, lambda);
        double gamma = 0.0;
        try {
            gamma = gamma_bar(cone);
        } catch (const std::domain_error&) {
            return false;
        }
        return feasibility(cone, gamma).feasible;
    };

    double lo = 1e-8;
    if (!feasible_at(lo)) {
        throw std::domain_error("threshold_bisect: empty feasible range for n = " +
                                std::to_string(n));
    }
    double hi = 1.0;
    while (feasible_at(hi)) {
        lo = hi;
        hi *= 2.0;
        if (hi > 1e12) {
            throw std::domain_error("threshold_bisect: feasible range is unbounded");
        }
    }
    while (hi - lo > tol) {
        const double mid = 0.5 * (lo + hi);
        (feasible_at(mid) ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
}

ProfileValue h_eval(double u, double gamma)
{
    if (!(gamma > 0.0)) {
        throw std::invalid_argument("h_eval: gamma must be positive");
    }
    // cos(arctan u) = (1 + u^2)^{-1/2}
    const double h = std::exp(-0.5 * gamma * std::log1p(u * u));
    return {h, -gamma * u * h / (1.0 + u * u)};
}

namespace {

void check_theta(double theta)
{
    if (!(std::abs(theta) < M_PI / 2)) {
        throw std::domain_error("beta: |theta| must be < pi/2");
    }
}

// log(cos theta) without cancellation near 0.
double log_cos(double theta)
{
    const double s = std::sin(0.5 * theta);
    return std::log1p(-2.0 * s * s);
}

struct BetaParts {
    double y;          // cos^{1+gamma}(theta)
    double one_m_ysq;  // 1 - y^2
};

BetaParts beta_parts(double theta, double gamma)
{
    const double lc = log_cos(theta);
    return {std::exp((1.0 + gamma) * lc), -std::expm1(2.0 * (1.0 + gamma) * lc)};
}

}  // namespace

double beta_eval(double theta, double gamma)
{
    check_theta(theta);
    if (theta == 0.0) {
        return 0.0;
    }
    const auto [y, omy] = beta_parts(theta, gamma);
    return std::copysign(std::atan2(std::sqrt(omy), y), theta);
}

double beta_prime(double theta, double gamma)
{
    check_theta(theta);
    if (theta == 0.0) {
        return std::sqrt(1.0 + gamma);
    }
    const auto [y, omy] = beta_parts(theta, gamma);
    const double cos_gamma = std::exp(gamma * log_cos(theta));
    return (1.0 + gamma) * cos_gamma * std::abs(std::sin(theta)) / std::sqrt(omy);
}

double tan_ratio(double theta, double gamma)
{
    check_theta(theta);
    if (theta == 0.0) {
        return 1.0 / std::sqrt(1.0 + gamma);
    }
    const auto [y, omy] = beta_parts(theta, gamma);
    return std::abs(std::tan(theta)) * y / std::sqrt(omy);
}

double w_ratio(double z, double gamma)
{
    if (!(z >= 1.0)) {
        throw std::domain_error("w_ratio: requires z >= 1");
    }
    if (z == 1.0) {
        return 1.0 + gamma;
    }
    const double d = z - 1.0;
    return std::expm1((1.0 + gamma) * std::log1p(d)) / d;
}

InequalitySides beta_inequality(double theta, const ConeParams& cone, double gamma)
{
    const double lhs = std::abs(beta_prime(theta, gamma) + (cone.n() - 2) * tan_ratio(theta, gamma));
    return {lhs, (cone.n() - 1) / std::sqrt(cone.one_plus_lambda_sq())};
}

InequalitySides beta_inequality_squared(double theta, const ConeParams& cone, double gamma)
{
    check_theta(theta);
    const double a = 1.0 + gamma / (cone.n() - 1);
    const double t = std::tan(theta);
    double tan_beta_sq = 0.0;
    if (theta != 0.0) {
        const auto [y, omy] = beta_parts(theta, gamma);
        tan_beta_sq = omy / (y * y);
    }
    return {a * a * t * t, tan_beta_sq / cone.one_plus_lambda_sq()};
}

InequalitySides profile_inequality(double u, const ConeParams& cone, double gamma)
{
    const auto [h, hp] = h_eval(u, gamma);
    const double bracket = (1.0 + u * u) * hp / (cone.n() - 1) - u * h;
    return {h * h + cone.one_plus_lambda_sq() * bracket * bracket, 1.0 + u * u};
}

KForm drho_form(const BasePoint& x)
{
    const int n = x.dim();
    KForm out(n, 1);
    for (int i = 0; i < n; ++i) {
        out.add(MultiIndex::from_sorted({i}), x.x()[i] / x.rho());
    }
    return out;
}

KForm dtheta_form(const BasePoint& x)
{
    const int n = x.dim();
    const double r = x.r();
    if (r == 0.0) {
        throw DomainError("dtheta: undefined on the plane x' = 0");
    }
    const double rho_sq = x.rho() * x.rho();
    KForm out(n, 1);
    out.add(MultiIndex::from_sorted({0}), r / rho_sq);
    for (int i = 1; i < n; ++i) {
        out.add(MultiIndex::from_sorted({i}), -x.x1() * x.x()[i] / (r * rho_sq));
    }
    return out;
}

KForm dr_form(const BasePoint& x)
{
    const int n = x.dim();
    if (x.r() == 0.0) {
        throw DomainError("dr: undefined on the plane x' = 0");
    }
    KForm out(n, 1);
    for (int i = 1; i < n; ++i) {
        out.add(MultiIndex::from_sorted({i}), x.x()[i] / x.r());
    }
    return out;
}

KForm psi0_at(const BasePoint& x, const ConeParams& cone)
{
    const int n = cone.n();
    if (x.dim() != n) {
        throw std::invalid_argument("psi0_at: dimension mismatch");
    }
    const double scale = std::sqrt(cone.one_plus_lambda_sq()) / (n - 1);
    const MultiIndex alpha = MultiIndex::full(n).without(0);
    KForm out(n, n - 2);
    for (int j = 1; j < n; ++j) {
        // 1-based index j+1 carries the sign (-1)^{j+1}.
        const double sign = (j % 2 == 1) ? 1.0 : -1.0;
        out.add(alpha.without(j), sign * scale * x.x()[j]);
    }
    return out;
}

KForm omega0(const ConeParams& cone)
{
    const int n = cone.n();
    return KForm::basis(n, MultiIndex::full(n).without(0), std::sqrt(cone.one_plus_lambda_sq()));
}

KForm psi_h_at(const BasePoint& x, const CalibrationParams& params)
{
    return h_eval(x.u(), params.gamma).h * psi0_at(x, params.cone);
}

KForm omega_h_bracket(const BasePoint& x, const CalibrationParams& params)
{
    const int n = params.cone.n();
    const double r = x.r();
    const auto [h, hp] = h_eval(x.u(), params.gamma);
    KForm bracket = (h - x.x1() * hp / ((n - 1) * r)) * dr_form(x);
    bracket += KForm::dx(n, 0, hp / (n - 1));
    return bracket;
}

KForm omega_h_at(const BasePoint& x, const CalibrationParams& params)
{
    const int n = params.cone.n();
    return wedge(omega_h_bracket(x, params), ((n - 1) / x.r()) * psi0_at(x, params.cone));
}

KForm omega_h_product_rule(const BasePoint& x, const CalibrationParams& params)
{
    const int n = params.cone.n();
    const double r = x.r();
    const auto [h, hp] = h_eval(x.u(), params.gamma);
    KForm dh = KForm::dx(n, 0, hp / r);
    dh -= (x.x1() * hp / (r * r)) * dr_form(x);
    return wedge(dh, psi0_at(x, params.cone)) + h * omega0(params.cone);
}

Vector X_at(const BasePoint& x, const CalibrationParams& params)
{
    const int n = params.cone.n();
    const MetricAtPoint m = metric_at(x, params.cone);
    KForm star = hodge_star(omega_h_at(x, params), m, Orientation::from_metric(m));
    if ((n - 1) % 2 == 1) {
        star *= -1.0;
    }
    return sharp(star, m);
}

Vector Y_at(const BasePoint& x, const CalibrationParams& params)
{
    return isometry_frame(x, params.cone).frame * X_at(x, params);
}

Vector Z_at(const AmbientPoint& p, const CalibrationParams& params)
{
    const Region region = classify(p, params.cone, kSampledSurfaceBand);
    if (region != Region::interior_primed && region != Region::surface_primed) {
        throw DomainError("Z is defined on Omega'_lambda u S'_lambda only; point is " +
                          std::string(to_string(region)));
    }
    return Y_at(base_of(p), params);
}

}  // namespace conecal
