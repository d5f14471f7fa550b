#pragma once

#include "conecal/cone_geometry.hpp"
#include "conecal/exterior_calculus.hpp"

#include <boost/multiprecision/cpp_int.hpp>

#include <optional>

namespace conecal {

using Rational = boost::multiprecision::cpp_rational;

// ---------------------------------------------------------------------------
// Threshold and profile exponent
// ---------------------------------------------------------------------------

/// (1/2)(n-3)/sqrt(n-2). Returns 0 for n = 3 (empty feasible range); throws
/// std::invalid_argument for n <= 2.
double lambda_bar(int n);

/// Minimizer over gamma of (1 + gamma/(n-1))^2 - (1+gamma)/(1+lambda^2):
/// (n-1)((n-1)/(2(1+lambda^2)) - 1). Throws std::domain_error when it is not
/// positive.
double gamma_bar(const ConeParams& cone);

struct CalibrationParams {
    ConeParams cone;
    double gamma;

    CalibrationParams(ConeParams cone, double gamma);
    static CalibrationParams with_default_gamma(const ConeParams& cone);
};

/// Exact inputs for the feasibility polynomial: lambda^2 and gamma as rationals.
struct ExactInputs {
    Rational lambda_sq;
    Rational gamma;
};

struct FeasibilityReport {
    double lhs = 0.0;
    bool feasible = false;
    double gamma_used = 0.0;
    std::optional<Rational> lhs_exact;

    bool certified_exact() const { return lhs_exact.has_value(); }
};

Rational feasibility_lhs_exact(int n, const Rational& lambda_sq, const Rational& gamma);

/// lhs = (1 + gamma/(n-1))^2 - (1+gamma)/(1+lambda^2); feasible iff lhs <= 0.
/// When exact inputs are supplied the verdict comes from rational arithmetic.
FeasibilityReport feasibility(const ConeParams& cone, double gamma,
                              const std::optional<ExactInputs>& exact = std::nullopt);

/// Exact evaluation at lambda^2 = (n-3)^2/(4(n-2)), gamma = n-3.
FeasibilityReport boundary_certificate(int n);

/// Recovers the largest lambda for which feasibility(., gamma_bar) holds by
/// bisection. Throws std::domain_error when no lambda > 0 is feasible.
double threshold_bisect(int n, double tol);

// ---------------------------------------------------------------------------
// Profile h(u) = cos^gamma(arctan u) and its angular representation
// ---------------------------------------------------------------------------

struct ProfileValue {
    double h;
    double h_prime;
};

ProfileValue h_eval(double u, double gamma);

/// sgn(theta) arccos(cos^{1+gamma}(theta)) for |theta| < pi/2.
double beta_eval(double theta, double gamma);
double beta_prime(double theta, double gamma);
/// tan(theta)/tan(beta(theta)), continuously extended by 1/sqrt(1+gamma) at 0.
double tan_ratio(double theta, double gamma);

/// (z^{1+gamma} - 1)/(z - 1) on z >= 1, with value 1+gamma at z = 1.
double w_ratio(double z, double gamma);

struct InequalitySides {
    double lhs;
    double rhs;

    bool holds(double rel_tol = 0.0) const { return lhs <= rhs + rel_tol * (rhs < 0 ? -rhs : rhs); }
};

/// |beta' + (n-2) tan(theta)/tan(beta)|  vs  (n-1)/sqrt(1+lambda^2).
InequalitySides beta_inequality(double theta, const ConeParams& cone, double gamma);
/// (1 + gamma/(n-1))^2 tan^2(theta)  vs  tan^2(beta)/(1+lambda^2); no 0/0 at theta = 0.
InequalitySides beta_inequality_squared(double theta, const ConeParams& cone, double gamma);
/// h^2 + (1+lambda^2)[(1+u^2)h'/(n-1) - u h]^2  vs  1 + u^2.
InequalitySides profile_inequality(double u, const ConeParams& cone, double gamma);

// ---------------------------------------------------------------------------
// Forms on M
// ---------------------------------------------------------------------------

KForm drho_form(const BasePoint& x);
/// Requires r > 0.
KForm dtheta_form(const BasePoint& x);
/// Requires r > 0.
KForm dr_form(const BasePoint& x);

/// sqrt(1+lambda^2)/(n-1) sum_{i>=2} (-1)^i x_i dx_{(2..n) \ i}   (1-based i).
KForm psi0_at(const BasePoint& x, const ConeParams& cone);
/// sqrt(1+lambda^2) dx_2 ^ ... ^ dx_n.
KForm omega0(const ConeParams& cone);

KForm psi_h_at(const BasePoint& x, const CalibrationParams& params);
/// The 1-form [(h - x1 h'/((n-1) r)) dr + h'/(n-1) dx_1].
KForm omega_h_bracket(const BasePoint& x, const CalibrationParams& params);
/// omega_h = bracket ^ ((n-1)/r) psi_0.
KForm omega_h_at(const BasePoint& x, const CalibrationParams& params);
/// omega_h = dh ^ psi_0 + h omega_0, assembled from the product rule.
KForm omega_h_product_rule(const BasePoint& x, const CalibrationParams& params);

// ---------------------------------------------------------------------------
// Calibrating fields
// ---------------------------------------------------------------------------

/// X = (-1)^{n-1} (*omega_h)^#, coefficients in the coordinate frame d_1..d_n.
Vector X_at(const BasePoint& x, const CalibrationParams& params);

/// Y = I_* X at I(x), as a vector of R^{n+1}.
Vector Y_at(const BasePoint& x, const CalibrationParams& params);

/// Z(x, t) = Y(x, lambda|x|) on Omega'_lambda u S'_lambda. Throws DomainError
/// for any other point (2-plane x' = 0, outside the closed cone, origin).
Vector Z_at(const AmbientPoint& p, const CalibrationParams& params);

}  // namespace conecal
