#include "conecal/verifier.hpp"

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

using namespace conecal;

namespace {

double sphere_area(int k)
{
    // |S^k| = 2 pi^{(k+1)/2} / Gamma((k+1)/2)
    return 2.0 * std::pow(M_PI, 0.5 * (k + 1)) / std::tgamma(0.5 * (k + 1));
}

// Lateral area of B_1 n Omega_lambda n {|x'| = eps}, by adaptive quadrature in x_1.
double tube_area_oracle(int n, double lambda, double eps)
{
    const double a = std::sqrt(1.0 / (1.0 + lambda * lambda) - eps * eps);
    auto length = [&](double x) {
        const double rho = std::sqrt(x * x + eps * eps);
        return std::sqrt(1.0 - rho * rho) - lambda * rho;
    };
    const double integral =
        boost::math::quadrature::gauss_kronrod<double, 61>::integrate(length, -a, a, 15, 1e-14);
    return sphere_area(n - 2) * std::pow(eps, n - 2) * integral;
}

const ReportRecord& find_record(const VerificationReport& report, const std::string& check)
{
    auto it = std::find_if(report.records.begin(), report.records.end(),
                           [&](const ReportRecord& r) { return r.check == check; });
    if (it == report.records.end()) {
        throw std::out_of_range("no record " + check);
    }
    return *it;
}

AmbientField affine_field(const Matrix& a, const Vector& b)
{
    return [a, b](const AmbientPoint& p) -> Vector { return a * p.stacked() + b; };
}

}  // namespace

TEST(Sampling, SameSeedSamePoints)
{
    SamplePlan plan{ConeParams(5, 0.4), SampleRegion::interior};
    plan.count = 50;
    plan.seed = 99;
    const auto a = draw_samples(plan);
    const auto b = draw_samples(plan);
    ASSERT_EQ(a.size(), 50u);
    for (std::size_t i = 0; i < a.size(); ++i) {
        EXPECT_EQ(a[i].x, b[i].x);
        EXPECT_EQ(a[i].t, b[i].t);
    }
    plan.seed = 100;
    const auto c = draw_samples(plan);
    EXPECT_NE(a[0].x, c[0].x);
}

TEST(Sampling, RegionsAndClearance)
{
    const ConeParams cone(4, 0.7);
    for (SampleRegion region :
         {SampleRegion::interior, SampleRegion::surface, SampleRegion::hyperplane}) {
        SamplePlan plan{cone, region, 0.1, 10.0, 1e-3};
        plan.count = 400;
        plan.seed = 3;
        for (const AmbientPoint& p : draw_samples(plan)) {
            const double rho = p.x.norm();
            EXPECT_GE(rho, 0.1 * (1 - 1e-12));
            EXPECT_LE(rho, 10.0 * (1 + 1e-12));
            EXPECT_GE(p.x.tail(3).norm(), 1e-3 * rho * (1 - 1e-9));
            const Region got = classify(p, cone, kSampledSurfaceBand);
            switch (region) {
            case SampleRegion::interior:
                EXPECT_EQ(got, Region::interior_primed);
                break;
            case SampleRegion::surface:
                EXPECT_EQ(got, Region::surface_primed);
                break;
            case SampleRegion::hyperplane:
                EXPECT_EQ(p.x[0], 0.0);
                EXPECT_TRUE(got == Region::interior_primed || got == Region::surface_primed);
                break;
            }
        }
    }
}

TEST(Sampling, InvalidPlansThrow)
{
    SamplePlan plan{ConeParams(4, 0.3)};
    plan.rho_min = 2.0;
    plan.rho_max = 1.0;
    EXPECT_THROW(draw_samples(plan), std::invalid_argument);
    plan = SamplePlan{ConeParams(4, 0.3)};
    plan.r_min_rel = 0.0;
    EXPECT_THROW(draw_samples(plan), std::invalid_argument);
    plan = SamplePlan{ConeParams(4, 0.3)};
    plan.count = 0;
    EXPECT_THROW(draw_samples(plan), std::invalid_argument);
}

TEST(Sampling, DerivedSeedsDependOnTagAndBase)
{
    EXPECT_EQ(derive_seed(1, "a"), derive_seed(1, "a"));
    EXPECT_NE(derive_seed(1, "a"), derive_seed(1, "b"));
    EXPECT_NE(derive_seed(1, "a"), derive_seed(2, "a"));
}

TEST(Report, TolerancesRoundTrip)
{
    Tolerances t;
    t.divergence = 3e-7;
    t.box_order_band = 0.25;
    const Tolerances back = Tolerances::from_json(t.to_json());
    EXPECT_EQ(back.to_json(), t.to_json());

    const Tolerances partial = Tolerances::from_json(Json{{"tangency", 1e-9}});
    EXPECT_EQ(partial.tangency, 1e-9);
    EXPECT_EQ(partial.identity, Tolerances{}.identity);

    EXPECT_THROW(Tolerances::from_json(Json{{"tangenci", 1e-9}}), std::invalid_argument);
}

TEST(Report, PassSemanticsAndSerialization)
{
    VerificationReport report;
    ReportRecord ok;
    ok.check = "a";
    ok.pass = true;
    ReportRecord info;
    info.check = "b";
    ReportRecord bad;
    bad.check = "c";
    bad.pass = false;
    bad.gamma = 0.5;

    report.records = {ok, info};
    EXPECT_TRUE(report.all_passed());
    report.records.push_back(bad);
    EXPECT_FALSE(report.all_passed());
    ASSERT_EQ(report.failures().size(), 1u);
    EXPECT_EQ(report.failures()[0]->check, "c");

    const Json j = report.to_json();
    EXPECT_EQ(j["schema_version"], VerificationReport::kSchemaVersion);
    EXPECT_TRUE(j["records"][1]["pass"].is_null());
    EXPECT_EQ(j["summary"]["passed"], 1);
    EXPECT_EQ(j["summary"]["failed"], 1);
    EXPECT_EQ(j["summary"]["informational"], 1);

    std::istringstream csv(report.to_csv());
    std::string line;
    std::getline(csv, line);
    EXPECT_EQ(line, "check,n,lambda,gamma,statistic,tolerance,order,pass,seed");
    int rows = 0;
    while (std::getline(csv, line)) {
        ++rows;
    }
    EXPECT_EQ(rows, 3);
}

TEST(Divergence, AffineFieldIsExact)
{
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    Matrix a(5, 5);
    Vector b(5);
    for (int i = 0; i < 5; ++i) {
        b[i] = u(rng);
        for (int j = 0; j < 5; ++j) {
            a(i, j) = u(rng);
        }
    }
    const AmbientPoint p{Vector::Constant(4, 0.3), 2.0};
    EXPECT_NEAR(ambient_divergence(affine_field(a, b), p, 1e-3), a.trace(), 1e-12);
    const Matrix zero = Matrix::Zero(5, 5);
    EXPECT_EQ(ambient_divergence(affine_field(zero, Vector::Unit(5, 0)), p, 1e-3), 0.0);
    EXPECT_THROW(ambient_divergence(affine_field(a, b), p, 0.0), std::invalid_argument);
}

TEST(Divergence, CalibrationFieldSmallRun)
{
    const CalibrationParams params = CalibrationParams::with_default_gamma(ConeParams(5, 0.4));
    SamplePlan plan{params.cone, SampleRegion::interior};
    plan.count = 200;
    plan.seed = 11;
    const ReportRecord r = check_divergence(plan, params, {1e-3, 1e-4}, Tolerances{});
    ASSERT_TRUE(r.pass.has_value());
    EXPECT_TRUE(*r.pass) << r.to_json().dump();
    ASSERT_TRUE(r.order.has_value());
    EXPECT_NEAR(*r.order, 2.0, 0.1);

    plan.region = SampleRegion::surface;
    EXPECT_THROW(check_divergence(plan, params, {1e-3, 1e-4}, Tolerances{}),
                 std::invalid_argument);
}

TEST(PointwiseChecks, SmallRunsPass)
{
    const CalibrationParams params = CalibrationParams::with_default_gamma(ConeParams(4, 0.3));
    SamplePlan plan{params.cone, SampleRegion::interior};
    plan.count = 300;
    plan.seed = 17;
    const Tolerances tol;
    EXPECT_TRUE(*check_norm_bound(plan, params, tol).pass);
    EXPECT_TRUE(*check_vertical_invariance(plan, params, tol).pass);
    EXPECT_TRUE(*check_dual_path(plan, params, {1e-2, 1e-3}, tol).pass);
    plan.region = SampleRegion::surface;
    EXPECT_TRUE(*check_tangency(plan, params, tol).pass);
    plan.region = SampleRegion::hyperplane;
    EXPECT_TRUE(*check_hyperplane(plan, params, tol).pass);
}

TEST(PointwiseChecks, NormBoundIsInformationalAboveThreshold)
{
    const ConeParams cone(4, 1.5 * lambda_bar(4));
    const CalibrationParams params(cone, 1.0);
    SamplePlan plan{cone, SampleRegion::interior};
    plan.count = 200;
    const ReportRecord r = check_norm_bound(plan, params, Tolerances{});
    EXPECT_FALSE(r.pass.has_value());
}

TEST(Flux, AffineFieldBoxMatchesDivergenceTheorem)
{
    const ConeParams cone(3, 0.3);
    Matrix a(4, 4);
    a << 1.0, 0.2, 0.0, 0.1, 0.0, -0.5, 0.3, 0.0, 0.4, 0.0, 2.0, -0.2, 0.0, 0.1, 0.0, 0.7;
    const Vector b = Vector::Constant(4, 0.25);
    const BoxRegion box{Vector::Constant(3, 0.2), Vector::Constant(3, 0.5), 0.5, 1.0};
    FluxOptions opt;
    opt.resolution = 4;
    opt.assume_t_invariant = false;
    const FluxResult res = flux_integral(box, cone, affine_field(a, b), opt);
    const double volume = 0.3 * 0.3 * 0.3 * 0.5;
    EXPECT_NEAR(res.total, a.trace() * volume, 1e-13);
    EXPECT_EQ(res.faces.size(), 8u);
    EXPECT_NO_THROW(res.face("t_hi"));
    EXPECT_THROW(res.face("nope"), std::out_of_range);
}

TEST(Flux, TInvariantShortcutAgreesWithFullQuadrature)
{
    const CalibrationParams params = CalibrationParams::with_default_gamma(ConeParams(4, 0.3));
    const AmbientField z = calibration_field(params);
    const BoxRegion box{Vector::Constant(4, 0.2), Vector::Constant(4, 0.6), 0.5, 1.0};
    FluxOptions fast;
    fast.resolution = 6;
    FluxOptions full = fast;
    full.assume_t_invariant = false;
    const FluxResult a = flux_integral(box, params.cone, z, fast);
    const FluxResult b = flux_integral(box, params.cone, z, full);
    EXPECT_NEAR(a.total, b.total, 1e-13);
    EXPECT_LT(a.evaluations, b.evaluations);
}

TEST(Flux, BoxOutsideDomainThrows)
{
    const ConeParams cone(4, 0.3);
    const AmbientField e1 = [](const AmbientPoint&) { return Vector(Vector::Unit(5, 0)); };
    FluxOptions opt;
    opt.resolution = 2;
    Vector lo = Vector::Constant(4, -0.1);
    const Vector hi = Vector::Constant(4, 0.5);
    EXPECT_THROW(flux_integral(BoxRegion{lo, hi, 0.5, 1.0}, cone, e1, opt), DomainError);
    lo = Vector::Constant(4, 0.2);
    EXPECT_THROW(flux_integral(BoxRegion{lo, hi, 0.01, 1.0}, cone, e1, opt), DomainError);
}

TEST(Flux, PrismConstantFieldsBalance)
{
    const ConeParams cone(3, 0.4);
    const ConePrismRegion prism{Vector::Constant(3, 0.2), Vector::Constant(3, 0.6), 1.0};
    const AmbientField et = [](const AmbientPoint&) { return Vector(Vector::Unit(4, 3)); };
    FluxOptions opt;
    opt.resolution = 16;
    const FluxResult vertical = flux_integral(prism, cone, et, opt);
    const double base_area = 0.4 * 0.4 * 0.4;
    EXPECT_NEAR(vertical.face("t_top").value, base_area, 1e-14);
    EXPECT_NEAR(vertical.face("cone").value, -base_area, 1e-14);
    EXPECT_NEAR(vertical.total, 0.0, 1e-14);

    // Constant e_1: zero divergence, but the curved face is only resolved to O(h^2).
    const AmbientField e1 = [](const AmbientPoint&) { return Vector(Vector::Unit(4, 0)); };
    const double coarse = std::abs(flux_integral(prism, cone, e1, opt).total);
    opt.resolution = 32;
    const double fine = std::abs(flux_integral(prism, cone, e1, opt).total);
    EXPECT_LT(fine, 1e-4);
    EXPECT_NEAR(std::log2(coarse / fine), 2.0, 0.2);
}

TEST(Flux, PrismConeFaceVanishesForCalibration)
{
    const CalibrationParams params = CalibrationParams::with_default_gamma(ConeParams(4, 0.3));
    const ConePrismRegion prism{Vector::Constant(4, 0.2), Vector::Constant(4, 0.6), 1.0};
    FluxOptions opt;
    opt.resolution = 6;
    const FluxResult res = flux_integral(prism, params.cone, calibration_field(params), opt);
    EXPECT_LT(std::abs(res.face("cone").value), 1e-12);
    EXPECT_LT(res.face("cone").max_normal, 1e-12);
}

TEST(Flux, TubeAreaMatchesQuadratureOracle)
{
    for (int n : {3, 4, 5}) {
        for (double eps : {0.2, 0.05}) {
            const double exact = tube_area_oracle(n, 0.3, eps);
            FluxOptions opt;
            opt.resolution = 400;
            opt.angle_resolution = 8;
            const double coarse = tube_area(eps, ConeParams(n, 0.3), opt);
            opt.angle_resolution = 16;
            const double fine = tube_area(eps, ConeParams(n, 0.3), opt);
            EXPECT_NEAR(fine / exact, 1.0, 5e-3) << "n=" << n << " eps=" << eps;
            if (n > 3) {
                // Midpoint error in the polar angles: O(h^2).
                EXPECT_NEAR(std::log2(std::abs(coarse / exact - 1) / std::abs(fine / exact - 1)),
                            2.0, 0.2);
            } else {
                // S^1 with a constant integrand is integrated exactly.
                EXPECT_NEAR(coarse / exact, 1.0, 1e-5);
            }
        }
    }
}

TEST(Flux, TubeUnitNormalFieldReproducesArea)
{
    const ConeParams cone(4, 0.3);
    FluxOptions opt;
    opt.resolution = 50;
    opt.absolute = false;
    // The radial field -x'/|x'| is the outward unit normal of Omega^eps on the tube.
    const AmbientField inward = [](const AmbientPoint& p) {
        Vector v = Vector::Zero(5);
        v.segment(1, 3) = -p.x.tail(3).normalized();
        return v;
    };
    const FluxResult res = flux_integral(TubeRegion{0.1}, cone, inward, opt);
    EXPECT_NEAR(res.total, tube_area(0.1, cone, opt), 1e-13);
}

TEST(Flux, LogLogSlope)
{
    EXPECT_NEAR(loglog_slope({1.0, 2.0, 4.0}, {3.0, 12.0, 48.0}), 2.0, 1e-14);
    EXPECT_THROW(loglog_slope({1.0}, {1.0}), std::invalid_argument);
    EXPECT_THROW(loglog_slope({1.0, 2.0}, {1.0, -1.0}), std::domain_error);
}

TEST(Suites, ThresholdSuitePasses)
{
    const VerificationReport r = run_threshold_suite(ThresholdSuiteConfig{});
    EXPECT_TRUE(r.all_passed());
    EXPECT_TRUE(*find_record(r, "threshold_range").pass);
    EXPECT_EQ(find_record(r, "threshold_range").n, 3);
}

TEST(Suites, IdentitySuiteSmallRunPasses)
{
    IdentitySuiteConfig cfg;
    cfg.n_values = {2, 4};
    cfg.lambdas = {0.5};
    cfg.samples = 100;
    cfg.hodge_pairs = 5;
    const VerificationReport r = run_identity_suite(cfg);
    EXPECT_EQ(r.records.size(), 24u);
    EXPECT_TRUE(r.all_passed());
}

TEST(Suites, MetricFaultIsPinpointed)
{
    IdentitySuiteConfig cfg;
    cfg.n_values = {4};
    cfg.lambdas = {0.5};
    cfg.samples = 100;
    cfg.hodge_pairs = 5;
    cfg.metric_fault = 1e-6;
    const VerificationReport r = run_identity_suite(cfg);
    EXPECT_FALSE(r.all_passed());
    EXPECT_FALSE(*find_record(r, "metric_inverse").pass);
    EXPECT_TRUE(*find_record(r, "metric_det").pass);
    EXPECT_TRUE(*find_record(r, "frame_gram").pass);
}

TEST(Suites, CalibrationSuiteIsReproducible)
{
    CalibrationSuiteConfig cfg;
    cfg.n_values = {4};
    cfg.samples = 200;
    cfg.divergence_samples = 50;
    cfg.dual_path_samples = 20;
    const VerificationReport a = run_calibration_suite(cfg);
    const VerificationReport b = run_calibration_suite(cfg);
    EXPECT_TRUE(a.all_passed());
    EXPECT_EQ(a.to_json().dump(), b.to_json().dump());
}
