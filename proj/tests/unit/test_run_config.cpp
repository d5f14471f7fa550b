#include "conecal/calibration.hpp"
#include "conecal/run_config.hpp"

#include <gtest/gtest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>

using namespace conecal;

namespace {

std::string write_temp(const std::string& name, const std::string& text)
{
    const auto path = std::filesystem::temp_directory_path() / name;
    std::ofstream(path) << text;
    return path.string();
}

}  // namespace

TEST(LambdaChoice, ParsesTokens)
{
    const LambdaChoice a = LambdaChoice::parse("0.3");
    EXPECT_FALSE(a.relative);
    EXPECT_EQ(a.value, 0.3);
    const LambdaChoice b = LambdaChoice::parse("bar");
    EXPECT_TRUE(b.relative);
    EXPECT_EQ(b.value, 1.0);
    const LambdaChoice c = LambdaChoice::parse("bar*0.5");
    EXPECT_TRUE(c.relative);
    EXPECT_EQ(c.value, 0.5);
    EXPECT_DOUBLE_EQ(c.resolve(4), 0.5 * std::sqrt(2.0) / 4.0);
    EXPECT_DOUBLE_EQ(b.resolve(10), 7.0 / (4.0 * std::sqrt(2.0)));
    EXPECT_EQ(a.resolve(2), 0.3);
    EXPECT_THROW(b.resolve(2), std::invalid_argument);
    EXPECT_EQ(c.to_string(), "bar*0.5");
    EXPECT_EQ(b.to_string(), "bar");

    for (const char* bad : {"", "bar*", "bar*x", "0.3x", "barx", "nan", "inf", "*0.5"}) {
        EXPECT_THROW(LambdaChoice::parse(bad), std::invalid_argument) << bad;
    }
}

TEST(RunConfig, JsonRoundTrip)
{
    RunConfig c;
    c.command = Command::mincut;
    c.out_dir = "somewhere";
    c.identities.lambda_factors = {0.5};
    c.verify.gamma = 1.25;
    c.verify.tol.divergence = 3e-7;
    c.flux.tube_eps = {0.3, 0.2};
    c.mincut.stencil = Stencil::axis;
    c.mincut_cases = {{2, 1.0, 0.04, LatticeMode::full}, {4, 0.3, 0.02, LatticeMode::axisymmetric}};
    c.dump_problems = true;

    RunConfig d;
    d.merge(c.to_json_full());
    EXPECT_EQ(d.to_json_full(), c.to_json_full());
    EXPECT_EQ(d.command, Command::mincut);
    ASSERT_TRUE(d.verify.gamma.has_value());
    EXPECT_EQ(*d.verify.gamma, 1.25);
    EXPECT_EQ(d.mincut_cases.size(), 2u);
    EXPECT_EQ(d.mincut_cases[0].mode, LatticeMode::full);

    // A null gamma clears it again.
    d.merge(Json{{"verify", {{"gamma", nullptr}}}});
    EXPECT_FALSE(d.verify.gamma.has_value());
}

TEST(RunConfig, MergeKeepsUnsetValuesAndRejectsUnknownKeys)
{
    RunConfig c;
    c.merge(Json{{"verify", {{"samples", 17}, {"tolerances", {{"divergence", 2e-6}}}}}});
    EXPECT_EQ(c.verify.samples, 17);
    EXPECT_EQ(c.verify.tol.divergence, 2e-6);
    EXPECT_EQ(c.verify.tol.norm_slack, Tolerances{}.norm_slack);
    EXPECT_EQ(c.verify.divergence_samples, CalibrationSuiteConfig{}.divergence_samples);

    EXPECT_THROW(c.merge(Json{{"verify", {{"sample", 1}}}}), std::invalid_argument);
    EXPECT_THROW(c.merge(Json{{"verfiy", Json::object()}}), std::invalid_argument);
    EXPECT_THROW(c.merge(Json{{"verify", {{"tolerances", {{"bogus", 1.0}}}}}}),
                 std::invalid_argument);
    EXPECT_THROW(c.merge(Json{{"verify", {{"samples", "many"}}}}), std::invalid_argument);
    EXPECT_THROW(c.merge(Json{{"mincut", {{"stencil", "hex"}}}}), std::invalid_argument);
    EXPECT_THROW(c.merge(Json{{"command", "plot"}}), std::invalid_argument);
    EXPECT_THROW(c.merge(Json::array()), std::invalid_argument);
}

TEST(RunConfig, FlagsOverrideFileOverrideDefaults)
{
    const std::string path = write_temp(
        "conecal_cfg_precedence.json",
        R"({"command": "verify", "verify": {"samples": 500, "seed": 9, "n_values": [5]}})");

    CommonFlags flags;
    flags.seed = 42;
    const RunConfig c = resolve_config(Command::verify, path, flags);
    EXPECT_EQ(c.verify.samples, 500);                                        // file
    EXPECT_EQ(c.verify.seed, 42u);                                           // flag
    EXPECT_EQ(c.verify.n_values, std::vector<int>{5});                       // file
    EXPECT_EQ(c.verify.dual_path_samples, CalibrationSuiteConfig{}.dual_path_samples);  // default

    EXPECT_THROW(resolve_config(Command::flux, path, {}), std::invalid_argument);
    EXPECT_THROW(resolve_config(Command::verify, std::string("/nonexistent/cfg.json"), {}),
                 std::runtime_error);
    const std::string broken = write_temp("conecal_cfg_broken.json", "{ not json");
    EXPECT_THROW(resolve_config(Command::verify, broken, {}), std::runtime_error);
}

TEST(RunConfig, FlagRouting)
{
    CommonFlags f;
    f.lambda = std::vector<LambdaChoice>{LambdaChoice::parse("bar*0.5"), LambdaChoice::parse("0.2")};
    f.step = 1e-5;
    f.tol = 5e-7;

    RunConfig v;
    v.command = Command::verify;
    apply_flags(v, f);
    EXPECT_EQ(v.verify.lambda_factors, std::vector<double>{0.5});
    EXPECT_EQ(v.verify.lambdas, std::vector<double>{0.2});
    EXPECT_EQ(v.verify.steps, (std::vector<double>{1e-4, 1e-5}));
    EXPECT_EQ(v.verify.tol.divergence, 5e-7);

    RunConfig i;
    i.command = Command::identities;
    apply_flags(i, f);
    EXPECT_EQ(i.identities.lambdas, std::vector<double>{0.2});
    EXPECT_EQ(i.identities.lambda_factors, std::vector<double>{0.5});
    EXPECT_EQ(i.identities.step, 1e-5);
    EXPECT_EQ(i.identities.tol.identity, 5e-7);

    RunConfig t;
    t.command = Command::threshold;
    EXPECT_THROW(apply_flags(t, f), std::invalid_argument);

    RunConfig flux;
    flux.command = Command::flux;
    CommonFlags fl;
    fl.lambda = std::vector<LambdaChoice>{LambdaChoice::parse("bar")};
    EXPECT_THROW(apply_flags(flux, fl), std::invalid_argument);
    fl.lambda = std::vector<LambdaChoice>{LambdaChoice::parse("0.25")};
    apply_flags(flux, fl);
    EXPECT_EQ(flux.flux.box_lambda, 0.25);
    EXPECT_EQ(flux.flux.tube_lambda, 0.25);

    CommonFlags gamma;
    gamma.gamma = 1.0;
    RunConfig m;
    m.command = Command::mincut;
    EXPECT_THROW(apply_flags(m, gamma), std::invalid_argument);
}

TEST(RunConfig, MincutFlagsBuildCases)
{
    RunConfig c;
    c.command = Command::mincut;
    CommonFlags f;
    f.n = std::vector<int>{2, 4};
    apply_flags(c, f);
    ASSERT_EQ(c.mincut_cases.size(), 2u);
    EXPECT_EQ(c.mincut_cases[0].n, 2);
    EXPECT_EQ(c.mincut_cases[0].lambda, c.mincut.unstable_lambda);
    EXPECT_EQ(c.mincut_cases[0].spacing, c.mincut.unstable_spacing);
    EXPECT_EQ(c.mincut_cases[1].lambda, c.mincut.minimal_lambda);

    RunConfig d;
    d.command = Command::mincut;
    CommonFlags g;
    g.n = std::vector<int>{4};
    g.lambda = std::vector<LambdaChoice>{LambdaChoice::parse("bar")};
    g.spacing = 0.1;
    apply_flags(d, g);
    ASSERT_EQ(d.mincut_cases.size(), 1u);
    EXPECT_DOUBLE_EQ(d.mincut_cases[0].lambda, lambda_bar(4));
    EXPECT_EQ(d.mincut_cases[0].spacing, 0.1);
}

TEST(RunConfig, RunEchoesConfigAndIsDeterministic)
{
    RunConfig c;
    c.command = Command::identities;
    c.identities.n_values = {3};
    c.identities.lambdas = {0.5};
    c.identities.samples = 50;
    c.identities.hodge_pairs = 5;
    const VerificationReport a = run(c);
    const VerificationReport b = run(c);
    EXPECT_EQ(a.to_json().dump(), b.to_json().dump());
    EXPECT_EQ(a.config, c.to_json());
    EXPECT_EQ(a.config["identities"]["samples"], 50);
    EXPECT_TRUE(a.all_passed());

    RunConfig m;
    m.command = Command::mincut;
    m.mincut_cases = {{4, 0.3, 0.05, LatticeMode::axisymmetric}};
    const VerificationReport r = run(m);
    ASSERT_EQ(r.records.size(), 3u);
    EXPECT_EQ(r.records[0].check, "mincut_vs_plane");
    EXPECT_EQ(r.records[1].check, "mincut_solver_agreement");
    EXPECT_EQ(r.records[2].check, "mincut_facets_near_plane");
    EXPECT_TRUE(r.all_passed());
}

TEST(RunConfig, IdentityLambdaFactorsBelowFourAreInformational)
{
    IdentitySuiteConfig c;
    c.n_values = {2, 3};
    c.lambdas = {};
    c.lambda_factors = {1.0};
    c.samples = 10;
    c.hodge_pairs = 2;
    const VerificationReport r = run_identity_suite(c);
    ASSERT_EQ(r.records.size(), 2u);
    for (const ReportRecord& rec : r.records) {
        EXPECT_EQ(rec.check, "lambda_range");
        EXPECT_FALSE(rec.pass.has_value());
    }
}
