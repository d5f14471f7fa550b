// conecal: batch entry point for the identity, threshold, calibration, flux and
// min-cut suites. Writes <out>/report.json, <out>/report.csv and one CSV per check
// under <out>/csv/. Exit status: 0 when no record fails, 1 when one does, 2 on a
// usage or configuration error.

#include "conecal/run_config.hpp"

#include <CLI11.hpp>

#include <chrono>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>

namespace fs = std::filesystem;
using namespace conecal;

namespace {

struct Options {
    std::vector<int> n;
    std::vector<std::string> lambda;
    double gamma = 0.0;
    std::uint64_t seed = 0;
    std::string out;
    std::string config;
    int samples = 0;
    double step = 0.0;
    double tol = 0.0;
    double metric_fault = 0.0;
    double spacing = 0.0;
    bool dump = false;
    bool print_config = false;
    bool quiet = false;
};

struct OptionHandles {
    CLI::Option* n = nullptr;
    CLI::Option* lambda = nullptr;
    CLI::Option* gamma = nullptr;
    CLI::Option* seed = nullptr;
    CLI::Option* out = nullptr;
    CLI::Option* config = nullptr;
    CLI::Option* samples = nullptr;
    CLI::Option* step = nullptr;
    CLI::Option* tol = nullptr;
    CLI::Option* metric_fault = nullptr;
    CLI::Option* spacing = nullptr;
};

OptionHandles add_common(CLI::App* app, Options& o)
{
    OptionHandles h;
    h.n = app->add_option("--n", o.n, "Base dimensions, comma separated")->delimiter(',');
    h.lambda = app->add_option("--lambda", o.lambda,
                               "Cone slopes: numbers, 'bar' for lambda_bar(n) or 'bar*F'")
                   ->delimiter(',');
    h.gamma = app->add_option("--gamma", o.gamma, "Fixed gamma instead of gamma_bar (verify)");
    h.seed = app->add_option("--seed", o.seed, "Base seed");
    h.out = app->add_option("--out", o.out, "Output directory");
    h.config = app->add_option("--config", o.config, "JSON config file")->check(CLI::ExistingFile);
    h.samples = app->add_option("--samples", o.samples, "Samples per (n, lambda)")
                    ->check(CLI::PositiveNumber);
    h.step = app->add_option("--step", o.step, "Finite-difference step")->check(CLI::PositiveNumber);
    h.tol = app->add_option("--tol", o.tol, "Headline tolerance of the command")
                ->check(CLI::NonNegativeNumber);
    app->add_flag("--print-config", o.print_config, "Print the effective config and exit");
    app->add_flag("--quiet", o.quiet, "Only print failures and the summary");
    return h;
}

CommonFlags to_flags(const Options& o, const OptionHandles& h)
{
    CommonFlags f;
    if (h.n->count()) {
        f.n = o.n;
    }
    if (h.lambda->count()) {
        std::vector<LambdaChoice> choices;
        for (const std::string& token : o.lambda) {
            choices.push_back(LambdaChoice::parse(token));
        }
        f.lambda = choices;
    }
    if (h.gamma->count()) {
        f.gamma = o.gamma;
    }
    if (h.seed->count()) {
        f.seed = o.seed;
    }
    if (h.out->count()) {
        f.out = o.out;
    }
    if (h.samples->count()) {
        f.samples = o.samples;
    }
    if (h.step->count()) {
        f.step = o.step;
    }
    if (h.tol->count()) {
        f.tol = o.tol;
    }
    if (h.metric_fault && h.metric_fault->count()) {
        f.metric_fault = o.metric_fault;
    }
    if (h.spacing && h.spacing->count()) {
        f.spacing = o.spacing;
    }
    return f;
}

std::string utc_now()
{
    const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

void write_text(const fs::path& path, const std::string& text)
{
    std::ofstream out(path);
    if (!out) {
        throw std::runtime_error("cannot write " + path.string());
    }
    out << text;
}

void write_outputs(const RunConfig& config, const VerificationReport& report)
{
    const fs::path dir(config.out_dir);
    fs::create_directories(dir / "csv");
    write_text(dir / "report.json", report.to_json().dump(2) + "\n");
    write_text(dir / "report.csv", report.to_csv());

    std::map<std::string, VerificationReport> per_check;
    for (const ReportRecord& r : report.records) {
        per_check[r.check].records.push_back(r);
    }
    for (const auto& [check, part] : per_check) {
        write_text(dir / "csv" / (check + ".csv"), part.to_csv());
    }

    if (config.command == Command::mincut && config.dump_problems) {
        for (const MincutCase& c : config.mincut_cases) {
            char name[96];
            std::snprintf(name, sizeof name, "cut_n%d_lambda%.6g_h%.6g_%s.txt", c.n, c.lambda,
                          c.spacing, to_string(c.mode));
            std::ofstream out(dir / name);
            dump_problem(build_lattice(case_spec(config.mincut, c)), out);
        }
    }
}

void print_record(const ReportRecord& r)
{
    const char* verdict = !r.pass ? "INFO" : (*r.pass ? "PASS" : "FAIL");
    std::printf("%-4s %-34s n=%-2d lambda=%-12.8g statistic=%-12.6g tol=%-10.3g", verdict,
                r.check.c_str(), r.n, r.lambda, r.statistic, r.tolerance);
    if (r.gamma) {
        std::printf(" gamma=%.8g", *r.gamma);
    }
    if (r.order) {
        std::printf(" order=%.4f", *r.order);
    }
    std::printf("\n");
}

int run_command(Command command, const Options& o, const OptionHandles& h)
{
    RunConfig config = resolve_config(
        command, h.config->count() ? std::optional<std::string>(o.config) : std::nullopt,
        to_flags(o, h));
    if (command == Command::mincut && o.dump) {
        if (config.mincut_cases.empty()) {
            throw std::invalid_argument("--dump needs explicit cases (--n, --lambda or --spacing)");
        }
        config.dump_problems = true;
    }
    if (o.print_config) {
        std::cout << config.to_json().dump(2) << '\n';
        return 0;
    }

    const auto start = std::chrono::steady_clock::now();
    VerificationReport report = run(config);
    const double seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    report.environment = {{"program", "conecal"}, {"finished_utc", utc_now()},
                          {"wall_seconds", seconds}};
    write_outputs(config, report);

    int failed = 0;
    int informational = 0;
    for (const ReportRecord& r : report.records) {
        if (!r.pass) {
            ++informational;
        } else if (!*r.pass) {
            ++failed;
        }
        if (!o.quiet || (r.pass && !*r.pass)) {
            print_record(r);
        }
    }
    std::printf("%s: %zu records, %d failed, %d informational, %.1f s -> %s\n",
                to_string(command), report.records.size(), failed, informational, seconds,
                (fs::path(config.out_dir) / "report.json").c_str());
    return failed == 0 ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Checks of the calibrated cone construction and its lattice experiments"};
    app.require_subcommand(1);

    struct Sub {
        Command command;
        CLI::App* app = nullptr;
        Options options;
        OptionHandles handles;
    };
    const std::vector<std::pair<Command, const char*>> commands = {
        {Command::identities, "Metric, frame and Hodge identities over an (n, lambda) grid"},
        {Command::threshold, "lambda_bar(n), bisection recovery, gamma_bar and the exact certificate"},
        {Command::verify, "Pointwise and divergence checks of the calibrating field"},
        {Command::flux, "Box, prism and tube flux quadrature"},
        {Command::mincut, "Lattice min-cut against the flat plane"},
    };
    // Options are bound by address, so the vector must not reallocate after this.
    std::vector<Sub> subs(commands.size());
    for (std::size_t i = 0; i < commands.size(); ++i) {
        subs[i].command = commands[i].first;
        subs[i].app = app.add_subcommand(to_string(commands[i].first), commands[i].second);
    }
    for (Sub& s : subs) {
        s.handles = add_common(s.app, s.options);
        if (s.command == Command::identities) {
            s.handles.metric_fault =
                s.app->add_option("--metric-fault", s.options.metric_fault,
                                  "Add this to the diagonal of the inverse metric (negative control)");
        }
        if (s.command == Command::mincut) {
            s.handles.spacing = s.app->add_option("--spacing", s.options.spacing, "Lattice spacing h")
                                    ->check(CLI::PositiveNumber);
            s.app->add_flag("--dump", s.options.dump, "Write each case's problem dump to --out");
        }
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    for (Sub& s : subs) {
        if (s.app->parsed()) {
            try {
                return run_command(s.command, s.options, s.handles);
            } catch (const std::invalid_argument& e) {
                std::fprintf(stderr, "conecal %s: %s\n", to_string(s.command), e.what());
                return 2;
            } catch (const std::runtime_error& e) {
                std::fprintf(stderr, "conecal %s: %s\n", to_string(s.command), e.what());
                return 2;
            }
        }
    }
    return 2;
}
