#include "conecal/run_config.hpp"

#include <fstream>
#include <set>
#include <stdexcept>

namespace conecal {

const char* to_string(Command command)
{
    switch (command) {
    case Command::identities:
        return "identities";
    case Command::threshold:
        return "threshold";
    case Command::verify:
        return "verify";
    case Command::flux:
        return "flux";
    case Command::mincut:
        return "mincut";
    }
    return "?";
}

Command command_from_string(const std::string& name)
{
    for (Command c : {Command::identities, Command::threshold, Command::verify, Command::flux,
                      Command::mincut}) {
        if (name == to_string(c)) {
            return c;
        }
    }
    throw std::invalid_argument("unknown command '" + name + "'");
}

namespace {

LatticeMode mode_from_string(const std::string& s)
{
    if (s == to_string(LatticeMode::axisymmetric)) {
        return LatticeMode::axisymmetric;
    }
    if (s == to_string(LatticeMode::full)) {
        return LatticeMode::full;
    }
    throw std::invalid_argument("unknown lattice mode '" + s + "'");
}

Stencil stencil_from_string(const std::string& s)
{
    if (s == to_string(Stencil::axis)) {
        return Stencil::axis;
    }
    if (s == to_string(Stencil::crofton26)) {
        return Stencil::crofton26;
    }
    throw std::invalid_argument("unknown stencil '" + s + "'");
}

// One field list per section, shared by the writer and the reader.

template <class V>
void visit(IdentitySuiteConfig& c, V& v)
{
    v("n_values", c.n_values);
    v("lambdas", c.lambdas);
    v("lambda_factors", c.lambda_factors);
    v("samples", c.samples);
    v("hodge_pairs", c.hodge_pairs);
    v("step", c.step);
    v("seed", c.seed);
    v("metric_fault", c.metric_fault);
    v("tolerances", c.tol);
}

template <class V>
void visit(ThresholdSuiteConfig& c, V& v)
{
    v("n_values", c.n_values);
    v("tol", c.tol);
    v("seed", c.seed);
    v("tolerances", c.tolerances);
}

template <class V>
void visit(CalibrationSuiteConfig& c, V& v)
{
    v("n_values", c.n_values);
    v("lambda_factors", c.lambda_factors);
    v("lambdas", c.lambdas);
    v("gamma", c.gamma);
    v("samples", c.samples);
    v("divergence_samples", c.divergence_samples);
    v("dual_path_samples", c.dual_path_samples);
    v("steps", c.steps);
    v("rho_min", c.rho_min);
    v("rho_max", c.rho_max);
    v("r_min_rel", c.r_min_rel);
    v("seed", c.seed);
    v("tolerances", c.tol);
}

template <class V>
void visit(FluxSuiteConfig& c, V& v)
{
    v("box_n", c.box_n);
    v("box_lambda", c.box_lambda);
    v("box_lo", c.box_lo);
    v("box_hi", c.box_hi);
    v("box_t0", c.box_t0);
    v("box_t1", c.box_t1);
    v("box_resolutions", c.box_resolutions);
    v("prism_resolution", c.prism_resolution);
    v("prism_t_top", c.prism_t_top);
    v("tube_n_values", c.tube_n_values);
    v("tube_lambda", c.tube_lambda);
    v("tube_eps", c.tube_eps);
    v("ratio_eps", c.ratio_eps);
    v("tube_resolution", c.tube_resolution);
    v("tube_angle_resolution", c.tube_angle_resolution);
    v("seed", c.seed);
    v("tolerances", c.tol);
}

template <class V>
void visit(MincutSuiteConfig& c, V& v)
{
    v("radius", c.radius);
    v("shell", c.shell);
    v("minimal_n", c.minimal_n);
    v("minimal_lambda", c.minimal_lambda);
    v("minimal_spacing", c.minimal_spacing);
    v("unstable_n", c.unstable_n);
    v("unstable_lambda", c.unstable_lambda);
    v("unstable_spacing", c.unstable_spacing);
    v("probe_spacings", c.probe_spacings);
    v("full_mode_spacing", c.full_mode_spacing);
    v("exploratory_n", c.exploratory_n);
    v("exploratory_lambda", c.exploratory_lambda);
    v("exploratory_spacing", c.exploratory_spacing);
    v("tol_h", c.tol_h);
    v("instability_margin", c.instability_margin);
    v("facet_offset_spacings", c.facet_offset_spacings);
    v("clearance_spacings", c.clearance_spacings);
    v("clearance_refinement_ratio", c.clearance_refinement_ratio);
    v("stencil", c.stencil);
    v("solver_agreement", c.solver_agreement);
    v("seed", c.seed);
}

struct Writer {
    Json out = Json::object();

    template <class T>
    void operator()(const char* key, const T& value)
    {
        out[key] = value;
    }
    void operator()(const char* key, const std::optional<double>& value)
    {
        out[key] = value ? Json(*value) : Json(nullptr);
    }
    void operator()(const char* key, const Tolerances& value) { out[key] = value.to_json(); }
    void operator()(const char* key, const Stencil& value) { out[key] = to_string(value); }
};

struct Reader {
    const Json& in;
    std::string section;
    std::set<std::string> seen;

    Reader(const Json& j, std::string name) : in(j), section(std::move(name))
    {
        if (!in.is_object()) {
            throw std::invalid_argument(section + ": expected an object");
        }
    }

    const Json* find(const char* key)
    {
        auto it = in.find(key);
        if (it == in.end()) {
            return nullptr;
        }
        seen.insert(key);
        return &*it;
    }

    template <class T>
    void operator()(const char* key, T& value)
    {
        if (const Json* j = find(key)) {
            try {
                value = j->get<T>();
            } catch (const nlohmann::json::exception& e) {
                throw std::invalid_argument(section + "." + key + ": " + e.what());
            }
        }
    }
    void operator()(const char* key, std::optional<double>& value)
    {
        if (const Json* j = find(key)) {
            if (j->is_null()) {
                value.reset();
            } else if (j->is_number()) {
                value = j->get<double>();
            } else {
                throw std::invalid_argument(section + "." + key + ": expected a number or null");
            }
        }
    }
    void operator()(const char* key, Tolerances& value)
    {
        if (const Json* j = find(key)) {
            if (!j->is_object()) {
                throw std::invalid_argument(section + "." + key + ": expected an object");
            }
            Json merged = value.to_json();
            merged.update(*j);
            value = Tolerances::from_json(merged);
        }
    }
    void operator()(const char* key, Stencil& value)
    {
        if (const Json* j = find(key)) {
            value = stencil_from_string(j->get<std::string>());
        }
    }

    void finish() const
    {
        for (const auto& [key, unused] : in.items()) {
            if (!seen.count(key)) {
                throw std::invalid_argument(section + ": unknown key '" + key + "'");
            }
        }
    }
};

template <class C>
Json write_section(const C& config)
{
    Writer w;
    visit(const_cast<C&>(config), w);
    return w.out;
}

Json mincut_json(const RunConfig& c)
{
    Json j = write_section(c.mincut);
    Json cases = Json::array();
    for (const MincutCase& mc : c.mincut_cases) {
        cases.push_back(mc.to_json());
    }
    j["cases"] = cases;
    j["dump"] = c.dump_problems;
    return j;
}

void read_mincut(RunConfig& c, const Json& j)
{
    Reader r(j, "mincut");
    visit(c.mincut, r);
    if (const Json* cases = r.find("cases")) {
        if (!cases->is_array()) {
            throw std::invalid_argument("mincut.cases: expected an array");
        }
        c.mincut_cases.clear();
        for (const Json& item : *cases) {
            MincutCase mc;
            Reader cr(item, "mincut.cases[]");
            cr("n", mc.n);
            cr("lambda", mc.lambda);
            cr("spacing", mc.spacing);
            if (const Json* mode = cr.find("mode")) {
                mc.mode = mode_from_string(mode->get<std::string>());
            }
            cr.finish();
            c.mincut_cases.push_back(mc);
        }
    }
    r("dump", c.dump_problems);
    r.finish();
}

Json section_json(const RunConfig& c, Command command)
{
    switch (command) {
    case Command::identities:
        return write_section(c.identities);
    case Command::threshold:
        return write_section(c.threshold);
    case Command::verify:
        return write_section(c.verify);
    case Command::flux:
        return write_section(c.flux);
    case Command::mincut:
        return mincut_json(c);
    }
    return Json::object();
}

void reject(const RunConfig& c, const char* flag)
{
    throw std::invalid_argument(std::string(flag) + " has no meaning for '" +
                                to_string(c.command) + "'");
}

}  // namespace

Json RunConfig::to_json() const
{
    return {{"command", to_string(command)},
            {"out", out_dir},
            {to_string(command), section_json(*this, command)}};
}

Json RunConfig::to_json_full() const
{
    Json j = {{"command", to_string(command)}, {"out", out_dir}};
    for (Command c : {Command::identities, Command::threshold, Command::verify, Command::flux,
                      Command::mincut}) {
        j[to_string(c)] = section_json(*this, c);
    }
    return j;
}

void RunConfig::merge(const Json& j)
{
    Reader r(j, "config");
    if (const Json* c = r.find("command")) {
        command = command_from_string(c->get<std::string>());
    }
    r("out", out_dir);
    if (const Json* s = r.find("identities")) {
        Reader sr(*s, "identities");
        visit(identities, sr);
        sr.finish();
    }
    if (const Json* s = r.find("threshold")) {
        Reader sr(*s, "threshold");
        visit(threshold, sr);
        sr.finish();
    }
    if (const Json* s = r.find("verify")) {
        Reader sr(*s, "verify");
        visit(verify, sr);
        sr.finish();
    }
    if (const Json* s = r.find("flux")) {
        Reader sr(*s, "flux");
        visit(flux, sr);
        sr.finish();
    }
    if (const Json* s = r.find("mincut")) {
        read_mincut(*this, *s);
    }
    r.finish();
}

void apply_flags(RunConfig& c, const CommonFlags& f)
{
    if (f.out) {
        c.out_dir = *f.out;
    }
    if (f.metric_fault && c.command != Command::identities) {
        reject(c, "--metric-fault");
    }
    if (f.spacing && c.command != Command::mincut) {
        reject(c, "--spacing");
    }
    if (f.gamma && c.command != Command::verify) {
        reject(c, "--gamma");
    }

    switch (c.command) {
    case Command::identities: {
        auto& s = c.identities;
        if (f.n) {
            s.n_values = *f.n;
        }
        if (f.lambda) {
            s.lambdas.clear();
            s.lambda_factors.clear();
            for (const LambdaChoice& l : *f.lambda) {
                (l.relative ? s.lambda_factors : s.lambdas).push_back(l.value);
            }
        }
        if (f.seed) {
            s.seed = *f.seed;
        }
        if (f.samples) {
            s.samples = *f.samples;
        }
        if (f.step) {
            s.step = *f.step;
        }
        if (f.tol) {
            s.tol.identity = *f.tol;
        }
        if (f.metric_fault) {
            s.metric_fault = *f.metric_fault;
        }
        break;
    }
    case Command::threshold: {
        auto& s = c.threshold;
        if (f.lambda) {
            reject(c, "--lambda");
        }
        if (f.samples) {
            reject(c, "--samples");
        }
        if (f.step) {
            reject(c, "--step");
        }
        if (f.n) {
            s.n_values = *f.n;
        }
        if (f.seed) {
            s.seed = *f.seed;
        }
        if (f.tol) {
            s.tol = *f.tol;
            s.tolerances.threshold = *f.tol;
        }
        break;
    }
    case Command::verify: {
        auto& s = c.verify;
        if (f.n) {
            s.n_values = *f.n;
        }
        if (f.lambda) {
            s.lambdas.clear();
            s.lambda_factors.clear();
            for (const LambdaChoice& l : *f.lambda) {
                (l.relative ? s.lambda_factors : s.lambdas).push_back(l.value);
            }
        }
        if (f.gamma) {
            s.gamma = *f.gamma;
        }
        if (f.seed) {
            s.seed = *f.seed;
        }
        if (f.samples) {
            s.samples = *f.samples;
        }
        if (f.step) {
            s.steps = {10.0 * *f.step, *f.step};
        }
        if (f.tol) {
            s.tol.divergence = *f.tol;
        }
        break;
    }
    case Command::flux: {
        auto& s = c.flux;
        if (f.samples) {
            reject(c, "--samples");
        }
        if (f.step) {
            reject(c, "--step");
        }
        if (f.n) {
            s.tube_n_values = *f.n;
        }
        if (f.lambda) {
            if (f.lambda->size() != 1 || f.lambda->front().relative) {
                throw std::invalid_argument("flux: --lambda takes a single number");
            }
            s.box_lambda = f.lambda->front().value;
            s.tube_lambda = f.lambda->front().value;
        }
        if (f.seed) {
            s.seed = *f.seed;
        }
        if (f.tol) {
            s.tol.cone_face = *f.tol;
        }
        break;
    }
    case Command::mincut: {
        auto& s = c.mincut;
        if (f.samples) {
            reject(c, "--samples");
        }
        if (f.step) {
            reject(c, "--step");
        }
        if (f.seed) {
            s.seed = *f.seed;
        }
        if (f.tol) {
            s.tol_h = *f.tol;
        }
        if (f.n || f.lambda || f.spacing) {
            const std::vector<int> ns = f.n ? *f.n : std::vector<int>{s.minimal_n};
            c.mincut_cases.clear();
            for (int n : ns) {
                std::vector<double> lambdas;
                if (f.lambda) {
                    for (const LambdaChoice& l : *f.lambda) {
                        lambdas.push_back(l.resolve(n));
                    }
                } else {
                    lambdas.push_back(n == 2 ? s.unstable_lambda : s.minimal_lambda);
                }
                for (double lambda : lambdas) {
                    MincutCase mc;
                    mc.n = n;
                    mc.lambda = lambda;
                    mc.spacing = f.spacing ? *f.spacing
                                           : (n == 2 ? s.unstable_spacing : s.minimal_spacing);
                    c.mincut_cases.push_back(mc);
                }
            }
        }
        break;
    }
    }
}

RunConfig resolve_config(Command command, const std::optional<std::string>& config_path,
                         const CommonFlags& flags)
{
    RunConfig config;
    config.command = command;
    if (config_path) {
        std::ifstream in(*config_path);
        if (!in) {
            throw std::runtime_error("cannot open config file '" + *config_path + "'");
        }
        Json j;
        try {
            j = Json::parse(in);
        } catch (const nlohmann::json::parse_error& e) {
            throw std::runtime_error("config file '" + *config_path + "': " + e.what());
        }
        config.merge(j);
        if (config.command != command) {
            throw std::invalid_argument("config file is for '" + std::string(to_string(config.command)) +
                                        "', not '" + to_string(command) + "'");
        }
    }
    apply_flags(config, flags);
    return config;
}

VerificationReport run(const RunConfig& config)
{
    VerificationReport report;
    switch (config.command) {
    case Command::identities:
        report = run_identity_suite(config.identities);
        break;
    case Command::threshold:
        report = run_threshold_suite(config.threshold);
        break;
    case Command::verify:
        report = run_calibration_suite(config.verify);
        break;
    case Command::flux:
        report = run_flux_suite(config.flux);
        break;
    case Command::mincut:
        report = config.mincut_cases.empty() ? run_mincut_suite(config.mincut)
                                             : run_mincut_cases(config.mincut, config.mincut_cases);
        break;
    }
    report.config = config.to_json();
    return report;
}

}  // namespace conecal
