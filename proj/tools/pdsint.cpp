// pdsint: integration runs, stability reports, experiment reproduction and
// convergence-order studies for linear production-destruction systems.
//
// Exit codes: 0 ok, 2 usage or model error, 3 numerical failure.

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include "pdsint/csv.hpp"
#include "pdsint/experiments.hpp"
#include "pdsint/model_io.hpp"
#include "pdsint/schemes.hpp"
#include "pdsint/stability.hpp"

namespace {

using namespace pdsint;

constexpr int kExitUsage = 2;
constexpr int kExitNumerical = 3;

struct ModelArgs {
    std::string model;
    std::string scheme = "geco1";
    double alpha = 1.0;
    std::optional<std::uint64_t> seed;
    std::size_t dim = 5;
};

ModelDocument load_model(const ModelArgs& a) {
    if (a.seed) {
        if (!a.model.empty()) throw ModelError("--seed and --model are mutually exclusive");
        return parse_model("builtin:random?seed=" + std::to_string(*a.seed) + "&n=" + std::to_string(a.dim));
    }
    if (a.model.empty()) throw ModelError("--model is required");
    if (a.model.rfind("builtin:", 0) == 0) return parse_model(a.model);
    std::ifstream f(a.model, std::ios::binary);
    if (!f) throw ModelError("cannot read model file '" + a.model + "'");
    std::ostringstream text;
    text << f.rdbuf();
    try {
        return parse_model(text.str());
    } catch (const ParseError& e) {
        throw ParseError(e.line(), a.model + ": " + e.what());
    }
}

void emit(const CsvTable& table, const std::string& out) {
    if (out.empty() || out == "-")
        std::cout << table.str();
    else
        table.write(out);
}

void add_model_options(CLI::App* cmd, ModelArgs& a) {
    cmd->add_option("--model", a.model, "builtin:<name>[?k=v&...] or a model file");
    cmd->add_option("--scheme", a.scheme, "euler, heun, geco1, geco2, gbbks1, gbbks2");
    cmd->add_option("--alpha", a.alpha, "gbbks2 inner-stage fraction (>= 1/2)");
    cmd->add_option("--seed", a.seed, "use a seeded random Metzler system instead of --model");
    cmd->add_option("--dim", a.dim, "dimension of the seeded random system");
}

int run_integrate(const ModelArgs& a, double dt, std::size_t steps, const std::string& out) {
    const ModelDocument doc = load_model(a);
    const LinearPds model = doc.model();
    const SchemeSpec scheme = SchemeSpec::make(parse_scheme_id(a.scheme), a.alpha);
    const Trajectory tr = integrate(model, scheme, doc.y0, dt, steps);

    const Matrix propagator = expm(model.matrix(), dt);
    Vector reference = doc.y0;
    CsvTable table(state_header(model.dimension(), {"step", "t"}, {"inv_defect", "err"}));
    for (std::size_t n = 0; n < tr.states.size(); ++n) {
        if (n > 0) reference = propagator * reference;
        std::vector<double> row = {static_cast<double>(n), tr.time(n)};
        row.insert(row.end(), tr.states[n].begin(), tr.states[n].end());
        row.push_back(tr.invariant_defect[n]);
        row.push_back(max_norm_distance(tr.states[n], reference));
        table.add_row(row);
    }
    emit(table, out);
    if (tr.degenerate_steps > 0)
        std::cerr << "warning: " << tr.degenerate_steps << " step(s) hit an infinite phi argument\n";
    if (!tr.complete()) {
        std::cerr << "error: " << *tr.failure << '\n';
        return kExitNumerical;
    }
    return 0;
}

int run_stability(const ModelArgs& a, std::optional<double> dt) {
    const ModelDocument doc = load_model(a);
    const LinearPds model = doc.model();
    const SchemeSpec scheme = SchemeSpec::make(parse_scheme_id(a.scheme), a.alpha);
    const auto fmt = [](double v) { return CsvTable::format(v); };

    const CriticalStep cs = critical_step(model, scheme.id);
    std::cout << "scheme: " << to_string(scheme.id) << '\n';
    if (cs.unconditional)
        std::cout << "critical_dt: unconditional\n";
    else
        std::cout << "critical_dt: " << fmt(cs.dt_star) << '\n' << "bracket_width: " << fmt(cs.bracket_width) << '\n';
    std::cout << "binding_eigenvalue: " << fmt(cs.binding_eigenvalue.real()) << (cs.binding_eigenvalue.imag() < 0 ? "" : "+")
              << fmt(cs.binding_eigenvalue.imag()) << "i\n";

    const Certificate c = unconditional_certificate(model);
    std::cout << "certificate_m: " << fmt(c.m_value) << '\n'
              << "certificate_trace: " << fmt(c.trace_s_minus) << '\n'
              << "certificate_product: " << fmt(c.product) << '\n'
              << "certificate_holds: " << (c.holds ? "true" : "false") << '\n';

    if (dt) {
        const Vector ys = steady_state_for(model, doc.y0);
        const StabilityReport rep = classify_fixed_point(model, scheme, ys, *dt);
        std::cout << "dt: " << fmt(*dt) << '\n' << "steady_state:";
        for (double v : ys) std::cout << ' ' << fmt(v);
        std::cout << '\n'
                  << "kernel_count: " << rep.kernel_count << '\n'
                  << "non_kernel_radius: " << fmt(rep.non_kernel_radius) << '\n'
                  << "fd_discrepancy: " << fmt(rep.fd_discrepancy) << '\n'
                  << "verdict: " << to_string(rep.verdict) << '\n';
    }
    return 0;
}

int run_reproduce(const std::string& id, const std::string& outdir) {
    const ExperimentResult r = run_experiment(id);
    std::filesystem::create_directories(outdir);
    nlohmann::ordered_json summary;
    summary["id"] = r.id;
    summary["files"] = nlohmann::json::array();
    for (const auto& [stem, table] : r.tables) {
        const std::string path = (std::filesystem::path(outdir) / (stem + ".csv")).string();
        table.write(path);
        summary["files"].push_back(stem + ".csv");
    }
    summary["checks"] = nlohmann::json::array();
    for (const Check& c : r.checks) {
        nlohmann::ordered_json j;
        j["name"] = c.name;
        j["expected"] = c.expected;
        j["tolerance"] = c.tolerance;
        j["observed"] = std::isfinite(c.observed) ? nlohmann::json(c.observed) : nlohmann::json(nullptr);
        j["pass"] = c.pass;
        if (!c.note.empty()) j["note"] = c.note;
        summary["checks"].push_back(j);
        std::cout << (c.pass ? "PASS " : "FAIL ") << r.id << ": " << c.name << " (observed "
                  << CsvTable::format(c.observed) << ")\n";
    }
    summary["all_pass"] = r.all_pass();
    const std::string path = (std::filesystem::path(outdir) / (r.id + "_summary.json")).string();
    std::ofstream f(path, std::ios::binary);
    if (!f) throw Error("cannot open '" + path + "' for writing");
    f << summary.dump(2) << '\n';
    return 0;
}

int run_order(const ModelArgs& a, double tmax, double dt0, int levels, const std::string& out) {
    const ModelDocument doc = load_model(a);
    const LinearPds model = doc.model();
    const SchemeSpec scheme = SchemeSpec::make(parse_scheme_id(a.scheme), a.alpha);
    emit(order_table(order_study(model, scheme, doc.y0, tmax, dt0, levels)), out);
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Positive, invariant-preserving integrators for linear production-destruction systems"};
    app.require_subcommand(1);

    ModelArgs margs;
    double dt = 0.1;
    std::size_t steps = 10;
    std::string out;
    auto* integ = app.add_subcommand("integrate", "integrate a model and write a CSV trajectory");
    add_model_options(integ, margs);
    integ->add_option("--dt", dt, "step size")->required();
    integ->add_option("--steps", steps, "number of steps")->required();
    integ->add_option("--out", out, "output CSV (default stdout)");

    std::optional<double> stab_dt;
    auto* stab = app.add_subcommand("stability", "critical step size, certificate and steady-state verdict");
    add_model_options(stab, margs);
    stab->add_option("--dt", stab_dt, "classify the steady state at this step size");

    std::string experiment;
    std::string outdir = ".";
    auto* repro = app.add_subcommand("reproduce", "run a fixed experiment recipe");
    repro->add_option("id", experiment, "experiment id")->required()->check(CLI::IsMember(experiment_ids()));
    repro->add_option("--outdir", outdir, "directory for CSV files and the summary");

    double tmax = 1.0;
    double dt0 = 0.125;
    int levels = 7;
    auto* ord = app.add_subcommand("order", "observed convergence order against the matrix exponential");
    add_model_options(ord, margs);
    ord->add_option("--tmax", tmax, "final time");
    ord->add_option("--dt0", dt0, "coarsest step size");
    ord->add_option("--levels", levels, "number of halvings (>= 1)");
    ord->add_option("--out", out, "output CSV (default stdout)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : kExitUsage;
    }

    try {
        if (*integ) return run_integrate(margs, dt, steps, out);
        if (*stab) return run_stability(margs, stab_dt);
        if (*repro) return run_reproduce(experiment, outdir);
        if (*ord) return run_order(margs, tmax, dt0, levels, out);
    } catch (const NumericalError& e) {
        std::cerr << "numerical failure: " << e.what() << '\n';
        return kExitNumerical;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitUsage;
    } catch (const std::exception& e) {
        std::cerr << "internal failure: " << e.what() << '\n';
        return kExitNumerical;
    }
    return kExitUsage;
}
