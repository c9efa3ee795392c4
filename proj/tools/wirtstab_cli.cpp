// wirtstab: analyze | sweep | verify
//
// Exit codes: 0 success, 1 input error, 2 power flow did not converge,
// 3 equivalence verification failed.

#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"

#include "wirtstab/equivalence.hpp"
#include "wirtstab/report.hpp"
#include "wirtstab/sweep.hpp"

using namespace wirtstab;

namespace {

enum ExitCode { kOk = 0, kInputError = 1, kNotConverged = 2, kVerifyFailed = 3 };

struct CommonFlags {
    std::string case_path;
    std::string format = "table";
    double tol = 1e-8;
    int max_iter = 50;
    std::vector<int> pv;
    std::vector<int> pq;
    std::vector<std::string> ilimit;
    std::string targets = "loads";
    std::string cw_variant = "row";
    std::string scr_voltage = "nominal";
    bool no_limits = false;
};

void add_common(CLI::App* cmd, CommonFlags& f) {
    cmd->add_option("case", f.case_path, "Case file (.m MATPOWER subset or .json)")->required();
    cmd->add_option("--format", f.format, "Output format")->check(CLI::IsMember({"table", "json", "csv"}));
    cmd->add_option("--tol", f.tol, "Newton mismatch tolerance (p.u.)")->check(CLI::PositiveNumber);
    cmd->add_option("--max-iter", f.max_iter, "Newton iteration cap")->check(CLI::Range(1, 100000));
    cmd->add_option("--pv", f.pv, "Treat bus as voltage-regulated")->delimiter(',');
    cmd->add_option("--pq", f.pq, "Treat bus as unconstrained")->delimiter(',');
    cmd->add_option("--ilimit", f.ilimit, "Converter current limit BUS:IMAX (p.u.)");
    cmd->add_option("--targets", f.targets, "Quantities scaled by lambda")
        ->check(CLI::IsMember({"loads", "loads+ibr", "ibr"}));
    cmd->add_option("--cw-variant", f.cw_variant, "C_W denominator: row (row sum) or printed")
        ->check(CLI::IsMember({"row", "printed"}));
    cmd->add_option("--scr-voltage", f.scr_voltage, "SCR driving voltage")
        ->check(CLI::IsMember({"nominal", "actual"}));
    cmd->add_flag("--no-limits", f.no_limits, "Do not switch converters into current-limited mode");
}

std::string join(const std::vector<int>& v) {
    std::string s;
    for (std::size_t k = 0; k < v.size(); ++k)
        s += (k ? "," : "") + std::to_string(v[k]);
    return s;
}

std::string num(double x) { return report::format_number(x); }

powerflow::ProfileOverrides overrides_from(const CommonFlags& f) {
    powerflow::ProfileOverrides o;
    o.pv = f.pv;
    o.pq = f.pq;
    for (const auto& spec : f.ilimit) {
        const auto colon = spec.find(':');
        if (colon == std::string::npos)
            throw SemanticError("--ilimit expects BUS:IMAX, got '" + spec + "'");
        try {
            std::size_t used = 0;
            const int bus = std::stoi(spec.substr(0, colon), &used);
            const double imax = std::stod(spec.substr(colon + 1));
            o.current_limit[bus] = imax;
        } catch (const std::logic_error&) {
            throw SemanticError("--ilimit expects BUS:IMAX, got '" + spec + "'");
        }
    }
    return o;
}

sweep::SweepOptions sweep_options(const CommonFlags& f) {
    sweep::SweepOptions o;
    o.solver.tolerance = f.tol;
    o.solver.max_iterations = f.max_iter;
    o.targets = f.targets == "loads"       ? casemodel::ScalingTarget::LoadsOnly
                : f.targets == "loads+ibr" ? casemodel::ScalingTarget::LoadsAndIbrInjections
                                           : casemodel::ScalingTarget::IbrOnly;
    o.variant = f.cw_variant == "row" ? wirtinger::CwVariant::RowConsistent : wirtinger::CwVariant::Printed;
    o.scr_voltage = f.scr_voltage == "nominal" ? indices::ScrVoltage::Nominal : indices::ScrVoltage::Actual;
    o.enforce_limits = !f.no_limits;
    return o;
}

report::Metadata metadata_for(const std::string& command, const casemodel::NetworkCase& c, const CommonFlags& f) {
    report::Metadata m;
    m.case_name = c.name;
    m.command = command;
    m.options = {{"format", f.format},     {"tol", num(f.tol)},           {"max_iter", std::to_string(f.max_iter)},
                 {"targets", f.targets},   {"cw_variant", f.cw_variant}, {"scr_voltage", f.scr_voltage},
                 {"pv", join(f.pv)},       {"pq", join(f.pq)},           {"current_limits", f.no_limits ? "off" : "on"}};
    std::string il;
    for (const auto& s : f.ilimit)
        il += (il.empty() ? "" : ",") + s;
    m.options.emplace_back("ilimit", il);
    return m;
}

struct Loaded {
    casemodel::NetworkCase network;
    powerflow::ConstraintProfile profile;
};

Loaded load(const CommonFlags& f) {
    auto parsed = casemodel::parse_case_with_warnings(
        [&] {
            std::ifstream in(f.case_path, std::ios::binary);
            if (!in)
                throw SemanticError("cannot open case file '" + f.case_path + "'");
            std::ostringstream buf;
            buf << in.rdbuf();
            return buf.str();
        }(),
        casemodel::format_for_path(f.case_path));
    for (const auto& w : parsed.warnings)
        std::cerr << "warning: " << w << "\n";
    if (parsed.network.name.empty()) {
        const auto slash = f.case_path.find_last_of('/');
        std::string base = slash == std::string::npos ? f.case_path : f.case_path.substr(slash + 1);
        parsed.network.name = base.substr(0, base.find_last_of('.'));
    }
    auto profile = powerflow::apply_overrides(parsed.network, powerflow::default_profile(parsed.network),
                                              overrides_from(f));
    return {std::move(parsed.network), std::move(profile)};
}

void print_last_iterate(const powerflow::DidNotConverge& e) {
    const auto& pt = e.last();
    std::cerr << "last iterate after " << pt.iterations << " iterations (max mismatch " << num(pt.max_mismatch)
              << "):\n";
    for (std::size_t k = 0; k < pt.bus_order.size(); ++k) {
        char line[128];
        std::snprintf(line, sizeof line, "  bus %d: |V| = %s, angle = %s deg\n", pt.bus_order[k],
                      num(std::abs(pt.v[k])).c_str(), num(std::arg(pt.v[k]) * 180.0 / M_PI).c_str());
        std::cerr << line;
    }
    std::cerr << "mismatch trace:";
    for (double t : e.trace())
        std::cerr << ' ' << num(t);
    std::cerr << "\n";
}

template <class Body>
int guarded(Body&& body) {
    try {
        return body();
    } catch (const powerflow::DidNotConverge& e) {
        std::cerr << "error: " << e.what() << "\n";
        print_last_iterate(e);
        return kNotConverged;
    } catch (const SingularJacobianAtIterate& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kNotConverged;
    } catch (const ModeOscillation& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kNotConverged;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kInputError;
    }
}

int cmd_analyze(const CommonFlags& f, double lambda) {
    return guarded([&] {
        const Loaded in = load(f);
        auto meta = metadata_for("analyze", in.network, f);
        meta.options.insert(meta.options.begin(), {"lambda", num(lambda)});
        const auto e = sweep::solve_at(in.network, in.profile, lambda, sweep_options(f));
        std::cout << report::render_analysis(meta, e, report::format_from(f.format));
        return int(kOk);
    });
}

std::vector<double> parse_range(const std::string& spec) {
    std::vector<double> parts;
    std::stringstream ss(spec);
    std::string item;
    while (std::getline(ss, item, ':')) {
        try {
            std::size_t used = 0;
            parts.push_back(std::stod(item, &used));
            if (used != item.size())
                throw std::invalid_argument(item);
        } catch (const std::logic_error&) {
            throw SemanticError("bad --lambda range '" + spec + "' (expected LO:HI:STEP)");
        }
    }
    if (parts.size() == 1)
        return parts;
    if (parts.size() != 3)
        throw SemanticError("bad --lambda range '" + spec + "' (expected LO:HI:STEP)");
    return sweep::make_schedule(parts[0], parts[1], parts[2]);
}

int cmd_sweep(const CommonFlags& f, const std::string& range, const std::vector<std::string>& boundaries,
              const std::string& csv_path, bool flat, double boundary_tol) {
    return guarded([&] {
        const Loaded in = load(f);
        const auto schedule = parse_range(range);
        auto opts = sweep_options(f);
        opts.start = flat ? sweep::SweepOptions::Start::Flat : sweep::SweepOptions::Start::Warm;
        opts.boundary_tol = boundary_tol;
        for (const auto& b : boundaries)
            opts.boundaries.push_back(sweep::predicate_from(b));
        auto meta = metadata_for("sweep", in.network, f);
        meta.options.insert(meta.options.begin(), {"lambda", range});
        meta.options.emplace_back("start", flat ? "flat" : "warm");
        const auto result = sweep::run_sweep(in.network, in.profile, schedule, opts);
        if (!csv_path.empty()) {
            std::ofstream out(csv_path, std::ios::binary);
            if (!out)
                throw SemanticError("cannot write '" + csv_path + "'");
            out << report::sweep_csv(result);
        }
        std::cout << report::render_sweep(meta, result, report::format_from(f.format));
        return int(kOk);
    });
}

int cmd_verify(const CommonFlags& f, const std::vector<double>& lambdas) {
    return guarded([&] {
        const Loaded in = load(f);
        const auto opts = sweep_options(f);
        std::vector<report::VerifyEntry> entries;
        bool all_pass = true;
        bool solver_failed = false;
        for (double lambda : lambdas) {
            report::VerifyEntry entry;
            entry.lambda = lambda;
            try {
                const auto e = sweep::solve_at(in.network, in.profile, lambda, opts);
                const auto scaled = casemodel::scale_loading(in.network, lambda, opts.targets);
                entry.report = equivalence::verify(scaled, e.profile, e.point);
                all_pass = all_pass && entry.report->verdict;
            } catch (const SingularColumnMap& err) {
                entry.note = std::string("SingularColumnMap: ") + err.what();
                all_pass = false;
            } catch (const powerflow::DidNotConverge& err) {
                entry.note = err.what();
                all_pass = false;
                solver_failed = true;
            } catch (const SingularJacobianAtIterate& err) {
                entry.note = err.what();
                all_pass = false;
                solver_failed = true;
            }
            entries.push_back(std::move(entry));
        }
        std::string ls;
        for (double l : lambdas)
            ls += (ls.empty() ? "" : ",") + num(l);
        auto meta = metadata_for("verify", in.network, f);
        meta.options.insert(meta.options.begin(), {"lambda", ls});
        std::cout << report::render_verify(meta, entries, report::format_from(f.format));
        for (const auto& e : entries)
            if (!e.report)
                std::cerr << "lambda " << num(e.lambda) << ": " << e.note << "\n";
        if (solver_failed)
            return int(kNotConverged);
        return all_pass ? int(kOk) : int(kVerifyFailed);
    });
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Steady-state voltage-stability analysis with the Wirtinger reduced Jacobian"};
    app.set_version_flag("--version", std::string(WIRTSTAB_VERSION));
    app.require_subcommand(1);

    CommonFlags analyze_flags;
    double analyze_lambda = 1.0;
    auto* analyze = app.add_subcommand("analyze", "Solve one operating point and report all indices");
    add_common(analyze, analyze_flags);
    analyze->add_option("--lambda", analyze_lambda, "Loading factor")->check(CLI::NonNegativeNumber);

    CommonFlags sweep_flags;
    std::string sweep_range;
    std::vector<std::string> sweep_boundaries;
    std::string sweep_csv;
    bool sweep_flat = false;
    double boundary_tol = 1e-4;
    auto* sweep_cmd = app.add_subcommand("sweep", "Sweep the loading factor and locate boundaries");
    add_common(sweep_cmd, sweep_flags);
    sweep_cmd->add_option("--lambda", sweep_range, "LO:HI:STEP (or a single value)")->required();
    sweep_cmd->add_option("--find-boundary", sweep_boundaries, "dominance, cw or conv")
        ->check(CLI::IsMember({"dominance", "cw", "conv"}));
    sweep_cmd->add_option("--csv", sweep_csv, "Also write the per-bus CSV to this path");
    sweep_cmd->add_flag("--flat", sweep_flat, "Solve every sample from a flat start (in parallel)");
    sweep_cmd->add_option("--boundary-tol", boundary_tol, "Bisection tolerance in lambda")
        ->check(CLI::PositiveNumber);

    CommonFlags verify_flags;
    std::vector<double> verify_lambdas;
    auto* verify = app.add_subcommand("verify", "Check J_conv = L*J_red*R at the given loading factors");
    add_common(verify, verify_flags);
    verify->add_option("--lambda", verify_lambdas, "Comma-separated loading factors")
        ->delimiter(',')
        ->required()
        ->check(CLI::NonNegativeNumber);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kOk : kInputError;
    }

    if (*analyze)
        return cmd_analyze(analyze_flags, analyze_lambda);
    if (*sweep_cmd)
        return cmd_sweep(sweep_flags, sweep_range, sweep_boundaries, sweep_csv, sweep_flat, boundary_tol);
    return cmd_verify(verify_flags, verify_lambdas);
}
