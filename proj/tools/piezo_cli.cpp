// piezo_cli run|verify|sweep|bdspace <scenario.ini>
//
// Exit codes: 0 ok, 1 verify --strict with a failing check, 2 parse error,
// 3 certification failure, 4 solver failure.

#include "piezo/scenario.hpp"

#include <CLI11.hpp>

#include <fstream>
#include <iostream>

using namespace piezo;

namespace {

std::vector<double> parse_values(const std::string& text)
{
    std::vector<double> out;
    std::string tok;
    std::istringstream is(text);
    while (std::getline(is, tok, ',')) {
        std::size_t used = 0;
        const double v = std::stod(tok, &used);
        if (used != tok.size()) {
            throw ScenarioError("--values: not a number: '" + tok + "'");
        }
        out.push_back(v);
    }
    if (out.empty()) {
        throw ScenarioError("--values: empty list");
    }
    return out;
}

int fail(ExitCode code, const std::string& msg)
{
    std::cerr << "piezo_cli: " << msg << '\n';
    return code;
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Piezo-electro-magnetic evolution systems on staggered grids"};
    app.require_subcommand(1);
    std::string file;
    std::string out_dir;
    std::string axis;
    std::string values;
    bool strict = false;

    auto* run = app.add_subcommand("run", "solve the scenario and write per-step and final-state CSV");
    auto* verify = app.add_subcommand("verify", "run the invariant suite and write a JSON report");
    auto* sweep = app.add_subcommand("sweep", "tabulate one quantity over h, dt or nu");
    auto* bdspace = app.add_subcommand("bdspace", "dump boundary-space dimensions, defects and basis columns");
    for (auto* sub : {run, verify, sweep, bdspace}) {
        sub->add_option("file", file, "scenario file")->required();
        sub->add_option("--out-dir", out_dir, "override [output] dir");
    }
    verify->add_flag("--strict", strict, "exit 1 if any check fails");
    sweep->add_option("--axis", axis, "h | dt | nu")->required()->check(CLI::IsMember({"h", "dt", "nu"}));
    sweep->add_option("--values", values, "comma-separated values")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : ParseFailure;
    }

    Scenario sc;
    std::vector<double> vals;
    try {
        sc = parse_scenario(file);
        if (!out_dir.empty()) {
            sc.out_dir = out_dir;
        }
        if (sweep->parsed()) {
            vals = parse_values(values);
        }
    } catch (const std::exception& e) {
        return fail(ParseFailure, e.what());
    }

    try {
        if (run->parsed()) {
            const RunOutput out = run_scenario(sc);
            const auto [main_path, final_path] = write_run(sc, out);
            std::cout << main_path.string() << '\n' << final_path.string() << '\n';
            return Ok;
        }
        if (verify->parsed()) {
            const nlohmann::json rep = verify_scenario(sc);
            std::filesystem::create_directories(sc.out_dir);
            const auto path = sc.out_dir / (sc.prefix + "_verify.json");
            std::ofstream(path) << rep.dump(2) << '\n';
            std::cout << rep.dump(2) << '\n';
            return strict && !rep["all_pass"].get<bool>() ? CheckFailed : Ok;
        }
        if (sweep->parsed()) {
            const SweepTable t = sweep_scenario(sc, axis, vals, thread_count_from_env());
            const std::string text = csv(t.columns, t.rows);
            std::filesystem::create_directories(sc.out_dir);
            std::ofstream(sc.out_dir / (sc.prefix + "_sweep_" + axis + ".csv")) << text;
            std::cout << text;
            return Ok;
        }
        const BdspaceDump d = bdspace_scenario(sc);
        std::filesystem::create_directories(sc.out_dir);
        std::ofstream summary(sc.out_dir / (sc.prefix + "_bdspace.csv"));
        summary << "quantity,value\n";
        for (const auto& [k, v] : d.summary) {
            summary << k << ',' << format_double(v) << '\n';
            std::cout << k << ',' << format_double(v) << '\n';
        }
        std::ofstream basis(sc.out_dir / (sc.prefix + "_basis.csv"));
        basis << "space,column,dof,value\n";
        for (const auto& row : d.basis_columns) {
            basis << row << '\n';
        }
        return Ok;
    } catch (const RunError& e) {
        return fail(e.code, e.what());
    } catch (const Error& e) {
        const bool input = e.kind() == Error::Kind::InvalidInput || e.kind() == Error::Kind::DimensionMismatch;
        return fail(input ? ParseFailure : SolverFailure, e.what());
    } catch (const std::exception& e) {
        return fail(SolverFailure, e.what());
    }
}
