// gifkit: batch driver for building path measures, verifying the theorem
// properties, and solving discrete minimum-action problems.
//
// Exit codes: 0 success, 1 property-check failure, 2 usage/config error.
// Failures emit a machine-readable JSON object on stderr.

#include <CLI11.hpp>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include "gifkit/brenier.hpp"
#include "gifkit/constructors.hpp"
#include "gifkit/ergodic.hpp"
#include "gifkit/io.hpp"
#include "gifkit/path_measure.hpp"
#include "gifkit/structure.hpp"
#include "gifkit/suite.hpp"

namespace {

using gifkit::io::json;

void emit_error(const std::string& type, const std::string& message) {
    json err{{"error", {{"type", type}, {"message", message}}}};
    std::cerr << err.dump() << "\n";
}

std::vector<gifkit::cell_t> parse_cells(const std::string& text) {
    std::vector<gifkit::cell_t> cells;
    std::string token;
    std::istringstream in(text);
    while (std::getline(in, token, ','))
        if (!token.empty()) cells.push_back(static_cast<gifkit::cell_t>(std::stol(token)));
    if (cells.empty()) throw gifkit::config_error("expected a comma-separated cell list");
    return cells;
}

std::vector<double> parse_doubles(const std::string& text) {
    std::vector<double> vals;
    std::string token;
    std::istringstream in(text);
    while (std::getline(in, token, ','))
        if (!token.empty()) vals.push_back(std::stod(token));
    return vals;
}

gifkit::PathMeasure load_measure(const json& j) {
    if (j.is_string()) return gifkit::io::measure_from_json(gifkit::io::load_json(j.get<std::string>()));
    return gifkit::io::measure_from_json(j);
}

// ---------------------------------------------------------------------------
// build
// ---------------------------------------------------------------------------

int run_build(const std::string& kind, const std::string& params_path, const std::string& out) {
    const json params = gifkit::io::load_json(params_path);
    gifkit::PathMeasure measure = [&]() -> gifkit::PathMeasure {
        if (kind == "classical") {
            gifkit::io::require_keys(params, {"space", "grid", "step_map", "mu"},
                                     {"space", "grid", "step_map"}, "classical params");
            gifkit::StateSpace space = gifkit::io::space_from_json(params.at("space"));
            const gifkit::TimeGrid grid = gifkit::io::grid_from_json(params.at("grid"));
            gifkit::DiscreteClassicalFlow flow{
                space, params.at("step_map").get<std::vector<gifkit::cell_t>>()};
            const gifkit::Marginal mu =
                params.contains("mu") ? gifkit::io::marginal_from_json(params.at("mu"))
                                      : gifkit::Marginal::uniform(space.cell_count());
            return gifkit::from_classical_flow(flow, mu, grid);
        }
        if (kind == "stopping-rotation") {
            gifkit::io::require_keys(params, {"space", "grid"}, {"space", "grid"},
                                     "stopping-rotation params");
            return gifkit::stopping_rotation(gifkit::io::space_from_json(params.at("space")),
                                             gifkit::io::grid_from_json(params.at("grid")));
        }
        if (kind == "kb-average") {
            gifkit::io::require_keys(params, {"measure", "n"}, {"measure", "n"},
                                     "kb-average params");
            return gifkit::krylov_bogolioubov_average(load_measure(params.at("measure")),
                                                      params.at("n").get<int>());
        }
        throw gifkit::config_error("unknown build kind: " + kind);
    }();
    gifkit::io::write_json(out, gifkit::io::to_json(measure));
    return 0;
}

// ---------------------------------------------------------------------------
// check
// ---------------------------------------------------------------------------

int run_check(const std::string& measure_path, double tol, const std::string& out) {
    const gifkit::PathMeasure q =
        gifkit::io::measure_from_json(gifkit::io::load_json(measure_path));
    const auto report = gifkit::check_incompressible(q, tol);
    json j{{"max_tv_deviation", report.max_tv_deviation},
           {"worst_time", report.worst_time},
           {"tol", tol},
           {"pass", report.pass}};
    if (!out.empty()) gifkit::io::write_json(out, j);
    std::cout << j.dump(2) << "\n";
    if (!report.pass) {
        emit_error("check", "incompressibility deviation " +
                                gifkit::io::format_double(report.max_tv_deviation) +
                                " exceeds tolerance");
        return 1;
    }
    return 0;
}

// ---------------------------------------------------------------------------
// ergodic
// ---------------------------------------------------------------------------

int run_ergodic(const std::string& measure_path, const std::string& observable_path,
                const std::string& report_path, const std::string& alphas_text,
                const std::string& alpha_report_path, const std::string& svg_path,
                const std::string& alpha_svg_path) {
    const gifkit::PathMeasure q =
        gifkit::io::measure_from_json(gifkit::io::load_json(measure_path));
    const gifkit::Observable f =
        gifkit::io::observable_from_json(gifkit::io::load_json(observable_path));
    const std::vector<double> alphas = parse_doubles(alphas_text);

    std::vector<std::string> header{"atom_id", "k", "A_k", "f_star"};
    for (double a : alphas) header.push_back("in_E_alpha(" + gifkit::io::format_double(a) + ")");
    gifkit::io::CsvWriter csv(header);
    std::vector<std::vector<double>> profile_series;
    for (std::size_t i = 0; i < q.atoms().size(); ++i) {
        const auto prof = gifkit::average_profile(q.atoms()[i].path, f, q.grid());
        const double fstar = *std::max_element(prof.values.begin(), prof.values.end());
        for (int k = 1; k <= q.grid().n_steps(); ++k) {
            std::vector<std::string> row{std::to_string(i), std::to_string(k),
                                         gifkit::io::format_double(prof.at(k)),
                                         gifkit::io::format_double(fstar)};
            for (double a : alphas) row.push_back(fstar > a ? "1" : "0");
            csv.row(row);
        }
        if (profile_series.size() < 8) profile_series.push_back(prof.values);
    }
    gifkit::io::write_text(report_path, csv.str());

    if (!alpha_report_path.empty() || !alpha_svg_path.empty()) {
        if (alphas.empty())
            throw gifkit::config_error("--alpha-report/--alpha-svg require --alphas");
        const auto rows = gifkit::check_maximal_inequality(q, f, alphas);
        if (!alpha_report_path.empty()) {
            gifkit::io::CsvWriter sweep({"alpha", "lhs", "bound1", "bound3", "pass3"});
            for (const auto& row : rows)
                sweep.row({gifkit::io::format_double(row.alpha),
                           gifkit::io::format_double(row.lhs),
                           gifkit::io::format_double(row.bound1),
                           gifkit::io::format_double(row.bound3), row.pass3 ? "1" : "0"});
            gifkit::io::write_text(alpha_report_path, sweep.str());
        }
        if (!alpha_svg_path.empty()) {
            std::vector<double> lhs, b1, b3;
            for (const auto& row : rows) {
                lhs.push_back(row.lhs);
                b1.push_back(row.bound1);
                b3.push_back(row.bound3);
            }
            gifkit::io::write_text(alpha_svg_path,
                                   gifkit::io::svg_line_plot(
                                       alphas, {lhs, b1, b3},
                                       "alpha * q(E_alpha) against the L1 bounds"));
        }
    }

    if (!svg_path.empty()) {
        std::vector<double> xs;
        for (int k = 1; k <= q.grid().n_steps(); ++k) xs.push_back(k);
        gifkit::io::write_text(
            svg_path, gifkit::io::svg_line_plot(xs, profile_series, "ergodic average profiles"));
    }
    return 0;
}

// ---------------------------------------------------------------------------
// structure
// ---------------------------------------------------------------------------

int run_structure(const std::string& measure_path, const std::string& check,
                  const std::string& cells_text, int shift_steps, const std::string& out) {
    const gifkit::PathMeasure q =
        gifkit::io::measure_from_json(gifkit::io::load_json(measure_path));
    json verdict;
    if (check == "ergodic") {
        const auto rep = gifkit::is_ergodic(q);
        verdict = json{{"check", "ergodic"}, {"ergodic", rep.ergodic}};
        if (rep.witness) {
            json paths = json::array();
            for (const auto& p : rep.witness->event.paths()) paths.push_back(p.cells);
            verdict["witness"] = json{{"mass", rep.witness->mass},
                                      {"defect", rep.witness->defect},
                                      {"orbit_paths", paths}};
        }
    } else if (check == "weak-ergodic") {
        const auto rep = gifkit::is_weak_ergodic(q);
        verdict = json{{"check", "weak-ergodic"},
                       {"weak_ergodic", rep.weak_ergodic},
                       {"exhaustive", rep.exhaustive}};
        if (rep.witness_cells)
            verdict["witness"] =
                json{{"cells", *rep.witness_cells}, {"mass", rep.witness_mass}};
    } else if (check == "decompose") {
        const auto dec = gifkit::decompose(q, parse_cells(cells_text));
        verdict = json{{"check", "decompose"},
                       {"p", dec.p},
                       {"q1", gifkit::io::to_json(dec.q1)},
                       {"q2", gifkit::io::to_json(dec.q2)}};
    } else if (check == "lemma53") {
        const auto rep = gifkit::lemma53_check(q, parse_cells(cells_text), shift_steps);
        verdict = json{{"check", "lemma53"},
                       {"shift", shift_steps},
                       {"lhs", rep.lhs},
                       {"rhs", rep.rhs},
                       {"equal", rep.equal}};
    } else {
        throw gifkit::config_error("unknown structure check: " + check);
    }
    if (!out.empty()) gifkit::io::write_json(out, verdict);
    std::cout << verdict.dump(2) << "\n";
    return 0;
}

// ---------------------------------------------------------------------------
// brenier
// ---------------------------------------------------------------------------

int run_brenier(const std::string& config_path, const std::string& out, bool probe) {
    const gifkit::ActionProblem problem =
        gifkit::io::problem_from_json(gifkit::io::load_json(config_path));
    gifkit::SolveOptions options;
    options.probe_degeneracy = probe;
    const auto report = gifkit::solve_min_action(problem, options);
    const json j = gifkit::io::to_json(report);
    if (!out.empty()) gifkit::io::write_json(out, j);
    std::cout << j.dump(2) << "\n";
    if (report.status != gifkit::lp::Status::optimal ||
        report.incompressibility_tv > options.tol || report.coupling_tv > options.tol) {
        emit_error("solve", "solver did not reach a feasible optimum within tolerance");
        return 1;
    }
    return 0;
}

// ---------------------------------------------------------------------------
// suite
// ---------------------------------------------------------------------------

int run_suite(std::uint64_t seed, const std::string& out_dir) {
    const auto battery = gifkit::suite::run_battery(seed);
    std::filesystem::create_directories(out_dir);

    gifkit::io::CsvWriter csv({"criterion", "case", "value", "bound", "pass"});
    json criteria = json::array();
    bool all_pass = true;
    for (const auto& crit : battery) {
        for (const auto& row : crit.rows)
            csv.row({std::to_string(crit.number), row.id, gifkit::io::format_double(row.value),
                     gifkit::io::format_double(row.bound), row.pass ? "1" : "0"});
        criteria.push_back(json{{"number", crit.number},
                                {"name", crit.name},
                                {"pass", crit.pass},
                                {"detail", crit.detail},
                                {"cases", crit.rows.size()}});
        all_pass = all_pass && crit.pass;
        std::cout << (crit.pass ? "[PASS] " : "[FAIL] ") << "criterion " << crit.number << ": "
                  << crit.name << " (" << crit.detail << ")\n";
    }
    const auto csv_path = std::filesystem::path(out_dir) / "suite_report.csv";
    const auto json_path = std::filesystem::path(out_dir) / "suite_report.json";
    gifkit::io::write_text(csv_path.string(), csv.str());
    gifkit::io::write_json(json_path.string(),
                           json{{"seed", seed}, {"all_pass", all_pass}, {"criteria", criteria}});
    if (!all_pass) {
        emit_error("suite", "one or more property criteria failed");
        return 1;
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"gifkit: generalized incompressible flow toolkit"};
    app.require_subcommand(1);
    app.fallthrough();

    std::uint64_t seed = 7;
    double tol = 1e-12;
    std::string out;
    app.add_option("--seed", seed, "seed for randomized suites");
    app.add_option("--tol", tol, "tolerance for checks");
    app.add_option("--out", out, "output path (file or directory by subcommand)");

    auto* build = app.add_subcommand("build", "construct a path measure");
    std::string build_kind, build_params;
    build->add_option("--kind", build_kind, "classical|stopping-rotation|kb-average")
        ->required();
    build->add_option("--params", build_params, "JSON parameter file")->required();

    auto* check = app.add_subcommand("check", "verify incompressibility");
    std::string check_measure;
    check->add_option("--measure", check_measure, "measure JSON file")->required();

    auto* ergodic = app.add_subcommand("ergodic", "ergodic averages and maximal functions");
    std::string erg_measure, erg_observable, erg_report, erg_alphas, erg_alpha_report, erg_svg,
        erg_alpha_svg;
    ergodic->add_option("--measure", erg_measure)->required();
    ergodic->add_option("--observable", erg_observable)->required();
    ergodic->add_option("--report", erg_report, "per-atom profile CSV")->required();
    ergodic->add_option("--alphas", erg_alphas, "comma-separated level list");
    ergodic->add_option("--alpha-report", erg_alpha_report, "maximal-inequality sweep CSV");
    ergodic->add_option("--svg", erg_svg, "average-profile SVG plot");
    ergodic->add_option("--alpha-svg", erg_alpha_svg, "level-sweep SVG plot");

    auto* structure = app.add_subcommand("structure", "ergodicity and decomposition checks");
    std::string str_measure, str_check, str_cells;
    int str_shift = 1;
    structure->add_option("--measure", str_measure)->required();
    structure->add_option("--check", str_check, "ergodic|weak-ergodic|decompose|lemma53")
        ->required();
    structure->add_option("--cells", str_cells, "comma-separated cell set E");
    structure->add_option("--shift", str_shift, "shift step for lemma53");

    auto* brenier = app.add_subcommand("brenier", "solve the minimum-action problem");
    std::string bre_config;
    bool bre_no_probe = false;
    brenier->add_option("--config", bre_config, "problem JSON file")->required();
    brenier->add_flag("--no-probe", bre_no_probe, "skip degeneracy probing");

    auto* suite = app.add_subcommand("suite", "run the deterministic property battery");

    try {
        app.parse(argc, argv);
        if (build->parsed()) {
            if (out.empty()) throw gifkit::config_error("build requires --out");
            return run_build(build_kind, build_params, out);
        }
        if (check->parsed()) return run_check(check_measure, tol, out);
        if (ergodic->parsed())
            return run_ergodic(erg_measure, erg_observable, erg_report, erg_alphas,
                               erg_alpha_report, erg_svg, erg_alpha_svg);
        if (structure->parsed())
            return run_structure(str_measure, str_check, str_cells, str_shift, out);
        if (brenier->parsed()) return run_brenier(bre_config, out, !bre_no_probe);
        if (suite->parsed()) return run_suite(seed, out.empty() ? "." : out);
        return 2;
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) return app.exit(e);  // --help
        emit_error("usage", e.what());
        return 2;
    } catch (const gifkit::error& e) {
        emit_error("config", e.what());
        return 2;
    } catch (const std::exception& e) {
        emit_error("internal", e.what());
        return 2;
    }
}
