// Acceptance suite: runs every acceptance criterion at its stated tolerance
// and prints one pass/fail line per criterion. Exits nonzero if any fail.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include "exact_lp.hpp"
#include "gifkit/io.hpp"
#include "gifkit/suite.hpp"

#ifndef GIFKIT_BIN_DEFAULT
#define GIFKIT_BIN_DEFAULT "gifkit"
#endif

namespace {

constexpr std::uint64_t kSeed = 7;

int failures = 0;

void report(int number, const std::string& name, bool pass, const std::string& detail) {
    std::cout << (pass ? "[PASS] " : "[FAIL] ") << "criterion " << number << ": " << name
              << " (" << detail << ")\n";
    if (!pass) ++failures;
}

void run_criterion(const gifkit::suite::CriterionReport& rep) {
    std::string detail = rep.detail;
    if (!rep.pass) {
        for (const auto& row : rep.rows)
            if (!row.pass) {
                detail += "; first failure: " + row.id;
                break;
            }
    }
    report(rep.number, rep.name, rep.pass, detail);
}

// Criterion 8 with the exact-rational oracle comparison folded in (8b).
void run_criterion8() {
    auto rep = gifkit::suite::criterion8_brenier(kSeed);
    gifkit::SolveOptions fast;
    fast.probe_degeneracy = false;
    int oracle_checked = 0;
    double worst_rel = 0.0;
    for (const auto& inst : gifkit::suite::brenier_oracle_instances(kSeed)) {
        const auto solved = gifkit::solve_min_action(inst.problem, fast);
        const bool optimal = solved.status == gifkit::lp::Status::optimal;
        const auto exact = oracle::exact_min_action_value(inst.problem);
        if (!optimal || !exact.has_value()) {
            rep.add("oracle_" + inst.id, 0.0, 0.0, false);
            continue;
        }
        const double scale = std::max(1.0, std::abs(*exact));
        const double rel = std::abs(solved.value - *exact) / scale;
        worst_rel = std::max(worst_rel, rel);
        const bool ok = rel <= 1e-9 && solved.incompressibility_tv <= 1e-9 &&
                        solved.coupling_tv <= 1e-9;
        rep.add("oracle_" + inst.id, rel, 1e-9, ok);
        ++oracle_checked;
    }
    std::ostringstream extra;
    extra << rep.detail << "; " << oracle_checked
          << " exact-rational oracle comparisons, worst relative gap "
          << gifkit::io::format_double(worst_rel);
    rep.detail = extra.str();
    run_criterion(rep);
}

std::string read_file(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream out;
    out << in.rdbuf();
    return out.str();
}

// Criterion 9: repeated CLI suite runs with the same seed produce
// byte-identical reports.
void run_criterion9() {
    const char* env = std::getenv("GIFKIT_BIN");
    const std::string bin = env != nullptr ? env : GIFKIT_BIN_DEFAULT;
    const auto base = std::filesystem::temp_directory_path() / "gifkit_acceptance";
    std::filesystem::remove_all(base);
    bool pass = true;
    std::string detail;
    std::string outputs[2];
    for (int run = 0; run < 2; ++run) {
        const auto dir = base / ("run" + std::to_string(run));
        std::filesystem::create_directories(dir);
        const std::string cmd = "\"" + bin + "\" suite --seed 7 --out \"" + dir.string() +
                                "\" > \"" + (dir / "stdout.txt").string() + "\" 2>&1";
        const int rc = std::system(cmd.c_str());
        if (rc != 0) {
            pass = false;
            detail = "CLI suite exited with code " + std::to_string(rc);
        }
        outputs[run] = read_file(dir / "suite_report.csv") + "\x1e" +
                       read_file(dir / "suite_report.json");
    }
    if (pass) {
        pass = !outputs[0].empty() && outputs[0] == outputs[1];
        detail = pass ? "both runs byte-identical (csv + json)"
                      : "reports differ between runs";
    }
    report(9, "CLI determinism", pass, detail);
    std::filesystem::remove_all(base);
}

}  // namespace

int main() {
    using namespace gifkit::suite;
    run_criterion(criterion1_constructor_incompressibility(kSeed));
    run_criterion(criterion2_stopping_rotation());
    run_criterion(criterion3_maximal_inequality(kSeed));
    run_criterion(criterion4_vitali(kSeed));
    run_criterion(criterion5_ergodic_identities(kSeed));
    run_criterion(criterion6_structure(kSeed));
    run_criterion(criterion7_krylov_bogolioubov(kSeed));
    run_criterion8();
    run_criterion9();
    if (failures > 0) {
        std::cout << failures << " criterion(s) failed\n";
        return 1;
    }
    std::cout << "all acceptance criteria passed\n";
    return 0;
}
