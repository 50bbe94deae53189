#pragma once

#include <charconv>
#include <fstream>
#include <initializer_list>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "gifkit/brenier.hpp"
#include "gifkit/path_measure.hpp"

namespace gifkit::io {

using nlohmann::json;

// ----------------------------------------------------------------------------
// Strict JSON parsing (unknown keys rejected, per the CLI config contract)
// ----------------------------------------------------------------------------

inline void require_keys(const json& j, std::initializer_list<const char*> allowed,
                         std::initializer_list<const char*> required,
                         const std::string& what) {
    if (!j.is_object()) throw config_error(what + ": expected a JSON object");
    for (const auto& item : j.items()) {
        bool known = false;
        for (const char* k : allowed)
            if (item.key() == k) known = true;
        if (!known) throw config_error(what + ": unknown key '" + item.key() + "'");
    }
    for (const char* k : required)
        if (!j.contains(k)) throw config_error(what + ": missing key '" + k + "'");
}

// ----------------------------------------------------------------------------
// Core type serialization
// ----------------------------------------------------------------------------

inline json to_json(const StateSpace& s) {
    return json{{"kind", s.kind() == SpaceKind::circle ? "circle" : "torus2d"},
                {"n_cells", s.n_cells()},
                {"circumference", s.circumference()}};
}

inline StateSpace space_from_json(const json& j) {
    require_keys(j, {"kind", "n_cells", "circumference"}, {"kind", "n_cells"}, "space");
    const std::string kind = j.at("kind").get<std::string>();
    const int n = j.at("n_cells").get<int>();
    const double c = j.value("circumference", kTwoPi);
    if (kind == "circle") return StateSpace::circle(n, c);
    if (kind == "torus2d") return StateSpace::torus2d(n, c);
    throw config_error("space: kind must be 'circle' or 'torus2d'");
}

inline json to_json(const TimeGrid& g) {
    return json{{"horizon", g.horizon()},
                {"n_steps", g.n_steps()},
                {"mode", g.mode() == GridMode::window ? "window" : "periodic"}};
}

inline TimeGrid grid_from_json(const json& j) {
    require_keys(j, {"horizon", "n_steps", "mode"}, {"horizon", "n_steps", "mode"}, "grid");
    const std::string mode = j.at("mode").get<std::string>();
    if (mode != "window" && mode != "periodic")
        throw config_error("grid: mode must be 'window' or 'periodic'");
    return TimeGrid(j.at("horizon").get<double>(), j.at("n_steps").get<int>(),
                    mode == "window" ? GridMode::window : GridMode::periodic);
}

/// Canonical measure serialization: atoms arrive already sorted and merged.
inline json to_json(const PathMeasure& q) {
    json atoms = json::array();
    for (const auto& a : q.atoms())
        atoms.push_back(json{{"cells", a.path.cells}, {"weight", a.weight}});
    return json{{"space", to_json(q.space())}, {"grid", to_json(q.grid())}, {"atoms", atoms}};
}

inline PathMeasure measure_from_json(const json& j) {
    require_keys(j, {"space", "grid", "atoms"}, {"space", "grid", "atoms"}, "measure");
    StateSpace space = space_from_json(j.at("space"));
    TimeGrid grid = grid_from_json(j.at("grid"));
    std::vector<PathMeasure::Atom> atoms;
    for (const json& aj : j.at("atoms")) {
        require_keys(aj, {"cells", "weight"}, {"cells", "weight"}, "atom");
        PathMeasure::Atom a;
        a.path.cells = aj.at("cells").get<std::vector<cell_t>>();
        a.weight = aj.at("weight").get<double>();
        atoms.push_back(std::move(a));
    }
    return PathMeasure(std::move(space), std::move(grid), std::move(atoms));
}

inline json to_json(const Observable& f) { return json{{"values", f.values}}; }

inline Observable observable_from_json(const json& j) {
    require_keys(j, {"values"}, {"values"}, "observable");
    Observable f{j.at("values").get<std::vector<double>>()};
    f.validate();
    return f;
}

inline json to_json(const Marginal& m) { return json{{"masses", m.masses}}; }

inline Marginal marginal_from_json(const json& j) {
    require_keys(j, {"masses"}, {"masses"}, "marginal");
    Marginal m{j.at("masses").get<std::vector<double>>()};
    m.validate();
    return m;
}

// ----------------------------------------------------------------------------
// Brenier problem / report serialization
// ----------------------------------------------------------------------------

inline ActionProblem problem_from_json(const json& j) {
    require_keys(j, {"space", "grid", "eta", "rho", "potential"}, {"space", "grid", "eta"},
                 "problem");
    ActionProblem p{space_from_json(j.at("space")), grid_from_json(j.at("grid")),
                    FinalConfiguration{}, Observable{}, {}};
    const json& ej = j.at("eta");
    if (!ej.is_array()) throw config_error("problem: eta must be a matrix");
    p.eta.n = p.space.cell_count();
    for (const json& row : ej) {
        const auto vals = row.get<std::vector<double>>();
        if (vals.size() != static_cast<std::size_t>(p.eta.n))
            throw config_error("problem: eta rows must have n_cells entries");
        p.eta.coupling.insert(p.eta.coupling.end(), vals.begin(), vals.end());
    }
    if (p.eta.coupling.size() !=
        static_cast<std::size_t>(p.eta.n) * static_cast<std::size_t>(p.eta.n))
        throw config_error("problem: eta must be square");
    if (j.contains("rho")) p.rho = observable_from_json(j.at("rho"));
    if (j.contains("potential"))
        for (const json& uj : j.at("potential")) p.potential.push_back(observable_from_json(uj));
    p.validate();
    return p;
}

inline json to_json(const ActionProblem& p) {
    json eta = json::array();
    for (int x = 0; x < p.eta.n; ++x) {
        json row = json::array();
        for (int y = 0; y < p.eta.n; ++y) row.push_back(p.eta.at(x, y));
        eta.push_back(row);
    }
    json out{{"space", to_json(p.space)}, {"grid", to_json(p.grid)}, {"eta", eta}};
    if (!p.rho.values.empty()) out["rho"] = to_json(p.rho);
    if (!p.potential.empty()) {
        json us = json::array();
        for (const auto& u : p.potential) us.push_back(to_json(u));
        out["potential"] = us;
    }
    return out;
}

inline const char* status_name(lp::Status s) {
    switch (s) {
        case lp::Status::optimal: return "optimal";
        case lp::Status::infeasible: return "infeasible";
        case lp::Status::unbounded: return "unbounded";
        default: return "iteration_limit";
    }
}

inline json to_json(const SolveReport& r) {
    json out{{"value", r.value},
             {"status", status_name(r.status)},
             {"residuals",
              {{"incompressibility_tv", r.incompressibility_tv},
               {"coupling_tv", r.coupling_tv}}},
             {"degenerate", r.degenerate},
             {"iterations", r.iterations}};
    if (r.optimal) out["optimal_measure"] = to_json(*r.optimal);
    if (r.oracle_gap) out["oracle_gap"] = *r.oracle_gap;
    return out;
}

// ----------------------------------------------------------------------------
// Files, CSV and SVG emission
// ----------------------------------------------------------------------------

inline json load_json(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw config_error("cannot open file: " + path);
    json j;
    try {
        in >> j;
    } catch (const json::parse_error& e) {
        throw config_error("invalid JSON in " + path + ": " + e.what());
    }
    return j;
}

inline void write_text(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw config_error("cannot write file: " + path);
    out << text;
    if (!out) throw config_error("write failed: " + path);
}

inline void write_json(const std::string& path, const json& j) {
    write_text(path, j.dump(2) + "\n");
}

/// Shortest round-trip decimal representation (deterministic across runs).
inline std::string format_double(double v) {
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, ptr);
}

/// Minimal CSV builder with a fixed column order.
class CsvWriter {
public:
    explicit CsvWriter(std::vector<std::string> header) : columns_(header.size()) {
        for (std::size_t i = 0; i < header.size(); ++i) {
            if (i) out_ << ',';
            out_ << header[i];
        }
        out_ << '\n';
    }

    void row(const std::vector<std::string>& cells) {
        if (cells.size() != columns_) throw config_error("CsvWriter: wrong column count");
        for (std::size_t i = 0; i < cells.size(); ++i) {
            if (i) out_ << ',';
            out_ << cells[i];
        }
        out_ << '\n';
    }

    std::string str() const { return out_.str(); }

private:
    std::size_t columns_;
    std::ostringstream out_;
};

/// Static SVG polyline plot of one or more series on a common x axis.
inline std::string svg_line_plot(const std::vector<double>& xs,
                                 const std::vector<std::vector<double>>& series,
                                 const std::string& title) {
    const double width = 640, height = 400, pad = 40;
    double xmin = xs.front(), xmax = xs.back(), ymin = 0.0, ymax = 1e-300;
    for (const auto& s : series)
        for (double v : s) {
            ymin = std::min(ymin, v);
            ymax = std::max(ymax, v);
        }
    if (ymax <= ymin) ymax = ymin + 1.0;
    if (xmax <= xmin) xmax = xmin + 1.0;
    auto px = [&](double x) { return pad + (x - xmin) / (xmax - xmin) * (width - 2 * pad); };
    auto py = [&](double y) { return height - pad - (y - ymin) / (ymax - ymin) * (height - 2 * pad); };
    static const char* palette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd",
                                    "#ff7f0e", "#8c564b", "#e377c2", "#7f7f7f"};
    std::ostringstream svg;
    svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\""
        << height << "\">\n"
        << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
        << "<text x=\"" << width / 2 << "\" y=\"20\" text-anchor=\"middle\">" << title
        << "</text>\n"
        << "<line x1=\"" << pad << "\" y1=\"" << height - pad << "\" x2=\"" << width - pad
        << "\" y2=\"" << height - pad << "\" stroke=\"black\"/>\n"
        << "<line x1=\"" << pad << "\" y1=\"" << pad << "\" x2=\"" << pad << "\" y2=\""
        << height - pad << "\" stroke=\"black\"/>\n";
    for (std::size_t s = 0; s < series.size(); ++s) {
        svg << "<polyline fill=\"none\" stroke=\"" << palette[s % 8] << "\" points=\"";
        for (std::size_t i = 0; i < xs.size() && i < series[s].size(); ++i)
            svg << px(xs[i]) << ',' << py(series[s][i]) << ' ';
        svg << "\"/>\n";
    }
    svg << "</svg>\n";
    return svg.str();
}

}  // namespace gifkit::io
