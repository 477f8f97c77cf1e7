#pragma once

#include <array>
#include <chrono>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <numeric>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

#include "nlcd/analysis.hpp"
#include "nlcd/convolve.hpp"
#include "nlcd/grid.hpp"
#include "nlcd/io.hpp"
#include "nlcd/kernel.hpp"
#include "nlcd/profiles.hpp"
#include "nlcd/solver.hpp"
#include "nlcd/util.hpp"
#include "nlcd/version.hpp"

namespace nlcd {

// ---------------------------------------------------------------------------
// minimal TOML reader: [tables], key = string | number | boolean | [numbers]

namespace toml {

struct Value {
    std::variant<double, bool, std::string, std::vector<double>> data;
    int line = 0;
};

using Table = std::map<std::string, Value>;
using Document = std::map<std::string, Table>;

struct parse_error : std::runtime_error {
    parse_error(const std::string& path, int line, const std::string& what)
        : std::runtime_error(path + ":" + std::to_string(line) + ": " + what) {}
};

inline std::string trim(std::string s) {
    auto issp = [](unsigned char c) { return std::isspace(c) != 0; };
    while (!s.empty() && issp(s.front())) s.erase(s.begin());
    while (!s.empty() && issp(s.back())) s.pop_back();
    return s;
}

inline double parse_number(const std::string& tok, const std::string& path, int line) {
    std::size_t pos = 0;
    double v = 0.0;
    try {
        v = std::stod(tok, &pos);
    } catch (const std::exception&) {
        throw parse_error(path, line, "expected a number, got '" + tok + "'");
    }
    if (pos != tok.size()) throw parse_error(path, line, "trailing characters in number '" + tok + "'");
    return v;
}

inline Value parse_value(const std::string& raw, const std::string& path, int line) {
    std::string s = trim(raw);
    if (s.empty()) throw parse_error(path, line, "missing value");
    Value v;
    v.line = line;
    if (s.front() == '"') {
        if (s.size() < 2 || s.back() != '"') throw parse_error(path, line, "unterminated string");
        v.data = s.substr(1, s.size() - 2);
        return v;
    }
    if (s == "true" || s == "false") {
        v.data = (s == "true");
        return v;
    }
    if (s.front() == '[') {
        if (s.back() != ']') throw parse_error(path, line, "unterminated array");
        std::vector<double> items;
        std::string body = s.substr(1, s.size() - 2);
        std::stringstream ss(body);
        std::string tok;
        while (std::getline(ss, tok, ',')) {
            tok = trim(tok);
            if (tok.empty()) continue;
            items.push_back(parse_number(tok, path, line));
        }
        v.data = std::move(items);
        return v;
    }
    v.data = parse_number(s, path, line);
    return v;
}

inline Document parse_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open config file " + path);
    Document doc;
    std::string section; // "" is the root table
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        // strip comments outside strings
        bool in_str = false;
        for (std::size_t i = 0; i < line.size(); ++i) {
            if (line[i] == '"') in_str = !in_str;
            if (line[i] == '#' && !in_str) {
                line.erase(i);
                break;
            }
        }
        std::string s = trim(line);
        if (s.empty()) continue;
        if (s.front() == '[') {
            if (s.back() != ']') throw parse_error(path, lineno, "unterminated table header");
            section = trim(s.substr(1, s.size() - 2));
            if (section.empty()) throw parse_error(path, lineno, "empty table name");
            doc[section];
            continue;
        }
        auto eq = s.find('=');
        if (eq == std::string::npos) throw parse_error(path, lineno, "expected key = value");
        std::string key = trim(s.substr(0, eq));
        if (key.empty()) throw parse_error(path, lineno, "empty key");
        if (doc[section].count(key)) throw parse_error(path, lineno, "duplicate key '" + key + "'");
        doc[section][key] = parse_value(s.substr(eq + 1), path, lineno);
    }
    return doc;
}

} // namespace toml

// ---------------------------------------------------------------------------
// experiment description

enum class StudyKind { decay, convergence, rescaling, inequalities, oracle };

inline std::string study_name(StudyKind s) {
    switch (s) {
        case StudyKind::decay: return "decay";
        case StudyKind::convergence: return "convergence";
        case StudyKind::rescaling: return "rescaling";
        case StudyKind::inequalities: return "inequalities";
        case StudyKind::oracle: return "oracle";
    }
    return "?";
}

struct InitialDatum {
    enum class Kind { gaussian, box, two_bump, csv } kind = Kind::gaussian;
    double mass = 1.0, width = 1.0, center = 0.0;
    std::vector<double> masses, centers, widths;
    std::string csv_path;

    /// Samples on the grid, then renormalizes so the discrete mass matches
    /// the requested mass exactly.
    Field build(const Grid& g) const {
        Field f(g);
        switch (kind) {
            case Kind::gaussian:
                for (std::size_t i = 0; i < g.n; ++i) {
                    double z = (g.x_center(i) - center) / width;
                    f.values[i] = std::exp(-0.5 * z * z);
                }
                break;
            case Kind::box:
                for (std::size_t i = 0; i < g.n; ++i)
                    f.values[i] = std::abs(g.x_center(i) - center) <= 0.5 * width ? 1.0 : 0.0;
                break;
            case Kind::two_bump: {
                if (masses.size() != centers.size() || masses.size() != widths.size() ||
                    masses.empty())
                    throw std::invalid_argument("initial: two_bump needs equal-length masses/centers/widths");
                for (std::size_t b = 0; b < masses.size(); ++b)
                    for (std::size_t i = 0; i < g.n; ++i) {
                        double z = (g.x_center(i) - centers[b]) / widths[b];
                        f.values[i] += masses[b] * std::exp(-0.5 * z * z) /
                                       (widths[b] * std::sqrt(2.0 * std::numbers::pi));
                    }
                break;
            }
            case Kind::csv: {
                Field loaded = read_field_csv(csv_path);
                if (loaded.grid != g)
                    throw std::invalid_argument("initial: csv grid does not match [grid] section");
                f = loaded;
                break;
            }
        }
        if (kind != Kind::csv) {
            double m0 = nlcd::mass(f);
            if (!(m0 > 0.0)) throw std::invalid_argument("initial: datum has zero mass");
            double target = kind == Kind::two_bump
                                ? std::accumulate(masses.begin(), masses.end(), 0.0)
                                : mass;
            for (double& v : f.values) v *= target / m0;
        }
        double mn = 0.0;
        for (double v : f.values) mn = std::min(mn, v);
        f.nonneg = mn >= 0.0;
        return f;
    }
};

struct AnalysisParams {
    std::vector<double> p_list{1.0, 2.0};
    double window_lo = 50.0, window_hi = 500.0;
    std::vector<double> lambda_list;
    std::vector<double> R_list;
    std::vector<double> t_list;
    std::vector<double> eps_list{0.1, 0.5, 0.9};
    std::vector<double> n_list{1, 2, 4, 8};
    int trials = 1000;
    std::string profile = "auto"; // auto | heat | burgers
    double bump_halfwidth = 2.0;
};

struct ExperimentSpec {
    StudyKind study = StudyKind::decay;
    std::string output_dir = "out";
    std::uint64_t seed = 1;
    KernelSpec kernel = KernelSpec::exponential();
    double kernel_tail_tol = 1e-12;
    Grid grid = Grid::symmetric(200.0, 2048);
    InitialDatum initial;
    SolverConfig solver;
    AnalysisParams analysis;
    std::string canonical; // canonical serialization, hashed into the manifest
};

namespace detail {

inline const toml::Value& need(const toml::Table& t, const std::string& section,
                               const std::string& key, const std::string& path) {
    auto it = t.find(key);
    if (it == t.end())
        throw std::runtime_error(path + ": missing key '" + key + "' in [" + section + "]");
    return it->second;
}

template <class T>
T get_as(const toml::Value& v, const std::string& path, const std::string& key) {
    if (const T* p = std::get_if<T>(&v.data)) return *p;
    throw toml::parse_error(path, v.line, "wrong type for '" + key + "'");
}

inline void reject_unknown(const toml::Table& t, const std::string& section,
                           const std::set<std::string>& allowed, const std::string& path) {
    for (const auto& [key, value] : t)
        if (!allowed.count(key))
            throw toml::parse_error(path, value.line,
                                    "unknown key '" + key + "' in [" + section + "]");
}

inline std::string canonical_serialize(const toml::Document& doc) {
    std::ostringstream out;
    for (const auto& [section, table] : doc) {
        out << '[' << section << "]\n";
        for (const auto& [key, value] : table) {
            out << key << '=';
            std::visit(
                [&](const auto& v) {
                    using T = std::decay_t<decltype(v)>;
                    if constexpr (std::is_same_v<T, double>) out << fmt17(v);
                    else if constexpr (std::is_same_v<T, bool>) out << (v ? "true" : "false");
                    else if constexpr (std::is_same_v<T, std::string>) out << '"' << v << '"';
                    else {
                        out << '[';
                        for (std::size_t i = 0; i < v.size(); ++i)
                            out << (i ? "," : "") << fmt17(v[i]);
                        out << ']';
                    }
                },
                value.data);
            out << '\n';
        }
    }
    return out.str();
}

inline bool contains_time(const std::vector<double>& times, double t, double t_end) {
    double tol = 1e-9 * std::max(1.0, t_end);
    if (std::abs(t) <= tol || std::abs(t - t_end) <= tol) return true; // always recorded
    for (double s : times)
        if (std::abs(s - t) <= tol) return true;
    return false;
}

} // namespace detail

/// Parses and validates an experiment file. Violations carry file:line
/// positions where they originate from a config value.
inline ExperimentSpec load_spec(const std::string& path) {
    toml::Document doc = toml::parse_file(path);
    ExperimentSpec spec;
    spec.canonical = detail::canonical_serialize(doc);

    using detail::get_as;
    using detail::need;

    // root
    {
        const toml::Table& root = doc[""];
        detail::reject_unknown(root, "", {"study", "output_dir", "seed"}, path);
        std::string study = get_as<std::string>(need(root, "", "study", path), path, "study");
        if (study == "decay") spec.study = StudyKind::decay;
        else if (study == "convergence") spec.study = StudyKind::convergence;
        else if (study == "rescaling") spec.study = StudyKind::rescaling;
        else if (study == "inequalities") spec.study = StudyKind::inequalities;
        else if (study == "oracle") spec.study = StudyKind::oracle;
        else throw toml::parse_error(path, need(root, "", "study", path).line,
                                     "unknown study '" + study + "'");
        if (root.count("output_dir"))
            spec.output_dir = get_as<std::string>(root.at("output_dir"), path, "output_dir");
        if (root.count("seed"))
            spec.seed = static_cast<std::uint64_t>(get_as<double>(root.at("seed"), path, "seed"));
    }

    if (doc.count("grid")) {
        const toml::Table& t = doc["grid"];
        detail::reject_unknown(t, "grid", {"half_width", "n"}, path);
        double hw = t.count("half_width") ? get_as<double>(t.at("half_width"), path, "half_width") : 200.0;
        double n = t.count("n") ? get_as<double>(t.at("n"), path, "n") : 2048.0;
        try {
            spec.grid = Grid::symmetric(hw, static_cast<std::size_t>(n));
        } catch (const std::exception& e) {
            throw toml::parse_error(path, t.begin()->second.line, e.what());
        }
    }

    if (doc.count("kernel")) {
        const toml::Table& t = doc["kernel"];
        detail::reject_unknown(t, "kernel", {"family", "rate", "sigma", "halfwidth", "csv", "tail_tol"}, path);
        std::string family = t.count("family")
                                 ? get_as<std::string>(t.at("family"), path, "family")
                                 : std::string("exponential");
        try {
            if (family == "exponential")
                spec.kernel = KernelSpec::exponential(
                    t.count("rate") ? get_as<double>(t.at("rate"), path, "rate") : 1.0);
            else if (family == "gaussian")
                spec.kernel = KernelSpec::gaussian(get_as<double>(need(t, "kernel", "sigma", path), path, "sigma"));
            else if (family == "box")
                spec.kernel = KernelSpec::box(get_as<double>(need(t, "kernel", "halfwidth", path), path, "halfwidth"));
            else if (family == "tabulated")
                spec.kernel = read_kernel_csv(get_as<std::string>(need(t, "kernel", "csv", path), path, "csv"));
            else
                throw std::runtime_error("unknown kernel family '" + family + "'");
        } catch (const toml::parse_error&) {
            throw;
        } catch (const std::exception& e) {
            throw toml::parse_error(path, t.begin()->second.line, e.what());
        }
        if (t.count("tail_tol"))
            spec.kernel_tail_tol = get_as<double>(t.at("tail_tol"), path, "tail_tol");
    }

    if (doc.count("initial")) {
        const toml::Table& t = doc["initial"];
        detail::reject_unknown(
            t, "initial", {"kind", "mass", "width", "center", "masses", "centers", "widths", "csv"}, path);
        std::string kind = t.count("kind") ? get_as<std::string>(t.at("kind"), path, "kind")
                                           : std::string("gaussian");
        if (kind == "gaussian") spec.initial.kind = InitialDatum::Kind::gaussian;
        else if (kind == "box") spec.initial.kind = InitialDatum::Kind::box;
        else if (kind == "two_bump") spec.initial.kind = InitialDatum::Kind::two_bump;
        else if (kind == "csv") spec.initial.kind = InitialDatum::Kind::csv;
        else throw toml::parse_error(path, t.at("kind").line, "unknown initial kind '" + kind + "'");
        if (t.count("mass")) spec.initial.mass = get_as<double>(t.at("mass"), path, "mass");
        if (t.count("width")) spec.initial.width = get_as<double>(t.at("width"), path, "width");
        if (t.count("center")) spec.initial.center = get_as<double>(t.at("center"), path, "center");
        if (t.count("masses"))
            spec.initial.masses = get_as<std::vector<double>>(t.at("masses"), path, "masses");
        if (t.count("centers"))
            spec.initial.centers = get_as<std::vector<double>>(t.at("centers"), path, "centers");
        if (t.count("widths"))
            spec.initial.widths = get_as<std::vector<double>>(t.at("widths"), path, "widths");
        if (t.count("csv")) spec.initial.csv_path = get_as<std::string>(t.at("csv"), path, "csv");
    }

    if (doc.count("solver")) {
        const toml::Table& t = doc["solver"];
        detail::reject_unknown(
            t, "solver", {"q", "a", "cfl", "scheme", "viscosity_eps", "t_end", "snapshot_times"}, path);
        if (t.count("q")) spec.solver.q = get_as<double>(t.at("q"), path, "q");
        if (t.count("a")) spec.solver.a = get_as<double>(t.at("a"), path, "a");
        if (t.count("cfl")) spec.solver.cfl = get_as<double>(t.at("cfl"), path, "cfl");
        if (t.count("viscosity_eps"))
            spec.solver.viscosity_eps = get_as<double>(t.at("viscosity_eps"), path, "viscosity_eps");
        if (t.count("t_end")) spec.solver.t_end = get_as<double>(t.at("t_end"), path, "t_end");
        if (t.count("snapshot_times"))
            spec.solver.snapshot_times =
                get_as<std::vector<double>>(t.at("snapshot_times"), path, "snapshot_times");
        if (t.count("scheme")) {
            std::string s = get_as<std::string>(t.at("scheme"), path, "scheme");
            if (s == "engquist_osher") spec.solver.scheme = Scheme::engquist_osher;
            else if (s == "godunov") spec.solver.scheme = Scheme::godunov;
            else if (s == "upwind_positive") spec.solver.scheme = Scheme::upwind_positive;
            else throw toml::parse_error(path, t.at("scheme").line, "unknown scheme '" + s + "'");
        }
        try {
            spec.solver.validate();
        } catch (const std::exception& e) {
            throw toml::parse_error(path, t.begin()->second.line, e.what());
        }
    }

    if (doc.count("analysis")) {
        const toml::Table& t = doc["analysis"];
        detail::reject_unknown(t, "analysis",
                               {"p_list", "window", "lambda_list", "R_list", "t_list", "eps_list",
                                "n_list", "trials", "profile", "bump_halfwidth"},
                               path);
        AnalysisParams& a = spec.analysis;
        if (t.count("p_list")) a.p_list = get_as<std::vector<double>>(t.at("p_list"), path, "p_list");
        if (t.count("window")) {
            auto w = get_as<std::vector<double>>(t.at("window"), path, "window");
            if (w.size() != 2) throw toml::parse_error(path, t.at("window").line, "window needs [t_lo, t_hi]");
            a.window_lo = w[0];
            a.window_hi = w[1];
        }
        if (t.count("lambda_list"))
            a.lambda_list = get_as<std::vector<double>>(t.at("lambda_list"), path, "lambda_list");
        if (t.count("R_list")) a.R_list = get_as<std::vector<double>>(t.at("R_list"), path, "R_list");
        if (t.count("t_list")) a.t_list = get_as<std::vector<double>>(t.at("t_list"), path, "t_list");
        if (t.count("eps_list")) a.eps_list = get_as<std::vector<double>>(t.at("eps_list"), path, "eps_list");
        if (t.count("n_list")) a.n_list = get_as<std::vector<double>>(t.at("n_list"), path, "n_list");
        if (t.count("trials"))
            a.trials = static_cast<int>(get_as<double>(t.at("trials"), path, "trials"));
        if (t.count("profile")) a.profile = get_as<std::string>(t.at("profile"), path, "profile");
        if (t.count("bump_halfwidth"))
            a.bump_halfwidth = get_as<double>(t.at("bump_halfwidth"), path, "bump_halfwidth");
    }

    for (const auto& [section, table] : doc)
        if (section != "" && section != "grid" && section != "kernel" && section != "initial" &&
            section != "solver" && section != "analysis")
            throw toml::parse_error(path, table.empty() ? 0 : table.begin()->second.line,
                                    "unknown section [" + section + "]");

    // cross-field invariants: every analysis time must be a snapshot time
    const double t_end = spec.solver.t_end;
    auto require_time = [&](double tau, const std::string& what) {
        if (tau < 0.0 || tau > t_end + 1e-9 * std::max(1.0, t_end))
            throw std::runtime_error(path + ": " + what + " t=" + std::to_string(tau) +
                                     " outside [0, t_end]");
        if (!detail::contains_time(spec.solver.snapshot_times, tau, t_end))
            throw std::runtime_error(path + ": " + what + " t=" + std::to_string(tau) +
                                     " is not in snapshot_times");
    };
    if (spec.study == StudyKind::decay) {
        std::size_t inside = 0;
        for (double s : spec.solver.snapshot_times)
            if (s >= spec.analysis.window_lo && s <= spec.analysis.window_hi) ++inside;
        if (inside < 8)
            throw std::runtime_error(path + ": decay window needs >= 8 snapshot times");
    }
    if (spec.study == StudyKind::convergence)
        for (double tau : spec.analysis.t_list) require_time(tau, "convergence time");
    if (spec.study == StudyKind::rescaling) {
        if (spec.analysis.lambda_list.empty())
            throw std::runtime_error(path + ": rescaling study needs lambda_list");
        for (double l : spec.analysis.lambda_list) require_time(l * l, "rescaling time lambda^2");
        for (double l : spec.analysis.lambda_list)
            for (double tt : spec.analysis.t_list) require_time(l * l * tt, "tail-bound time lambda^2 t");
    }
    if (spec.study == StudyKind::decay || spec.study == StudyKind::convergence ||
        spec.study == StudyKind::rescaling) {
        Field phi = spec.initial.build(spec.grid);
        phi.validate();
        if (!phi.nonneg)
            throw std::runtime_error(path + ": initial datum must be nonnegative for this study");
    }
    return spec;
}

// ---------------------------------------------------------------------------
// execution

struct CriterionResult {
    std::string name;
    bool pass = false;
    double value = 0.0;
    std::string detail;
};

struct RunManifest {
    std::string spec_hash;
    std::string tool_version = NLCD_VERSION;
    double wall_time_s = 0.0;
    std::vector<std::string> files;
    std::vector<CriterionResult> criteria;
    std::vector<std::string> notes;
    // named (x, y) series retained for plot emission
    std::map<std::string, std::vector<std::array<double, 2>>> series;

    bool all_pass() const {
        for (const auto& c : criteria)
            if (!c.pass) return false;
        return true;
    }
};

/// Writes one `plot_<name>.csv` per series; returns the paths written.
inline std::vector<std::string> emit_plot_data(const RunManifest& manifest,
                                               const std::string& out_dir) {
    std::vector<std::string> written;
    for (const auto& [name, rows] : manifest.series) {
        std::string path = out_dir + "/plot_" + name + ".csv";
        std::ofstream out(path);
        if (!out) throw std::runtime_error("emit_plot_data: cannot open " + path);
        out << "x,y\n";
        for (const auto& r : rows) out << fmt17(r[0]) << ',' << fmt17(r[1]) << '\n';
        written.push_back(path);
    }
    return written;
}

namespace detail {

inline Profile pick_profile(const ExperimentSpec& spec, double M, double A) {
    if (spec.analysis.profile == "heat") return Profile::heat(M, A);
    if (spec.analysis.profile == "burgers") return Profile::burgers(M, A);
    return spec.solver.q == 2.0 ? Profile::burgers(M, A) : Profile::heat(M, A);
}

inline void add_criterion(RunManifest& m, const std::string& name, bool pass, double value,
                          const std::string& detail = "") {
    m.criteria.push_back({name, pass, value, detail});
}

inline void write_snapshots(const SolutionStore& store, const std::string& dir,
                            RunManifest& manifest) {
    for (std::size_t i = 0; i < store.times.size(); ++i) {
        std::string path = dir + "/" + snapshot_filename(store.times[i]);
        write_field_csv(path, store.snapshots[i]);
        manifest.files.push_back(path);
    }
    std::string ledger_path = dir + "/ledger.csv";
    write_ledger_csv(ledger_path, store);
    manifest.files.push_back(ledger_path);
}

inline void run_decay_study(const ExperimentSpec& spec, const Field& phi,
                            const DiscreteKernel& k, RunManifest& manifest) {
    SolutionStore store = integrate(phi, k, spec.solver);
    write_snapshots(store, spec.output_dir, manifest);
    if (store.aborted) {
        add_criterion(manifest, "solver_completed", false, 0.0, store.abort_reason);
        return;
    }

    std::string fits_path = spec.output_dir + "/decay_fits.csv";
    std::ofstream fits(fits_path);
    fits << "p,slope,intercept,r_squared,n_points\n";
    for (double p : spec.analysis.p_list) {
        DecayFit fit = decay_exponent(store, p, spec.analysis.window_lo, spec.analysis.window_hi);
        fits << fmt17(p) << ',' << fmt17(fit.slope) << ',' << fmt17(fit.intercept) << ','
             << fmt17(fit.r_squared) << ',' << fit.n_points << '\n';
        double expected = -0.5 * (1.0 - 1.0 / p);
        double tol = p == 1.0 ? 0.01 : 0.06;
        char name[48];
        std::snprintf(name, sizeof(name), "decay_slope_p%g", p);
        add_criterion(manifest, name, std::abs(fit.slope - expected) <= tol, fit.slope,
                      "expected " + fmt17(expected) + " +- " + fmt17(tol));
        auto& series = manifest.series["decay_p" + std::string(name).substr(13)];
        for (std::size_t i = 0; i < store.times.size(); ++i)
            if (store.times[i] >= 1.0)
                series.push_back({std::log(store.times[i]), std::log(lp_norm(store.snapshots[i], p))});
    }
    manifest.files.push_back(fits_path);

    double C = fourier_splitting_constant(store, lp_norm(phi, 1.0), lp_norm(phi, 2.0));
    add_criterion(manifest, "fourier_splitting_finite", std::isfinite(C) && C > 0.0, C);

    double drift = std::abs(store.ledger.back().mass - store.ledger.front().mass +
                            store.boundary_leak);
    add_criterion(manifest, "mass_conservation", drift <= 1e-9, drift, "drift after leak subtraction");
    double mn = 0.0, mx = 0.0;
    for (double v : store.snapshots.back().values) {
        mn = std::min(mn, v);
        mx = std::max(mx, std::abs(v));
    }
    add_criterion(manifest, "positivity", mn >= -1e-14 * std::max(1.0, mx), mn);
}

inline void run_convergence_study(const ExperimentSpec& spec, const Field& phi,
                                  const DiscreteKernel& k, RunManifest& manifest) {
    SolutionStore store = integrate(phi, k, spec.solver);
    write_snapshots(store, spec.output_dir, manifest);
    if (store.aborted) {
        add_criterion(manifest, "solver_completed", false, 0.0, store.abort_reason);
        return;
    }
    double M = mass(phi), A = k.second_moment_A;
    Profile prof = pick_profile(spec, M, A);
    std::vector<double> ts = spec.analysis.t_list;
    if (ts.empty()) throw std::runtime_error("convergence study needs t_list");

    std::string path = spec.output_dir + "/convergence.csv";
    std::ofstream out(path);
    out << "t,p,renormalized_distance\n";
    for (double p : spec.analysis.p_list) {
        auto& series = manifest.series["convergence_p" + fmt17(p)];
        for (double t : ts) {
            double d = renormalized_distance(store, prof, p, t);
            out << fmt17(t) << ',' << fmt17(p) << ',' << fmt17(d) << '\n';
            series.push_back({t, d});
        }
    }
    manifest.files.push_back(path);

    double early = renormalized_distance(store, prof, 1.0, ts.front());
    double late = renormalized_distance(store, prof, 1.0, ts.back());
    add_criterion(manifest, "profile_distance_halved", late < 0.5 * early, late / early,
                  "late/early renormalized L1 distance");
    if (spec.solver.q == 2.0) {
        double d_burgers = renormalized_distance(store, Profile::burgers(M, A), 1.0, ts.back());
        double d_heat = renormalized_distance(store, Profile::heat(M, A), 1.0, ts.back());
        add_criterion(manifest, "dichotomy_burgers_beats_heat", d_burgers < d_heat,
                      d_burgers / d_heat, "L1 distance ratio burgers/heat at late time");
    }
}

inline void run_rescaling_study(const ExperimentSpec& spec, const Field& phi,
                                const DiscreteKernel& k, RunManifest& manifest) {
    SolutionStore store = integrate(phi, k, spec.solver);
    write_snapshots(store, spec.output_dir, manifest);
    if (store.aborted) {
        add_criterion(manifest, "solver_completed", false, 0.0, store.abort_reason);
        return;
    }
    double M = mass(phi), A = k.second_moment_A;
    Profile prof = pick_profile(spec, M, A);

    std::string path = spec.output_dir + "/rescaling.csv";
    std::ofstream out(path);
    out << "lambda,l1_distance\n";
    auto& series = manifest.series["rescaling"];
    std::vector<double> dists;
    for (double lambda : spec.analysis.lambda_list) {
        double d = rescaled_l1_distance(store, lambda, prof);
        out << fmt17(lambda) << ',' << fmt17(d) << '\n';
        series.push_back({lambda, d});
        dists.push_back(d);
    }
    manifest.files.push_back(path);
    bool decreasing = true;
    for (std::size_t i = 0; i + 1 < dists.size(); ++i) decreasing &= dists[i + 1] < dists[i];
    add_criterion(manifest, "rescaled_distance_decreasing", decreasing,
                  dists.empty() ? 0.0 : dists.back());

    if (!spec.analysis.R_list.empty() && !spec.analysis.t_list.empty()) {
        TailBoundFit fit = check_tail_bound(store, phi, spec.analysis.R_list, spec.analysis.t_list,
                                            spec.analysis.lambda_list);
        std::string tail_path = spec.output_dir + "/tail_bound.csv";
        std::ofstream tout(tail_path);
        tout << "R,C\n";
        for (std::size_t i = 0; i < spec.analysis.R_list.size(); ++i)
            tout << fmt17(spec.analysis.R_list[i]) << ',' << fmt17(fit.per_radius[i]) << '\n';
        manifest.files.push_back(tail_path);
        double cmax = 0.0, cmin = std::numeric_limits<double>::infinity();
        for (double c : fit.per_radius) {
            cmax = std::max(cmax, c);
            cmin = std::min(cmin, c);
        }
        bool stable = std::isfinite(fit.C) && (cmin == 0.0 ? true : cmax / cmin <= 4.0);
        add_criterion(manifest, "tail_bound_stable", stable, fit.C,
                      "max/min of per-radius constants <= 4");
    }
}

inline void run_inequalities_study(const ExperimentSpec& spec, RunManifest& manifest) {
    KernelSpec rho = make_bump_kernel(spec.analysis.bump_halfwidth);
    Grid g = Grid::symmetric(4.0, 1024);
    int trials = spec.analysis.trials;
    std::vector<double> lambdas{0.5, 1.0, 2.0, 8.0};
    if (!spec.analysis.lambda_list.empty()) lambdas = spec.analysis.lambda_list;
    std::vector<int> ns;
    for (double n : spec.analysis.n_list) ns.push_back(static_cast<int>(n));

    IneqReport grad = audit_gradient_bound(g, rho, lambdas, trials, spec.seed);
    IneqReport bal = audit_norm_balance(g, rho, spec.analysis.eps_list, trials, spec.seed + 1);
    IneqReport cut = audit_cutoff_bound(g, rho, ns, trials, spec.seed + 2);

    std::string path = spec.output_dir + "/inequalities.csv";
    std::ofstream out(path);
    out << "lemma,trials,worst_margin,violations,seed\n";
    for (const IneqReport* r : {&grad, &bal, &cut}) {
        out << r->lemma_id << ',' << r->trials << ',' << fmt17(r->worst_margin) << ','
            << r->violations << ',' << r->seed << '\n';
        add_criterion(manifest, r->lemma_id + "_no_violations", r->violations == 0,
                      r->worst_margin, std::to_string(r->trials) + " trials");
    }
    manifest.files.push_back(path);
}

/// Reference step written as plain scalar loops, independent of the solver's
/// fused update path; used only for cross-checking.
inline std::vector<double> naive_reference_step(const std::vector<double>& u,
                                                const DiscreteKernel& k, const SolverConfig& cfg,
                                                double dt, double dx) {
    const auto n = static_cast<std::ptrdiff_t>(u.size());
    const auto m = static_cast<std::ptrdiff_t>(k.half_width());
    auto at = [&](std::ptrdiff_t i) { return (i >= 0 && i < n) ? u[static_cast<std::size_t>(i)] : 0.0; };
    auto f = [&](double v) { return cfg.a * std::pow(std::abs(v), cfg.q - 1.0) * v; };
    auto nf = [&](double uL, double uR) { return cfg.a >= 0.0 ? f(uL) : f(uR); };
    std::vector<double> out(u.size());
    for (std::ptrdiff_t i = 0; i < n; ++i) {
        double conv = 0.0;
        for (std::ptrdiff_t j = -m; j <= m; ++j) conv += k.weight(j) * at(i - j);
        conv *= dx;
        double fr = nf(at(i), at(i + 1));
        double fl = nf(at(i - 1), at(i));
        double v = at(i) + dt * (conv - at(i)) - dt / dx * (fr - fl);
        if (cfg.viscosity_eps > 0.0)
            v += dt * cfg.viscosity_eps * (at(i + 1) - 2.0 * at(i) + at(i - 1)) / (dx * dx);
        out[static_cast<std::size_t>(i)] = v;
    }
    return out;
}

inline void run_oracle_study(const ExperimentSpec& spec, const Field& phi, const DiscreteKernel& k,
                             RunManifest& manifest) {
    std::mt19937_64 rng(spec.seed);
    std::uniform_real_distribution<double> unif(-1.0, 1.0);
    const int cases = std::clamp(spec.analysis.trials, 10, 1000);
    double worst_conv = 0.0;

    std::string path = spec.output_dir + "/oracle.csv";
    std::ofstream out(path);
    out << "case,n,max_rel_deviation\n";
    for (int c = 0; c < cases; ++c) {
        std::size_t n = 64 + static_cast<std::size_t>(rng() % 449); // up to 512
        Grid g(-1.0, spec.grid.dx, std::max<std::size_t>(n, 8));
        Field f(g);
        for (double& v : f.values) v = unif(rng);
        Field via_fft = convolve(k, f, ConvPath::fft);
        Field via_direct = convolve(k, f, ConvPath::direct);
        double scale = 0.0, dev = 0.0;
        for (std::size_t i = 0; i < f.size(); ++i) {
            scale = std::max(scale, std::abs(via_direct.values[i]));
            dev = std::max(dev, std::abs(via_fft.values[i] - via_direct.values[i]));
        }
        double rel = dev / std::max(scale, 1e-300);
        worst_conv = std::max(worst_conv, rel);
        out << c << ',' << g.n << ',' << fmt17(rel) << '\n';
    }
    manifest.files.push_back(path);
    add_criterion(manifest, "fft_vs_direct", worst_conv <= 1e-12, worst_conv,
                  std::to_string(cases) + " random fields");

    // one solver step against the scalar-loop reference
    double dt = 0.5 * stable_dt(phi, k, spec.solver);
    Field stepped = step(phi, k, spec.solver, dt);
    std::vector<double> ref = naive_reference_step(phi.values, k, spec.solver, dt, phi.grid.dx);
    double scale = 0.0, dev = 0.0;
    for (std::size_t i = 0; i < ref.size(); ++i) {
        scale = std::max(scale, std::abs(ref[i]));
        dev = std::max(dev, std::abs(stepped.values[i] - ref[i]));
    }
    double rel = dev / std::max(scale, 1e-300);
    add_criterion(manifest, "step_vs_reference", rel <= 1e-12, rel);
}

} // namespace detail

/// Runs the study described by spec: solver, requested measurements, CSV
/// outputs and plot series, then the manifest. Deterministic given
/// (spec, seed).
inline RunManifest execute(const ExperimentSpec& spec) {
    auto t0 = std::chrono::steady_clock::now();
    std::filesystem::create_directories(spec.output_dir);

    RunManifest manifest;
    manifest.spec_hash = [&] {
        char buf[24];
        std::snprintf(buf, sizeof(buf), "%016llx",
                      static_cast<unsigned long long>(fnv1a64(spec.canonical)));
        return std::string(buf);
    }();

    DiscreteKernel k = discretize(spec.kernel, spec.grid.dx, spec.kernel_tail_tol);
    Field phi = spec.initial.build(spec.grid);

    switch (spec.study) {
        case StudyKind::decay: detail::run_decay_study(spec, phi, k, manifest); break;
        case StudyKind::convergence: detail::run_convergence_study(spec, phi, k, manifest); break;
        case StudyKind::rescaling: detail::run_rescaling_study(spec, phi, k, manifest); break;
        case StudyKind::inequalities: detail::run_inequalities_study(spec, manifest); break;
        case StudyKind::oracle: detail::run_oracle_study(spec, phi, k, manifest); break;
    }

    if (manifest.series.empty()) manifest.notes.push_back("no plot series for this study");
    else {
        auto written = emit_plot_data(manifest, spec.output_dir);
        manifest.files.insert(manifest.files.end(), written.begin(), written.end());
    }

    manifest.wall_time_s =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

    nlohmann::json j;
    j["spec_hash"] = manifest.spec_hash;
    j["tool_version"] = manifest.tool_version;
    j["wall_time_s"] = manifest.wall_time_s;
    j["files"] = manifest.files;
    j["notes"] = manifest.notes;
    j["passed"] = manifest.all_pass();
    for (const auto& c : manifest.criteria)
        j["criteria"].push_back({{"name", c.name}, {"pass", c.pass}, {"value", c.value},
                                 {"detail", c.detail}});
    std::string mpath = spec.output_dir + "/manifest.json";
    std::ofstream mj(mpath);
    mj << j.dump(2) << '\n';
    manifest.files.push_back(mpath);
    return manifest;
}

} // namespace nlcd
