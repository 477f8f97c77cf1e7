#pragma once

#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "nlcd/grid.hpp"
#include "nlcd/solver.hpp"

namespace nlcd {

/// 17 significant digits: round-trips doubles exactly and keeps regression
/// hashes meaningful.
inline std::string fmt17(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

inline std::string snapshot_filename(double t) {
    char buf[48];
    std::snprintf(buf, sizeof(buf), "snap_t%.9g.csv", t);
    return buf;
}

/// Field snapshot: header `x,u`, one row per cell.
inline void write_field_csv(const std::string& path, const Field& f) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("write_field_csv: cannot open " + path);
    out << "x,u\n";
    for (std::size_t i = 0; i < f.size(); ++i)
        out << fmt17(f.grid.x_center(i)) << ',' << fmt17(f.values[i]) << '\n';
}

inline Field read_field_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("read_field_csv: cannot open " + path);
    std::string line;
    std::getline(in, line); // header
    std::vector<double> xs, us;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::istringstream row(line);
        std::string a, b;
        if (!std::getline(row, a, ',') || !std::getline(row, b))
            throw std::runtime_error("read_field_csv: malformed row in " + path);
        xs.push_back(std::stod(a));
        us.push_back(std::stod(b));
    }
    if (xs.size() < 8) throw std::runtime_error("read_field_csv: too few rows in " + path);
    double dx = xs[1] - xs[0];
    for (std::size_t i = 1; i < xs.size(); ++i)
        if (std::abs(xs[i] - xs[i - 1] - dx) > 1e-9 * std::max(1.0, std::abs(dx)))
            throw std::runtime_error("read_field_csv: non-uniform x column in " + path);
    Grid g(xs.front() - 0.5 * dx, dx, xs.size());
    return Field(g, std::move(us));
}

/// Ledger: header `t,mass,l2sq,dissipation`, one row per accepted step.
inline void write_ledger_csv(const std::string& path, const SolutionStore& store) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("write_ledger_csv: cannot open " + path);
    out << "t,mass,l2sq,dissipation\n";
    for (const LedgerRow& r : store.ledger)
        out << fmt17(r.t) << ',' << fmt17(r.mass) << ',' << fmt17(r.l2sq) << ','
            << fmt17(r.dissipation) << '\n';
}

/// Tabulated kernel rows `z,J`; symmetrizes by averaging J(z) and J(-z),
/// then renormalizes to unit mass.
inline KernelSpec read_kernel_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("read_kernel_csv: cannot open " + path);
    std::string line;
    std::getline(in, line);
    std::vector<std::pair<double, double>> rows;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::istringstream row(line);
        std::string a, b;
        if (!std::getline(row, a, ',') || !std::getline(row, b))
            throw std::runtime_error("read_kernel_csv: malformed row in " + path);
        rows.emplace_back(std::stod(a), std::stod(b));
    }
    if (rows.size() < 2) throw std::runtime_error("read_kernel_csv: too few rows");
    std::sort(rows.begin(), rows.end());
    double dz = 0.0;
    for (std::size_t i = 1; i < rows.size(); ++i) {
        double d = rows[i].first - rows[i - 1].first;
        if (i == 1) dz = d;
        else if (std::abs(d - dz) > 1e-9 * std::max(1.0, dz))
            throw std::runtime_error("read_kernel_csv: non-uniform z spacing");
    }
    // bin by |z|/dz and average the two sides
    std::size_t half = 0;
    for (auto& [z, J] : rows) half = std::max(half, static_cast<std::size_t>(std::llround(std::abs(z) / dz)));
    std::vector<double> sum(half + 1, 0.0);
    std::vector<int> count(half + 1, 0);
    for (auto& [z, J] : rows) {
        auto j = static_cast<std::size_t>(std::llround(std::abs(z) / dz));
        if (std::abs(std::abs(z) - static_cast<double>(j) * dz) > 1e-6 * std::max(1.0, dz))
            throw std::runtime_error("read_kernel_csv: z values not on a symmetric grid");
        sum[j] += J;
        count[j] += 1;
    }
    std::vector<double> half_samples(half + 1, 0.0);
    for (std::size_t j = 0; j <= half; ++j)
        half_samples[j] = count[j] > 0 ? sum[j] / count[j] : 0.0;
    return KernelSpec::tabulated(std::move(half_samples), dz);
}

} // namespace nlcd
