// Command-line front end: run experiment files, audit the functional
// inequalities, and sample the closed-form limit profiles.

#include <cstdio>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "nlcd/experiment.hpp"
#include "nlcd/io.hpp"
#include "nlcd/profiles.hpp"

namespace {

int report(const nlcd::RunManifest& manifest) {
    for (const auto& c : manifest.criteria)
        std::printf("[%s] %s = %.6g %s\n", c.pass ? "PASS" : "FAIL", c.name.c_str(), c.value,
                    c.detail.empty() ? "" : ("(" + c.detail + ")").c_str());
    std::printf("%zu files, wall time %.2fs, spec %s\n", manifest.files.size(),
                manifest.wall_time_s, manifest.spec_hash.c_str());
    return manifest.all_pass() ? 0 : 1;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"nonlocal convection-diffusion laboratory"};
    app.require_subcommand(1);

    std::string spec_path;
    auto* run_cmd = app.add_subcommand("run", "execute an experiment file");
    run_cmd->add_option("spec", spec_path, "experiment TOML file")->required();

    std::string verify_path;
    auto* verify_cmd = app.add_subcommand("verify", "run only the inequality audits of a spec");
    verify_cmd->add_option("spec", verify_path, "experiment TOML file")->required();

    auto* profile_cmd = app.add_subcommand("profile", "sample a closed-form limit profile");
    std::string kind = "heat", out_path;
    double M = 1.0, A = 1.0, t = 1.0, half_width = 30.0;
    std::size_t n = 2048;
    profile_cmd->add_option("--kind", kind, "heat or burgers")
        ->check(CLI::IsMember({"heat", "burgers"}));
    profile_cmd->add_option("--M", M, "mass");
    profile_cmd->add_option("--A", A, "diffusivity");
    profile_cmd->add_option("--t", t, "evaluation time")->check(CLI::PositiveNumber);
    profile_cmd->add_option("--half-width", half_width, "domain half width");
    profile_cmd->add_option("--n", n, "cell count");
    profile_cmd->add_option("--out", out_path, "output CSV (default stdout)");

    CLI11_PARSE(app, argc, argv);

    try {
        if (run_cmd->parsed()) {
            nlcd::ExperimentSpec spec = nlcd::load_spec(spec_path);
            return report(nlcd::execute(spec));
        }
        if (verify_cmd->parsed()) {
            nlcd::ExperimentSpec spec = nlcd::load_spec(verify_path);
            spec.study = nlcd::StudyKind::inequalities;
            return report(nlcd::execute(spec));
        }
        if (profile_cmd->parsed()) {
            nlcd::Grid grid = nlcd::Grid::symmetric(half_width, n);
            nlcd::Profile prof = kind == "heat" ? nlcd::Profile::heat(M, A)
                                                : nlcd::Profile::burgers(M, A);
            nlcd::Field f = nlcd::sample_field(grid, [&](double x) { return prof.eval(t, x); });
            if (out_path.empty()) {
                std::printf("x,u\n");
                for (std::size_t i = 0; i < f.size(); ++i)
                    std::printf("%s,%s\n", nlcd::fmt17(grid.x_center(i)).c_str(),
                                nlcd::fmt17(f.values[i]).c_str());
            } else {
                nlcd::write_field_csv(out_path, f);
            }
            return 0;
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    }
    return 0;
}
