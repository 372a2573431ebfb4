// Command-line front end: one subcommand per experiment.

#include <CLI11.hpp>

#include <iostream>
#include <optional>
#include <string>

#include "nwpc/errors.hpp"
#include "nwpc/experiment/experiments.hpp"

using namespace nwpc;
using namespace nwpc::experiment;

namespace {

struct Common {
    std::string config;
    std::optional<double> resolution;
    std::optional<std::string> preset;
    std::optional<std::string> out;
    int jobs = 0;
};

void add_common(CLI::App* sub, Common& c) {
    sub->add_option("--config", c.config, "JSON configuration file");
    sub->add_option("--resolution", c.resolution, "cells per a_o");
    sub->add_option("--preset", c.preset, "draft or paper")->check(CLI::IsMember({"draft", "paper"}));
    sub->add_option("--out", c.out, "output directory");
    sub->add_option("--jobs", c.jobs, "parallel simulations (default: available cores)")->check(CLI::NonNegativeNumber);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Hybrid GaP-on-diamond photonic-crystal cavity simulations"};
    app.require_subcommand(1);
    Common common;
    std::optional<double> q, v_bar, field_ratio, z_nm;
    std::optional<std::string> cavity_result;
    const std::pair<ExperimentKind, const char*> kinds[] = {
        {ExperimentKind::Bands, "TE/TM bands and lightlines of the ridge unit cell"},
        {ExperimentKind::QwgSweep, "per-cell waveguide Q at the zone edge versus etch depth"},
        {ExperimentKind::Cavity, "heterostructure cavity resonance, Q budget, mode volume"},
        {ExperimentKind::Dipole, "dipole emission into the waveguide, normalized to bare diamond"},
        {ExperimentKind::Qed, "coupling rate, cavity decay, Purcell factor and beta"}};
    for (const auto& [kind, help] : kinds) {
        auto* sub = app.add_subcommand(to_string(kind), help);
        add_common(sub, common);
        if (kind == ExperimentKind::Qed) {
            sub->add_option("--q", q, "cavity quality factor");
            sub->add_option("--v-bar", v_bar, "mode volume in (lambda / n_GaP)^3");
            sub->add_option("--field-ratio", field_ratio, "|E(NV)| / |E_o| at the diamond surface");
            sub->add_option("--z-nm", z_nm, "NV depth below the surface");
            sub->add_option("--cavity-result", cavity_result, "cavity result JSON supplying q and v_bar");
        }
    }
    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 2;
    }
    const auto kind = experiment_kind_from_string(app.get_subcommands().front()->get_name());
    try {
        CliOverrides ov{common.preset, common.resolution, common.out};
        ExperimentConfig cfg = load_config(
            kind, common.config.empty() ? std::nullopt : std::optional<std::string>(common.config), ov);
        if (kind == ExperimentKind::Qed) {
            auto& in = cfg.simulation.qed;
            if (q) in.q = q;
            if (v_bar) in.v_bar = v_bar;
            if (field_ratio) in.field_ratio = field_ratio;
            if (z_nm) in.z_nm = z_nm;
            if (cavity_result) in.cavity_result = *cavity_result;
            cfg.validate();
        }
        const RunSummary s = run_experiment(cfg, common.jobs);
        for (const auto& o : s.outputs) std::cout << cfg.output_dir << '/' << o << '\n';
        if (!s.failures.empty()) {
            for (const auto& f : s.failures) std::cerr << "failed: " << f << '\n';
            return 3;
        }
        return 0;
    } catch (const ConfigError& e) {
        std::cerr << "configuration error: " << e.what() << '\n';
        return 2;
    } catch (const NumericalError& e) {
        std::cerr << "numerical failure: " << e.what() << '\n';
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 3;
    }
}
