// Copyright 2026 The edgevqc Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// edgevqc command-line runner.
//
//   edgevqc run --config grid.yaml [--output DIR] [-j N] [--filter k=3,method=edge] [--no-resume]
//   edgevqc check-config --config grid.yaml
//   edgevqc report --config grid.yaml [--output DIR]
//   edgevqc tempering-curves --output DIR [--function erf ...] [--min-grad 0.01 ...]

#include <CLI11.hpp>

#include <iostream>
#include <thread>

#include "edgevqc/experiment.hpp"

namespace {

using namespace edgevqc;

int cmd_run(const std::string &config_path, const std::string &output, std::size_t jobs, const std::string &filter,
            bool no_resume) {
    const ExperimentConfig cfg = load_config(config_path);
    GridOptions o;
    if (!output.empty()) o.output = output;
    o.jobs = jobs;
    o.filter = CellFilter::parse(filter);
    o.resume = !no_resume;
    const GridReport r = run_grid(cfg, o);
    std::cout << "cells requested " << r.requested << ", ran " << r.ran << ", skipped " << r.skipped << ", failed "
              << r.failures.size() << "\n";
    for (const auto &[id, msg] : r.failures) std::cout << "  failed " << id << ": " << msg << "\n";
    std::cout << "reports in " << r.output.string() << "\n";
    return r.ok() ? 0 : 1;
}

} // namespace

int main(int argc, char **argv) {
    CLI::App app{"Edge- and vertex-encoded variational quantum classifiers: training and evaluation grid"};
    app.require_subcommand(1);

    std::string config_path, output, filter;
    std::size_t jobs = 1;
    bool no_resume = false;
    auto *run = app.add_subcommand("run", "Train and evaluate every grid cell, then write reports");
    run->add_option("-c,--config", config_path, "YAML experiment config")->required()->check(CLI::ExistingFile);
    run->add_option("-o,--output", output, "Output directory (overrides the config)");
    run->add_option("-j,--jobs", jobs, "Worker threads")->check(CLI::Range(std::size_t{1}, std::size_t{1024}));
    run->add_option("-f,--filter", filter, "Cell filter, e.g. dataset=digits,k=3|4,block=CNN7,method=edge,seed=0");
    run->add_flag("--no-resume", no_resume, "Recompute cells that already have results");

    auto *check = app.add_subcommand("check-config", "Validate a config and print its canonical form");
    check->add_option("-c,--config", config_path, "YAML experiment config")->required()->check(CLI::ExistingFile);

    auto *report = app.add_subcommand("report", "Rebuild CSV reports and plot data from finished runs");
    report->add_option("-c,--config", config_path, "YAML experiment config")->required()->check(CLI::ExistingFile);
    report->add_option("-o,--output", output, "Output directory (overrides the config)");

    std::vector<std::string> fns = {"logistic", "erf", "gudermannian"};
    std::vector<double> grads = {0.01, 0.001};
    auto *curves = app.add_subcommand("tempering-curves", "Write tempering value and derivative curves");
    curves->add_option("-o,--output", output, "Output directory")->required();
    curves->add_option("--function", fns, "Tempering functions");
    curves->add_option("--min-grad", grads, "Minimum gradients at x = +-1");

    CLI11_PARSE(app, argc, argv);

    try {
        if (*run) return cmd_run(config_path, output, jobs, filter, no_resume);
        if (*check) {
            std::cout << to_yaml(load_config(config_path));
            return 0;
        }
        if (*report) {
            const ExperimentConfig cfg = load_config(config_path);
            GridOptions o;
            if (!output.empty()) o.output = output;
            const fs::path out = output_dir(cfg, o);
            write_reports(cfg, out);
            emit_plot_data(cfg, out);
            std::cout << "reports in " << out.string() << "\n";
            return 0;
        }
        if (*curves) {
            std::vector<TemperFn> parsed;
            for (const auto &f : fns) parsed.push_back(parse_temper_fn(f));
            write_tempering_curves(output, parsed, grads);
            return 0;
        }
    } catch (const ConfigError &e) {
        std::cerr << "config error at " << e.what() << "\n";
        return 2;
    } catch (const std::exception &e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 1;
}
