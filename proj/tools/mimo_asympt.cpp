// SPDX-License-Identifier: Apache-2.0
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
// http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
// ------------------------------------------------------------------------

// Command-line front end: asymptotics | simulate | compare | outage.

#include <iostream>
#include <string>

#include "CLI11.hpp"

#include "mimo/commands.hpp"
#include "mimo/montecarlo.hpp"

int main(int argc, char** argv) {
    CLI::App app{"Asymptotic and Monte Carlo statistics of MMSE MIMO mutual information"};
    app.require_subcommand(1, 1);

    std::string scenario;
    std::string out_dir = ".";
    std::string units = "bpcu";
    for (const char* verb : {"asymptotics", "simulate", "compare", "outage"}) {
        auto* sub = app.add_subcommand(verb);
        sub->add_option("--scenario", scenario, "scenario JSON file")->required();
        sub->add_option("--out", out_dir, "output directory");
        sub->add_option("--units", units, "display units for mutual information")
            ->check(CLI::IsMember({"nats", "bpcu"}));
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : static_cast<int>(mimo::ExitCode::config);
    }

    mimo::CommandContext ctx;
    ctx.out_dir = out_dir;
    ctx.units = mimo::parse_units(units);
    ctx.workers = mimo::default_workers();
    ctx.out = &std::cout;
    const auto verb = app.get_subcommands().front()->get_name();
    return static_cast<int>(mimo::run_command(verb, scenario, ctx, std::cerr));
}
