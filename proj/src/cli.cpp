// SPDX-License-Identifier: Apache-2.0
//
// thz-iqi: link-level simulator for I/Q imbalance in THz MU-MIMO-OFDM links
// Copyright (C) 2026 The thz-iqi authors
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

#include "thziqi/cli.hpp"

#include <CLI11.hpp>

#include <cstdlib>
#include <fstream>
#include <iostream>

namespace thziqi::cli
{

using nlohmann::json;

namespace
{

const std::vector<std::string> study_commands = {"slope-sweep", "se-curve", "rate-vs-snr", "nulling"};

std::string one_line(std::string s)
{
    for (char &c : s)
        if (c == '\n' || c == '\r')
            c = ' ';
    return s;
}

json read_config(const std::filesystem::path &path)
{
    std::ifstream f(path);
    if (!f)
        throw IoError("cannot read config file " + path.string());
    try
    {
        return json::parse(f);
    }
    catch (const json::parse_error &e)
    {
        throw ValidationError("config", "invalid JSON in " + path.string() + ": " + e.what());
    }
}

} // namespace

void apply_override(json &patch, const std::string &assignment)
{
    const auto eq = assignment.find('=');
    if (eq == std::string::npos || eq == 0)
        throw ValidationError(assignment, "expected KEY=VALUE");
    const std::string key = assignment.substr(0, eq);
    const std::string raw = assignment.substr(eq + 1);

    json value;
    try
    {
        value = json::parse(raw);
    }
    catch (const json::parse_error &)
    {
        value = raw;
    }

    json *node = &patch;
    size_t start = 0;
    for (;;)
    {
        const auto dot = key.find('.', start);
        const std::string part = key.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
        if (part.empty())
            throw ValidationError(key, "malformed key");
        if (dot == std::string::npos)
        {
            (*node)[part] = value;
            return;
        }
        json &child = (*node)[part];
        if (!child.is_object())
            child = json::object();
        node = &child;
        start = dot + 1;
    }
}

ParsedCommand parse_and_validate(const std::vector<std::string> &args)
{
    CLI::App app{"Link-level I/Q imbalance study runner for THz MU-MIMO-OFDM", "thz_iqi"};
    app.require_subcommand(1);

    CliInvocation inv;
    std::string config;
    std::string out_dir;
    std::uint64_t seed = 0;
    int trials = 0;
    std::string band;

    auto add_common = [&](CLI::App *sub) {
        sub->add_option("--config", config, "JSON scenario file");
        sub->add_option("--set", inv.overrides, "KEY=VALUE override (repeatable)")
            ->expected(1)
            ->multi_option_policy(CLI::MultiOptionPolicy::TakeAll);
        sub->add_option("--out", out_dir, "output directory (default $THZ_IQI_OUT or .)");
        sub->add_option("--seed", seed, "master seed");
        sub->add_option("--trials", trials, "Monte Carlo trials");
        sub->add_flag("--deterministic-names", inv.deterministic_names, "omit the timestamp from file names");
        sub->add_option("--band", band, "channel band")->check(CLI::IsMember({"thz", "rayleigh"}));
        sub->add_flag("--quiet", inv.quiet, "suppress summary lines");
    };
    for (const auto &name : study_commands)
        add_common(app.add_subcommand(name, "run the " + name + " study"));
    CLI::App *oracle = app.add_subcommand("oracle-check", "closed-form low-SNR metrics vs finite-difference oracle");
    add_common(oracle);
    oracle->add_option("--instances", inv.instances, "random instances")->check(CLI::PositiveNumber);

    std::vector<const char *> argv;
    argv.reserve(args.size() + 1);
    if (args.empty())
        argv.push_back("thz_iqi");
    for (const auto &a : args)
        argv.push_back(a.c_str());

    if (argv.size() <= 1)
        throw UsageError("no subcommand given", app.help());
    try
    {
        app.parse(static_cast<int>(argv.size()), argv.data());
    }
    catch (const CLI::CallForHelp &)
    {
        throw UsageError("", app.help());
    }
    catch (const CLI::ConversionError &e)
    {
        throw ValidationError("argv", one_line(e.what()));
    }
    catch (const CLI::ValidationError &e)
    {
        throw ValidationError("argv", one_line(e.what()));
    }
    catch (const CLI::ParseError &e)
    {
        throw UsageError(one_line(e.what()), app.help());
    }

    CLI::App *chosen = app.get_subcommands().front();
    inv.subcommand = chosen->get_name();
    if (chosen->count("--config"))
        inv.config = config;
    if (chosen->count("--seed"))
        inv.seed = seed;
    if (chosen->count("--trials"))
        inv.trials = trials;
    if (chosen->count("--band"))
        inv.band = band;
    if (chosen->count("--out"))
        inv.out_dir = out_dir;
    else if (const char *env = std::getenv("THZ_IQI_OUT"); env != nullptr && *env != '\0')
        inv.out_dir = env;

    json patch = inv.config ? read_config(*inv.config) : json::object();
    for (const auto &o : inv.overrides)
        apply_override(patch, o);
    if (inv.seed)
        patch["study"]["seed"] = *inv.seed;
    if (inv.trials)
        patch["study"]["trials"] = *inv.trials;
    if (inv.band)
        patch["channel"]["band"] = *inv.band;

    return {inv, scenario_from_json(patch)};
}

int dispatch(const ParsedCommand &cmd, std::ostream &out, std::ostream &err)
{
    const CliInvocation &inv = cmd.invocation;
    const Scenario &s = cmd.scenario;
    try
    {
        if (inv.subcommand == "oracle-check")
        {
            const OracleReport r = oracle_agreement(inv.instances, s.seed, s.slope_convention);
            out << "oracle-check instances=" << r.instances << " max_rel_error=" << r.max_rel_error()
                << " ebn0_min=" << r.max_rel_error_ebn0 << " slope=" << r.max_rel_error_slope << "\n";
            return r.max_rel_error() < 0.01 ? exit_ok : exit_runtime;
        }

        if (s.iqi.irr_db && !inv.quiet)
        {
            const double phase = deg_to_rad(s.iqi.phase_deg);
            if (*s.iqi.irr_db > max_irr_db(phase))
                err << "note: IRR " << *s.iqi.irr_db << " dB is infeasible at phase " << s.iqi.phase_deg
                    << " deg; using g = 1 (IRR " << max_irr_db(phase) << " dB)\n";
        }
        const Study study = study_from_string(inv.subcommand);
        const ResultTable table = run_study(study, s);
        const auto path = write_csv(table, inv.out_dir, inv.deterministic_names);
        if (!inv.quiet)
            out << "wrote " << path.string() << " (" << table.rows.size() << " rows, " << s.trials << " trials)\n";
        return exit_ok;
    }
    catch (const ValidationError &e)
    {
        err << "error: validation key=" << e.key() << " message=\"" << one_line(e.message()) << "\"\n";
        return exit_validation;
    }
    catch (const IoError &e)
    {
        err << "error: io message=\"" << one_line(e.what()) << "\"\n";
        return exit_io;
    }
    catch (const std::exception &e)
    {
        err << "error: runtime study=" << inv.subcommand << " message=\"" << one_line(e.what()) << "\"\n";
        return exit_runtime;
    }
}

int main_entry(const std::vector<std::string> &args, std::ostream &out, std::ostream &err)
{
    ParsedCommand cmd;
    try
    {
        cmd = parse_and_validate(args);
    }
    catch (const UsageError &e)
    {
        if (std::string(e.what()).empty())
        {
            out << e.usage();
            return exit_ok;
        }
        err << e.usage();
        err << "error: usage message=\"" << e.what() << "\"\n";
        return exit_usage;
    }
    catch (const ValidationError &e)
    {
        err << "error: validation key=" << e.key() << " message=\"" << one_line(e.message()) << "\"\n";
        return exit_validation;
    }
    catch (const IoError &e)
    {
        err << "error: io message=\"" << one_line(e.what()) << "\"\n";
        return exit_io;
    }
    catch (const std::exception &e)
    {
        err << "error: runtime message=\"" << one_line(e.what()) << "\"\n";
        return exit_runtime;
    }
    return dispatch(cmd, out, err);
}

} // namespace thziqi::cli
