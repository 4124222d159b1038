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

#pragma once

// Command-line front end. Thin shell over the experiments module.

#include "thziqi/experiments.hpp"

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace thziqi::cli
{

enum ExitCode : int
{
    exit_ok = 0,
    exit_validation = 1,
    exit_runtime = 2,
    exit_io = 3,
    exit_usage = 64
};

/// Bad command line shape (no subcommand, unknown flag). Carries the usage text.
class UsageError : public std::runtime_error
{
  public:
    UsageError(const std::string &what, std::string usage) : std::runtime_error(what), usage_(std::move(usage)) {}
    const std::string &usage() const noexcept { return usage_; }

  private:
    std::string usage_;
};

struct CliInvocation
{
    std::string subcommand; ///< slope-sweep | se-curve | rate-vs-snr | nulling | oracle-check
    std::optional<std::filesystem::path> config;
    std::vector<std::string> overrides; ///< KEY=VALUE, applied after the config file
    std::filesystem::path out_dir = ".";
    std::optional<std::uint64_t> seed;
    std::optional<int> trials;
    std::optional<std::string> band;
    int instances = 100;
    bool deterministic_names = false;
    bool quiet = false;
};

struct ParsedCommand
{
    CliInvocation invocation;
    Scenario scenario;
};

/// Parse argv, then merge defaults < config file < --set overrides < dedicated flags and validate.
/// Throws UsageError, ValidationError, or IoError (unreadable config file).
ParsedCommand parse_and_validate(const std::vector<std::string> &args);

/// Apply one KEY=VALUE override to a JSON patch. VALUE is parsed as JSON when possible, else taken as a string.
void apply_override(nlohmann::json &patch, const std::string &assignment);

/// Runs the command, printing one summary line per output file to `out`. Returns an exit code; never throws.
int dispatch(const ParsedCommand &cmd, std::ostream &out, std::ostream &err);

/// parse_and_validate + dispatch with every failure mapped to an exit code and a single error line on `err`.
int main_entry(const std::vector<std::string> &args, std::ostream &out, std::ostream &err);

} // namespace thziqi::cli
