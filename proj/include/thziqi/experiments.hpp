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

// Scenario orchestration: seeded user placement, Monte Carlo trials, the sweep studies and CSV output.

#include "thziqi/beamforming.hpp"
#include "thziqi/impairments.hpp"
#include "thziqi/metrics.hpp"

#include <nlohmann/json.hpp>

#include <atomic>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace thziqi
{

inline constexpr const char *code_version = "0.1.0";

enum class Band
{
    thz,
    rayleigh
};

std::string to_string(Band band);
Band band_from_string(const std::string &s);

/// Inclusive arithmetic grid start, start + step, ... <= stop.
struct SweepRange
{
    double start = 0.0;
    double stop = 0.0;
    double step = 1.0;

    std::vector<double> values() const;
};

struct PlacementConfig
{
    double distance_m = 1.0;
    double azimuth_min_deg = -60.0;
    double azimuth_max_deg = 60.0;
    double elevation_min_deg = 80.0;
    double elevation_max_deg = 100.0;
    double min_separation_deg = 5.0;
    int max_attempts = 10000;
};

struct IqiConfig
{
    double amplitude = 1.0;         ///< g, used when irr_db is unset
    double phase_deg = 5.0;         ///< Phi
    std::optional<double> irr_db;   ///< when set, g is recovered from (IRR, Phi), clamped to the feasible set
    bool tx_enabled = true;
    bool rx_enabled = true;
    bool inflated_noise_in_wideband = false; ///< use Zbar instead of unit noise in the low-SNR metrics
};

struct Scenario
{
    SystemConfig system;
    Band band = Band::thz;
    PlacementConfig placement;
    IqiConfig iqi;
    bool normalize_gain = true;
    bool ideal_per_subcarrier_analog = false;
    bool iqi_enabled = true;
    bool iui_enabled = true;
    PowerPolicy nulling_power = PowerPolicy::pooled;
    SlopeConvention slope_convention = SlopeConvention::derivative;
    SweepRange snr_db{0.0, 60.0, 5.0};
    SweepRange amplitude{0.7, 1.0, 0.05};
    SweepRange ebn0_db{-2.0, 10.0, 0.5};
    std::vector<double> amplitude_list{0.9, 0.8, 0.7};
    int trials = 100;
    std::uint64_t seed = 1;
    unsigned threads = 0; ///< 0 selects the hardware concurrency

    /// Throws ValidationError naming the offending configuration key.
    void validate() const;

    /// (g, Phi) applied to every chain in the rate studies.
    ChainImbalance chain_imbalance() const;

    /// IQI parameters for the given chain imbalance, honouring the tx/rx enable flags.
    IqiParams iqi_params(ChainImbalance chain) const;
};

nlohmann::json scenario_to_json(const Scenario &s);

/// Build from a (possibly partial) JSON document layered over the defaults. Unknown keys and type
/// mismatches raise ValidationError.
Scenario scenario_from_json(const nlohmann::json &j);

/// Compact key-sorted JSON used in the CSV header and for reproducibility.
std::string canonical_scenario(const Scenario &s);

struct ResultTable
{
    std::string study;
    Band band = Band::thz;
    std::vector<std::string> columns;
    std::vector<std::vector<double>> rows;
    std::string scenario_echo;
    std::uint64_t seed = 0;
    std::string version = code_version;

    /// Column by name.
    std::vector<double> column(const std::string &name) const;
};

/// Header comment, column header, rows at 9 significant digits.
std::string to_csv(const ResultTable &table);

/// `<study>_<band>_<timestamp>.csv`, or `<study>_<band>.csv` with deterministic names. The file is written
/// under a `.partial` name and renamed once complete. Throws IoError.
std::filesystem::path write_csv(const ResultTable &table, const std::filesystem::path &dir, bool deterministic_names);

/// Every (user, subarray) link at `distance_m` with its own LOS angles drawn uniformly from the cone.
/// Seen from each subarray the users' departure directions are pairwise at least `min_separation_deg`
/// apart; seen from each user the subarrays' arrival directions are likewise separated.
UserPlacement place_users(const SystemConfig &cfg, const PlacementConfig &placement, std::uint64_t seed);

/// Concatenated channel H_c[k] of one trial. THz: LOS channel, matched analog beams, optionally normalized
/// by the carrier-frequency path loss. Rayleigh: i.i.d. baseline.
SubcarrierMatrices trial_channel(const Scenario &s, std::uint64_t trial);

/// Seed of trial `trial`, derived from the scenario's master seed.
std::uint64_t trial_seed(std::uint64_t master_seed, std::uint64_t trial);

/// Sum over subcarriers and users of log2(1 + SINR) with explicit digital precoders.
double sum_rate(const EffectiveChannels &ch, const DigitalBeamformers &w, const MatrixXcd &zbar);

ResultTable sweep_slope_vs_g(const Scenario &s);
ResultTable sweep_se_vs_ebn0(const Scenario &s);
ResultTable sweep_rate_vs_snr(const Scenario &s);
ResultTable sweep_nulling(const Scenario &s);

struct OracleReport
{
    int instances = 0;
    double max_rel_error_ebn0 = 0.0;
    double max_rel_error_slope = 0.0;
    double max_rel_error() const { return std::max(max_rel_error_ebn0, max_rel_error_slope); }
};

/// Closed-form minimum bit energy and slope against the finite-difference oracle on random instances
/// (M <= N <= 3, K <= 4), half without and half with IQI.
OracleReport oracle_agreement(int instances, std::uint64_t seed, SlopeConvention convention = SlopeConvention::derivative);

enum class Study
{
    slope_sweep,
    se_curve,
    rate_vs_snr,
    nulling
};

std::string to_string(Study study);
Study study_from_string(const std::string &s);

ResultTable run_study(Study study, const Scenario &s);

/// Runs the study and writes its CSV; returns the file path.
std::filesystem::path run(Study study, const Scenario &s, const std::filesystem::path &out_dir,
                          bool deterministic_names);

/// Set to abort running sweeps between trials (checked by the worker pool).
std::atomic<bool> &cancel_flag();

} // namespace thziqi
