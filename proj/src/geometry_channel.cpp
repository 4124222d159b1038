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

#include "thziqi/geometry_channel.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace thziqi
{

double SystemConfig::spacing() const
{
    if (element_spacing_m > 0.0)
        return element_spacing_m;
    return speed_of_light / carrier_hz / 2.0;
}

void SystemConfig::validate() const
{
    auto require = [](bool ok, const char *key, const char *msg) {
        if (!ok)
            throw ValidationError(key, msg);
    };
    require(std::isfinite(bandwidth_hz) && bandwidth_hz > 0.0, "system.bandwidth_hz", "must be > 0");
    require(std::isfinite(carrier_hz) && carrier_hz > bandwidth_hz / 2.0, "system.carrier_hz",
            "must exceed half the bandwidth");
    require(half_subcarriers >= 1, "system.half_subcarriers", "must be >= 1");
    require(tx_subarrays >= 1, "system.tx_subarrays", "must be >= 1");
    require(users >= 1, "system.users", "must be >= 1");
    require(elements_per_side >= 1, "system.elements_per_side", "must be >= 1");
    require(std::isfinite(element_spacing_m) && element_spacing_m >= 0.0, "system.element_spacing_m",
            "must be > 0 (or 0 for half a wavelength)");
    require(std::isfinite(power_w) && power_w >= 0.0, "system.power_w", "must be >= 0");
    require(std::isfinite(noise_w) && noise_w > 0.0, "system.noise_w", "must be > 0");
    require(std::isfinite(tx_antenna_gain) && tx_antenna_gain > 0.0, "system.tx_antenna_gain", "must be > 0");
    require(std::isfinite(rx_antenna_gain) && rx_antenna_gain > 0.0, "system.rx_antenna_gain", "must be > 0");
}

std::vector<int> subcarrier_indices(int half_subcarriers)
{
    std::vector<int> out;
    out.reserve(static_cast<size_t>(2 * half_subcarriers));
    for (int k = -half_subcarriers; k <= half_subcarriers; ++k)
        if (k != 0)
            out.push_back(k);
    return out;
}

int subcarrier_slot(int k, int half_subcarriers)
{
    if (k == 0 || k < -half_subcarriers || k > half_subcarriers)
        throw ValidationError("k", "subcarrier index " + std::to_string(k) + " outside {-K..-1, 1..K}");
    return k < 0 ? k + half_subcarriers : k + half_subcarriers - 1;
}

double subcarrier_frequency(int k, const SystemConfig &cfg)
{
    subcarrier_slot(k, cfg.half_subcarriers);
    const double spacing = cfg.bandwidth_hz / (2.0 * cfg.half_subcarriers);
    return cfg.carrier_hz + k * spacing;
}

Eigen::Vector3d unit_vector(const Direction &d)
{
    const double st = std::sin(d.elevation);
    return {st * std::cos(d.azimuth), st * std::sin(d.azimuth), std::cos(d.elevation)};
}

double angular_separation(const Direction &a, const Direction &b)
{
    const double c = std::clamp(unit_vector(a).dot(unit_vector(b)), -1.0, 1.0);
    return std::acos(c);
}

ArrayGeometry element_positions(int side, double spacing_m, ArrayPlane plane)
{
    if (side < 1)
        throw ValidationError("side", "array needs at least one element per side");
    if (!(spacing_m > 0.0) || !std::isfinite(spacing_m))
        throw ValidationError("spacing_m", "element spacing must be > 0");

    ArrayGeometry geom;
    geom.side = side;
    geom.spacing_m = spacing_m;
    geom.plane = plane;
    geom.positions.reserve(static_cast<size_t>(side * side));
    const double center = (side - 1) / 2.0;
    for (int u = 0; u < side; ++u)
        for (int v = 0; v < side; ++v)
        {
            const double a = (u - center) * spacing_m;
            const double b = (v - center) * spacing_m;
            if (plane == ArrayPlane::xy)
                geom.positions.emplace_back(a, b, 0.0);
            else
                geom.positions.emplace_back(0.0, a, b);
        }
    return geom;
}

VectorXcd steering_vector(const ArrayGeometry &geom, const Direction &d, double freq_hz)
{
    if (!(freq_hz > 0.0))
        throw ValidationError("freq_hz", "frequency must be > 0");
    const double wavenumber = 2.0 * pi * freq_hz / speed_of_light;
    const Eigen::Vector3d dir = unit_vector(d);
    const double norm = 1.0 / std::sqrt(static_cast<double>(geom.size()));

    VectorXcd a(geom.size());
    for (int i = 0; i < geom.size(); ++i)
        a(i) = std::polar(norm, wavenumber * geom.positions[static_cast<size_t>(i)].dot(dir));
    return a;
}

double path_loss(double freq_hz, double distance_m, double tx_gain, double rx_gain)
{
    if (!(freq_hz > 0.0))
        throw ValidationError("freq_hz", "frequency must be > 0");
    if (!(distance_m > 0.0))
        throw ValidationError("distance_m", "distance must be > 0");
    return tx_gain * rx_gain * speed_of_light / (4.0 * pi * freq_hz * distance_m);
}

MatrixXcd SubcarrierChannel::dense() const
{
    if (blocks.empty())
        return {};
    const Eigen::Index q_rx = blocks.front().rx_steering.size();
    const Eigen::Index q_tx = blocks.front().tx_steering.size();
    MatrixXcd h = MatrixXcd::Zero(users * q_rx, subarrays * q_tx);
    for (int m = 0; m < users; ++m)
        for (int n = 0; n < subarrays; ++n)
            h.block(m * q_rx, n * q_tx, q_rx, q_tx) = block(m, n).dense();
    return h;
}

SubcarrierChannel los_channel(const SystemConfig &cfg, const UserPlacement &placement, const ArrayGeometry &geom,
                              int k)
{
    if (placement.users != cfg.users || placement.subarrays != cfg.tx_subarrays ||
        placement.links.size() != static_cast<size_t>(cfg.users * cfg.tx_subarrays))
        throw ValidationError("placement", "placement does not cover every (user, subarray) pair");

    SubcarrierChannel h;
    h.k = k;
    h.freq_hz = subcarrier_frequency(k, cfg);
    h.users = cfg.users;
    h.subarrays = cfg.tx_subarrays;
    h.blocks.reserve(placement.links.size());
    for (int m = 0; m < cfg.users; ++m)
        for (int n = 0; n < cfg.tx_subarrays; ++n)
        {
            const LinkGeometry &l = placement.link(m, n);
            ChannelBlock b;
            b.alpha = path_loss(h.freq_hz, l.distance_m, cfg.tx_antenna_gain, cfg.rx_antenna_gain);
            b.rx_steering = steering_vector(geom, l.arrival, h.freq_hz);
            b.tx_steering = steering_vector(geom, l.departure, h.freq_hz);
            h.blocks.push_back(std::move(b));
        }
    return h;
}

SubcarrierMatrices::SubcarrierMatrices(int half_subcarriers, Eigen::Index rows, Eigen::Index cols)
    : half_(half_subcarriers), rows_(rows), cols_(cols),
      data_(static_cast<size_t>(2 * half_subcarriers), MatrixXcd::Zero(rows, cols))
{
}

SubcarrierMatrices SubcarrierMatrices::scaled(double factor) const
{
    SubcarrierMatrices out = *this;
    for (auto &h : out.data_)
        h *= factor;
    return out;
}

SubcarrierMatrices SubcarrierMatrices::diagonal_only() const
{
    SubcarrierMatrices out = *this;
    for (auto &h : out.data_)
        for (Eigen::Index r = 0; r < h.rows(); ++r)
            for (Eigen::Index c = 0; c < h.cols(); ++c)
                if (r != c)
                    h(r, c) = 0.0;
    return out;
}

SubcarrierMatrices rayleigh_channel(int users, int subarrays, int half_subcarriers, std::uint64_t seed)
{
    if (users < 1 || subarrays < 1 || half_subcarriers < 1)
        throw ValidationError("rayleigh", "dimensions must be >= 1");
    SubcarrierMatrices out(half_subcarriers, users, subarrays);
    std::mt19937_64 rng = make_stream(seed, 0x5241594cULL);
    std::normal_distribution<double> normal(0.0, std::sqrt(0.5));
    for (auto &h : out.slots())
        for (Eigen::Index r = 0; r < h.rows(); ++r)
            for (Eigen::Index c = 0; c < h.cols(); ++c)
            {
                const double re = normal(rng);
                const double im = normal(rng);
                h(r, c) = cd(re, im);
            }
    return out;
}

} // namespace thziqi
