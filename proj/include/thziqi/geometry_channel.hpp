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

// LOS array-of-subarrays channel construction and the Rayleigh baseline.

#include "thziqi/common.hpp"

#include <Eigen/Core>

#include <cstdint>
#include <vector>

namespace thziqi
{

/// Link-level system dimensions and power settings.
///
/// Subcarriers are indexed k in {-K..-1, 1..K} symmetric about the carrier; there is no DC
/// subcarrier. Each user owns a single subarray, so the concatenated channel is M x N.
struct SystemConfig
{
    double carrier_hz = 300e9;
    double bandwidth_hz = 10e9;
    int half_subcarriers = 64; ///< K
    int tx_subarrays = 3;      ///< N
    int users = 3;             ///< M
    int elements_per_side = 16;
    double element_spacing_m = 0.0; ///< 0 selects half a wavelength at the carrier
    double power_w = 1.0;           ///< per active subcarrier per stream
    double noise_w = 1.0;           ///< per subcarrier
    double tx_antenna_gain = 1.0;
    double rx_antenna_gain = 1.0;

    int elements() const { return elements_per_side * elements_per_side; }
    int subcarrier_count() const { return 2 * half_subcarriers; }
    double spacing() const;

    /// Throws ValidationError naming the "system.*" key on any invariant violation.
    void validate() const;
};

/// Subcarrier indices in storage order: -K..-1, 1..K.
std::vector<int> subcarrier_indices(int half_subcarriers);

/// Storage slot of subcarrier k (0 for -K, 2K-1 for +K).
int subcarrier_slot(int k, int half_subcarriers);

/// f_k = f_c + k * B / (2K). Rejects k = 0 and |k| > K.
double subcarrier_frequency(int k, const SystemConfig &cfg);

/// Azimuth in [-pi, pi] measured in the x-y plane from +x; elevation in [0, pi] measured from +z.
struct Direction
{
    double azimuth = 0.0;
    double elevation = 0.0;
};

Eigen::Vector3d unit_vector(const Direction &d);

/// Angle between two directions in radians.
double angular_separation(const Direction &a, const Direction &b);

struct LinkGeometry
{
    double distance_m = 1.0;
    Direction arrival;   ///< at the user's subarray
    Direction departure; ///< at the transmit subarray
};

/// Geometry of every (user m, transmit subarray n) link, row-major in (m, n).
struct UserPlacement
{
    int users = 0;
    int subarrays = 0;
    std::vector<LinkGeometry> links;
    std::uint64_t seed = 0;

    const LinkGeometry &link(int m, int n) const { return links.at(static_cast<size_t>(m * subarrays + n)); }
    LinkGeometry &link(int m, int n) { return links.at(static_cast<size_t>(m * subarrays + n)); }
};

enum class ArrayPlane
{
    xy, ///< normal along +z; broadside is elevation 0
    yz  ///< normal along +x; broadside is azimuth 0, elevation pi/2
};

struct ArrayGeometry
{
    int side = 1;
    double spacing_m = 0.0;
    ArrayPlane plane = ArrayPlane::xy;
    std::vector<Eigen::Vector3d> positions; ///< element (u, v) at index u * side + v

    int size() const { return static_cast<int>(positions.size()); }
};

/// Uniform side x side grid centered on the origin.
ArrayGeometry element_positions(int side, double spacing_m, ArrayPlane plane = ArrayPlane::xy);

/// Unit-norm URPA response: exp(j 2 pi f / c * <s, u(d)>) / sqrt(Q).
VectorXcd steering_vector(const ArrayGeometry &geom, const Direction &d, double freq_hz);

/// Free-space LOS amplitude gain G_T G_R c / (4 pi f distance).
double path_loss(double freq_hz, double distance_m, double tx_gain = 1.0, double rx_gain = 1.0);

/// Rank-1 block alpha * a_r * a_t^H kept in factored form.
struct ChannelBlock
{
    double alpha = 0.0;
    VectorXcd rx_steering;
    VectorXcd tx_steering;

    MatrixXcd dense() const { return alpha * rx_steering * tx_steering.adjoint(); }
};

/// Passband channel H[k] of one subcarrier as an M x N grid of factored blocks.
struct SubcarrierChannel
{
    int k = 0;
    double freq_hz = 0.0;
    int users = 0;
    int subarrays = 0;
    std::vector<ChannelBlock> blocks;

    const ChannelBlock &block(int m, int n) const { return blocks.at(static_cast<size_t>(m * subarrays + n)); }

    /// Full MQ x NQ matrix. Only sensible for small arrays.
    MatrixXcd dense() const;
};

SubcarrierChannel los_channel(const SystemConfig &cfg, const UserPlacement &placement, const ArrayGeometry &geom,
                              int k);

/// One M x N (or any fixed shape) matrix per subcarrier, addressable by signed index k.
class SubcarrierMatrices
{
  public:
    SubcarrierMatrices() = default;
    SubcarrierMatrices(int half_subcarriers, Eigen::Index rows, Eigen::Index cols);

    int half_subcarriers() const { return half_; }
    int count() const { return 2 * half_; }
    Eigen::Index rows() const { return rows_; }
    Eigen::Index cols() const { return cols_; }

    MatrixXcd &at(int k) { return data_.at(static_cast<size_t>(subcarrier_slot(k, half_))); }
    const MatrixXcd &at(int k) const { return data_.at(static_cast<size_t>(subcarrier_slot(k, half_))); }

    const std::vector<MatrixXcd> &slots() const { return data_; }
    std::vector<MatrixXcd> &slots() { return data_; }

    SubcarrierMatrices scaled(double factor) const;

    /// Copy with every off-diagonal entry zeroed (inter-user interference removed).
    SubcarrierMatrices diagonal_only() const;

  private:
    int half_ = 0;
    Eigen::Index rows_ = 0;
    Eigen::Index cols_ = 0;
    std::vector<MatrixXcd> data_;
};

/// I.i.d. CN(0, 1) concatenated channel for every subcarrier, reproducible from seed.
SubcarrierMatrices rayleigh_channel(int users, int subarrays, int half_subcarriers, std::uint64_t seed);

} // namespace thziqi
