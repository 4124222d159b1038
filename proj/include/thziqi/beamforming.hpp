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

// Hybrid beamforming: analog steering, concatenation into the effective channel,
// digital precoders and the IQI-mixed desired/image channels.

#include "thziqi/geometry_channel.hpp"
#include "thziqi/impairments.hpp"

#include <utility>
#include <vector>

namespace thziqi
{

/// pairing[m] is the transmit subarray serving user m.
using Pairing = std::vector<int>;

Pairing identity_pairing(int users);

/// Analog beamformers, one unit-norm phase-shifter column per subarray.
///
/// F_T and F_R are block diagonal: column n of F_T is nonzero only on subarray n's elements.
struct AnalogBeamformers
{
    std::vector<VectorXcd> tx_columns; ///< N columns of length Q
    std::vector<VectorXcd> rx_columns; ///< M columns of length Q
    double design_hz = 0.0;

    MatrixXcd tx_dense() const; ///< NQ x N
    MatrixXcd rx_dense() const; ///< MQ x M
};

/// Matched steering toward the paired link direction at f_design. Subarrays left without a user
/// keep uniform (broadside) weights.
AnalogBeamformers analog_beamformers(const UserPlacement &placement, const ArrayGeometry &geom, double f_design_hz,
                                     const Pairing &pairing);

/// H_c[k] = F_R^H H[k] F_T evaluated through the rank-1 factors.
MatrixXcd concatenate(const SubcarrierChannel &h, const AnalogBeamformers &bf);

/// Same product evaluated on explicit matrices.
MatrixXcd concatenate_dense(const MatrixXcd &h, const MatrixXcd &rx_analog, const MatrixXcd &tx_analog);

enum class PowerPolicy
{
    fixed_per_subcarrier, ///< every active subcarrier carries P per stream
    pooled                ///< power of inactive subcarriers is spread over the active ones
};

struct DigitalBeamformers
{
    SubcarrierMatrices tx; ///< W_T[k], N x N
    SubcarrierMatrices rx; ///< W_R[k], M x M

    /// Sum over k of ||W_T[k]||_F^2.
    double total_tx_power() const;
};

/// W_T[k] = sqrt(P') I on active subcarriers and 0 elsewhere, W_R[k] = I. `active` lists the transmitting
/// subcarriers (empty means all). Under the pooled policy P' = P * 2K / |active|.
DigitalBeamformers digital_beamformers(const SystemConfig &cfg, const std::vector<int> &active = {},
                                       PowerPolicy policy = PowerPolicy::pooled);

/// Subcarriers k > 0: the image-nulled transmission set.
std::vector<int> image_nulled_subcarriers(int half_subcarriers);

/// Desired and image-interference channels of subcarrier k:
/// H_d = K1 H_c[k] G1 + K2 conj(H_c[-k]) G2, H_i = K1 H_c[k] conj(G2) + K2 conj(H_c[-k]) conj(G1).
std::pair<MatrixXcd, MatrixXcd> effective_channels(const MatrixXcd &hc_k, const MatrixXcd &hc_mirror,
                                                   const MismatchMatrices &mm);

struct EffectiveChannels
{
    SubcarrierMatrices concatenated; ///< H_c
    SubcarrierMatrices desired;      ///< H_d
    SubcarrierMatrices image;        ///< H_i
};

EffectiveChannels build_effective_channels(const SubcarrierMatrices &hc, const MismatchMatrices &mm);

} // namespace thziqi
