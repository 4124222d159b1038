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

// I/Q imbalance mismatch matrices, image rejection ratio and IQI-modified noise covariance.

#include "thziqi/common.hpp"

#include <vector>

namespace thziqi
{

/// Amplitude and phase error of one up- or down-conversion chain. Perfect response is (1, 0).
struct ChainImbalance
{
    double amplitude = 1.0;
    double phase_rad = 0.0;
};

struct IqiParams
{
    std::vector<ChainImbalance> tx; ///< one per transmit subarray
    std::vector<ChainImbalance> rx; ///< one per user

    static IqiParams perfect(int tx_chains, int rx_chains);
    static IqiParams uniform(int tx_chains, int rx_chains, ChainImbalance tx_chain, ChainImbalance rx_chain);

    bool is_perfect() const;
    void validate() const;
};

/// Diagonals of G1, G2 (transmitter) and K1, K2 (receiver).
struct MismatchMatrices
{
    VectorXcd g1, g2, k1, k2;

    MatrixXcd G1() const { return g1.asDiagonal(); }
    MatrixXcd G2() const { return g2.asDiagonal(); }
    MatrixXcd K1() const { return k1.asDiagonal(); }
    MatrixXcd K2() const { return k2.asDiagonal(); }

    static MismatchMatrices identity(int tx_chains, int rx_chains);
};

/// G1 = (I + G_T e^{j Phi_T}) / 2, G2 = I - conj(G1), K1 = (I + G_R e^{-j Phi_R}) / 2, K2 = I - conj(K1).
MismatchMatrices mismatch_matrices(const IqiParams &params);

/// Desired-to-image power ratio of one chain in dB; +infinity for a perfect chain.
double irr_db(double amplitude, double phase_rad);

/// Highest IRR reachable at a given phase error (attained at amplitude 1).
double max_irr_db(double phase_rad);

/// Amplitude g <= 1 with irr_db(g, phase) == irr. Throws std::domain_error when the pair is infeasible.
double amplitude_from_irr(double irr, double phase_rad);

/// amplitude_from_irr clamped to the feasible set: returns 1 when irr exceeds max_irr_db(phase).
double closest_feasible_amplitude(double irr, double phase_rad);

/// (sigma2 / 2) (I + G_R G_R^H); diagonal, M x M.
MatrixXcd noise_covariance_iqi(double sigma2, const IqiParams &params);

} // namespace thziqi
