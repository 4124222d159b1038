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

// SINR, subcarrier rates and low-SNR (wideband) metrics: minimum bit energy and wideband slope.

#include "thziqi/geometry_channel.hpp"

#include <functional>

namespace thziqi
{

/// gamma_m = |h_mm|^2 P / (P sum_{n != m} |h_mn|^2 + sigma2)
double sinr_no_iqi(const MatrixXcd &hc, double power, double sigma2, int m);

/// gamma_m = |hd_mm|^2 P / (P (sum_{n != m} |hd_mn|^2 + sum_n |hi_mn|^2) + sigma2)
double sinr_iqi(const MatrixXcd &hd, const MatrixXcd &hi, double power, double sigma2, int m);

/// Treat-interference-as-noise SINR of user m with explicit precoders: the desired stream is column m of
/// H_d W_T[k], interference is the rest of that row plus row m of H_i conj(W_T[-k]).
double sinr_precoded(const MatrixXcd &hd, const MatrixXcd &hi, const MatrixXcd &wt_k, const MatrixXcd &wt_mirror,
                     double noise_var, int m);

/// log2 det(I + C^{-1} W_R^H H_d W_T[k] W_T[k]^H H_d^H W_R) with
/// C = W_R^H H_i conj(W_T[-k]) W_T[-k]^T H_i^H W_R + Zbar. Throws NumericalError if C is not positive definite.
double rate_subcarrier(const MatrixXcd &wr, const MatrixXcd &wt_k, const MatrixXcd &wt_mirror, const MatrixXcd &hd,
                       const MatrixXcd &hi, const MatrixXcd &zbar);

struct BitEnergy
{
    double linear = 0.0;
    double db = 0.0;
};

BitEnergy bit_energy_from_linear(double linear);

/// How the user-interference and image terms enter the wideband-slope denominator.
enum class SlopeConvention
{
    /// 2 |h_mm|^2 |h_mn|^2 per cross term: the second derivative of the TIN sum capacity at zero power.
    derivative,
    /// |h_mm|^2 |h_mn|^2 counted once per cross term.
    single_cross
};

/// Per-user noise variances for the low-SNR metrics; empty means unit noise for every user.
using NoiseVariances = VectorXd;

/// N 2K ln2 / sum_k sum_m |h_mm[k]|^2 / sigma_m^2, with N = hc.cols().
BitEnergy ebn0_min(const SubcarrierMatrices &hc, const NoiseVariances &noise = {});

/// ebn0_min evaluated on the desired (IQI-mixed) channel.
BitEnergy ebn0_min_iqi(const SubcarrierMatrices &hd, const NoiseVariances &noise = {});

double wideband_slope(const SubcarrierMatrices &hc, SlopeConvention convention = SlopeConvention::derivative,
                      const NoiseVariances &noise = {});

/// Slope with the image-interference penalty zeta_m added to the denominator.
double wideband_slope_iqi(const SubcarrierMatrices &hd, const SubcarrierMatrices &hi,
                          SlopeConvention convention = SlopeConvention::derivative, const NoiseVariances &noise = {});

/// Per-(k, m) image-interference penalty zeta_m[k] under the given convention, indexed [slot][m].
std::vector<std::vector<double>> zeta_terms(const SubcarrierMatrices &hd, const SubcarrierMatrices &hi,
                                            SlopeConvention convention = SlopeConvention::derivative);

/// Low-SNR spectral efficiency S0 (EbN0_dB - EbN0min_dB) / 3, clamped at zero.
double se_approx(double ebn0_db, double ebn0_min_db, double slope);

struct SlopeEstimate
{
    BitEnergy ebn0_min;
    double slope = 0.0;
    double first_derivative = 0.0;  ///< dC/dP at 0, nats
    double second_derivative = 0.0; ///< d2C/dP2 at 0, nats
};

/// Minimum bit energy and wideband slope from finite-difference derivatives of the aggregate
/// capacity C(P) in nats, P being the per-stream power on every subcarrier. `power_units` is the
/// total-power multiplier (N 2K). Richardson-extrapolated central differences; throws NumericalError if the
/// extrapolation does not settle to 1e-4 relative change.
SlopeEstimate numeric_slope_oracle(const std::function<double(double)> &capacity_nats, double power_units);

/// C(P) = sum_k sum_m ln(1 + sinr_iqi(H_d[k], H_i[k], P, sigma_m^2, m)).
std::function<double(double)> tin_capacity(const SubcarrierMatrices &hd, const SubcarrierMatrices &hi,
                                           const NoiseVariances &noise = {});

} // namespace thziqi
