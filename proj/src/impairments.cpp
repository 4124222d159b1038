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

#include "thziqi/impairments.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace thziqi
{

IqiParams IqiParams::perfect(int tx_chains, int rx_chains)
{
    return uniform(tx_chains, rx_chains, {}, {});
}

IqiParams IqiParams::uniform(int tx_chains, int rx_chains, ChainImbalance tx_chain, ChainImbalance rx_chain)
{
    IqiParams p;
    p.tx.assign(static_cast<size_t>(tx_chains), tx_chain);
    p.rx.assign(static_cast<size_t>(rx_chains), rx_chain);
    return p;
}

bool IqiParams::is_perfect() const
{
    auto perfect = [](const ChainImbalance &c) { return c.amplitude == 1.0 && c.phase_rad == 0.0; };
    for (const auto &c : tx)
        if (!perfect(c))
            return false;
    for (const auto &c : rx)
        if (!perfect(c))
            return false;
    return true;
}

void IqiParams::validate() const
{
    auto check = [](const std::vector<ChainImbalance> &chains, const char *side) {
        for (size_t i = 0; i < chains.size(); ++i)
        {
            if (!(chains[i].amplitude > 0.0) || !std::isfinite(chains[i].amplitude))
                throw ValidationError(std::string(side) + "[" + std::to_string(i) + "].amplitude", "must be > 0");
            if (!std::isfinite(chains[i].phase_rad))
                throw ValidationError(std::string(side) + "[" + std::to_string(i) + "].phase_rad", "must be finite");
        }
    };
    check(tx, "iqi.tx");
    check(rx, "iqi.rx");
}

MismatchMatrices MismatchMatrices::identity(int tx_chains, int rx_chains)
{
    MismatchMatrices mm;
    mm.g1 = VectorXcd::Ones(tx_chains);
    mm.g2 = VectorXcd::Zero(tx_chains);
    mm.k1 = VectorXcd::Ones(rx_chains);
    mm.k2 = VectorXcd::Zero(rx_chains);
    return mm;
}

MismatchMatrices mismatch_matrices(const IqiParams &params)
{
    params.validate();
    const auto n = static_cast<Eigen::Index>(params.tx.size());
    const auto m = static_cast<Eigen::Index>(params.rx.size());
    MismatchMatrices mm;
    mm.g1.resize(n);
    mm.g2.resize(n);
    mm.k1.resize(m);
    mm.k2.resize(m);
    for (Eigen::Index i = 0; i < n; ++i)
    {
        const auto &c = params.tx[static_cast<size_t>(i)];
        mm.g1(i) = 0.5 * (1.0 + std::polar(c.amplitude, c.phase_rad));
        mm.g2(i) = 1.0 - std::conj(mm.g1(i));
    }
    for (Eigen::Index i = 0; i < m; ++i)
    {
        const auto &c = params.rx[static_cast<size_t>(i)];
        mm.k1(i) = 0.5 * (1.0 + std::polar(c.amplitude, -c.phase_rad));
        mm.k2(i) = 1.0 - std::conj(mm.k1(i));
    }
    return mm;
}

double irr_db(double amplitude, double phase_rad)
{
    if (!(amplitude > 0.0))
        throw ValidationError("amplitude", "must be > 0");
    const double desired = std::norm(1.0 + std::polar(amplitude, -phase_rad));
    const double image = std::norm(1.0 - std::polar(amplitude, phase_rad));
    if (image == 0.0)
        return std::numeric_limits<double>::infinity();
    return 10.0 * std::log10(desired / image);
}

double max_irr_db(double phase_rad)
{
    return irr_db(1.0, phase_rad);
}

double amplitude_from_irr(double irr, double phase_rad)
{
    if (std::isinf(irr) && irr > 0.0 && phase_rad == 0.0)
        return 1.0;
    const double cap = max_irr_db(phase_rad);
    if (!(irr <= cap))
        throw std::domain_error("IRR " + std::to_string(irr) + " dB is infeasible at phase error " +
                                std::to_string(rad_to_deg(phase_rad)) + " deg (max " + std::to_string(cap) + " dB)");
    if (!(irr > 0.0))
        throw std::domain_error("IRR " + std::to_string(irr) + " dB is below the reachable range");

    // IRR = r gives g^2 - 2 b g + 1 = 0 with b = cos(phi) (r + 1) / (r - 1); the root in (0, 1] is
    // 1 / (b + sqrt(b^2 - 1)). b >= 1 exactly when irr <= cap.
    const double r = std::pow(10.0, irr / 10.0);
    const double b = std::cos(phase_rad) * (r + 1.0) / (r - 1.0);
    return 1.0 / (b + std::sqrt(std::max(0.0, b * b - 1.0)));
}

double closest_feasible_amplitude(double irr, double phase_rad)
{
    if (irr >= max_irr_db(phase_rad))
        return 1.0;
    return amplitude_from_irr(irr, phase_rad);
}

MatrixXcd noise_covariance_iqi(double sigma2, const IqiParams &params)
{
    if (!(sigma2 > 0.0))
        throw ValidationError("sigma2", "noise power must be > 0");
    const auto m = static_cast<Eigen::Index>(params.rx.size());
    MatrixXcd z = MatrixXcd::Zero(m, m);
    for (Eigen::Index i = 0; i < m; ++i)
    {
        const double g = params.rx[static_cast<size_t>(i)].amplitude;
        z(i, i) = 0.5 * sigma2 * (1.0 + g * g);
    }
    return z;
}

} // namespace thziqi
