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

#include "thziqi/beamforming.hpp"

#include <algorithm>
#include <cmath>

namespace thziqi
{

Pairing identity_pairing(int users)
{
    Pairing p(static_cast<size_t>(users));
    for (int m = 0; m < users; ++m)
        p[static_cast<size_t>(m)] = m;
    return p;
}

namespace
{

void check_pairing(const Pairing &pairing, int users, int subarrays)
{
    if (static_cast<int>(pairing.size()) != users)
        throw ValidationError("pairing", "needs exactly one subarray per user");
    std::vector<bool> used(static_cast<size_t>(subarrays), false);
    for (int n : pairing)
    {
        if (n < 0 || n >= subarrays)
            throw ValidationError("pairing", "subarray index out of range");
        if (used[static_cast<size_t>(n)])
            throw ValidationError("pairing", "subarray paired with more than one user");
        used[static_cast<size_t>(n)] = true;
    }
}

MatrixXcd block_diagonal(const std::vector<VectorXcd> &columns)
{
    if (columns.empty())
        return {};
    const Eigen::Index q = columns.front().size();
    const auto cols = static_cast<Eigen::Index>(columns.size());
    MatrixXcd f = MatrixXcd::Zero(cols * q, cols);
    for (Eigen::Index c = 0; c < cols; ++c)
        f.block(c * q, c, q, 1) = columns[static_cast<size_t>(c)];
    return f;
}

} // namespace

MatrixXcd AnalogBeamformers::tx_dense() const { return block_diagonal(tx_columns); }
MatrixXcd AnalogBeamformers::rx_dense() const { return block_diagonal(rx_columns); }

AnalogBeamformers analog_beamformers(const UserPlacement &placement, const ArrayGeometry &geom, double f_design_hz,
                                     const Pairing &pairing)
{
    check_pairing(pairing, placement.users, placement.subarrays);

    AnalogBeamformers bf;
    bf.design_hz = f_design_hz;
    const VectorXcd broadside =
        VectorXcd::Constant(geom.size(), cd(1.0 / std::sqrt(static_cast<double>(geom.size())), 0.0));
    bf.tx_columns.assign(static_cast<size_t>(placement.subarrays), broadside);
    bf.rx_columns.resize(static_cast<size_t>(placement.users));
    for (int m = 0; m < placement.users; ++m)
    {
        const int n = pairing[static_cast<size_t>(m)];
        const LinkGeometry &link = placement.link(m, n);
        // Channel blocks carry a_t^H, so the matched transmit column is a_t itself.
        bf.tx_columns[static_cast<size_t>(n)] = steering_vector(geom, link.departure, f_design_hz);
        bf.rx_columns[static_cast<size_t>(m)] = steering_vector(geom, link.arrival, f_design_hz);
    }
    return bf;
}

MatrixXcd concatenate(const SubcarrierChannel &h, const AnalogBeamformers &bf)
{
    if (static_cast<int>(bf.rx_columns.size()) != h.users || static_cast<int>(bf.tx_columns.size()) != h.subarrays)
        throw ValidationError("beamformers", "dimension mismatch with channel");
    MatrixXcd hc(h.users, h.subarrays);
    for (int m = 0; m < h.users; ++m)
        for (int n = 0; n < h.subarrays; ++n)
        {
            const ChannelBlock &b = h.block(m, n);
            if (b.rx_steering.size() != bf.rx_columns[static_cast<size_t>(m)].size() ||
                b.tx_steering.size() != bf.tx_columns[static_cast<size_t>(n)].size())
                throw ValidationError("beamformers", "subarray size mismatch with channel");
            const cd rx_gain = bf.rx_columns[static_cast<size_t>(m)].dot(b.rx_steering); // f_r^H a_r
            const cd tx_gain = b.tx_steering.dot(bf.tx_columns[static_cast<size_t>(n)]); // a_t^H f_t
            hc(m, n) = b.alpha * rx_gain * tx_gain;
        }
    return hc;
}

MatrixXcd concatenate_dense(const MatrixXcd &h, const MatrixXcd &rx_analog, const MatrixXcd &tx_analog)
{
    if (rx_analog.rows() != h.rows() || tx_analog.rows() != h.cols())
        throw ValidationError("beamformers", "dimension mismatch with channel");
    return rx_analog.adjoint() * h * tx_analog;
}

double DigitalBeamformers::total_tx_power() const
{
    CompensatedSum total;
    for (const auto &w : tx.slots())
        total.add(w.squaredNorm());
    return total.value();
}

std::vector<int> image_nulled_subcarriers(int half_subcarriers)
{
    std::vector<int> ks;
    for (int k = 1; k <= half_subcarriers; ++k)
        ks.push_back(k);
    return ks;
}

DigitalBeamformers digital_beamformers(const SystemConfig &cfg, const std::vector<int> &active, PowerPolicy policy)
{
    const int half = cfg.half_subcarriers;
    std::vector<int> on = active.empty() ? subcarrier_indices(half) : active;
    double per_stream = cfg.power_w;
    if (policy == PowerPolicy::pooled)
        per_stream *= static_cast<double>(2 * half) / static_cast<double>(on.size());

    DigitalBeamformers w{SubcarrierMatrices(half, cfg.tx_subarrays, cfg.tx_subarrays),
                         SubcarrierMatrices(half, cfg.users, cfg.users)};
    for (auto &wr : w.rx.slots())
        wr.setIdentity();
    const double amp = std::sqrt(per_stream);
    for (int k : on)
        w.tx.at(k) = amp * MatrixXcd::Identity(cfg.tx_subarrays, cfg.tx_subarrays);
    return w;
}

std::pair<MatrixXcd, MatrixXcd> effective_channels(const MatrixXcd &hc_k, const MatrixXcd &hc_mirror,
                                                   const MismatchMatrices &mm)
{
    if (hc_k.rows() != hc_mirror.rows() || hc_k.cols() != hc_mirror.cols() || hc_k.rows() != mm.k1.size() ||
        hc_k.cols() != mm.g1.size())
        throw ValidationError("effective_channels", "dimension mismatch");
    const MatrixXcd image = hc_mirror.conjugate();
    MatrixXcd desired = mm.k1.asDiagonal() * hc_k * mm.g1.asDiagonal();
    desired += mm.k2.asDiagonal() * image * mm.g2.asDiagonal();
    MatrixXcd interference = mm.k1.asDiagonal() * hc_k * mm.g2.conjugate().asDiagonal();
    interference += mm.k2.asDiagonal() * image * mm.g1.conjugate().asDiagonal();
    return {std::move(desired), std::move(interference)};
}

EffectiveChannels build_effective_channels(const SubcarrierMatrices &hc, const MismatchMatrices &mm)
{
    EffectiveChannels out{hc, SubcarrierMatrices(hc.half_subcarriers(), hc.rows(), hc.cols()),
                          SubcarrierMatrices(hc.half_subcarriers(), hc.rows(), hc.cols())};
    for (int k : subcarrier_indices(hc.half_subcarriers()))
    {
        auto [d, i] = effective_channels(hc.at(k), hc.at(-k), mm);
        out.desired.at(k) = std::move(d);
        out.image.at(k) = std::move(i);
    }
    return out;
}

} // namespace thziqi
