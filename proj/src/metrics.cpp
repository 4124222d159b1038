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

#include "thziqi/metrics.hpp"

#include <Eigen/Cholesky>

#include <algorithm>
#include <cmath>
#include <limits>
#include <tuple>

namespace thziqi
{

namespace
{

void check_user(const MatrixXcd &h, int m)
{
    if (m < 0 || m >= h.rows() || m >= h.cols())
        throw ValidationError("m", "user index has no paired stream");
}

double row_power_except(const MatrixXcd &h, int m, Eigen::Index skip)
{
    double s = 0.0;
    for (Eigen::Index n = 0; n < h.cols(); ++n)
        if (n != skip)
            s += std::norm(h(m, n));
    return s;
}

double noise_of(const NoiseVariances &noise, int m)
{
    if (noise.size() == 0)
        return 1.0;
    if (m >= noise.size() || !(noise(m) > 0.0))
        throw ValidationError("noise", "need a positive noise variance per user");
    return noise(m);
}

double log2_det_hpd(const MatrixXcd &a)
{
    Eigen::LLT<MatrixXcd> llt(a);
    if (llt.info() != Eigen::Success)
        throw NumericalError("covariance is not positive definite");
    double s = 0.0;
    for (Eigen::Index i = 0; i < a.rows(); ++i)
        s += std::log2(llt.matrixL()(i, i).real());
    return 2.0 * s;
}

// Sufficient statistics of one (k, m) term: desired gain a, in-band interference b, image interference c.
struct TermGains
{
    double a, b, c, noise;
};

template <typename Fn>
void for_each_term(const SubcarrierMatrices &hd, const SubcarrierMatrices *hi, const NoiseVariances &noise, Fn &&fn)
{
    const auto users = static_cast<int>(std::min(hd.rows(), hd.cols()));
    for (size_t slot = 0; slot < hd.slots().size(); ++slot)
    {
        const MatrixXcd &h = hd.slots()[slot];
        for (int m = 0; m < users; ++m)
        {
            TermGains t{std::norm(h(m, m)), row_power_except(h, m, m), 0.0, noise_of(noise, m)};
            if (hi != nullptr)
                t.c = row_power_except(hi->slots()[slot], m, -1);
            fn(slot, m, t);
        }
    }
}

BitEnergy ebn0_min_impl(const SubcarrierMatrices &h, const NoiseVariances &noise)
{
    CompensatedSum gain;
    for_each_term(h, nullptr, noise, [&](size_t, int, const TermGains &t) { gain.add(t.a / t.noise); });
    if (!(gain.value() > 0.0))
        throw NumericalError("minimum bit energy undefined: every paired channel gain is zero");
    const double n = static_cast<double>(h.cols());
    return bit_energy_from_linear(n * h.count() * std::log(2.0) / gain.value());
}

double slope_impl(const SubcarrierMatrices &hd, const SubcarrierMatrices *hi, SlopeConvention convention,
                  const NoiseVariances &noise)
{
    const double w = convention == SlopeConvention::derivative ? 2.0 : 1.0;
    CompensatedSum num, den;
    for_each_term(hd, hi, noise, [&](size_t, int, const TermGains &t) {
        const double a = t.a / t.noise;
        num.add(a);
        den.add(a * a + w * a * (t.b + t.c) / t.noise);
    });
    if (!(den.value() > 0.0))
        throw NumericalError("wideband slope undefined: zero denominator");
    return 2.0 * num.value() * num.value() / den.value();
}

} // namespace

double sinr_no_iqi(const MatrixXcd &hc, double power, double sigma2, int m)
{
    check_user(hc, m);
    return std::norm(hc(m, m)) * power / (power * row_power_except(hc, m, m) + sigma2);
}

double sinr_iqi(const MatrixXcd &hd, const MatrixXcd &hi, double power, double sigma2, int m)
{
    check_user(hd, m);
    const double interference = row_power_except(hd, m, m) + row_power_except(hi, m, -1);
    return std::norm(hd(m, m)) * power / (power * interference + sigma2);
}

double sinr_precoded(const MatrixXcd &hd, const MatrixXcd &hi, const MatrixXcd &wt_k, const MatrixXcd &wt_mirror,
                     double noise_var, int m)
{
    check_user(hd, m);
    const Eigen::RowVectorXcd direct = hd.row(m) * wt_k;
    const Eigen::RowVectorXcd image = hi.row(m) * wt_mirror.conjugate();
    double interference = image.squaredNorm();
    for (Eigen::Index n = 0; n < direct.size(); ++n)
        if (n != m)
            interference += std::norm(direct(n));
    return std::norm(direct(m)) / (interference + noise_var);
}

double rate_subcarrier(const MatrixXcd &wr, const MatrixXcd &wt_k, const MatrixXcd &wt_mirror, const MatrixXcd &hd,
                       const MatrixXcd &hi, const MatrixXcd &zbar)
{
    const MatrixXcd signal_path = wr.adjoint() * hd * wt_k;
    const MatrixXcd image_path = wr.adjoint() * hi * wt_mirror.conjugate();
    MatrixXcd c = image_path * image_path.adjoint() + zbar;
    c = 0.5 * (c + c.adjoint()).eval();
    MatrixXcd total = c + signal_path * signal_path.adjoint();
    total = 0.5 * (total + total.adjoint()).eval();
    // det(I + C^{-1} S) = det(C + S) / det(C)
    return std::max(0.0, log2_det_hpd(total) - log2_det_hpd(c));
}

BitEnergy bit_energy_from_linear(double linear)
{
    return {linear, 10.0 * std::log10(linear)};
}

BitEnergy ebn0_min(const SubcarrierMatrices &hc, const NoiseVariances &noise) { return ebn0_min_impl(hc, noise); }

BitEnergy ebn0_min_iqi(const SubcarrierMatrices &hd, const NoiseVariances &noise) { return ebn0_min_impl(hd, noise); }

double wideband_slope(const SubcarrierMatrices &hc, SlopeConvention convention, const NoiseVariances &noise)
{
    return slope_impl(hc, nullptr, convention, noise);
}

double wideband_slope_iqi(const SubcarrierMatrices &hd, const SubcarrierMatrices &hi, SlopeConvention convention,
                          const NoiseVariances &noise)
{
    return slope_impl(hd, &hi, convention, noise);
}

std::vector<std::vector<double>> zeta_terms(const SubcarrierMatrices &hd, const SubcarrierMatrices &hi,
                                            SlopeConvention convention)
{
    const double w = convention == SlopeConvention::derivative ? 2.0 : 1.0;
    std::vector<std::vector<double>> zeta(hd.slots().size());
    for_each_term(hd, &hi, {}, [&](size_t slot, int, const TermGains &t) {
        zeta[slot].push_back(w * t.a * (t.b + t.c));
    });
    return zeta;
}

double se_approx(double ebn0_db, double ebn0_min_db, double slope)
{
    return std::max(0.0, slope * (ebn0_db - ebn0_min_db) / 3.0);
}

SlopeEstimate numeric_slope_oracle(const std::function<double(double)> &capacity_nats, double power_units)
{
    const double c0 = capacity_nats(0.0);
    auto central = [&](double h) {
        const double up = capacity_nats(h);
        const double down = capacity_nats(-h);
        return std::pair{(up - down) / (2.0 * h), (up - 2.0 * c0 + down) / (h * h)};
    };
    // Curvature small against the linear part, and both sides finite.
    auto well_scaled = [&](double h, double ratio) {
        const double up = capacity_nats(h);
        const double down = capacity_nats(-h);
        if (!std::isfinite(up) || !std::isfinite(down) || up <= down)
            return false;
        return std::abs(up + down - 2.0 * c0) <= ratio * (up - down);
    };

    // The first step must sit well inside the disc where C is analytic: every Richardson row feeds the
    // diagonal, so one step past a pole at negative power spoils the whole tableau.
    double h = 1.0;
    for (int i = 0; i < 400 && !well_scaled(h, 0.01); ++i)
        h /= 4.0;
    if (!well_scaled(h, 0.01))
        throw NumericalError("slope oracle: no usable step size (capacity flat or undefined near zero power)");

    constexpr int rows = 14;
    double t1[rows][rows];
    double t2[rows][rows];
    double best1 = 0.0, best2 = 0.0;
    double best_change = std::numeric_limits<double>::infinity();
    for (int i = 0; i < rows; ++i, h /= 2.0)
    {
        std::tie(t1[i][0], t2[i][0]) = central(h);
        double f = 1.0;
        for (int j = 1; j <= i; ++j)
        {
            f *= 4.0;
            t1[i][j] = t1[i][j - 1] + (t1[i][j - 1] - t1[i - 1][j - 1]) / (f - 1.0);
            t2[i][j] = t2[i][j - 1] + (t2[i][j - 1] - t2[i - 1][j - 1]) / (f - 1.0);
        }
        if (i == 0)
            continue;
        const double change1 = std::abs(t1[i][i] - t1[i - 1][i - 1]) / std::abs(t1[i][i]);
        const double change2 = std::abs(t2[i][i] - t2[i - 1][i - 1]) / std::abs(t2[i][i]);
        const double change = std::max(change1, change2);
        if (change < best_change)
        {
            best_change = change;
            best1 = t1[i][i];
            best2 = t2[i][i];
        }
        if (change < 1e-12)
            break;
    }
    if (!(best_change <= 1e-4))
        throw NumericalError("slope oracle: Richardson extrapolation did not converge");
    if (!(best1 > 0.0) || !(best2 < 0.0))
        throw NumericalError("slope oracle: capacity derivatives have unexpected sign");

    SlopeEstimate out;
    out.first_derivative = best1;
    out.second_derivative = best2;
    out.ebn0_min = bit_energy_from_linear(power_units * std::log(2.0) / best1);
    out.slope = 2.0 * best1 * best1 / -best2;
    return out;
}

std::function<double(double)> tin_capacity(const SubcarrierMatrices &hd, const SubcarrierMatrices &hi,
                                           const NoiseVariances &noise)
{
    return [hd, hi, noise](double power) {
        const auto users = static_cast<int>(std::min(hd.rows(), hd.cols()));
        CompensatedSum total;
        for (size_t s = 0; s < hd.slots().size(); ++s)
            for (int m = 0; m < users; ++m)
                total.add(std::log1p(sinr_iqi(hd.slots()[s], hi.slots()[s], power, noise_of(noise, m), m)));
        return total.value();
    };
}

} // namespace thziqi
