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

#include <Eigen/Dense>

#include <cmath>
#include <complex>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

namespace thziqi
{

using cd = std::complex<double>;
using Eigen::MatrixXcd;
using Eigen::VectorXcd;
using Eigen::VectorXd;

inline constexpr double speed_of_light = 299792458.0; // m/s
inline constexpr double pi = 3.14159265358979323846;

inline constexpr double deg_to_rad(double deg) { return deg * pi / 180.0; }
inline constexpr double rad_to_deg(double rad) { return rad * 180.0 / pi; }

/// A parameter failed validation. `key()` names the offending configuration key
/// (dotted path, e.g. "iqi.g") or the function argument.
class ValidationError : public std::invalid_argument
{
  public:
    ValidationError(std::string key, const std::string &message)
        : std::invalid_argument(key + ": " + message), key_(std::move(key)), message_(message)
    {
    }
    const std::string &key() const noexcept { return key_; }
    const std::string &message() const noexcept { return message_; }

  private:
    std::string key_;
    std::string message_;
};

/// Numerical failure (non-positive-definite covariance, undefined metric, non-converged oracle).
class NumericalError : public std::runtime_error
{
  public:
    using std::runtime_error::runtime_error;
};

/// File system failure while writing results.
class IoError : public std::runtime_error
{
  public:
    using std::runtime_error::runtime_error;
};

/// Independent RNG stream for (master seed, stream index). Streams never overlap in practice
/// because both words feed the seed sequence.
inline std::mt19937_64 make_stream(std::uint64_t master_seed, std::uint64_t stream)
{
    std::seed_seq seq{static_cast<std::uint32_t>(master_seed), static_cast<std::uint32_t>(master_seed >> 32),
                      static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32)};
    return std::mt19937_64(seq);
}

/// Neumaier compensated sum.
class CompensatedSum
{
  public:
    void add(double x)
    {
        const double t = sum_ + x;
        if (std::abs(sum_) >= std::abs(x))
            comp_ += (sum_ - t) + x;
        else
            comp_ += (x - t) + sum_;
        sum_ = t;
    }
    double value() const { return sum_ + comp_; }

  private:
    double sum_ = 0.0;
    double comp_ = 0.0;
};

} // namespace thziqi
