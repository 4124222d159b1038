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

#include "thziqi/experiments.hpp"

#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

namespace py = pybind11;
using namespace thziqi;

namespace
{

// Python side passes per-subcarrier matrices as a list ordered k = -K..-1, 1..K.
SubcarrierMatrices from_list(const std::vector<MatrixXcd> &mats)
{
    if (mats.empty() || mats.size() % 2 != 0)
        throw ValidationError("channels", "need an even, non-zero number of subcarrier matrices");
    const auto half = static_cast<int>(mats.size() / 2);
    SubcarrierMatrices out(half, mats.front().rows(), mats.front().cols());
    for (size_t i = 0; i < mats.size(); ++i)
    {
        if (mats[i].rows() != out.rows() || mats[i].cols() != out.cols())
            throw ValidationError("channels", "all subcarrier matrices must share one shape");
        out.slots()[i] = mats[i];
    }
    return out;
}

SlopeConvention convention_of(const std::string &s)
{
    if (s == "derivative")
        return SlopeConvention::derivative;
    if (s == "single_cross")
        return SlopeConvention::single_cross;
    throw ValidationError("convention", "expected \"derivative\" or \"single_cross\"");
}

std::vector<ChainImbalance> chains(const std::vector<std::pair<double, double>> &v)
{
    std::vector<ChainImbalance> out;
    for (const auto &[g, phi] : v)
        out.push_back({g, phi});
    return out;
}

Scenario scenario_of(const std::string &json_text)
{
    nlohmann::json j;
    try
    {
        j = json_text.empty() ? nlohmann::json::object() : nlohmann::json::parse(json_text);
    }
    catch (const nlohmann::json::parse_error &e)
    {
        throw ValidationError("scenario", e.what());
    }
    return scenario_from_json(j);
}

py::dict table_dict(const ResultTable &t)
{
    py::dict d;
    d["study"] = t.study;
    d["band"] = to_string(t.band);
    d["columns"] = t.columns;
    d["rows"] = t.rows;
    d["seed"] = t.seed;
    d["scenario"] = t.scenario_echo;
    d["csv"] = to_csv(t);
    return d;
}

} // namespace

PYBIND11_MODULE(_core, m)
{
    m.doc() = "Link-level I/Q imbalance studies for THz MU-MIMO-OFDM";
    m.attr("__version__") = code_version;

    py::register_exception<ValidationError>(m, "ValidationError", PyExc_ValueError);
    py::register_exception<NumericalError>(m, "NumericalError", PyExc_ArithmeticError);
    py::register_exception<IoError>(m, "IoError", PyExc_OSError);

    m.def("path_loss", &path_loss, py::arg("freq_hz"), py::arg("distance_m"), py::arg("tx_gain") = 1.0,
          py::arg("rx_gain") = 1.0);
    m.def(
        "steering_vector",
        [](int side, double spacing_m, double azimuth, double elevation, double freq_hz, const std::string &plane) {
            const ArrayPlane p = plane == "yz" ? ArrayPlane::yz : ArrayPlane::xy;
            return steering_vector(element_positions(side, spacing_m, p), {azimuth, elevation}, freq_hz);
        },
        py::arg("side"), py::arg("spacing_m"), py::arg("azimuth"), py::arg("elevation"), py::arg("freq_hz"),
        py::arg("plane") = "xy");

    m.def("irr_db", &irr_db, py::arg("amplitude"), py::arg("phase_rad"));
    m.def("max_irr_db", &max_irr_db, py::arg("phase_rad"));
    m.def("amplitude_from_irr", &amplitude_from_irr, py::arg("irr_db"), py::arg("phase_rad"));
    m.def("closest_feasible_amplitude", &closest_feasible_amplitude, py::arg("irr_db"), py::arg("phase_rad"));
    m.def(
        "mismatch_matrices",
        [](const std::vector<std::pair<double, double>> &tx, const std::vector<std::pair<double, double>> &rx) {
            IqiParams p{chains(tx), chains(rx)};
            p.validate();
            const MismatchMatrices mm = mismatch_matrices(p);
            return py::dict(py::arg("G1") = mm.G1(), py::arg("G2") = mm.G2(), py::arg("K1") = mm.K1(),
                            py::arg("K2") = mm.K2());
        },
        py::arg("tx"), py::arg("rx"), "Chains are (amplitude, phase_rad) pairs.");
    m.def(
        "effective_channels",
        [](const std::vector<MatrixXcd> &hc, const std::vector<std::pair<double, double>> &tx,
           const std::vector<std::pair<double, double>> &rx) {
            IqiParams p{chains(tx), chains(rx)};
            p.validate();
            const EffectiveChannels ch = build_effective_channels(from_list(hc), mismatch_matrices(p));
            return std::pair{ch.desired.slots(), ch.image.slots()};
        },
        py::arg("hc"), py::arg("tx"), py::arg("rx"));

    m.def(
        "ebn0_min",
        [](const std::vector<MatrixXcd> &hd) {
            const BitEnergy e = ebn0_min_iqi(from_list(hd));
            return std::pair{e.linear, e.db};
        },
        py::arg("hd"), "(linear, dB) minimum bit energy of per-subcarrier channels.");
    m.def(
        "wideband_slope",
        [](const std::vector<MatrixXcd> &hd, const std::optional<std::vector<MatrixXcd>> &hi,
           const std::string &convention) {
            const SubcarrierMatrices d = from_list(hd);
            if (!hi)
                return wideband_slope(d, convention_of(convention));
            return wideband_slope_iqi(d, from_list(*hi), convention_of(convention));
        },
        py::arg("hd"), py::arg("hi") = py::none(), py::arg("convention") = "derivative");
    m.def("sinr_iqi", &sinr_iqi, py::arg("hd"), py::arg("hi"), py::arg("power"), py::arg("sigma2"), py::arg("m"));

    m.def(
        "default_scenario", [] { return scenario_to_json(Scenario{}).dump(2); },
        "Default scenario as JSON text.");
    m.def(
        "run_study",
        [](const std::string &study, const std::string &scenario_json) {
            const Scenario s = scenario_of(scenario_json);
            const Study st = study_from_string(study);
            ResultTable t;
            {
                py::gil_scoped_release release;
                t = run_study(st, s);
            }
            return table_dict(t);
        },
        py::arg("study"), py::arg("scenario_json") = "",
        "Run slope-sweep, se-curve, rate-vs-snr or nulling; returns columns, rows and the CSV text.");
    m.def(
        "write_study",
        [](const std::string &study, const std::string &scenario_json, const std::filesystem::path &out_dir,
           bool deterministic_names) {
            const Scenario s = scenario_of(scenario_json);
            const Study st = study_from_string(study);
            py::gil_scoped_release release;
            return run(st, s, out_dir, deterministic_names);
        },
        py::arg("study"), py::arg("scenario_json"), py::arg("out_dir"), py::arg("deterministic_names") = false);
    m.def(
        "oracle_check",
        [](int instances, std::uint64_t seed) {
            const OracleReport r = oracle_agreement(instances, seed);
            return py::dict(py::arg("instances") = r.instances, py::arg("ebn0_min") = r.max_rel_error_ebn0,
                            py::arg("slope") = r.max_rel_error_slope);
        },
        py::arg("instances") = 100, py::arg("seed") = 1);
}
