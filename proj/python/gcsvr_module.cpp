// Python bindings for the main GCSVR operations: graph construction, the
// forecasting pipeline, the metric suite, the MCB test and conformal
// quantiles. Heavy objects stay opaque; arrays cross as numpy buffers.

#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <memory>
#include <stdexcept>

#include "gcsvr/conformal.hpp"
#include "gcsvr/forecaster.hpp"
#include "gcsvr/geo_graph.hpp"
#include "gcsvr/metrics.hpp"
#include "gcsvr/synthetic.hpp"

namespace py = pybind11;
using namespace gcsvr;

namespace {

Matrix matrix_from_array(const py::array_t<double, py::array::c_style | py::array::forcecast>& a) {
    if (a.ndim() != 2) throw std::invalid_argument("expected a 2-D array");
    Matrix m(static_cast<std::size_t>(a.shape(0)), static_cast<std::size_t>(a.shape(1)));
    std::copy(a.data(), a.data() + a.size(), m.values().begin());
    return m;
}

py::array_t<double> array_from_matrix(const Matrix& m) {
    py::array_t<double> out({m.rows(), m.cols()});
    std::copy(m.values().begin(), m.values().end(), out.mutable_data());
    return out;
}

std::vector<double> vector_from_array(
    const py::array_t<double, py::array::c_style | py::array::forcecast>& a) {
    if (a.ndim() != 1) throw std::invalid_argument("expected a 1-D array");
    return {a.data(), a.data() + a.size()};
}

std::vector<Station> stations_from_lists(const std::vector<std::string>& ids,
                                         const std::vector<double>& lats,
                                         const std::vector<double>& lons) {
    if (ids.size() != lats.size() || ids.size() != lons.size()) {
        throw std::invalid_argument("ids, lats and lons must have equal length");
    }
    std::vector<Station> out;
    for (std::size_t i = 0; i < ids.size(); ++i) out.push_back({ids[i], ids[i], lats[i], lons[i]});
    return out;
}

PanelSeries panel_from_array(const Matrix& values, std::vector<std::string> ids) {
    return PanelSeries(0, std::move(ids), values,
                       std::vector<std::uint8_t>(values.size(), 0));
}

struct PyModel {
    GcsvrModel model;
    std::vector<std::string> station_ids;
};

}  // namespace

PYBIND11_MODULE(_gcsvr, m) {
    m.doc() = "Graph-convolutional SVR forecasting toolkit (native core)";

    m.def(
        "haversine_km",
        [](double lat1, double lon1, double lat2, double lon2) {
            return haversine_km({"a", "a", lat1, lon1}, {"b", "b", lat2, lon2});
        },
        py::arg("lat1"), py::arg("lon1"), py::arg("lat2"), py::arg("lon2"),
        "Great-circle distance in km between two coordinates");

    py::class_<StationNetwork>(m, "StationNetwork")
        .def_property_readonly("adjacency",
                               [](const StationNetwork& n) { return array_from_matrix(n.adjacency()); })
        .def_property_readonly("laplacian",
                               [](const StationNetwork& n) { return array_from_matrix(n.laplacian()); })
        .def_property_readonly("degree", [](const StationNetwork& n) { return n.degree(); })
        .def_property_readonly("zeta_max", &StationNetwork::zeta_max)
        .def_property_readonly("sigma_tilde_sq", &StationNetwork::sigma_tilde_sq)
        .def_property_readonly("eps_sparsity", &StationNetwork::eps_sparsity)
        .def_property_readonly("station_ids", [](const StationNetwork& n) {
            std::vector<std::string> ids;
            for (const auto& s : n.stations()) ids.push_back(s.id);
            return ids;
        })
        .def("neighbors", [](const StationNetwork& n, std::size_t i) { return n.neighbors(i); });

    m.def(
        "build_network",
        [](const std::vector<std::string>& ids, const std::vector<double>& lats,
           const std::vector<double>& lons, double sigma_tilde_sq, double eps_sparsity) {
            auto stations = stations_from_lists(ids, lats, lons);
            if (!(sigma_tilde_sq > 0.0)) {
                const double mean_d = mean_pairwise_distance_km(stations);
                sigma_tilde_sq = mean_d * mean_d;
            }
            return build_adjacency(std::move(stations), sigma_tilde_sq, eps_sparsity);
        },
        py::arg("ids"), py::arg("lats"), py::arg("lons"), py::arg("sigma_tilde_sq") = 0.0,
        py::arg("eps_sparsity") = 0.1,
        "Gaussian-kernel station graph; sigma_tilde_sq <= 0 selects the "
        "mean-pairwise-distance default");

    m.def("estimate_zeta_max",
          [](const py::array_t<double, py::array::c_style | py::array::forcecast>& a) {
              return estimate_zeta_max(matrix_from_array(a));
          });

    // metrics
    m.def("mae", [](const py::array_t<double>& a, const py::array_t<double>& f) {
        return mae(vector_from_array(a), vector_from_array(f));
    });
    m.def("rmse", [](const py::array_t<double>& a, const py::array_t<double>& f) {
        return rmse(vector_from_array(a), vector_from_array(f));
    });
    m.def("smape", [](const py::array_t<double>& a, const py::array_t<double>& f) {
        return smape(vector_from_array(a), vector_from_array(f));
    });
    m.def("mase", [](const py::array_t<double>& a, const py::array_t<double>& f,
                     const py::array_t<double>& train) {
        return mase(vector_from_array(a), vector_from_array(f), vector_from_array(train));
    });
    m.def("pinball", [](const py::array_t<double>& a, const py::array_t<double>& q, double rho) {
        return pinball(vector_from_array(a), vector_from_array(q), rho);
    });
    m.def("crps_gaussian", [](double actual, double mean, double sigma) {
        return crps(actual, PredictiveLaw::gaussian(mean, sigma));
    });
    m.def("crps_empirical", [](double actual, const py::array_t<double>& samples) {
        return crps(actual, PredictiveLaw::empirical(vector_from_array(samples)));
    });
    m.def("normal_quantile", &normal_quantile);
    m.def("epsilon_loss", &epsilon_loss);
    m.def("rbf_kernel", [](const py::array_t<double>& u, const py::array_t<double>& v,
                           double gamma) {
        return rbf_kernel(vector_from_array(u), vector_from_array(v), gamma);
    });

    m.def(
        "mcb_test",
        [](const py::array_t<double, py::array::c_style | py::array::forcecast>& scores,
           const std::vector<std::string>& names, double theta) {
            const McbResult res = mcb_test(matrix_from_array(scores), names, theta);
            py::dict out;
            out["model_names"] = res.model_names;
            out["mean_ranks"] = res.mean_ranks;
            out["critical_distance"] = res.critical_distance;
            out["best_index"] = res.best_index;
            std::vector<bool> worse(res.significantly_worse.begin(),
                                    res.significantly_worse.end());
            out["significantly_worse"] = worse;
            return out;
        },
        py::arg("scores"), py::arg("model_names"), py::arg("theta") = 0.05,
        "Mean-rank multiple comparison with the best over a tasks x models loss matrix");

    m.def(
        "conformal_quantile",
        [](const py::array_t<double>& scores, double rho, bool finite_sample) {
            return conformal_quantile(vector_from_array(scores), rho, finite_sample);
        },
        py::arg("scores"), py::arg("rho"), py::arg("finite_sample") = false);
    m.def("conformity_score", &conformity_score);
    m.def("prediction_interval", [](double forecast, double kappa, double scaler) {
        const PredictionInterval iv = make_interval(forecast, kappa, scaler);
        return py::make_tuple(iv.lower, iv.upper);
    });

    m.def(
        "generate_synthetic",
        [](std::size_t nodes, const std::string& topology, double ar, double coupling,
           double noise, std::size_t days, std::uint64_t seed) {
            SyntheticSpec spec;
            spec.nodes = nodes;
            spec.topology = topology_from_name(topology);
            spec.ar_coeff = ar;
            spec.coupling = coupling;
            spec.noise_sigma = noise;
            spec.days = days;
            spec.seed = seed;
            const SyntheticData data = generate_synthetic(spec);
            py::dict out;
            out["values"] = array_from_matrix(data.panel.values());
            std::vector<std::string> ids;
            std::vector<double> lats, lons;
            for (const auto& s : data.stations) {
                ids.push_back(s.id);
                lats.push_back(s.lat);
                lons.push_back(s.lon);
            }
            out["station_ids"] = ids;
            out["lats"] = lats;
            out["lons"] = lons;
            out["generator_adjacency"] = array_from_matrix(data.generator_adjacency);
            out["suggested_sigma_tilde_sq"] = data.suggested_sigma_sq;
            out["suggested_eps_sparsity"] = data.suggested_eps;
            return out;
        },
        py::arg("nodes"), py::arg("topology") = "ring", py::arg("ar") = 0.5,
        py::arg("coupling") = 0.3, py::arg("noise") = 1.0, py::arg("days") = 500,
        py::arg("seed") = 0);

    py::class_<PyModel>(m, "GcsvrModel")
        .def_property_readonly("station_ids", [](const PyModel& m_) { return m_.station_ids; })
        .def_property_readonly("input_window",
                               [](const PyModel& m_) { return m_.model.input_window(); })
        .def_property_readonly("embed_dim", [](const PyModel& m_) { return m_.model.embed_dim(); })
        .def(
            "forecast",
            [](const PyModel& m_,
               const py::array_t<double, py::array::c_style | py::array::forcecast>& history,
               std::size_t horizon) {
                const Matrix values = matrix_from_array(history);
                const PanelSeries panel = panel_from_array(values, m_.station_ids);
                return array_from_matrix(forecast_recursive(m_.model, panel, horizon).points);
            },
            py::arg("history"), py::arg("horizon"),
            "Recursive multi-step forecast from a (days x stations) history block");

    m.def(
        "fit",
        [](const py::array_t<double, py::array::c_style | py::array::forcecast>& values,
           const StationNetwork& network, std::size_t input_window, std::size_t hidden_dim,
           std::size_t embed_dim, double dropout, std::size_t epochs, double lr,
           double weight_decay, double svr_c, double svr_epsilon, std::uint64_t seed,
           std::size_t jobs, bool zero_embeddings) {
            const Matrix v = matrix_from_array(values);
            std::vector<std::string> ids;
            for (const auto& s : network.stations()) ids.push_back(s.id);
            const PanelSeries panel = panel_from_array(v, ids);
            GcnConfig gcn;
            gcn.input_window = input_window;
            gcn.hidden_dim = hidden_dim;
            gcn.embed_dim = embed_dim;
            gcn.dropout_rate = dropout;
            gcn.epochs = epochs;
            gcn.lr = lr;
            gcn.weight_decay = weight_decay;
            gcn.seed = seed;
            SvrConfig svr;
            svr.C = svr_c;
            svr.epsilon = svr_epsilon;
            GcsvrOptions options;
            options.jobs = jobs;
            options.zero_embeddings = zero_embeddings;
            PyModel out;
            out.model = gcsvr_fit(panel, network, gcn, svr, options);
            out.station_ids = ids;
            return out;
        },
        py::arg("values"), py::arg("network"), py::arg("input_window") = 24,
        py::arg("hidden_dim") = 64, py::arg("embed_dim") = 32, py::arg("dropout") = 0.2,
        py::arg("epochs") = 100, py::arg("lr") = 0.001, py::arg("weight_decay") = 5e-4,
        py::arg("svr_c") = 100.0, py::arg("svr_epsilon") = 0.1, py::arg("seed") = 0,
        py::arg("jobs") = 1, py::arg("zero_embeddings") = false,
        "Train the GCN spatial encoder and one SVR per station on a "
        "(days x stations) value block");
}
