#include <pybind11/functional.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "blab/compcomp.hpp"
#include "blab/field_io.hpp"
#include "blab/harness.hpp"
#include "blab/wave_solver.hpp"
#include "blab/wkb.hpp"

namespace py = pybind11;
using namespace blab;

namespace {

// Slab fields travel as (Nt + 1, Nx) or (Nt + 1, Nx, Nx) arrays.
std::vector<py::ssize_t> slab_shape(const SpacetimeGrid& g) {
    if (g.n == 1) return {g.nt(), g.Nx};
    return {g.nt(), g.Nx, g.Nx};
}

std::vector<py::ssize_t> slice_shape(const SpatialGrid& g) {
    if (g.n == 1) return {g.Nx};
    return {g.Nx, g.Nx};
}

py::array_t<double> to_array(const Field& f, std::vector<py::ssize_t> shape) {
    py::array_t<double> a(shape);
    std::copy(f.begin(), f.end(), a.mutable_data());
    return a;
}

Field from_array(const py::array_t<double, py::array::c_style | py::array::forcecast>& a, std::size_t expect,
                 const char* what) {
    if (std::size_t(a.size()) != expect)
        throw py::value_error(std::string(what) + ": expected " + std::to_string(expect) + " values, got " +
                              std::to_string(a.size()));
    return Field(a.data(), a.data() + a.size());
}

py::dict record_dict(const RunRecord& r) {
    py::list checks;
    for (const Check& c : r.checks) {
        py::dict d;
        d["criterion"] = c.criterion;
        d["name"] = c.name;
        d["value"] = c.value;
        d["relation"] = c.relation;
        d["threshold"] = c.threshold;
        d["status"] = status_name(c.status());
        d["control"] = c.control;
        d["detail"] = c.detail;
        checks.append(d);
    }
    py::list slopes;
    for (const SlopeRow& s : r.slopes) {
        py::dict d;
        d["name"] = s.name;
        d["slope"] = s.slope;
        d["half_width"] = s.half_width;
        d["theory"] = s.theory;
        d["levels"] = s.levels;
        slopes.append(d);
    }
    py::dict d;
    d["scenario"] = r.scenario;
    d["config_hash"] = r.config_hash;
    d["seed"] = r.seed;
    d["dir"] = r.dir;
    d["passed"] = r.passed();
    d["checks"] = checks;
    d["slopes"] = slopes;
    d["files"] = r.files;
    return d;
}

ExperimentConfig make_config(const std::string& scenario, const std::string& config, const std::string& out,
                             std::optional<std::uint64_t> seed, int threads) {
    ExperimentConfig c = config.empty() ? default_config(scenario) : parse_config(config);
    if (!out.empty()) c.out = out;
    if (seed) c.seed = *seed;
    c.threads = threads;
    return c;
}

}  // namespace

PYBIND11_MODULE(_blab, m) {
    m.doc() = "Defect measures of high-frequency waves: solvers, H-measure estimates and the experiment harness";
    m.attr("__version__") = kBlabVersion;
    m.def("module_versions", &module_versions);

    static py::exception<Error> error(m, "BlabError", PyExc_RuntimeError);
    static py::exception<ConfigError> config_error(m, "ConfigError", PyExc_ValueError);
    py::register_exception_translator([](std::exception_ptr p) {
        try {
            if (p) std::rethrow_exception(p);
        } catch (const ConfigError& e) {
            py::set_error(config_error, e.what());
        } catch (const Error& e) {
            py::set_error(error, e.what());
        }
    });

    py::class_<SpacetimeGrid>(m, "SpacetimeGrid")
        .def(py::init([](int n, double T, double L, int Nt, int Nx) {
                 SpacetimeGrid g{n, T, L, Nt, Nx};
                 g.validate();
                 return g;
             }),
             py::arg("n") = 1, py::arg("T") = 1.0, py::arg("L") = kTwoPi, py::arg("Nt") = 64, py::arg("Nx") = 64)
        .def_readonly("n", &SpacetimeGrid::n)
        .def_readonly("T", &SpacetimeGrid::T)
        .def_readonly("L", &SpacetimeGrid::L)
        .def_readonly("Nt", &SpacetimeGrid::Nt)
        .def_readonly("Nx", &SpacetimeGrid::Nx)
        .def_property_readonly("dt", &SpacetimeGrid::dt)
        .def_property_readonly("dx", &SpacetimeGrid::dx)
        .def_property_readonly("shape", [](const SpacetimeGrid& g) { return slab_shape(g); })
        .def("__repr__", [](const SpacetimeGrid& g) {
            return "SpacetimeGrid(n=" + std::to_string(g.n) + ", T=" + std::to_string(g.T) +
                   ", L=" + std::to_string(g.L) + ", Nt=" + std::to_string(g.Nt) + ", Nx=" + std::to_string(g.Nx) +
                   ")";
        });

    py::class_<MetricModel>(m, "Metric")
        .def_readonly("n", &MetricModel::n)
        .def_readonly("name", &MetricModel::name)
        .def("lower", [](const MetricModel& g, double t, double x, double y) {
            const Mat a = g.lower(Point{t, x, y});
            std::vector<std::vector<double>> r(a.rows(), std::vector<double>(a.cols()));
            for (int i = 0; i < a.rows(); ++i)
                for (int j = 0; j < a.cols(); ++j) r[i][j] = a(i, j);
            return r;
        }, py::arg("t"), py::arg("x"), py::arg("y") = 0.0);
    m.def("minkowski", &minkowski, py::arg("n") = 1);
    m.def("boosted_minkowski", &boosted_minkowski, py::arg("n"), py::arg("v"));
    m.def("named_metric", [](const std::string& name, int n, double amplitude) {
        MetricSpec s{name, amplitude};
        return s.model(n);
    }, py::arg("name"), py::arg("n") = 1, py::arg("amplitude") = 0.2,
       "minkowski | unit-density | conformal | boosted, as in the [metric] config section");

    m.def("box_apply", [](const SpacetimeGrid& g, const MetricModel& metric, const py::array_t<double>& u) {
        const MetricField mf = MetricField::from_model(g, metric);
        return to_array(box_apply(mf, from_array(u, g.size(), "u")), slab_shape(g));
    }, py::arg("grid"), py::arg("metric"), py::arg("u"));

    m.def("evolve_linear", [](const MetricModel& metric, const SpacetimeGrid& g, const py::array_t<double>& u0,
                              const py::array_t<double>& v0) {
        const SpatialGrid s = g.spatial();
        const Field a = from_array(u0, s.size(), "u0"), b = from_array(v0, s.size(), "v0");
        Evolution ev;
        {
            py::gil_scoped_release nogil;
            ev = evolve_linear(metric, g, a, b);
        }
        return py::make_tuple(to_array(ev.u[0], slab_shape(g)), to_array(ev.v[0], slab_shape(g)));
    }, py::arg("metric"), py::arg("grid"), py::arg("u0"), py::arg("v0"),
       "Solve box_g u = 0 from u and e0 u on the t = 0 slice; returns (u, e0 u) on the slab.");

    m.def("eikonal", [](const MetricModel& metric, const SpacetimeGrid& g, const std::vector<double>& k) {
        const PhaseField ph = eikonal_solve(metric, g, plane_phase(k));
        py::dict d;
        d["phi"] = to_array(ph.phi, slab_shape(g));
        py::list dphi;
        for (const Field& f : ph.dphi) dphi.append(to_array(f, slab_shape(g)));
        d["dphi"] = dphi;
        d["caustic"] = ph.caustic;
        d["caustic_time"] = ph.caustic_time;
        d["max_residual"] = ph.max_residual;
        return d;
    }, py::arg("metric"), py::arg("grid"), py::arg("k"), "Null phase from the plane phase k.x on t = 0.");

    m.def("fit_loglog", [](const std::vector<double>& x, const std::vector<double>& y) {
        const SlopeFit f = fit_loglog(x, y);
        return py::make_tuple(f.slope, f.halfwidth);
    }, py::arg("x"), py::arg("y"), "Slope of log|y| against log x and its 95% half-width.");

    m.def("nullform_deviation", [](const SpacetimeGrid& g, const std::string& family, const std::vector<double>& eps) {
        FieldLadder f = family == "crossing-null"   ? crossing_null_ladder(g, eps)
                        : family == "null-plane"    ? null_plane_ladder(g, eps)
                        : family == "spatial-phase" ? spatial_phase_ladder(g, eps)
                                                    : throw ConfigError("unknown family '" + family + "'");
        const LimitVerdict v =
            nullform_limit(MetricField::from_model(g, minkowski(g.n)), f, f, {}, {}, default_tests(g));
        return py::make_tuple(v.max_deviation, v.deviation);
    }, py::arg("grid"), py::arg("family"), py::arg("eps"),
       "Weak-limit deviation of g^{-1}(du, du) from zero on Minkowski, at the limit and per level.");

    m.def("read_dump", [](const std::string& path) {
        DumpHeader h;
        const std::vector<Field> comps = read_dump(path, h);
        py::dict head;
        head["n"] = h.n;
        head["Nt"] = h.Nt;
        head["Nx"] = h.Nx;
        head["T"] = h.T;
        head["L"] = h.L;
        head["config_hash"] = hex64(h.config_hash);
        std::vector<py::ssize_t> shape = h.Nt ? slab_shape(SpacetimeGrid{int(h.n), h.T, h.L, int(h.Nt), int(h.Nx)})
                                              : slice_shape(SpatialGrid{int(h.n), h.L, int(h.Nx)});
        py::list arrays;
        for (const Field& f : comps) arrays.append(to_array(f, shape));
        return py::make_tuple(head, arrays);
    }, py::arg("path"));

    // harness
    m.def("scenarios", [] {
        py::list out;
        for (const Scenario& s : scenarios()) {
            py::dict d;
            d["name"] = s.name;
            d["summary"] = s.summary;
            d["criteria"] = s.criteria;
            out.append(d);
        }
        return out;
    });
    m.def("canonical_config", [](const std::string& scenario, const std::string& config) {
        const ExperimentConfig c = make_config(scenario, config, "", std::nullopt, 1);
        validate(c);
        return py::make_tuple(canonical(c), config_hash(c));
    }, py::arg("scenario") = "null-plane-wave-minkowski", py::arg("config") = "",
       "Canonical text and hash of a scenario's defaults, or of INI text when given.");
    m.def("run", [](const std::string& scenario, const std::string& config, const std::string& out,
                    std::optional<std::uint64_t> seed, int threads) {
        const ExperimentConfig c = make_config(scenario, config, out, seed, threads);
        RunRecord r;
        {
            py::gil_scoped_release nogil;
            r = run(c);
        }
        return record_dict(r);
    }, py::arg("scenario") = "null-plane-wave-minkowski", py::arg("config") = "", py::arg("out") = "",
       py::arg("seed") = py::none(), py::arg("threads") = 1);
    m.def("report", [](const std::vector<std::string>& verdicts) {
        std::vector<RunRecord> rs;
        for (const auto& v : verdicts) rs.push_back(read_record(v));
        const Report r = report(rs);
        return py::make_tuple(r.text, r.csv, exit_code(rs));
    }, py::arg("verdict_files"), "Summary text, CSV and exit status for verdict.csv files.");
}
