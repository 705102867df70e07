#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "lrpm/encoding.hpp"
#include "lrpm/errors.hpp"
#include "lrpm/io.hpp"
#include "lrpm/nn.hpp"
#include "lrpm/oracle.hpp"
#include "lrpm/pipeline.hpp"
#include "lrpm/renderer.hpp"
#include "lrpm/solver.hpp"

namespace py = pybind11;
using namespace lrpm;

namespace {

Configuration configuration(const std::string& name) {
    const auto c = parse_configuration(name);
    if (!c) throw UsageError("unknown configuration '" + name + "'");
    return *c;
}

Problem problem_from(const std::string& text) {
    const auto j = nlohmann::json::parse(text);
    return problem_from_json(j, configuration(j.at("configuration").get<std::string>()));
}

std::string problem_to(const Problem& p) {
    auto j = problem_to_json(p);
    j["configuration"] = std::string(to_string(p.config));
    return j.dump();
}

SolveMode mode(const std::string& text) {
    const auto m = parse_solve_mode(text);
    if (!m) throw UsageError("unknown mode '" + text + "'");
    return *m;
}

RunConfig run_config(const std::string& text) { return RunConfig::parse(text); }

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Native core of latent_rpm";

    // translators run newest first, so the base class goes first
    py::register_exception<Error>(m, "Error", PyExc_RuntimeError);
    py::register_exception<UsageError>(m, "UsageError", PyExc_ValueError);

    m.def("configurations", [] {
        std::vector<std::string> out;
        for (auto c : kAllConfigurations) out.emplace_back(to_string(c));
        return out;
    });
    m.def("multihot_dim", [](const std::string& config) { return multihot_dim(configuration(config)); });

    m.def(
        "generate",
        [](const std::string& config, int count, std::uint64_t seed, std::uint64_t first_index) {
            const auto d = generate_split(configuration(config), seed, "all", first_index, count);
            std::vector<std::string> out;
            for (const auto& p : d.problems) out.push_back(problem_to(p));
            return out;
        },
        py::arg("config"), py::arg("count"), py::arg("seed") = 0, py::arg("first_index") = 0,
        "Problems as JSON strings.");

    m.def("solve_symbolic", [](const std::string& problem) { return oracle::solve_symbolic(problem_from(problem)); });
    m.def("shared_rules", [](const std::string& problem) {
        const auto p = problem_from(problem);
        std::vector<std::string> out;
        for (const auto& r : oracle_inferred_rules(p)) out.push_back(describe(r, p.config));
        return out;
    });

    m.def("encode_panel", [](const std::string& panel, const std::string& config) {
        const auto c = configuration(config);
        return encode(panel_from_json(nlohmann::json::parse(panel), c), c);
    });
    m.def("decode_panel", [](const std::vector<double>& v, const std::string& config) {
        const auto c = configuration(config);
        return panel_to_json(decode(v, c)).dump();
    });

    m.def(
        "render_panel",
        [](const std::string& panel, const std::string& config, int size) {
            const auto c = configuration(config);
            const auto r = render_panel(panel_from_json(nlohmann::json::parse(panel), c), c, size);
            return py::bytes(to_pgm(r));
        },
        py::arg("panel"), py::arg("config"), py::arg("size") = kDefaultRasterSize, "PGM (P5) bytes.");
    m.def(
        "render_sheet",
        [](const std::string& problem, int size) { return py::bytes(to_pgm(render_problem_sheet(problem_from(problem), size))); },
        py::arg("problem"), py::arg("size") = kDefaultRasterSize);

    m.def("default_config", [] { return RunConfig().render(); });

    m.def(
        "write_dataset",
        [](const std::filesystem::path& path, const std::string& config, int count, std::uint64_t seed,
           const std::string& split, std::uint64_t first_index) {
            write_dataset(path, generate_split(configuration(config), seed, split, first_index, count));
        },
        py::arg("path"), py::arg("config"), py::arg("count"), py::arg("seed") = 0, py::arg("split") = "all",
        py::arg("first_index") = 0);

    m.def(
        "train",
        [](const std::string& stage, const std::filesystem::path& train_path, const std::filesystem::path& val_path,
           const std::filesystem::path& bundle_dir, const std::string& config_text) {
            const auto cfg = run_config(config_text);
            const auto train = read_dataset(train_path);
            Dataset val;
            if (!val_path.empty()) val = read_dataset(val_path);
            py::gil_scoped_release release;
            ModelBundle b;
            if (stage == "ae") {
                train_autoencoder_stage(b, train.problems, val.problems, cfg);
            } else {
                b = load_bundle(bundle_dir);
                if (stage == "rules") {
                    train_rule_stage(b, train.problems, val.problems, cfg);
                } else if (stage == "img") {
                    train_image_stage(b, train.problems, val.problems, cfg);
                } else {
                    throw UsageError("unknown stage '" + stage + "'");
                }
            }
            save_bundle(b, bundle_dir);
        },
        py::arg("stage"), py::arg("train"), py::arg("val"), py::arg("bundle"), py::arg("config") = "");

    m.def("manifest", [](const std::filesystem::path& dir) { return read_manifest(dir).dump(); });

    m.def(
        "solve",
        [](const std::filesystem::path& data, const std::filesystem::path& bundle_dir, const std::string& mode_name,
           double tau) {
            const auto d = read_dataset(data);
            const auto b = load_bundle(bundle_dir);
            SearchConfig s;
            s.tau = tau;
            py::gil_scoped_release release;
            std::vector<int> out;
            for (const auto& o : solve_all(d.problems, mode(mode_name), b, s)) out.push_back(o.answer);
            return out;
        },
        py::arg("data"), py::arg("bundle"), py::arg("mode") = "c", py::arg("tau") = 0.5);

    m.def(
        "evaluate",
        [](const std::filesystem::path& data, const std::filesystem::path& bundle_dir, const std::string& mode_name,
           double tau, const std::filesystem::path& out_dir) {
            const auto d = read_dataset(data);
            const auto b = load_bundle(bundle_dir);
            SearchConfig s;
            s.tau = tau;
            EvaluationReport r;
            {
                py::gil_scoped_release release;
                r = evaluate(d.problems, mode(mode_name), b, s);
            }
            if (!out_dir.empty()) write_report(r, out_dir);
            py::dict result;
            result["accuracy"] = r.accuracy;
            result["problems"] = r.problems;
            result["correct"] = r.correct;
            result["answers"] = r.answers;
            result["report"] = format_report(r);
            py::dict f1;
            for (const auto& n : r.nets) f1[py::str(describe(n.key, r.config))] = n.report.macro_f1;
            result["f1"] = f1;
            return result;
        },
        py::arg("data"), py::arg("bundle"), py::arg("mode") = "c", py::arg("tau") = 0.5, py::arg("out") = "");

    m.def(
        "grad_check_mlp",
        [](std::vector<int> dims, const std::string& loss, std::uint64_t seed) {
            Rng rng(seed);
            nn::Mlp net(dims, nn::Activation::Relu, nn::Activation::Identity, rng);
            const Matrix x = Matrix::Random(dims.front(), 4);
            if (loss == "mse") return nn::grad_check(net, nn::MeanSquared(), x, Matrix::Random(dims.back(), 4));
            if (loss == "ce") {
                Matrix y(1, 4);
                for (int j = 0; j < 4; ++j) y(0, j) = j % dims.back();
                return nn::grad_check(net, nn::CrossEntropy(), x, y);
            }
            throw UsageError("loss must be mse or ce");
        },
        py::arg("dims"), py::arg("loss") = "mse", py::arg("seed") = 0, "Worst relative gradient error.");
}
