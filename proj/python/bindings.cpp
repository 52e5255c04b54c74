// Python surface: images as (H, W, 3) float64 numpy arrays in [0, 1].

#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <cstring>

#include <nlohmann/json.hpp>

#include "toolseq/degrade.hpp"
#include "toolseq/oracle.hpp"
#include "toolseq/po_core.hpp"

namespace py = pybind11;
using namespace toolseq;

namespace {

Raster to_raster(const py::array_t<double, py::array::c_style | py::array::forcecast>& arr) {
  if (arr.ndim() != 3 || arr.shape(2) != 3)
    throw std::invalid_argument("expected an (H, W, 3) array");
  Raster img(static_cast<int>(arr.shape(1)), static_cast<int>(arr.shape(0)));
  std::memcpy(img.data.data(), arr.data(), img.data.size() * sizeof(double));
  return img;
}

py::array_t<double> to_array(const Raster& img) {
  py::array_t<double> out({img.height, img.width, 3});
  std::memcpy(out.mutable_data(), img.data.data(), img.data.size() * sizeof(double));
  return out;
}

py::dict plan_to_dict(const Plan& plan) {
  py::dict d;
  d["actions"] = plan.actions;
  d["names"] = plan.names;
  d["scores"] = plan.scores;
  d["initial_score"] = plan.initial_score;
  d["final_score"] = plan.final_score;
  d["policy_forwards"] = plan.policy_forwards;
  d["restored"] = to_array(plan.restored);
  return d;
}

}  // namespace

PYBIND11_MODULE(_toolseq, m) {
  m.doc() = "policy-driven tool sequencing for image restoration";

  using NpImage = py::array_t<double, py::array::c_style | py::array::forcecast>;

  // image I/O and metrics
  m.def("read_png", [](const std::string& path) { return to_array(read_png(path)); });
  m.def("write_png",
        [](const NpImage& img, const std::string& path) { write_png(to_raster(img), path); });
  m.def("psnr", [](const NpImage& a, const NpImage& b) {
    return psnr(to_raster(a), to_raster(b));
  });
  m.def("ssim", [](const NpImage& a, const NpImage& b) {
    return ssim(to_raster(a), to_raster(b));
  });

  // degradation synthesis
  m.def("case_recipes", [] {
    py::list out;
    for (const CaseRecipe& r : all_case_recipes()) {
      py::dict d;
      d["case_id"] = r.case_id;
      d["setting"] = r.setting;
      py::list seq;
      for (DegradationKind k : r.sequence) seq.append(to_string(k));
      d["sequence"] = seq;
      out.append(d);
    }
    return out;
  });
  m.def(
      "synth_case",
      [](const NpImage& clean, int case_id, std::uint64_t seed) {
        Rng rng(seed);
        nlohmann::json params;
        Raster out = synth_case(to_raster(clean), case_recipe(case_id), rng, &params);
        return py::make_tuple(to_array(out), params.dump());
      },
      py::arg("clean"), py::arg("case_id"), py::arg("seed"),
      "Apply one of the 15 stacked-degradation cases; returns (image, params_json).");
  m.def("synth_dataset", &synth_dataset, py::arg("clean_dir"), py::arg("case_ids"),
        py::arg("n_per_case"), py::arg("seed"), py::arg("out_dir"));

  // features and tools
  m.def("extract_features", [](const NpImage& img) {
    FeatureVector f = extract_features(to_raster(img));
    return std::vector<double>(f.begin(), f.end());
  });
  m.def("tool_names", [] {
    std::vector<std::string> names;
    for (const ToolSpec& t : ToolRegistry::standard().tools()) names.push_back(t.name);
    return names;
  });
  m.def(
      "apply_tool",
      [](int index, const NpImage& img) {
        return to_array(ToolRegistry::standard().apply(index, to_raster(img)));
      },
      py::arg("index"), py::arg("image"));

  // evaluators
  m.def(
      "proxy_score",
      [](const NpImage& img, const std::map<std::string, double>& weights) {
        return proxy_nr_provider(weights)->score(to_raster(img));
      },
      py::arg("image"), py::arg("weights") = std::map<std::string, double>{});

  // oracle search
  m.def(
      "best_sequence",
      [](const NpImage& degraded, int l_max, const py::object& clean,
         std::uint64_t budget) {
        ToolRegistry reg = ToolRegistry::standard();
        std::unique_ptr<RewardProvider> provider =
            clean.is_none() ? proxy_nr_provider()
                            : oracle_psnr_provider(to_raster(clean.cast<NpImage>()));
        OracleResult r = best_sequence(to_raster(degraded), reg, l_max, *provider, budget);
        py::dict d;
        d["sequence"] = r.sequence;
        d["final_score"] = r.final_score;
        d["restored"] = to_array(r.restored);
        return d;
      },
      py::arg("degraded"), py::arg("l_max") = 2, py::arg("clean") = py::none(),
      py::arg("budget") = 1000000,
      "Exhaustive best tool sequence; proxy scorer unless a clean image is given.");

  // training and inference
  m.def(
      "train_policy",
      [](const std::string& manifest, const std::string& checkpoint,
         const std::string& provider, const py::dict& config_overrides) {
        nlohmann::json j = nlohmann::json::object();
        for (const auto& item : config_overrides) {
          std::string key = py::str(item.first).cast<std::string>();
          py::handle v = item.second;
          if (py::isinstance<py::int_>(v)) j[key] = v.cast<std::int64_t>();
          else if (py::isinstance<py::float_>(v)) j[key] = v.cast<double>();
          else if (py::isinstance<py::str>(v)) j[key] = v.cast<std::string>();
          else throw std::invalid_argument("config values must be int, float, or str");
        }
        PoConfig cfg = PoConfig::from_json(j);
        std::vector<ManifestRow> rows = read_manifest(manifest);
        ToolRegistry reg = ToolRegistry::standard();
        std::unique_ptr<ProviderFactory> factory;
        if (provider == "oracle")
          factory = std::make_unique<OracleProviderFactory>();
        else
          factory = std::make_unique<FixedProviderFactory>(proxy_nr_provider());
        TrainOptions opts;
        opts.checkpoint_path = checkpoint;
        TrainResult result = train(cfg, rows, *factory, reg, opts);
        py::dict d;
        d["final_greedy_eval"] = result.final_greedy_eval;
        d["episodes_aborted"] = result.episodes_aborted;
        return d;
      },
      py::arg("manifest"), py::arg("checkpoint"), py::arg("provider") = "proxy",
      py::arg("config") = py::dict());
  m.def(
      "plan",
      [](const std::string& checkpoint, const NpImage& image, int t_max) {
        ToolRegistry reg = ToolRegistry::standard();
        Checkpoint ck = load_checkpoint(checkpoint, reg);
        auto provider = proxy_nr_provider();
        if (t_max <= 0) t_max = ck.config.t_max;
        return plan_to_dict(infer_plan(ck.actor, reg, *provider, to_raster(image), t_max));
      },
      py::arg("checkpoint"), py::arg("image"), py::arg("t_max") = 0,
      "Greedy rollout of a trained policy under the proxy evaluator.");

  m.attr("FEATURE_DIM") = kFeatureDim;
}
