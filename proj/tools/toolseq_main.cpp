// Command-line driver: dataset synthesis, policy training, plan inference,
// evaluation, oracle comparison, and runtime benchmarking.
//
// Exit codes: 0 success, 2 input/config error, 3 checkpoint mismatch,
// 4 oracle budget exceeded.

#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "toolseq/degrade.hpp"
#include "toolseq/oracle.hpp"
#include "toolseq/po_core.hpp"

using namespace toolseq;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

struct InputError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Provider settings resolved from config file, flags, and SCORER_URL.
struct ProviderSpec {
  std::string kind = "proxy";  // oracle | proxy | remote
  std::string endpoint;
  double timeout = 10.0;
  int retries = 3;
  std::map<std::string, double> weights;
};

json load_config(const std::string& path) {
  if (path.empty()) return json::object();
  std::ifstream in(path);
  if (!in) throw InputError("cannot open config file: " + path);
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw InputError("config parse error in " + path + ": " + e.what());
  }
}

ProviderSpec provider_from_config(const json& cfg) {
  ProviderSpec spec;
  if (cfg.contains("provider")) {
    const json& p = cfg.at("provider");
    if (p.contains("kind")) spec.kind = p.at("kind").get<std::string>();
    if (p.contains("endpoint")) spec.endpoint = p.at("endpoint").get<std::string>();
    if (p.contains("timeout")) spec.timeout = p.at("timeout").get<double>();
    if (p.contains("retries")) spec.retries = p.at("retries").get<int>();
    if (p.contains("weights"))
      spec.weights = p.at("weights").get<std::map<std::string, double>>();
  }
  return spec;
}

std::unique_ptr<ProviderFactory> make_factory(const ProviderSpec& spec) {
  if (spec.kind == "oracle") return std::make_unique<OracleProviderFactory>();
  if (spec.kind == "proxy")
    return std::make_unique<FixedProviderFactory>(proxy_nr_provider(spec.weights));
  if (spec.kind == "remote") {
    std::string endpoint = spec.endpoint;
    if (const char* env = std::getenv("SCORER_URL")) endpoint = env;
    if (endpoint.empty())
      throw InputError("remote provider needs an endpoint (config or SCORER_URL)");
    return std::make_unique<FixedProviderFactory>(
        remote_provider(endpoint, spec.timeout, spec.retries));
  }
  throw InputError("unknown provider kind: " + spec.kind);
}

std::vector<ManifestRow> load_manifest_checked(const std::string& path) {
  if (!fs::exists(path)) throw InputError("manifest not found: " + path);
  std::vector<ManifestRow> rows = read_manifest(path);
  if (rows.empty()) throw InputError("manifest is empty: " + path);
  return rows;
}

std::vector<int> parse_case_list(const std::string& text) {
  std::vector<int> out;
  std::stringstream ss(text);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    if (tok.empty()) continue;
    out.push_back(std::stoi(tok));
  }
  return out;
}

// settings ordered I..IV for stable report layout
const std::vector<std::string> kSettings = {"I", "II", "III", "IV"};

double mean_of(const std::vector<double>& v) {
  if (v.empty()) return 0.0;
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

// Minimal per-setting summary plot: one polyline per metric, no dependencies.
void write_summary_svg(const std::string& path,
                       const std::vector<std::string>& settings,
                       const std::map<std::string, std::vector<double>>& series) {
  const int w = 480, h = 320, ml = 50, mb = 40, mt = 20, mr = 20;
  double lo = 1e300, hi = -1e300;
  for (const auto& [name, vals] : series)
    for (double v : vals) {
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
  if (hi <= lo) hi = lo + 1.0;
  auto px = [&](std::size_t i, std::size_t n) {
    return ml + (w - ml - mr) * static_cast<double>(i) / std::max<std::size_t>(n - 1, 1);
  };
  auto py = [&](double v) { return h - mb - (h - mb - mt) * (v - lo) / (hi - lo); };

  std::ofstream out(path, std::ios::trunc);
  if (!out) throw InputError("cannot write SVG: " + path);
  out << "<svg xmlns='http://www.w3.org/2000/svg' width='" << w << "' height='" << h
      << "'>\n<rect width='100%' height='100%' fill='white'/>\n";
  const char* colors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd"};
  int ci = 0;
  for (const auto& [name, vals] : series) {
    out << "<polyline fill='none' stroke='" << colors[ci % 4] << "' stroke-width='2' points='";
    for (std::size_t i = 0; i < vals.size(); ++i)
      out << px(i, vals.size()) << "," << py(vals[i]) << " ";
    out << "'/>\n<text x='" << (w - mr - 80) << "' y='" << (mt + 15 + 15 * ci)
        << "' fill='" << colors[ci % 4] << "' font-size='12'>" << name << "</text>\n";
    ++ci;
  }
  for (std::size_t i = 0; i < settings.size(); ++i)
    out << "<text x='" << px(i, settings.size()) << "' y='" << (h - mb + 18)
        << "' text-anchor='middle' font-size='12'>" << settings[i] << "</text>\n";
  out << "<text x='8' y='" << py(lo) << "' font-size='11'>" << lo << "</text>\n"
      << "<text x='8' y='" << py(hi) + 10 << "' font-size='11'>" << hi << "</text>\n"
      << "</svg>\n";
}

int cmd_synth(const std::string& config, const std::string& clean_dir,
              const std::string& out_dir, std::string cases, int per_case,
              std::uint64_t seed) {
  json cfg = load_config(config);
  if (cases.empty() && cfg.contains("cases")) {
    cases.clear();
    for (int c : cfg.at("cases").get<std::vector<int>>())
      cases += (cases.empty() ? "" : ",") + std::to_string(c);
  }
  std::vector<int> case_ids = cases.empty()
                                  ? std::vector<int>{1, 2, 3, 4, 5, 6, 7, 8, 9, 10,
                                                     11, 12, 13, 14, 15}
                                  : parse_case_list(cases);
  if (!fs::is_directory(clean_dir)) throw InputError("clean dir not found: " + clean_dir);
  bool any_png = false;
  for (const auto& e : fs::directory_iterator(clean_dir))
    if (e.path().extension() == ".png") any_png = true;
  if (!any_png) throw InputError("no PNG files in clean dir: " + clean_dir);

  std::string manifest = synth_dataset(clean_dir, case_ids, per_case, seed, out_dir);
  std::vector<ManifestRow> rows = read_manifest(manifest);
  std::map<int, int> counts;
  for (const ManifestRow& r : rows) ++counts[r.case_id];
  std::cout << "manifest: " << manifest << "\n";
  for (const auto& [cid, n] : counts)
    std::cout << "case " << cid << ": " << n << " images\n";
  std::cout << rows.size() << " images total\n";
  return 0;
}

int cmd_train(const std::string& config, const std::string& manifest_path,
              std::string provider_kind, const std::string& out,
              const std::string& log_path, int updates_override,
              std::int64_t seed_override, const std::string& variant_override) {
  json cfg_json = load_config(config);
  PoConfig cfg = cfg_json.empty() ? PoConfig{} : PoConfig::from_json(cfg_json);
  if (updates_override >= 0) cfg.updates = updates_override;
  if (seed_override >= 0) cfg.seed = static_cast<std::uint64_t>(seed_override);
  if (!variant_override.empty())
    cfg.variant = variant_override == "grpo" ? PoVariant::Grpo : PoVariant::Ppo;
  cfg.validate();

  ProviderSpec spec = provider_from_config(cfg_json);
  if (!provider_kind.empty()) spec.kind = provider_kind;

  std::vector<ManifestRow> rows = load_manifest_checked(manifest_path);
  auto factory = make_factory(spec);
  ToolRegistry registry = ToolRegistry::standard();

  TrainOptions opts;
  opts.checkpoint_path = out;
  opts.log_path = log_path;
  opts.on_update = [](int update, const LossStats& stats, double mean_return,
                      double eval_score) {
    std::cout << "update " << update << " mean_return " << mean_return
              << " entropy " << stats.entropy << " greedy_eval " << eval_score << "\n";
  };

  TrainResult result = train(cfg, rows, *factory, registry, opts);
  std::cout << "final greedy eval: " << result.final_greedy_eval << "\n"
            << "checkpoint: " << out << "\n";
  if (result.episodes_aborted > 0)
    std::cout << "episodes aborted: " << result.episodes_aborted << "\n";
  return 0;
}

int cmd_plan(const std::string& config, const std::string& checkpoint_path,
             const std::string& image_path, const std::string& out_image,
             const std::string& plan_out, int t_max, std::string provider_kind) {
  json cfg_json = load_config(config);
  ProviderSpec spec = provider_from_config(cfg_json);
  if (!provider_kind.empty()) spec.kind = provider_kind;
  if (spec.kind == "oracle")
    throw InputError("plan needs a label-free provider (proxy or remote)");

  if (!fs::exists(image_path)) throw InputError("image not found: " + image_path);
  ToolRegistry registry = ToolRegistry::standard();
  Checkpoint ck = load_checkpoint(checkpoint_path, registry);
  if (t_max <= 0) t_max = ck.config.t_max;

  auto factory = make_factory(spec);
  ManifestRow dummy;
  Raster img = read_png(image_path);
  Plan plan = infer_plan(ck.actor, registry, factory->for_row(dummy), img, t_max);

  if (!out_image.empty()) write_png(plan.restored, out_image);
  json j = {{"input", image_path},
            {"actions", plan.names},
            {"action_indices", plan.actions},
            {"scores", plan.scores},
            {"initial_score", plan.initial_score},
            {"final_score", plan.final_score},
            {"output", out_image}};
  if (!plan_out.empty()) {
    std::ofstream out(plan_out, std::ios::trunc);
    if (!out) throw InputError("cannot write plan JSON: " + plan_out);
    out << j.dump(2) << "\n";
  }
  std::cout << "plan:";
  for (const std::string& n : plan.names) std::cout << " " << n;
  if (plan.names.empty()) std::cout << " (stop immediately)";
  std::cout << "\nfinal score: " << plan.final_score << "\n";
  return 0;
}

int cmd_eval(const std::string& config, const std::string& checkpoint_path,
             const std::string& manifest_path, const std::string& out_csv,
             const std::string& out_svg, int t_max) {
  json cfg_json = load_config(config);
  ProviderSpec spec = provider_from_config(cfg_json);
  if (spec.kind == "oracle") spec.kind = "proxy";  // planning stays label-free

  std::vector<ManifestRow> rows = load_manifest_checked(manifest_path);
  ToolRegistry registry = ToolRegistry::standard();
  Checkpoint ck = load_checkpoint(checkpoint_path, registry);
  if (t_max <= 0) t_max = ck.config.t_max;
  auto factory = make_factory(spec);
  auto proxy = proxy_nr_provider(spec.weights);

  std::ofstream csv;
  std::ostream* os = &std::cout;
  if (!out_csv.empty()) {
    csv.open(out_csv, std::ios::trunc);
    if (!csv) throw InputError("cannot write CSV: " + out_csv);
    os = &csv;
  }
  // fixed column order; summary rows use case_id "mean-<setting>"
  *os << "degraded,case_id,setting,psnr,ssim,proxy\n";

  std::map<std::string, std::vector<double>> psnrs, ssims, proxies;
  for (const ManifestRow& row : rows) {
    Raster degraded = read_png(row.degraded);
    Raster clean = read_png(row.clean);
    Plan plan = infer_plan(ck.actor, registry, factory->for_row(row), degraded, t_max);
    double p = psnr(plan.restored, clean);
    double s = ssim(plan.restored, clean);
    double q = proxy->score(plan.restored);
    *os << row.degraded << "," << row.case_id << "," << row.setting << "," << p
        << "," << s << "," << q << "\n";
    psnrs[row.setting].push_back(p);
    ssims[row.setting].push_back(s);
    proxies[row.setting].push_back(q);
  }

  std::vector<std::string> present;
  std::map<std::string, std::vector<double>> series;
  for (const std::string& setting : kSettings) {
    if (!psnrs.count(setting)) continue;
    present.push_back(setting);
    *os << ",mean-" << setting << "," << setting << "," << mean_of(psnrs[setting])
        << "," << mean_of(ssims[setting]) << "," << mean_of(proxies[setting]) << "\n";
    series["psnr"].push_back(mean_of(psnrs[setting]));
    series["ssim*50"].push_back(50.0 * mean_of(ssims[setting]));
    series["proxy*10"].push_back(10.0 * mean_of(proxies[setting]));
  }
  if (!out_svg.empty() && !present.empty()) write_summary_svg(out_svg, present, series);
  if (!out_csv.empty()) std::cout << "wrote " << out_csv << "\n";
  return 0;
}

int cmd_oracle(const std::string& config, const std::string& manifest_path,
               int l_max, std::string provider_kind,
               const std::string& checkpoint_path, const std::string& out_path,
               std::uint64_t budget) {
  json cfg_json = load_config(config);
  ProviderSpec spec = provider_from_config(cfg_json);
  if (!provider_kind.empty()) spec.kind = provider_kind;

  std::vector<ManifestRow> rows = load_manifest_checked(manifest_path);
  ToolRegistry registry = ToolRegistry::standard();
  auto factory = make_factory(spec);

  std::optional<Checkpoint> ck;
  if (!checkpoint_path.empty()) ck = load_checkpoint(checkpoint_path, registry);

  std::ofstream file;
  std::ostream* os = &std::cout;
  if (!out_path.empty()) {
    file.open(out_path, std::ios::trunc);
    if (!file) throw InputError("cannot write report: " + out_path);
    os = &file;
  }

  double gap_sum = 0.0;
  int matches = 0, n = 0;
  for (const ManifestRow& row : rows) {
    Raster degraded = read_png(row.degraded);
    const RewardProvider& provider = factory->for_row(row);
    OracleResult oracle = best_sequence(degraded, registry, l_max, provider, budget);
    json line = {{"degraded", row.degraded},
                 {"case_id", row.case_id},
                 {"oracle_sequence", oracle.sequence},
                 {"oracle_score", oracle.final_score}};
    if (ck) {
      Plan plan = infer_plan(ck->actor, registry, provider, degraded,
                             ck->config.t_max);
      PlanComparison cmp = compare_plan(plan.actions, plan.final_score, oracle);
      line["policy_sequence"] = plan.actions;
      line["policy_score"] = cmp.policy_score;
      line["gap"] = cmp.gap;
      line["exact_match"] = cmp.exact_match;
      gap_sum += cmp.gap;
      // score match: the policy ties the oracle's achievable score
      if (cmp.policy_score + 1e-9 >= cmp.oracle_score) ++matches;
    }
    *os << line.dump() << "\n";
    ++n;
  }
  if (ck && n > 0) {
    json summary = {{"images", n},
                    {"mean_gap", gap_sum / n},
                    {"match_rate", static_cast<double>(matches) / n}};
    *os << summary.dump() << "\n";
    std::cout << "match rate: " << static_cast<double>(matches) / n
              << " mean gap: " << gap_sum / n << "\n";
  }
  return 0;
}

int cmd_bench(const std::string& config, const std::string& checkpoint_path,
              const std::string& manifest_path, const std::string& out_path) {
  json cfg_json = load_config(config);
  ProviderSpec spec = provider_from_config(cfg_json);
  if (spec.kind == "oracle") spec.kind = "proxy";

  std::vector<ManifestRow> rows = load_manifest_checked(manifest_path);
  ToolRegistry registry = ToolRegistry::standard();
  Checkpoint ck = load_checkpoint(checkpoint_path, registry);
  auto factory = make_factory(spec);

  std::map<std::string, std::vector<double>> wall, invocations, forwards;
  for (const ManifestRow& row : rows) {
    Raster degraded = read_png(row.degraded);
    auto t0 = std::chrono::steady_clock::now();
    Plan plan = infer_plan(ck.actor, registry, factory->for_row(row), degraded,
                           ck.config.t_max);
    auto t1 = std::chrono::steady_clock::now();
    wall[row.setting].push_back(std::chrono::duration<double>(t1 - t0).count());
    invocations[row.setting].push_back(static_cast<double>(plan.actions.size()));
    forwards[row.setting].push_back(static_cast<double>(plan.policy_forwards));
  }

  json report = json::object();
  for (const std::string& setting : kSettings) {
    if (!wall.count(setting)) continue;
    report[setting] = {{"mean_wall_seconds", mean_of(wall[setting])},
                       {"mean_tool_invocations", mean_of(invocations[setting])},
                       {"mean_policy_forwards", mean_of(forwards[setting])},
                       {"images", wall[setting].size()}};
  }
  std::string text = report.dump(2);
  std::cout << text << "\n";
  if (!out_path.empty()) {
    std::ofstream out(out_path, std::ios::trunc);
    if (!out) throw InputError("cannot write bench report: " + out_path);
    out << text << "\n";
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"tool-sequencing image restoration"};
  app.require_subcommand(1);

  std::string config, clean_dir, out, manifest, provider, checkpoint, image;
  std::string plan_out, log_path, svg, variant, cases;
  int per_case = 20, t_max = 0, l_max = 2, updates = -1;
  std::int64_t seed_flag = -1;
  std::uint64_t seed = 0, budget = 1000000;

  auto* synth = app.add_subcommand("synth", "degrade a clean corpus into a training set");
  synth->add_option("--config", config, "JSON config file");
  synth->add_option("--clean-dir", clean_dir, "directory of clean PNGs")->required();
  synth->add_option("--out", out, "output directory")->required();
  synth->add_option("--cases", cases, "comma-separated case ids (default all 15)");
  synth->add_option("--per-case", per_case, "degraded images per case (cycles the clean corpus)");
  synth->add_option("--seed", seed, "RNG seed");

  auto* train_cmd = app.add_subcommand("train", "train the tool-selection policy");
  train_cmd->add_option("--config", config, "JSON config file");
  train_cmd->add_option("--manifest", manifest, "training manifest")->required();
  train_cmd->add_option("--provider", provider, "oracle|proxy|remote");
  train_cmd->add_option("--out", out, "checkpoint path")->required();
  train_cmd->add_option("--log", log_path, "JSON-lines training log");
  train_cmd->add_option("--updates", updates, "override update count");
  train_cmd->add_option("--seed", seed_flag, "override seed");
  train_cmd->add_option("--variant", variant, "ppo|grpo");

  auto* plan = app.add_subcommand("plan", "run the greedy policy on one image");
  plan->add_option("--config", config, "JSON config file");
  plan->add_option("--checkpoint", checkpoint, "trained checkpoint")->required();
  plan->add_option("--image", image, "degraded input PNG")->required();
  plan->add_option("--out", out, "restored output PNG");
  plan->add_option("--plan-out", plan_out, "plan JSON path");
  plan->add_option("--t-max", t_max, "step cap (default: from checkpoint)");
  plan->add_option("--provider", provider, "proxy|remote");

  auto* eval_cmd = app.add_subcommand("eval", "evaluate a checkpoint over a manifest");
  eval_cmd->add_option("--config", config, "JSON config file");
  eval_cmd->add_option("--checkpoint", checkpoint, "trained checkpoint")->required();
  eval_cmd->add_option("--manifest", manifest, "evaluation manifest")->required();
  eval_cmd->add_option("--out", out, "CSV output path (default stdout)");
  eval_cmd->add_option("--svg", svg, "per-setting summary plot");
  eval_cmd->add_option("--t-max", t_max, "step cap (default: from checkpoint)");

  auto* oracle_cmd = app.add_subcommand("oracle", "brute-force best plans; compare a policy");
  oracle_cmd->add_option("--config", config, "JSON config file");
  oracle_cmd->add_option("--manifest", manifest, "manifest")->required();
  oracle_cmd->add_option("--l-max", l_max, "max sequence length");
  oracle_cmd->add_option("--provider", provider, "oracle|proxy|remote");
  oracle_cmd->add_option("--checkpoint", checkpoint, "optional policy to compare");
  oracle_cmd->add_option("--out", out, "JSON-lines report path (default stdout)");
  oracle_cmd->add_option("--budget", budget, "max tool applications");

  auto* bench = app.add_subcommand("bench", "plan-time statistics per setting");
  bench->add_option("--config", config, "JSON config file");
  bench->add_option("--checkpoint", checkpoint, "trained checkpoint")->required();
  bench->add_option("--manifest", manifest, "manifest")->required();
  bench->add_option("--out", out, "JSON report path");

  CLI11_PARSE(app, argc, argv);

  try {
    if (synth->parsed())
      return cmd_synth(config, clean_dir, out, cases, per_case, seed);
    if (train_cmd->parsed())
      return cmd_train(config, manifest, provider, out, log_path, updates,
                       seed_flag, variant);
    if (plan->parsed())
      return cmd_plan(config, checkpoint, image, out, plan_out, t_max, provider);
    if (eval_cmd->parsed())
      return cmd_eval(config, checkpoint, manifest, out, svg, t_max);
    if (oracle_cmd->parsed())
      return cmd_oracle(config, manifest, l_max, provider, checkpoint, out, budget);
    if (bench->parsed()) return cmd_bench(config, checkpoint, manifest, out);
  } catch (const CheckpointMismatch& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  } catch (const BudgetError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 4;
  } catch (const InputError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
