#include "cli.hpp"

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "adaedit/config.hpp"
#include "adaedit/csv.hpp"
#include "adaedit/diagnostics.hpp"
#include "adaedit/errors.hpp"
#include "adaedit/pipeline.hpp"
#include "adaedit/solvers.hpp"

namespace adaedit::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct Options {
  std::string command;
  std::string config_path;
  std::string out_dir;
  std::vector<std::string> overrides;
  std::vector<double> taus{0.5, 1.0, 2.0};
  std::vector<std::string> axes;
};

struct Loaded {
  RunConfig rc;
  json effective;
  std::string hash;
};

Loaded load_config(const Options& opt) {
  json doc = json::object();
  if (!opt.config_path.empty()) {
    std::ifstream in(opt.config_path);
    if (!in) throw ConfigError("config: cannot open '" + opt.config_path + "'");
    doc = json::parse(in, nullptr);
    if (doc.is_discarded()) throw ConfigError("config: '" + opt.config_path + "' is not valid JSON");
  }
  for (const auto& o : opt.overrides) apply_override(doc, o);
  if (const char* env = std::getenv("ADAEDIT_SEED"); env != nullptr && *env != '\0') {
    char* end = nullptr;
    const unsigned long long seed = std::strtoull(env, &end, 10);
    if (*end != '\0') throw ConfigError("ADAEDIT_SEED: not an unsigned integer");
    doc["seed"] = seed;
  }
  Loaded l;
  l.rc = run_config_from_json(doc);
  l.effective = to_json(l.rc);
  l.hash = config_hash(l.effective);
  return l;
}

std::ofstream open_out(const fs::path& dir, const char* name) {
  std::ofstream os(dir / name, std::ios::binary | std::ios::trunc);
  if (!os) throw Error(std::string("cannot write ") + (dir / name).string());
  return os;
}

std::string utc_timestamp() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  std::ostringstream os;
  os << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
  return os.str();
}

void write_manifest(const fs::path& dir, const Options& opt, const std::string& hash) {
  json m;
  m["command"] = opt.command;
  m["config_path"] = opt.config_path;
  m["out_dir"] = opt.out_dir;
  m["config_hash"] = hash;
  m["timestamp"] = utc_timestamp();
  auto os = open_out(dir, "manifest.json");
  os << m.dump(2) << '\n';
}

Latent make_source(const RunConfig& rc) {
  return synthetic_source(1, rc.edit.model.img_tokens, rc.edit.model.channels, rc.source_seed);
}

int cmd_edit(const Options& opt, const fs::path& dir, std::ostream& out) {
  const Loaded cfg = load_config(opt);
  const Latent source = make_source(cfg.rc);
  const EditResult res = run_edit(source, cfg.rc.source_prompt, cfg.rc.target_prompt, cfg.rc.edit);
  {
    auto os = open_out(dir, "result.csv");
    write_summary_header(os);
    write_summary_row(os, summarize("run_000", cfg.rc.edit, res));
  }
  {
    auto os = open_out(dir, "mask.csv");
    write_mask_csv(os, res.mask);
  }
  {
    auto os = open_out(dir, "channels.csv");
    write_channel_report_csv(os, ShiftResult{res.perturbed, res.channel_weights, res.channel_gaps, res.blend_weights});
  }
  {
    auto os = open_out(dir, "schedule.csv");
    write_schedule_csv(os, InjectionSchedule(cfg.rc.edit.schedule_params()));
  }
  {
    auto os = open_out(dir, "trajectory.csv");
    write_trajectory_csv(os, res.sampling, TimeGrid::uniform(cfg.rc.edit.total_steps));
  }
  write_manifest(dir, opt, cfg.hash);
  for (const auto& w : res.warnings) out << "warning: " << w << '\n';
  out << "edit: psnr=" << csv::format(res.diagnostics.at("psnr"))
      << " ssim=" << csv::format(res.diagnostics.at("ssim")) << '\n';
  return kOk;
}

int cmd_reconstruct(const Options& opt, const fs::path& dir, std::ostream& out) {
  const Loaded cfg = load_config(opt);
  const Latent source = make_source(cfg.rc);
  const Latent rec = run_reconstruction(source, cfg.rc.source_prompt, cfg.rc.edit);
  const double p = psnr(source, rec);
  const double s = ssim(source, rec);
  double num = 0.0;
  for (std::size_t i = 0; i < source.size(); ++i)
    num = std::max(num, std::abs(source.data()[i] - rec.data()[i]));
  const double rel = num / source.max_abs();
  {
    auto os = open_out(dir, "reconstruct.csv");
    os << "run_id,T,solver,psnr,ssim,rel_max_error\n";
    os << "run_000," << cfg.rc.edit.total_steps << ',' << to_string(cfg.rc.edit.solver) << ','
       << csv::format(p) << ',' << csv::format(s) << ',' << csv::format(rel) << '\n';
  }
  {
    auto os = open_out(dir, "reconstruction.csv");
    write_latent_csv(os, rec);
  }
  write_manifest(dir, opt, cfg.hash);
  out << "reconstruct: psnr=" << csv::format(p) << " rel_max_error=" << csv::format(rel) << '\n';
  return kOk;
}

int cmd_sweep_schedule(const Options& opt, const fs::path& dir, std::ostream& out) {
  const Loaded cfg = load_config(opt);
  const Latent source = make_source(cfg.rc);
  const std::vector<AblationAxis> axes{
      {"schedule", {json("binary"), json("sigmoid"), json("cosine"), json("linear")}}};
  const auto rows = run_ablation_grid(source, cfg.rc.source_prompt, cfg.rc.target_prompt, cfg.rc.edit, axes);
  {
    auto os = open_out(dir, "sweep.csv");
    write_summary_header(os);
    for (auto row : rows) {
      row.summary.run_id = row.summary.schedule;
      write_summary_row(os, row.summary);
    }
  }
  {
    auto os = open_out(dir, "schedule_curves.csv");
    os << "step,family,weight\n";
    for (const auto& row : rows) {
      const InjectionSchedule s(row.config.schedule_params());
      for (int i = 0; i < s.total_steps(); ++i)
        os << i << ',' << to_string(s.family()) << ',' << csv::format(s.weight(i)) << '\n';
    }
  }
  write_manifest(dir, opt, cfg.hash);
  out << "sweep-schedule: " << rows.size() << " runs\n";
  return kOk;
}

int cmd_sweep_temperature(const Options& opt, const fs::path& dir, std::ostream& out) {
  if (opt.taus.empty()) throw ConfigError("taus: at least one value required");
  for (double t : opt.taus)
    if (!(t > 0.0) || !std::isfinite(t)) throw ConfigError("taus: every temperature must be positive");
  const Loaded cfg = load_config(opt);
  const Latent source = make_source(cfg.rc);
  std::vector<json> values;
  for (double t : opt.taus) values.emplace_back(t);
  const auto rows = run_ablation_grid(source, cfg.rc.source_prompt, cfg.rc.target_prompt, cfg.rc.edit,
                                      {{"tau", values}});
  {
    auto os = open_out(dir, "temperature.csv");
    os << "run_id,tau,variance";
    for (int c = 0; c < cfg.rc.edit.model.channels; ++c) os << ",alpha_" << c;
    os << '\n';
    for (const auto& row : rows) {
      os << row.run_id << ',' << csv::format(row.summary.tau) << ','
         << csv::format(population_variance(row.summary.channel_alpha));
      for (double a : row.summary.channel_alpha) os << ',' << csv::format(a);
      os << '\n';
    }
  }
  write_manifest(dir, opt, cfg.hash);
  out << "sweep-temperature: " << rows.size() << " runs\n";
  return kOk;
}

int cmd_ablate(const Options& opt, const fs::path& dir, std::ostream& out) {
  Loaded cfg = load_config(opt);
  std::vector<AblationAxis> axes = cfg.rc.ablation_axes;
  for (const auto& spec : opt.axes) {
    const auto eq = spec.find('=');
    if (eq == std::string::npos || eq == 0) throw ConfigError("axis '" + spec + "': expected field=v1,v2,...");
    AblationAxis axis{spec.substr(0, eq), {}};
    for (const auto& raw : csv::split(spec.substr(eq + 1))) {
      json v = json::parse(raw, nullptr, false);
      axis.values.push_back(v.is_discarded() ? json(raw) : v);
    }
    axes.push_back(std::move(axis));
  }
  const Latent source = make_source(cfg.rc);
  const auto rows = run_ablation_grid(source, cfg.rc.source_prompt, cfg.rc.target_prompt, cfg.rc.edit, axes);
  {
    auto os = open_out(dir, "ablation.csv");
    write_summary_header(os);
    for (const auto& row : rows) write_summary_row(os, row.summary);
  }
  {
    auto os = open_out(dir, "ablation_axes.csv");
    os << "run_id,field,value\n";
    for (const auto& row : rows)
      for (const auto& [field, value] : row.assignment)
        os << row.run_id << ',' << field << ',' << (value.is_string() ? value.get<std::string>() : value.dump()) << '\n';
  }
  write_manifest(dir, opt, cfg.hash);
  out << "ablate: " << rows.size() << " runs\n";
  return kOk;
}

int cmd_solver_order(const Options& opt, const fs::path& dir, std::ostream& out) {
  const AnalyticLinearFlow flow(-1.0, {0.0, 0.0});
  const Latent z0(1, 4, 2, std::vector<double>(8, 1.0));
  const std::vector<int> ladder{10, 20, 40};
  const SolverKind kinds[] = {SolverKind::kEuler, SolverKind::kMidpoint, SolverKind::kReuseVelocity};

  auto endpoint_error = [&](SolverKind k, int T) {
    const Trajectory tr = integrate_forward(flow, z0, TimeGrid::uniform(T), k, Conditioning{});
    const Latent exact = flow.exact(z0, 0.0, 1.0);
    double e = 0.0;
    for (std::size_t i = 0; i < exact.size(); ++i)
      e = std::max(e, std::abs(tr.final_forward().data()[i] - exact.data()[i]));
    return e;
  };

  bool ok = true;
  auto os = open_out(dir, "orders.csv");
  os << "solver,order,error_t10,error_t20,error_t40,error_t15\n";
  for (SolverKind k : kinds) {
    std::vector<double> errs;
    for (int T : ladder) errs.push_back(endpoint_error(k, T));
    const double order = fitted_order(ladder, errs);
    os << to_string(k) << ',' << csv::format(order) << ',' << csv::format(errs[0]) << ','
       << csv::format(errs[1]) << ',' << csv::format(errs[2]) << ',' << csv::format(endpoint_error(k, 15)) << '\n';
    out << "solver-order: " << to_string(k) << " order=" << csv::format(order) << '\n';
    if (k == SolverKind::kEuler && std::abs(order - 1.0) > 0.3) ok = false;
    if (k == SolverKind::kMidpoint && std::abs(order - 2.0) > 0.3) ok = false;
  }
  os.close();
  write_manifest(dir, opt, config_hash(json::object()));
  return ok ? kOk : kCheckFailed;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"adaedit: adaptive injection editing on a desk-scale flow model"};
  app.require_subcommand(1);
  Options opt;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", opt.config_path, "Run config (JSON); defaults apply when omitted");
    sub->add_option("--out", opt.out_dir, "Output directory")->required();
    sub->add_option("--set", opt.overrides, "Override one field: key=value (repeatable)");
  };
  add_common(app.add_subcommand("edit", "Run one edit"));
  add_common(app.add_subcommand("reconstruct", "Invert and resample under the source prompt"));
  add_common(app.add_subcommand("sweep-schedule", "Compare binary/sigmoid/cosine/linear schedules"));
  auto* temp = app.add_subcommand("sweep-temperature", "One edit per channel temperature");
  add_common(temp);
  temp->add_option("--taus", opt.taus, "Temperatures")->delimiter(',');
  add_common(app.add_subcommand("solver-order", "Convergence orders on the analytic flow"));
  auto* ablate = app.add_subcommand("ablate", "Cartesian ablation grid");
  add_common(ablate);
  ablate->add_option("--axis", opt.axes, "Axis as field=v1,v2,... (repeatable)");

  std::vector<std::string> rev(args.rbegin(), args.rend());
  try {
    app.parse(rev);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return kOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << '\n';
    return kConfigError;
  }
  opt.command = app.get_subcommands().front()->get_name();

  try {
    const fs::path dir(opt.out_dir);
    fs::create_directories(dir);
    if (opt.command == "edit") return cmd_edit(opt, dir, out);
    if (opt.command == "reconstruct") return cmd_reconstruct(opt, dir, out);
    if (opt.command == "sweep-schedule") return cmd_sweep_schedule(opt, dir, out);
    if (opt.command == "sweep-temperature") return cmd_sweep_temperature(opt, dir, out);
    if (opt.command == "solver-order") return cmd_solver_order(opt, dir, out);
    if (opt.command == "ablate") return cmd_ablate(opt, dir, out);
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return kConfigError;
  } catch (const DivergenceError& e) {
    err << "divergence: " << e.what() << '\n';
    return kRuntimeError;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kRuntimeError;
  }
  return kConfigError;
}

}  // namespace adaedit::cli
