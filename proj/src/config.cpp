#include "adaedit/config.hpp"

#include <cstdio>
#include <exception>
#include <set>

#include "adaedit/errors.hpp"

namespace adaedit {

using nlohmann::json;

namespace {

const std::set<std::string> kEditKeys = {
    "total_steps", "injection_steps", "schedule",       "sharpness",        "midpoint",
    "activity_threshold", "delta_base", "alpha",         "tau",              "solver",
    "perturbation", "soft_mask_gamma", "layer_ratio_beta", "global_mix",     "mask_keyword",
    "seed",         "model"};
const std::set<std::string> kRunKeys = {"source_seed", "source_prompt", "target_prompt", "ablation_axes"};
const std::set<std::string> kModelKeys = {"layers",     "embed_dim", "heads", "img_tokens",      "text_tokens",
                                          "channels",   "vocab",     "time_frequencies", "seed"};

template <class T>
void read(const json& j, const char* key, const std::string& path, T& out) {
  auto it = j.find(key);
  if (it == j.end()) return;
  try {
    out = it->template get<T>();
  } catch (const json::exception&) {
    throw ConfigError(path + key + ": wrong type");
  }
}

template <class Parse, class T>
void read_enum(const json& j, const char* key, T& out, Parse parse) {
  auto it = j.find(key);
  if (it == j.end()) return;
  if (!it->is_string()) throw ConfigError(std::string(key) + ": expected a string");
  try {
    out = parse(it->template get<std::string>());
  } catch (const ConfigError& e) {
    throw ConfigError(std::string(key) + ": " + e.what());
  }
}

void reject_unknown(const json& j, const std::set<std::string>& a, const std::set<std::string>& b,
                    const std::string& path) {
  for (auto it = j.begin(); it != j.end(); ++it)
    if (!a.count(it.key()) && !b.count(it.key())) throw ConfigError(path + it.key() + ": unknown field");
}

void parse_edit(const json& j, EditConfig& cfg) {
  read(j, "total_steps", "", cfg.total_steps);
  read(j, "injection_steps", "", cfg.injection_steps);
  read_enum(j, "schedule", cfg.schedule, parse_schedule_family);
  read(j, "sharpness", "", cfg.sharpness);
  read(j, "midpoint", "", cfg.midpoint);
  read(j, "activity_threshold", "", cfg.activity_threshold);
  read(j, "delta_base", "", cfg.delta_base);
  read(j, "alpha", "", cfg.alpha);
  read(j, "tau", "", cfg.tau);
  read_enum(j, "solver", cfg.solver, parse_solver_kind);
  read_enum(j, "perturbation", cfg.perturbation, parse_perturbation_mode);
  if (auto it = j.find("soft_mask_gamma"); it != j.end()) {
    if (it->is_null()) {
      cfg.soft_mask_gamma.reset();
    } else if (it->is_number()) {
      cfg.soft_mask_gamma = it->get<double>();
    } else {
      throw ConfigError("soft_mask_gamma: expected a number or null");
    }
  }
  read(j, "layer_ratio_beta", "", cfg.layer_ratio_beta);
  read(j, "global_mix", "", cfg.global_mix);
  read_enum(j, "mask_keyword", cfg.mask_keyword, [](const std::string& s) {
    if (s == "source") return MaskKeyword::kSource;
    if (s == "target") return MaskKeyword::kTarget;
    throw ConfigError("expected 'source' or 'target'");
  });
  read(j, "seed", "", cfg.seed);
  if (auto it = j.find("model"); it != j.end()) {
    if (!it->is_object()) throw ConfigError("model: expected an object");
    reject_unknown(*it, kModelKeys, {}, "model.");
    auto& m = cfg.model;
    read(*it, "layers", "model.", m.layers);
    read(*it, "embed_dim", "model.", m.embed_dim);
    read(*it, "heads", "model.", m.heads);
    read(*it, "img_tokens", "model.", m.img_tokens);
    read(*it, "text_tokens", "model.", m.text_tokens);
    read(*it, "channels", "model.", m.channels);
    read(*it, "vocab", "model.", m.vocab);
    read(*it, "time_frequencies", "model.", m.time_frequencies);
    read(*it, "seed", "model.", m.seed);
  }
}

Conditioning parse_prompt(const json& j, const std::string& field, Conditioning cond) {
  if (!j.is_object()) throw ConfigError(field + ": expected an object");
  for (auto it = j.begin(); it != j.end(); ++it)
    if (it.key() != "tokens" && it.key() != "keyword") throw ConfigError(field + "." + it.key() + ": unknown field");
  read(j, "tokens", field + ".", cond.prompt_token_ids);
  read(j, "keyword", field + ".", cond.keyword_index);
  return cond;
}

void validate_prompt(const Conditioning& c, const ToyModelConfig& m, const std::string& field) {
  if (static_cast<int>(c.prompt_token_ids.size()) != m.text_tokens)
    throw ConfigError(field + ".tokens: expected " + std::to_string(m.text_tokens) + " token ids");
  for (int id : c.prompt_token_ids)
    if (id < 0 || id >= m.vocab) throw ConfigError(field + ".tokens: id outside [0, model.vocab)");
  if (c.keyword_index < 0 || c.keyword_index >= m.text_tokens)
    throw ConfigError(field + ".keyword: out of range");
}

json prompt_json(const Conditioning& c) { return {{"tokens", c.prompt_token_ids}, {"keyword", c.keyword_index}}; }

EditConfig edit_from_json(const json& j) {
  if (!j.is_object()) throw ConfigError("config: expected a JSON object");
  reject_unknown(j, kEditKeys, {}, "");
  EditConfig cfg;
  parse_edit(j, cfg);
  validate(cfg);
  return cfg;
}

}  // namespace

json to_json(const EditConfig& cfg) {
  json j;
  j["total_steps"] = cfg.total_steps;
  j["injection_steps"] = cfg.injection_steps;
  j["schedule"] = std::string(to_string(cfg.schedule));
  j["sharpness"] = cfg.sharpness;
  j["midpoint"] = cfg.midpoint;
  j["activity_threshold"] = cfg.activity_threshold;
  j["delta_base"] = cfg.delta_base;
  j["alpha"] = cfg.alpha;
  j["tau"] = cfg.tau;
  j["solver"] = std::string(to_string(cfg.solver));
  j["perturbation"] = std::string(to_string(cfg.perturbation));
  j["soft_mask_gamma"] = cfg.soft_mask_gamma ? json(*cfg.soft_mask_gamma) : json(nullptr);
  j["layer_ratio_beta"] = cfg.layer_ratio_beta;
  j["global_mix"] = cfg.global_mix;
  j["mask_keyword"] = cfg.mask_keyword == MaskKeyword::kTarget ? "target" : "source";
  j["seed"] = cfg.seed;
  const auto& m = cfg.model;
  j["model"] = {{"layers", m.layers},         {"embed_dim", m.embed_dim},   {"heads", m.heads},
                {"img_tokens", m.img_tokens}, {"text_tokens", m.text_tokens}, {"channels", m.channels},
                {"vocab", m.vocab},           {"time_frequencies", m.time_frequencies}, {"seed", m.seed}};
  return j;
}

json to_json(const RunConfig& rc) {
  json j = to_json(rc.edit);
  j["source_seed"] = rc.source_seed;
  j["source_prompt"] = prompt_json(rc.source_prompt);
  j["target_prompt"] = prompt_json(rc.target_prompt);
  json axes = json::array();
  for (const auto& a : rc.ablation_axes) axes.push_back({{"field", a.field}, {"values", a.values}});
  j["ablation_axes"] = axes;
  return j;
}

RunConfig run_config_from_json(const json& j) {
  if (!j.is_object()) throw ConfigError("config: expected a JSON object");
  reject_unknown(j, kEditKeys, kRunKeys, "");
  RunConfig rc;
  parse_edit(j, rc.edit);
  validate(rc.edit);
  read(j, "source_seed", "", rc.source_seed);
  if (auto it = j.find("source_prompt"); it != j.end())
    rc.source_prompt = parse_prompt(*it, "source_prompt", rc.source_prompt);
  if (auto it = j.find("target_prompt"); it != j.end())
    rc.target_prompt = parse_prompt(*it, "target_prompt", rc.target_prompt);
  validate_prompt(rc.source_prompt, rc.edit.model, "source_prompt");
  validate_prompt(rc.target_prompt, rc.edit.model, "target_prompt");
  if (auto it = j.find("ablation_axes"); it != j.end()) {
    if (!it->is_array()) throw ConfigError("ablation_axes: expected an array");
    for (const auto& a : *it) {
      if (!a.is_object() || !a.contains("field") || !a.contains("values") || !a["field"].is_string() ||
          !a["values"].is_array())
        throw ConfigError("ablation_axes: entries need a string 'field' and an array 'values'");
      AblationAxis axis{a["field"].get<std::string>(), {}};
      for (const auto& v : a["values"]) axis.values.push_back(v);
      rc.ablation_axes.push_back(std::move(axis));
    }
  }
  return rc;
}

void set_field(json& doc, std::string_view key, const json& value) {
  json* node = &doc;
  std::string k(key);
  std::size_t pos;
  while ((pos = k.find('.')) != std::string::npos) {
    const std::string head = k.substr(0, pos);
    if (!node->contains(head) || !(*node)[head].is_object()) (*node)[head] = json::object();
    node = &(*node)[head];
    k = k.substr(pos + 1);
  }
  if (k.empty()) throw ConfigError("override: empty field name");
  (*node)[k] = value;
}

void apply_override(json& doc, std::string_view assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string_view::npos || eq == 0)
    throw ConfigError("override '" + std::string(assignment) + "': expected key=value");
  const std::string key(assignment.substr(0, eq));
  const std::string raw(assignment.substr(eq + 1));
  json value = json::parse(raw, nullptr, false);
  if (value.is_discarded()) value = raw;
  set_field(doc, key, value);
}

std::string config_hash(const json& doc) {
  const std::string canonical = doc.dump();
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char ch : canonical) {
    h ^= ch;
    h *= 0x100000001b3ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::vector<AblationRow> run_ablation_grid(const Latent& source, const Conditioning& c_src,
                                           const Conditioning& c_tgt, const EditConfig& base,
                                           const std::vector<AblationAxis>& axes) {
  for (const auto& a : axes) {
    if (!kEditKeys.count(a.field.substr(0, a.field.find('.'))))
      throw ConfigError("ablation axis '" + a.field + "': unknown field");
    if (a.values.empty()) throw ConfigError("ablation axis '" + a.field + "': no values");
  }

  std::size_t total = 1;
  for (const auto& a : axes) total *= a.values.size();

  // Build and validate every configuration up front so config errors surface
  // before any run starts.
  std::vector<AblationRow> rows(total);
  const json base_doc = to_json(base);
  for (std::size_t r = 0; r < total; ++r) {
    json doc = base_doc;
    std::size_t rem = r;
    std::vector<std::size_t> idx(axes.size());
    for (std::size_t a = axes.size(); a-- > 0;) {
      idx[a] = rem % axes[a].values.size();
      rem /= axes[a].values.size();
    }
    for (std::size_t a = 0; a < axes.size(); ++a) {
      set_field(doc, axes[a].field, axes[a].values[idx[a]]);
      rows[r].assignment.emplace_back(axes[a].field, axes[a].values[idx[a]]);
    }
    char id[32];
    std::snprintf(id, sizeof id, "run_%03zu", r);
    rows[r].run_id = id;
    try {
      rows[r].config = edit_from_json(doc);
    } catch (const ConfigError& e) {
      throw ConfigError("ablation row " + rows[r].run_id + ": " + e.what());
    }
  }

  std::vector<std::exception_ptr> errors(total);
  const long n = static_cast<long>(total);
#pragma omp parallel for schedule(dynamic)
  for (long r = 0; r < n; ++r) {
    try {
      const EditResult res = run_edit(source, c_src, c_tgt, rows[r].config);
      rows[r].summary = summarize(rows[r].run_id, rows[r].config, res);
    } catch (...) {
      errors[r] = std::current_exception();
    }
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
  return rows;
}

}  // namespace adaedit
