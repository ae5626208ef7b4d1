#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "adaedit/pipeline.hpp"

namespace adaedit {

struct AblationAxis {
  std::string field;
  std::vector<nlohmann::json> values;
};

/// Everything a CLI run needs: the edit configuration plus the synthetic
/// source and the two prompts.
struct RunConfig {
  EditConfig edit;
  std::uint64_t source_seed = 1;
  Conditioning source_prompt{{1, 2, 3, 4}, 1};
  Conditioning target_prompt{{1, 5, 3, 4}, 1};
  std::vector<AblationAxis> ablation_axes;
};

/// Parses a run config. Missing fields keep their defaults; unknown fields
/// and out-of-domain values raise ConfigError naming the field.
RunConfig run_config_from_json(const nlohmann::json& j);
nlohmann::json to_json(const RunConfig& rc);
nlohmann::json to_json(const EditConfig& cfg);

/// Applies `key=value` to a config document. Dotted keys address nested
/// objects (model.channels); the value is parsed as JSON when possible and
/// taken as a string otherwise.
void apply_override(nlohmann::json& doc, std::string_view assignment);
void set_field(nlohmann::json& doc, std::string_view key, const nlohmann::json& value);

/// FNV-1a 64 over the canonical (sorted-key, compact) dump, as 16 hex digits.
std::string config_hash(const nlohmann::json& doc);

struct AblationRow {
  std::string run_id;
  std::vector<std::pair<std::string, nlohmann::json>> assignment;
  EditConfig config;
  RunSummary summary;
};

/// Cartesian product over the axes (first axis varies slowest), one run_edit
/// per combination. Rows are returned in product order whatever order the
/// parallel runs finish in.
std::vector<AblationRow> run_ablation_grid(const Latent& source, const Conditioning& c_src,
                                           const Conditioning& c_tgt, const EditConfig& base,
                                           const std::vector<AblationAxis>& axes);

}  // namespace adaedit
