#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <set>
#include <utility>
#include <vector>

#include "adaedit/kernels.hpp"
#include "adaedit/latent.hpp"

namespace adaedit {

struct Conditioning {
  std::vector<int> prompt_token_ids;
  int keyword_index = 0;
};

/// Soft per-image-token weights plus the hard edit set {soft >= 0.5}.
struct EditMask {
  std::vector<double> soft;
  IndexSet hard;
};

struct KVEntry {
  Matrix k;
  Matrix v;
};

/// Cached attention keys/values keyed by (sampling step, layer).
class KVCache {
 public:
  /// Throws StateError when the key already exists.
  void put(int step, int layer, Matrix k, Matrix v);
  /// Throws CacheMissError when absent.
  const KVEntry& get(int step, int layer) const;
  bool contains(int step, int layer) const;
  std::set<int> steps() const;
  std::size_t size() const noexcept { return entries_.size(); }
  /// Copy holding only the listed steps.
  KVCache subset(const std::set<int>& steps) const;
  /// Test hook: overwrite every cached value with `value`.
  void fill(double value);

 private:
  std::map<std::pair<int, int>, KVEntry> entries_;
};

/// Running sum of text-query -> image-key attention, averaged on read.
struct AttentionRecord {
  Matrix sums;  // text_tokens x img_tokens
  long count = 0;

  AttentionRecord() = default;
  AttentionRecord(int text_tokens, int img_tokens) : sums(text_tokens, img_tokens) {}
  bool empty() const noexcept { return count == 0; }
};

enum class HookMode { kOff, kRecord, kInject };

struct InjectionHooks {
  HookMode mode = HookMode::kOff;
  KVCache* cache = nullptr;
  int step = 0;
  std::vector<double> mix_ratios;  // one per layer, inject mode only
  const EditMask* background_mask = nullptr;
  bool global_mix = false;
  AttentionRecord* attention = nullptr;  // accumulated in any mode when set
};

class VelocityField {
 public:
  virtual ~VelocityField() = default;
  /// Velocity at (z, t). Must be deterministic in its inputs.
  virtual Latent evaluate(const Latent& z, double t, const Conditioning& cond,
                          const InjectionHooks& hooks) const = 0;
};

/// v(z, t) = a z + b with b broadcast over tokens. Has a closed-form flow and
/// serves as the solver oracle.
class AnalyticLinearFlow final : public VelocityField {
 public:
  AnalyticLinearFlow(double decay, std::vector<double> drift);

  Latent evaluate(const Latent& z, double t, const Conditioning& cond,
                  const InjectionHooks& hooks) const override;
  Latent evaluate(const Latent& z) const;
  /// Exact state at t1 starting from x0 at t0.
  Latent exact(const Latent& x0, double t0, double t1) const;

  double decay() const noexcept { return a_; }
  const std::vector<double>& drift() const noexcept { return b_; }

 private:
  double a_;
  std::vector<double> b_;
};

struct ToyModelConfig {
  int layers = 2;
  int embed_dim = 32;
  int heads = 1;
  int img_tokens = 16;
  int text_tokens = 4;
  int channels = 8;
  int vocab = 32;
  int time_frequencies = 8;
  std::uint64_t seed = 0;
};

/// Image rows come first, then text rows, inside every batch block.
struct TokenLayout {
  int img_tokens = 0;
  int text_tokens = 0;
  int total() const noexcept { return img_tokens + text_tokens; }
};

/// Small single-stream attention network with fixed seeded weights. Image
/// tokens (the latent) and prompt tokens attend jointly; every layer's K/V
/// pass through the injection hooks before attention.
class ToyAttentionFlow final : public VelocityField {
 public:
  explicit ToyAttentionFlow(const ToyModelConfig& cfg);

  Latent evaluate(const Latent& z, double t, const Conditioning& cond,
                  const InjectionHooks& hooks) const override;

  const ToyModelConfig& config() const noexcept { return cfg_; }
  TokenLayout layout() const noexcept { return {cfg_.img_tokens, cfg_.text_tokens}; }
  void validate(const Conditioning& cond) const;

 private:
  struct Layer {
    Matrix wq, wk, wv, wo;
  };

  Matrix embed(const Latent& z, int batch, double t, const Conditioning& cond) const;

  ToyModelConfig cfg_;
  Matrix w_in_;     // C x D
  Matrix pos_;      // L_img x D
  Matrix tokens_;   // vocab x D
  Matrix w_time_;   // 2F x D
  std::vector<Layer> layers_;
  Matrix w_out_;    // D x C
  std::vector<double> b_out_;
};

/// ratio * src + (1 - ratio) * tgt. With global_mix every row is blended;
/// otherwise image rows use ratio * (1 - soft) and text rows keep tgt.
std::pair<Matrix, Matrix> kv_mix(const Matrix& k_src, const Matrix& v_src, const Matrix& k_tgt,
                                 const Matrix& v_tgt, double ratio, const EditMask* mask,
                                 bool global_mix, TokenLayout layout);

/// Soft mask sigma(gamma (A - mean A)) from the keyword's min-max normalized
/// attention. Without gamma the sharp limit is used (1 above the mean, 0.5 at
/// it, 0 below).
EditMask extract_mask(const ToyAttentionFlow& f, const AttentionRecord& record,
                      const Conditioning& cond, std::optional<double> gamma);

/// CSV `token,soft,hard`.
void write_mask_csv(std::ostream& os, const EditMask& m);

}  // namespace adaedit
