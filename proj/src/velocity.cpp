#include "adaedit/velocity.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <string>

#include "adaedit/csv.hpp"
#include "adaedit/errors.hpp"

namespace adaedit {

namespace {

Matrix random_matrix(SeededRng& rng, int rows, int cols, double scale) {
  Matrix m(rows, cols);
  for (double& x : m.data) x = scale * rng.normal();
  return m;
}

Matrix take_rows(const Matrix& m, int first, int count) {
  Matrix out(count, m.cols);
  std::copy_n(m.data.begin() + static_cast<std::ptrdiff_t>(first) * m.cols,
              static_cast<std::size_t>(count) * m.cols, out.data.begin());
  return out;
}

void put_rows(Matrix& dst, int first, const Matrix& src) {
  std::copy(src.data.begin(), src.data.end(),
            dst.data.begin() + static_cast<std::ptrdiff_t>(first) * dst.cols);
}

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

}  // namespace

// ---- KVCache ---------------------------------------------------------------

void KVCache::put(int step, int layer, Matrix k, Matrix v) {
  auto [it, inserted] = entries_.try_emplace({step, layer}, KVEntry{std::move(k), std::move(v)});
  if (!inserted)
    throw StateError("kv cache already holds step " + std::to_string(step) + ", layer " +
                     std::to_string(layer));
}

const KVEntry& KVCache::get(int step, int layer) const {
  auto it = entries_.find({step, layer});
  if (it == entries_.end())
    throw CacheMissError("kv cache miss at step " + std::to_string(step) + ", layer " +
                         std::to_string(layer));
  return it->second;
}

bool KVCache::contains(int step, int layer) const { return entries_.count({step, layer}) != 0; }

std::set<int> KVCache::steps() const {
  std::set<int> out;
  for (const auto& [key, _] : entries_) out.insert(key.first);
  return out;
}

KVCache KVCache::subset(const std::set<int>& steps) const {
  KVCache out;
  for (const auto& [key, e] : entries_)
    if (steps.count(key.first)) out.entries_.emplace(key, e);
  return out;
}

void KVCache::fill(double value) {
  for (auto& [_, e] : entries_) {
    std::fill(e.k.data.begin(), e.k.data.end(), value);
    std::fill(e.v.data.begin(), e.v.data.end(), value);
  }
}

// ---- AnalyticLinearFlow ----------------------------------------------------

AnalyticLinearFlow::AnalyticLinearFlow(double decay, std::vector<double> drift)
    : a_(decay), b_(std::move(drift)) {
  if (b_.empty()) throw ShapeError("analytic flow: drift must have at least one channel");
}

Latent AnalyticLinearFlow::evaluate(const Latent& z, double, const Conditioning&,
                                    const InjectionHooks&) const {
  return evaluate(z);
}

Latent AnalyticLinearFlow::evaluate(const Latent& z) const {
  if (z.channels() != static_cast<int>(b_.size())) throw ShapeError("analytic flow: channel mismatch");
  Latent v = z;
  for (int b = 0; b < z.batch(); ++b)
    for (int l = 0; l < z.tokens(); ++l)
      for (int c = 0; c < z.channels(); ++c) v.at(b, l, c) = a_ * z.at(b, l, c) + b_[c];
  return v;
}

Latent AnalyticLinearFlow::exact(const Latent& x0, double t0, double t1) const {
  if (x0.channels() != static_cast<int>(b_.size())) throw ShapeError("analytic flow: channel mismatch");
  const double dt = t1 - t0;
  const double g = std::exp(a_ * dt);
  Latent x = x0;
  for (int b = 0; b < x.batch(); ++b)
    for (int l = 0; l < x.tokens(); ++l)
      for (int c = 0; c < x.channels(); ++c) {
        const double drift = a_ == 0.0 ? b_[c] * dt : (b_[c] / a_) * (g - 1.0);
        x.at(b, l, c) = g * x0.at(b, l, c) + drift;
      }
  return x;
}

// ---- ToyAttentionFlow ------------------------------------------------------

ToyAttentionFlow::ToyAttentionFlow(const ToyModelConfig& cfg) : cfg_(cfg) {
  if (cfg_.layers < 1 || cfg_.embed_dim < 1 || cfg_.heads < 1 || cfg_.img_tokens < 1 ||
      cfg_.text_tokens < 1 || cfg_.channels < 1 || cfg_.vocab < 1 || cfg_.time_frequencies < 1)
    throw ConfigError("model dimensions must be positive");
  if (cfg_.embed_dim % cfg_.heads != 0) throw ConfigError("model.embed_dim must be divisible by model.heads");

  SeededRng rng(cfg_.seed);
  const int D = cfg_.embed_dim;
  const double sd = 1.0 / std::sqrt(static_cast<double>(D));
  w_in_ = random_matrix(rng, cfg_.channels, D, 1.0 / std::sqrt(static_cast<double>(cfg_.channels)));
  pos_ = random_matrix(rng, cfg_.img_tokens, D, 0.5);
  tokens_ = random_matrix(rng, cfg_.vocab, D, 1.0);
  w_time_ = random_matrix(rng, 2 * cfg_.time_frequencies, D,
                          1.0 / std::sqrt(2.0 * cfg_.time_frequencies));
  for (int l = 0; l < cfg_.layers; ++l) {
    Layer layer;
    layer.wq = random_matrix(rng, D, D, sd);
    layer.wk = random_matrix(rng, D, D, sd);
    layer.wv = random_matrix(rng, D, D, sd);
    layer.wo = random_matrix(rng, D, D, sd);
    layers_.push_back(std::move(layer));
  }
  w_out_ = random_matrix(rng, D, cfg_.channels, sd);
  b_out_.resize(cfg_.channels);
  for (double& b : b_out_) b = 0.1 * rng.normal();
}

void ToyAttentionFlow::validate(const Conditioning& cond) const {
  if (static_cast<int>(cond.prompt_token_ids.size()) != cfg_.text_tokens)
    throw ShapeError("conditioning must hold exactly " + std::to_string(cfg_.text_tokens) + " tokens");
  for (int id : cond.prompt_token_ids)
    if (id < 0 || id >= cfg_.vocab) throw IndexError("prompt token id " + std::to_string(id) + " outside vocabulary");
  if (cond.keyword_index < 0 || cond.keyword_index >= cfg_.text_tokens)
    throw IndexError("keyword index out of range");
}

Matrix ToyAttentionFlow::embed(const Latent& z, int batch, double t, const Conditioning& cond) const {
  const int D = cfg_.embed_dim;
  const int F = cfg_.time_frequencies;
  Matrix feats(1, 2 * F);
  for (int k = 0; k < F; ++k) {
    const double w = static_cast<double>(k + 1);
    feats(0, k) = std::sin(w * t);
    feats(0, F + k) = std::cos(w * t);
  }
  const Matrix temb = kernels::matmul(feats, w_time_);

  Matrix img(cfg_.img_tokens, cfg_.channels);
  for (int l = 0; l < cfg_.img_tokens; ++l)
    for (int c = 0; c < cfg_.channels; ++c) img(l, c) = z.at(batch, l, c);
  const Matrix proj = kernels::matmul(img, w_in_);

  Matrix x(cfg_.img_tokens + cfg_.text_tokens, D);
  for (int l = 0; l < cfg_.img_tokens; ++l)
    for (int d = 0; d < D; ++d) x(l, d) = proj(l, d) + pos_(l, d) + temb(0, d);
  for (int j = 0; j < cfg_.text_tokens; ++j) {
    const int id = cond.prompt_token_ids[j];
    for (int d = 0; d < D; ++d) x(cfg_.img_tokens + j, d) = tokens_(id, d) + temb(0, d);
  }
  return x;
}

Latent ToyAttentionFlow::evaluate(const Latent& z, double t, const Conditioning& cond,
                                  const InjectionHooks& hooks) const {
  if (z.tokens() != cfg_.img_tokens || z.channels() != cfg_.channels)
    throw ShapeError("toy model expects latents of shape (B, " + std::to_string(cfg_.img_tokens) +
                     ", " + std::to_string(cfg_.channels) + ")");
  validate(cond);
  if (hooks.mode != HookMode::kOff && hooks.cache == nullptr)
    throw StateError("injection hooks need a cache");
  if (hooks.mode == HookMode::kInject && static_cast<int>(hooks.mix_ratios.size()) != cfg_.layers)
    throw StateError("inject mode needs one mix ratio per layer");

  const int B = z.batch();
  const int Lt = cfg_.img_tokens + cfg_.text_tokens;
  const int D = cfg_.embed_dim;

  std::vector<Matrix> xs;
  xs.reserve(B);
  for (int b = 0; b < B; ++b) xs.push_back(embed(z, b, t, cond));

  for (int l = 0; l < cfg_.layers; ++l) {
    const Layer& layer = layers_[l];
    Matrix k_all(B * Lt, D), v_all(B * Lt, D);
    std::vector<Matrix> qs(B), xn(B);
    for (int b = 0; b < B; ++b) {
      xn[b] = kernels::rms_norm_rows(xs[b]);
      qs[b] = kernels::matmul(xn[b], layer.wq);
      put_rows(k_all, b * Lt, kernels::matmul(xn[b], layer.wk));
      put_rows(v_all, b * Lt, kernels::matmul(xn[b], layer.wv));
    }

    if (hooks.mode == HookMode::kRecord) {
      hooks.cache->put(hooks.step, l, k_all, v_all);
    } else if (hooks.mode == HookMode::kInject) {
      const KVEntry& src = hooks.cache->get(hooks.step, l);
      if (src.k.rows != k_all.rows || src.k.cols != k_all.cols)
        throw ShapeError("cached K/V shape does not match the current batch");
      const double ratio = hooks.mix_ratios[l];
      if (ratio > 0.0) {
        auto mixed = kv_mix(src.k, src.v, k_all, v_all, ratio, hooks.background_mask,
                            hooks.global_mix, layout());
        k_all = std::move(mixed.first);
        v_all = std::move(mixed.second);
      }
    }

    for (int b = 0; b < B; ++b) {
      const AttentionOutput att = kernels::attention(qs[b], take_rows(k_all, b * Lt, Lt),
                                                     take_rows(v_all, b * Lt, Lt), cfg_.heads);
      if (hooks.attention != nullptr) {
        AttentionRecord& rec = *hooks.attention;
        for (const Matrix& p : att.probs) {
          for (int j = 0; j < cfg_.text_tokens; ++j)
            for (int i = 0; i < cfg_.img_tokens; ++i) rec.sums(j, i) += p(cfg_.img_tokens + j, i);
          ++rec.count;
        }
      }
      const Matrix update = kernels::matmul(att.out, layer.wo);
      for (std::size_t i = 0; i < update.data.size(); ++i) xs[b].data[i] += update.data[i];
    }
  }

  Latent v(B, cfg_.img_tokens, cfg_.channels);
  for (int b = 0; b < B; ++b) {
    const Matrix out = kernels::matmul(take_rows(xs[b], 0, cfg_.img_tokens), w_out_);
    for (int l = 0; l < cfg_.img_tokens; ++l)
      for (int c = 0; c < cfg_.channels; ++c) v.at(b, l, c) = out(l, c) + b_out_[c];
  }
  return v;
}

// ---- KV-Mix / mask ---------------------------------------------------------

std::pair<Matrix, Matrix> kv_mix(const Matrix& k_src, const Matrix& v_src, const Matrix& k_tgt,
                                 const Matrix& v_tgt, double ratio, const EditMask* mask,
                                 bool global_mix, TokenLayout layout) {
  if (!(ratio >= 0.0 && ratio <= 1.0)) throw DomainError("kv_mix: ratio must lie in [0, 1]");
  if (k_src.rows != k_tgt.rows || k_src.cols != k_tgt.cols || v_src.rows != v_tgt.rows ||
      v_src.cols != v_tgt.cols || k_src.rows != v_src.rows)
    throw ShapeError("kv_mix: shape mismatch");
  const int Lt = layout.total();
  if (Lt <= 0 || k_src.rows % Lt != 0) throw ShapeError("kv_mix: rows are not whole token blocks");
  if (mask != nullptr && static_cast<int>(mask->soft.size()) != layout.img_tokens)
    throw ShapeError("kv_mix: mask length differs from image token count");

  Matrix k = k_tgt;
  Matrix v = v_tgt;
  for (int r = 0; r < k_src.rows; ++r) {
    const int tok = r % Lt;
    double w = ratio;
    if (!global_mix) {
      if (tok >= layout.img_tokens) continue;
      if (mask != nullptr) w = ratio * (1.0 - mask->soft[tok]);
    }
    for (int d = 0; d < k.cols; ++d) k(r, d) = w * k_src(r, d) + (1.0 - w) * k_tgt(r, d);
    for (int d = 0; d < v.cols; ++d) v(r, d) = w * v_src(r, d) + (1.0 - w) * v_tgt(r, d);
  }
  return {std::move(k), std::move(v)};
}

EditMask extract_mask(const ToyAttentionFlow& f, const AttentionRecord& record,
                      const Conditioning& cond, std::optional<double> gamma) {
  if (record.empty()) throw StateError("extract_mask: no attention was recorded");
  const int L = f.config().img_tokens;
  if (cond.keyword_index < 0 || cond.keyword_index >= record.sums.rows)
    throw IndexError("extract_mask: keyword index out of range");
  if (record.sums.cols != L) throw ShapeError("extract_mask: record width differs from model");
  if (gamma && !(*gamma > 0.0)) throw DomainError("soft mask gamma must be positive");

  std::vector<double> a(L);
  for (int i = 0; i < L; ++i) a[i] = record.sums(cond.keyword_index, i) / static_cast<double>(record.count);
  const auto [lo, hi] = std::minmax_element(a.begin(), a.end());
  const double mn = *lo, range = *hi - *lo;
  for (double& x : a) x = range > 0.0 ? (x - mn) / range : 0.0;
  double thr = 0.0;
  for (double x : a) thr += x;
  thr /= L;

  EditMask m;
  m.soft.resize(L);
  for (int i = 0; i < L; ++i) {
    const double diff = a[i] - thr;
    if (gamma) {
      m.soft[i] = sigmoid(*gamma * diff);
    } else {
      m.soft[i] = diff > 0.0 ? 1.0 : (diff < 0.0 ? 0.0 : 0.5);
    }
    if (m.soft[i] >= 0.5) m.hard.push_back(i);
  }
  return m;
}

void write_mask_csv(std::ostream& os, const EditMask& m) {
  os << "token,soft,hard\n";
  std::size_t h = 0;
  for (std::size_t i = 0; i < m.soft.size(); ++i) {
    const bool in = h < m.hard.size() && m.hard[h] == static_cast<int>(i);
    if (in) ++h;
    os << i << ',' << csv::format(m.soft[i]) << ',' << (in ? 1 : 0) << '\n';
  }
}

}  // namespace adaedit
