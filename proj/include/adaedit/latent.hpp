#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <vector>

namespace adaedit {

using IndexSet = std::vector<int>;

/// Real tensor of shape B x L x C stored row-major (batch, then token, then
/// channel). Holds source latents, inverted noise, random noise and
/// velocities alike.
class Latent {
 public:
  Latent() = default;
  /// Zero-filled tensor. Throws DimensionError for non-positive dims.
  Latent(int b, int l, int c);
  /// Takes ownership of `data`; its size must be b*l*c and every entry finite.
  Latent(int b, int l, int c, std::vector<double> data);

  int batch() const noexcept { return b_; }
  int tokens() const noexcept { return l_; }
  int channels() const noexcept { return c_; }
  std::size_t size() const noexcept { return data_.size(); }

  double& at(int b, int l, int c) { return data_[offset(b, l, c)]; }
  double at(int b, int l, int c) const { return data_[offset(b, l, c)]; }

  std::span<double> data() noexcept { return data_; }
  std::span<const double> data() const noexcept { return data_; }

  bool same_shape(const Latent& other) const noexcept {
    return b_ == other.b_ && l_ == other.l_ && c_ == other.c_;
  }
  bool all_finite() const noexcept;
  double l2_norm() const noexcept;
  double max_abs() const noexcept;

  /// this += scale * other
  void axpy(double scale, const Latent& other);
  /// Returns this + scale * other.
  Latent plus_scaled(double scale, const Latent& other) const;

  friend bool operator==(const Latent&, const Latent&) = default;

 private:
  std::size_t offset(int b, int l, int c) const noexcept {
    return (static_cast<std::size_t>(b) * l_ + l) * c_ + c;
  }

  int b_ = 0;
  int l_ = 0;
  int c_ = 0;
  std::vector<double> data_;
};

/// xoshiro256** seeded through splitmix64. Normal deviates use the
/// Box-Muller transform on 53-bit uniforms, so streams depend only on this
/// file and not on the standard library's distribution implementations.
class SeededRng {
 public:
  explicit SeededRng(std::uint64_t seed);

  std::uint64_t next_u64() noexcept;
  /// Uniform in [0, 1).
  double uniform() noexcept;
  double normal() noexcept;

  std::uint64_t seed() const noexcept { return seed_; }

 private:
  std::uint64_t seed_;
  std::uint64_t s_[4];
  std::optional<double> spare_;
};

struct ChannelStats {
  std::vector<double> mean;
  std::vector<double> std;  // population standard deviation
};

/// Added to any standard deviation used as a divisor.
inline constexpr double kStdEpsilon = 1e-8;

Latent sample_gaussian(SeededRng& rng, int b, int l, int c);

/// Per-channel mean and population std over batch x tokens. When `tokens`
/// is absent every token participates.
ChannelStats channel_stats(const Latent& z,
                           const std::optional<IndexSet>& tokens = std::nullopt);

std::vector<double> channel_mean_over(const Latent& z, const IndexSet& tokens);

IndexSet all_tokens(int l);

/// Throws IndexError / EmptySelectionError on a bad selection.
void validate_tokens(const IndexSet& tokens, int l);

void write_latent_csv(std::ostream& os, const Latent& z);
Latent read_latent_csv(std::istream& is);

}  // namespace adaedit
