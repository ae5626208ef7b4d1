#include "adaedit/latent.hpp"

#include <cmath>
#include <istream>
#include <numbers>
#include <ostream>
#include <sstream>
#include <string>

#include "adaedit/csv.hpp"
#include "adaedit/errors.hpp"

namespace adaedit {

namespace {

void check_dims(int b, int l, int c) {
  if (b < 1 || l < 1 || c < 1) {
    std::ostringstream msg;
    msg << "latent dimensions must be positive, got (" << b << "," << l << "," << c << ")";
    throw DimensionError(msg.str());
  }
}

std::uint64_t splitmix64(std::uint64_t& x) {
  std::uint64_t z = (x += 0x9E3779B97F4A7C15ull);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

constexpr std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }

}  // namespace

Latent::Latent(int b, int l, int c) : b_(b), l_(l), c_(c) {
  check_dims(b, l, c);
  data_.assign(static_cast<std::size_t>(b) * l * c, 0.0);
}

Latent::Latent(int b, int l, int c, std::vector<double> data)
    : b_(b), l_(l), c_(c), data_(std::move(data)) {
  check_dims(b, l, c);
  if (data_.size() != static_cast<std::size_t>(b) * l * c)
    throw ShapeError("latent data size does not match b*l*c");
  if (!all_finite()) throw DomainError("latent entries must be finite");
}

bool Latent::all_finite() const noexcept {
  for (double v : data_)
    if (!std::isfinite(v)) return false;
  return true;
}

double Latent::l2_norm() const noexcept {
  double acc = 0.0;
  for (double v : data_) acc += v * v;
  return std::sqrt(acc);
}

double Latent::max_abs() const noexcept {
  double m = 0.0;
  for (double v : data_) m = std::max(m, std::abs(v));
  return m;
}

void Latent::axpy(double scale, const Latent& other) {
  if (!same_shape(other)) throw ShapeError("axpy: shape mismatch");
  for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += scale * other.data_[i];
}

Latent Latent::plus_scaled(double scale, const Latent& other) const {
  Latent out = *this;
  out.axpy(scale, other);
  return out;
}

SeededRng::SeededRng(std::uint64_t seed) : seed_(seed) {
  std::uint64_t x = seed;
  for (auto& s : s_) s = splitmix64(x);
}

std::uint64_t SeededRng::next_u64() noexcept {
  const std::uint64_t result = rotl(s_[1] * 5, 7) * 9;
  const std::uint64_t t = s_[1] << 17;
  s_[2] ^= s_[0];
  s_[3] ^= s_[1];
  s_[1] ^= s_[2];
  s_[0] ^= s_[3];
  s_[2] ^= t;
  s_[3] = rotl(s_[3], 45);
  return result;
}

double SeededRng::uniform() noexcept {
  return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double SeededRng::normal() noexcept {
  if (spare_) {
    double v = *spare_;
    spare_.reset();
    return v;
  }
  double u1 = uniform();
  while (u1 <= 0.0) u1 = uniform();
  const double u2 = uniform();
  const double r = std::sqrt(-2.0 * std::log(u1));
  const double theta = 2.0 * std::numbers::pi * u2;
  spare_ = r * std::sin(theta);
  return r * std::cos(theta);
}

Latent sample_gaussian(SeededRng& rng, int b, int l, int c) {
  Latent z(b, l, c);
  for (double& v : z.data()) v = rng.normal();
  return z;
}

IndexSet all_tokens(int l) {
  IndexSet out(static_cast<std::size_t>(std::max(l, 0)));
  for (int i = 0; i < l; ++i) out[i] = i;
  return out;
}

void validate_tokens(const IndexSet& tokens, int l) {
  if (tokens.empty()) throw EmptySelectionError("token selection is empty");
  for (int t : tokens) {
    if (t < 0 || t >= l)
      throw IndexError("token index " + std::to_string(t) + " out of range [0, " +
                       std::to_string(l) + ")");
  }
}

ChannelStats channel_stats(const Latent& z, const std::optional<IndexSet>& tokens) {
  const IndexSet sel = tokens ? *tokens : all_tokens(z.tokens());
  validate_tokens(sel, z.tokens());
  const int C = z.channels();
  const double n = static_cast<double>(sel.size()) * z.batch();
  ChannelStats st{std::vector<double>(C, 0.0), std::vector<double>(C, 0.0)};
  for (int c = 0; c < C; ++c) {
    double sum = 0.0;
    for (int b = 0; b < z.batch(); ++b)
      for (int t : sel) sum += z.at(b, t, c);
    const double mean = sum / n;
    double ss = 0.0;
    for (int b = 0; b < z.batch(); ++b)
      for (int t : sel) {
        const double d = z.at(b, t, c) - mean;
        ss += d * d;
      }
    st.mean[c] = mean;
    st.std[c] = std::sqrt(ss / n);
  }
  return st;
}

std::vector<double> channel_mean_over(const Latent& z, const IndexSet& tokens) {
  return channel_stats(z, tokens).mean;
}

void write_latent_csv(std::ostream& os, const Latent& z) {
  os << "b,l,c,value\n";
  for (int b = 0; b < z.batch(); ++b)
    for (int l = 0; l < z.tokens(); ++l)
      for (int c = 0; c < z.channels(); ++c)
        os << b << ',' << l << ',' << c << ',' << csv::format(z.at(b, l, c)) << '\n';
}

Latent read_latent_csv(std::istream& is) {
  std::string line;
  if (!std::getline(is, line) || csv::split(line) != std::vector<std::string>{"b", "l", "c", "value"})
    throw ShapeError("latent csv: missing header b,l,c,value");
  struct Row { int b, l, c; double v; };
  std::vector<Row> rows;
  int B = 0, L = 0, C = 0;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    auto f = csv::split(line);
    if (f.size() != 4) throw ShapeError("latent csv: expected 4 fields");
    Row r{std::stoi(f[0]), std::stoi(f[1]), std::stoi(f[2]), csv::parse_double(f[3])};
    B = std::max(B, r.b + 1);
    L = std::max(L, r.l + 1);
    C = std::max(C, r.c + 1);
    rows.push_back(r);
  }
  Latent z(B, L, C);
  if (rows.size() != z.size()) throw ShapeError("latent csv: row count does not match dimensions");
  for (const auto& r : rows) z.at(r.b, r.l, r.c) = r.v;
  if (!z.all_finite()) throw DomainError("latent csv: non-finite value");
  return z;
}

}  // namespace adaedit
