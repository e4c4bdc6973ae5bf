#include <cmath>

#include "homsusp/error.hpp"
#include "homsusp/forces.hpp"

namespace homsusp {

namespace {

constexpr std::uint32_t kM0 = 0xD2511F53u, kM1 = 0xCD9E8D57u;
constexpr std::uint32_t kW0 = 0x9E3779B9u, kW1 = 0xBB67AE85u;

void mulhilo(std::uint32_t a, std::uint32_t b, std::uint32_t& hi, std::uint32_t& lo) {
  const std::uint64_t p = static_cast<std::uint64_t>(a) * b;
  hi = static_cast<std::uint32_t>(p >> 32);
  lo = static_cast<std::uint32_t>(p);
}

double to_unit(std::uint32_t hi, std::uint32_t lo) {
  const std::uint64_t v = ((static_cast<std::uint64_t>(hi) << 32) | lo) >> 11;
  return (static_cast<double>(v) + 0.5) * 0x1.0p-53;
}

}  // namespace

std::array<std::uint32_t, 4> philox4x32(std::array<std::uint32_t, 4> c, std::array<std::uint32_t, 2> k) {
  for (int round = 0; round < 10; ++round) {
    if (round > 0) {
      k[0] += kW0;
      k[1] += kW1;
    }
    std::uint32_t hi0, lo0, hi1, lo1;
    mulhilo(kM0, c[0], hi0, lo0);
    mulhilo(kM1, c[2], hi1, lo1);
    c = {hi1 ^ c[1] ^ k[0], lo1, hi0 ^ c[3] ^ k[1], lo0};
  }
  return c;
}

std::array<double, 2> philox_uniforms(std::uint64_t seed, std::array<std::uint32_t, 4> counter) {
  const auto r = philox4x32(counter, {static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)});
  return {to_unit(r[0], r[1]), to_unit(r[2], r[3])};
}

AmplitudeLaw AmplitudeLaw::uniform(double lo, double hi) {
  AmplitudeLaw l;
  l.kind = Kind::Uniform;
  l.lo = lo;
  l.hi = hi;
  l.validate();
  return l;
}

AmplitudeLaw AmplitudeLaw::lognormal(double mu_ln, double sigma_ln) {
  AmplitudeLaw l;
  l.kind = Kind::LogNormal;
  l.mu_ln = mu_ln;
  l.sigma_ln = sigma_ln;
  l.validate();
  return l;
}

double AmplitudeLaw::mean() const {
  if (kind == Kind::Uniform) return 0.5 * (lo + hi);
  return std::exp(mu_ln + 0.5 * sigma_ln * sigma_ln);
}

double AmplitudeLaw::stddev() const {
  if (kind == Kind::Uniform) return (hi - lo) / std::sqrt(12.0);
  return std::sqrt(std::expm1(sigma_ln * sigma_ln)) * mean();
}

double AmplitudeLaw::sample(double u1, double u2) const {
  if (kind == Kind::Uniform) return lo + (hi - lo) * u1;
  const double z = std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * kPi * u2);
  return std::exp(mu_ln + sigma_ln * z);
}

void AmplitudeLaw::validate() const {
  if (kind == Kind::Uniform)
    require(std::isfinite(lo) && std::isfinite(hi) && lo >= 0.0 && hi >= lo, ErrorCode::InvalidArgument,
            "uniform amplitude law needs 0 <= lo <= hi");
  else
    require(std::isfinite(mu_ln) && std::isfinite(sigma_ln) && sigma_ln >= 0.0, ErrorCode::InvalidArgument,
            "lognormal amplitude law needs sigma_ln >= 0");
}

RandomCellField::RandomCellField(std::uint64_t seed, AmplitudeLaw law) : seed_(seed), law_(law) {
  law_.validate();
}

double RandomCellField::amplitude(const LatticeIndex& k) const {
  const auto x = static_cast<std::uint32_t>(static_cast<std::int32_t>(k.x + offset_.x));
  const auto y = static_cast<std::uint32_t>(static_cast<std::int32_t>(k.y + offset_.y));
  const auto u = philox_uniforms(seed_, {x, y, 0u, 0u});
  return law_.sample(u[0], u[1]);
}

RandomCellField RandomCellField::shifted(const LatticeIndex& l) const {
  RandomCellField f = *this;
  f.offset_.x += l.x;
  f.offset_.y += l.y;
  return f;
}

double RandomCellField::draw(std::uint64_t j, std::uint32_t stream) const {
  require(stream != 0, ErrorCode::InvalidArgument, "stream 0 is reserved for the cell amplitudes");
  const auto u = philox_uniforms(
      seed_, {static_cast<std::uint32_t>(j), static_cast<std::uint32_t>(j >> 32), stream, 0u});
  return law_.sample(u[0], u[1]);
}

double pairwise_sum(const std::vector<double>& values) {
  auto rec = [&](auto&& self, std::size_t lo, std::size_t hi) -> double {
    if (hi - lo <= 16) {
      double s = 0.0;
      for (std::size_t i = lo; i < hi; ++i) s += values[i];
      return s;
    }
    const std::size_t mid = lo + (hi - lo) / 2;
    return self(self, lo, mid) + self(self, mid, hi);
  };
  return rec(rec, 0, values.size());
}

}  // namespace homsusp
