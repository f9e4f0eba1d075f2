#pragma once

#include <algorithm>
#include <atomic>
#include <functional>
#include <iostream>
#include <optional>
#include <span>
#include <vector>

#include "v2x/common.hpp"
#include "v2x/scenario.hpp"

namespace v2x {

// Linear intercept of the 2 GHz UMi power law: PL(dB) = 10*alpha*log10(d) - 10*log10(beta).
inline double umi_pathloss_intercept(double carrier_hz = 2e9) {
  const double fc_ghz = carrier_hz / 1e9;
  return std::pow(10.0, -(22.7 + 26.0 * std::log10(fc_ghz)) / 10.0);
}

struct RadioConfig {
  double max_power_w = dbm_to_watt(23.0);  // P
  double noise_psd_dbm_hz = -174.0;
  double subchannel_bandwidth_hz = 2e6;
  double carrier_hz = 2e9;
  double pathloss_exponent = 3.67;                    // alpha
  double pathloss_const = umi_pathloss_intercept();   // beta
  double rate_threshold = 2.0;                        // Rbar_th, bits/s/Hz
  double logistic_slope = 10.0;                       // eta
  double min_distance_m = 1.0;                        // clamp for pathloss at d -> 0
  // Optional table-based model hook; takes distance in meters, returns linear power gain.
  std::function<double(double)> pathloss_override;

  double noise_power_w() const {
    return dbm_to_watt(noise_psd_dbm_hz) * subchannel_bandwidth_hz;
  }

  void validate() const {
    if (max_power_w <= 0) throw ConfigError("radio: max_power_w must be > 0");
    if (pathloss_exponent <= 0) throw ConfigError("radio: pathloss_exponent must be > 0");
    if (pathloss_const <= 0) throw ConfigError("radio: pathloss_const must be > 0");
    if (rate_threshold <= 0) throw ConfigError("radio: rate_threshold must be > 0");
    if (logistic_slope <= 0) throw ConfigError("radio: logistic_slope must be > 0");
    if (subchannel_bandwidth_hz <= 0) throw ConfigError("radio: bandwidth must be > 0");
    if (min_distance_m <= 0) throw ConfigError("radio: min_distance_m must be > 0");
  }
};

// Linear power gain beta * d^(-alpha); d clamped to d_min.
inline double pathloss_gain(double d, double alpha, double beta, double d_min = 1.0) {
  if (d < d_min) {
    static std::atomic<bool> warned{false};
    if (!warned.exchange(true))
      std::cerr << "warning: pathloss distance " << d << " m clamped to " << d_min << " m\n";
    d = d_min;
  }
  return beta * std::pow(d, -alpha);
}

// Rayleigh fading power |h|^2 ~ Exp(1), i.i.d. per (unordered link, subchannel, slot),
// stateless so draws are order-independent across parallel workers.
class FadingField {
 public:
  explicit FadingField(std::uint64_t seed) : seed_(seed) {}

  double power_gain(UserId j, UserId m, ChannelId k, SlotId i) const {
    const UserId a = std::min(j, m);
    const UserId b = std::max(j, m);
    std::uint64_t key = seed_;
    key = mix_seed(key, static_cast<std::uint64_t>(a));
    key = mix_seed(key, static_cast<std::uint64_t>(b));
    key = mix_seed(key, static_cast<std::uint64_t>(k));
    key = mix_seed(key, static_cast<std::uint64_t>(i));
    const double u = u64_to_unit_open(splitmix64(key));
    return -std::log(u);
  }

 private:
  std::uint64_t seed_;
};

// Per-link channel view. With a fading field attached this is the truth channel
// (|H|^2 = |h|^2 * g); without one it is the BS partial-CSI view (|H|^2 = g).
class LinkModel {
 public:
  LinkModel(const Scenario& scn, RadioConfig radio)
      : scn_(&scn), radio_(std::move(radio)), noise_w_(radio_.noise_power_w()) {}

  LinkModel(const Scenario& scn, RadioConfig radio, std::uint64_t fading_seed)
      : LinkModel(scn, std::move(radio)) {
    fading_.emplace(fading_seed);
  }

  bool has_fading() const { return fading_.has_value(); }
  const RadioConfig& radio() const { return radio_; }
  const Scenario& scenario() const { return *scn_; }

  double path_gain(UserId j, UserId m, SlotId i) const {
    const double d = scn_->predict_distance(j, m, i);
    if (radio_.pathloss_override) return radio_.pathloss_override(std::max(d, radio_.min_distance_m));
    return pathloss_gain(d, radio_.pathloss_exponent, radio_.pathloss_const,
                         radio_.min_distance_m);
  }

  double channel_power_gain(UserId j, UserId m, ChannelId k, SlotId i) const {
    double g = path_gain(j, m, i);
    if (fading_) g *= fading_->power_gain(j, m, k, i);
    return g;
  }

  // rho_{j,m,k}^(i): SNR factor per watt of transmit power.
  double snr_factor(UserId j, UserId m, ChannelId k, SlotId i) const {
    return channel_power_gain(j, m, k, i) / noise_w_;
  }

 private:
  const Scenario* scn_;
  RadioConfig radio_;
  double noise_w_;
  std::optional<FadingField> fading_;
};

struct TxPower {
  UserId user;
  double power;
};

using SnrFactorFn = std::function<double(UserId)>;

// SIC order: decreasing channel gain, ties broken by ascending user id.
inline std::vector<UserId> sic_order(std::span<const TxPower> txs, const SnrFactorFn& rho) {
  std::vector<std::pair<double, UserId>> order;
  order.reserve(txs.size());
  for (const auto& t : txs) order.emplace_back(rho(t.user), t.user);
  std::sort(order.begin(), order.end(), [](const auto& a, const auto& b) {
    if (a.first != b.first) return a.first > b.first;
    return a.second < b.second;
  });
  std::vector<UserId> out;
  out.reserve(order.size());
  for (const auto& [g, u] : order) out.push_back(u);
  return out;
}

// S_{j,m,k}: users decoded after j, i.e. treated as noise while decoding j.
inline std::vector<UserId> sic_interferers(UserId j, std::span<const TxPower> txs,
                                           const SnrFactorFn& rho) {
  auto order = sic_order(txs, rho);
  std::vector<UserId> out;
  bool after = false;
  for (UserId u : order) {
    if (after) out.push_back(u);
    if (u == j) after = true;
  }
  return out;
}

// Achievable rate of Tx j at the receiver whose rho is given, with co-channel
// interference from the strictly-lower-priority users.
inline double achievable_rate(UserId j, std::span<const TxPower> txs, const SnrFactorFn& rho) {
  double pj = -1.0;
  for (const auto& t : txs) {
    if (t.power < 0) throw std::invalid_argument("achievable_rate: negative power");
    if (t.user == j) pj = t.power;
  }
  if (pj < 0) throw std::invalid_argument("achievable_rate: j not an active transmitter");
  double interf = 0.0;
  for (UserId u : sic_interferers(j, txs, rho)) {
    for (const auto& t : txs)
      if (t.user == u) interf += t.power * rho(u);
  }
  return std::log2(1.0 + pj * rho(j) / (1.0 + interf));
}

// Both decode criteria: every signal at or above j's SIC priority (including
// j's own) must meet the rate threshold at this receiver.
inline bool decode_success(UserId j, std::span<const TxPower> txs, const SnrFactorFn& rho,
                           double rate_threshold) {
  auto order = sic_order(txs, rho);
  for (UserId u : order) {
    if (achievable_rate(u, txs, rho) < rate_threshold) return false;
    if (u == j) return true;
  }
  return false;  // j not in the active set
}

// Logistic decode probability. txs is the active co-channel set within the
// receiver's neighborhood; gates: j must transmit, the receiver must not.
inline double decode_probability(UserId j, bool rx_transmits_on_channel,
                                 std::span<const TxPower> txs, const SnrFactorFn& rho,
                                 double eta, double rate_threshold) {
  bool j_active = false;
  for (const auto& t : txs) j_active |= (t.user == j);
  if (!j_active || rx_transmits_on_channel) return 0.0;
  double prob = 1.0;
  for (UserId u : sic_order(txs, rho)) {
    const double margin = achievable_rate(u, txs, rho) - rate_threshold;
    prob *= 1.0 / (1.0 + std::exp(-eta * margin));
    if (u == j) break;
  }
  return prob;
}

}  // namespace v2x
