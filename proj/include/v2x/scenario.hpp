#pragma once

#include <iostream>
#include <random>
#include <string>
#include <vector>

#include "v2x/common.hpp"

namespace v2x {

enum class Role { vehicle, pedestrian };

struct KinematicState {
  Vec2 position;  // meters, at slot 0
  Vec2 velocity;  // meters/second, constant over the period
  Role role = Role::vehicle;
};

enum class DistanceMode {
  kinematic,      // ||x_m - x_j + i*dt*(v_m - v_j)||
  paper_literal,  // i * v_rel . (x_m - x_j) / ||x_m - x_j||  (audit mode)
};

struct ScenarioConfig {
  int n_users = 40;
  int slots_per_period = 40;       // T_v
  double slot_duration_s = 1e-3;

  // Manhattan grid: horizontal/vertical roads at (t + 0.5) * road_spacing_m,
  // each road carries lanes_per_road lanes split between the two directions.
  int horizontal_roads = 2;
  int vertical_roads = 2;
  double road_spacing_m = 250.0;
  double road_width_m = 20.0;
  int lanes_per_road = 4;

  double nominal_speed_mps = 30.0 / 3.6;
  double speed_min_mps = 0.0;  // 0 -> nominal
  double speed_max_mps = 0.0;  // 0 -> nominal
  double spacing_time_s = 2.5;  // mean same-lane gap = spacing_time_s * nominal speed
  double min_gap_m = 5.0;

  double range_m = 150.0;  // communication range of interest r
  double pedestrian_fraction = 0.1;
  double pedestrian_speed_max_mps = 1.5;  // walking; hard cap 3 m/s
  std::uint64_t rng_seed = 1;

  double extent_x() const { return vertical_roads * road_spacing_m; }
  double extent_y() const { return horizontal_roads * road_spacing_m; }

  void validate() const {
    if (n_users < 1) throw ConfigError("scenario: n_users must be >= 1");
    if (slots_per_period < 1) throw ConfigError("scenario: slots_per_period must be >= 1");
    if (slot_duration_s <= 0) throw ConfigError("scenario: slot_duration_s must be > 0");
    if (range_m <= 0) throw ConfigError("scenario: range_m must be > 0");
    if (spacing_time_s <= 0) throw ConfigError("scenario: spacing_time_s must be > 0");
    if (nominal_speed_mps <= 0) throw ConfigError("scenario: nominal_speed_mps must be > 0");
    if (horizontal_roads + vertical_roads < 1) throw ConfigError("scenario: no roads");
    if (lanes_per_road < 1) throw ConfigError("scenario: lanes_per_road must be >= 1");
    if (min_gap_m <= 0) throw ConfigError("scenario: min_gap_m must be > 0");
    if (pedestrian_fraction < 0 || pedestrian_fraction >= 1)
      throw ConfigError("scenario: pedestrian_fraction must be in [0,1)");
    if (pedestrian_speed_max_mps > 3.0)
      throw ConfigError("scenario: pedestrian speed cap is 3 m/s");
  }
};

class Scenario {
 public:
  Scenario(ScenarioConfig config, std::vector<KinematicState> users)
      : config_(std::move(config)), users_(std::move(users)) {}

  const ScenarioConfig& config() const { return config_; }
  int n_users() const { return static_cast<int>(users_.size()); }
  const KinematicState& user(UserId u) const { return users_.at(static_cast<std::size_t>(u)); }
  const std::vector<KinematicState>& users() const { return users_; }
  bool is_vehicle(UserId u) const { return user(u).role == Role::vehicle; }

  std::vector<UserId> vehicles() const {
    std::vector<UserId> out;
    for (UserId u = 0; u < n_users(); ++u)
      if (is_vehicle(u)) out.push_back(u);
    return out;
  }

  Vec2 position_at(UserId u, SlotId i) const {
    const auto& s = user(u);
    return s.position + s.velocity * (static_cast<double>(i) * config_.slot_duration_s);
  }

  double predict_distance(UserId j, UserId m, SlotId i,
                          DistanceMode mode = DistanceMode::kinematic) const {
    if (j == m) throw std::invalid_argument("predict_distance: j == m");
    if (i < 1) throw std::invalid_argument("predict_distance: slot index must be >= 1");
    const auto& sj = user(j);
    const auto& sm = user(m);
    const Vec2 dx = sm.position - sj.position;
    const Vec2 dv = sm.velocity - sj.velocity;
    if (mode == DistanceMode::kinematic) {
      const double t = static_cast<double>(i) * config_.slot_duration_s;
      return (dx + dv * t).norm();
    }
    const double d0 = dx.norm();
    if (d0 == 0.0)
      throw std::domain_error("predict_distance(paper_literal): coincident positions");
    return static_cast<double>(i) * dv.dot(dx) / d0;
  }

  // Set N_m^(i): users within the communication range of interest (inclusive).
  std::vector<UserId> neighbors(UserId m, SlotId i, double r) const {
    std::vector<UserId> out;
    for (UserId j = 0; j < n_users(); ++j) {
      if (j == m) continue;
      if (predict_distance(j, m, i) <= r) out.push_back(j);
    }
    return out;
  }

  std::vector<UserId> neighbors(UserId m, SlotId i) const {
    return neighbors(m, i, config_.range_m);
  }

  void write_table(std::ostream& os) const {
    os << "# slot_duration_s=" << config_.slot_duration_s << "\n";
    os << "# slots_per_period=" << config_.slots_per_period << "\n";
    os << "# range_m=" << config_.range_m << "\n";
    os << "user,role,x,y,vx,vy\n";
    os.precision(17);
    for (UserId u = 0; u < n_users(); ++u) {
      const auto& s = user(u);
      os << u << ',' << (s.role == Role::vehicle ? "vehicle" : "pedestrian") << ','
         << s.position.x << ',' << s.position.y << ',' << s.velocity.x << ','
         << s.velocity.y << "\n";
    }
  }

  static Scenario read_table(std::istream& is) {
    ScenarioConfig cfg;
    std::vector<KinematicState> users;
    std::string line;
    int lineno = 0;
    bool header_seen = false;
    while (std::getline(is, line)) {
      ++lineno;
      auto where = [&] { return "scenario table line " + std::to_string(lineno); };
      std::string t = IniFileTrim(line);
      if (t.empty()) continue;
      if (t.front() == '#') {
        auto eq = t.find('=');
        if (eq != std::string::npos) {
          std::string key = IniFileTrim(t.substr(1, eq - 1));
          std::string val = IniFileTrim(t.substr(eq + 1));
          if (key == "slot_duration_s") cfg.slot_duration_s = std::stod(val);
          else if (key == "slots_per_period") cfg.slots_per_period = std::stoi(val);
          else if (key == "range_m") cfg.range_m = std::stod(val);
        }
        continue;
      }
      if (!header_seen) {
        if (t.rfind("user,", 0) != 0) throw ParseError(where() + ": missing header row");
        header_seen = true;
        continue;
      }
      auto fields = split_csv(t);
      if (fields.size() != 6) throw ParseError(where() + ": expected 6 fields");
      KinematicState s;
      try {
        UserId u = std::stoi(fields[0]);
        if (u != static_cast<UserId>(users.size()))
          throw ParseError(where() + ": user ids must be dense and ordered");
        if (fields[1] == "vehicle") s.role = Role::vehicle;
        else if (fields[1] == "pedestrian") s.role = Role::pedestrian;
        else throw ParseError(where() + ": unknown role " + fields[1]);
        s.position = {std::stod(fields[2]), std::stod(fields[3])};
        s.velocity = {std::stod(fields[4]), std::stod(fields[5])};
      } catch (const ParseError&) {
        throw;
      } catch (const std::exception&) {
        throw ParseError(where() + ": malformed numeric field");
      }
      users.push_back(s);
    }
    if (users.empty()) throw ParseError("scenario table: no user rows");
    cfg.n_users = static_cast<int>(users.size());
    return Scenario(std::move(cfg), std::move(users));
  }

 private:
  static std::string IniFileTrim(const std::string& s) {
    std::size_t b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    std::size_t e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
  }

  static std::vector<std::string> split_csv(const std::string& s) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : s) {
      if (c == ',') {
        out.push_back(cur);
        cur.clear();
      } else {
        cur.push_back(c);
      }
    }
    out.push_back(cur);
    return out;
  }

  ScenarioConfig config_;
  std::vector<KinematicState> users_;
};

namespace detail {

struct Lane {
  Vec2 origin;     // start of the lane axis
  Vec2 direction;  // unit vector of travel
  double length;
};

inline std::vector<Lane> build_lanes(const ScenarioConfig& c) {
  std::vector<Lane> lanes;
  const double lane_w = c.road_width_m / c.lanes_per_road;
  for (int h = 0; h < c.horizontal_roads; ++h) {
    const double yc = (h + 0.5) * c.road_spacing_m;
    for (int l = 0; l < c.lanes_per_road; ++l) {
      const double y = yc + (l - (c.lanes_per_road - 1) / 2.0) * lane_w;
      const bool forward = l < c.lanes_per_road / 2 || c.lanes_per_road == 1;
      lanes.push_back({{forward ? 0.0 : c.extent_x(), y},
                       {forward ? 1.0 : -1.0, 0.0},
                       c.extent_x()});
    }
  }
  for (int v = 0; v < c.vertical_roads; ++v) {
    const double xc = (v + 0.5) * c.road_spacing_m;
    for (int l = 0; l < c.lanes_per_road; ++l) {
      const double x = xc + (l - (c.lanes_per_road - 1) / 2.0) * lane_w;
      const bool forward = l < c.lanes_per_road / 2 || c.lanes_per_road == 1;
      lanes.push_back({{x, forward ? 0.0 : c.extent_y()},
                       {0.0, forward ? 1.0 : -1.0},
                       c.extent_y()});
    }
  }
  return lanes;
}

}  // namespace detail

// Places vehicles on the lane grid with exponential same-lane gaps
// (mean spacing_time_s * nominal speed, truncated at min_gap_m) and
// pedestrians on sidewalk strips. Deterministic given the RNG state.
inline Scenario generate_urban_grid(const ScenarioConfig& config, std::mt19937_64& rng) {
  config.validate();
  auto lanes = detail::build_lanes(config);
  if (lanes.empty()) throw GenerationError("urban grid has no lanes");

  const int n_ped = static_cast<int>(std::lround(config.pedestrian_fraction * config.n_users));
  const int n_veh = config.n_users - n_ped;
  const double mean_gap = config.spacing_time_s * config.nominal_speed_mps;
  const double v_lo = config.speed_min_mps > 0 ? config.speed_min_mps : config.nominal_speed_mps;
  const double v_hi = config.speed_max_mps > 0 ? config.speed_max_mps : config.nominal_speed_mps;
  if (v_hi < v_lo) throw ConfigError("scenario: speed_max_mps < speed_min_mps");

  std::exponential_distribution<double> gap_dist(1.0 / mean_gap);
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  // Each lane is treated as a ring: a uniform start offset, then a renewal
  // process of truncated-exponential gaps until the lane budget is spent.
  struct LaneState {
    double offset = 0;
    double used = 0;
    bool active = true;
  };
  std::vector<LaneState> st(lanes.size());
  for (std::size_t l = 0; l < lanes.size(); ++l)
    st[l].offset = unit(rng) * lanes[l].length;

  std::vector<KinematicState> users;
  users.reserve(static_cast<std::size_t>(config.n_users));
  std::size_t lane_idx = 0;
  int active_lanes = static_cast<int>(lanes.size());
  int placed = 0;
  while (placed < n_veh) {
    if (active_lanes == 0) {
      throw GenerationError(
          "road grid too small for " + std::to_string(n_veh) + " vehicles: placed " +
          std::to_string(placed) + " before all lanes filled (binding constraint: total lane "
          "length " + std::to_string(lanes.size() * lanes[0].length) + " m at mean gap " +
          std::to_string(mean_gap) + " m)");
    }
    LaneState& ls = st[lane_idx % lanes.size()];
    const detail::Lane& lane = lanes[lane_idx % lanes.size()];
    ++lane_idx;
    if (!ls.active) continue;

    const double along = std::fmod(ls.offset + ls.used, lane.length);
    KinematicState s;
    s.role = Role::vehicle;
    s.position = lane.origin + lane.direction * along;
    const double speed = v_lo + (v_hi - v_lo) * unit(rng);
    s.velocity = lane.direction * speed;
    users.push_back(s);
    ++placed;

    const double gap = std::max(config.min_gap_m, gap_dist(rng));
    ls.used += gap;
    if (ls.used > lane.length - config.min_gap_m) {
      ls.active = false;
      --active_lanes;
    }
  }

  // Pedestrians: sidewalk strips just outside the road edge, always Rx.
  const double sidewalk = config.road_width_m / 2.0 + 2.0;
  for (int p = 0; p < n_ped; ++p) {
    const bool horizontal =
        config.horizontal_roads > 0 &&
        (config.vertical_roads == 0 ||
         unit(rng) < static_cast<double>(config.horizontal_roads) /
                         (config.horizontal_roads + config.vertical_roads));
    const double side = unit(rng) < 0.5 ? -1.0 : 1.0;
    const double dir = unit(rng) < 0.5 ? -1.0 : 1.0;
    const double speed = 0.5 + (std::min(config.pedestrian_speed_max_mps, 3.0) - 0.5) * unit(rng);
    KinematicState s;
    s.role = Role::pedestrian;
    if (horizontal) {
      const int h = std::min(config.horizontal_roads - 1,
                             static_cast<int>(unit(rng) * config.horizontal_roads));
      const double yc = (h + 0.5) * config.road_spacing_m;
      s.position = {unit(rng) * config.extent_x(), yc + side * sidewalk};
      s.velocity = {dir * speed, 0.0};
    } else {
      const int v = std::min(config.vertical_roads - 1,
                             static_cast<int>(unit(rng) * config.vertical_roads));
      const double xc = (v + 0.5) * config.road_spacing_m;
      s.position = {xc + side * sidewalk, unit(rng) * config.extent_y()};
      s.velocity = {0.0, dir * speed};
    }
    users.push_back(s);
  }

  return Scenario(config, std::move(users));
}

inline Scenario generate_urban_grid(const ScenarioConfig& config) {
  std::mt19937_64 rng(config.rng_seed);
  return generate_urban_grid(config, rng);
}

}  // namespace v2x
