#pragma once

#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <ostream>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "v2x/common.hpp"

namespace v2x {
namespace matching {

using Player = std::int32_t;
using Resource = std::int32_t;

constexpr Resource kDummyResource = 0;  // reserved sentinel, infinite capacity
constexpr Player kDummyPlayer = -1;

using ForbiddenFn = std::function<bool(Player, Player, Resource)>;

struct RotationError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Many-to-many matching between dense player ids [0, n_players) and resource
// ids [1, n_resources]. Forward and inverse maps are kept consistent; sorted
// vectors give deterministic iteration.
class Matching {
 public:
  Matching(int n_players, int n_resources, int player_cap_max = 1, int player_cap_min = 0,
           int resource_cap = std::numeric_limits<std::int32_t>::max())
      : fwd_(static_cast<std::size_t>(n_players)),
        inv_(static_cast<std::size_t>(n_resources) + 1),
        player_cap_max_(player_cap_max),
        player_cap_min_(player_cap_min),
        resource_cap_(resource_cap) {
    if (n_players < 0 || n_resources < 0) throw std::invalid_argument("Matching: negative size");
    if (player_cap_max < 1) throw std::invalid_argument("Matching: player_cap_max < 1");
  }

  int n_players() const { return static_cast<int>(fwd_.size()); }
  int n_resources() const { return static_cast<int>(inv_.size()) - 1; }
  int player_cap_max() const { return player_cap_max_; }
  int player_cap_min() const { return player_cap_min_; }
  int resource_cap() const { return resource_cap_; }

  void set_forbidden(ForbiddenFn f) { forbidden_ = std::move(f); }
  bool is_forbidden(Player a, Player b, Resource r) const {
    return forbidden_ && forbidden_(a, b, r);
  }

  const std::vector<Resource>& of_player(Player p) const {
    return fwd_.at(static_cast<std::size_t>(p));
  }
  const std::vector<Player>& of_resource(Resource r) const {
    return inv_.at(static_cast<std::size_t>(r));
  }

  void assign(Player p, Resource r) {
    check_ids(p, r);
    auto& pr = fwd_[static_cast<std::size_t>(p)];
    if (static_cast<int>(pr.size()) >= player_cap_max_)
      throw RotationError("assign: player " + std::to_string(p) + " over capacity");
    auto& rp = inv_[static_cast<std::size_t>(r)];
    if (static_cast<int>(rp.size()) >= resource_cap_)
      throw RotationError("assign: resource " + std::to_string(r) + " over capacity");
    if (!sorted_insert(pr, r))
      throw RotationError("assign: duplicate pair (" + std::to_string(p) + "," +
                          std::to_string(r) + ")");
    sorted_insert(rp, p);
  }

  void unassign(Player p, Resource r) {
    check_ids(p, r);
    if (!sorted_erase(fwd_[static_cast<std::size_t>(p)], r))
      throw RotationError("unassign: pair not matched (" + std::to_string(p) + "," +
                          std::to_string(r) + ")");
    sorted_erase(inv_[static_cast<std::size_t>(r)], p);
  }

  bool holds(Player p, Resource r) const { return sorted_contains(of_player(p), r); }

  bool has_forbidden_peer(Player p, Resource r) const {
    for (Player q : of_resource(r))
      if (q != p && is_forbidden(p, q, r)) return true;
    return false;
  }

  // Full feasibility scan: capacities respected and no co-matched forbidden pair.
  bool feasible() const {
    for (Player p = 0; p < n_players(); ++p) {
      const auto& rs = of_player(p);
      if (static_cast<int>(rs.size()) > player_cap_max_) return false;
      for (Resource r : rs)
        if (has_forbidden_peer(p, r)) return false;
    }
    for (Resource r = 1; r <= n_resources(); ++r)
      if (static_cast<int>(of_resource(r).size()) > resource_cap_) return false;
    return true;
  }

  std::vector<Resource> unmatched_resources() const {
    std::vector<Resource> out;
    for (Resource r = 1; r <= n_resources(); ++r)
      if (of_resource(r).empty()) out.push_back(r);
    return out;
  }

  void write_table(std::ostream& os) const {
    os << "player,resource\n";
    for (Player p = 0; p < n_players(); ++p)
      for (Resource r : of_player(p)) os << p << ',' << r << "\n";
  }

  bool operator==(const Matching& o) const { return fwd_ == o.fwd_; }

 private:
  void check_ids(Player p, Resource r) const {
    if (p < 0 || p >= n_players()) throw std::invalid_argument("Matching: bad player id");
    if (r < 1 || r > n_resources()) throw std::invalid_argument("Matching: bad resource id");
  }

  std::vector<std::vector<Resource>> fwd_;
  std::vector<std::vector<Player>> inv_;
  int player_cap_max_;
  int player_cap_min_;
  int resource_cap_;
  ForbiddenFn forbidden_;
};

// One position of a rotation sequence. A real player rotates one of its match
// entries (kDummyResource stands for a free capacity slot); a dummy player
// (kDummyPlayer) carries a currently unmatched resource into the cycle.
struct RotationPosition {
  Player player = kDummyPlayer;
  Resource entry = kDummyResource;
};

struct RotationSequence {
  std::vector<RotationPosition> positions;  // canonical order: players asc, then dummies by resource
  int shift = 1;                            // l in [1, L]; l == L is the identity

  int length() const { return static_cast<int>(positions.size()); }
  bool is_identity() const { return shift == length(); }
};

// Sorted unique real resources whose occupancy a rotation over these positions
// can change; identical for every shift of the same positions.
inline std::vector<Resource> touched_resources(std::span<const RotationPosition> positions) {
  std::vector<Resource> out;
  for (const auto& pos : positions)
    if (pos.entry != kDummyResource) sorted_insert(out, pos.entry);
  return out;
}

// Checks that a rotation is well formed against the current matching: entries
// actually held (or free capacity for dummy entries), players distinct, dummy
// positions carry distinct unmatched resources, and the rotated matching would
// respect player and resource capacities. Returns a violation report, or
// nullopt when applicable.
inline std::optional<std::string> rotation_violation(const Matching& m,
                                                     const RotationSequence& seq) {
  const int L = seq.length();
  if (L < 1) return "rotation has no positions";
  if (seq.shift < 1 || seq.shift > L) return "shift out of range [1, L]";

  std::vector<Player> seen_players;
  std::vector<Resource> seen_dummy_res;
  for (const auto& pos : seq.positions) {
    if (pos.player == kDummyPlayer) {
      if (pos.entry == kDummyResource) return "dummy position must carry a real resource";
      if (pos.entry < 1 || pos.entry > m.n_resources()) return "dummy position: bad resource id";
      if (!m.of_resource(pos.entry).empty())
        return "dummy position carries matched resource " + std::to_string(pos.entry);
      if (!sorted_insert(seen_dummy_res, pos.entry))
        return "duplicate dummy resource " + std::to_string(pos.entry);
      continue;
    }
    if (pos.player < 0 || pos.player >= m.n_players()) return "bad player id";
    if (!sorted_insert(seen_players, pos.player))
      return "player " + std::to_string(pos.player) + " appears twice";
    if (pos.entry == kDummyResource) {
      if (static_cast<int>(m.of_player(pos.player).size()) >= m.player_cap_max())
        return "player " + std::to_string(pos.player) + " has no free capacity for a dummy entry";
    } else if (!m.holds(pos.player, pos.entry)) {
      return "player " + std::to_string(pos.player) + " does not hold resource " +
             std::to_string(pos.entry);
    }
  }
  if (seq.is_identity()) return std::nullopt;

  // Simulate the post-rotation state for capacity and duplicate checks.
  std::vector<std::pair<Resource, int>> delta;  // occupancy deltas per resource
  auto bump = [&delta](Resource r, int d) {
    for (auto& [res, v] : delta)
      if (res == r) {
        v += d;
        return;
      }
    delta.emplace_back(r, d);
  };
  for (int t = 0; t < L; ++t) {
    const auto& pos = seq.positions[static_cast<std::size_t>(t)];
    if (pos.player == kDummyPlayer) continue;
    const Resource recv = seq.positions[static_cast<std::size_t>((t + seq.shift) % L)].entry;
    if (recv == pos.entry) continue;
    if (recv != kDummyResource && m.holds(pos.player, recv))
      return "player " + std::to_string(pos.player) + " would hold resource " +
             std::to_string(recv) + " twice";
    const int held = static_cast<int>(m.of_player(pos.player).size());
    const int next = held + (recv != kDummyResource ? 1 : 0) - (pos.entry != kDummyResource ? 1 : 0);
    if (next > m.player_cap_max())
      return "player " + std::to_string(pos.player) + " would exceed capacity";
    if (next < m.player_cap_min())
      return "player " + std::to_string(pos.player) + " would fall below minimum " +
             std::to_string(m.player_cap_min());
    if (pos.entry != kDummyResource) bump(pos.entry, -1);
    if (recv != kDummyResource) bump(recv, +1);
  }
  for (const auto& [res, d] : delta) {
    if (d > 0 && static_cast<int>(m.of_resource(res).size()) + d > m.resource_cap())
      return "resource " + std::to_string(res) + " would exceed capacity";
  }
  return std::nullopt;
}

namespace detail {

// In-place application; requires a well-formed rotation.
inline void apply_unchecked(Matching& m, const RotationSequence& seq) {
  if (seq.is_identity()) return;
  const int L = seq.length();
  for (int t = 0; t < L; ++t) {
    const auto& pos = seq.positions[static_cast<std::size_t>(t)];
    if (pos.player == kDummyPlayer) continue;
    const Resource recv = seq.positions[static_cast<std::size_t>((t + seq.shift) % L)].entry;
    if (recv == pos.entry) continue;
    if (pos.entry != kDummyResource) m.unassign(pos.player, pos.entry);
    if (recv != kDummyResource) m.assign(pos.player, recv);
  }
}

inline void undo_unchecked(Matching& m, const RotationSequence& seq) {
  if (seq.is_identity()) return;
  const int L = seq.length();
  for (int t = 0; t < L; ++t) {
    const auto& pos = seq.positions[static_cast<std::size_t>(t)];
    if (pos.player == kDummyPlayer) continue;
    const Resource recv = seq.positions[static_cast<std::size_t>((t + seq.shift) % L)].entry;
    if (recv == pos.entry) continue;
    if (recv != kDummyResource) m.unassign(pos.player, recv);
    if (pos.entry != kDummyResource) m.assign(pos.player, pos.entry);
  }
}

// Forbidden-pair scan restricted to the rotated players; with a feasible input
// matching this is equivalent to a full post-rotation scan.
inline bool rotated_players_conflict_free(const Matching& m, const RotationSequence& seq) {
  for (const auto& pos : seq.positions) {
    if (pos.player == kDummyPlayer) continue;
    for (Resource r : m.of_player(pos.player))
      if (m.has_forbidden_peer(pos.player, r)) return false;
  }
  return true;
}

}  // namespace detail

// Rotation matching per the cyclic reassignment rule: position t receives the
// entry of position (t + shift) mod L. Throws with a violation report when the
// rotation is not applicable.
inline Matching apply_rotation(const Matching& m, const RotationSequence& seq) {
  if (auto v = rotation_violation(m, seq)) throw RotationError("rotation rejected: " + *v);
  Matching out = m;
  detail::apply_unchecked(out, seq);
  return out;
}

// A rotation is valid when no rotated player ends up co-matched with a
// forbidden partner. Requires a well-formed rotation.
inline bool is_valid(const Matching& m, const RotationSequence& seq) {
  if (auto v = rotation_violation(m, seq)) throw RotationError("rotation rejected: " + *v);
  if (seq.is_identity()) return true;
  Matching scratch = m;
  detail::apply_unchecked(scratch, seq);
  return detail::rotated_players_conflict_free(scratch, seq);
}

struct RotationObjective {
  // Scalar over the sub-matching spanned by `touched` resources. Contributions
  // of untouched resources must not depend on the rotation, so objective
  // differences over `touched` equal global differences.
  std::function<double(const Matching&, const std::vector<Resource>&)> eval;
  bool maximize = false;

  // Strict improvement with a relative guard so float noise between
  // equal-valued configurations is never counted as progress.
  bool improves(double candidate, double base) const {
    const double tol = 1e-9 * (1.0 + std::abs(base));
    return maximize ? candidate > base + tol : candidate < base - tol;
  }
};

using RotationConstraint = std::function<bool(const Matching&, const RotationSequence&)>;

inline std::vector<Resource> all_resources(const Matching& m) {
  std::vector<Resource> out(static_cast<std::size_t>(m.n_resources()));
  for (Resource r = 1; r <= m.n_resources(); ++r) out[static_cast<std::size_t>(r - 1)] = r;
  return out;
}

struct OptimalShiftOptions {
  RotationConstraint extra;          // e.g. constraint (7d) for sub-channel matchings
  bool skip_validity = false;        // test hook: ignore forbidden pairs
  double* best_objective = nullptr;  // objective of the returned shift
  std::uint64_t* candidates = nullptr;
};

// Definition-2 optimal shift: among valid shifts (identity included) the
// objective optimum; returns nullopt when the status quo is optimal or the
// only valid option. Ties keep the status quo; among proper shifts the lowest
// improving shift wins. The matching is restored before returning.
inline std::optional<int> optimal_shift(Matching& m, std::span<const RotationPosition> positions,
                                        const RotationObjective& obj,
                                        const OptimalShiftOptions& opt = {}) {
  const int L = static_cast<int>(positions.size());
  if (L < 1) return std::nullopt;
  const auto touched = touched_resources(positions);
  const double base = obj.eval(m, touched);
  std::optional<int> best_shift;
  double best = base;
  RotationSequence seq;
  seq.positions.assign(positions.begin(), positions.end());
  for (int l = 1; l < L; ++l) {
    seq.shift = l;
    if (opt.candidates) ++*opt.candidates;
    if (rotation_violation(m, seq)) continue;
    detail::apply_unchecked(m, seq);
    const bool valid = (opt.skip_validity || detail::rotated_players_conflict_free(m, seq)) &&
                       (!opt.extra || opt.extra(m, seq));
    if (valid) {
      const double cand = obj.eval(m, touched);
      if (obj.improves(cand, best)) {
        best = cand;
        best_shift = l;
      }
    }
    detail::undo_unchecked(m, seq);
  }
  if (best_shift && opt.best_objective) *opt.best_objective = best;
  return best_shift;
}

// ---------------------------------------------------------------------------
// Enumeration
// ---------------------------------------------------------------------------

namespace detail {

// All index combinations of sizes [lo, hi] from [0, n), sizes ascending,
// lexicographic within one size. fn returns false to stop early.
template <class Fn>
inline bool for_each_combination(int n, int lo, int hi, Fn&& fn) {
  for (int size = lo; size <= hi && size <= n; ++size) {
    if (size <= 0) continue;
    std::vector<int> idx(static_cast<std::size_t>(size));
    for (int i = 0; i < size; ++i) idx[static_cast<std::size_t>(i)] = i;
    while (true) {
      if (!fn(std::span<const int>(idx))) return false;
      int i = size - 1;
      while (i >= 0 && idx[static_cast<std::size_t>(i)] == n - size + i) --i;
      if (i < 0) break;
      ++idx[static_cast<std::size_t>(i)];
      for (int j = i + 1; j < size; ++j)
        idx[static_cast<std::size_t>(j)] = idx[static_cast<std::size_t>(j - 1)] + 1;
    }
  }
  return true;
}

}  // namespace detail

// Rotation universe over a matching: every player (its current entries plus a
// dummy entry when it has free capacity) and a dummy position per unmatched
// resource, so rotations can move players into empty resources and back.
struct UniverseItem {
  Player player = kDummyPlayer;  // kDummyPlayer -> dummy position
  Resource fixed = kDummyResource;
};

inline std::vector<UniverseItem> rotation_universe(const Matching& m,
                                                   bool include_dummies = true) {
  std::vector<UniverseItem> items;
  for (Player p = 0; p < m.n_players(); ++p) items.push_back({p, kDummyResource});
  if (include_dummies)
    for (Resource r : m.unmatched_resources()) items.push_back({kDummyPlayer, r});
  return items;
}

inline std::vector<Resource> entry_choices(const Matching& m, const UniverseItem& item) {
  if (item.player == kDummyPlayer) return {item.fixed};
  std::vector<Resource> out = m.of_player(item.player);
  if (static_cast<int>(out.size()) < m.player_cap_max()) out.push_back(kDummyResource);
  return out;
}

// Visits every (subset, entry combination, shift in [1, L]) with subset sizes
// 1..q_max over the canonically ordered universe; shift L is the identity.
// fn(const RotationSequence&) returns false to stop.
template <class Fn>
inline void for_each_rotation(const Matching& m, int q_max, Fn&& fn,
                              bool include_dummies = true) {
  const auto items = rotation_universe(m, include_dummies);
  const int n = static_cast<int>(items.size());
  std::vector<std::vector<Resource>> choices(items.size());
  for (std::size_t i = 0; i < items.size(); ++i) choices[i] = entry_choices(m, items[i]);

  detail::for_each_combination(n, 1, q_max, [&](std::span<const int> idx) {
    const int L = static_cast<int>(idx.size());
    RotationSequence seq;
    seq.positions.resize(static_cast<std::size_t>(L));
    std::vector<int> odo(static_cast<std::size_t>(L), 0);
    while (true) {
      for (int t = 0; t < L; ++t) {
        const auto& item = items[static_cast<std::size_t>(idx[static_cast<std::size_t>(t)])];
        seq.positions[static_cast<std::size_t>(t)] = {
            item.player,
            choices[static_cast<std::size_t>(idx[static_cast<std::size_t>(t)])]
                   [static_cast<std::size_t>(odo[static_cast<std::size_t>(t)])]};
      }
      for (int l = 1; l <= L; ++l) {
        seq.shift = l;
        if (!fn(static_cast<const RotationSequence&>(seq))) return false;
      }
      int t = L - 1;
      while (t >= 0 && odo[static_cast<std::size_t>(t)] + 1 >=
                           static_cast<int>(choices[static_cast<std::size_t>(
                                                        idx[static_cast<std::size_t>(t)])]
                                                .size()))
        --t;
      if (t < 0) break;
      ++odo[static_cast<std::size_t>(t)];
      for (int j = t + 1; j < L; ++j) odo[static_cast<std::size_t>(j)] = 0;
    }
    return true;
  });
}

inline std::vector<RotationSequence> enumerate_rotations(const Matching& m, int q_max,
                                                         bool include_dummies = true) {
  std::vector<RotationSequence> out;
  for_each_rotation(
      m, q_max,
      [&out](const RotationSequence& seq) {
        out.push_back(seq);
        return true;
      },
      include_dummies);
  return out;
}

// ---------------------------------------------------------------------------
// Improvement search and stability certification
// ---------------------------------------------------------------------------

struct SearchOptions {
  RotationConstraint extra;
  bool skip_validity = false;
  bool include_dummies = true;
};

// Deterministic sweep for one improving rotation (subset sizes 2..q_max).
// Returns the applied-ready sequence via `out` without modifying `m`.
inline bool find_improving_rotation(Matching& m, int q_max, const RotationObjective& obj,
                                    const SearchOptions& opt, RotationSequence* out = nullptr,
                                    std::uint64_t* candidates = nullptr) {
  const auto items = rotation_universe(m, opt.include_dummies);
  const int n = static_cast<int>(items.size());
  std::vector<std::vector<Resource>> choices(items.size());
  for (std::size_t i = 0; i < items.size(); ++i) choices[i] = entry_choices(m, items[i]);

  bool found = false;
  detail::for_each_combination(n, 2, q_max, [&](std::span<const int> idx) {
    const int L = static_cast<int>(idx.size());
    std::vector<RotationPosition> positions(static_cast<std::size_t>(L));
    std::vector<int> odo(static_cast<std::size_t>(L), 0);
    while (true) {
      for (int t = 0; t < L; ++t) {
        const int item_idx = idx[static_cast<std::size_t>(t)];
        positions[static_cast<std::size_t>(t)] = {
            items[static_cast<std::size_t>(item_idx)].player,
            choices[static_cast<std::size_t>(item_idx)][static_cast<std::size_t>(
                odo[static_cast<std::size_t>(t)])]};
      }
      OptimalShiftOptions oso;
      oso.extra = opt.extra;
      oso.skip_validity = opt.skip_validity;
      oso.candidates = candidates;
      if (auto shift = optimal_shift(m, positions, obj, oso)) {
        if (out) {
          out->positions = positions;
          out->shift = *shift;
        }
        found = true;
        return false;
      }
      int t = L - 1;
      while (t >= 0 &&
             odo[static_cast<std::size_t>(t)] + 1 >=
                 static_cast<int>(
                     choices[static_cast<std::size_t>(idx[static_cast<std::size_t>(t)])].size()))
        --t;
      if (t < 0) break;
      ++odo[static_cast<std::size_t>(t)];
      for (int j = t + 1; j < L; ++j) odo[static_cast<std::size_t>(j)] = 0;
    }
    return true;
  });
  return found;
}

// Definition-3 certification: no valid rotation of length <= q_max strictly
// improves the objective.
inline bool is_q_exchange_stable(const Matching& m, int q_max, const RotationObjective& obj,
                                 const SearchOptions& opt = {}) {
  Matching scratch = m;
  return !find_improving_rotation(scratch, q_max, obj, opt);
}

struct RotationTraceEntry {
  double objective_before = 0;
  double objective_after = 0;
  int subset_size = 0;
  int shift = 0;
};

struct RotationRun {
  std::vector<RotationTraceEntry> trace;  // one entry per executed rotation, global objective
  std::uint64_t random_draws = 0;
  std::uint64_t sweep_scans = 0;
  std::uint64_t candidates_considered = 0;
  std::uint64_t max_iteration_candidates = 0;
  int max_universe = 0;
  int executed() const { return static_cast<int>(trace.size()); }
};

struct ImprovePolicy {
  int stall_draws = 200;                    // consecutive failed random draws before sweeping
  std::uint64_t max_rotations = 1u << 20;   // safety guard; strict descent bounds the real count
};

// Phase-2 driver shared by the time and sub-channel matchings: random subset
// draws until progress stalls, then deterministic sweeps; a clean sweep with
// no improving rotation certifies q-exchange stability and ends the run.
inline RotationRun improve_until_stable(Matching& m, int q_max, const RotationObjective& obj,
                                        std::mt19937_64& rng, const SearchOptions& opt = {},
                                        const ImprovePolicy& policy = {}) {
  RotationRun run;
  const auto global = all_resources(m);
  double total = obj.eval(m, global);

  auto log_applied = [&](const RotationSequence& seq, std::uint64_t iter_candidates) {
    detail::apply_unchecked(m, seq);
    const double after = obj.eval(m, global);
    run.trace.push_back({total, after, seq.length(), seq.shift});
    total = after;
    run.max_iteration_candidates = std::max(run.max_iteration_candidates, iter_candidates);
    if (run.trace.size() > policy.max_rotations)
      throw RotationError("improve_until_stable: rotation budget exceeded");
  };

  // Random draw phase.
  int fails = 0;
  while (fails < policy.stall_draws) {
    const auto items = rotation_universe(m, opt.include_dummies);
    run.max_universe = std::max(run.max_universe, static_cast<int>(items.size()));
    const int n = static_cast<int>(items.size());
    const int max_q = std::min(q_max, n);
    if (max_q < 2) break;
    ++run.random_draws;
    std::uniform_int_distribution<int> qd(2, max_q);
    const int L = qd(rng);
    std::vector<int> picked;
    std::uniform_int_distribution<int> id(0, n - 1);
    while (static_cast<int>(picked.size()) < L) {
      const int c = id(rng);
      bool dup = false;
      for (int x : picked) dup |= (x == c);
      if (!dup) picked.push_back(c);
    }
    std::sort(picked.begin(), picked.end());
    std::vector<RotationPosition> positions;
    positions.reserve(picked.size());
    for (int item_idx : picked) {
      const auto& item = items[static_cast<std::size_t>(item_idx)];
      auto choices = entry_choices(m, item);
      std::uniform_int_distribution<int> cd(0, static_cast<int>(choices.size()) - 1);
      positions.push_back({item.player, choices[static_cast<std::size_t>(cd(rng))]});
    }
    std::uint64_t cand = 0;
    OptimalShiftOptions oso;
    oso.extra = opt.extra;
    oso.skip_validity = opt.skip_validity;
    oso.candidates = &cand;
    auto shift = optimal_shift(m, positions, obj, oso);
    run.candidates_considered += cand;
    if (shift) {
      RotationSequence seq;
      seq.positions = positions;
      seq.shift = *shift;
      log_applied(seq, cand);
      fails = 0;
    } else {
      ++fails;
    }
  }

  // Deterministic sweeps until a clean pass.
  while (true) {
    ++run.sweep_scans;
    run.max_universe =
        std::max(run.max_universe,
                 static_cast<int>(rotation_universe(m, opt.include_dummies).size()));
    std::uint64_t cand = 0;
    RotationSequence seq;
    const bool found = find_improving_rotation(m, q_max, obj, opt, &seq, &cand);
    run.candidates_considered += cand;
    if (!found) break;
    log_applied(seq, cand);
  }
  return run;
}

// ---------------------------------------------------------------------------
// Counting results for the rotation space
// ---------------------------------------------------------------------------

inline std::uint64_t binomial(int n, int k) {
  if (k < 0 || k > n) return 0;
  k = std::min(k, n - k);
  std::uint64_t r = 1;
  for (int i = 1; i <= k; ++i) {
    // exact at each step: r * (n-k+i) is divisible by i
    const std::uint64_t num = static_cast<std::uint64_t>(n - k + i);
    if (r > std::numeric_limits<std::uint64_t>::max() / num)
      throw std::overflow_error("binomial overflow");
    r = r * num / static_cast<std::uint64_t>(i);
  }
  return r;
}

// Sum over q = 1..q_max of q * C(n, q); equals n * 2^(n-1) at q_max = n.
inline std::uint64_t count_rotation_sequences(int n, int q_max) {
  if (n < 1 || q_max < 1 || q_max > n)
    throw std::invalid_argument("count_rotation_sequences: need 1 <= q_max <= n");
  if (n > 57) throw std::overflow_error("count_rotation_sequences: n too large for u64");
  std::uint64_t total = 0;
  for (int q = 1; q <= q_max; ++q)
    total += static_cast<std::uint64_t>(q) * binomial(n, q);
  return total;
}

// Lower bound on invalid rotation matchings with F forbidden pairs, q_max = n:
// F * (2^(n-1) - 2 + 1/floor(n/2)).
inline double invalid_rotation_lower_bound(int n, int f) {
  if (n < 2) throw std::invalid_argument("invalid_rotation_lower_bound: n >= 2 required");
  if (f < 0) throw std::invalid_argument("invalid_rotation_lower_bound: F >= 0 required");
  const double pow2 = std::ldexp(1.0, n - 1);
  return f * (pow2 - 2.0 + 1.0 / std::floor(n / 2.0));
}

// Matching upper bound on rotation matchings to consider per iteration:
// (n - F) * 2^(n-1) + 2F - F/floor(n/2).
inline double valid_rotation_upper_bound(int n, int f) {
  if (n < 2) throw std::invalid_argument("valid_rotation_upper_bound: n >= 2 required");
  if (f < 0) throw std::invalid_argument("valid_rotation_upper_bound: F >= 0 required");
  const double pow2 = std::ldexp(1.0, n - 1);
  return (n - f) * pow2 + 2.0 * f - f / std::floor(n / 2.0);
}

}  // namespace matching
}  // namespace v2x
