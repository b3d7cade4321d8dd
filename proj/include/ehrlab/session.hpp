#pragma once

// In-memory game sessions for interactive play. A human takes Spoiler or
// Duplicator; the engine answers with the master strategy, the cluster
// strategy, the exact solver or uniformly random moves. Every request and
// response is a JSON document carrying the full public state.

#include <algorithm>
#include <array>
#include <atomic>
#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "ehrlab/colouring.hpp"
#include "ehrlab/errors.hpp"
#include "ehrlab/games.hpp"
#include "ehrlab/literal.hpp"
#include "ehrlab/strategies.hpp"
#include "ehrlab/type_search.hpp"
#include "ehrlab/types.hpp"

namespace ehrlab {

using Json = nlohmann::json;

/// A rejected request; `status` is the HTTP status to answer with.
class SessionError : public std::runtime_error {
 public:
  SessionError(int status, const std::string& what) : std::runtime_error(what), status_(status) {}
  int status() const noexcept { return status_; }

 private:
  int status_;
};

enum class GameKind { Ehr, Dehr, Types };
enum class Policy { Master, Lemma36, Minimax, Random };

inline const char* to_string(GameKind k) {
  switch (k) {
    case GameKind::Ehr:
      return "ehr";
    case GameKind::Dehr:
      return "dehr";
    case GameKind::Types:
      return "types";
  }
  return "";
}

inline const char* to_string(Policy p) {
  switch (p) {
    case Policy::Master:
      return "master";
    case Policy::Lemma36:
      return "lemma36";
    case Policy::Minimax:
      return "minimax";
    case Policy::Random:
      return "random";
  }
  return "";
}

struct SessionLimits {
  std::size_t max_nodes = 256;
  /// Colourings an engine may try in a set round.
  std::uint64_t max_colourings = 4096;
  SolverLimits solver;
  MasterLimits master;
};

/// Request fields: kind, t1, t2 (tree literals), r, k, m, human
/// ("spoiler" | "duplicator"), engine, preset ("surrogate" | "paper") or
/// master {D, D0, M, e}, designated [[x, y], ...], seed.
struct SessionConfig {
  GameKind kind = GameKind::Ehr;
  ColouredTree t1, t2;
  std::uint32_t r = 2;
  std::uint32_t k = 1;
  std::uint32_t m = 1;
  Player human = Player::Spoiler;
  Policy engine = Policy::Minimax;
  MasterParams master = MasterParams::surrogate();
  std::string preset = "surrogate";
  std::vector<PebblePair> designated;
  std::uint64_t seed = 1;

  static SessionConfig from_json(const Json& j, const SessionLimits& limits = {}) {
    if (!j.is_object()) throw SessionError(400, "session config must be a JSON object");
    SessionConfig c;
    try {
      const std::string kind = j.value("kind", "ehr");
      if (kind == "ehr") {
        c.kind = GameKind::Ehr;
      } else if (kind == "dehr") {
        c.kind = GameKind::Dehr;
      } else if (kind == "types") {
        c.kind = GameKind::Types;
      } else {
        throw SessionError(400, "unknown game kind " + kind);
      }
      if (!j.contains("t1") || !j.contains("t2")) throw SessionError(400, "t1 and t2 tree literals are required");
      c.t1 = parse_tree(j.at("t1").get<std::string>());
      c.t2 = parse_tree(j.at("t2").get<std::string>());
      c.r = j.value("r", 2u);
      c.k = j.value("k", 1u);
      c.m = j.value("m", 1u);
      const std::string human = j.value("human", "spoiler");
      if (human != "spoiler" && human != "duplicator") throw SessionError(400, "human must be spoiler or duplicator");
      c.human = human == "spoiler" ? Player::Spoiler : Player::Duplicator;
      const std::string engine = j.value("engine", "minimax");
      if (engine == "master") {
        c.engine = Policy::Master;
      } else if (engine == "lemma36") {
        c.engine = Policy::Lemma36;
      } else if (engine == "minimax") {
        c.engine = Policy::Minimax;
      } else if (engine == "random") {
        c.engine = Policy::Random;
      } else {
        throw SessionError(400, "unknown engine policy " + engine);
      }
      c.seed = j.value("seed", std::uint64_t{1});
      if (j.contains("designated")) {
        for (const auto& p : j.at("designated")) c.designated.push_back({p.at(0).get<NodeId>(), p.at(1).get<NodeId>()});
      }
      c.preset = j.value("preset", "surrogate");
      if (c.engine == Policy::Master) {
        if (j.contains("master")) {
          const auto& mp = j.at("master");
          c.preset = "custom";
          c.master = MasterParams{c.k, mp.at("D").get<std::uint32_t>(), mp.at("D0").get<std::uint32_t>(),
                                  mp.at("M").get<std::uint32_t>(), mp.at("e").get<std::uint32_t>()};
        } else if (c.preset == "paper") {
          c.master = MasterParams::paper(c.k);
        } else if (c.preset == "surrogate") {
          c.master = MasterParams::surrogate();
          c.master.k = c.k;
        } else {
          throw SessionError(400, "unknown preset " + c.preset);
        }
      }
    } catch (const nlohmann::json::exception& e) {
      throw SessionError(400, std::string("malformed config: ") + e.what());
    } catch (const ParseError& e) {
      throw SessionError(400, std::string("bad tree literal: ") + e.what());
    }
    c.validate(limits);
    return c;
  }

  void validate(const SessionLimits& limits) const {
    for (const auto* t : {&t1, &t2}) {
      if (t->tree.infinite()) throw SessionError(400, "sessions are played on finite trees");
      if (t->size() > limits.max_nodes) {
        throw GuardExceeded("tree has " + std::to_string(t->size()) + " nodes, session limit " +
                            std::to_string(limits.max_nodes));
      }
    }
    if (k < 1) throw SessionError(400, "k must be >= 1");
    if (kind != GameKind::Dehr && r < 1) throw SessionError(400, "r must be >= 1");
    const bool duplicator_only = engine == Policy::Master || engine == Policy::Lemma36;
    if (duplicator_only && human != Player::Spoiler) {
      throw SessionError(400, std::string(to_string(engine)) + " is a Duplicator strategy; the human must play Spoiler");
    }
    if (engine == Policy::Master && kind != GameKind::Ehr) throw SessionError(400, "the master strategy plays the set-pebble game");
    if (engine == Policy::Lemma36 && kind != GameKind::Dehr) throw SessionError(400, "lemma36 plays the distance-preserving game");
    if (!designated.empty() && kind != GameKind::Dehr) throw SessionError(400, "designated pairs belong to the distance-preserving game");
    if (designated.size() >= k && kind == GameKind::Dehr) throw SessionError(400, "designated pairs leave no round to play");
    if (engine == Policy::Master) {
      if (master.k != k) throw SessionError(400, "master parameters have k different from the session");
      try {
        master.validate();
      } catch (const InvalidArgument& e) {
        throw SessionError(400, e.what());
      }
      AugmentedPalette aug(Palette(r), master.D, master.D0);
      const std::uint64_t flat = static_cast<std::uint64_t>(aug.base().size()) * aug.marker_count();
      if (flat > limits.master.max_augmented_colours) {
        throw GuardExceeded("augmented palette has " + std::to_string(flat) + " colours, limit " +
                            std::to_string(limits.master.max_augmented_colours) +
                            "; a types-game reply at these parameters is out of reach");
      }
    }
  }

  Json to_json() const {
    Json j{{"kind", to_string(kind)},
           {"t1", serialize_tree(t1)},
           {"t2", serialize_tree(t2)},
           {"r", r},
           {"k", k},
           {"m", m},
           {"human", human == Player::Spoiler ? "spoiler" : "duplicator"},
           {"engine", to_string(engine)},
           {"seed", seed}};
    if (engine == Policy::Master) {
      j["preset"] = preset;
      j["master"] = Json{{"k", master.k}, {"D", master.D}, {"D0", master.D0}, {"M", master.M}, {"e", master.e}};
    }
    if (kind == GameKind::Dehr) {
      j["designated"] = Json::array();
      for (const auto& p : designated) j["designated"].push_back({p.x, p.y});
    }
    return j;
  }
};

/// One game. Not thread-safe on its own; the service serializes access.
class Session {
 public:
  enum class Phase { SetRound, Pebble, Finished };

  Session(std::string id, SessionConfig cfg, SessionLimits limits = {})
      : id_(std::move(id)), cfg_(std::move(cfg)), limits_(limits), rng_(cfg_.seed) {
    for (int w = 0; w < 2; ++w) {
      const ColouredTree& t = w == 0 ? cfg_.t1 : cfg_.t2;
      shape_[w] = t.tree;
    }
    if (cfg_.kind == GameKind::Dehr) {
      colours_[0] = cfg_.t1.colours;
      colours_[1] = cfg_.t2.colours;
      Colour top = 1;
      for (int w = 0; w < 2; ++w) {
        for (Colour c : *colours_[w]) top = std::max(top, c);
      }
      cfg_.r = top;
      for (int w = 0; w < 2; ++w) {
        const std::string why = rooted_violation(coloured(w), Palette(cfg_.r));
        if (!why.empty()) throw SessionError(400, "T" + std::to_string(w + 1) + " is not a rooted colouring: " + why);
      }
      for (const auto& p : cfg_.designated) {
        if (!shape_[0].valid(p.x) || !shape_[1].valid(p.y)) throw SessionError(400, "designated pair on an invalid node id");
      }
      const std::string bad = dehr_violation(coloured(0), coloured(1), cfg_.designated);
      if (!bad.empty()) throw SessionError(400, "designated pairs already lose the game: " + bad);
      pairs_ = cfg_.designated;
      if (cfg_.engine == Policy::Lemma36) {
        for (int w = 0; w < 2; ++w) {
          if (shape_[w].height() > cfg_.m) throw SessionError(400, "lemma36 sessions need trees of height at most m");
        }
        try {
          cluster_ = std::make_unique<ClusterGame>(coloured(0), coloured(1), cfg_.m, cfg_.k, limits_.solver);
        } catch (const InvalidArgument& e) {
          throw SessionError(400, e.what());
        }
        if (!cfg_.designated.empty()) throw SessionError(400, "lemma36 sessions start without designated pairs");
        for (int w = 0; w < 2; ++w) {
          const auto origin = extract(coloured(w), 0, cfg_.m).origin;
          to_game_[w].assign(origin.size(), 0);
          from_game_[w] = origin;
          for (NodeId i = 0; i < origin.size(); ++i) to_game_[w][origin[i]] = i;
        }
      }
      phase_ = Phase::Pebble;
    }
    engine_turn();
  }

  const std::string& id() const noexcept { return id_; }
  const SessionConfig& config() const noexcept { return cfg_; }
  Phase phase() const noexcept { return phase_; }

  std::optional<Player> to_move() const {
    if (phase_ == Phase::Finished) return std::nullopt;
    return pending_ ? Player::Duplicator : Player::Spoiler;
  }

  /// Applies the human's move and the engine's answer.
  Json submit(const Json& move) {
    if (phase_ == Phase::Finished) throw SessionError(409, "session is finished");
    if (!move.is_object()) throw SessionError(400, "move must be a JSON object");
    try {
      if (cfg_.human == Player::Spoiler) {
        spoiler_move(move);
        duplicator_engine();
      } else {
        duplicator_move(move);
      }
      engine_turn();
    } catch (const nlohmann::json::exception& e) {
      throw SessionError(400, std::string("malformed move: ") + e.what());
    }
    return state();
  }

  Json state() const {
    Json j;
    j["id"] = id_;
    j["config"] = cfg_.to_json();
    j["status"] = phase_ == Phase::SetRound ? (cfg_.kind == GameKind::Types ? "awaiting_colouring" : "awaiting_set_round")
                  : phase_ == Phase::Pebble ? "awaiting_move"
                                            : "finished";
    const auto next = to_move();
    j["to_move"] = next ? Json(*next == Player::Spoiler ? "spoiler" : "duplicator") : Json(nullptr);
    j["round"] = pairs_.size() - cfg_.designated.size();
    for (int w = 0; w < 2; ++w) {
      const std::string key = w == 0 ? "t1" : "t2";
      j["trees"][key] = serialize_tree(coloured(w));
      j["colourings"][key] = colours_[w] ? Json(*colours_[w]) : Json(nullptr);
    }
    j["pairs"] = Json::array();
    for (const auto& p : pairs_) j["pairs"].push_back({p.x, p.y});
    if (pending_) {
      j["pending"] = pending_->colouring.empty()
                         ? Json{{"tree", pending_->tree + 1}, {"node", pending_->node}}
                         : Json{{"tree", pending_->tree + 1}, {"colouring", pending_->colouring}};
    } else {
      j["pending"] = nullptr;
    }
    j["history"] = history_;
    j["verdict"] = verdict_;
    return j;
  }

  /// Candidate moves for the human with engine annotations.
  Json hint() {
    Json out{{"id", id_}, {"candidates", Json::array()}};
    const auto next = to_move();
    out["to_move"] = next ? Json(*next == Player::Spoiler ? "spoiler" : "duplicator") : Json(nullptr);
    if (phase_ == Phase::Finished) return out;
    if (phase_ == Phase::SetRound) {
      const int w = pending_ ? 1 - pending_->tree : 0;
      out["note"] = "colour T" + std::to_string(w + 1) + " with c0 at the root and c1..c" + std::to_string(cfg_.r) +
                    " elsewhere";
      return out;
    }
    if (cfg_.human == Player::Spoiler) {
      for (int w = 0; w < 2; ++w) {
        for (NodeId x = 0; x < shape_[w].size(); ++x) {
          out["candidates"].push_back(Json{{"tree", w + 1}, {"node", x}, {"depth", shape_[w].depth(x)},
                                           {"annotations", spoiler_annotations(w, x)}});
        }
      }
    } else {
      const int a = pending_->tree;
      const int b = 1 - a;
      PebbleSolver* s = solver();
      std::vector<NodeId> good;
      if (s && s->duplicator_wins(pairs_, rounds_left())) {
        good = s->winning_replies(pairs_, rounds_left(), a == 0 ? Side::First : Side::Second, pending_->node);
      }
      for (NodeId y = 0; y < shape_[b].size(); ++y) {
        Json notes = Json::array();
        if (s) notes.push_back(std::find(good.begin(), good.end(), y) != good.end() ? "keeps a win" : "no win");
        out["candidates"].push_back(Json{{"tree", b + 1}, {"node", y}, {"depth", shape_[b].depth(y)}, {"annotations", notes}});
      }
    }
    return out;
  }

  /// Master-strategy state in session coordinates (x in T1, y in T2).
  std::optional<MasterState> master_state() const {
    if (!master_) return std::nullopt;
    if (!swapped_) return mstate_;
    MasterState s = mstate_;
    for (auto* v : {&s.pts, &s.aux}) {
      for (auto& p : *v) std::swap(p[0], p[1]);
    }
    return s;
  }

 private:
  struct Pending {
    int tree = 0;
    NodeId node = 0;
    std::vector<Colour> colouring;
  };

  ColouredTree coloured(int w) const {
    return ColouredTree{shape_[w], colours_[w] ? *colours_[w] : std::vector<Colour>(shape_[w].size(), 0)};
  }

  std::uint32_t rounds_left() const { return cfg_.k - static_cast<std::uint32_t>(pairs_.size()); }
  Rules rules() const { return cfg_.kind == GameKind::Dehr ? Rules::Dehr : Rules::Ehr; }

  PebbleSolver* solver() {
    if (!colours_[0] || !colours_[1]) return nullptr;
    if (!solver_) {
      try {
        solver_ = std::make_unique<PebbleSolver>(coloured(0), coloured(1), rules(), limits_.solver);
      } catch (const GuardExceeded&) {
        return nullptr;
      }
    }
    return solver_.get();
  }

  int tree_of(const Json& move, int fallback) const {
    const int w = move.value("tree", fallback + 1) - 1;
    if (w != 0 && w != 1) throw SessionError(400, "tree must be 1 or 2");
    return w;
  }

  NodeId node_of(const Json& move, int w) const {
    if (!move.contains("node")) throw SessionError(400, "a pebble move needs a node");
    const auto v = move.at("node").get<std::int64_t>();
    if (v < 0 || !shape_[w].valid(static_cast<NodeId>(v))) {
      throw SessionError(400, "node " + std::to_string(v) + " does not exist in T" + std::to_string(w + 1));
    }
    return static_cast<NodeId>(v);
  }

  std::vector<Colour> colouring_of(const Json& move, int w) const {
    if (!move.contains("colouring")) throw SessionError(400, "set round: a colouring is expected");
    auto c = move.at("colouring").get<std::vector<Colour>>();
    if (c.size() != shape_[w].size()) {
      throw SessionError(400, "colouring has " + std::to_string(c.size()) + " entries for " +
                                  std::to_string(shape_[w].size()) + " nodes of T" + std::to_string(w + 1));
    }
    const std::string why = rooted_violation(ColouredTree{shape_[w], c}, Palette(cfg_.r));
    if (!why.empty()) throw SessionError(400, "not a rooted colouring (root c0, other nodes c1..c" + std::to_string(cfg_.r) + "): " + why);
    return c;
  }

  std::vector<Colour> random_colouring(int w) {
    std::vector<Colour> c(shape_[w].size(), kRootColour);
    for (NodeId v = 1; v < c.size(); ++v) c[v] = 1 + static_cast<Colour>(rng_() % cfg_.r);
    return c;
  }

  void check_colouring_budget(int w) const {
    const auto n = rooted_colouring_count(shape_[w].size(), Palette(cfg_.r));
    if (n > limits_.max_colourings) {
      throw GuardExceeded(std::to_string(n) + " colourings of T" + std::to_string(w + 1) + " exceed the engine budget");
    }
  }

  // Duplicator colouring of T(1-a) surviving the pebble rounds, if any.
  std::optional<std::vector<Colour>> surviving_colouring(int a, const std::vector<Colour>& ca) {
    const int b = 1 - a;
    check_colouring_budget(b);
    std::optional<std::vector<Colour>> found;
    for_each_rooted_colouring(shape_[b], Palette(cfg_.r), [&](const std::vector<Colour>& cb) {
      if (found) return;
      ColouredTree ta{shape_[a], ca}, tb{shape_[b], cb};
      PebbleSolver s = a == 0 ? PebbleSolver(ta, tb, Rules::Ehr, limits_.solver) : PebbleSolver(tb, ta, Rules::Ehr, limits_.solver);
      if (s.duplicator_wins({}, cfg_.k)) found = cb;
    });
    return found;
  }

  std::optional<std::vector<Colour>> types_reply(const std::vector<Colour>& c1) {
    TypeTable table(cfg_.k);
    return find_types_game_reply(ColouredTree{shape_[0], c1}, shape_[1], cfg_.m, table);
  }

  void spoiler_move(const Json& move) {
    if (phase_ == Phase::SetRound) {
      const int a = cfg_.kind == GameKind::Types ? 0 : tree_of(move, 0);
      if (cfg_.kind == GameKind::Types && move.value("tree", 1) != 1) throw SessionError(400, "in the types game Spoiler colours T1");
      pending_ = Pending{a, 0, colouring_of(move, a)};
    } else {
      const int a = tree_of(move, 0);
      pending_ = Pending{a, node_of(move, a), {}};
    }
  }

  void duplicator_move(const Json& move) {
    if (!pending_) throw SessionError(409, "it is Spoiler's turn");
    const int b = 1 - pending_->tree;
    if (move.contains("tree") && tree_of(move, b) != b) throw SessionError(400, "Duplicator answers in T" + std::to_string(b + 1));
    if (phase_ == Phase::SetRound) {
      apply_set_round(colouring_of(move, b), {});
    } else {
      apply_pebble(node_of(move, b), {}, {});
    }
  }

  void duplicator_engine() {
    const int a = pending_->tree;
    const int b = 1 - a;
    if (phase_ == Phase::SetRound) {
      std::optional<std::vector<Colour>> reply;
      std::string note;
      if (cfg_.engine == Policy::Random) {
        reply = random_colouring(b);
      } else if (cfg_.kind == GameKind::Types) {
        reply = types_reply(pending_->colouring);
      } else if (cfg_.engine == Policy::Master) {
        ColouredTree spoiler{shape_[a], pending_->colouring};
        auto g = MasterGame::from_set_round(spoiler, shape_[b], cfg_.master, limits_.master);
        if (g) {
          reply = g->base(1).colours;
          master_ = std::make_unique<MasterGame>(std::move(*g));
          swapped_ = a == 1;
        }
      } else {
        reply = surviving_colouring(a, pending_->colouring);
      }
      if (!reply) {
        note = "engine found no winning colouring";
        reply = std::vector<Colour>(shape_[b].size(), 1);
        (*reply)[0] = kRootColour;
      }
      apply_set_round(*reply, note);
      return;
    }
    const NodeId x = pending_->node;
    const Side side = a == 0 ? Side::First : Side::Second;
    NodeId y = 0;
    std::string tag;
    Json aux = nullptr;
    if (master_) {
      try {
        const Side gs = (a == 1) != swapped_ ? Side::Second : Side::First;
        auto rd = master_reply(*master_, mstate_, gs, x);
        y = rd.reply;
        tag = rd.tag;
        aux = swapped_ ? Json{rd.aux[1], rd.aux[0]} : Json{rd.aux[0], rd.aux[1]};
      } catch (const InvariantViolation& e) {
        tag = std::string("failed: ") + e.what();
        y = minimax_reply(side, x);
        master_.reset();
      }
    } else if (cluster_) {
      auto rd = lemma36_reply(*cluster_, cstate_, side, to_game_[a].at(x));
      y = from_game_[b].at(rd.reply);
      tag = rd.tag;
    } else if (cfg_.engine == Policy::Random) {
      y = static_cast<NodeId>(rng_() % shape_[b].size());
    } else {
      y = minimax_reply(side, x);
    }
    apply_pebble(y, tag, aux);
  }

  NodeId minimax_reply(Side side, NodeId x) {
    const int b = side == Side::First ? 1 : 0;
    PebbleSolver* s = solver();
    std::vector<NodeId> cands;
    if (s && s->duplicator_wins(pairs_, rounds_left())) cands = s->winning_replies(pairs_, rounds_left(), side, x);
    if (cands.empty()) {
      for (NodeId v = 0; v < shape_[b].size(); ++v) cands.push_back(v);
    }
    return *pick_shallowest(shape_[b], cands);
  }

  void apply_set_round(std::vector<Colour> reply, const std::string& note) {
    const int a = pending_->tree;
    colours_[a] = pending_->colouring;
    colours_[1 - a] = std::move(reply);
    Json rec{{"phase", cfg_.kind == GameKind::Types ? "colouring" : "set_round"},
             {"spoiler_tree", a + 1},
             {"spoiler_colouring", *colours_[a]},
             {"duplicator_colouring", *colours_[1 - a]}};
    if (!note.empty()) rec["note"] = note;
    history_.push_back(rec);
    pending_.reset();
    solver_.reset();
    if (cfg_.kind == GameKind::Types) {
      const Verdict v = types_game_verdict(coloured(0), coloured(1), Palette(cfg_.r), cfg_.m, cfg_.k);
      finish(v.winner, v.duplicator_wins() ? "every type occurs equally often up to the cap" : join(v.witness));
      return;
    }
    if (cfg_.engine == Policy::Master && !master_ && cfg_.human == Player::Spoiler) {
      history_.back()["note"] = "master strategy has no reply; the engine falls back to the solver";
    }
    phase_ = Phase::Pebble;
  }

  void apply_pebble(NodeId y, const std::string& tag, const Json& aux) {
    const int a = pending_->tree;
    const NodeId x = pending_->node;
    const PebblePair p = a == 0 ? PebblePair{x, y} : PebblePair{y, x};
    pairs_.push_back(p);
    Json rec{{"phase", "pebble"}, {"round", pairs_.size() - cfg_.designated.size()}, {"spoiler_tree", a + 1},
             {"spoiler_node", x}, {"duplicator_node", y}, {"pair", {p.x, p.y}}};
    if (!tag.empty()) rec["tag"] = tag;
    if (!aux.is_null()) rec["aux"] = aux;
    rec["monitor"] = monitor();
    history_.push_back(rec);
    pending_.reset();
    if (rounds_left() == 0) {
      const std::string why = cfg_.kind == GameKind::Dehr ? dehr_violation(coloured(0), coloured(1), pairs_)
                                                          : ehr_violation(coloured(0), coloured(1), pairs_);
      finish(why.empty() ? Player::Duplicator : Player::Spoiler,
             why.empty() ? (cfg_.kind == GameKind::Dehr ? "all distance-preserving conditions hold"
                                                        : "all pebble-phase conditions hold")
                         : why);
    }
  }

  Json monitor() {
    Json out = Json::array();
    if (master_) {
      for (const auto& s : check_C_conditions(*master_, mstate_)) out.push_back(s);
      for (const auto& s : remark_violations(*master_, mstate_)) out.push_back(s);
    } else if (cluster_) {
      for (const auto& s : check_cluster_conditions(*cluster_, cstate_)) out.push_back(s);
    }
    const std::string ref = cfg_.kind == GameKind::Dehr ? dehr_violation(coloured(0), coloured(1), pairs_)
                                                        : ehr_violation(coloured(0), coloured(1), pairs_);
    if (!ref.empty()) out.push_back("referee: " + ref);
    return out;
  }

  void finish(Player winner, const std::string& reason) {
    phase_ = Phase::Finished;
    verdict_ = Json{{"winner", to_string(winner)}, {"reason", reason}};
  }

  static std::string join(const std::vector<std::string>& v) {
    std::string out;
    for (const auto& s : v) out += (out.empty() ? "" : "; ") + s;
    return out;
  }

  // The engine moves while it is Spoiler's turn and the human is Duplicator.
  void engine_turn() {
    if (cfg_.human != Player::Duplicator || phase_ == Phase::Finished || pending_) return;
    if (phase_ == Phase::SetRound) {
      std::optional<std::vector<Colour>> pick;
      if (cfg_.engine == Policy::Minimax) {
        check_colouring_budget(0);
        for_each_rooted_colouring(shape_[0], Palette(cfg_.r), [&](const std::vector<Colour>& c) {
          if (pick) return;
          const bool answered = cfg_.kind == GameKind::Types ? types_reply(c).has_value() : surviving_colouring(0, c).has_value();
          if (!answered) pick = c;
        });
      }
      pending_ = Pending{0, 0, pick ? *pick : random_colouring(0)};
      return;
    }
    if (cfg_.engine == Policy::Random) {
      const int w = static_cast<int>(rng_() % 2);
      pending_ = Pending{w, static_cast<NodeId>(rng_() % shape_[w].size()), {}};
      return;
    }
    PebbleSolver* s = solver();
    if (s && !s->duplicator_wins(pairs_, rounds_left())) {
      for (int w = 0; w < 2; ++w) {
        for (NodeId x = 0; x < shape_[w].size(); ++x) {
          if (s->winning_replies(pairs_, rounds_left(), w == 0 ? Side::First : Side::Second, x).empty()) {
            pending_ = Pending{w, x, {}};
            return;
          }
        }
      }
    }
    pending_ = Pending{0, 0, {}};
  }

  Json spoiler_annotations(int w, NodeId x) {
    Json notes = Json::array();
    if (master_) {
      const int a = w ^ static_cast<int>(swapped_);
      const MasterParams& p = master_->params();
      const RootedTree& ta = master_->base(a).tree;
      const auto s = mstate_.rounds();
      bool near = false;
      for (std::uint32_t i = 0; i <= s; ++i) {
        if (close_within(i, s + 1, distance(ta, x, mstate_.pts[i][a]), p.e)) {
          notes.push_back("close to pair " + std::to_string(i));
          near = true;
        }
      }
      if (!near) notes.push_back("far");
      for (std::uint32_t i = 1; i <= s; ++i) {
        if (threatens_within(i, s + 1, ta.depth(mstate_.pts[i][a]), ta.depth(x), mstate_.aux[i][a] == ta.root(), p.D, p.e)) {
          notes.push_back("threatens pair " + std::to_string(i));
        }
      }
      MasterState copy = mstate_;
      try {
        auto rd = master_reply(*master_, copy, a == 0 ? Side::First : Side::Second, x);
        notes.push_back("case " + rd.tag);
      } catch (const std::exception& e) {
        notes.push_back(std::string("case error: ") + e.what());
      }
      return notes;
    }
    if (cluster_) {
      ClusterState copy = cstate_;
      auto rd = lemma36_reply(*cluster_, copy, w == 0 ? Side::First : Side::Second, to_game_[w].at(x));
      notes.push_back("case " + rd.tag);
    }
    if (PebbleSolver* s = solver(); s && s->winning_replies(pairs_, rounds_left(), w == 0 ? Side::First : Side::Second, x).empty()) {
      notes.push_back("wins for Spoiler");
    }
    return notes;
  }

  std::string id_;
  SessionConfig cfg_;
  SessionLimits limits_;
  std::mt19937_64 rng_;
  Phase phase_ = Phase::SetRound;
  std::array<RootedTree, 2> shape_;
  std::array<std::optional<std::vector<Colour>>, 2> colours_;
  std::vector<PebblePair> pairs_;
  std::optional<Pending> pending_;
  Json history_ = Json::array();
  Json verdict_ = nullptr;
  std::unique_ptr<PebbleSolver> solver_;
  std::unique_ptr<MasterGame> master_;
  bool swapped_ = false;
  MasterState mstate_;
  std::unique_ptr<ClusterGame> cluster_;
  ClusterState cstate_;
  std::array<std::vector<NodeId>, 2> to_game_, from_game_;
};

/// Session store and request router. Requests to different sessions run
/// independently; moves within one session are applied one at a time.
class SessionService {
 public:
  struct Response {
    int status = 200;
    Json body;
  };

  explicit SessionService(SessionLimits limits = {}) : limits_(limits) {}

  Json create(const Json& config) {
    auto cfg = SessionConfig::from_json(config, limits_);
    const std::string id = "s" + std::to_string(++counter_);
    auto entry = std::make_shared<Entry>();
    entry->session = std::make_unique<Session>(id, std::move(cfg), limits_);
    Json out = entry->session->state();
    std::lock_guard lock(mutex_);
    sessions_.emplace(id, std::move(entry));
    return out;
  }

  Json get(const std::string& id) {
    auto e = find(id);
    std::lock_guard lock(e->mutex);
    return e->session->state();
  }

  Json move(const std::string& id, const Json& move) {
    auto e = find(id);
    std::lock_guard lock(e->mutex);
    return e->session->submit(move);
  }

  Json hint(const std::string& id) {
    auto e = find(id);
    std::lock_guard lock(e->mutex);
    return e->session->hint();
  }

  /// Routes POST /sessions, GET /sessions/{id}, POST /sessions/{id}/moves
  /// and GET /sessions/{id}/hint. Errors come back as {"error": ...}.
  Response handle(const std::string& method, const std::string& path, const std::string& body) {
    try {
      std::vector<std::string> parts;
      for (std::size_t i = 0; i < path.size();) {
        std::size_t j = path.find('/', i);
        if (j == std::string::npos) j = path.size();
        if (j > i) parts.push_back(path.substr(i, j - i));
        i = j + 1;
      }
      if (parts.empty() || parts[0] != "sessions") return {404, Json{{"error", "no such route"}}};
      auto parse = [&] {
        try {
          return body.empty() ? Json::object() : Json::parse(body);
        } catch (const nlohmann::json::exception& e) {
          throw SessionError(400, std::string("body is not JSON: ") + e.what());
        }
      };
      if (parts.size() == 1 && method == "POST") return {201, create(parse())};
      if (parts.size() == 2 && method == "GET") return {200, get(parts[1])};
      if (parts.size() == 3 && parts[2] == "moves" && method == "POST") return {200, move(parts[1], parse())};
      if (parts.size() == 3 && parts[2] == "hint" && method == "GET") return {200, hint(parts[1])};
      return {404, Json{{"error", "no such route"}}};
    } catch (const SessionError& e) {
      return {e.status(), Json{{"error", e.what()}}};
    } catch (const GuardExceeded& e) {
      return {422, Json{{"error", std::string("guard exceeded: ") + e.what()}}};
    } catch (const InvalidArgument& e) {
      return {400, Json{{"error", e.what()}}};
    } catch (const std::exception& e) {
      return {500, Json{{"error", e.what()}}};
    }
  }

  std::size_t size() {
    std::lock_guard lock(mutex_);
    return sessions_.size();
  }

 private:
  struct Entry {
    std::mutex mutex;
    std::unique_ptr<Session> session;
  };

  std::shared_ptr<Entry> find(const std::string& id) {
    std::lock_guard lock(mutex_);
    auto it = sessions_.find(id);
    if (it == sessions_.end()) throw SessionError(404, "no session " + id);
    return it->second;
  }

  SessionLimits limits_;
  std::atomic<std::uint64_t> counter_{0};
  std::mutex mutex_;
  std::map<std::string, std::shared_ptr<Entry>> sessions_;
};

}  // namespace ehrlab
