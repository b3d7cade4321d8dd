#include <gtest/gtest.h>

#include <map>
#include <random>
#include <set>

#include "ehrlab/literal.hpp"
#include "ehrlab/strategies.hpp"
#include "support.hpp"

using namespace ehrlab;

namespace {

// Path with `len` nodes above `tail`, whose root sits at depth len.
ColouredTree prefixed(std::uint32_t len, const std::string& tail) {
  std::string s = "c0(";
  for (std::uint32_t i = 1; i < len; ++i) s += "c1(";
  s += tail;
  for (std::uint32_t i = 0; i < len; ++i) s += ")";
  return parse_tree(s);
}

ColouredTree random_colouring(const RootedTree& t, std::uint32_t r, std::mt19937_64& rng) {
  std::vector<Colour> c(t.size(), 0);
  for (NodeId v = 1; v < t.size(); ++v) c[v] = 1 + static_cast<Colour>(rng() % r);
  return ColouredTree{t, c};
}

// Rational oracle for lhs <= coeff * 3^exp.
bool oracle_leq(std::int64_t lhs, std::int64_t coeff, int exp) {
  long double rhs = coeff;
  for (int i = 0; i < std::abs(exp); ++i) rhs = exp > 0 ? rhs * 3 : rhs / 3;
  return static_cast<long double>(lhs) <= rhs + 1e-12L;
}

}  // namespace

TEST(Thresholds, SpecExamples) {
  EXPECT_TRUE(close(1, 1, 10, 1));
  EXPECT_FALSE(close(1, 1, 19, 1));
  EXPECT_TRUE(close(1, 1, 18, 1));
  EXPECT_FALSE(close(3, 1, 7, 1));
  EXPECT_TRUE(close(3, 1, 2, 1));

  EXPECT_FALSE(threatens(1, 2, 100, 100, true, 108, 1));
  EXPECT_TRUE(threatens(1, 2, 208, 100, false, 108, 1));
  // Threshold at i v j = 2, k = 1 is 2 * 3^1 = 6.
  EXPECT_TRUE(threatens(1, 2, 106, 100, false, 108, 1));
  EXPECT_FALSE(threatens(1, 2, 107, 100, false, 108, 1));
  EXPECT_TRUE(threatens(1, 2, 100, 106, false, 108, 1));
}

TEST(Thresholds, SymmetricAndExact) {
  for (std::int64_t lhs = -3; lhs <= 40; ++lhs) {
    for (int exp = -4; exp <= 3; ++exp) {
      EXPECT_EQ(detail::leq_pow3(lhs, 2, exp), oracle_leq(lhs, 2, exp)) << lhs << " " << exp;
    }
  }
  for (std::uint32_t i = 0; i < 4; ++i) {
    for (std::uint32_t j = 0; j < 4; ++j) {
      for (std::uint64_t rho = 0; rho < 30; ++rho) EXPECT_EQ(close_within(i, j, rho, 2), close_within(j, i, rho, 2));
      for (std::int64_t d1 = 0; d1 < 40; d1 += 3) {
        for (std::int64_t d2 = 0; d2 < 40; d2 += 5) {
          EXPECT_EQ(threatens_within(i, j, d1, d2, false, 12, 2), threatens_within(j, i, d2, d1, false, 12, 2));
        }
      }
    }
  }
}

TEST(MasterParams, PresetsAndValidation) {
  auto p = MasterParams::paper(1);
  EXPECT_EQ(p.M, 27u);
  EXPECT_EQ(p.D, 108u);
  EXPECT_EQ(p.D0, 2700u);
  EXPECT_NO_THROW(p.validate());
  EXPECT_NO_THROW(MasterParams::surrogate().validate());
  EXPECT_THROW((MasterParams{1, 12, 48, 4, 1}.validate()), InvalidArgument);
  EXPECT_THROW((MasterParams{3, 12, 48, 3, 1}.validate()), InvalidArgument);
  EXPECT_THROW((MasterParams{1, 11, 48, 3, 1}.validate()), InvalidArgument);
}

TEST(MasterGame, PaperScaleIsRefused) {
  const auto p = MasterParams::paper(1);
  // The trees themselves are constructible at this scale.
  auto t1 = prefixed(p.D0 / 2 + 2, "c1(c1,c2)");
  EXPECT_GT(t1.size(), p.D0 / 2);
  EXPECT_THROW(MasterGame(t1, t1, p), GuardExceeded);
  EXPECT_THROW(MasterGame::from_set_round(t1, t1.tree, p), GuardExceeded);
}

TEST(MasterGame, HypothesisIsChecked) {
  auto p = MasterParams::surrogate();
  auto bushy = parse_tree("c0(c1,c1(c1))");
  EXPECT_THROW(MasterGame(bushy, bushy, p), InvalidArgument);
  auto good = prefixed(26, "c1(c1,c2)");
  auto other = prefixed(26, "c1(c2,c2)");
  EXPECT_THROW(MasterGame(good, other, p), InvalidArgument);
  EXPECT_NO_THROW(MasterGame(good, good, p));
}

TEST(MasterMonitors, FreshStateAndColourMismatch) {
  auto t = prefixed(26, "c1(c1,c2(c1))");
  MasterGame g(t, t, MasterParams::surrogate());
  MasterState st;
  EXPECT_TRUE(check_C_conditions(g, st).empty());
  EXPECT_TRUE(remark_violations(g, st).empty());
  // Pebble a c1 leaf against the c2 node under the same auxiliary node.
  const NodeId top = g.path_node(0, 24);
  const auto kids = t.tree.children(top);
  MasterState bad;
  bad.pts.push_back({kids[0], kids[1]});
  bad.aux.push_back({top, top});
  bad.tags.push_back("X");
  auto v = check_C_conditions(g, bad);
  ASSERT_FALSE(v.empty());
  EXPECT_TRUE(std::any_of(v.begin(), v.end(), [](const std::string& s) { return s.rfind("C5", 0) == 0; }));
}

TEST(MasterStrategy, MirrorReproducesTheSameNode) {
  // Colours distinguish every sibling pair, so the only colour-preserving
  // automorphism is the identity.
  auto t = prefixed(25, "c1(c1(c2,c1(c1)),c2(c1))");
  MasterGame g(t, t, MasterParams::surrogate());
  for (int w = 0; w < 2; ++w) {
    for (NodeId x = 0; x < t.size(); ++x) {
      MasterState st;
      auto r = master_reply(g, st, w == 0 ? Side::First : Side::Second, x);
      EXPECT_EQ(r.reply, x) << r.tag;
      EXPECT_TRUE(c_implies_ehr(g, st).holds);
    }
  }
}

TEST(MasterStrategy, SurrogatePlayouts) {
  const auto p = MasterParams::surrogate();
  const std::vector<std::pair<std::string, std::string>> tails{
      {"c1(c1,c1(c1))", "c1(c1,c1,c1(c1))"},
      {"c1(c1(c1),c1)", "c1(c1(c1),c1(c1),c1)"},
  };
  std::mt19937_64 rng(2024);
  std::size_t games = 0;
  std::map<std::string, int> tags;
  for (std::uint32_t depth : {24u, 30u, 50u}) {
    for (const auto& [a, b] : tails) {
      const auto t1 = prefixed(depth, a).tree;
      const auto t2 = prefixed(depth, b).tree;
      for (int sample = 0; sample < 6; ++sample) {
        auto g = MasterGame::from_set_round(random_colouring(t1, 2, rng), t2, p);
        ASSERT_TRUE(g.has_value());
        ++games;
        auto rep = exhaustive_master_playouts(*g, 10000);
        EXPECT_FALSE(rep.truncated);
        EXPECT_EQ(rep.losses, 0u) << (rep.failures.empty() ? "" : rep.failures.front());
        EXPECT_EQ(rep.monitor_violations, 0u) << (rep.failures.empty() ? "" : rep.failures.front());
        EXPECT_EQ(rep.implication_failures, 0u);
        for (int w = 0; w < 2; ++w) {
          for (NodeId x = 0; x < g->base(w).size(); ++x) {
            MasterState st;
            ++tags[master_reply(*g, st, w == 0 ? Side::First : Side::Second, x).tag];
          }
        }
      }
    }
  }
  EXPECT_EQ(games, 36u);
  EXPECT_GT(tags["CLOSE"], 0);
  EXPECT_GT(tags["NT1"] + tags["NT2"], 0);
}

namespace {

// k = 2 with M = 9: two rounds make threats and every far case reachable.
const MasterParams kTwoRounds{2, 36, 72, 9, 2};

}  // namespace

TEST(MasterStrategy, TwoRoundPlayoutsWithThreats) {
  const auto t1 = prefixed(38, "c1(c1(c1),c1(c1))").tree;
  const auto t2 = prefixed(38, "c1(c1(c1),c1(c1),c1(c1))").tree;
  std::mt19937_64 rng(99);
  std::map<std::string, int> tags;
  int games = 0;
  for (int sample = 0; sample < 40 && games < 4; ++sample) {
    auto g = MasterGame::from_set_round(random_colouring(t1, 2, rng), t2, kTwoRounds);
    if (!g) continue;
    ++games;
    auto rep = exhaustive_master_playouts(*g, 20000);
    EXPECT_FALSE(rep.truncated);
    EXPECT_EQ(rep.losses, 0u) << (rep.failures.empty() ? "" : rep.failures.front());
    EXPECT_EQ(rep.monitor_violations, 0u) << (rep.failures.empty() ? "" : rep.failures.front());
    EXPECT_EQ(rep.implication_failures, 0u);
    // Trace assertion: a threatening far move ends with congruent aux depths.
    for (NodeId x1 = 0; x1 < g->base(0).size(); ++x1) {
      for (int w = 0; w < 2; ++w) {
        for (NodeId x2 = 0; x2 < g->base(w).size(); ++x2) {
          MasterState st;
          master_reply(*g, st, Side::First, x1);
          auto r = master_reply(*g, st, w == 0 ? Side::First : Side::Second, x2);
          ++tags[r.tag];
          if (r.tag == "T1" || r.tag == "T2") {
            const auto& t = g->base(w).tree;
            EXPECT_EQ(centered_mod(static_cast<std::int64_t>(t.depth(st.aux[2][w])) - t.depth(st.aux[1][w]), 36), 0);
          }
        }
      }
    }
  }
  EXPECT_EQ(games, 4);
  // NT1 cannot occur here: a child of u_1 is within the threat window of x_1.
  for (const char* tag : {"CLOSE", "T1", "T2", "T3", "NT2"}) EXPECT_GT(tags[tag], 0) << tag;
  EXPECT_EQ(tags["NT1"], 0);
}

TEST(MasterMonitors, MutationsAreCaughtByPremises) {
  const auto t1 = prefixed(38, "c1(c1(c1),c1(c2))");
  MasterGame g(t1, t1, kTwoRounds);
  std::mt19937_64 rng(5);
  int ehr_broken = 0;
  int c4_flagged = 0;
  for (int trial = 0; trial < 400; ++trial) {
    MasterState st;
    master_reply(g, st, Side::First, static_cast<NodeId>(rng() % t1.size()));
    master_reply(g, st, Side::Second, static_cast<NodeId>(rng() % t1.size()));
    MasterState mutated = st;
    const std::size_t i = 1 + rng() % 2;
    mutated.pts[i][1] = static_cast<NodeId>(rng() % t1.size());
    auto res = c_implies_ehr(g, mutated);
    EXPECT_TRUE(res.holds);
    if (!res.ehr_violation.empty()) {
      ++ehr_broken;
      EXPECT_FALSE(res.premise_violations.empty());
    }
    for (const auto& v : res.premise_violations) c4_flagged += v.rfind("C4", 0) == 0;
  }
  EXPECT_GT(ehr_broken, 0);
  EXPECT_GT(c4_flagged, 0);
}

TEST(MasterStrategy, RefusesExtraRounds) {
  auto t = prefixed(26, "c1(c1,c2)");
  MasterGame g(t, t, MasterParams::surrogate());
  MasterState st;
  master_reply(g, st, Side::First, 3);
  EXPECT_THROW(master_reply(g, st, Side::First, 3), InvalidArgument);
  MasterState fresh;
  EXPECT_THROW(master_reply(g, fresh, Side::First, 999), InvalidArgument);
}

// ---------------------------------------------------------------------------
// Cluster strategy.

TEST(ClusterStrategy, RootToRoot) {
  auto a = parse_tree("c0(c1,c1(c2))");
  ClusterGame g(a, a, 2, 2);
  ClusterState st;
  auto r = lemma36_reply(g, st, Side::First, 0);
  EXPECT_EQ(r.reply, 0u);
  EXPECT_EQ(r.tag, "B1");
  EXPECT_THROW(ClusterGame(a, parse_tree("c0(c1)"), 2, 2), InvalidArgument);
}

TEST(ClusterStrategy, TwoMovesInOneBranchShareAPartnerBranch) {
  auto a = parse_tree("c0(c1(c2,c1),c1(c2,c1),c2)");
  auto b = parse_tree("c0(c2,c1(c1,c2),c1(c2,c1),c1(c1,c2))");
  ClusterGame g(a, b, 2, 2);
  ClusterState st;
  const NodeId branch = g.tree(0).tree.children(0).front();
  const auto inner = g.tree(0).tree.children(branch);
  const auto first = lemma36_reply(g, st, Side::First, inner[0]);
  const auto second = lemma36_reply(g, st, Side::First, inner[1]);
  EXPECT_EQ(first.tag, "B3");
  EXPECT_EQ(second.tag, "B2");
  EXPECT_EQ(g.branch_of(1, first.reply), g.branch_of(1, second.reply));
  EXPECT_EQ(g.branch_type(0, branch), g.branch_type(1, g.branch_of(1, first.reply)));
  EXPECT_TRUE(check_cluster_conditions(g, st).empty());
  EXPECT_TRUE(dehr_check(g.tree(0), g.tree(1), st.pairs));
}

TEST(ClusterStrategy, ExhaustiveOnSmallCorpus) {
  // Node subtrees of trees with at most 5 nodes, grouped by type.
  for (std::uint32_t k = 1; k <= 2; ++k) {
    for (std::uint32_t m = 0; m <= 2; ++m) {
      TypeTable table(k);
      std::map<TypeId, std::map<std::string, ColouredTree>> classes;
      testsupport::for_each_coloured(5, 2, [&](const ColouredTree& t) {
        const auto ty = compute_types(t, m, table).nodes;
        for (NodeId v = 0; v < t.size(); ++v) {
          auto sub = truncate(subtree_at(t, v), m);
          classes[ty[v]].emplace(canonical_literal(sub), sub);
        }
      });
      std::uint64_t losses = 0, violations = 0, playouts = 0;
      for (const auto& [ty, members] : classes) {
        for (const auto& [ka, a] : members) {
          for (const auto& [kb, b] : members) {
            ASSERT_TRUE(solve_dehr(a, b, k).duplicator_wins()) << ka << " vs " << kb;
            ClusterGame g(a, b, m, k);
            auto rep = exhaustive_cluster_playouts(g);
            losses += rep.losses;
            violations += rep.monitor_violations;
            playouts += rep.playouts;
            ASSERT_EQ(rep.losses, 0u) << ka << " vs " << kb << ": " << rep.failures.front();
          }
        }
      }
      EXPECT_EQ(losses, 0u);
      EXPECT_EQ(violations, 0u);
      EXPECT_GT(playouts, 0u);
    }
  }
}
