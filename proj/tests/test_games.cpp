#include <gtest/gtest.h>

#include <map>
#include <random>
#include <set>

#include "ehrlab/games.hpp"
#include "ehrlab/literal.hpp"
#include "ehrlab/type_search.hpp"
#include "ehrlab/types.hpp"
#include "support.hpp"

using namespace ehrlab;
using testsupport::coloured_corpus;
using testsupport::naive_duplicator_wins;
using testsupport::naive_referee;

TEST(TypesGame, Examples) {
  auto a = parse_tree("c0(c1,c2(c1))");
  EXPECT_TRUE(types_game_verdict(a, a, Palette(2), 2, 2).duplicator_wins());
  auto one = parse_tree("c0(c1)");
  auto two = parse_tree("c0(c1,c1)");
  EXPECT_TRUE(types_game_verdict(one, two, Palette(1), 0, 1).duplicator_wins());
  auto v = types_game_verdict(one, two, Palette(1), 0, 2);
  EXPECT_FALSE(v.duplicator_wins());
  ASSERT_EQ(v.witness.size(), 1u);
  EXPECT_EQ(v.witness[0], "c1 T1:1 T2:2");
  EXPECT_THROW(types_game_verdict(one, parse_tree("c0(c2)"), Palette(1), 0, 1), InvalidArgument);
}

TEST(TypesGame, MatchesCensusComparison) {
  const auto corpus = coloured_corpus(4, 2);
  for (std::uint32_t k = 1; k <= 2; ++k) {
    TypeTable table(k);
    for (const auto& a : corpus) {
      for (const auto& b : corpus) {
        const bool expected = census(a, 1, k, table) == census(b, 1, k, table);
        EXPECT_EQ(types_game_verdict(a, b, Palette(2), 1, k, table).duplicator_wins(), expected);
      }
    }
  }
}

TEST(Dehr, RefereeExamples) {
  auto a = parse_tree("c0(c1,c2)");
  auto b = parse_tree("c0(c2,c1)");
  EXPECT_TRUE(dehr_check(a, b, {}));
  EXPECT_FALSE(dehr_check(parse_tree("c0"), parse_tree("c1"), {}));
  EXPECT_FALSE(dehr_check(a, b, {{1, 1}}));
  EXPECT_TRUE(dehr_check(a, b, {{1, 2}, {2, 1}}));
  EXPECT_FALSE(dehr_check(a, b, {{1, 2}, {1, 1}}));
  EXPECT_THROW(dehr_check(a, b, {{5, 0}}), InvalidArgument);
  // Distance differs but parenthood and colours agree.
  auto deep = parse_tree("c0(c1(c1(c1)))");
  auto wide = parse_tree("c0(c1(c1),c1)");
  EXPECT_FALSE(dehr_check(deep, wide, {{3, 2}, {1, 3}}));
  EXPECT_TRUE(ehr_check(deep, wide, {{3, 2}, {1, 3}}));
}

TEST(Dehr, RefereeMatchesOracleOnRandomHistories) {
  const auto corpus = coloured_corpus(5, 2);
  std::mt19937_64 rng(7);
  std::uniform_int_distribution<std::size_t> pick(0, corpus.size() - 1);
  for (int trial = 0; trial < 20000; ++trial) {
    const auto& a = corpus[pick(rng)];
    const auto& b = corpus[pick(rng)];
    const std::size_t len = rng() % 4;
    std::vector<PebblePair> pairs;
    for (std::size_t i = 0; i < len; ++i) {
      pairs.push_back({static_cast<NodeId>(rng() % a.size()), static_cast<NodeId>(rng() % b.size())});
    }
    ASSERT_EQ(dehr_check(a, b, pairs), naive_referee(a, b, pairs, true));
    ASSERT_EQ(ehr_check(a, b, pairs), naive_referee(a, b, pairs, false));
  }
}

TEST(Dehr, SolverExamples) {
  EXPECT_TRUE(solve_dehr(parse_tree("c0"), parse_tree("c0"), 3).duplicator_wins());
  auto v = solve_dehr(parse_tree("c0(c1)"), parse_tree("c0(c1(c1))"), 2);
  EXPECT_FALSE(v.duplicator_wins());
  EXPECT_FALSE(v.witness.empty());
  EXPECT_TRUE(solve_dehr(parse_tree("c0(c1)"), parse_tree("c0(c1(c1))"), 0).duplicator_wins());
  EXPECT_THROW(solve_dehr(parse_tree("c0"), parse_tree("c0"), 1, {{0, 0}, {0, 0}}), InvalidArgument);
  SolverLimits tiny;
  tiny.max_node_product = 3;
  EXPECT_THROW(solve_dehr(parse_tree("c0(c1)"), parse_tree("c0(c1)"), 1, {}, tiny), GuardExceeded);
}

TEST(Dehr, SolverMatchesGameTreeSearch) {
  const auto corpus = coloured_corpus(4, 1);
  for (const auto& a : corpus) {
    for (const auto& b : corpus) {
      for (std::uint32_t k = 0; k <= 2; ++k) {
        PebbleSolver dehr(a, b, Rules::Dehr);
        PebbleSolver ehr(a, b, Rules::Ehr);
        ASSERT_EQ(dehr.duplicator_wins({}, k), naive_duplicator_wins(a, b, {}, k, true))
            << serialize_tree(a) << " " << serialize_tree(b) << " k=" << k;
        ASSERT_EQ(ehr.duplicator_wins({}, k), naive_duplicator_wins(a, b, {}, k, false));
      }
    }
  }
}

TEST(Dehr, SwapSymmetry) {
  const auto corpus = coloured_corpus(5, 1);
  for (const auto& a : corpus) {
    for (const auto& b : corpus) {
      for (std::uint32_t k = 1; k <= 2; ++k) {
        EXPECT_EQ(solve_dehr(a, b, k).duplicator_wins(), solve_dehr(b, a, k).duplicator_wins());
      }
    }
  }
}

TEST(Dehr, ZeroRoundsIsRootColour) {
  for (Colour c1 = 0; c1 < 3; ++c1) {
    for (Colour c2 = 0; c2 < 3; ++c2) {
      ColouredTree a = ColouredTree::single(c1);
      a.add_child(0, 1);
      ColouredTree b = ColouredTree::single(c2);
      EXPECT_EQ(solve_dehr(a, b, 0).duplicator_wins(), c1 == c2);
    }
  }
}

TEST(Dehr, WinnableConfigurationsSatisfyConditions) {
  const auto corpus = coloured_corpus(4, 1);
  for (const auto& a : corpus) {
    for (const auto& b : corpus) {
      PebbleSolver solver(a, b, Rules::Dehr);
      for (NodeId x1 = 0; x1 < a.size(); ++x1) {
        for (NodeId y1 = 0; y1 < b.size(); ++y1) {
          for (NodeId x2 = 0; x2 < a.size(); ++x2) {
            for (NodeId y2 = 0; y2 < b.size(); ++y2) {
              std::vector<PebblePair> cfg{{x1, y1}, {x2, y2}};
              if (solver.duplicator_wins(cfg, 1)) {
                EXPECT_TRUE(dehr_check(a, b, cfg));
              }
            }
          }
        }
      }
    }
  }
}

TEST(Dehr, WinImpliesEhrWin) {
  const auto corpus = coloured_corpus(5, 1);
  for (const auto& a : corpus) {
    for (const auto& b : corpus) {
      for (std::uint32_t k = 1; k <= 3; ++k) {
        PebbleSolver dehr(a, b, Rules::Dehr);
        if (!dehr.duplicator_wins({}, k)) continue;
        PebbleSolver ehr(a, b, Rules::Ehr);
        EXPECT_TRUE(ehr.duplicator_wins({}, k));
      }
    }
  }
}

TEST(Dehr, SameTypeRootsWinOnTruncations) {
  const auto corpus = coloured_corpus(6, 2);
  for (std::uint32_t k = 1; k <= 2; ++k) {
    for (std::uint32_t m = 1; m <= 2; ++m) {
      TypeTable table(k);
      std::map<TypeId, std::vector<std::size_t>> by_root;
      for (std::size_t i = 0; i < corpus.size(); ++i) {
        by_root[compute_types(corpus[i], m, table).nodes[0]].push_back(i);
      }
      for (const auto& [type, members] : by_root) {
        for (std::size_t i : members) {
          for (std::size_t j : members) {
            if (j < i) continue;
            const auto a = truncate(corpus[i], m);
            const auto b = truncate(corpus[j], m);
            EXPECT_TRUE(solve_dehr(a, b, k).duplicator_wins())
                << serialize_tree(corpus[i]) << " " << serialize_tree(corpus[j]) << " m=" << m << " k=" << k;
          }
        }
      }
    }
  }
}

TEST(CorrespondingNodes, IsomorphicImageIsIncluded) {
  auto a = parse_tree("c0(c1(c2),c2)");
  auto b = parse_tree("c0(c2,c1(c2))");
  // a: 0 root, 1 c1, 2 c2 under 1, 3 c2. b: 0 root, 1 c2, 2 c1, 3 c2 under 2.
  const std::map<NodeId, NodeId> iso{{0, 0}, {1, 2}, {2, 3}, {3, 1}};
  for (auto [u, image] : iso) {
    auto c = corresponding_nodes(a, b, 2, {}, Side::First, u);
    EXPECT_NE(std::find(c.begin(), c.end(), image), c.end()) << u;
  }
}

TEST(CorrespondingNodes, ExplicitSetMatchesEnumeration) {
  auto a = parse_tree("c0(c1,c1(c1))");
  auto b = parse_tree("c0(c1(c1),c1)");
  for (NodeId u = 0; u < a.size(); ++u) {
    std::vector<NodeId> expected;
    for (NodeId v = 0; v < b.size(); ++v) {
      if (solve_dehr(a, b, 2, {{u, v}}).duplicator_wins()) expected.push_back(v);
    }
    EXPECT_EQ(corresponding_nodes(a, b, 2, {}, Side::First, u), expected);
  }
  EXPECT_EQ(corresponding_nodes(a, b, 2, {}, Side::First, 1), (std::vector<NodeId>{3}));
  EXPECT_EQ(corresponding_nodes(a, b, 2, {}, Side::Second, 3), (std::vector<NodeId>{1}));
  EXPECT_THROW(corresponding_nodes(parse_tree("c0(c1)"), parse_tree("c0(c1(c1))"), 2, {}, Side::First, 1),
               InvalidArgument);
}

TEST(CorrespondingNodes, NonEmptyWhenWinnable) {
  const auto corpus = coloured_corpus(5, 1);
  for (const auto& a : corpus) {
    for (const auto& b : corpus) {
      PebbleSolver solver(a, b, Rules::Dehr);
      if (!solver.duplicator_wins({}, 2)) continue;
      for (NodeId u = 0; u < a.size(); ++u) {
        EXPECT_FALSE(corresponding_nodes(solver, 2, {}, Side::First, u).empty());
      }
      for (NodeId v = 0; v < b.size(); ++v) {
        EXPECT_FALSE(corresponding_nodes(solver, 2, {}, Side::Second, v).empty());
      }
    }
  }
}

TEST(SetPebble, Examples) {
  auto t = parse_tree("c0(c1,c1(c1))").tree;
  EXPECT_TRUE(solve_set_pebble_ehr(t, t, Palette(2), 2).duplicator_wins());
  EXPECT_TRUE(solve_set_pebble_ehr(parse_tree("c0").tree, t, Palette(2), 0).duplicator_wins());
  auto v = solve_set_pebble_ehr(parse_tree("c0").tree, parse_tree("c0(c1)").tree, Palette(1), 1);
  EXPECT_FALSE(v.duplicator_wins());
  EXPECT_FALSE(v.witness.empty());
  SetPebbleOptions opts;
  opts.max_colouring_pairs = 10;
  EXPECT_THROW(solve_set_pebble_ehr(t, t, Palette(3), 1, opts), GuardExceeded);
}

TEST(SetPebble, SymmetricConventionIsStronger) {
  const auto shapes = enumerate_shapes_up_to(4);
  SetPebbleOptions sym;
  sym.symmetric = true;
  for (const auto& a : shapes) {
    for (const auto& b : shapes) {
      const bool paper = solve_set_pebble_ehr(a, b, Palette(1), 2).duplicator_wins();
      const bool both = solve_set_pebble_ehr(a, b, Palette(1), 2, sym).duplicator_wins();
      EXPECT_TRUE(!both || paper);
      EXPECT_EQ(both, solve_set_pebble_ehr(b, a, Palette(1), 2, sym).duplicator_wins());
    }
  }
}

// ---------------------------------------------------------------------------
// Census-matching reply search against enumeration of every rooted colouring.

TEST(ReplySearch, ExistenceMatchesEnumeration) {
  std::mt19937_64 rng(11);
  const auto shapes = enumerate_shapes_up_to(6);
  for (std::uint32_t k = 1; k <= 2; ++k) {
    for (std::uint32_t m = 0; m <= 2; ++m) {
      TypeTable table(k);
      for (int trial = 0; trial < 60; ++trial) {
        const auto& s1 = shapes[rng() % shapes.size()];
        const auto& s2 = shapes[rng() % shapes.size()];
        std::vector<Colour> c1(s1.size(), 0);
        for (NodeId v = 1; v < s1.size(); ++v) c1[v] = 1 + rng() % 2;
        const ColouredTree t1{s1, c1};
        const TypeCensus target = census(t1, m, k, table);
        std::size_t brute = 0;
        std::set<std::string> brute_forms;
        for_each_rooted_colouring(s2, Palette(2), [&](const std::vector<Colour>& c2) {
          if (census(ColouredTree{s2, c2}, m, k, table) == target) {
            ++brute;
            brute_forms.insert(canonical_literal(ColouredTree{s2, c2}));
          }
        });
        auto all = search_census_colourings(target, s2, m, table, {.max_solutions = 100000});
        ASSERT_TRUE(all.complete);
        EXPECT_EQ(all.colourings.empty(), brute == 0);
        std::set<std::string> found_forms;
        for (const auto& c : all.colourings) {
          EXPECT_EQ(census(ColouredTree{s2, c}, m, k, table), target);
          found_forms.insert(canonical_literal(ColouredTree{s2, c}));
        }
        // Every solution is reported up to swapping isomorphic siblings.
        EXPECT_EQ(found_forms, brute_forms);
        EXPECT_EQ(find_types_game_reply(t1, s2, m, table).has_value(), brute > 0);
      }
    }
  }
}

TEST(ReplySearch, BudgetIsEnforced) {
  TypeTable table(1);
  auto t1 = parse_tree("c0(c1,c2)");
  RootedTree big;
  for (int i = 0; i < 12; ++i) big.add_child(0);
  EXPECT_THROW(search_census_colourings(census(t1, 1, 1, table), big, 1, table, {.max_solutions = 1000000, .step_budget = 10}),
               GuardExceeded);
  EXPECT_THROW(search_census_colourings(census(t1, 1, 2, table), big, 1, table), InvalidArgument);
}

TEST(FitChildren, MatchesSmallCases) {
  // Two projections p=0 (needs exactly 1) and p=1 (needs >= 2, k=2).
  std::vector<std::pair<TypeId, std::uint32_t>> req{{0, 1}, {1, 2}};
  EXPECT_TRUE(fit_children(req, {{{0, 1}, 3}}, 2).has_value());
  EXPECT_FALSE(fit_children(req, {{{0, 1}, 2}}, 2).has_value());
  EXPECT_FALSE(fit_children(req, {{{1}, 3}}, 2).has_value());
  auto plan = fit_children(req, {{{0}, 1}, {{0, 1}, 4}}, 2);
  ASSERT_TRUE(plan.has_value());
  EXPECT_EQ((*plan)[0], (std::vector<std::pair<TypeId, std::uint32_t>>{{0, 1}}));
  EXPECT_EQ((*plan)[1], (std::vector<std::pair<TypeId, std::uint32_t>>{{1, 4}}));
  EXPECT_FALSE(fit_children({{0, 1}}, {{{0}, 2}}, 2).has_value());
  EXPECT_TRUE(fit_children({}, {}, 2).has_value());
}
