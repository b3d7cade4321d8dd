// Command-line entry points. Exit codes: 0 ok (or "true" for emso-eval),
// 1 property violated (or "false"), 2 usage or input error, 3 guard exceeded.

#include <algorithm>
#include <atomic>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <mutex>
#include <random>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>

#include "ehrlab/constructions.hpp"
#include "ehrlab/deficiency.hpp"
#include "ehrlab/emso.hpp"
#include "ehrlab/games.hpp"
#include "ehrlab/literal.hpp"
#include "ehrlab/session_http.hpp"
#include "ehrlab/strategies.hpp"
#include "ehrlab/types.hpp"

using namespace ehrlab;

namespace {

constexpr const char* kVersion = "0.1.0";

class Violation : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Echo of the resolved configuration; also the first line of every artifact.
class Header {
 public:
  explicit Header(std::string command) : line_("# ehrlab " + std::string(kVersion) + " " + std::move(command)) {}

  template <class T>
  Header& add(const std::string& key, const T& value) {
    std::ostringstream os;
    os << value;
    line_ += " " + key + "=" + os.str();
    return *this;
  }
  const std::string& str() const { return line_; }

 private:
  std::string line_;
};

// A file holding a tree literal, or the literal itself.
ColouredTree load_tree(const std::string& arg) {
  if (std::filesystem::is_regular_file(arg)) {
    std::ifstream in(arg);
    auto trees = read_corpus(in);
    if (trees.empty()) throw InvalidArgument(arg + " holds no tree");
    return trees.front();
  }
  return parse_tree(arg);
}

Palette palette_for(std::uint32_t r, const std::vector<const ColouredTree*>& trees) {
  if (r > 0) return Palette(r);
  Colour top = 1;
  for (const auto* t : trees) {
    for (Colour c : t->colours) top = std::max(top, c);
    if (t->tree.lasso()) {
      for (Colour c : t->tree.lasso()->period_colours) top = std::max(top, c);
    }
  }
  return Palette(top);
}

std::vector<PebblePair> parse_pairs(const std::string& text) {
  std::vector<PebblePair> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    const auto colon = item.find(':');
    if (colon == std::string::npos) throw InvalidArgument("pair '" + item + "' is not x:y");
    try {
      out.push_back({static_cast<NodeId>(std::stoul(item.substr(0, colon))),
                     static_cast<NodeId>(std::stoul(item.substr(colon + 1)))});
    } catch (const std::logic_error&) {
      throw InvalidArgument("pair '" + item + "' is not x:y");
    }
  }
  return out;
}

void emit(const Header& h, const std::string& body, const std::string& out_path) {
  std::cout << h.str() << '\n' << body;
  if (!out_path.empty()) {
    std::ofstream out(out_path);
    if (!out) throw InvalidArgument("cannot write " + out_path);
    out << h.str() << '\n' << body;
  }
}

std::string verdict_record(const Verdict& v) {
  std::string out = std::string("winner=") + to_string(v.winner) + '\n';
  for (const auto& w : v.witness) out += "witness " + w + '\n';
  return out;
}

// Path of `len` nodes above `tail`, whose root sits at depth len.
std::string prefixed(std::uint32_t len, const std::string& tail) {
  std::string s = "c0(";
  for (std::uint32_t i = 1; i < len; ++i) s += "c1(";
  s += tail;
  for (std::uint32_t i = 0; i < len; ++i) s += ")";
  return s;
}

std::vector<Colour> random_rooted(const RootedTree& t, const Palette& p, std::mt19937_64& rng) {
  std::vector<Colour> c(t.size(), kRootColour);
  for (NodeId v = 1; v < c.size(); ++v) c[v] = 1 + static_cast<Colour>(rng() % p.r);
  return c;
}

struct ManifestPlan {
  QManifest manifest;
  ConstructionPlan plan;
};

ManifestPlan load_plan(const std::string& q_path, std::uint32_t L, std::uint32_t k, TypeTable& table) {
  std::ifstream in(q_path);
  if (!in) throw InvalidArgument("cannot read " + q_path);
  ManifestPlan out;
  out.manifest = read_manifest(in, table);
  if (k != 0 && k != out.manifest.k) {
    throw InvalidArgument("--k " + std::to_string(k) + " differs from the manifest's k=" + std::to_string(out.manifest.k));
  }
  out.plan.L = L;
  out.plan.k = out.manifest.k;
  out.plan.m = out.manifest.m;
  out.plan.palette = Palette(out.manifest.r);
  out.plan.q = out.manifest.entries;
  out.plan.validate(table);
  return out;
}

RootedTree t2_shape(const std::string& arg) {
  if (arg == "path") return infinite_path();
  auto t = load_tree(arg);
  if (!t.tree.infinite()) throw InvalidArgument("t2 must be a lasso tree such as c0@[c1]");
  return t.tree;
}

std::uint32_t default_threads() { return std::max(1u, std::thread::hardware_concurrency()); }

// Runs f(i) for i in [0, n) on `threads` workers; f must be thread-safe per
// worker index w passed as the second argument.
template <class F>
void parallel_for(std::uint64_t n, std::uint32_t threads, F&& f) {
  threads = std::max<std::uint32_t>(1, std::min<std::uint64_t>(threads, std::max<std::uint64_t>(n, 1)));
  std::atomic<std::uint64_t> next{0};
  std::vector<std::thread> pool;
  std::exception_ptr error;
  std::mutex m;
  for (std::uint32_t w = 0; w < threads; ++w) {
    pool.emplace_back([&, w] {
      try {
        for (std::uint64_t i; (i = next++) < n;) f(i, w);
      } catch (...) {
        std::lock_guard lock(m);
        if (!error) error = std::current_exception();
        next = n;
      }
    });
  }
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"ehrlab: Ehrenfeucht games, types and constructions on rooted trees"};
  app.require_subcommand(1);
  app.set_version_flag("--version", kVersion);
  std::uint32_t threads = default_threads();
  app.add_option("--threads", threads, "worker threads")->check(CLI::PositiveNumber);

  std::string t1_arg, t2_arg, out_path, pairs_arg, tree_arg;
  std::uint32_t r = 0, m = 1, k = 1, L = 1;
  std::uint64_t seed = 1, samples = 1;

  auto* census_cmd = app.add_subcommand("census", "capped type census of a coloured tree");
  census_cmd->add_option("--tree", tree_arg, "tree literal or file")->required();
  census_cmd->add_option("--m", m)->required();
  census_cmd->add_option("--k", k)->required();
  census_cmd->add_option("--out", out_path);

  auto* types_cmd = app.add_subcommand("types-game", "types-game verdict on two coloured trees");
  types_cmd->add_option("--t1", t1_arg)->required();
  types_cmd->add_option("--t2", t2_arg)->required();
  types_cmd->add_option("--m", m)->required();
  types_cmd->add_option("--k", k)->required();
  types_cmd->add_option("--r", r, "palette size (default: largest colour used)");
  types_cmd->add_option("--out", out_path);

  bool symmetric = false;
  auto* ehr_cmd = app.add_subcommand("ehr", "set-pebble game: exact solver, or referee for --pairs");
  ehr_cmd->add_option("--t1", t1_arg)->required();
  ehr_cmd->add_option("--t2", t2_arg)->required();
  ehr_cmd->add_option("--k", k)->required();
  ehr_cmd->add_option("--r", r);
  ehr_cmd->add_option("--pairs", pairs_arg, "transcript x:y,... on the given colourings");
  ehr_cmd->add_flag("--symmetric", symmetric, "Spoiler may colour either tree");
  ehr_cmd->add_option("--out", out_path);

  auto* dehr_cmd = app.add_subcommand("dehr", "distance-preserving game: exact solver, or referee for --pairs");
  dehr_cmd->add_option("--t1", t1_arg)->required();
  dehr_cmd->add_option("--t2", t2_arg)->required();
  dehr_cmd->add_option("--k", k)->required();
  std::string designated_arg;
  dehr_cmd->add_option("--designated", designated_arg, "designated pairs x:y,...");
  dehr_cmd->add_option("--pairs", pairs_arg, "transcript x:y,...");
  dehr_cmd->add_option("--out", out_path);

  std::string mode = "master", preset = "surrogate", trace_path;
  std::uint64_t max_playouts = 10000;
  auto* playout_cmd = app.add_subcommand("strategy-playout", "exhaustive Spoiler playouts against a strategy");
  playout_cmd->add_option("--mode", mode)->check(CLI::IsMember({"master", "lemma36"}));
  playout_cmd->add_option("--preset", preset)->check(CLI::IsMember({"surrogate", "paper"}));
  playout_cmd->add_option("--k", k);
  playout_cmd->add_option("--m", m);
  playout_cmd->add_option("--t1", t1_arg);
  playout_cmd->add_option("--t2", t2_arg);
  playout_cmd->add_option("--seed", seed);
  playout_cmd->add_option("--samples", samples, "Spoiler colourings to try (master)");
  playout_cmd->add_option("--max-playouts", max_playouts);
  playout_cmd->add_option("--trace", trace_path, "per-round trace file");

  std::string set_arg;
  std::size_t bound = 0;
  auto* deficient_cmd = app.add_subcommand("deficient", "is a set of types deficient for a tree shape");
  deficient_cmd->add_option("--set", set_arg, "space-separated canonical type names")->required();
  deficient_cmd->add_option("--tree", tree_arg, "shape such as (()())");
  deficient_cmd->add_option("--witness-bound", bound, "search shapes up to this many nodes instead");
  deficient_cmd->add_option("--r", r)->required();
  deficient_cmd->add_option("--m", m)->required();
  deficient_cmd->add_option("--k", k)->required();

  auto* q_cmd = app.add_subcommand("enumerate-q", "adequate sets with witnesses of at most B nodes");
  q_cmd->add_option("--r", r)->required();
  q_cmd->add_option("--m", m)->required();
  q_cmd->add_option("--k", k)->required();
  q_cmd->add_option("--B", bound)->required();
  q_cmd->add_option("--out", out_path);

  std::string q_path, t2_tail = "path", out2_path;
  auto* construct_cmd = app.add_subcommand("construct", "build T1 and T2 from a manifest");
  construct_cmd->add_option("--q", q_path)->required();
  construct_cmd->add_option("--L", L);
  construct_cmd->add_option("--k", k);
  construct_cmd->add_option("--t2", t2_tail, "path, or a lasso literal");
  construct_cmd->add_option("--out", out_path, "file for T1");
  construct_cmd->add_option("--out2", out2_path, "file for T2");

  std::string sigma_path;
  auto* respond_cmd = app.add_subcommand("respond", "Duplicator's types-game reply on the construction, checked");
  respond_cmd->add_option("--q", q_path)->required();
  respond_cmd->add_option("--L", L);
  respond_cmd->add_option("--k", k);
  respond_cmd->add_option("--t2", t2_tail);
  respond_cmd->add_option("--seed", seed);
  respond_cmd->add_option("--samples", samples, "random Spoiler colourings");
  respond_cmd->add_option("--sigma", sigma_path, "Spoiler colouring file instead of sampling");
  respond_cmd->add_option("--out", out_path, "reply of the last sample");

  std::string law_arg = "poisson:2";
  std::uint32_t depth = 3;
  auto* gw_cmd = app.add_subcommand("gw-sample", "Galton-Watson trees truncated at a depth");
  gw_cmd->add_option("--law", law_arg);
  gw_cmd->add_option("--depth", depth);
  gw_cmd->add_option("--seed", seed);
  gw_cmd->add_option("--count", samples);
  gw_cmd->add_option("--out", out_path);

  std::string target_arg;
  double z = 1.96;
  auto* est_cmd = app.add_subcommand("estimate", "Monte Carlo P(T|_n is a given shape)");
  est_cmd->add_option("--law", law_arg);
  est_cmd->add_option("--target", target_arg, "shape such as (()())")->required();
  est_cmd->add_option("--n", depth)->required();
  est_cmd->add_option("--samples", samples)->required();
  est_cmd->add_option("--seed", seed);
  est_cmd->add_option("--z", z);
  est_cmd->add_option("--out", out_path);

  std::string sentence_arg;
  bool params_only = false;
  auto* emso_cmd = app.add_subcommand("emso-eval", "evaluate a sentence on a finite tree (exit 0 true, 1 false)");
  emso_cmd->add_option("--sentence", sentence_arg, "sentence file or text")->required();
  emso_cmd->add_option("--tree", tree_arg);
  emso_cmd->add_flag("--params", params_only, "print (n_sets, rank) only");

  std::string host = "127.0.0.1";
  int port = 8080;
  auto* serve_cmd = app.add_subcommand("serve", "HTTP session service");
  serve_cmd->add_option("--host", host);
  serve_cmd->add_option("--port", port);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (*census_cmd) {
      const auto t = load_tree(tree_arg);
      TypeTable table(k);
      const auto c = census(t, m, k, table);
      std::ostringstream os;
      dump_census(os, c, table);
      emit(Header("census").add("tree", serialize_tree(t)).add("m", m).add("k", k), os.str(), out_path);
      return 0;
    }
    if (*types_cmd) {
      const auto a = load_tree(t1_arg), b = load_tree(t2_arg);
      const Palette p = palette_for(r, {&a, &b});
      const auto v = types_game_verdict(a, b, p, m, k);
      emit(Header("types-game").add("t1", serialize_tree(a)).add("t2", serialize_tree(b)).add("r", p.r).add("m", m).add("k", k),
           verdict_record(v), out_path);
      return 0;
    }
    if (*ehr_cmd) {
      const auto a = load_tree(t1_arg), b = load_tree(t2_arg);
      Header h("ehr");
      h.add("t1", serialize_tree(a)).add("t2", serialize_tree(b)).add("k", k);
      if (!pairs_arg.empty()) {
        const auto pairs = parse_pairs(pairs_arg);
        if (pairs.size() > k) throw InvalidArgument("transcript has more than k pairs");
        const std::string why = ehr_violation(a, b, pairs);
        h.add("pairs", pairs_arg);
        emit(h, why.empty() ? "referee=Duplicator\n" : "referee=Spoiler reason=" + why + "\n", out_path);
        return 0;
      }
      const Palette p = palette_for(r, {});
      h.add("r", p.r).add("symmetric", symmetric);
      SetPebbleOptions opts;
      opts.symmetric = symmetric;
      emit(h, verdict_record(solve_set_pebble_ehr(a.tree, b.tree, p, k, opts)), out_path);
      return 0;
    }
    if (*dehr_cmd) {
      const auto a = load_tree(t1_arg), b = load_tree(t2_arg);
      Header h("dehr");
      h.add("t1", serialize_tree(a)).add("t2", serialize_tree(b)).add("k", k);
      if (!pairs_arg.empty()) {
        const auto pairs = parse_pairs(pairs_arg);
        if (pairs.size() > k) throw InvalidArgument("transcript has more than k pairs");
        const std::string why = dehr_violation(a, b, pairs);
        h.add("pairs", pairs_arg);
        emit(h, why.empty() ? "referee=Duplicator\n" : "referee=Spoiler reason=" + why + "\n", out_path);
        return 0;
      }
      const auto designated = parse_pairs(designated_arg);
      h.add("designated", designated_arg.empty() ? "-" : designated_arg);
      emit(h, verdict_record(solve_dehr(a, b, k, designated)), out_path);
      return 0;
    }
    if (*playout_cmd) {
      Header h("strategy-playout");
      h.add("mode", mode).add("k", k).add("seed", seed).add("samples", samples).add("threads", threads);
      std::ofstream trace;
      if (!trace_path.empty()) {
        trace.open(trace_path);
        if (!trace) throw InvalidArgument("cannot write " + trace_path);
        trace << h.str() << '\n';
      }
      if (mode == "lemma36") {
        if (t1_arg.empty() || t2_arg.empty()) throw InvalidArgument("lemma36 playouts need --t1 and --t2");
        const auto a = load_tree(t1_arg), b = load_tree(t2_arg);
        h.add("m", m).add("t1", serialize_tree(a)).add("t2", serialize_tree(b));
        ClusterGame g(a, b, m, k);
        const auto rep = exhaustive_cluster_playouts(g, max_playouts);
        std::ostringstream os;
        os << "playouts=" << rep.playouts << " losses=" << rep.losses << " monitor_violations=" << rep.monitor_violations
           << " truncated=" << rep.truncated << '\n';
        for (const auto& f : rep.failures) os << "failure " << f << '\n';
        emit(h, os.str(), "");
        return rep.losses || rep.monitor_violations ? 1 : 0;
      }
      const MasterParams p = preset == "paper" ? MasterParams::paper(k) : MasterParams{k, 12, 48, 3, std::max(1u, k)};
      if (preset == "surrogate" && k > 1) throw InvalidArgument("the surrogate preset is for k = 1");
      h.add("preset", preset).add("D", p.D).add("D0", p.D0).add("M", p.M).add("e", p.e);
      const std::string t1s = t1_arg.empty() ? prefixed(p.D0 / 2, "c1(c1,c1(c1))") : "";
      const std::string t2s = t2_arg.empty() ? prefixed(p.D0 / 2, "c1(c1,c1,c1(c1))") : "";
      const RootedTree a = t1_arg.empty() ? parse_tree(t1s).tree : load_tree(t1_arg).tree;
      const RootedTree b = t2_arg.empty() ? parse_tree(t2s).tree : load_tree(t2_arg).tree;
      h.add("t1_nodes", a.size()).add("t2_nodes", b.size());
      std::cout << h.str() << '\n' << std::flush;
      std::mt19937_64 rng(seed);
      PlayoutReport total;
      std::uint64_t games = 0, no_reply = 0;
      for (std::uint64_t s = 0; s < samples; ++s) {
        const auto sigma = random_rooted(a, Palette(2), rng);
        auto g = MasterGame::from_set_round(ColouredTree{a, sigma}, b, p);
        if (!g) {
          ++no_reply;
          continue;
        }
        ++games;
        const auto rep = exhaustive_master_playouts(*g, max_playouts);
        total.playouts += rep.playouts;
        total.losses += rep.losses;
        total.monitor_violations += rep.monitor_violations;
        total.implication_failures += rep.implication_failures;
        total.truncated = total.truncated || rep.truncated;
        for (const auto& f : rep.failures) total.failures.push_back(f);
        if (trace.is_open()) {
          for (int w = 0; w < 2; ++w) {
            for (NodeId x = 0; x < g->base(w).size(); ++x) {
              MasterState st;
              const auto rd = master_reply(*g, st, w == 0 ? Side::First : Side::Second, x);
              trace << "sample=" << s << ' ' << trace_record(1, rd, check_C_conditions(*g, st)) << '\n';
            }
          }
        }
      }
      std::cout << "games=" << games << " no_reply=" << no_reply << " playouts=" << total.playouts
                << " losses=" << total.losses << " monitor_violations=" << total.monitor_violations
                << " implication_failures=" << total.implication_failures << " truncated=" << total.truncated << '\n';
      for (const auto& f : total.failures) std::cout << "failure " << f << '\n';
      return total.losses || total.monitor_violations || total.implication_failures ? 1 : 0;
    }
    if (*deficient_cmd) {
      TypeTable table(k);
      const Palette p(r);
      std::vector<TypeId> types;
      std::stringstream ss(set_arg);
      for (std::string name; ss >> name;) types.push_back(parse_type(name, m, table));
      const TypeSet s = make_type_set(types);
      Header h("deficient");
      h.add("set", "\"" + set_arg + "\"").add("r", r).add("m", m).add("k", k);
      if (!tree_arg.empty()) {
        const RootedTree t = parse_shape(tree_arg);
        h.add("tree", canonical_shape(t));
        emit(h, std::string("deficient=") + (is_deficient(s, t, p, m, table) ? "true" : "false") + '\n', "");
        return 0;
      }
      if (bound == 0) throw InvalidArgument("give --tree or --witness-bound");
      h.add("witness_bound", bound);
      const auto cert = find_witness(s, bound, p, m, table);
      emit(h, cert.deficient ? "witness=" + canonical_shape(*cert.witness) + '\n' : "witness=none\n", "");
      return 0;
    }
    if (*q_cmd) {
      TypeTable table(k);
      QManifest q{r, m, k, bound, enumerate_Q(Palette(r), m, bound, table)};
      std::ostringstream os;
      write_manifest(os, q, table);
      std::cout << Header("enumerate-q").add("r", r).add("m", m).add("k", k).add("B", bound).str() << '\n';
      if (out_path.empty()) {
        std::cout << os.str();
      } else {
        std::ofstream out(out_path);
        if (!out) throw InvalidArgument("cannot write " + out_path);
        out << os.str();
        std::cout << "entries=" << q.entries.size() << " written=" << out_path << '\n';
      }
      return 0;
    }
    if (*construct_cmd) {
      TypeTable table(k == 0 ? 1 : k);
      std::ifstream probe(q_path);
      if (!probe) throw InvalidArgument("cannot read " + q_path);
      std::string first;
      std::getline(probe, first);
      const auto kpos = first.find(" k=");
      TypeTable mtable(kpos == std::string::npos ? 1 : static_cast<std::uint32_t>(std::stoul(first.substr(kpos + 3))));
      auto mp = load_plan(q_path, L, k, mtable);
      const auto c1 = build_T1(mp.plan);
      const auto c2 = build_T2(mp.plan, t2_shape(t2_tail));
      Header h("construct");
      h.add("q", q_path).add("L", L).add("k", mp.plan.k).add("t2", t2_tail).add("T1_nodes", c1.tree.size());
      const std::string l1 = serialize_tree(ColouredTree{c1.tree, std::vector<Colour>(c1.tree.size(), 0)});
      const std::string l2 = serialize_tree(ColouredTree{c2.tree, std::vector<Colour>(c2.tree.size(), 0)});
      std::cout << h.str() << '\n';
      for (const auto& [path, lit, name] : {std::tuple{out_path, l1, "T1"}, std::tuple{out2_path, l2, "T2"}}) {
        if (path.empty()) {
          std::cout << lit << '\n';
        } else {
          std::ofstream out(path);
          if (!out) throw InvalidArgument("cannot write " + path);
          out << h.str() << '\n' << lit << '\n';
          std::cout << name << "=" << path << '\n';
        }
      }
      return 0;
    }
    if (*respond_cmd) {
      std::ifstream probe(q_path);
      if (!probe) throw InvalidArgument("cannot read " + q_path);
      std::string first;
      std::getline(probe, first);
      const auto kpos = first.find(" k=");
      const std::uint32_t qk = kpos == std::string::npos ? 1 : static_cast<std::uint32_t>(std::stoul(first.substr(kpos + 3)));
      TypeTable table(qk);
      auto mp = load_plan(q_path, L, k, table);
      const auto c1 = build_T1(mp.plan);
      const auto c2 = build_T2(mp.plan, t2_shape(t2_tail));
      Header h("respond");
      h.add("q", q_path).add("L", L).add("k", mp.plan.k).add("t2", t2_tail).add("seed", seed).add("threads", threads);
      std::vector<std::vector<Colour>> sigmas;
      if (!sigma_path.empty()) {
        std::ifstream in(sigma_path);
        if (!in) throw InvalidArgument("cannot read " + sigma_path);
        sigmas.push_back(read_colouring(in, c1.tree.size()));
        h.add("sigma", sigma_path);
      } else {
        h.add("samples", samples);
      }
      std::cout << h.str() << '\n' << std::flush;
      const std::uint64_t n = sigmas.empty() ? samples : 1;
      std::vector<std::string> failures(n);
      std::vector<std::unique_ptr<TypeTable>> tables;
      std::vector<ManifestPlan> plans;
      for (std::uint32_t w = 0; w < threads; ++w) {
        tables.push_back(std::make_unique<TypeTable>(qk));
        plans.push_back(load_plan(q_path, L, k, *tables.back()));
      }
      ColouredTree last;
      std::mutex last_mutex;
      parallel_for(n, threads, [&](std::uint64_t i, std::uint32_t w) {
        std::vector<Colour> sigma;
        if (sigmas.empty()) {
          std::mt19937_64 rng(seed + i);
          sigma = random_rooted(c1.tree, mp.plan.palette, rng);
        } else {
          sigma = sigmas[0];
        }
        const auto audit = audit_response(plans[w].plan, c1, sigma, c2, *tables[w]);
        if (!audit.ok()) failures[i] = audit.failure;
        if (i + 1 == n && !out_path.empty()) {
          const auto r2 = types_game_response(plans[w].plan, c1, sigma, c2, *tables[w]);
          std::lock_guard lock(last_mutex);
          last = r2.t2;
        }
      });
      std::uint64_t failed = 0;
      for (std::uint64_t i = 0; i < n; ++i) {
        if (failures[i].empty()) continue;
        if (++failed <= 10) std::cout << "failure sample=" << i << ' ' << failures[i] << '\n';
      }
      std::cout << "samples=" << n << " failures=" << failed << '\n';
      if (!out_path.empty()) {
        std::ofstream out(out_path);
        out << h.str() << '\n' << serialize_tree(last) << '\n';
      }
      return failed ? 1 : 0;
    }
    if (*gw_cmd) {
      const auto law = OffspringLaw::parse(law_arg);
      std::mt19937_64 rng(seed);
      std::ostringstream os;
      for (std::uint64_t i = 0; i < samples; ++i) os << canonical_shape(gw_sample(law, depth, rng)) << '\n';
      emit(Header("gw-sample").add("law", law.str()).add("depth", depth).add("seed", seed).add("count", samples), os.str(),
           out_path);
      return 0;
    }
    if (*est_cmd) {
      const auto law = OffspringLaw::parse(law_arg);
      const RootedTree target = parse_shape(target_arg);
      const auto e = estimate_truncation_probability(law, target, depth, samples, seed, z);
      emit(Header("estimate").add("law", law.str()).add("target", canonical_shape(target)).add("n", depth)
               .add("samples", samples).add("seed", seed).add("z", z),
           estimate_record(law, target, depth, e) + '\n', out_path);
      return 0;
    }
    if (*emso_cmd) {
      Sentence s;
      if (std::filesystem::is_regular_file(sentence_arg)) {
        std::ifstream in(sentence_arg);
        s = read_sentence(in);
      } else {
        s = parse_sentence(sentence_arg);
      }
      const auto params = ehr_parameters_of(s);
      Header h("emso-eval");
      h.add("sentence", "\"" + to_string(s) + "\"");
      if (params_only) {
        emit(h, "n_sets=" + std::to_string(params.n_sets) + " rank=" + std::to_string(params.rank) + '\n', "");
        return 0;
      }
      if (tree_arg.empty()) throw InvalidArgument("give --tree or --params");
      const auto t = load_tree(tree_arg);
      h.add("tree", serialize_tree(t));
      const bool value = evaluate(s, t.tree);
      emit(h, std::string("value=") + (value ? "true" : "false") + '\n', "");
      return value ? 0 : 1;
    }
    if (*serve_cmd) {
      SessionService service;
      httplib::Server server;
      bind_routes(server, service);
      std::cout << Header("serve").add("host", host).add("port", port).str() << '\n' << std::flush;
      if (!server.listen(host, port)) throw InvalidArgument("cannot listen on " + host + ":" + std::to_string(port));
      return 0;
    }
  } catch (const GuardExceeded& e) {
    std::cerr << "guard exceeded: " << e.what() << '\n';
    return 3;
  } catch (const ParseError& e) {
    std::cerr << "parse error: " << e.what() << '\n';
    return 2;
  } catch (const InvalidArgument& e) {
    std::cerr << "invalid argument: " << e.what() << '\n';
    return 2;
  } catch (const Violation& e) {
    std::cerr << "violation: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 2;
}
