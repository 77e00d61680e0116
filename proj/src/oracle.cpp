#include "bratteli/oracle.hpp"

#include <algorithm>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "bratteli/census.hpp"
#include "bratteli/diagram_io.hpp"
#include "bratteli/errors.hpp"
#include "bratteli/rng.hpp"
#include "bratteli/vershik.hpp"

namespace bratteli {

void LemmaInstance::validate() const {
  if (F.size() != G.size()) throw ArgumentError("F and G must have the same domain");
  if (F.size() < 2) throw ArgumentError("lemma instances need n >= 2");
  if (std::all_of(G.begin(), G.end(), [&](std::uint32_t g) { return g == G[0]; })) {
    throw ArgumentError("G must be non-constant");
  }
}

BigInt count_good_orderings(const LemmaInstance& instance) {
  instance.validate();
  const auto n = instance.n();
  if (n > kMaxLemmaSize) throw CapExceeded("ordering enumeration", factorial(static_cast<unsigned>(n)), factorial(kMaxLemmaSize));
  std::vector<std::uint32_t> sigma(n);
  std::iota(sigma.begin(), sigma.end(), 0U);
  std::uint64_t good = 0;
  do {
    bool ok = true;
    for (std::size_t i = 0; i + 1 < n && ok; ++i) ok = instance.F[sigma[i]] == instance.G[sigma[i + 1]];
    good += ok;
  } while (std::next_permutation(sigma.begin(), sigma.end()));
  const BigInt count = good;
  if (count * (n - 1) > factorial(static_cast<unsigned>(n))) {
    throw std::logic_error("good orderings exceed n!/(n-1)");
  }
  return count;
}

TrailGraph trail_graph(const LemmaInstance& instance) {
  instance.validate();
  TrailGraph graph;
  for (std::size_t i = 0; i < instance.n(); ++i) {
    graph.edges.emplace_back(instance.G[i], instance.F[i]);
    graph.vertices = std::max<std::size_t>(graph.vertices, std::max(instance.G[i], instance.F[i]) + 1);
  }
  return graph;
}

namespace {

struct TrailSearch {
  const TrailGraph& graph;
  std::vector<std::vector<std::size_t>> out;  // vertex -> outgoing edge indices
  std::vector<bool> used;
  std::uint64_t trails = 0;

  void extend(std::uint32_t at, std::size_t remaining) {
    if (remaining == 0) {
      ++trails;
      return;
    }
    for (const auto e : out[at]) {
      if (used[e]) continue;
      used[e] = true;
      extend(graph.edges[e].second, remaining - 1);
      used[e] = false;
    }
  }
};

}  // namespace

BigInt count_eulerian_trails(const TrailGraph& graph) {
  if (graph.edges.size() > kMaxTrailEdges) {
    throw CapExceeded("trail enumeration over " + std::to_string(graph.edges.size()) + " edges",
                      factorial(static_cast<unsigned>(graph.edges.size())), factorial(kMaxTrailEdges));
  }
  TrailSearch search{graph, std::vector<std::vector<std::size_t>>(graph.vertices), std::vector<bool>(graph.edges.size()), 0};
  for (std::size_t e = 0; e < graph.edges.size(); ++e) search.out[graph.edges[e].first].push_back(e);
  for (std::size_t e = 0; e < graph.edges.size(); ++e) {
    search.used[e] = true;
    search.extend(graph.edges[e].second, graph.edges.size() - 1);
    search.used[e] = false;
  }
  return search.trails;
}

LemmaInstance extremal_instance(std::size_t n) {
  if (n < 3) throw ArgumentError("the extremal instance needs n >= 3");
  LemmaInstance instance;
  instance.G.assign(n, 0);
  instance.F.assign(n, 0);
  instance.G[1] = 1;  // b -> a
  instance.F[2] = 1;  // a -> b
  return instance;
}

void for_each_instance(std::size_t n, std::uint32_t labels, const std::function<void(const LemmaInstance&)>& fn) {
  const std::uint32_t kinds = labels * labels;  // pair (g, f) encoded as g * labels + f
  std::vector<std::uint32_t> pairs(n, 0);
  while (true) {
    LemmaInstance instance;
    for (const auto p : pairs) {
      instance.G.push_back(p / labels);
      instance.F.push_back(p % labels);
    }
    if (std::any_of(instance.G.begin(), instance.G.end(), [&](std::uint32_t g) { return g != instance.G[0]; })) {
      fn(instance);
    }
    // Next non-decreasing sequence.
    std::size_t i = n;
    while (i > 0 && pairs[i - 1] + 1 == kinds) --i;
    if (i == 0) return;
    const auto value = pairs[i - 1] + 1;
    for (std::size_t j = i - 1; j < n; ++j) pairs[j] = value;
  }
}

LemmaInstance random_instance(std::size_t n, std::uint32_t labels, std::uint64_t seed, std::uint64_t index) {
  if (labels < 2) throw ArgumentError("random instances need at least two labels");
  rng::CounterStream stream(rng::derive(seed ^ rng::kInstanceTag, index));
  while (true) {
    LemmaInstance instance;
    for (std::size_t i = 0; i < n; ++i) {
      instance.G.push_back(static_cast<std::uint32_t>(stream.bounded(labels)));
      instance.F.push_back(static_cast<std::uint32_t>(stream.bounded(labels)));
    }
    if (std::any_of(instance.G.begin(), instance.G.end(), [&](std::uint32_t g) { return g != instance.G[0]; })) {
      return instance;
    }
  }
}

// ---------------------------------------------------------------------------

std::vector<PathPrefix> enumerate_paths(const BratteliDiagram& diagram, std::size_t level, std::size_t v) {
  const auto count = path_count(diagram, level, v);
  if (count > kPathEnumerationCap) throw CapExceeded("path enumeration", count, BigInt(kPathEnumerationCap));
  if (level == 0) return {PathPrefix{}};
  std::vector<PathPrefix> out;
  const auto& f = diagram.incidence(level - 1);
  for (std::size_t w = 0; w < f.cols(); ++w) {
    const auto copies = f.at(v, w);
    if (copies == 0) continue;
    const auto below = enumerate_paths(diagram, level - 1, w);
    for (std::uint64_t c = 0; c < copies; ++c) {
      for (const auto& p : below) {
        auto path = p;
        path.edges.push_back(EdgeRef{level, v, w, c});
        out.push_back(std::move(path));
      }
    }
  }
  return out;
}

bool brute_force_continuity(const Order& order, std::size_t n, std::size_t N, std::size_t N_prime) {
  if (!(n < N && N < N_prime && N_prime <= order.depth())) throw ArgumentError("need n < N < N' <= order depth");
  std::vector<std::pair<PathPrefix, PathPrefix>> prefixes;  // (first N edges, successor's first n edges)
  for (std::size_t v = 0; v < order.diagram().level_size(N_prime); ++v) {
    for (const auto& x : enumerate_paths(order.diagram(), N_prime, v)) {
      const auto next = successor(order, x);
      if (next.extreme) continue;
      PathPrefix head{{x.edges.begin(), x.edges.begin() + static_cast<std::ptrdiff_t>(N)}};
      PathPrefix image{{next.path.edges.begin(), next.path.edges.begin() + static_cast<std::ptrdiff_t>(n)}};
      prefixes.emplace_back(std::move(head), std::move(image));
    }
  }
  for (std::size_t i = 0; i < prefixes.size(); ++i) {
    for (std::size_t j = i + 1; j < prefixes.size(); ++j) {
      if (prefixes[i].first == prefixes[j].first && prefixes[i].second != prefixes[j].second) return false;
    }
  }
  return true;
}

std::optional<std::vector<std::uint32_t>> brute_force_star_map(const Order& order, std::size_t n, std::size_t N,
                                                               std::size_t N_prime) {
  const auto& d = order.diagram();
  const auto base = BigInt(d.level_size(n));
  const auto space = pow_big(base, static_cast<unsigned>(d.level_size(N)));
  if (space > kMapEnumerationCap) throw CapExceeded("star map enumeration", space, BigInt(kMapEnumerationCap));
  std::vector<std::uint32_t> f(d.level_size(N), 0);
  const auto values = static_cast<std::uint32_t>(d.level_size(n));
  while (true) {
    bool ok = true;
    for (std::size_t v = 0; v < d.level_size(N_prime) && ok; ++v) ok = star_condition_at(order, f, n, N, N_prime, v);
    if (ok) return f;
    std::size_t i = 0;
    while (i < f.size() && ++f[i] == values) f[i++] = 0;
    if (i == f.size()) return std::nullopt;
  }
}

std::map<std::size_t, Rational> exact_census(const BratteliDiagram& diagram, std::size_t k, std::size_t N) {
  if (!(k < N && N < diagram.depth())) throw ArgumentError("exact census needs k < N within the diagram");
  OrderEnumerator orders(diagram, N);
  std::map<std::size_t, std::uint64_t> counts;
  do {
    ++counts[surviving_tribes(orders.current(), k, N).size()];
  } while (orders.next());
  std::map<std::size_t, Rational> out;
  for (const auto& [c, hits] : counts) out[c] = Rational(hits, orders.total());
  return out;
}

ExactImperfection exact_imperfection(const BratteliDiagram& diagram, std::size_t n, std::size_t N,
                                     std::size_t N_prime) {
  if (!(n < N && N < N_prime && N_prime < diagram.depth())) throw ArgumentError("need n < N < N' within the diagram");
  OrderEnumerator orders(diagram, N_prime);
  const auto maps = pow_big(BigInt(diagram.level_size(n)), static_cast<unsigned>(diagram.level_size(N)));
  const bool brute = maps <= kMapEnumerationCap;
  std::uint64_t in_D = 0;
  std::uint64_t in_E = 0;
  do {
    const auto& order = orders.current();
    if (clan_count(order, n, N_prime - 1) < 2) continue;
    ++in_D;
    const bool star = brute ? brute_force_star_map(order, n, N, N_prime).has_value()
                            : find_star_map(order, n, N, N_prime).has_value();
    in_E += star;
  } while (orders.next());
  ExactImperfection out;
  out.p_E = Rational(in_E, orders.total());
  out.p_D = Rational(in_D, orders.total());
  out.bound = imperfection_bound(diagram, n, N, N_prime, out.p_D);
  out.inequality_holds = !out.bound || out.p_E <= *out.bound;
  if (!out.inequality_holds) throw std::logic_error("exact P(E) exceeds the imperfection bound");
  return out;
}

// ---------------------------------------------------------------------------

std::vector<FixtureCase> fixture_cases() {
  return {
      {"pair", {1, 2, 2}, "all_ones", 1, 2, 0, 0, 0},
      {"line", {1, 2, 2, 2}, "all_ones", 1, 3, 1, 2, 3},
      {"square", {1, 2, 2, 2, 2}, "all_ones", 1, 4, 1, 2, 4},
      {"widening", {1, 2, 3, 3, 3}, "all_ones", 1, 4, 1, 2, 4},
      {"doubled", {1, 1, 2, 2}, "constant_rows(2)", 2, 3, 1, 2, 3},
      {"cyclic", {1, 2, 2, 3}, "cyclic(2)", 1, 3, 1, 2, 3},
  };
}

std::string generate_fixtures() {
  std::map<std::string, Rational> values;
  values["lemma.example_n3"] = Rational(count_good_orderings(LemmaInstance{{0, 0, 1}, {0, 1, 0}}));
  for (std::size_t n = 3; n <= 7; ++n) {
    values["lemma.extremal.n" + std::to_string(n)] = Rational(count_good_orderings(extremal_instance(n)));
  }
  for (const auto& fixture : fixture_cases()) {
    const auto diagram = make_diagram(fixture.sizes, Generator::parse(fixture.generator));
    const auto prefix = fixture.name + ".";
    values[prefix + "orders"] = Rational(order_space_size(diagram, diagram.depth() - 1));
    for (const auto& [c, p] : exact_census(diagram, fixture.k, fixture.census_depth)) {
      values[prefix + "census.k" + std::to_string(fixture.k) + ".N" + std::to_string(fixture.census_depth) + ".count" +
             std::to_string(c)] = p;
    }
    if (fixture.N_prime == 0) continue;
    const auto exact = exact_imperfection(diagram, fixture.n, fixture.N, fixture.N_prime);
    const auto tag = prefix + "imperfection.n" + std::to_string(fixture.n) + ".N" + std::to_string(fixture.N) + ".Np" +
                     std::to_string(fixture.N_prime) + ".";
    values[tag + "P_E"] = exact.p_E;
    values[tag + "P_D"] = exact.p_D;
    if (exact.bound) values[tag + "bound"] = *exact.bound;
  }
  std::ostringstream out;
  out << "# exact oracle values; regenerate with `bratteli fixtures`\n";
  for (const auto& [key, value] : values) out << key << " = " << to_string(value) << '\n';
  return out.str();
}

std::map<std::string, Rational> parse_fixtures(std::string_view text) {
  std::map<std::string, Rational> values;
  std::istringstream in{std::string(text)};
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    const auto eq = line.find(" = ");
    if (eq == std::string::npos) throw ArgumentError("fixture line without ' = ': " + line);
    values[line.substr(0, eq)] = parse_rational(line.substr(eq + 3));
  }
  return values;
}

}  // namespace bratteli
