#include <doctest.h>

#include <algorithm>
#include <sstream>

#include "sagin/metrics.hpp"
#include "sagin/sim.hpp"

using namespace sagin::sim;

namespace {

// src - bs - bs - dst with one packet per tick offered and one packet per tick of capacity.
World line_world(std::size_t capacity = 200, double middle_rate = 1.2e6) {
  SimConfig c;
  c.source_rate_mean_bps = 1.2e6;
  c.source_rate_sd_bps = 0.0;
  World w = empty_world(c, 1);
  const NodeId s = add_node(w, NodeKind::kUeSource, {0, 0, 0}, capacity);
  const NodeId b1 = add_node(w, NodeKind::kBs, {100, 0, 25}, capacity);
  const NodeId b2 = add_node(w, NodeKind::kBs, {200, 0, 25}, capacity);
  const NodeId d = add_node(w, NodeKind::kUeDest, {300, 0, 0}, capacity);
  set_link(w, s, b1, 1.2e6);
  set_link(w, b1, b2, middle_rate);
  set_link(w, b2, d, 1.2e6);
  return w;
}

bool conserved(const World& w) {
  return w.counters.generated == w.counters.delivered + w.counters.dropped + w.in_system();
}

}  // namespace

TEST_CASE("a packet crosses one hop per tick on an unloaded line") {
  World w = line_world();
  MetricsAccumulator m(w.config.tick_s);
  for (int t = 0; t < 10; ++t) m.add(simulate_tick(w, {}));
  CHECK(w.counters.generated == 10);
  CHECK(w.counters.delivered == 7);
  CHECK(w.in_system() == 3);
  const TrafficMetrics r = m.finalize(0.1);
  CHECK(r.mean_delay_s == doctest::Approx(0.03));
  CHECK(r.throughput_bps == doctest::Approx(7 * 12000 / 0.1));
  CHECK(r.drop_rate == 0.0);
}

TEST_CASE("a slow middle link overflows the first BS queue") {
  World w = line_world(5, 0.4e6);
  std::uint64_t overflow = 0;
  for (int t = 0; t < 200; ++t) {
    for (const auto& e : simulate_tick(w, {})) {
      if (e.kind == EventKind::kDropped) {
        CHECK(e.reason == DropReason::kOverflow);
        CHECK(e.node == 1);
        ++overflow;
      }
    }
    REQUIRE(conserved(w));
  }
  CHECK(overflow > 100);
  CHECK(w.nodes[1].queue.size() <= 5);
}

TEST_CASE("removing a link drops queued packets as link loss") {
  World w = line_world(200, 0.4e6);
  for (int t = 0; t < 20; ++t) simulate_tick(w, {});
  set_link(w, 1, 2, 0.4e6, false);
  std::uint64_t lost = 0;
  for (const auto& e : simulate_tick(w, {})) {
    if (e.kind == EventKind::kDropped && e.reason == DropReason::kLinkLoss) ++lost;
  }
  CHECK(lost > 0);
  CHECK(conserved(w));
}

TEST_CASE("route search prefers fewest hops then smallest ids") {
  World w = empty_world(SimConfig{}, 0);
  for (int i = 0; i < 6; ++i) add_node(w, NodeKind::kBs, {0, 0, 0}, 10);
  // 0-1-3-5 and 0-2-3-5 tie; 0-4-5 is shorter only if 4-5 exists
  set_link(w, 0, 1, 1);
  set_link(w, 0, 2, 1);
  set_link(w, 1, 3, 1);
  set_link(w, 2, 3, 1);
  set_link(w, 3, 5, 1);
  CHECK(*ospf_route(w, 0, 5) == std::vector<NodeId>{0, 1, 3, 5});
  const NodeId skip[] = {1};
  CHECK(*ospf_route(w, 0, 5, RouteScope::kAll, skip) == std::vector<NodeId>{0, 2, 3, 5});
  set_link(w, 0, 4, 1);
  set_link(w, 4, 5, 1);
  CHECK(*ospf_route(w, 0, 5) == std::vector<NodeId>{0, 4, 5});
  set_link(w, 4, 5, 1, false);
  set_link(w, 3, 5, 1, false);
  CHECK_FALSE(ospf_route(w, 0, 5).has_value());
}

TEST_CASE("terrestrial routes avoid relays") {
  World w = empty_world(SimConfig{}, 0);
  add_node(w, NodeKind::kBs, {0, 0, 0}, 10);
  add_node(w, NodeKind::kUav, {0, 0, 0}, 10);
  add_node(w, NodeKind::kBs, {0, 0, 0}, 10);
  set_link(w, 0, 1, 1);
  set_link(w, 1, 2, 1);
  CHECK(ospf_route(w, 0, 2).has_value());
  CHECK_FALSE(ospf_route(w, 0, 2, RouteScope::kTerrestrial).has_value());
}

TEST_CASE("full world conserves packets every tick") {
  for (std::uint64_t seed : {1, 2}) {
    World w = build_world(SimConfig{}, seed);
    for (int t = 0; t < 600; ++t) {
      simulate_tick(w, {{w.ids_of(NodeKind::kBs)[0], 2}, {w.ids_of(NodeKind::kBs)[3], 1}});
      REQUIRE(conserved(w));
    }
    CHECK(w.counters.delivered > 0);
  }
}

TEST_CASE("same seed gives the same event stream") {
  World a = build_world(SimConfig{}, 42);
  World b = build_world(SimConfig{}, 42);
  World c = build_world(SimConfig{}, 43);
  bool differs = false;
  for (int t = 0; t < 300; ++t) {
    const Events ea = simulate_tick(a, {});
    REQUIRE(ea == simulate_tick(b, {}));
    if (!(ea == simulate_tick(c, {}))) differs = true;
  }
  CHECK(differs);
}

TEST_CASE("world has the configured node mix") {
  const SimConfig c;
  const World w = build_world(c, 3);
  CHECK(w.ids_of(NodeKind::kBs).size() == 8);
  CHECK(w.ids_of(NodeKind::kUav).size() == 6);
  CHECK(w.ids_of(NodeKind::kLeo).size() == 2);
  CHECK(w.ids_of(NodeKind::kGeo).size() == 1);
  CHECK(w.ids_of(NodeKind::kUeSource).size() == static_cast<std::size_t>(c.num_sources));
  for (std::size_t i = 0; i < w.nodes.size(); ++i) CHECK(w.nodes[i].id == i);
}

TEST_CASE("UAVs outside the area lose coverage and links, and turn back") {
  SimConfig c;
  c.uav_speed_mps = 30.0;
  World w = build_world(c, 5);
  const double reach = c.uav_speed_mps * c.uav_direction_period_s;
  bool left = false;
  for (int t = 0; t < 20000; ++t) {
    begin_tick(w);
    finish_tick(w, nullptr);
    for (NodeId u : w.ids_of(NodeKind::kUav)) {
      const auto& p = w.nodes[u].position;
      REQUIRE(w.nodes[u].in_coverage == inside_area(w, p));
      if (!w.nodes[u].in_coverage) {
        left = true;
        CHECK(w.adjacency[u].empty());
      }
      const double over = std::max({-p.x(), p.x() - c.area_side_m, -p.y(), p.y() - c.area_side_m, 0.0});
      REQUIRE(over <= 2 * reach);
    }
  }
  CHECK(left);
}

TEST_CASE("invalid configs are rejected") {
  SimConfig c;
  c.tick_s = 0;
  CHECK_THROWS(c.validate());
  c = SimConfig{};
  c.num_bs = 0;
  CHECK_THROWS(c.validate());
}

TEST_CASE("snapshot writes one JSON object per line") {
  const World w = build_world(SimConfig{}, 1);
  std::ostringstream out;
  dump_snapshot(w, out);
  std::istringstream in(out.str());
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line)) {
    CHECK(line.front() == '{');
    ++n;
  }
  CHECK(n >= w.nodes.size());
}

TEST_CASE("metrics edge cases") {
  const TrafficMetrics empty = collect_metrics({}, 1.0, 0.01);
  CHECK(empty.drop_rate == 0.0);
  CHECK(empty.mean_delay_s == 0.0);
  Events ev{{EventKind::kGenerated, 1, 0, 0, 1, 100}, {EventKind::kGenerated, 1, 1, 0, 1, 100},
            {EventKind::kDropped, 2, 0, 0, 1, 100}, {EventKind::kDelivered, 5, 1, 3, 1, 100, 3}};
  const TrafficMetrics m = collect_metrics(ev, 2.0, 0.01);
  CHECK(m.drop_rate == 0.5);
  CHECK(m.mean_delay_s == doctest::Approx(0.04));
  CHECK(m.throughput_bps == 50.0);
}
