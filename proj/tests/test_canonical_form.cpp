#include "tde/canonical_form.hpp"

#include <catch2/catch_amalgamated.hpp>

#include <functional>
#include <numeric>

using namespace tde;

namespace {

RibbonGraphRho rosette(std::vector<Halfedge> cycle,
                       std::vector<std::pair<Halfedge, Halfedge>> pairs,
                       std::vector<int> twists) {
    return make_graph({cycle}, pairs, twists);
}

long euler(const RibbonGraphRho& g) {
    return long(g.map.vertex_count()) - long(g.map.edge_count()) + long(faces(g).count());
}

void check_consistent(const RibbonGraphRho& g) {
    CanonicalSurface s = canonical_form(g);
    REQUIRE(s.euler_characteristic() == euler(g));
    REQUIRE(s.orientable() == is_orientable(g));
    REQUIRE(s.cross_caps <= 2);
}

std::vector<std::vector<std::pair<Halfedge, Halfedge>>> perfect_matchings(unsigned n) {
    std::vector<std::vector<std::pair<Halfedge, Halfedge>>> out;
    std::vector<std::pair<Halfedge, Halfedge>> cur;
    std::function<void(std::vector<Halfedge>)> rec = [&](std::vector<Halfedge> rest) {
        if (rest.empty()) {
            out.push_back(cur);
            return;
        }
        for (std::size_t k = 1; k < rest.size(); ++k) {
            std::vector<Halfedge> next;
            for (std::size_t j = 1; j < rest.size(); ++j)
                if (j != k) next.push_back(rest[j]);
            cur.emplace_back(rest.front(), rest[k]);
            rec(std::move(next));
            cur.pop_back();
        }
    };
    std::vector<Halfedge> items(n);
    std::iota(items.begin(), items.end(), 0);
    rec(items);
    return out;
}

} // namespace

TEST_CASE("classification of the model surfaces") {
    auto cf = [](const RibbonGraphRho& g) { return canonical_form(g); };

    CanonicalSurface sphere = cf(rosette({0, 1}, {{0, 1}}, {0}));
    REQUIRE(sphere.genus == 0);
    REQUIRE(sphere.cross_caps == 0);

    CanonicalSurface projective = cf(rosette({0, 1}, {{0, 1}}, {1}));
    REQUIRE(projective.genus == 0);
    REQUIRE(projective.cross_caps == 1);

    CanonicalSurface torus = cf(rosette({0, 2, 1, 3}, {{0, 1}, {2, 3}}, {0, 0}));
    REQUIRE(torus.genus == 1);
    REQUIRE(torus.cross_caps == 0);

    CanonicalSurface nested = cf(rosette({0, 1, 2, 3}, {{0, 1}, {2, 3}}, {0, 0}));
    REQUIRE(nested.genus == 0);
    REQUIRE(nested.cross_caps == 0);

    CanonicalSurface klein = cf(rosette({0, 1, 2, 3}, {{0, 1}, {2, 3}}, {1, 1}));
    REQUIRE(klein.genus == 0);
    REQUIRE(klein.cross_caps == 2);

    // Three crosscaps normalize to one handle plus one crosscap.
    CanonicalSurface dyck =
        cf(rosette({0, 1, 2, 3, 4, 5}, {{0, 1}, {2, 3}, {4, 5}}, {1, 1, 1}));
    REQUIRE(dyck.genus == 1);
    REQUIRE(dyck.cross_caps == 1);

    CanonicalSurface genus2 = cf(rosette({0, 2, 1, 3, 4, 6, 5, 7},
                                         {{0, 1}, {2, 3}, {4, 5}, {6, 7}}, {0, 0, 0, 0}));
    REQUIRE(genus2.genus == 2);
    REQUIRE(genus2.cross_caps == 0);

    CanonicalSurface torus_plus_cap =
        cf(rosette({0, 2, 1, 3, 4, 5}, {{0, 1}, {2, 3}, {4, 5}}, {0, 0, 1}));
    REQUIRE(torus_plus_cap.genus == 1);
    REQUIRE(torus_plus_cap.cross_caps == 1);

    CanonicalSurface five_caps = cf(rosette(
        {0, 1, 2, 3, 4, 5, 6, 7, 8, 9},
        {{0, 1}, {2, 3}, {4, 5}, {6, 7}, {8, 9}}, {1, 1, 1, 1, 1}));
    REQUIRE(five_caps.genus == 2);
    REQUIRE(five_caps.cross_caps == 1);

    // Multi-vertex spheres collapse through contraction.
    CanonicalSurface seg = cf(make_graph({{0}, {1}}, {{0, 1}}, {0}));
    REQUIRE(seg.genus == 0);
    REQUIRE(seg.cross_caps == 0);
    CanonicalSurface twisted_seg = cf(make_graph({{0}, {1}}, {{0, 1}}, {1}));
    REQUIRE(twisted_seg.genus == 0);
    REQUIRE(twisted_seg.cross_caps == 0);

    CanonicalSurface disc = cf(make_graph({{}}, {}, {}));
    REQUIRE(disc.genus == 0);
    REQUIRE(disc.cross_caps == 0);
}

TEST_CASE("classification agrees with direct counts on every small rosette") {
    for (unsigned E = 1; E <= 3; ++E) {
        std::vector<Halfedge> cycle(2 * E);
        std::iota(cycle.begin(), cycle.end(), 0);
        for (const auto& pairs : perfect_matchings(2 * E)) {
            for (unsigned mask = 0; mask < (1u << E); ++mask) {
                std::vector<int> tw(E);
                for (unsigned i = 0; i < E; ++i) tw[i] = int((mask >> i) & 1u);
                RibbonGraphRho g = make_graph({cycle}, pairs, tw);
                INFO("E=" << E << " mask=" << mask);
                check_consistent(g);
            }
        }
    }
}

TEST_CASE("classification agrees with direct counts on multi-vertex fixtures") {
    check_consistent(make_graph({{0, 2, 4}, {1, 3, 5}}, {{0, 1}, {2, 3}, {4, 5}}, {0, 0, 0}));
    check_consistent(make_graph({{0, 2, 4}, {1, 3, 5}}, {{0, 1}, {2, 3}, {4, 5}}, {1, 0, 1}));
    check_consistent(make_graph({{0, 1, 2, 3, 4}, {5, 6}, {7}},
                                {{0, 1}, {2, 3}, {4, 5}, {6, 7}}, {1, 0, 0, 1}));
    for (int t1 : {0, 1})
        for (int t2 : {0, 1})
            check_consistent(make_graph({{0, 2}, {1, 3}}, {{0, 1}, {2, 3}}, {t1, t2}));
    // Torus rosette with a twisted tail to a second vertex.
    check_consistent(make_graph({{0, 2, 1, 3, 4}, {5}},
                                {{0, 1}, {2, 3}, {4, 5}}, {0, 0, 1}));
}

TEST_CASE("classification is deterministic and traceable") {
    RibbonGraphRho g = rosette({0, 1, 2, 3, 4, 5}, {{0, 1}, {2, 3}, {4, 5}}, {1, 1, 1});
    std::vector<std::string> trace;
    CanonicalSurface a = canonical_form(g, &trace);
    CanonicalSurface b = canonical_form(g);
    REQUIRE(a.genus == b.genus);
    REQUIRE(a.cross_caps == b.cross_caps);
    REQUIRE(!trace.empty());
    for (const auto& line : trace) REQUIRE(nlohmann::json::parse(line).contains("move"));

    std::vector<std::string> trace2;
    canonical_form(make_graph({{0}, {1}}, {{0, 1}}, {0}), &trace2);
    bool contracted = false;
    for (const auto& line : trace2)
        contracted |= (nlohmann::json::parse(line)["move"] == "contract");
    REQUIRE(contracted);
}

TEST_CASE("classification rejects unusable inputs") {
    RibbonGraphRho with_rho = make_graph({{0, 1, 2}, {3}}, {{0, 1}}, {0}, {{2, 3}});
    REQUIRE_THROWS_AS(canonical_form(with_rho), std::invalid_argument);
    RibbonGraphRho split = make_graph({{0, 1}, {2, 3}}, {{0, 1}, {2, 3}}, {0, 0});
    REQUIRE_THROWS_AS(canonical_form(split), std::invalid_argument);
}

TEST_CASE("edge contraction merges endpoints and keeps the surface") {
    // Chain: univalent, 2-valent, univalent.
    RibbonGraphRho chain = make_graph({{0}, {1, 2}, {3}}, {{0, 1}, {2, 3}}, {0, 0});
    RibbonGraphRho once = contract_edge(chain, 0);
    REQUIRE(once.map.vertex_count() == 2);
    REQUIRE(once.map.edge_count() == 1);
    REQUIRE(faces(once).count() == faces(chain).count());
    REQUIRE(euler(once) == euler(chain));
    REQUIRE(sign_by_definition(once) == sign_by_definition(chain));

    // Contracting a twisted edge re-embeds the far endpoint first.
    RibbonGraphRho tail = make_graph({{0, 2, 1, 3, 4}, {5}}, {{0, 1}, {2, 3}, {4, 5}}, {0, 0, 1});
    RibbonGraphRho merged = contract_edge(tail, 2);
    REQUIRE(merged.map.vertex_count() == 1);
    REQUIRE(faces(merged).count() == faces(tail).count());
    REQUIRE(euler(merged) == euler(tail));
    REQUIRE(sign_by_definition(merged) == sign_by_definition(tail));
    REQUIRE(is_orientable(merged) == is_orientable(tail));

    // A segment contracts to a bare disc.
    RibbonGraphRho seg = make_graph({{0}, {1}}, {{0, 1}}, {0});
    RibbonGraphRho bare = contract_edge(seg, 0);
    REQUIRE(bare.map.vertex_count() == 1);
    REQUIRE(bare.map.edge_count() == 0);
    REQUIRE(faces(bare).count() == 1);

    RibbonGraphRho loop = rosette({0, 1}, {{0, 1}}, {0});
    REQUIRE_THROWS_AS(contract_edge(loop, 0), std::invalid_argument);
}

TEST_CASE("slide Ia reverses the enclosed block and isolates the twist") {
    // (e1 h h' e2) with the enclosed edge toggled twice, so only reversal shows.
    RibbonGraphRho g = rosette({0, 2, 3, 1}, {{0, 1}, {2, 3}}, {1, 0});
    RibbonGraphRho out = slide(g, SlideMove::Ia, 0);
    RibbonGraphRho expect = rosette({0, 1, 2, 3}, {{0, 1}, {2, 3}}, {0, 1});
    REQUIRE(graph_to_json(out).dump() == graph_to_json(expect).dump());
    REQUIRE(faces(out).count() == faces(g).count());
    REQUIRE(sign_by_definition(out) == sign_by_definition(g));

    RibbonGraphRho g2 = rosette({0, 2, 3, 1}, {{0, 1}, {2, 3}}, {1, 1});
    RibbonGraphRho out2 = slide(g2, SlideMove::Ia, 0);
    RibbonGraphRho expect2 = rosette({0, 1, 2, 3}, {{0, 1}, {2, 3}}, {1, 1});
    REQUIRE(graph_to_json(out2).dump() == graph_to_json(expect2).dump());

    REQUIRE_THROWS_AS(slide(rosette({0, 1}, {{0, 1}}, {0}), SlideMove::Ia, 0),
                      std::invalid_argument);
    REQUIRE_THROWS_AS(slide(make_graph({{0}, {1}}, {{0, 1}}, {1}), SlideMove::Ia, 0),
                      std::invalid_argument);
}

TEST_CASE("slide Ib hops a block over a simple twisted loop") {
    RibbonGraphRho g = rosette({4, 2, 3, 0, 1, 5}, {{0, 1}, {2, 3}, {4, 5}}, {1, 0, 1});
    RibbonGraphRho out = slide(g, SlideMove::Ib, 0, 2);
    RibbonGraphRho expect = rosette({0, 1, 2, 3, 4, 5}, {{0, 1}, {2, 3}, {4, 5}}, {1, 0, 1});
    REQUIRE(graph_to_json(out).dump() == graph_to_json(expect).dump());
    REQUIRE(faces(out).count() == faces(g).count());
    REQUIRE(sign_by_definition(out) == sign_by_definition(g));
}

TEST_CASE("slide IIa tidies a nice crossing into a clean one") {
    RibbonGraphRho g = rosette({0, 4, 2, 1, 6, 3, 5, 7},
                               {{0, 1}, {2, 3}, {4, 5}, {6, 7}}, {0, 0, 1, 0});
    REQUIRE(find_nice_crossing(g, 0) == std::optional<Halfedge>{0});
    RibbonGraphRho out = slide(g, SlideMove::IIa, 0);
    RibbonGraphRho expect = rosette({0, 1, 2, 3, 4, 5, 6, 7},
                                    {{0, 7}, {1, 6}, {2, 4}, {3, 5}}, {0, 1, 0, 0});
    REQUIRE(graph_to_json(out).dump() == graph_to_json(expect).dump());
    REQUIRE(faces(out).count() == faces(g).count());
    REQUIRE(sign_by_definition(out) == sign_by_definition(g));
}

TEST_CASE("slide IIb hops a block over a clean crossing") {
    RibbonGraphRho g = rosette({4, 0, 2, 1, 3, 5}, {{0, 1}, {2, 3}, {4, 5}}, {0, 0, 1});
    RibbonGraphRho out = slide(g, SlideMove::IIb, 0, 1);
    RibbonGraphRho expect = rosette({0, 1, 2, 3, 4, 5}, {{0, 2}, {1, 3}, {4, 5}}, {0, 0, 1});
    REQUIRE(graph_to_json(out).dump() == graph_to_json(expect).dump());
    REQUIRE(faces(out).count() == faces(g).count());
    REQUIRE(sign_by_definition(out) == sign_by_definition(g));

    // Block over a non-clean crossing is refused.
    RibbonGraphRho bad = rosette({4, 0, 2, 5, 1, 3}, {{0, 1}, {2, 3}, {4, 5}}, {0, 0, 0});
    REQUIRE_THROWS_AS(slide(bad, SlideMove::IIb, 0, 1), std::invalid_argument);
}

TEST_CASE("nice crossings are found or correctly absent") {
    RibbonGraphRho torus = rosette({0, 2, 1, 3}, {{0, 1}, {2, 3}}, {0, 0});
    auto site = find_nice_crossing(torus, 0);
    REQUIRE(site.has_value());
    // The returned crossing is already clean here, so IIb with no block keeps it.
    RibbonGraphRho out = slide(torus, SlideMove::IIb, *site, 0);
    REQUIRE(faces(out).count() == faces(torus).count());

    RibbonGraphRho nested = rosette({0, 1, 2, 3}, {{0, 1}, {2, 3}}, {0, 0});
    REQUIRE(!find_nice_crossing(nested, 0).has_value());
    RibbonGraphRho twisted = rosette({0, 2, 1, 3}, {{0, 1}, {2, 3}}, {1, 1});
    REQUIRE(!find_nice_crossing(twisted, 0).has_value());
}
