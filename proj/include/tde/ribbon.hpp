#pragma once

// Combinatorial maps with rho-edges and ribbon graphs (twisted edges).
//
// Halfedges are dense ids 0..H-1. A vertex is a cycle of pi (counterclockwise
// order); every halfedge is paired either by alpha (a ribbon edge, carrying a
// twist bit) or by alpha_rho (a rho-edge, transparent to faces and twists).
//
// Faces are traced by a side automaton on outward states (h, side): crossing
// an edge maps (h, s) -> (partner(h), s ^ 1 ^ twist); turning a corner from an
// inward state continues counterclockwise from side 0 and clockwise from
// side 1. Every boundary circuit is found twice, once per direction, so the
// face count is half the orbit count, plus one free disc per vertex that has
// no ribbon halfedge.

#include "tde/errors.hpp"
#include "tde/rational.hpp"

#include <json.hpp>

#include <algorithm>
#include <array>
#include <cassert>
#include <cstdint>
#include <map>
#include <optional>
#include <queue>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace tde {

using Halfedge = std::uint32_t;
inline constexpr Halfedge kNoHalfedge = static_cast<Halfedge>(-1);

struct EdgePair {
    Halfedge a = kNoHalfedge; // a < b always
    Halfedge b = kNoHalfedge;

    bool operator==(const EdgePair&) const = default;
};

struct CombMapRho {
    // Core permutations, sized H.
    std::vector<Halfedge> pi;      // next halfedge counterclockwise at the vertex
    std::vector<Halfedge> pi_inv;
    std::vector<Halfedge> partner; // alpha on ribbon halfedges, alpha_rho on rho ones
    std::vector<std::uint8_t> rho; // 1 if the halfedge belongs to a rho-edge

    // Vertices carrying no halfedge at all (bare discs). They sit after the
    // cycle-backed vertices in the vertex numbering and are interchangeable.
    std::uint32_t bare_vertices = 0;

    // Derived structure.
    std::vector<std::uint32_t> vertex_of;
    std::vector<std::vector<Halfedge>> cycles;  // one per cycle-backed vertex, starts at min halfedge
    std::vector<EdgePair> edges;                // ribbon edges, sorted by lower halfedge
    std::vector<EdgePair> rho_edges;            // rho edges, sorted by lower halfedge
    std::vector<std::uint32_t> edge_of;         // index into edges or rho_edges

    std::size_t halfedge_count() const { return pi.size(); }
    std::size_t vertex_count() const { return cycles.size() + bare_vertices; }
    std::size_t edge_count() const { return edges.size(); }
    std::size_t rho_edge_count() const { return rho_edges.size(); }

    bool is_rho(Halfedge h) const { return rho[h] != 0; }

    /// Rebuilds the derived structure from pi/partner/rho and validates.
    void finalize() {
        const std::size_t H = pi.size();
        if (partner.size() != H || rho.size() != H)
            throw std::invalid_argument("combinatorial map arrays must share one halfedge count");
        std::vector<std::uint8_t> seen(H, 0);
        for (Halfedge h = 0; h < H; ++h) {
            if (pi[h] >= H) throw std::invalid_argument("pi out of range");
            if (partner[h] >= H || partner[h] == h || partner[partner[h]] != h)
                throw std::invalid_argument("edge pairing must be a fixed-point-free involution");
            if (rho[h] != rho[partner[h]])
                throw std::invalid_argument("rho flag must agree across an edge");
        }
        pi_inv.assign(H, kNoHalfedge);
        for (Halfedge h = 0; h < H; ++h) {
            if (pi_inv[pi[h]] != kNoHalfedge)
                throw std::invalid_argument("pi must be a permutation");
            pi_inv[pi[h]] = h;
        }
        cycles.clear();
        vertex_of.assign(H, 0);
        for (Halfedge h = 0; h < H; ++h) {
            if (seen[h]) continue;
            // Only start a cycle at its minimal element.
            Halfedge m = h;
            for (Halfedge x = pi[h]; x != h; x = pi[x]) m = std::min(m, x);
            if (m != h) continue;
            std::vector<Halfedge> cyc;
            Halfedge x = h;
            do {
                seen[x] = 1;
                vertex_of[x] = static_cast<std::uint32_t>(cycles.size());
                cyc.push_back(x);
                x = pi[x];
            } while (x != h);
            cycles.push_back(std::move(cyc));
        }
        edges.clear();
        rho_edges.clear();
        edge_of.assign(H, 0);
        for (Halfedge h = 0; h < H; ++h) {
            if (h > partner[h]) continue;
            EdgePair e{h, partner[h]};
            if (is_rho(h))
                rho_edges.push_back(e);
            else
                edges.push_back(e);
        }
        for (std::uint32_t i = 0; i < edges.size(); ++i)
            edge_of[edges[i].a] = edge_of[edges[i].b] = i;
        for (std::uint32_t i = 0; i < rho_edges.size(); ++i)
            edge_of[rho_edges[i].a] = edge_of[rho_edges[i].b] = i;
    }
};

struct RibbonGraphRho {
    CombMapRho map;
    std::vector<std::uint8_t> twist;        // per ribbon edge, aligned with map.edges
    std::optional<Halfedge> root;

    std::size_t vertex_count() const { return map.vertex_count(); }
    std::size_t edge_count() const { return map.edge_count(); }
    std::size_t rho_edge_count() const { return map.rho_edge_count(); }

    int twist_of(Halfedge h) const {
        assert(!map.is_rho(h));
        return twist[map.edge_of[h]];
    }

    void validate() const {
        if (twist.size() != map.edges.size())
            throw std::invalid_argument("one twist bit per ribbon edge required");
        if (root && *root >= map.halfedge_count())
            throw std::invalid_argument("root halfedge out of range");
    }
};

/// Builds a graph from explicit vertex cycles and edge lists.
/// Twists are given per ribbon pair, in the order the pairs are listed.
inline RibbonGraphRho make_graph(const std::vector<std::vector<Halfedge>>& cycles,
                                 const std::vector<std::pair<Halfedge, Halfedge>>& ribbon_pairs,
                                 const std::vector<int>& twists,
                                 const std::vector<std::pair<Halfedge, Halfedge>>& rho_pairs = {},
                                 std::optional<Halfedge> root = std::nullopt) {
    if (twists.size() != ribbon_pairs.size())
        throw std::invalid_argument("one twist per ribbon pair required");
    std::size_t H = 0;
    for (const auto& c : cycles) H += c.size();
    RibbonGraphRho g;
    g.map.pi.assign(H, kNoHalfedge);
    g.map.partner.assign(H, kNoHalfedge);
    g.map.rho.assign(H, 0);
    for (const auto& c : cycles) {
        if (c.empty()) {
            ++g.map.bare_vertices;
            continue;
        }
        for (std::size_t i = 0; i < c.size(); ++i) {
            if (c[i] >= H || g.map.pi[c[i]] != kNoHalfedge)
                throw std::invalid_argument("halfedge ids must be dense 0..H-1, used once");
            g.map.pi[c[i]] = c[(i + 1) % c.size()];
        }
    }
    auto connect = [&](const std::pair<Halfedge, Halfedge>& p, bool is_rho) {
        if (p.first >= H || p.second >= H || p.first == p.second ||
            g.map.partner[p.first] != kNoHalfedge || g.map.partner[p.second] != kNoHalfedge)
            throw std::invalid_argument("bad edge pair");
        g.map.partner[p.first] = p.second;
        g.map.partner[p.second] = p.first;
        g.map.rho[p.first] = g.map.rho[p.second] = is_rho ? 1 : 0;
    };
    for (const auto& p : ribbon_pairs) connect(p, false);
    for (const auto& p : rho_pairs) connect(p, true);
    g.map.finalize();
    g.twist.assign(g.map.edges.size(), 0);
    for (std::size_t i = 0; i < ribbon_pairs.size(); ++i) {
        Halfedge lo = std::min(ribbon_pairs[i].first, ribbon_pairs[i].second);
        g.twist[g.map.edge_of[lo]] = static_cast<std::uint8_t>(twists[i] & 1);
    }
    g.root = root;
    g.validate();
    return g;
}

// ---------------------------------------------------------------------------
// Connectivity.

inline bool is_connected(const RibbonGraphRho& g) {
    const std::size_t V = g.map.vertex_count();
    if (V <= 1) return true;
    if (g.map.bare_vertices > 0) return false; // bare discs touch nothing
    std::vector<std::uint8_t> seen(V, 0);
    std::queue<std::uint32_t> q;
    q.push(0);
    seen[0] = 1;
    std::size_t reached = 1;
    while (!q.empty()) {
        std::uint32_t v = q.front();
        q.pop();
        for (Halfedge h : g.map.cycles[v]) {
            std::uint32_t w = g.map.vertex_of[g.map.partner[h]];
            if (!seen[w]) {
                seen[w] = 1;
                ++reached;
                q.push(w);
            }
        }
    }
    return reached == V;
}

/// Component index per vertex after deleting every rho-edge (vertices stay).
struct RhoComponents {
    std::vector<std::uint32_t> component_of_vertex;
    std::uint32_t count = 0;
};

inline RhoComponents components_after_rho_deletion(const RibbonGraphRho& g) {
    const std::size_t V = g.map.vertex_count();
    RhoComponents out;
    out.component_of_vertex.assign(V, static_cast<std::uint32_t>(-1));
    for (std::uint32_t v = 0; v < V; ++v) {
        if (out.component_of_vertex[v] != static_cast<std::uint32_t>(-1)) continue;
        out.component_of_vertex[v] = out.count;
        if (v < g.map.cycles.size()) {
            std::queue<std::uint32_t> q;
            q.push(v);
            while (!q.empty()) {
                std::uint32_t u = q.front();
                q.pop();
                for (Halfedge h : g.map.cycles[u]) {
                    if (g.map.is_rho(h)) continue;
                    std::uint32_t w = g.map.vertex_of[g.map.partner[h]];
                    if (out.component_of_vertex[w] == static_cast<std::uint32_t>(-1)) {
                        out.component_of_vertex[w] = out.count;
                        q.push(w);
                    }
                }
            }
        }
        ++out.count;
    }
    return out;
}

// ---------------------------------------------------------------------------
// Faces.

/// Outward strand state: side s of halfedge h, pointing away from the vertex.
struct StrandState {
    Halfedge h = kNoHalfedge;
    int side = 0;

    bool operator==(const StrandState&) const = default;
    auto operator<=>(const StrandState&) const = default;
};

struct FaceCircuit {
    std::vector<StrandState> strands; // outward states in traversal order
    int corner_reversals = 0;         // corner steps taken against the ccw arrows
    int strand_reversals = 0;         // edge strands crossed against their arrows
    int t() const { return corner_reversals + strand_reversals; }
};

struct FaceSet {
    std::vector<FaceCircuit> circuits; // one canonical direction per face
    std::size_t free_discs = 0;        // vertices without ribbon halfedges
    std::size_t count() const { return circuits.size() + free_discs; }
};

namespace detail {

/// Next ribbon halfedge counterclockwise at the same vertex, skipping rho.
inline Halfedge pi_skip(const CombMapRho& m, Halfedge h) {
    Halfedge x = m.pi[h];
    while (m.is_rho(x)) x = m.pi[x];
    return x;
}

inline Halfedge pi_skip_inv(const CombMapRho& m, Halfedge h) {
    Halfedge x = m.pi_inv[h];
    while (m.is_rho(x)) x = m.pi_inv[x];
    return x;
}

inline std::size_t state_index(const StrandState& s) { return 2 * s.h + s.side; }

} // namespace detail

/// One automaton step from an outward state: cross the edge, turn the corner.
/// Also reports the two reorientation contributions of the step.
inline StrandState face_step(const RibbonGraphRho& g, const StrandState& s, int* strand_rev = nullptr,
                             int* corner_rev = nullptr) {
    const Halfedge p = g.map.partner[s.h];
    if (strand_rev) *strand_rev = s.h > p ? 1 : 0; // arrows run lower -> higher halfedge
    const int inward_side = s.side ^ 1 ^ g.twist_of(s.h);
    if (inward_side == 0) {
        if (corner_rev) *corner_rev = 0;
        return {detail::pi_skip(g.map, p), 1};
    }
    if (corner_rev) *corner_rev = 1;
    return {detail::pi_skip_inv(g.map, p), 0};
}

/// The same strand traversed in the opposite direction, as an outward state.
inline StrandState reverse_strand(const RibbonGraphRho& g, const StrandState& s) {
    return {g.map.partner[s.h], s.side ^ 1 ^ g.twist_of(s.h)};
}

inline FaceSet faces(const RibbonGraphRho& g) {
    g.validate();
    FaceSet out;
    const std::size_t H = g.map.halfedge_count();
    std::vector<std::uint8_t> visited(2 * H, 0);
    std::vector<std::uint8_t> vertex_has_ribbon(g.map.cycles.size(), 0);
    for (Halfedge h = 0; h < H; ++h)
        if (!g.map.is_rho(h)) vertex_has_ribbon[g.map.vertex_of[h]] = 1;
    for (std::uint8_t has : vertex_has_ribbon)
        if (!has) ++out.free_discs;
    out.free_discs += g.map.bare_vertices;

    for (Halfedge h = 0; h < H; ++h) {
        if (g.map.is_rho(h)) continue;
        for (int side = 0; side < 2; ++side) {
            StrandState seed{h, side};
            if (visited[detail::state_index(seed)]) continue;
            FaceCircuit fc;
            StrandState s = seed;
            do {
                visited[detail::state_index(s)] = 1;
                fc.strands.push_back(s);
                int sr = 0, cr = 0;
                s = face_step(g, s, &sr, &cr);
                fc.strand_reversals += sr;
                fc.corner_reversals += cr;
            } while (!(s == seed));
            // The same circuit exists with reversed direction; consume it so
            // each face is counted once.
            StrandState r = reverse_strand(g, seed);
            if (visited[detail::state_index(r)])
                throw std::logic_error("face circuit met its own reverse traversal");
            StrandState s2 = r;
            std::size_t rev_len = 0;
            do {
                if (visited[detail::state_index(s2)])
                    throw std::logic_error("reverse face circuit collided with another face");
                visited[detail::state_index(s2)] = 1;
                ++rev_len;
                s2 = face_step(g, s2, nullptr, nullptr);
            } while (!(s2 == r));
            if (rev_len != fc.strands.size())
                throw std::logic_error("face circuit directions disagree on length");
            out.circuits.push_back(std::move(fc));
        }
    }
    return out;
}

/// (-1)^V * prod_edges (-1)^twist * prod_faces (-1)^t(f).
inline int sign_by_definition(const RibbonGraphRho& g) {
    int s = (g.map.vertex_count() % 2 == 0) ? 1 : -1;
    for (std::uint8_t t : g.twist)
        if (t) s = -s;
    for (const FaceCircuit& fc : faces(g).circuits)
        if (fc.t() % 2 != 0) s = -s;
    return s;
}

/// Checks sign_by_definition(g) == (-1)^F(g); returns both.
struct SignCheck {
    int by_definition = 0;
    int by_face_parity = 0;
    bool ok() const { return by_definition == by_face_parity; }
};

inline SignCheck sign_theorem_check(const RibbonGraphRho& g) {
    SignCheck c;
    c.by_definition = sign_by_definition(g);
    c.by_face_parity = (faces(g).count() % 2 == 0) ? 1 : -1;
    return c;
}

// ---------------------------------------------------------------------------
// Vertex flips (re-embeddings).

/// Reverses the cyclic order at vertex v and toggles the twist of each
/// incident ribbon edge once per incident halfedge (self-loops toggle twice).
inline RibbonGraphRho flip_vertex(const RibbonGraphRho& g, std::uint32_t v) {
    RibbonGraphRho out = g;
    if (v >= g.map.cycles.size()) return out; // bare disc, nothing to reverse
    const auto& cyc = g.map.cycles[v];
    for (std::size_t i = 0; i < cyc.size(); ++i)
        out.map.pi[cyc[(i + 1) % cyc.size()]] = cyc[i];
    for (Halfedge h : cyc)
        if (!g.map.is_rho(h)) out.twist[g.map.edge_of[h]] ^= 1;
    out.map.finalize();
    return out;
}

// ---------------------------------------------------------------------------
// Canonical codes and the twist group action.

namespace detail {

/// Serializes the graph with twists adjusted by the flip assignment and each
/// vertex read from its discovery halfedge in the assigned direction.
/// Requires a connected graph; the traversal crosses rho-edges too.
inline std::vector<std::int64_t> bfs_code(const RibbonGraphRho& g, Halfedge root,
                                          const std::vector<std::uint8_t>& flipped) {
    const std::size_t H = g.map.halfedge_count();
    std::vector<std::int32_t> label(H, -1);
    std::vector<std::uint8_t> vertex_done(g.map.vertex_count(), 0);
    std::vector<std::int64_t> code;
    std::queue<Halfedge> frontier;
    frontier.push(root);
    std::int32_t next_label = 0;
    std::size_t vertices_seen = 0;
    while (!frontier.empty()) {
        Halfedge entry = frontier.front();
        frontier.pop();
        std::uint32_t v = g.map.vertex_of[entry];
        if (vertex_done[v]) continue;
        vertex_done[v] = 1;
        ++vertices_seen;
        std::vector<Halfedge> order;
        order.reserve(g.map.cycles[v].size());
        Halfedge x = entry;
        do {
            order.push_back(x);
            x = flipped[v] ? g.map.pi_inv[x] : g.map.pi[x];
        } while (x != entry);
        code.push_back(-1); // vertex separator
        code.push_back(static_cast<std::int64_t>(order.size()));
        for (Halfedge h : order)
            if (label[h] < 0) label[h] = next_label++;
        for (Halfedge h : order) {
            Halfedge p = g.map.partner[h];
            if (label[p] < 0) {
                label[p] = next_label++;
                frontier.push(p);
            }
            code.push_back(label[p]);
            if (g.map.is_rho(h)) {
                code.push_back(2);
            } else {
                std::uint32_t u = g.map.vertex_of[p];
                int t = g.twist[g.map.edge_of[h]] ^ flipped[v] ^ flipped[u];
                code.push_back(t);
            }
        }
    }
    if (vertices_seen != g.map.vertex_count())
        throw std::invalid_argument("canonical code requires a connected graph");
    return code;
}

} // namespace detail

/// Canonical serialization of the rooted equivalence class: minimum over
/// re-embeddings of the non-root vertices of a root-anchored traversal code.
/// With allow_root_flip the root vertex may be re-embedded too (the unrooted
/// vertex gauge); the root halfedge itself stays distinguished.
inline std::vector<std::int64_t> rooted_code(const RibbonGraphRho& g, Halfedge root,
                                             bool allow_root_flip = false) {
    const std::size_t V = g.map.vertex_count();
    const std::uint32_t root_vertex = g.map.vertex_of[root];
    std::vector<std::uint8_t> flipped(V, 0);
    std::vector<std::uint32_t> free_vertices;
    for (std::uint32_t v = 0; v < V; ++v)
        if (v != root_vertex || allow_root_flip) free_vertices.push_back(v);
    if (free_vertices.size() > 24)
        throw std::invalid_argument("canonical code flip search limited to 24 free vertices");
    std::vector<std::int64_t> best;
    for (std::uint64_t mask = 0; mask < (1ull << free_vertices.size()); ++mask) {
        for (std::size_t i = 0; i < free_vertices.size(); ++i)
            flipped[free_vertices[i]] = (mask >> i) & 1u;
        std::vector<std::int64_t> code = detail::bfs_code(g, root, flipped);
        if (best.empty() || code < best) best = std::move(code);
    }
    return best;
}

/// Canonical code of g. Rooted graphs use the stored root; unrooted graphs
/// minimize over every root choice and every re-embedding.
inline std::vector<std::int64_t> canonical_code(const RibbonGraphRho& g) {
    g.validate();
    if (g.map.halfedge_count() == 0) {
        if (g.map.vertex_count() > 1)
            throw std::invalid_argument("canonical code requires a connected graph");
        return {-2, static_cast<std::int64_t>(g.map.vertex_count())};
    }
    if (g.map.bare_vertices > 0)
        throw std::invalid_argument("canonical code requires a connected graph");
    if (g.root) return rooted_code(g, *g.root, false);
    std::vector<std::int64_t> best;
    for (Halfedge h = 0; h < g.map.halfedge_count(); ++h) {
        std::vector<std::int64_t> code = rooted_code(g, h, true);
        if (best.empty() || code < best) best = std::move(code);
    }
    return best;
}

struct OrbitStabilizer {
    Int orbit_size = 0;
    Int stabilizer_order = 0;
};

/// Induced root marks after rho-deletion, one per component: the root's own
/// component is marked by the root itself; every other component is entered
/// through the rho-edge path from the root (breadth-first over components,
/// lowest entering halfedge first) and marked at the entry halfedge.
struct InducedRoots {
    RhoComponents components;
    std::vector<Halfedge> mark_of_component; // a halfedge at the root vertex
    std::vector<std::uint32_t> root_vertex_of_component;
};

inline InducedRoots induced_component_roots(const RibbonGraphRho& g) {
    if (!g.root) throw std::invalid_argument("induced rooting requires a rooted graph");
    InducedRoots out;
    out.components = components_after_rho_deletion(g);
    const auto& comps = out.components;
    out.mark_of_component.assign(comps.count, kNoHalfedge);
    out.root_vertex_of_component.assign(comps.count, static_cast<std::uint32_t>(-1));
    std::vector<std::uint8_t> visited(comps.count, 0);
    std::uint32_t rc = comps.component_of_vertex[g.map.vertex_of[*g.root]];
    out.mark_of_component[rc] = *g.root;
    out.root_vertex_of_component[rc] = g.map.vertex_of[*g.root];
    visited[rc] = 1;
    std::size_t visited_count = 1;
    while (visited_count < comps.count) {
        Halfedge best_entry = kNoHalfedge;
        for (const EdgePair& e : g.map.rho_edges) {
            for (auto [from, to] : {std::pair{e.a, e.b}, std::pair{e.b, e.a}}) {
                std::uint32_t cf = comps.component_of_vertex[g.map.vertex_of[from]];
                std::uint32_t ct = comps.component_of_vertex[g.map.vertex_of[to]];
                if (visited[cf] && !visited[ct] && (best_entry == kNoHalfedge || to < best_entry))
                    best_entry = to;
            }
        }
        if (best_entry == kNoHalfedge)
            throw std::invalid_argument("induced rooting requires a connected graph");
        std::uint32_t c = comps.component_of_vertex[g.map.vertex_of[best_entry]];
        out.mark_of_component[c] = best_entry;
        out.root_vertex_of_component[c] = g.map.vertex_of[best_entry];
        visited[c] = 1;
        ++visited_count;
    }
    return out;
}

namespace detail {

/// The rho-deleted graph split into components, each rooted at the ribbon
/// halfedge representing its induced mark (the mark itself when it is a
/// ribbon halfedge, the next ribbon halfedge counterclockwise otherwise).
struct RhoDeletedSplit {
    std::vector<RibbonGraphRho> components;
    // Original ribbon edge index -> (component, edge index there). Unset for
    // components without edges.
    std::vector<std::pair<std::uint32_t, std::uint32_t>> edge_location;
};

inline RhoDeletedSplit split_after_rho_deletion(const RibbonGraphRho& g) {
    InducedRoots roots = induced_component_roots(g);
    const auto& comps = roots.components;
    RhoDeletedSplit out;
    out.components.resize(comps.count);
    out.edge_location.assign(g.map.edge_count(), {0, 0});

    std::vector<std::vector<std::vector<Halfedge>>> cyc(comps.count);
    std::vector<Halfedge> new_id(g.map.halfedge_count(), kNoHalfedge);
    std::vector<Halfedge> next_id(comps.count, 0);
    std::vector<std::uint32_t> bare(comps.count, 0);
    for (std::uint32_t v = 0; v < g.map.cycles.size(); ++v) {
        std::uint32_t c = comps.component_of_vertex[v];
        std::vector<Halfedge> ribbon;
        for (Halfedge h : g.map.cycles[v])
            if (!g.map.is_rho(h)) {
                new_id[h] = next_id[c]++;
                ribbon.push_back(h);
            }
        if (ribbon.empty())
            ++bare[c];
        else
            cyc[c].push_back(std::move(ribbon));
    }
    // Halfedge numbering must be dense per component; renumber in a second
    // pass ordered by vertex within the component.
    for (std::uint32_t c = 0; c < comps.count; ++c) {
        Halfedge next = 0;
        std::vector<std::vector<Halfedge>> relabeled;
        std::vector<std::pair<Halfedge, Halfedge>> pairs;
        std::vector<int> twists;
        std::vector<std::uint32_t> original_edge;
        for (auto& vc : cyc[c]) {
            std::vector<Halfedge> r2;
            for (Halfedge h : vc) {
                new_id[h] = next++;
                r2.push_back(new_id[h]);
            }
            relabeled.push_back(std::move(r2));
        }
        for (auto& vc : cyc[c])
            for (Halfedge h : vc)
                if (new_id[h] < new_id[g.map.partner[h]]) {
                    pairs.push_back({new_id[h], new_id[g.map.partner[h]]});
                    twists.push_back(g.twist[g.map.edge_of[h]]);
                    original_edge.push_back(g.map.edge_of[h]);
                }
        std::optional<Halfedge> root;
        Halfedge mark = roots.mark_of_component[c];
        if (mark != kNoHalfedge && !cyc[c].empty()) {
            Halfedge m = mark;
            if (g.map.is_rho(m)) {
                // Walk to the next ribbon halfedge at the root vertex.
                Halfedge x = g.map.pi[m];
                while (g.map.is_rho(x) && x != m) x = g.map.pi[x];
                m = g.map.is_rho(x) ? kNoHalfedge : x;
            }
            if (m != kNoHalfedge) root = new_id[m];
        }
        out.components[c] = make_graph(relabeled, pairs, twists, {}, root);
        out.components[c].map.bare_vertices += bare[c];
        for (std::size_t e = 0; e < pairs.size(); ++e) {
            Halfedge lo = std::min(pairs[e].first, pairs[e].second);
            out.edge_location[original_edge[e]] = {c, out.components[c].map.edge_of[lo]};
        }
    }
    return out;
}

} // namespace detail

/// Brute-force orbit and stabilizer of the twist group (toggling twist bits
/// on ribbon edge subsets) acting on the rho-deleted graph, each component
/// rooted at its induced mark. Rho-edges are untouched by the group, so its
/// action and the stabilizer live entirely on the rho-deleted components.
inline OrbitStabilizer twist_orbit_and_stabilizer(const RibbonGraphRho& g) {
    if (!g.root)
        throw std::invalid_argument("twist orbit/stabilizer requires a rooted graph");
    const std::size_t E = g.map.edge_count();
    if (E > 20) throw std::invalid_argument("twist orbit enumeration limited to 20 edges");
    detail::RhoDeletedSplit split = detail::split_after_rho_deletion(g);
    for (auto& comp : split.components)
        if (comp.map.edge_count() > 0 && !comp.root)
            throw std::logic_error("every component with edges must carry an induced root");

    auto code_tuple = [&]() {
        std::vector<std::int64_t> code;
        for (auto& comp : split.components) {
            if (comp.map.edge_count() == 0) continue;
            std::vector<std::int64_t> c = canonical_code(comp);
            code.push_back(-7); // component separator
            code.insert(code.end(), c.begin(), c.end());
        }
        return code;
    };

    std::set<std::vector<std::int64_t>> orbit_codes;
    std::vector<std::int64_t> base = code_tuple();
    Int stab = 0;
    for (std::uint64_t mask = 0; mask < (1ull << E); ++mask) {
        for (std::size_t e = 0; e < E; ++e) {
            auto [c, ce] = split.edge_location[e];
            split.components[c].twist[ce] = g.twist[e] ^ ((mask >> e) & 1u);
        }
        std::vector<std::int64_t> code = code_tuple();
        if (code == base) ++stab;
        orbit_codes.insert(std::move(code));
    }
    OrbitStabilizer out;
    out.orbit_size = Int(orbit_codes.size());
    out.stabilizer_order = stab;
    if (out.orbit_size * out.stabilizer_order != int_pow(Int(2), static_cast<unsigned>(E)))
        throw std::logic_error("orbit-stabilizer product must equal 2^E");
    return out;
}

/// 2^(V1+V2) over the rho-deleted components: the stabilizer order the
/// degree-counting lemma predicts for the rooted graph. V1 and V2 count the
/// non-root vertices of ribbon degree one and two.
inline Int stabilizer_lemma_prediction(const RibbonGraphRho& g) {
    InducedRoots roots = induced_component_roots(g);
    std::vector<std::uint8_t> is_component_root(g.map.vertex_count(), 0);
    for (std::uint32_t v : roots.root_vertex_of_component)
        if (v != static_cast<std::uint32_t>(-1)) is_component_root[v] = 1;
    unsigned exponent = 0;
    for (std::uint32_t v = 0; v < g.map.cycles.size(); ++v) {
        if (is_component_root[v]) continue;
        std::size_t ribbon_degree = 0;
        for (Halfedge h : g.map.cycles[v])
            if (!g.map.is_rho(h)) ++ribbon_degree;
        if (ribbon_degree == 1 || ribbon_degree == 2) ++exponent;
    }
    return int_pow(Int(2), exponent);
}

// ---------------------------------------------------------------------------
// Dual graph.

struct DualResult {
    RibbonGraphRho graph;
    // Dual vertices correspond to faces of the input; per dual vertex, the
    // index of the rho-deleted component of the input it came from (free
    // discs keep their vertex's component).
    std::vector<std::uint32_t> component_of_dual_vertex;
};

/// Geometric dual: faces become vertices, each edge is crossed by its dual
/// edge, corners correspond, rho-halfedges reattach to the dual corner that
/// matches their original one. A disconnected ribbon part dualizes
/// per component; rho-edges then connect the per-component duals.
inline DualResult dual(const RibbonGraphRho& g) {
    g.validate();
    FaceSet fs = faces(g);
    RhoComponents comps = components_after_rho_deletion(g);
    const std::size_t H = g.map.halfedge_count();

    // Dual halfedge per strand, numbered circuit by circuit.
    // strand_id maps both outward states of a strand to its dual halfedge.
    std::vector<std::int32_t> strand_id(2 * H, -1);
    std::vector<StrandState> outward_flag; // canonical outward state per strand
    std::vector<std::uint32_t> circuit_of_strand;
    std::vector<std::vector<Halfedge>> dual_cycles;
    std::vector<std::uint32_t> dual_component;
    for (const FaceCircuit& fc : fs.circuits) {
        std::vector<Halfedge> cyc;
        for (const StrandState& s : fc.strands) {
            Halfedge id = static_cast<Halfedge>(outward_flag.size());
            strand_id[detail::state_index(s)] = static_cast<std::int32_t>(id);
            strand_id[detail::state_index(reverse_strand(g, s))] = static_cast<std::int32_t>(id);
            outward_flag.push_back(s);
            circuit_of_strand.push_back(static_cast<std::uint32_t>(dual_cycles.size()));
            cyc.push_back(id);
        }
        dual_cycles.push_back(std::move(cyc));
        dual_component.push_back(comps.component_of_vertex[g.map.vertex_of[fc.strands[0].h]]);
    }
    const std::size_t S = outward_flag.size(); // = 2 * ribbon edge count

    // Rho-halfedges keep their pairing; they get ids after the strands.
    std::vector<Halfedge> rho_new_id(H, kNoHalfedge);
    std::vector<Halfedge> rho_list;
    for (Halfedge h = 0; h < H; ++h)
        if (g.map.is_rho(h)) {
            rho_new_id[h] = static_cast<Halfedge>(S + rho_list.size());
            rho_list.push_back(h);
        }

    // Insert each rho-halfedge into the dual corner matching its original
    // corner. The corner between consecutive dual halfedges k_i -> k_{i+1}
    // is the flag pair {inward flag of k_i, outward flag of k_{i+1}}; its
    // original counterpart is the corner (p, n) between the neighboring
    // ribbon halfedges of the rho-halfedge. The corner is traversed from the
    // p-end when the inward flag is (p, 0).
    // Free discs (no ribbon halfedge at the vertex) stay as they are.
    std::map<std::pair<Halfedge, Halfedge>, std::pair<std::size_t, std::size_t>> corner_slot;
    // key: the s1 flag pair encoded ((p,0),(n,1)) -> (circuit, position after which to insert)
    std::map<std::pair<Halfedge, Halfedge>, bool> corner_from_p;
    for (std::size_t ci = 0; ci < fs.circuits.size(); ++ci) {
        const auto& strands = fs.circuits[ci].strands;
        for (std::size_t i = 0; i < strands.size(); ++i) {
            const StrandState& cur = strands[i];
            const StrandState& nxt = strands[(i + 1) % strands.size()];
            StrandState inward{g.map.partner[cur.h], cur.side ^ 1 ^ g.twist_of(cur.h)};
            // s1 pairs (h,0) with (pi_skip(h),1): normalize to the side-0 member.
            StrandState flag0 = inward.side == 0 ? inward : StrandState{detail::pi_skip_inv(g.map, inward.h), 0};
            StrandState check = nxt.side == 0 ? nxt : StrandState{detail::pi_skip_inv(g.map, nxt.h), 0};
            if (!(flag0 == check))
                throw std::logic_error("dual corner pairing out of sync");
            corner_slot[{flag0.h, detail::pi_skip(g.map, flag0.h)}] = {ci, i};
            corner_from_p[{flag0.h, detail::pi_skip(g.map, flag0.h)}] = inward.side == 0;
        }
    }
    // Gather rho runs per corner of the original graph.
    std::map<std::pair<Halfedge, Halfedge>, std::vector<Halfedge>> corner_rho;
    for (Halfedge h : rho_list) {
        Halfedge p = g.map.pi_inv[h];
        while (g.map.is_rho(p) && p != h) p = g.map.pi_inv[p];
        if (g.map.is_rho(p))
            continue; // vertex has no ribbon halfedge; handled as a free disc
        Halfedge n = detail::pi_skip(g.map, p);
        corner_rho[{p, n}].push_back(h);
    }
    // Order each run by original cyclic position after p.
    for (auto& [corner, run] : corner_rho) {
        std::vector<Halfedge> ordered;
        for (Halfedge x = g.map.pi[corner.first]; g.map.is_rho(x); x = g.map.pi[x])
            ordered.push_back(x);
        run = std::move(ordered);
    }

    // Assemble dual vertex cycles with rho insertions, remembering where each
    // rho-halfedge lands and whether its run was reversed.
    std::vector<std::uint32_t> rho_dual_vertex(H, 0);
    std::vector<std::uint8_t> rho_run_reversed(H, 0);
    std::vector<std::vector<Halfedge>> final_cycles(dual_cycles.size());
    for (std::size_t ci = 0; ci < dual_cycles.size(); ++ci) {
        const auto& strands = fs.circuits[ci].strands;
        for (std::size_t i = 0; i < strands.size(); ++i) {
            final_cycles[ci].push_back(dual_cycles[ci][i]);
            const StrandState& cur = strands[i];
            StrandState inward{g.map.partner[cur.h], cur.side ^ 1 ^ g.twist_of(cur.h)};
            StrandState flag0 = inward.side == 0 ? inward : StrandState{detail::pi_skip_inv(g.map, inward.h), 0};
            std::pair<Halfedge, Halfedge> corner{flag0.h, detail::pi_skip(g.map, flag0.h)};
            auto it = corner_rho.find(corner);
            if (it == corner_rho.end()) continue;
            std::vector<Halfedge> run = it->second;
            if (!corner_from_p.at(corner)) std::reverse(run.begin(), run.end());
            for (Halfedge r : run) {
                final_cycles[ci].push_back(rho_new_id[r]);
                rho_dual_vertex[r] = static_cast<std::uint32_t>(ci);
                rho_run_reversed[r] = corner_from_p.at(corner) ? 0 : 1;
            }
        }
    }
    // Free discs: copy pure-rho vertices verbatim; bare vertices stay bare.
    std::uint32_t dual_bare = g.map.bare_vertices;
    for (std::uint32_t v = 0; v < g.map.cycles.size(); ++v) {
        bool has_ribbon = false;
        for (Halfedge h : g.map.cycles[v])
            if (!g.map.is_rho(h)) has_ribbon = true;
        if (has_ribbon) continue;
        std::vector<Halfedge> cyc;
        for (Halfedge h : g.map.cycles[v]) {
            cyc.push_back(rho_new_id[h]);
            rho_dual_vertex[h] = static_cast<std::uint32_t>(final_cycles.size());
        }
        final_cycles.push_back(std::move(cyc));
        dual_component.push_back(comps.component_of_vertex[v]);
    }

    // Dual edges: the two strands of an original edge pair up; the dual edge
    // is twisted iff both strands were traversed outward from the same
    // original halfedge.
    std::vector<std::pair<Halfedge, Halfedge>> dual_pairs;
    std::vector<int> dual_twists;
    for (const EdgePair& e : g.map.edges) {
        std::int32_t k1 = strand_id[detail::state_index({e.a, 0})];
        std::int32_t k2 = strand_id[detail::state_index({e.a, 1})];
        assert(k1 >= 0 && k2 >= 0 && k1 != k2);
        dual_pairs.push_back({static_cast<Halfedge>(k1), static_cast<Halfedge>(k2)});
        dual_twists.push_back(outward_flag[k1].h == outward_flag[k2].h ? 1 : 0);
    }
    std::vector<std::pair<Halfedge, Halfedge>> rho_pairs;
    for (const EdgePair& e : g.map.rho_edges)
        rho_pairs.push_back({rho_new_id[e.a], rho_new_id[e.b]});

    // The root follows its flag. A routed class pins the root vertex's
    // embedding, and each dual vertex was materialized in the orientation its
    // face circuit happened to be traced in; when that orientation disagrees
    // with the root flag (the circuit runs the root strand backwards, or the
    // root's rho run was reversed), the dual root vertex is flipped back.
    std::optional<Halfedge> dual_root;
    std::optional<std::uint32_t> flip_root_vertex;
    if (g.root) {
        if (g.map.is_rho(*g.root)) {
            dual_root = rho_new_id[*g.root];
            if (rho_run_reversed[*g.root]) flip_root_vertex = rho_dual_vertex[*g.root];
        } else {
            // The circuits list strands against the dual vertex rotation, so
            // the materialized side 0 of a dual halfedge is the slot OPPOSITE
            // the traced one; the root flag keeps side 0 exactly when the
            // circuit ran its strand from the far end.
            std::int32_t k = strand_id[detail::state_index({*g.root, 0})];
            dual_root = static_cast<Halfedge>(k);
            if (outward_flag[k] == StrandState{*g.root, 0})
                flip_root_vertex = circuit_of_strand[k];
        }
    }

    DualResult out;
    if (final_cycles.empty() && dual_bare == 0)
        throw std::invalid_argument("cannot dualize an empty graph");
    out.graph = make_graph(final_cycles, dual_pairs, dual_twists, rho_pairs, dual_root);
    out.graph.map.bare_vertices += dual_bare;
    if (flip_root_vertex) out.graph = flip_vertex(out.graph, *flip_root_vertex);
    // make_graph sorts nothing across vertices: cycles keep list order, so
    // the component labels align with the dual vertex numbering.
    out.component_of_dual_vertex = dual_component;
    for (std::uint32_t i = 0; i < dual_bare; ++i)
        out.component_of_dual_vertex.push_back(
            comps.component_of_vertex[g.map.cycles.size() + i]);
    return out;
}

// ---------------------------------------------------------------------------
// JSON round trip.

inline nlohmann::json graph_to_json(const RibbonGraphRho& g) {
    nlohmann::json j;
    nlohmann::json pi = nlohmann::json::array();
    for (const auto& c : g.map.cycles) pi.push_back(c);
    for (std::uint32_t i = 0; i < g.map.bare_vertices; ++i)
        pi.push_back(nlohmann::json::array());
    j["pi"] = pi;
    nlohmann::json alpha = nlohmann::json::array();
    for (const EdgePair& e : g.map.edges) alpha.push_back({e.a, e.b});
    j["alpha"] = alpha;
    nlohmann::json alpha_rho = nlohmann::json::array();
    for (const EdgePair& e : g.map.rho_edges) alpha_rho.push_back({e.a, e.b});
    j["alpha_rho"] = alpha_rho;
    nlohmann::json twist = nlohmann::json::object();
    for (std::size_t i = 0; i < g.twist.size(); ++i)
        twist[std::to_string(i)] = static_cast<int>(g.twist[i]);
    j["twist"] = twist;
    if (g.root)
        j["root"] = *g.root;
    else
        j["root"] = nullptr;
    return j;
}

inline RibbonGraphRho graph_from_json(const nlohmann::json& j) {
    if (!j.is_object()) throw ConfigError("<graph>", "graph must be a JSON object");
    for (const char* key : {"pi", "alpha", "alpha_rho", "twist", "root"})
        if (!j.contains(key)) throw ConfigError(key, "required graph field missing");
    std::vector<std::vector<Halfedge>> cycles;
    for (const auto& c : j["pi"]) {
        std::vector<Halfedge> cyc;
        for (const auto& h : c) {
            if (!h.is_number_unsigned()) throw ConfigError("pi", "halfedges must be unsigned integers");
            cyc.push_back(h.get<Halfedge>());
        }
        cycles.push_back(std::move(cyc));
    }
    auto read_pairs = [&](const char* key) {
        std::vector<std::pair<Halfedge, Halfedge>> pairs;
        for (const auto& p : j[key]) {
            if (!p.is_array() || p.size() != 2) throw ConfigError(key, "entries must be halfedge pairs");
            pairs.push_back({p[0].get<Halfedge>(), p[1].get<Halfedge>()});
        }
        return pairs;
    };
    auto ribbon_pairs = read_pairs("alpha");
    auto rho_pairs = read_pairs("alpha_rho");
    std::vector<int> twists(ribbon_pairs.size(), 0);
    for (const auto& [key, val] : j["twist"].items()) {
        std::size_t idx = 0;
        try {
            idx = std::stoul(key);
        } catch (...) {
            throw ConfigError("twist", "keys must be edge indices");
        }
        if (idx >= twists.size()) throw ConfigError("twist", "edge index out of range: " + key);
        if (!val.is_number_integer() || (val.get<int>() != 0 && val.get<int>() != 1))
            throw ConfigError("twist", "twist bits must be 0 or 1");
        twists[idx] = val.get<int>();
    }
    std::optional<Halfedge> root;
    if (!j["root"].is_null()) {
        if (!j["root"].is_number_unsigned()) throw ConfigError("root", "root must be a halfedge id or null");
        root = j["root"].get<Halfedge>();
    }
    try {
        // The twist array in make_graph is aligned with the listed pair order;
        // the JSON convention indexes edges by their position in "alpha",
        // which is sorted by lower halfedge, so reorder accordingly.
        std::vector<std::pair<Halfedge, Halfedge>> sorted_pairs = ribbon_pairs;
        std::sort(sorted_pairs.begin(), sorted_pairs.end(),
                  [](auto& x, auto& y) { return std::min(x.first, x.second) < std::min(y.first, y.second); });
        if (sorted_pairs != ribbon_pairs)
            throw ConfigError("alpha", "edges must be sorted by lower halfedge");
        return make_graph(cycles, ribbon_pairs, twists, rho_pairs, root);
    } catch (const std::invalid_argument& e) {
        throw ConfigError("<graph>", e.what());
    }
}

} // namespace tde
