#pragma once

// Topological normal form of a connected ribbon graph: the neighborhood
// surface is classified as a sphere, a connected sum of g tori (orientable),
// or a connected sum with one or two projective planes (non-orientable),
// reported as (genus, cross_caps) with Euler characteristic 2-2g-r.
//
// The reduction uses edge contraction to a one-vertex rosette, four local
// re-embeddings (Ia, Ib, IIa, IIb) that isolate twists and crossings, and
// face-merging edge deletions. Each step re-checks the invariants it must
// preserve and throws std::logic_error on violation, so a bug cannot
// silently misclassify.

#include "tde/ribbon.hpp"

#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace tde {

struct CanonicalSurface {
    unsigned genus = 0;
    unsigned cross_caps = 0; // 0, 1 or 2

    int euler_characteristic() const {
        return 2 - 2 * static_cast<int>(genus) - static_cast<int>(cross_caps);
    }
    bool orientable() const { return cross_caps == 0; }
    bool operator==(const CanonicalSurface&) const = default;
};

enum class SlideMove { Ia, Ib, IIa, IIb };

inline const char* slide_move_name(SlideMove m) {
    switch (m) {
        case SlideMove::Ia: return "Ia";
        case SlideMove::Ib: return "Ib";
        case SlideMove::IIa: return "IIa";
        case SlideMove::IIb: return "IIb";
    }
    return "?";
}

/// True iff every cycle of the graph has even total twist (the neighborhood
/// surface carries a consistent orientation). Rho-edges are ignored.
inline bool is_orientable(const RibbonGraphRho& g) {
    const std::size_t V = g.map.vertex_count();
    std::vector<int> side(V, -1);
    for (std::uint32_t start = 0; start < g.map.cycles.size(); ++start) {
        if (side[start] != -1) continue;
        side[start] = 0;
        std::queue<std::uint32_t> q;
        q.push(start);
        while (!q.empty()) {
            std::uint32_t v = q.front();
            q.pop();
            for (Halfedge h : g.map.cycles[v]) {
                if (g.map.is_rho(h)) continue;
                std::uint32_t w = g.map.vertex_of[g.map.partner[h]];
                int want = side[v] ^ g.twist_of(h);
                if (side[w] == -1) {
                    side[w] = want;
                    q.push(w);
                } else if (side[w] != want) {
                    return false;
                }
            }
        }
    }
    return true;
}

namespace detail {

inline void require(bool cond, const std::string& what) {
    if (!cond) throw std::logic_error(what);
}

inline void precondition(bool cond, const std::string& what) {
    if (!cond) throw std::invalid_argument(what);
}

/// Mutable rosette/graph scratch representation: explicit vertex words keep
/// block positions stable across moves (graph rebuilds would re-rotate them).
struct Word {
    std::vector<std::vector<Halfedge>> cycles;
    std::vector<Halfedge> partner;      // by halfedge id; unused ids stale
    std::vector<std::uint8_t> twisted;  // by halfedge id
    std::vector<std::uint8_t> alive;    // by halfedge id

    static Word from_graph(const RibbonGraphRho& g) {
        Word w;
        w.cycles = g.map.cycles;
        w.partner = g.map.partner;
        const std::size_t H = g.map.halfedge_count();
        w.twisted.assign(H, 0);
        w.alive.assign(H, 1);
        for (Halfedge h = 0; h < H; ++h) {
            precondition(!g.map.is_rho(h), "surface classification is defined for ribbon edges only");
            w.twisted[h] = static_cast<std::uint8_t>(g.twist_of(h));
        }
        return w;
    }

    std::size_t edge_count() const {
        std::size_t n = 0;
        for (const auto& c : cycles) n += c.size();
        return n / 2;
    }

    /// Materializes a graph with densely relabeled halfedges. When given,
    /// old_of_new receives the original id of each new halfedge.
    RibbonGraphRho to_graph(std::vector<Halfedge>* old_of_new = nullptr) const {
        std::vector<Halfedge> new_id(partner.size(), kNoHalfedge);
        Halfedge next = 0;
        if (old_of_new) old_of_new->clear();
        for (const auto& c : cycles)
            for (Halfedge h : c) {
                new_id[h] = next++;
                if (old_of_new) old_of_new->push_back(h);
            }
        std::vector<std::vector<Halfedge>> cyc2;
        for (const auto& c : cycles) {
            std::vector<Halfedge> c2;
            for (Halfedge h : c) c2.push_back(new_id[h]);
            cyc2.push_back(std::move(c2));
        }
        std::vector<std::pair<Halfedge, Halfedge>> pairs;
        std::vector<int> twists;
        for (const auto& c : cycles)
            for (Halfedge h : c)
                if (new_id[h] < new_id[partner[h]]) {
                    pairs.push_back({new_id[h], new_id[partner[h]]});
                    twists.push_back(twisted[h]);
                }
        return make_graph(cyc2, pairs, twists);
    }
};

} // namespace detail

// ---------------------------------------------------------------------------
// Public single-step operations (used by the pipeline and directly testable).

/// Contracts a non-loop ribbon edge: its endpoints merge into one vertex whose
/// counterclockwise order lists the lower-halfedge vertex's remaining
/// halfedges first. A twisted edge is untwisted by re-embedding the other
/// endpoint before contracting. Self-loops cannot be contracted.
inline RibbonGraphRho contract_edge(const RibbonGraphRho& g, std::size_t edge_index) {
    detail::precondition(edge_index < g.map.edge_count(), "contract_edge: edge index out of range");
    EdgePair e = g.map.edges[edge_index];
    std::uint32_t v = g.map.vertex_of[e.a];
    std::uint32_t w = g.map.vertex_of[e.b];
    detail::precondition(v != w, "contract_edge: cannot contract a self-loop");
    RibbonGraphRho h = g;
    if (h.twist[edge_index]) h = flip_vertex(h, w);
    detail::require(h.twist[h.map.edge_of[e.a]] == 0, "contracted edge must be untwisted after the flip");

    detail::Word word = detail::Word::from_graph(h);
    auto arc_after = [&](std::uint32_t vert, Halfedge skip) {
        std::vector<Halfedge> out;
        const auto& c = word.cycles[vert];
        std::size_t start = 0;
        while (c[start] != skip) ++start;
        for (std::size_t i = 1; i < c.size(); ++i) out.push_back(c[(start + i) % c.size()]);
        return out;
    };
    std::vector<Halfedge> merged = arc_after(v, e.a);
    std::vector<Halfedge> tail = arc_after(w, e.b);
    merged.insert(merged.end(), tail.begin(), tail.end());
    std::vector<std::vector<Halfedge>> cycles;
    for (std::uint32_t u = 0; u < word.cycles.size(); ++u)
        if (u != v && u != w) cycles.push_back(word.cycles[u]);
    if (!merged.empty()) cycles.push_back(merged);
    detail::Word out = word;
    out.cycles = std::move(cycles);
    RibbonGraphRho result = out.to_graph();
    if (merged.empty()) {
        // Two one-valent endpoints: contraction leaves a bare disc.
        result.map.bare_vertices += 1 + g.map.bare_vertices;
    } else {
        result.map.bare_vertices += g.map.bare_vertices;
    }
    return result;
}

namespace detail {

/// Positions of h in cycle c (a halfedge occurs once; loops contribute both
/// halfedge ids separately).
inline std::size_t position_of(const std::vector<Halfedge>& c, Halfedge h) {
    for (std::size_t i = 0; i < c.size(); ++i)
        if (c[i] == h) return i;
    throw std::invalid_argument("halfedge not on this vertex");
}

/// Applies one slide to a vertex word in place. `site` is a halfedge of the
/// moved edge; `block_len` sizes the preceding block for Ib/IIb and the
/// inverse of Ia.
inline void slide_in_place(std::vector<Halfedge>& c, std::vector<std::uint8_t>& twisted,
                           const std::vector<Halfedge>& partner, SlideMove move, Halfedge site,
                           std::size_t block_len, bool inverse) {
    const std::size_t n = c.size();
    auto rotate_to_front = [&](std::size_t pos) { std::rotate(c.begin(), c.begin() + pos, c.end()); };
    auto edge_is_loop_here = [&](Halfedge h) {
        return std::find(c.begin(), c.end(), partner[h]) != c.end();
    };
    switch (move) {
        case SlideMove::Ia: {
            precondition(twisted[site], "Ia: edge must be twisted");
            precondition(edge_is_loop_here(site), "Ia: edge must be a self-loop at one vertex");
            if (!inverse) {
                rotate_to_front(position_of(c, site));
                std::size_t j = position_of(c, partner[site]);
                // (e1 h1..hk e2 rest) -> (hk..h1 e1 e2 rest)
                std::vector<Halfedge> block(c.begin() + 1, c.begin() + j);
                for (Halfedge h : block) twisted[h] ^= 1, twisted[partner[h]] ^= 1;
                std::reverse(block.begin(), block.end());
                std::vector<Halfedge> out = block;
                out.push_back(site);
                out.push_back(partner[site]);
                out.insert(out.end(), c.begin() + j + 1, c.end());
                c = std::move(out);
            } else {
                // (p1..pk e1 e2 rest) -> (e1 pk..p1 e2 rest), toggling the block
                std::size_t i = position_of(c, site);
                precondition(c[(i + 1) % n] == partner[site], "inverse Ia: loop must be simple");
                precondition(block_len + 2 <= n, "inverse Ia: block too long");
                rotate_to_front((i + n - block_len) % n);
                std::vector<Halfedge> block(c.begin(), c.begin() + block_len);
                for (Halfedge h : block) twisted[h] ^= 1, twisted[partner[h]] ^= 1;
                std::reverse(block.begin(), block.end());
                std::vector<Halfedge> out;
                out.push_back(site);
                out.insert(out.end(), block.begin(), block.end());
                out.push_back(partner[site]);
                out.insert(out.end(), c.begin() + block_len + 2, c.end());
                c = std::move(out);
            }
            break;
        }
        case SlideMove::Ib: {
            precondition(!inverse, "Ib inverse unused");
            precondition(twisted[site], "Ib: edge must be twisted");
            std::size_t i = position_of(c, site);
            precondition(c[(i + 1) % n] == partner[site], "Ib: loop must be simple");
            precondition(block_len + 2 <= n, "Ib: block too long");
            // (h1..hk e1 e2 rest) -> (e1 e2 h1..hk rest)
            rotate_to_front((i + n - block_len) % n);
            std::vector<Halfedge> out;
            out.push_back(site);
            out.push_back(partner[site]);
            out.insert(out.end(), c.begin(), c.begin() + block_len);
            out.insert(out.end(), c.begin() + block_len + 2, c.end());
            c = std::move(out);
            break;
        }
        case SlideMove::IIa: {
            precondition(!inverse, "IIa inverse unused");
            // site = e1 of a nice crossing (e1 H f1 e2 K f2): e,f untwisted
            // self-loops, e2 immediately after f1.
            precondition(!twisted[site], "IIa: crossing edges must be untwisted");
            rotate_to_front(position_of(c, site));
            std::size_t e2 = position_of(c, partner[site]);
            precondition(e2 >= 2, "IIa: no block room before the partner");
            Halfedge f1 = c[e2 - 1];
            precondition(!twisted[f1], "IIa: crossing edges must be untwisted");
            std::size_t f2 = position_of(c, partner[f1]);
            precondition(f2 > e2, "IIa: second loop must close after the first");
            std::vector<Halfedge> H(c.begin() + 1, c.begin() + e2 - 1);
            std::vector<Halfedge> K(c.begin() + e2 + 1, c.begin() + f2);
            std::vector<Halfedge> out = K;
            out.insert(out.end(), H.begin(), H.end());
            out.push_back(site);
            out.push_back(f1);
            out.push_back(partner[site]);
            out.push_back(partner[f1]);
            out.insert(out.end(), c.begin() + f2 + 1, c.end());
            c = std::move(out);
            break;
        }
        case SlideMove::IIb: {
            precondition(!inverse, "IIb inverse unused");
            // site = e1 of a clean crossing (e1 f1 e2 f2 consecutive).
            precondition(!twisted[site], "IIb: crossing edges must be untwisted");
            std::size_t i = position_of(c, site);
            Halfedge f1 = c[(i + 1) % n];
            precondition(c[(i + 2) % n] == partner[site], "IIb: crossing must be clean");
            precondition(c[(i + 3) % n] == partner[f1], "IIb: crossing must be clean");
            precondition(!twisted[f1], "IIb: crossing edges must be untwisted");
            precondition(block_len + 4 <= n, "IIb: block too long");
            // (h1..hk e1 f1 e2 f2 rest) -> (e1 f1 e2 f2 h1..hk rest)
            rotate_to_front((i + n - block_len) % n);
            std::vector<Halfedge> out;
            for (std::size_t k = 0; k < 4; ++k) out.push_back(c[block_len + k]);
            out.insert(out.end(), c.begin(), c.begin() + block_len);
            out.insert(out.end(), c.begin() + block_len + 4, c.end());
            c = std::move(out);
            break;
        }
    }
}

} // namespace detail

/// Applies one slide move to the graph: `site` is a halfedge of the moved
/// edge and must form a self-loop at one vertex; `block_len` gives the length
/// of the preceding block for Ib and IIb. Throws std::invalid_argument when
/// the required local pattern is absent.
inline RibbonGraphRho slide(const RibbonGraphRho& g, SlideMove move, Halfedge site,
                            std::size_t block_len = 0) {
    detail::precondition(site < g.map.halfedge_count(), "slide: site out of range");
    detail::precondition(!g.map.is_rho(site), "slide: moves act on ribbon edges");
    std::uint32_t v = g.map.vertex_of[site];
    detail::precondition(g.map.vertex_of[g.map.partner[site]] == v,
                         "slide: the moved edge must be a self-loop at one vertex");
    detail::Word w = detail::Word::from_graph(g);
    detail::slide_in_place(w.cycles[v], w.twisted, w.partner, move, site, block_len, false);
    return w.to_graph();
}

/// Lowest nice crossing at vertex v: two untwisted self-loops e, f whose
/// occurrences interleave as (e1 .. f1 e2 .. f2) with e2 right after f1.
/// Returns the e1 halfedge, or nothing.
inline std::optional<Halfedge> find_nice_crossing(const RibbonGraphRho& g, std::uint32_t v) {
    const auto& c = g.map.cycles[v];
    const std::size_t n = c.size();
    std::optional<std::array<Halfedge, 4>> best;
    std::optional<Halfedge> best_site;
    for (std::size_t i = 0; i < n; ++i) {
        Halfedge f1 = c[i];
        Halfedge e2 = c[(i + 1) % n];
        if (g.map.is_rho(f1) || g.map.is_rho(e2)) continue;
        if (g.map.edge_of[f1] == g.map.edge_of[e2]) continue;
        if (g.twist_of(f1) || g.twist_of(e2)) continue;
        Halfedge e1 = g.map.partner[e2];
        Halfedge f2 = g.map.partner[f1];
        if (g.map.vertex_of[e1] != v || g.map.vertex_of[f2] != v) continue;
        // Relative to e1, require order (e1 .. f1 e2 .. f2).
        std::size_t pe1 = detail::position_of(c, e1);
        auto rel = [&](std::size_t p) { return (p + n - pe1) % n; };
        if (!(rel(i) < rel((i + 1) % n) && rel((i + 1) % n) < rel(detail::position_of(c, f2))))
            continue;
        std::array<Halfedge, 4> key{e1, f1, e2, f2};
        std::sort(key.begin(), key.end());
        if (!best || key < *best) {
            best = key;
            best_site = e1;
        }
    }
    return best_site;
}

// ---------------------------------------------------------------------------
// The full classification pipeline.

namespace detail {

struct PipelineState {
    RibbonGraphRho current;
    int faces0 = 0;
    int euler0 = 0;
    bool orientable0 = false;
    int sign0 = 0;
    std::vector<std::string>* trace = nullptr;

    void snapshot() {
        faces0 = static_cast<int>(faces(current).count());
        euler0 = static_cast<int>(current.map.vertex_count()) -
                 static_cast<int>(current.map.edge_count()) + faces0;
        orientable0 = is_orientable(current);
        sign0 = sign_by_definition(current);
    }

    void log(const std::string& move, const std::string& det) {
        if (!trace) return;
        nlohmann::json j;
        j["move"] = move;
        j["detail"] = det;
        j["V"] = current.map.vertex_count();
        j["E"] = current.map.edge_count();
        j["F"] = faces(current).count();
        trace->push_back(j.dump());
    }

    /// After a move that must preserve the surface data exactly.
    void check_preserved(const std::string& move) {
        FaceSet fs = faces(current);
        int F = static_cast<int>(fs.count());
        int chi = static_cast<int>(current.map.vertex_count()) -
                  static_cast<int>(current.map.edge_count()) + F;
        require(F == faces0, move + " must preserve the face count");
        require(chi == euler0, move + " must preserve the Euler characteristic");
        require(is_orientable(current) == orientable0, move + " must preserve orientability");
        require(sign_by_definition(current) == sign0, move + " must preserve the sign");
        log(move, "preserving step");
    }

    /// After deleting one face-merging edge: chi and orientability persist.
    void check_deletion() {
        FaceSet fs = faces(current);
        int F = static_cast<int>(fs.count());
        int chi = static_cast<int>(current.map.vertex_count()) -
                  static_cast<int>(current.map.edge_count()) + F;
        require(F == faces0 - 1, "deletion must merge exactly two faces");
        require(chi == euler0, "deletion must preserve the Euler characteristic");
        require(is_orientable(current) == orientable0, "deletion must preserve orientability");
        log("delete", "face-merging edge removed");
    }
};

} // namespace detail

/// Classifies the neighborhood surface of a connected ribbon graph without
/// rho-edges. With `trace`, appends one JSON line per elementary step.
inline CanonicalSurface canonical_form(const RibbonGraphRho& g,
                                       std::vector<std::string>* trace = nullptr) {
    g.validate();
    detail::precondition(g.map.rho_edge_count() == 0,
                         "surface classification is defined for ribbon edges only");
    detail::precondition(is_connected(g), "surface classification needs a connected graph");

    const int euler_in = static_cast<int>(g.map.vertex_count()) -
                         static_cast<int>(g.map.edge_count()) +
                         static_cast<int>(faces(g).count());
    const bool orientable_in = is_orientable(g);

    detail::PipelineState st;
    st.current = g;
    st.current.root.reset();
    st.trace = trace;

    // Phase 1: contract a spanning tree, lowest edge first.
    while (st.current.map.vertex_count() > 1) {
        std::size_t pick = st.current.map.edge_count();
        for (std::size_t e = 0; e < st.current.map.edge_count(); ++e) {
            EdgePair ep = st.current.map.edges[e];
            if (st.current.map.vertex_of[ep.a] != st.current.map.vertex_of[ep.b]) {
                pick = e;
                break;
            }
        }
        detail::require(pick < st.current.map.edge_count(),
                        "a connected multi-vertex graph must have a joining edge");
        st.snapshot();
        st.current = contract_edge(st.current, pick);
        st.check_preserved("contract");
    }

    if (st.current.map.edge_count() == 0) return {0, 0};

    // From here on, one vertex. The word keeps its original halfedge ids
    // (only to_graph relabels, for the per-step verification); every block is
    // located cyclically, so array rotation never matters.
    detail::Word w = detail::Word::from_graph(st.current);
    auto cyc = [&]() -> std::vector<Halfedge>& { return w.cycles[0]; };
    auto pos_of = [&](Halfedge h) { return detail::position_of(cyc(), h); };
    auto succ = [&](Halfedge h) { return cyc()[(pos_of(h) + 1) % cyc().size()]; };
    // Halfedges strictly between a and b, walking forward from a.
    auto arc_between = [&](Halfedge a, Halfedge b) {
        std::vector<Halfedge> out;
        const auto& c = cyc();
        for (std::size_t i = (pos_of(a) + 1) % c.size(); c[i] != b; i = (i + 1) % c.size())
            out.push_back(c[i]);
        return out;
    };
    auto apply = [&](SlideMove m, Halfedge site, std::size_t block_len, bool inv,
                     const char* label) {
        st.snapshot();
        detail::slide_in_place(cyc(), w.twisted, w.partner, m, site, block_len, inv);
        st.current = w.to_graph();
        st.check_preserved(label);
    };

    unsigned genus = 0;
    unsigned caps = 0;

    // Removes the given halfedges (a simple twisted pair or a clean crossing)
    // from the word: the split summand carries away euler_gain.
    auto split_off = [&](const std::vector<Halfedge>& span, int euler_gain, const char* label) {
        st.snapshot();
        auto& c = cyc();
        c.erase(std::remove_if(c.begin(), c.end(),
                               [&](Halfedge h) {
                                   return std::find(span.begin(), span.end(), h) != span.end();
                               }),
                c.end());
        st.current = w.to_graph();
        FaceSet fs = faces(st.current);
        int F = static_cast<int>(fs.count());
        detail::require(F == st.faces0, std::string(label) + " must preserve the face count");
        int chi = 1 - static_cast<int>(st.current.map.edge_count()) + F;
        detail::require(chi == st.euler0 + euler_gain,
                        std::string(label) + " must shift the Euler characteristic by its summand");
        st.log(label, "summand split off");
    };

    // Phase 2: make every twisted edge a simple twisted loop and gather them
    // into one consecutive run. `gathered` lists the loops' first halfedges;
    // the run sits cyclically as (g1 g1' g2 g2' ... gd gd').
    std::vector<Halfedge> gathered;
    for (;;) {
        Halfedge pick = kNoHalfedge;
        for (Halfedge h : cyc()) {
            if (!w.twisted[h]) continue;
            bool in_gathered = false;
            for (Halfedge gsite : gathered)
                if (gsite == h || w.partner[gsite] == h) in_gathered = true;
            if (!in_gathered && (pick == kNoHalfedge || std::min(h, w.partner[h]) < std::min(pick, w.partner[pick])))
                pick = std::min(h, w.partner[h]);
        }
        if (pick == kNoHalfedge) break;
        // Choose the occurrence whose forward arc to its partner avoids the
        // gathered run, so its toggles stay inside the unprocessed suffix.
        Halfedge site = pick;
        if (!gathered.empty()) {
            std::vector<Halfedge> fwd = arc_between(pick, w.partner[pick]);
            for (Halfedge h : fwd)
                if (h == gathered.front()) site = w.partner[pick];
        }
        if (succ(site) != w.partner[site]) {
            if (succ(w.partner[site]) == site) {
                site = w.partner[site]; // already simple, seen from the other side
            } else {
                apply(SlideMove::Ia, site, 0, false, "Ia");
                detail::require(succ(site) == w.partner[site], "Ia must leave a simple loop");
            }
        }
        if (!gathered.empty()) {
            Halfedge run_end = w.partner[gathered.back()];
            std::size_t block_len = arc_between(run_end, site).size();
            if (block_len > 0) {
                apply(SlideMove::Ib, site, block_len, false, "Ib");
                detail::require(succ(run_end) == site, "Ib must append the loop to the run");
            }
        }
        gathered.push_back(site);
    }

    // Phase 3: turn three adjacent crosscaps into one crosscap and a handle
    // and split the handle off, until at most two crosscaps remain.
    while (gathered.size() >= 3) {
        Halfedge a = gathered[0], b = gathered[1], c3 = gathered[2];
        apply(SlideMove::Ia, b, 1, true, "Ia-inverse");
        detail::require(!w.twisted[a] && w.twisted[b], "first crosscap must transfer to the handle");
        apply(SlideMove::Ia, c3, 1, true, "Ia-inverse");
        detail::require(!w.twisted[b] && w.twisted[c3], "second crosscap must transfer to the handle");
        apply(SlideMove::IIa, a, 0, false, "IIa");
        apply(SlideMove::IIb, a, 1, false, "IIb");
        detail::require(succ(a) == b && succ(b) == w.partner[a] &&
                            succ(w.partner[a]) == w.partner[b],
                        "handle must be a clean crossing before the split");
        detail::require(succ(w.partner[b]) == c3 && succ(c3) == w.partner[c3],
                        "crosscap run must follow the split handle");
        split_off({a, w.partner[a], b, w.partner[b]}, 2, "split-handle");
        ++genus;
        gathered.erase(gathered.begin(), gathered.begin() + 2);
    }
    caps = static_cast<unsigned>(gathered.size());
    for (Halfedge gsite : gathered) {
        detail::require(w.twisted[gsite] && succ(gsite) == w.partner[gsite],
                        "crosscap must be a simple twisted loop at the split");
        split_off({gsite, w.partner[gsite]}, 1, "split-crosscap");
    }

    // Phase 4: the remaining word is untwisted. Delete face-merging edges
    // until one face remains; after that every remaining edge belongs to some
    // nice crossing, which IIa makes clean and the split removes as a handle.
    while (!cyc().empty()) {
        std::vector<Halfedge> old_of_new;
        st.current = w.to_graph(&old_of_new);
        FaceSet fs = faces(st.current);
        if (fs.count() > 1) {
            std::vector<std::int32_t> face_of(2 * st.current.map.halfedge_count(), -1);
            for (std::size_t fi = 0; fi < fs.circuits.size(); ++fi)
                for (const StrandState& s : fs.circuits[fi].strands) {
                    face_of[detail::state_index(s)] = static_cast<std::int32_t>(fi);
                    face_of[detail::state_index(reverse_strand(st.current, s))] =
                        static_cast<std::int32_t>(fi);
                }
            std::size_t pick = st.current.map.edge_count();
            for (std::size_t e = 0; e < st.current.map.edge_count(); ++e) {
                EdgePair ep = st.current.map.edges[e];
                if (st.current.twist[e]) continue;
                if (face_of[detail::state_index({ep.a, 0})] !=
                    face_of[detail::state_index({ep.a, 1})]) {
                    pick = e;
                    break;
                }
            }
            detail::require(pick < st.current.map.edge_count(),
                            "a multi-face rosette must have a face-merging untwisted edge");
            st.snapshot();
            EdgePair ep = st.current.map.edges[pick];
            Halfedge da = old_of_new[ep.a], db = old_of_new[ep.b];
            auto& c = cyc();
            c.erase(std::remove_if(c.begin(), c.end(),
                                   [&](Halfedge h) { return h == da || h == db; }),
                    c.end());
            st.current = w.to_graph();
            st.check_deletion();
            continue;
        }
        std::optional<Halfedge> site_new = find_nice_crossing(st.current, 0);
        detail::require(site_new.has_value(),
                        "a one-face rosette with untwisted edges must contain a nice crossing");
        Halfedge e1 = old_of_new[*site_new];
        Halfedge f1 = old_of_new[st.current.map.pi_inv[st.current.map.partner[*site_new]]];
        bool already_clean = succ(e1) == f1 && succ(f1) == w.partner[e1] &&
                             succ(w.partner[e1]) == w.partner[f1];
        if (!already_clean) {
            apply(SlideMove::IIa, e1, 0, false, "IIa");
            detail::require(succ(e1) == f1 && succ(f1) == w.partner[e1] &&
                                succ(w.partner[e1]) == w.partner[f1],
                            "IIa must leave a clean crossing");
        }
        split_off({e1, f1, w.partner[e1], w.partner[f1]}, 2, "split-handle");
        ++genus;
    }

    CanonicalSurface out{genus, caps};
    detail::require(out.euler_characteristic() == euler_in,
                    "classification must reproduce the Euler characteristic");
    detail::require(out.orientable() == orientable_in,
                    "classification must reproduce orientability");
    return out;
}

} // namespace tde
