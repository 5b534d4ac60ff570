#pragma once

// Classification of the real quartic trace invariants of a graded tensor
// model of order D, and the model signature (sizes, parities, couplings)
// every other module consumes.
//
// An invariant is indexed by the subset C of colors transmitted between its
// two tensor pairs (color 1 is never transmitted; C may be empty, the
// double-trace case) together with a parallel/cross channel per transmitted
// color. Exchanging the two tensors of one pair flips every channel at once,
// so channel assignments are classified up to a global flip; the canonical
// representative is the lexicographically smaller bit string with
// parallel = 0, cross = 1.

#include "tde/errors.hpp"
#include "tde/poly.hpp"
#include "tde/rational.hpp"

#include <json.hpp>

#include <algorithm>
#include <cassert>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

namespace tde {

struct QuarticInvariant {
    std::vector<unsigned> colors; // transmitted subset C, strictly ascending
    std::vector<int> channels;    // aligned with colors; 0 = parallel, 1 = cross

    bool operator==(const QuarticInvariant&) const = default;
    auto operator<=>(const QuarticInvariant&) const = default;

    bool is_double_trace() const { return colors.empty(); }
};

/// Flips every channel (the pair-exchange symmetry).
inline QuarticInvariant channel_flip(QuarticInvariant q) {
    for (int& ch : q.channels) ch = 1 - ch;
    return q;
}

inline QuarticInvariant canonical_invariant(const QuarticInvariant& q) {
    QuarticInvariant f = channel_flip(q);
    return f.channels < q.channels ? f : q;
}

/// "rho" for the double-trace invariant, otherwise e.g. "2p3c".
inline std::string invariant_code(const QuarticInvariant& q) {
    if (q.colors.empty()) return "rho";
    std::string code;
    for (std::size_t i = 0; i < q.colors.size(); ++i) {
        code += std::to_string(q.colors[i]);
        code += q.channels[i] == 0 ? 'p' : 'c';
    }
    return code;
}

inline QuarticInvariant parse_invariant_code(const std::string& code, unsigned D) {
    if (code == "rho") return {};
    QuarticInvariant q;
    std::size_t i = 0;
    while (i < code.size()) {
        std::size_t j = i;
        while (j < code.size() && std::isdigit(static_cast<unsigned char>(code[j]))) ++j;
        if (j == i || j == code.size() || (code[j] != 'p' && code[j] != 'c'))
            throw std::invalid_argument("malformed invariant code: " + code);
        unsigned c = static_cast<unsigned>(std::stoul(code.substr(i, j - i)));
        if (c < 2 || c > D)
            throw std::invalid_argument("invariant code " + code + " transmits color " +
                                        std::to_string(c) + " outside 2.." + std::to_string(D));
        if (!q.colors.empty() && c <= q.colors.back())
            throw std::invalid_argument("invariant code colors must ascend: " + code);
        q.colors.push_back(c);
        q.channels.push_back(code[j] == 'p' ? 0 : 1);
        i = j + 1;
    }
    if (canonical_invariant(q) != q)
        throw std::invalid_argument("invariant code is not the canonical channel choice: " + code);
    return q;
}

/// Number of invariant classes: (1 + 3^(D-1)) / 2.
inline Int count_invariants(unsigned D) {
    if (D == 0) throw std::invalid_argument("tensor order D must be >= 1");
    return (Int(1) + int_pow(Int(3), D - 1)) / 2;
}

struct ModelSignature {
    unsigned D = 0;
    std::vector<int> parity;                     // parity[c-1] = |c|, 0 or 1
    std::map<std::string, std::string> couplings; // invariant code -> coupling name

    int color_parity(unsigned c) const {
        assert(c >= 1 && c <= D);
        return parity.at(c - 1);
    }

    int total_parity() const {
        int t = 0;
        for (int p : parity) t ^= p;
        return t;
    }
};

/// All invariant classes of order sig.D in canonical order: the double-trace
/// class first, then ascending by (colors, channels).
inline std::vector<QuarticInvariant> enumerate_invariants(const ModelSignature& sig) {
    if (sig.D == 0) throw std::invalid_argument("tensor order D must be >= 1");
    std::vector<QuarticInvariant> out;
    std::vector<unsigned> pool;
    for (unsigned c = 2; c <= sig.D; ++c) pool.push_back(c);
    const unsigned n = static_cast<unsigned>(pool.size());
    for (unsigned mask = 0; mask < (1u << n); ++mask) {
        std::vector<unsigned> colors;
        for (unsigned i = 0; i < n; ++i)
            if (mask & (1u << i)) colors.push_back(pool[i]);
        const std::size_t k = colors.size();
        for (unsigned ch = 0; ch < (1u << k); ++ch) {
            QuarticInvariant q;
            q.colors = colors;
            for (std::size_t i = 0; i < k; ++i) q.channels.push_back((ch >> i) & 1u);
            if (canonical_invariant(q) == q) out.push_back(std::move(q));
        }
    }
    std::sort(out.begin(), out.end(), [](const QuarticInvariant& a, const QuarticInvariant& b) {
        if (a.colors.empty() != b.colors.empty()) return a.colors.empty();
        return std::tie(a.colors, a.channels) < std::tie(b.colors, b.channels);
    });
    return out;
}

/// The sign factor the invariant's definition carries:
/// prod over transmitted colors of (-sgn(channel))^{|c|}, where the parallel
/// channel is the identity permutation (sgn +1) and cross the transposition.
inline int invariant_sign_normalization(const QuarticInvariant& q, const ModelSignature& sig) {
    int s = 1;
    for (std::size_t i = 0; i < q.colors.size(); ++i)
        if (sig.color_parity(q.colors[i]) == 1 && q.channels[i] == 0) s = -s;
    return s;
}

// ---------------------------------------------------------------------------
// Color loop words: the per-color index loops the Wick oracle traces. Each
// token is the metric matrix a link contributes as traversed.

enum class LoopToken {
    G,       // g
    G_T,     // g transposed
    G_INV,   // g inverse
    G_INV_T, // g inverse transposed
};

struct ColorLoopWord {
    unsigned color = 0;
    std::vector<LoopToken> tokens;
};

/// Trace of the token product. For an even color every token is the identity
/// metric, giving +N_c. For an odd color each token is +-omega with
/// omega^2 = -1: value (prod signs) * (-1)^{k/2} * N_c, word length k even.
inline int color_loop_sign(const ColorLoopWord& w, const ModelSignature& sig) {
    if (sig.color_parity(w.color) == 0) return 1;
    const std::size_t k = w.tokens.size();
    if (k % 2 != 0)
        throw std::logic_error("odd-length loop word on a symplectic color");
    int s = ((k / 2) % 2 == 0) ? 1 : -1;
    for (LoopToken t : w.tokens)
        if (t == LoopToken::G_T || t == LoopToken::G_INV) s = -s;
    return s;
}

// ---------------------------------------------------------------------------
// Model configuration ingestion.

struct Interaction {
    QuarticInvariant inv;
    std::string id;       // canonical invariant code
    std::string coupling; // coupling variable name
};

/// The model's active interactions, double-trace first, then by (colors, channels).
inline std::vector<Interaction> model_interactions(const ModelSignature& sig) {
    std::vector<Interaction> out;
    for (const auto& [id, name] : sig.couplings) {
        QuarticInvariant q = parse_invariant_code(id, sig.D);
        out.push_back({std::move(q), id, name});
    }
    std::sort(out.begin(), out.end(), [](const Interaction& a, const Interaction& b) {
        if (a.inv.colors.empty() != b.inv.colors.empty()) return a.inv.colors.empty();
        return std::tie(a.inv.colors, a.inv.channels) < std::tie(b.inv.colors, b.inv.channels);
    });
    return out;
}

/// Polynomial variable universe for a model: sizes N1..ND, then the distinct
/// coupling names in interaction order.
inline PolyVars poly_vars(const ModelSignature& sig) {
    PolyVars v;
    for (unsigned c = 1; c <= sig.D; ++c) v.sizes.push_back("N" + std::to_string(c));
    for (const Interaction& it : model_interactions(sig))
        if (std::find(v.couplings.begin(), v.couplings.end(), it.coupling) == v.couplings.end())
            v.couplings.push_back(it.coupling);
    return v;
}

inline ModelSignature parse_model_config(const nlohmann::json& j) {
    ModelSignature sig;
    if (!j.is_object()) throw ConfigError("<root>", "model config must be a JSON object");
    if (!j.contains("D") || !j["D"].is_number_unsigned() || j["D"].get<unsigned>() == 0)
        throw ConfigError("D", "required, a positive integer tensor order");
    sig.D = j["D"].get<unsigned>();

    if (!j.contains("parity") || !j["parity"].is_array() || j["parity"].size() != sig.D)
        throw ConfigError("parity", "required, an array of D entries in {0,1}");
    for (const auto& p : j["parity"]) {
        if (!p.is_number_integer() || (p.get<int>() != 0 && p.get<int>() != 1))
            throw ConfigError("parity", "entries must be 0 or 1");
        sig.parity.push_back(p.get<int>());
    }

    std::map<std::string, std::string> names;
    if (j.contains("couplings")) {
        if (!j["couplings"].is_object())
            throw ConfigError("couplings", "must map invariant codes to coupling names");
        for (const auto& [id, name] : j["couplings"].items()) {
            if (!name.is_string()) throw ConfigError("couplings", "names must be strings");
            try {
                parse_invariant_code(id, sig.D);
            } catch (const std::invalid_argument& e) {
                throw ConfigError("couplings", e.what());
            }
            names[id] = name.get<std::string>();
        }
    }

    std::vector<std::string> active;
    if (!j.contains("invariants") || (j["invariants"].is_string() && j["invariants"] == "all")) {
        for (const QuarticInvariant& q : enumerate_invariants(sig))
            active.push_back(invariant_code(q));
    } else if (j["invariants"].is_array()) {
        for (const auto& e : j["invariants"]) {
            if (!e.is_object() || !e.contains("colors") || !e.contains("channels"))
                throw ConfigError("invariants", "entries need \"colors\" and \"channels\" arrays");
            QuarticInvariant q;
            for (const auto& c : e["colors"]) {
                if (!c.is_number_unsigned())
                    throw ConfigError("invariants.colors", "colors must be unsigned integers");
                q.colors.push_back(c.get<unsigned>());
            }
            for (const auto& ch : e["channels"]) {
                if (!ch.is_number_integer() || (ch.get<int>() != 0 && ch.get<int>() != 1))
                    throw ConfigError("invariants.channels", "channels must be 0 or 1");
                q.channels.push_back(ch.get<int>());
            }
            if (q.channels.size() != q.colors.size())
                throw ConfigError("invariants.channels", "one channel per transmitted color");
            if (!std::is_sorted(q.colors.begin(), q.colors.end()) ||
                std::adjacent_find(q.colors.begin(), q.colors.end()) != q.colors.end())
                throw ConfigError("invariants.colors", "must be strictly ascending");
            for (unsigned c : q.colors)
                if (c < 2 || c > sig.D)
                    throw ConfigError("invariants.colors",
                                      "color " + std::to_string(c) + " outside 2..D (color 1 is never transmitted)");
            active.push_back(invariant_code(canonical_invariant(q)));
        }
        std::sort(active.begin(), active.end());
        active.erase(std::unique(active.begin(), active.end()), active.end());
    } else {
        throw ConfigError("invariants", "must be \"all\" or an array of invariant objects");
    }

    for (const std::string& id : active) {
        auto it = names.find(id);
        sig.couplings[id] = it == names.end() ? id : it->second;
    }
    return sig;
}

inline nlohmann::json model_to_json(const ModelSignature& sig) {
    nlohmann::json j;
    j["D"] = sig.D;
    j["parity"] = sig.parity;
    nlohmann::json inv = nlohmann::json::array();
    nlohmann::json coup = nlohmann::json::object();
    for (const Interaction& it : model_interactions(sig)) {
        inv.push_back({{"colors", it.inv.colors}, {"channels", it.inv.channels}});
        coup[it.id] = it.coupling;
    }
    j["invariants"] = inv;
    j["couplings"] = coup;
    return j;
}

} // namespace tde
