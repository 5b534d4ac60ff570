#pragma once

// Exact multivariate polynomials over the rationals, used as truncated
// formal power series in the coupling variables.
//
// Variables come in two groups: size variables (one per color, exponents may
// be any nonnegative integer) and coupling variables. Series truncation and
// the exp/log operations are graded by total degree in the couplings only.

#include "tde/rational.hpp"

#include <algorithm>
#include <cassert>
#include <map>
#include <numeric>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace tde {

struct PolyVars {
    std::vector<std::string> sizes;     // e.g. {"N1", "N2"}
    std::vector<std::string> couplings; // e.g. {"kappa", "lambda"}

    bool operator==(const PolyVars&) const = default;

    std::size_t total() const { return sizes.size() + couplings.size(); }
};

class AmplitudePoly {
public:
    using Exps = std::vector<unsigned>;

    AmplitudePoly() = default;
    explicit AmplitudePoly(PolyVars vars) : vars_(std::move(vars)) {}

    static AmplitudePoly constant(PolyVars vars, const Rational& c) {
        AmplitudePoly p(std::move(vars));
        p.add_term(Exps(p.vars_.total(), 0), c);
        return p;
    }

    const PolyVars& vars() const { return vars_; }
    bool is_zero() const { return terms_.empty(); }
    std::size_t term_count() const { return terms_.size(); }

    /// Adds c * prod(vars^exps); drops the term if the result cancels.
    void add_term(const Exps& exps, const Rational& c) {
        if (exps.size() != vars_.total())
            throw std::invalid_argument("exponent vector length mismatch");
        if (c == 0) return;
        auto it = terms_.find(exps);
        if (it == terms_.end()) {
            terms_.emplace(exps, c);
        } else {
            it->second += c;
            if (it->second == 0) terms_.erase(it);
        }
    }

    Rational coefficient(const Exps& exps) const {
        auto it = terms_.find(exps);
        return it == terms_.end() ? Rational(0) : it->second;
    }

    unsigned coupling_degree(const Exps& e) const {
        unsigned d = 0;
        for (std::size_t i = vars_.sizes.size(); i < e.size(); ++i) d += e[i];
        return d;
    }

    unsigned max_coupling_degree() const {
        unsigned d = 0;
        for (const auto& [e, c] : terms_) d = std::max(d, coupling_degree(e));
        return d;
    }

    AmplitudePoly& operator+=(const AmplitudePoly& o) {
        check_same(o);
        for (const auto& [e, c] : o.terms_) add_term(e, c);
        return *this;
    }

    AmplitudePoly& operator-=(const AmplitudePoly& o) {
        check_same(o);
        for (const auto& [e, c] : o.terms_) add_term(e, -c);
        return *this;
    }

    friend AmplitudePoly operator+(AmplitudePoly a, const AmplitudePoly& b) { return a += b; }
    friend AmplitudePoly operator-(AmplitudePoly a, const AmplitudePoly& b) { return a -= b; }

    AmplitudePoly& operator*=(const Rational& s) {
        if (s == 0) { terms_.clear(); return *this; }
        for (auto& [e, c] : terms_) c *= s;
        return *this;
    }

    friend AmplitudePoly operator*(AmplitudePoly a, const Rational& s) { return a *= s; }

    /// Product truncated to total coupling degree <= max_order
    /// (no truncation if max_order is negative).
    AmplitudePoly mul(const AmplitudePoly& o, int max_order = -1) const {
        check_same(o);
        AmplitudePoly out(vars_);
        for (const auto& [ea, ca] : terms_) {
            for (const auto& [eb, cb] : o.terms_) {
                Exps e(ea.size());
                for (std::size_t i = 0; i < e.size(); ++i) e[i] = ea[i] + eb[i];
                if (max_order >= 0 && coupling_degree(e) > static_cast<unsigned>(max_order))
                    continue;
                out.add_term(e, ca * cb);
            }
        }
        return out;
    }

    friend AmplitudePoly operator*(const AmplitudePoly& a, const AmplitudePoly& b) {
        return a.mul(b);
    }

    AmplitudePoly truncated(unsigned max_order) const {
        AmplitudePoly out(vars_);
        for (const auto& [e, c] : terms_)
            if (coupling_degree(e) <= max_order) out.add_term(e, c);
        return out;
    }

    /// exp(p) as a series truncated at coupling degree max_order.
    /// Requires every term of p to have coupling degree >= 1.
    AmplitudePoly exp_series(unsigned max_order) const {
        for (const auto& [e, c] : terms_)
            if (coupling_degree(e) == 0)
                throw std::invalid_argument("exp_series needs vanishing constant part");
        AmplitudePoly out = constant(vars_, 1);
        AmplitudePoly power = constant(vars_, 1);
        Rational factorial = 1;
        for (unsigned k = 1; k <= max_order; ++k) {
            power = power.mul(*this, static_cast<int>(max_order));
            if (power.is_zero()) break;
            factorial *= k;
            out += power * (Rational(1) / factorial);
        }
        return out;
    }

    /// log(p) truncated at coupling degree max_order.
    /// Requires constant term exactly 1 and all other terms of coupling degree >= 1.
    AmplitudePoly log_series(unsigned max_order) const {
        AmplitudePoly x = *this;
        Exps zero(vars_.total(), 0);
        if (x.coefficient(zero) != 1)
            throw std::invalid_argument("log_series needs constant term 1");
        x.add_term(zero, Rational(-1));
        for (const auto& [e, c] : x.terms_)
            if (coupling_degree(e) == 0)
                throw std::invalid_argument("log_series needs constant term 1");
        AmplitudePoly out(vars_);
        AmplitudePoly power = constant(vars_, 1);
        for (unsigned k = 1; k <= max_order; ++k) {
            power = power.mul(x, static_cast<int>(max_order));
            if (power.is_zero()) break;
            Rational coeff = Rational((k % 2 == 1) ? 1 : -1) / Rational(k);
            out += power * coeff;
        }
        return out;
    }

    /// The Euler operator lambda_q * d/d(lambda_q): scales each term by its
    /// exponent in the named coupling.
    AmplitudePoly coupling_euler(const std::string& coupling) const {
        std::size_t slot = coupling_slot(coupling);
        AmplitudePoly out(vars_);
        for (const auto& [e, c] : terms_)
            if (e[slot] > 0) out.add_term(e, c * Rational(e[slot]));
        return out;
    }

    /// N_c -> -N_c for the named size variable.
    AmplitudePoly flip_size_sign(const std::string& size) const {
        auto it = std::find(vars_.sizes.begin(), vars_.sizes.end(), size);
        if (it == vars_.sizes.end()) throw std::invalid_argument("unknown size variable: " + size);
        std::size_t slot = static_cast<std::size_t>(it - vars_.sizes.begin());
        AmplitudePoly out(vars_);
        for (const auto& [e, c] : terms_)
            out.add_term(e, (e[slot] % 2 == 0) ? c : -c);
        return out;
    }

    /// Identifies all size variables with a single one named merged_name.
    AmplitudePoly merge_sizes(const std::string& merged_name) const {
        PolyVars v{{merged_name}, vars_.couplings};
        AmplitudePoly out(v);
        std::size_t ns = vars_.sizes.size();
        for (const auto& [e, c] : terms_) {
            Exps me(1 + vars_.couplings.size(), 0);
            for (std::size_t i = 0; i < ns; ++i) me[0] += e[i];
            for (std::size_t i = 0; i < vars_.couplings.size(); ++i) me[1 + i] = e[ns + i];
            out.add_term(me, c);
        }
        return out;
    }

    bool operator==(const AmplitudePoly& o) const {
        return vars_ == o.vars_ && terms_ == o.terms_;
    }

    /// Terms in canonical order: coupling degree, then exponent vector lex.
    std::vector<std::pair<Exps, Rational>> sorted_terms() const {
        std::vector<std::pair<Exps, Rational>> out(terms_.begin(), terms_.end());
        std::sort(out.begin(), out.end(), [this](const auto& a, const auto& b) {
            unsigned da = coupling_degree(a.first), db = coupling_degree(b.first);
            if (da != db) return da < db;
            return a.first < b.first;
        });
        return out;
    }

    std::string to_string() const {
        if (terms_.empty()) return "0";
        std::ostringstream os;
        bool first = true;
        for (const auto& [e, c] : sorted_terms()) {
            if (!first) os << " + ";
            first = false;
            os << "(" << c << ")";
            for (std::size_t i = 0; i < e.size(); ++i) {
                if (e[i] == 0) continue;
                os << "*" << var_name(i);
                if (e[i] > 1) os << "^" << e[i];
            }
        }
        return os.str();
    }

    const std::string& var_name(std::size_t slot) const {
        return slot < vars_.sizes.size() ? vars_.sizes[slot]
                                         : vars_.couplings[slot - vars_.sizes.size()];
    }

    std::size_t coupling_slot(const std::string& coupling) const {
        auto it = std::find(vars_.couplings.begin(), vars_.couplings.end(), coupling);
        if (it == vars_.couplings.end())
            throw std::invalid_argument("unknown coupling: " + coupling);
        return vars_.sizes.size() + static_cast<std::size_t>(it - vars_.couplings.begin());
    }

private:
    void check_same(const AmplitudePoly& o) const {
        if (!(vars_ == o.vars_))
            throw std::invalid_argument("polynomial variable sets differ");
    }

    PolyVars vars_;
    std::map<Exps, Rational> terms_;
};

} // namespace tde
