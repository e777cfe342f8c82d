#pragma once

#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "vnoether/derivation.hpp"
#include "vnoether/poly.hpp"
#include "vnoether/variational.hpp"

namespace vnoether
{
    // Number of antifield factors of a density when every monomial has the same count.
    inline std::optional<int> antifield_number(const Poly& p)
    {
        std::optional<int> found;
        for (const auto& [m, c] : p.terms()) {
            int n = 0;
            for (const auto& [v, e] : m.even) {
                if (v.kind() == SymbolKind::antifield) n += e;
            }
            for (const auto& v : m.odd) {
                if (v.kind() == SymbolKind::antifield) ++n;
            }
            if (found && *found != n) return std::nullopt;
            found = n;
        }
        return found.value_or(0);
    }

    inline const Poly& euler_lagrange_for_antifield(const JetVariable& antifield, const EulerLagrange& E)
    {
        for (const auto& [field, e] : E) {
            if (field.name() == antifield.symbol->base) return e;
        }
        throw DeclarationError("antifield " + antifield.name() + " has no Euler-Lagrange expression");
    }

    // Koszul-Tate differential: the odd right derivation with
    // s-bar_{Lambda A} -> d_Lambda E_A and every other generator -> 0.
    inline Poly koszul_tate(const Poly& phi, const EulerLagrange& E, const Chart& chart)
    {
        return apply_right_derivation(phi, 1, [&](const JetVariable& v) {
            if (v.kind() != SymbolKind::antifield) return Poly();
            return total_derivative(euler_lagrange_for_antifield(v, E), v.index, chart);
        });
    }

    // Noether operator Delta = sum Delta^{A,Lambda} s-bar_{Lambda A}; the
    // coefficients are keyed by jet(A, Lambda) and written to the left of the
    // antifield.
    struct NoetherOperator
    {
        std::string label;
        std::map<JetVariable, Poly> coefficients;

        bool is_zero() const
        {
            for (const auto& [k, c] : coefficients) {
                if (!c.is_zero()) return false;
            }
            return true;
        }

        // [Delta^{A,Lambda}] + [A] + 1, identical for every term; even when empty.
        Parity parity() const
        {
            std::optional<Parity> found;
            for (const auto& [key, c] : coefficients) {
                if (c.is_zero()) continue;
                auto p = c.homogeneous_parity();
                if (!p) throw DeclarationError("Noether operator " + label + " has a parity-inhomogeneous coefficient");
                Parity q = parity_sum(parity_sum(*p, key.parity()), 1);
                if (found && *found != q) throw DeclarationError("Noether operator " + label + " mixes parities");
                found = q;
            }
            return found.value_or(0);
        }

        Poly density() const
        {
            Poly out;
            for (const auto& [key, c] : coefficients) {
                out += c * Poly::variable(jet(make_antifield(key.symbol), key.index));
            }
            return out;
        }

        friend bool operator==(const NoetherOperator& a, const NoetherOperator& b)
        {
            auto nonzero = [](const std::map<JetVariable, Poly>& m) {
                std::map<JetVariable, Poly> out;
                for (const auto& [k, c] : m) {
                    if (!c.is_zero()) out.emplace(k, c);
                }
                return out;
            };
            return nonzero(a.coefficients) == nonzero(b.coefficients);
        }
    };

    // Reads Delta^{A,Lambda} off a density linear in antifields by right
    // partial derivatives. `fields` supplies the symbols the antifields stand for.
    inline NoetherOperator noether_operator_from_density(const Poly& phi, const std::vector<Symbol>& fields,
                                                         std::string label = {})
    {
        auto number = antifield_number(phi);
        if (!phi.is_zero() && number != 1) throw UnsupportedError("density is not linear in antifields");
        NoetherOperator out;
        out.label = std::move(label);
        for (const auto& v : phi.variables()) {
            if (v.kind() != SymbolKind::antifield) continue;
            Symbol base;
            for (const auto& f : fields) {
                if (f->name == v.symbol->base) base = f;
            }
            if (!base) throw DeclarationError("antifield " + v.name() + " refers to an undeclared field");
            Poly c = right_partial(phi, v);
            if (!c.is_zero()) out.coefficients[jet(base, v.index)] = std::move(c);
        }
        return out;
    }

    // sum Delta^{A,Lambda} d_Lambda E_A == 0
    inline bool check_noether_identity(const NoetherOperator& delta, const EulerLagrange& E, const Chart& chart)
    {
        return koszul_tate(delta.density(), E, chart).is_zero();
    }

    inline void check_ghost_parity(const NoetherOperator& delta, const Symbol& ghost)
    {
        if (delta.is_zero()) return;
        if (ghost->parity != delta.parity()) {
            throw DeclarationError("ghost " + ghost->name + " has parity " + std::to_string(ghost->parity) +
                                   " but Noether operator " + delta.label + " has parity " + std::to_string(delta.parity()));
        }
    }

    // Gauge generator u^A = sum_Lambda (-1)^{|Lambda|} d_Lambda(c Delta^{A,Lambda}),
    // also stored as u^A = sum_Sigma c_Sigma eta^{A,Sigma}.
    struct GaugeGenerator
    {
        Symbol ghost;
        GeneralizedVectorField u;
        // eta^{A,Sigma} keyed by jet(A, Sigma)
        std::map<JetVariable, Poly> eta;
    };

    // Coefficients of the ghost jets in a polynomial linear in them, c_Sigma on the left.
    inline std::map<MultiIndex, Poly> ghost_coefficients(const Poly& p, const Symbol& ghost)
    {
        std::map<MultiIndex, Poly> out;
        std::set<MultiIndex> seen;
        for (const auto& [m, c] : p.terms()) {
            int count = 0;
            for (const auto& [v, e] : m.even) {
                if (same_symbol(v.symbol, ghost)) {
                    count += e;
                    seen.insert(v.index);
                }
            }
            for (const auto& v : m.odd) {
                if (same_symbol(v.symbol, ghost)) {
                    ++count;
                    seen.insert(v.index);
                }
            }
            if (count != 1) throw UnsupportedError("expression is not linear in the jets of ghost " + ghost->name);
        }
        for (const auto& idx : seen) {
            Poly coeff = partial(p, jet(ghost, idx));
            if (!coeff.is_zero()) out.emplace(idx, std::move(coeff));
        }
        return out;
    }

    inline GaugeGenerator adjoint(const NoetherOperator& delta, const Symbol& ghost, const Chart& chart)
    {
        check_ghost_parity(delta, ghost);
        GaugeGenerator out;
        out.ghost = ghost;
        std::map<JetVariable, Poly> components;
        Poly c = Poly::variable(jet(ghost));
        for (const auto& [key, coeff] : delta.coefficients) {
            Poly term = total_derivative(c * coeff, key.index, chart);
            components[jet(key.symbol)] += Rational(sign_of(key.order())) * term;
        }
        for (const auto& [field, u] : components) {
            out.u.set_vertical(field.symbol, u);
            if (u.is_zero()) continue;
            for (auto& [idx, eta] : ghost_coefficients(u, ghost)) out.eta.emplace(jet(field.symbol, idx), std::move(eta));
        }
        return out;
    }

    // Variational derivative of u^A s-bar_A with respect to the ghost, with
    // antifields standing in for E_A; its antifield coefficients form the
    // Noether operator whose adjoint is u.
    inline NoetherOperator recover_identity(const GeneralizedVectorField& u, const Symbol& ghost, const Chart& chart,
                                            std::string label = {})
    {
        Poly phi;
        std::vector<Symbol> fields;
        for (const auto& [field, component] : u.vertical()) {
            fields.push_back(field.symbol);
            if (component.is_zero()) continue;
            Poly antifield = Poly::variable(jet(make_antifield(field.symbol)));
            for (const auto& [idx, eta] : ghost_coefficients(component, ghost)) {
                phi += Rational(sign_of(idx.order())) * total_derivative(eta * antifield, idx, chart);
            }
        }
        return noether_operator_from_density(phi, fields, std::move(label));
    }

    struct GaugeSymmetry
    {
        GaugeGenerator generator;
        // u^A E_A = d_mu sigma^mu
        std::vector<Poly> sigma;
    };

    inline GaugeSymmetry gauge_symmetry(const NoetherOperator& delta, const Symbol& ghost, const Lagrangian& L,
                                        const AnsatzOptions& options = {})
    {
        auto E = euler_lagrange(L);
        if (!check_noether_identity(delta, E, L.chart)) {
            throw ConsistencyError("Noether identity " + delta.label + " does not hold for this Lagrangian");
        }
        GaugeSymmetry out;
        out.generator = adjoint(delta, ghost, L.chart);
        Poly pairing;
        for (const auto& [field, component] : out.generator.u.vertical()) {
            auto it = E.find(field);
            if (it != E.end()) pairing += component * it->second;
        }
        auto r = dH_antiderivative(pairing, L.chart, options);
        if (r.status == ExactnessStatus::not_exact) {
            throw ConsistencyError("u^A E_A is not d_H-exact: " + r.reason);
        }
        if (r.status == ExactnessStatus::bound_exhausted) throw ResourceError(r.reason);
        out.sigma = std::move(r.sigma);
        return out;
    }

    // L_e = L + sum_r c^r Delta_r
    inline Poly extended_lagrangian(const Lagrangian& L, const std::vector<std::pair<NoetherOperator, Symbol>>& identities)
    {
        Poly out = L.density;
        for (const auto& [delta, ghost] : identities) {
            check_ghost_parity(delta, ghost);
            out += Poly::variable(jet(ghost)) * delta.density();
        }
        return out;
    }
}
