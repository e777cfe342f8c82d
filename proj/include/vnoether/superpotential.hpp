#pragma once

#include <map>
#include <string>
#include <utility>
#include <vector>

#include "vnoether/derivation.hpp"
#include "vnoether/forms.hpp"
#include "vnoether/gauge.hpp"
#include "vnoether/poly.hpp"
#include "vnoether/variational.hpp"

namespace vnoether
{
    // Linear combination sum w^{A,Lambda} d_Lambda E_A, keyed by jet(A, Lambda).
    using ELCombination = std::map<JetVariable, Poly>;

    inline Poly evaluate(const ELCombination& w, const EulerLagrange& E, const Chart& chart)
    {
        Poly out;
        for (const auto& [key, coeff] : w) {
            if (coeff.is_zero()) continue;
            auto it = E.find(jet(key.symbol));
            if (it == E.end()) throw DeclarationError("no Euler-Lagrange expression for " + key.symbol->name);
            out += coeff * total_derivative(it->second, key.index, chart);
        }
        return out;
    }

    inline void add_combination(ELCombination& into, const ELCombination& w, const Rational& scale = 1)
    {
        for (const auto& [key, coeff] : w) {
            Poly& slot = into[key];
            slot += scale * coeff;
            if (slot.is_zero()) into.erase(key);
        }
    }

    // d_mu (sum w d_Lambda E) = sum (d_mu w) d_Lambda E + w d_{Lambda mu} E
    inline ELCombination total_derivative(const ELCombination& w, int mu, const Chart& chart)
    {
        ELCombination out;
        for (const auto& [key, coeff] : w) {
            add_combination(out, {{key, total_derivative(coeff, mu, chart)}});
            add_combination(out, {{key.derived(MultiIndex{mu}), coeff}});
        }
        return out;
    }

    inline ELCombination left_multiply(const Poly& p, const ELCombination& w)
    {
        ELCombination out;
        for (const auto& [key, coeff] : w) add_combination(out, {{key, p * coeff}});
        return out;
    }

    // J^mu = sum_r sum_Sigma c^r_Sigma J_r^{mu,Sigma} + J^mu with the ghost jet
    // on the left. Coefficients are collected per distinct Sigma.
    struct GhostExpansion
    {
        int dim = 0;
        // ghost name -> Sigma -> component mu
        std::map<std::string, std::map<MultiIndex, std::vector<Poly>>> coefficients;
        std::map<std::string, Symbol> ghosts;
        std::vector<Poly> remainder;

        int order() const
        {
            int m = -1;
            for (const auto& [name, by_index] : coefficients) {
                for (const auto& [idx, c] : by_index) m = std::max(m, idx.order());
            }
            return m;
        }

        std::vector<Poly> reconstruct() const
        {
            std::vector<Poly> out = remainder;
            for (const auto& [name, by_index] : coefficients) {
                const Symbol& c = ghosts.at(name);
                for (const auto& [idx, comps] : by_index) {
                    Poly cj = Poly::variable(jet(c, idx));
                    for (int mu = 0; mu < dim; ++mu) out[static_cast<std::size_t>(mu)] += cj * comps[static_cast<std::size_t>(mu)];
                }
            }
            return out;
        }
    };

    namespace detail
    {
        // Splits p into its ghost-free part and ghost-linear parts per ghost.
        inline std::pair<Poly, std::map<std::string, Poly>> split_by_ghost(const Poly& p, std::map<std::string, Symbol>& ghosts)
        {
            Poly free;
            std::map<std::string, Poly> linear;
            for (const auto& [m, c] : p.terms()) {
                int count = 0;
                Symbol g;
                auto visit = [&](const JetVariable& v, int times) {
                    if (v.kind() != SymbolKind::ghost) return;
                    count += times;
                    g = v.symbol;
                };
                for (const auto& [v, e] : m.even) visit(v, e);
                for (const auto& v : m.odd) visit(v, 1);
                if (count == 0) {
                    free.add_term(m, c);
                    continue;
                }
                if (count != 1) throw UnsupportedError("current is not linear in ghosts");
                ghosts.emplace(g->name, g);
                linear[g->name].add_term(m, c);
            }
            return {std::move(free), std::move(linear)};
        }
    }

    inline GhostExpansion expand_current(const std::vector<Poly>& J)
    {
        GhostExpansion out;
        out.dim = static_cast<int>(J.size());
        out.remainder.assign(J.size(), Poly());
        for (int mu = 0; mu < out.dim; ++mu) {
            auto [free, linear] = detail::split_by_ghost(J[static_cast<std::size_t>(mu)], out.ghosts);
            out.remainder[static_cast<std::size_t>(mu)] = std::move(free);
            for (const auto& [name, part] : linear) {
                for (auto& [idx, coeff] : ghost_coefficients(part, out.ghosts.at(name))) {
                    auto& comps = out.coefficients[name][idx];
                    comps.resize(J.size());
                    comps[static_cast<std::size_t>(mu)] = std::move(coeff);
                }
            }
        }
        return out;
    }

    struct SuperpotentialSplit
    {
        // w^{A,Lambda,mu} keyed by jet(A, Lambda), one table per mu
        std::vector<ELCombination> W_coefficients;
        std::vector<Poly> W;
        std::vector<std::vector<Poly>> U;
        // U of the ghost-free remainder: J^mu = d_nu U_0^{nu mu}
        std::vector<std::vector<Poly>> exact_remainder_witness;
    };

    namespace detail
    {
        inline Rational arrangements_of(const MultiIndex& m) { return Rational(static_cast<long>(m.arrangements())); }

        inline std::vector<MultiIndex> indices_of_order(int order, int dim)
        {
            std::vector<MultiIndex> out;
            std::vector<int> bound(static_cast<std::size_t>(dim), order);
            for_each_bounded(bound, [&](const std::vector<int>& counts) {
                int total = 0;
                for (int c : counts) total += c;
                if (total == order) out.push_back(MultiIndex::from_counts(counts));
            });
            return out;
        }

        // Names the structural equation governing the ghost jets of the given order.
        inline std::string structural_tag(int order, int top, int symmetry_order)
        {
            if (order == 0) return "order-zero (u_r E - d_mu J_r^mu = 0)";
            if (order == 1) return "order-one (u_r^mu E - J_r^mu - d_nu J_r^{nu mu} = 0)";
            if (order > top) return "top-order (J_r^{(mu mu_1)...} = 0)";
            if (order > symmetry_order) return "intermediate-order (J_r^{(mu_k mu_k+1)...} + d_nu J_r^{nu mu_k...} = 0)";
            return "symmetry-order (u_r^{mu_k...} E - J_r^{(mu_k mu_k+1)...} - d_nu J_r^{nu mu_k...} = 0)";
        }
    }

    // Splits the current of a ghost-generated gauge symmetry u into W + d_nu U^{nu mu}
    // with W a combination of Euler-Lagrange expressions and U antisymmetric.
    inline SuperpotentialSplit extract(const std::vector<Poly>& J, const GeneralizedVectorField& u, const Lagrangian& L,
                                       const AnsatzOptions& options = {})
    {
        const Chart& chart = L.chart;
        const int dim = chart.dim;
        if (static_cast<int>(J.size()) != dim) throw ConsistencyError("current has the wrong number of components");
        require_vertical(u);
        auto E = euler_lagrange(L);

        GhostExpansion expansion = expand_current(J);

        // Q_r: sum_Sigma c_Sigma Q^Sigma with d_mu(J - W)^mu = Q, Q^Sigma an EL combination
        std::map<std::string, std::map<MultiIndex, ELCombination>> Q;
        std::map<std::string, int> symmetry_order;
        for (const auto& [field, component] : u.vertical()) {
            auto [free, linear] = detail::split_by_ghost(component, expansion.ghosts);
            if (!free.is_zero()) throw UnsupportedError("symmetry component " + field.name() + " has a ghost-free part");
            for (const auto& [name, part] : linear) {
                for (auto& [idx, eta] : ghost_coefficients(part, expansion.ghosts.at(name))) {
                    add_combination(Q[name][idx], {{jet(field.symbol), eta}});
                    symmetry_order[name] = std::max(symmetry_order[name], idx.order());
                }
            }
        }

        SuperpotentialSplit out;
        out.W_coefficients.assign(static_cast<std::size_t>(dim), ELCombination());
        out.U.assign(static_cast<std::size_t>(dim), std::vector<Poly>(static_cast<std::size_t>(dim)));

        for (const auto& [name, ghost] : expansion.ghosts) {
            auto& coeffs = expansion.coefficients[name];
            auto& q = Q[name];
            int top = -1;
            for (const auto& [idx, c] : coeffs) top = std::max(top, idx.order());
            int N = symmetry_order.count(name) ? symmetry_order[name] : -1;

            auto fail = [&](int order) {
                throw ConsistencyError("structural equation " + detail::structural_tag(order, top, N) + " fails for ghost " +
                                       name + " at ghost order " + std::to_string(order));
            };
            for (const auto& [idx, w] : q) {
                if (idx.order() > top + 1 && !evaluate(w, E, chart).is_zero()) fail(idx.order());
            }

            for (int K = top; K >= 0; --K) {
                auto sigmas = detail::indices_of_order(K, dim);
                auto component = [&](const MultiIndex& s, int mu) -> Poly {
                    auto it = coeffs.find(s);
                    return it == coeffs.end() ? Poly() : it->second[static_cast<std::size_t>(mu)];
                };

                // coefficient of c_Pi in d_mu J^mu at order K+1 against Q^Pi
                for (const auto& Pi : detail::indices_of_order(K + 1, dim)) {
                    Poly lhs;
                    for (int mu = 0; mu < dim; ++mu) {
                        if (Pi.multiplicity(mu) > 0) lhs += component(Pi.without(mu), mu);
                    }
                    auto it = q.find(Pi);
                    Poly rhs = it == q.end() ? Poly() : evaluate(it->second, E, chart);
                    if (lhs != rhs) fail(K + 1);
                }

                // symmetric part forced by Q, moved into W
                std::map<MultiIndex, std::vector<ELCombination>> w_part;
                for (const auto& s : sigmas) {
                    auto& wk = w_part[s];
                    wk.assign(static_cast<std::size_t>(dim), ELCombination());
                    for (int mu = 0; mu < dim; ++mu) {
                        auto it = q.find(s.with(mu));
                        if (it == q.end()) continue;
                        Rational scale = Rational(s.multiplicity(mu) + 1) / Rational(K + 1);
                        add_combination(wk[static_cast<std::size_t>(mu)], it->second, scale);
                    }
                }

                // remainder R^{mu|Sigma} (tensor normalised) with vanishing symmetric part
                std::map<MultiIndex, std::vector<Poly>> R;
                for (const auto& s : sigmas) {
                    auto& r = R[s];
                    r.assign(static_cast<std::size_t>(dim), Poly());
                    Rational norm = Rational(1) / detail::arrangements_of(s);
                    for (int mu = 0; mu < dim; ++mu) {
                        Poly sym = evaluate(w_part[s][static_cast<std::size_t>(mu)], E, chart);
                        r[static_cast<std::size_t>(mu)] = norm * (component(s, mu) - sym);
                    }
                }

                for (const auto& s : sigmas) {
                    Poly cs = Poly::variable(jet(ghost, s));
                    for (int mu = 0; mu < dim; ++mu) {
                        add_combination(out.W_coefficients[static_cast<std::size_t>(mu)],
                                   left_multiply(cs, w_part[s][static_cast<std::size_t>(mu)]));
                    }
                }

                if (K == 0) {
                    for (int mu = 0; mu < dim; ++mu) {
                        if (!R[MultiIndex()][static_cast<std::size_t>(mu)].is_zero()) fail(1);
                    }
                }
                else {
                    Rational factor = Rational(K) / Rational(K + 1);
                    for (const auto& s2 : detail::indices_of_order(K - 1, dim)) {
                        Rational arr = detail::arrangements_of(s2);
                        Poly cs = Poly::variable(jet(ghost, s2));
                        auto& lower = coeffs[s2];
                        lower.resize(static_cast<std::size_t>(dim));
                        for (int nu = 0; nu < dim; ++nu) {
                            for (int mu = 0; mu < dim; ++mu) {
                                if (nu == mu) continue;
                                Poly B = factor * (R[s2.with(nu)][static_cast<std::size_t>(mu)] - R[s2.with(mu)][static_cast<std::size_t>(nu)]);
                                if (B.is_zero()) continue;
                                out.U[static_cast<std::size_t>(nu)][static_cast<std::size_t>(mu)] += arr * (cs * B);
                                lower[static_cast<std::size_t>(mu)] -= arr * total_derivative(B, nu, chart);
                            }
                        }
                    }
                }

                // Q^Sigma -= d_mu W^{mu,Sigma}; the order K+1 part is consumed
                for (const auto& Pi : detail::indices_of_order(K + 1, dim)) q.erase(Pi);
                for (const auto& s : sigmas) {
                    for (int mu = 0; mu < dim; ++mu) {
                        add_combination(q[s], total_derivative(w_part[s][static_cast<std::size_t>(mu)], mu, chart), -1);
                    }
                }
                for (const auto& s : sigmas) coeffs.erase(s);
            }
            for (const auto& [idx, w] : q) {
                if (!evaluate(w, E, chart).is_zero()) fail(idx.order());
            }
        }

        if (divergence(expansion.remainder, chart) != Poly()) {
            throw ConsistencyError("structural equation ghost-free (d_mu J^mu = 0) fails");
        }
        bool has_remainder = false;
        for (const auto& p : expansion.remainder) has_remainder = has_remainder || !p.is_zero();
        out.exact_remainder_witness.assign(static_cast<std::size_t>(dim), std::vector<Poly>(static_cast<std::size_t>(dim)));
        if (has_remainder) {
            auto r = dH_antiderivative(expansion.remainder, chart, options);
            if (r.status == ExactnessStatus::bound_exhausted) throw ResourceError("ghost-free remainder: " + r.reason);
            if (!r.exact()) throw ConsistencyError("ghost-free remainder is not d_H-exact: " + r.reason);
            out.exact_remainder_witness = r.U;
            for (int nu = 0; nu < dim; ++nu) {
                for (int mu = 0; mu < dim; ++mu) out.U[static_cast<std::size_t>(nu)][static_cast<std::size_t>(mu)] += r.U[static_cast<std::size_t>(nu)][static_cast<std::size_t>(mu)];
            }
        }

        out.W.assign(static_cast<std::size_t>(dim), Poly());
        for (int mu = 0; mu < dim; ++mu) out.W[static_cast<std::size_t>(mu)] = evaluate(out.W_coefficients[static_cast<std::size_t>(mu)], E, chart);
        return out;
    }

    struct SplitReport
    {
        bool antisymmetric = false;
        bool reconstructs = false;
        bool W_on_shell = false;

        bool ok() const noexcept { return antisymmetric && reconstructs && W_on_shell; }
    };

    inline SplitReport verify_split(const std::vector<Poly>& J, const SuperpotentialSplit& split, const EulerLagrange& E,
                                    const Chart& chart)
    {
        SplitReport report;
        const auto dim = J.size();
        if (split.U.size() != dim || split.W.size() != dim || split.W_coefficients.size() != dim) return report;
        report.antisymmetric = true;
        for (std::size_t nu = 0; nu < dim; ++nu) {
            if (split.U[nu].size() != dim) return SplitReport{};
            for (std::size_t mu = 0; mu < dim; ++mu) {
                if (split.U[nu][mu] != -split.U[mu][nu]) report.antisymmetric = false;
            }
        }
        if (report.antisymmetric) {
            auto dU = divergence(split.U, chart);
            report.reconstructs = true;
            for (std::size_t mu = 0; mu < dim; ++mu) {
                if (J[mu] != split.W[mu] + dU[mu]) report.reconstructs = false;
            }
        }
        report.W_on_shell = true;
        for (std::size_t mu = 0; mu < dim; ++mu) {
            if (evaluate(split.W_coefficients[mu], E, chart) != split.W[mu]) report.W_on_shell = false;
        }
        return report;
    }
}
