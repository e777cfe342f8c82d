#pragma once

#include <map>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "vnoether/ansatz.hpp"
#include "vnoether/derivation.hpp"
#include "vnoether/forms.hpp"
#include "vnoether/linear_solve.hpp"
#include "vnoether/poly.hpp"

namespace vnoether
{
    // L = density * omega on a chart, together with the fields it is varied in.
    struct Lagrangian
    {
        Poly density;
        Chart chart;
        std::vector<Symbol> fields;

        // Declared fields, or the non-coordinate symbols of the density when
        // none are declared.
        std::vector<Symbol> variables() const
        {
            if (!fields.empty()) return fields;
            std::vector<Symbol> out;
            std::set<JetVariable> seen;
            for (const auto& v : density.variables()) {
                if (v.is_coordinate()) continue;
                if (seen.insert(jet(v.symbol)).second) out.push_back(v.symbol);
            }
            return out;
        }

        Parity parity() const
        {
            auto p = density.homogeneous_parity();
            if (!p) throw ConsistencyError("Lagrangian density is not parity-homogeneous");
            return *p;
        }

        MixedForm form() const { return density_form(density, chart.dim); }
    };

    // Euler-Lagrange expressions E_A keyed by the field's order-zero jet.
    using EulerLagrange = std::map<JetVariable, Poly>;

    // Jets of `field` present in p, i.e. the multi-indices Lambda with
    // partial^Lambda_A p possibly non-zero.
    inline std::vector<MultiIndex> jet_indices_of(const Poly& p, const Symbol& field)
    {
        std::set<MultiIndex> out;
        for (const auto& v : p.variables()) {
            if (!v.is_coordinate() && same_symbol(v.symbol, field)) out.insert(v.index);
        }
        return {out.begin(), out.end()};
    }

    // E_A = sum_Lambda (-1)^{|Lambda|} d_Lambda(partial^Lambda_A f)
    inline Poly euler_lagrange_component(const Poly& f, const Symbol& field, const Chart& chart)
    {
        Poly out;
        for (const auto& idx : jet_indices_of(f, field)) {
            Poly term = total_derivative(partial(f, jet(field, idx)), idx, chart);
            out += Rational(sign_of(idx.order())) * term;
        }
        return out;
    }

    inline EulerLagrange euler_lagrange(const Lagrangian& L)
    {
        EulerLagrange out;
        for (const auto& s : L.variables()) out[jet(s)] = euler_lagrange_component(L.density, s, L.chart);
        return out;
    }

    // delta L = theta^A ^ E_A omega
    inline MixedForm euler_lagrange_form(const EulerLagrange& E, int dim)
    {
        MixedForm out;
        for (const auto& [field, e] : E) {
            out += wedge(MixedForm::contact(field), density_form(e, dim));
        }
        return out;
    }

    // Coefficients F^Lambda_A of the Lepage equivalent with all free
    // functions set to zero, F^Lambda = hat-partial^Lambda L - d_lambda F^{lambda+Lambda},
    // for |Lambda| >= 1. The normalized derivative divides by the number of
    // orderings of Lambda.
    inline std::map<JetVariable, Poly> lepage_coefficients(const Lagrangian& L)
    {
        std::map<JetVariable, Poly> F;
        const Chart& chart = L.chart;
        for (const auto& field : L.variables()) {
            int top = 0;
            for (const auto& idx : jet_indices_of(L.density, field)) top = std::max(top, idx.order());
            for (int k = top; k >= 1; --k) {
                for (const auto& idx : multi_indices_of_order(chart.dim, k)) {
                    Poly value = rational(1, static_cast<long>(idx.arrangements())) * partial(L.density, jet(field, idx));
                    if (k < top) {
                        for (int lambda = 0; lambda < chart.dim; ++lambda) {
                            auto it = F.find(jet(field, idx.with(lambda)));
                            if (it != F.end()) value -= total_derivative(it->second, lambda, chart);
                        }
                    }
                    if (!value.is_zero()) F[jet(field, idx)] = std::move(value);
                }
            }
        }
        return F;
    }

    // Xi_L = L + sum theta^A_Lambda ^ F^{lambda+Lambda}_A omega_lambda, summed
    // over ordered index tuples Lambda.
    inline MixedForm lepage(const Lagrangian& L)
    {
        const int dim = L.chart.dim;
        MixedForm xi = L.form();
        for (const auto& [label, f] : lepage_coefficients(L)) {
            const MultiIndex& full = label.index;
            std::set<int> seen;
            for (auto lambda : full.entries()) {
                if (!seen.insert(lambda).second) continue;
                MultiIndex rest = full.without(lambda);
                Rational orderings(static_cast<long>(rest.arrangements()));
                MixedForm contact = MixedForm::contact(jet(label.symbol, rest));
                xi += orderings * wedge(contact, wedge(MixedForm::function(f), omega_mu(lambda, dim)));
            }
        }
        return xi;
    }

    // dL - delta L + d_H Xi == 0
    inline bool check_lepage(const Lagrangian& L, const MixedForm& xi)
    {
        MixedForm residual = exterior_d(L.form(), L.chart) - euler_lagrange_form(euler_lagrange(L), L.chart.dim) +
                             d_H(xi, L.chart);
        return residual.is_zero();
    }

    inline bool check_lepage(const Lagrangian& L) { return check_lepage(L, lepage(L)); }

    inline void require_vertical(const GeneralizedVectorField& upsilon)
    {
        if (!upsilon.is_vertical()) throw UnsupportedError("only vertical derivations are supported here");
    }

    // L_theta L - theta | delta L - d_H(h0(theta | Xi_L)) for vertical upsilon.
    inline MixedForm first_variational_residual(const GeneralizedVectorField& upsilon, const Lagrangian& L)
    {
        require_vertical(upsilon);
        ContactDerivation theta = prolong(upsilon, L.chart);
        MixedForm lie = lie_derivative(theta, L.form());
        MixedForm vertical = contract(theta, euler_lagrange_form(euler_lagrange(L), L.chart.dim));
        MixedForm boundary = d_H(h0(contract(theta, lepage(L))), L.chart);
        return lie - vertical - boundary;
    }

    enum class ExactnessStatus
    {
        exact,
        not_exact,
        bound_exhausted
    };

    inline const char* to_string(ExactnessStatus s)
    {
        switch (s) {
            case ExactnessStatus::exact: return "exact";
            case ExactnessStatus::not_exact: return "not_exact";
            case ExactnessStatus::bound_exhausted: return "bound_exhausted";
        }
        return "?";
    }

    // Witness for a density f = d_mu sigma^mu.
    struct DensityAntiderivative
    {
        ExactnessStatus status = ExactnessStatus::not_exact;
        std::vector<Poly> sigma;
        std::string reason;

        bool exact() const noexcept { return status == ExactnessStatus::exact; }
    };

    // Witness for a current J^mu = d_nu U^{nu mu}, U antisymmetric.
    struct CurrentAntiderivative
    {
        ExactnessStatus status = ExactnessStatus::not_exact;
        std::vector<std::vector<Poly>> U;
        std::string reason;

        bool exact() const noexcept { return status == ExactnessStatus::exact; }
    };

    namespace detail
    {
        struct AnsatzBounds
        {
            int max_coordinate_degree = 0;
            int max_degree = 0;
            int max_order = 0;
        };

        inline AnsatzBounds ansatz_bounds(const std::vector<Poly>& target, const Chart& chart, const AnsatzOptions& options)
        {
            int coord = 0, degree = 0;
            for (const auto& p : target) {
                for (const auto& [m, c] : p.terms()) {
                    coord = std::max(coord, coordinate_degree(m));
                    degree = std::max(degree, m.degree());
                }
            }
            return {coord + 1, std::max(degree + 1, options.degree), chart.jet_cap - 1};
        }

        // Candidate monomials of the given content and scaling weight within the bounds.
        inline std::vector<Monomial> candidates(const Content& content, const std::vector<int>& weight,
                                                const AnsatzBounds& bounds, const std::vector<Symbol>& coordinates)
        {
            int coord_room = std::min(bounds.max_coordinate_degree, bounds.max_degree - static_cast<int>(content.size()));
            if (coord_room < 0) return {};
            return monomials_with_weight(content, weight, coord_room, bounds.max_order, coordinates);
        }

        inline std::vector<int> minus_unit(std::vector<int> w, int mu)
        {
            --w[static_cast<std::size_t>(mu)];
            return w;
        }

        inline void check_unknowns(std::size_t count, const AnsatzOptions& options)
        {
            if (count > options.max_unknowns) {
                throw ResourceError("ansatz needs " + std::to_string(count) + " unknowns, above the limit of " +
                                    std::to_string(options.max_unknowns));
            }
        }
    }

    // Non-zero Euler-Lagrange expression of f, if any; a density with one is
    // not d_H-exact.
    inline std::optional<std::string> exactness_obstruction(const Poly& f, const Chart& chart)
    {
        std::set<JetVariable> fields;
        for (const auto& v : f.variables()) {
            if (!v.is_coordinate()) fields.insert(jet(v.symbol));
        }
        for (const auto& field : fields) {
            if (!euler_lagrange_component(f, field.symbol, chart).is_zero()) {
                return "Euler-Lagrange expression with respect to " + field.name() + " is non-zero";
            }
        }
        return std::nullopt;
    }

    // Solves d_mu sigma^mu = f over a polynomial ansatz graded by field content
    // and scaling weight.
    inline DensityAntiderivative dH_antiderivative(const Poly& f, const Chart& chart, const AnsatzOptions& options = {})
    {
        const int dim = chart.dim;
        DensityAntiderivative result;
        result.sigma.assign(static_cast<std::size_t>(dim), Poly());
        if (f.is_zero()) {
            result.status = ExactnessStatus::exact;
            return result;
        }
        if (auto why = exactness_obstruction(f, chart)) {
            result.status = ExactnessStatus::not_exact;
            result.reason = *why;
            return result;
        }
        auto bounds = detail::ansatz_bounds({f}, chart, options);
        auto coordinates = coordinates_of({f}, dim);

        std::map<Content, Poly> blocks;
        for (const auto& [m, c] : f.terms()) blocks[field_content(m)].add_term(m, c);

        std::size_t total_unknowns = 0;
        for (const auto& [content, target] : blocks) {
            std::vector<std::set<Monomial>> unknowns(static_cast<std::size_t>(dim));
            std::set<std::vector<int>> weights;
            for (const auto& [m, c] : target.terms()) weights.insert(scaling_weight(m, dim));
            for (const auto& w : weights) {
                for (int mu = 0; mu < dim; ++mu) {
                    for (auto& m : detail::candidates(content, detail::minus_unit(w, mu), bounds, coordinates)) {
                        unknowns[static_cast<std::size_t>(mu)].insert(std::move(m));
                    }
                }
            }
            std::vector<std::pair<int, Monomial>> columns_key;
            std::vector<Poly> columns;
            for (int mu = 0; mu < dim; ++mu) {
                for (const auto& m : unknowns[static_cast<std::size_t>(mu)]) {
                    columns_key.emplace_back(mu, m);
                    columns.push_back(total_derivative(Poly::monomial(m), mu, chart));
                }
            }
            total_unknowns += columns.size();
            detail::check_unknowns(total_unknowns, options);
            auto solution = solve_polynomial_combination(columns, target);
            if (!solution) {
                result.status = ExactnessStatus::bound_exhausted;
                result.reason = "no antiderivative within the ansatz bound (degree " + std::to_string(bounds.max_degree) + ")";
                result.sigma.assign(static_cast<std::size_t>(dim), Poly());
                return result;
            }
            for (std::size_t j = 0; j < columns_key.size(); ++j) {
                const Rational& x = (*solution)[j];
                if (x != 0) result.sigma[static_cast<std::size_t>(columns_key[j].first)].add_term(columns_key[j].second, x);
            }
        }
        if (divergence(result.sigma, chart) != f) throw ConsistencyError("antiderivative failed re-verification");
        result.status = ExactnessStatus::exact;
        return result;
    }

    // Solves d_nu U^{nu mu} = J^mu with U antisymmetric.
    inline CurrentAntiderivative dH_antiderivative(const std::vector<Poly>& J, const Chart& chart,
                                                   const AnsatzOptions& options = {})
    {
        const int dim = chart.dim;
        CurrentAntiderivative result;
        result.U.assign(static_cast<std::size_t>(dim), std::vector<Poly>(static_cast<std::size_t>(dim)));
        bool zero = true;
        for (const auto& j : J) zero = zero && j.is_zero();
        if (zero) {
            result.status = ExactnessStatus::exact;
            return result;
        }
        if (static_cast<int>(J.size()) != dim) throw UnsupportedError("current has the wrong number of components");
        if (!divergence(J, chart).is_zero()) {
            result.status = ExactnessStatus::not_exact;
            result.reason = "current is not d_H-closed";
            return result;
        }
        if (dim < 2) {
            result.status = ExactnessStatus::not_exact;
            result.reason = "a non-zero constant function is not d_H-exact";
            return result;
        }
        auto bounds = detail::ansatz_bounds(J, chart, options);
        auto coordinates = coordinates_of(J, dim);

        std::map<Content, std::vector<Poly>> blocks;
        for (int mu = 0; mu < dim; ++mu) {
            for (const auto& [m, c] : J[static_cast<std::size_t>(mu)].terms()) {
                auto& block = blocks[field_content(m)];
                block.resize(static_cast<std::size_t>(dim));
                block[static_cast<std::size_t>(mu)].add_term(m, c);
            }
        }

        std::size_t total_unknowns = 0;
        for (const auto& [content, target] : blocks) {
            // unknowns U^{ab}, a < b
            std::map<std::pair<int, int>, std::set<Monomial>> unknowns;
            for (int mu = 0; mu < dim; ++mu) {
                std::set<std::vector<int>> weights;
                for (const auto& [m, c] : target[static_cast<std::size_t>(mu)].terms()) weights.insert(scaling_weight(m, dim));
                for (const auto& w : weights) {
                    for (int nu = 0; nu < dim; ++nu) {
                        if (nu == mu) continue;
                        auto& slot = unknowns[{std::min(nu, mu), std::max(nu, mu)}];
                        for (auto& m : detail::candidates(content, detail::minus_unit(w, nu), bounds, coordinates)) {
                            slot.insert(std::move(m));
                        }
                    }
                }
            }
            std::vector<std::tuple<int, int, Monomial>> columns_key;
            std::vector<std::vector<Poly>> columns;
            for (const auto& [pair, monomials] : unknowns) {
                auto [a, b] = pair;
                for (const auto& m : monomials) {
                    std::vector<Poly> image(static_cast<std::size_t>(dim));
                    Poly u = Poly::monomial(m);
                    // J^b gets d_a U^{ab}, J^a gets d_b U^{ba} = -d_b U^{ab}
                    image[static_cast<std::size_t>(b)] = total_derivative(u, a, chart);
                    image[static_cast<std::size_t>(a)] = -total_derivative(u, b, chart);
                    columns_key.emplace_back(a, b, m);
                    columns.push_back(std::move(image));
                }
            }
            total_unknowns += columns.size();
            detail::check_unknowns(total_unknowns, options);
            auto solution = solve_polynomial_combination(columns, target);
            if (!solution) {
                result.status = ExactnessStatus::bound_exhausted;
                result.reason = "no superpotential within the ansatz bound (degree " + std::to_string(bounds.max_degree) + ")";
                result.U.assign(static_cast<std::size_t>(dim), std::vector<Poly>(static_cast<std::size_t>(dim)));
                return result;
            }
            for (std::size_t j = 0; j < columns_key.size(); ++j) {
                const Rational& x = (*solution)[j];
                if (x == 0) continue;
                const auto& [a, b, m] = columns_key[j];
                result.U[static_cast<std::size_t>(a)][static_cast<std::size_t>(b)].add_term(m, x);
                result.U[static_cast<std::size_t>(b)][static_cast<std::size_t>(a)].add_term(m, -x);
            }
        }
        if (divergence(result.U, chart) != J) throw ConsistencyError("superpotential failed re-verification");
        result.status = ExactnessStatus::exact;
        return result;
    }

    // Horizontal-form front end: degree n densities and degree n-1 currents.
    struct FormAntiderivative
    {
        ExactnessStatus status = ExactnessStatus::not_exact;
        HorizontalForm sigma;
        std::string reason;
    };

    inline FormAntiderivative dH_antiderivative(const HorizontalForm& rho, const Chart& chart,
                                                const AnsatzOptions& options = {})
    {
        const int dim = chart.dim;
        FormAntiderivative out;
        if (rho.degree() == dim) {
            auto r = dH_antiderivative(density_of(rho.to_mixed(), dim), chart, options);
            out.status = r.status;
            out.reason = r.reason;
            out.sigma = HorizontalForm::from_mixed(current_form(r.sigma), dim - 1);
        }
        else if (rho.degree() == dim - 1) {
            auto r = dH_antiderivative(current_components(rho.to_mixed(), dim), chart, options);
            out.status = r.status;
            out.reason = r.reason;
            out.sigma = HorizontalForm::from_mixed(superpotential_form(r.U), std::max(dim - 2, 0));
        }
        else {
            throw UnsupportedError("antiderivatives are computed for horizontal forms of degree n and n-1 only");
        }
        return out;
    }

    struct SymmetryResult
    {
        bool is_symmetry = false;
        ExactnessStatus status = ExactnessStatus::not_exact;
        // L_theta L, the density whose antiderivative is sought.
        Poly variation;
        std::vector<Poly> sigma;
        std::string reason;
    };

    // Decides whether L_theta L = d_H sigma for some sigma.
    inline SymmetryResult is_variational_symmetry(const GeneralizedVectorField& upsilon, const Lagrangian& L,
                                                  const AnsatzOptions& options = {})
    {
        require_vertical(upsilon);
        ContactDerivation theta = prolong(upsilon, L.chart);
        SymmetryResult result;
        result.variation = theta.apply(L.density);
        auto r = dH_antiderivative(result.variation, L.chart, options);
        result.status = r.status;
        result.reason = r.reason;
        result.is_symmetry = r.exact();
        if (result.is_symmetry) result.sigma = std::move(r.sigma);
        return result;
    }

    // J = sigma - h0(theta | Xi_L), given sigma with L_theta L = d_H sigma.
    inline std::vector<Poly> noether_current(const GeneralizedVectorField& upsilon, const Lagrangian& L,
                                             const std::vector<Poly>& sigma)
    {
        require_vertical(upsilon);
        const int dim = L.chart.dim;
        if (static_cast<int>(sigma.size()) != dim) throw ConsistencyError("sigma has the wrong number of components");
        ContactDerivation theta = prolong(upsilon, L.chart);
        if (divergence(sigma, L.chart) != theta.apply(L.density)) {
            throw ConsistencyError("sigma does not satisfy L_theta L = d_H sigma");
        }
        auto boundary = current_components(h0(contract(theta, lepage(L))), dim);
        std::vector<Poly> J(static_cast<std::size_t>(dim));
        for (int mu = 0; mu < dim; ++mu) J[static_cast<std::size_t>(mu)] = sigma[static_cast<std::size_t>(mu)] - boundary[static_cast<std::size_t>(mu)];
        return J;
    }

    // Coefficients w^{A,Lambda} keyed by jet(A, Lambda) with
    // target = sum w^{A,Lambda} d_Lambda E_A, the w written on the left.
    struct WeakWitness
    {
        bool found = false;
        bool bound_exhausted = false;
        std::map<JetVariable, Poly> coefficients;
        std::string reason;
    };

    namespace detail
    {
        // Content including coordinate symbols, so that products add contents.
        inline Content full_content(const Monomial& m)
        {
            Content out = field_content(m);
            for (const auto& [v, e] : m.even) {
                if (!v.is_coordinate()) continue;
                for (int i = 0; i < e; ++i) out.push_back(v);
            }
            std::sort(out.begin(), out.end());
            return out;
        }

        inline std::optional<Content> content_difference(const Content& big, const Content& small)
        {
            Content out;
            std::size_t j = 0;
            for (const auto& v : big) {
                if (j < small.size() && small[j] == v) {
                    ++j;
                }
                else {
                    out.push_back(v);
                }
            }
            if (j != small.size()) return std::nullopt;
            return out;
        }

        // Monomials with a content that may include coordinates and given derivative counts.
        inline std::vector<Monomial> monomials_with_full_content(const Content& content, const std::vector<int>& counts, int max_order)
        {
            Content fields;
            std::vector<JetVariable> coords;
            for (const auto& v : content) (v.is_coordinate() ? coords : fields).push_back(v);
            auto out = monomials_with_counts(fields, counts, max_order);
            for (auto& m : out) {
                for (const auto& x : coords) insert_even(m.even, x, 1);
            }
            return out;
        }
    }

    inline WeakWitness weak_conservation_witness(const Poly& target, const EulerLagrange& E, const Chart& chart,
                                                 const AnsatzOptions& options = {})
    {
        WeakWitness result;
        if (target.is_zero()) {
            result.found = true;
            return result;
        }
        const int dim = chart.dim;
        int target_order = target.jet_order();

        // d_Lambda E_A for every admissible Lambda
        std::vector<std::pair<JetVariable, Poly>> generators;
        for (const auto& [field, e] : E) {
            if (e.is_zero()) continue;
            int room = std::max(0, target_order - e.jet_order());
            for (const auto& idx : multi_indices_up_to(dim, room)) {
                Poly d;
                try {
                    d = total_derivative(e, idx, chart);
                }
                catch (const TruncationError&) {
                    continue;
                }
                if (!d.is_zero()) generators.emplace_back(jet(field.symbol, idx), std::move(d));
            }
        }
        if (generators.empty()) {
            result.reason = "the Euler-Lagrange expressions vanish identically";
            return result;
        }

        std::vector<std::set<Monomial>> unknowns(generators.size());
        auto add_candidates = [&](const Monomial& m) {
            Content content = detail::full_content(m);
            auto counts = derivative_counts(m, dim);
            for (std::size_t g = 0; g < generators.size(); ++g) {
                for (const auto& [e, c] : generators[g].second.terms()) {
                    auto rest = detail::content_difference(content, detail::full_content(e));
                    if (!rest) continue;
                    auto ec = derivative_counts(e, dim);
                    std::vector<int> need = counts;
                    bool ok = true;
                    for (int i = 0; i < dim; ++i) {
                        need[static_cast<std::size_t>(i)] -= ec[static_cast<std::size_t>(i)];
                        ok = ok && need[static_cast<std::size_t>(i)] >= 0;
                    }
                    if (!ok) continue;
                    for (auto& w : detail::monomials_with_full_content(*rest, need, chart.jet_cap)) unknowns[g].insert(std::move(w));
                }
            }
        };
        for (const auto& [m, c] : target.terms()) add_candidates(m);

        // A second pass seeds candidates from the monomials the first ansatz
        // produces, which covers witnesses whose products cancel on the target.
        for (int pass = 0; pass < 2; ++pass) {
            std::vector<std::pair<std::size_t, Monomial>> keys;
            std::vector<Poly> columns;
            for (std::size_t g = 0; g < generators.size(); ++g) {
                for (const auto& m : unknowns[g]) {
                    keys.emplace_back(g, m);
                    columns.push_back(Poly::monomial(m) * generators[g].second);
                }
            }
            detail::check_unknowns(columns.size(), options);
            if (auto solution = solve_polynomial_combination(columns, target)) {
                for (std::size_t j = 0; j < keys.size(); ++j) {
                    const Rational& x = (*solution)[j];
                    if (x != 0) result.coefficients[generators[keys[j].first].first].add_term(keys[j].second, x);
                }
                Poly check;
                for (const auto& [key, w] : result.coefficients) {
                    for (const auto& [label, d] : generators) {
                        if (label == key) check += w * d;
                    }
                }
                if (check != target) throw ConsistencyError("weak conservation witness failed re-verification");
                result.found = true;
                return result;
            }
            if (pass == 0) {
                std::set<Monomial> seen;
                for (const auto& col : columns) {
                    for (const auto& [m, c] : col.terms()) seen.insert(m);
                }
                for (const auto& m : seen) add_candidates(m);
            }
        }
        result.bound_exhausted = true;
        result.reason = "no witness within the ansatz bound";
        return result;
    }

    inline WeakWitness weak_conservation_witness(const std::vector<Poly>& J, const EulerLagrange& E, const Chart& chart,
                                                 const AnsatzOptions& options = {})
    {
        return weak_conservation_witness(divergence(J, chart), E, chart, options);
    }
}
