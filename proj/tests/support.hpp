#pragma once

// Random generators shared by the property tests. Every generator is driven
// by an explicit std::mt19937 so failures reproduce from the seed.

#include <random>
#include <set>
#include <vector>

#include "vnoether/grassmann.hpp"
#include "vnoether/poly.hpp"

namespace vnoether::testing
{
    inline int uniform(std::mt19937& rng, int lo, int hi)
    {
        return std::uniform_int_distribution<int>(lo, hi)(rng);
    }

    inline MultiIndex random_multi_index(std::mt19937& rng, int dim, int max_order)
    {
        int k = uniform(rng, 0, max_order);
        std::vector<std::uint8_t> e;
        for (int i = 0; i < k; ++i) e.push_back(static_cast<std::uint8_t>(uniform(rng, 0, dim - 1)));
        return MultiIndex(e);
    }

    struct PolyShape
    {
        int dim = 2;
        int max_order = 2;
        int max_degree = 3;
        int max_terms = 4;
        int min_degree = 0;
    };

    inline Poly random_poly(std::mt19937& rng, const std::vector<Symbol>& symbols, const PolyShape& shape)
    {
        Poly p;
        int terms = uniform(rng, 1, shape.max_terms);
        for (int t = 0; t < terms; ++t) {
            int deg = uniform(rng, shape.min_degree, shape.max_degree);
            std::vector<JetVariable> factors;
            for (int i = 0; i < deg; ++i) {
                const auto& s = symbols[static_cast<std::size_t>(uniform(rng, 0, static_cast<int>(symbols.size()) - 1))];
                if (s->kind == SymbolKind::coordinate) {
                    factors.push_back(jet(s));
                }
                else {
                    factors.push_back(jet(s, random_multi_index(rng, shape.dim, shape.max_order)));
                }
            }
            int c = 0;
            while (c == 0) c = uniform(rng, -3, 3);
            p += Poly::product(factors, Rational(c));
        }
        return p;
    }

    // Random poly whose every monomial has the requested parity.
    inline Poly random_homogeneous_poly(std::mt19937& rng, const std::vector<Symbol>& symbols, const PolyShape& shape,
                                        Parity parity)
    {
        Poly p = random_poly(rng, symbols, shape);
        Poly out;
        for (const auto& [m, c] : p.terms()) {
            if (m.parity() == parity) out.add_term(m, c);
        }
        return out;
    }

    // Even jets go to rationals in [-3, 3]; odd jets go to distinct
    // generators of an 8-generator Grassmann algebra while there are enough,
    // then to random odd linear combinations of the generators.
    inline Assignment random_point(std::mt19937& rng, const std::set<JetVariable>& variables, int generators = 8)
    {
        Assignment a;
        int next = 0;
        for (const auto& v : variables) {
            if (v.parity() == 0) {
                a.even[v] = rational(uniform(rng, -12, 12), 4);
            }
            else if (next < generators) {
                a.odd[v] = GrassmannElement::generator(next++);
            }
            else {
                GrassmannElement g;
                for (int i = 0; i < generators; ++i) g += GrassmannElement(uniform(rng, -2, 2)) * GrassmannElement::generator(i);
                a.odd[v] = g;
            }
        }
        return a;
    }

    inline std::set<JetVariable> variables_of(const std::vector<Poly>& ps)
    {
        std::set<JetVariable> vs;
        for (const auto& p : ps) {
            auto v = p.variables();
            vs.insert(v.begin(), v.end());
        }
        return vs;
    }

    // Sum of the evaluations of each term; used to re-check an identity
    // whose symbolic sum normalizes to zero without trusting normalization.
    inline GrassmannElement evaluate_sum(const std::vector<Poly>& terms, const Assignment& at)
    {
        GrassmannElement s;
        for (const auto& t : terms) s += evaluate(t, at);
        return s;
    }
}
