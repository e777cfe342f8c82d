#pragma once

#include <map>
#include <memory>
#include <string>
#include <vector>

#include "vnoether/poly.hpp"

namespace vnoether
{
    // Unnormalized expression tree over named jet variables. Products keep
    // the order in which factors were written; normalize() applies the sign
    // rule of graded commutativity when bringing them to canonical form.
    struct Term
    {
        enum class Kind
        {
            constant,
            variable,
            sum,
            product,
            power
        };

        Kind kind = Kind::constant;
        Rational value = 0;
        std::string name;
        MultiIndex index;
        int exponent = 1;
        std::vector<Term> children;

        static Term constant(const Rational& q)
        {
            Term t;
            t.kind = Kind::constant;
            t.value = q;
            return t;
        }

        static Term variable(std::string name, MultiIndex index = {})
        {
            Term t;
            t.kind = Kind::variable;
            t.name = std::move(name);
            t.index = std::move(index);
            return t;
        }

        static Term sum(std::vector<Term> children)
        {
            Term t;
            t.kind = Kind::sum;
            t.children = std::move(children);
            return t;
        }

        static Term product(std::vector<Term> children)
        {
            Term t;
            t.kind = Kind::product;
            t.children = std::move(children);
            return t;
        }

        static Term power(Term base, int exponent)
        {
            Term t;
            t.kind = Kind::power;
            t.exponent = exponent;
            t.children.push_back(std::move(base));
            return t;
        }
    };

    using SymbolTable = std::map<std::string, Symbol>;

    inline Poly normalize(const Term& t, const SymbolTable& symbols)
    {
        switch (t.kind) {
            case Term::Kind::constant: return Poly(t.value);
            case Term::Kind::variable: {
                auto it = symbols.find(t.name);
                if (it == symbols.end()) throw DeclarationError("unknown symbol '" + t.name + "'");
                return Poly::variable(jet(it->second, t.index));
            }
            case Term::Kind::sum: {
                Poly p;
                for (const auto& c : t.children) p += normalize(c, symbols);
                return p;
            }
            case Term::Kind::product: {
                Poly p(1);
                for (const auto& c : t.children) p = p * normalize(c, symbols);
                return p;
            }
            case Term::Kind::power: return pow(normalize(t.children.at(0), symbols), t.exponent);
        }
        return Poly();
    }

    // Rebuilds a tree from a canonical polynomial; normalize() inverts it.
    inline Term to_term(const Poly& p)
    {
        std::vector<Term> summands;
        for (const auto& [m, c] : p.terms()) {
            std::vector<Term> factors{Term::constant(c)};
            for (const auto& [v, e] : m.even) {
                auto var = Term::variable(v.name(), v.index);
                factors.push_back(e == 1 ? var : Term::power(var, e));
            }
            for (const auto& v : m.odd) factors.push_back(Term::variable(v.name(), v.index));
            summands.push_back(Term::product(std::move(factors)));
        }
        return Term::sum(std::move(summands));
    }
}
