#include <algorithm>
#include <random>

#include <catch_amalgamated.hpp>

#include "support.hpp"
#include "vnoether/grassmann.hpp"
#include "vnoether/poly.hpp"
#include "vnoether/serialize.hpp"
#include "vnoether/term.hpp"

using namespace vnoether;
using namespace vnoether::testing;

namespace
{
    const Chart chart1{1, 6};
    const Chart chart2{2, 6};

    struct Fields
    {
        Symbol phi = make_field("phi", 0);
        Symbol chi = make_field("chi", 0);
        Symbol c = make_ghost("c", 1);
        Symbol psi = make_field("psi", 1);

        Poly v(const Symbol& s, MultiIndex idx = {}) const { return Poly::variable(jet(s, std::move(idx))); }
    };
}

TEST_CASE("odd squares vanish and like terms collect", "[normalize]")
{
    Fields f;
    SymbolTable table{{"phi", f.phi}, {"c", f.c}};
    REQUIRE(normalize(Term::product({Term::variable("c"), Term::variable("c")}), table).is_zero());
    auto doubled = normalize(Term::sum({Term::variable("phi"), Term::variable("phi")}), table);
    REQUIRE(doubled == Poly(2) * f.v(f.phi));
}

TEST_CASE("graded commutativity of odd jets", "[normalize]")
{
    Fields f;
    SymbolTable table{{"c", f.c}};
    auto c = Term::variable("c");
    auto cx = Term::variable("c", {0});
    auto c_cx = f.v(f.c) * f.v(f.c, {0});
    // c_x c + c c_x = 0 and c c_x - c_x c = 2 c c_x
    REQUIRE(normalize(Term::sum({Term::product({cx, c}), Term::product({c, cx})}), table).is_zero());
    auto diff = normalize(Term::sum({Term::product({c, cx}), Term::product({Term::constant(-1), cx, c})}), table);
    REQUIRE(diff == Poly(2) * c_cx);
}

TEST_CASE("unknown symbols are declaration errors", "[normalize]")
{
    SymbolTable table;
    REQUIRE_THROWS_AS(normalize(Term::variable("nope"), table), DeclarationError);
}

TEST_CASE("multiply examples", "[multiply]")
{
    Fields f;
    auto c = f.v(f.c), cx = f.v(f.c, {0});
    REQUIRE(c * cx == Poly::product({jet(f.c), jet(f.c, {0})}));
    REQUIRE(cx * c == -(c * cx));
    auto phi = f.v(f.phi), phix = f.v(f.phi, {0});
    REQUIRE(phi * phix == phix * phi);
    // (phi + c)(phi - c) = phi^2 - phi c + c phi - c^2 = phi^2
    REQUIRE((phi + c) * (phi - c) == phi * phi);
}

TEST_CASE("partial derivatives are left derivations", "[partial]")
{
    Fields f;
    auto phi = f.v(f.phi), c = f.v(f.c), cx = f.v(f.c, {0});
    REQUIRE(partial(phi * phi, jet(f.phi)) == Poly(2) * phi);
    REQUIRE(partial(c * cx, jet(f.c)) == cx);
    REQUIRE(partial(c * cx, jet(f.c, {0})) == -c);
    REQUIRE(partial(phi, jet(f.phi)) == Poly(1));
    REQUIRE(partial(phi * phi, jet(f.chi)).is_zero());
    // right derivative picks the factor from the right
    REQUIRE(right_partial(c * cx, jet(f.c)) == -cx);
    REQUIRE(right_partial(c * cx, jet(f.c, {0})) == c);
}

TEST_CASE("total derivative examples", "[total_derivative]")
{
    Fields f;
    auto phi = f.v(f.phi), phix = f.v(f.phi, {0}), phixx = f.v(f.phi, {0, 0});
    REQUIRE(total_derivative(phi * phix, 0, chart1) == phix * phix + phi * phixx);
    auto c = f.v(f.c), cx = f.v(f.c, {0}), cxx = f.v(f.c, {0, 0});
    REQUIRE(total_derivative(c * cx, 0, chart1) == c * cxx);
    auto dxdy = total_derivative(total_derivative(phi, 0, chart2), 1, chart2);
    auto dydx = total_derivative(total_derivative(phi, 1, chart2), 0, chart2);
    REQUIRE(dxdy == dydx);
    REQUIRE(dxdy == f.v(f.phi, {0, 1}));
}

TEST_CASE("total derivative on coordinates", "[total_derivative]")
{
    Fields f;
    auto x = make_coordinate("x", 0);
    auto y = make_coordinate("y", 1);
    auto p = Poly::variable(jet(x)) * Poly::variable(jet(x)) * f.v(f.phi) + Poly::variable(jet(y));
    auto expected = Poly(2) * Poly::variable(jet(x)) * f.v(f.phi) +
                    Poly::variable(jet(x)) * Poly::variable(jet(x)) * f.v(f.phi, {0});
    REQUIRE(total_derivative(p, 0, chart2) == expected);
}

TEST_CASE("jet cap is enforced", "[total_derivative]")
{
    Fields f;
    Chart tight{1, 2};
    auto p = f.v(f.phi, {0, 0});
    REQUIRE_THROWS_AS(total_derivative(p, 0, tight), TruncationError);
}

TEST_CASE("evaluate examples", "[evaluate]")
{
    Fields f;
    Assignment a;
    a.even[jet(f.phi)] = 3;
    a.odd[jet(f.c)] = GrassmannElement::generator(0);
    a.odd[jet(f.c, {0})] = GrassmannElement::generator(1);
    REQUIRE(evaluate(f.v(f.phi) * f.v(f.phi), a) == GrassmannElement(9));
    REQUIRE(evaluate(f.v(f.c) * f.v(f.c), a).is_zero());
    REQUIRE(evaluate(f.v(f.c) * f.v(f.c, {0}), a) == GrassmannElement::generator(0) * GrassmannElement::generator(1));
    REQUIRE_THROWS_AS(evaluate(f.v(f.chi), a), EvaluationError);
}

TEST_CASE("Grassmann generators anticommute", "[evaluate]")
{
    auto t0 = GrassmannElement::generator(0), t1 = GrassmannElement::generator(1);
    REQUIRE(t0 * t1 == GrassmannElement(-1) * (t1 * t0));
    REQUIRE((t0 * t0).is_zero());
}

TEST_CASE("canonical form is independent of association and order", "[normalize][property]")
{
    Fields f;
    SymbolTable table{{"phi", f.phi}, {"chi", f.chi}, {"c", f.c}, {"psi", f.psi}};
    std::vector<Symbol> syms{f.phi, f.chi, f.c, f.psi};
    std::mt19937 rng(11);
    for (int trial = 0; trial < 100; ++trial) {
        // a sum of products with random factor order; the reordered tree
        // carries the permutation sign of its odd factors explicitly
        std::vector<Term> summands, shuffled;
        for (int s = 0; s < 3; ++s) {
            std::vector<JetVariable> factors;
            int deg = uniform(rng, 1, 4);
            for (int i = 0; i < deg; ++i) {
                auto sym = syms[static_cast<std::size_t>(uniform(rng, 0, 3))];
                factors.push_back(jet(sym, random_multi_index(rng, 2, 2)));
            }
            std::vector<std::size_t> perm(factors.size());
            for (std::size_t i = 0; i < perm.size(); ++i) perm[i] = i;
            std::shuffle(perm.begin(), perm.end(), rng);
            int swaps = 0;
            for (std::size_t i = 0; i < perm.size(); ++i) {
                for (std::size_t j = i + 1; j < perm.size(); ++j) {
                    if (perm[i] > perm[j] && factors[perm[i]].parity() == 1 && factors[perm[j]].parity() == 1) ++swaps;
                }
            }
            std::vector<Term> a{Term::constant(2)}, b{Term::constant(2 * sign_of(swaps))};
            for (auto& v : factors) a.push_back(Term::variable(v.name(), v.index));
            for (auto i : perm) b.push_back(Term::variable(factors[i].name(), factors[i].index));
            summands.push_back(Term::product(a));
            // nest to vary association
            shuffled.push_back(Term::product({Term::product(b), Term::constant(1)}));
        }
        std::reverse(shuffled.begin(), shuffled.end());
        auto p = normalize(Term::sum(summands), table);
        auto q = normalize(Term::sum({Term::sum(shuffled)}), table);
        REQUIRE(p == q);
        REQUIRE(normalize(to_term(p), table) == p);
    }
}

TEST_CASE("graded commutativity on random homogeneous pairs", "[multiply][property]")
{
    Fields f;
    std::vector<Symbol> syms{f.phi, f.chi, f.c, f.psi};
    std::mt19937 rng(7);
    PolyShape shape{2, 2, 3, 3};
    for (int trial = 0; trial < 200; ++trial) {
        Parity pp = uniform(rng, 0, 1), pq = uniform(rng, 0, 1);
        auto p = random_homogeneous_poly(rng, syms, shape, pp);
        auto q = random_homogeneous_poly(rng, syms, shape, pq);
        REQUIRE(p * q == Poly(sign_of(pp * pq)) * (q * p));
    }
}

TEST_CASE("total derivatives commute up to jet order 3", "[total_derivative][property]")
{
    Fields f;
    auto x = make_coordinate("x", 0);
    std::vector<Symbol> syms{f.phi, f.chi, f.c, f.psi, x};
    std::mt19937 rng(5);
    Chart chart{3, 6};
    PolyShape shape{3, 3, 3, 4};
    for (int trial = 0; trial < 100; ++trial) {
        auto p = random_poly(rng, syms, shape);
        int a = uniform(rng, 0, 2), b = uniform(rng, 0, 2);
        REQUIRE(total_derivative(total_derivative(p, a, chart), b, chart) ==
                total_derivative(total_derivative(p, b, chart), a, chart));
    }
}

TEST_CASE("total derivative satisfies Leibniz", "[total_derivative][property]")
{
    Fields f;
    std::vector<Symbol> syms{f.phi, f.c, f.psi};
    std::mt19937 rng(3);
    PolyShape shape{2, 2, 2, 3};
    for (int trial = 0; trial < 100; ++trial) {
        auto p = random_poly(rng, syms, shape);
        auto q = random_poly(rng, syms, shape);
        REQUIRE(total_derivative(p * q, 1, chart2) ==
                total_derivative(p, 1, chart2) * q + p * total_derivative(q, 1, chart2));
    }
}

TEST_CASE("evaluate is a ring homomorphism", "[evaluate][property]")
{
    Fields f;
    std::vector<Symbol> syms{f.phi, f.chi, f.c, f.psi};
    std::mt19937 rng(19);
    PolyShape shape{2, 1, 3, 3};
    for (int trial = 0; trial < 100; ++trial) {
        auto p = random_poly(rng, syms, shape);
        auto q = random_poly(rng, syms, shape);
        auto point = random_point(rng, variables_of({p, q}), 4);
        auto ep = evaluate(p, point), eq = evaluate(q, point);
        REQUIRE(evaluate(p + q, point) == ep + eq);
        REQUIRE(evaluate(p * q, point) == ep * eq);
    }
}

TEST_CASE("left derivation agrees with the partial-derivative expansion", "[derivation][property]")
{
    Fields f;
    std::vector<Symbol> syms{f.phi, f.c, f.psi};
    std::mt19937 rng(23);
    PolyShape shape{1, 1, 3, 3};
    for (int trial = 0; trial < 50; ++trial) {
        auto p = random_poly(rng, syms, shape);
        Parity dpar = uniform(rng, 0, 1);
        std::map<JetVariable, Poly> images;
        for (const auto& v : p.variables()) {
            images[v] = random_homogeneous_poly(rng, syms, {1, 1, 2, 2}, parity_sum(v.parity(), dpar));
        }
        auto on_gen = [&](const JetVariable& v) { return images.count(v) ? images.at(v) : Poly(); };
        Poly expected;
        for (const auto& [v, img] : images) expected += img * partial(p, v);
        REQUIRE(apply_left_derivation(p, dpar, on_gen) == expected);
    }
}

TEST_CASE("structured serialization", "[serialize]")
{
    Fields f;
    auto p = Poly(Rational(-1, 2)) * f.v(f.phi, {0}) * f.v(f.phi, {0}) + f.v(f.c) * f.v(f.c, {0});
    auto j = to_json(p);
    REQUIRE(j.size() == 2);
    // graded-lex: at equal degree the monomial without even factors sorts first
    REQUIRE(j[0]["coeff"] == "1/1");
    REQUIRE(j[0]["odd"].size() == 2);
    REQUIRE(j[0]["odd"][1] == Json::array({"c", Json::array({0})}));
    REQUIRE(j[1]["coeff"] == "-1/2");
    REQUIRE(j[1]["even"][0][0] == "phi");
    REQUIRE(j[1]["even"][0][1] == Json::array({0}));
    REQUIRE(j[1]["even"][0][2] == 2);
    REQUIRE(p.to_string() == "c*c_{,0} - 1/2*phi_{,0}^2");
}
