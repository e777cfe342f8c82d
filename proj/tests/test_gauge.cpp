#include <random>

#include <catch_amalgamated.hpp>

#include "support.hpp"
#include "vnoether/gauge.hpp"

using namespace vnoether;
using namespace vnoether::testing;

namespace
{
    MultiIndex mi(std::initializer_list<int> e)
    {
        std::vector<std::uint8_t> v;
        for (int x : e) v.push_back(static_cast<std::uint8_t>(x));
        return MultiIndex(v);
    }

    Poly var(const Symbol& s, MultiIndex idx = {}) { return Poly::variable(jet(s, std::move(idx))); }

    struct Maxwell2
    {
        Symbol A0 = make_field("A0", 0);
        Symbol A1 = make_field("A1", 0);
        Symbol c = make_ghost("c", 1);
        Chart chart{2, 6};

        const Symbol& A(int nu) const { return nu == 0 ? A0 : A1; }
        Poly F(int mu, int nu) const { return var(A(nu), mi({mu})) - var(A(mu), mi({nu})); }

        Lagrangian lagrangian() const
        {
            Poly density;
            for (int mu = 0; mu < 2; ++mu) {
                for (int nu = 0; nu < 2; ++nu) density += rational(-1, 4) * F(mu, nu) * F(mu, nu);
            }
            return Lagrangian{density, chart, {A0, A1}};
        }

        NoetherOperator identity() const
        {
            NoetherOperator d;
            d.label = "gauss";
            d.coefficients[jet(A0, mi({0}))] = Poly(1);
            d.coefficients[jet(A1, mi({1}))] = Poly(1);
            return d;
        }
    };

    struct Fields
    {
        Symbol phi = make_field("phi", 0);
        Symbol chi = make_field("chi", 0);
        Symbol psi = make_field("psi", 1);
        Symbol c = make_ghost("c", 1);
    };

    // Random density of the given antifield number built from field jets and
    // antifield jets of phi and psi.
    Poly random_antifield_density(std::mt19937& rng, const Fields& f, int dim, int number, int max_order = 2)
    {
        std::vector<Symbol> antifields{make_antifield(f.phi), make_antifield(f.psi)};
        Poly out;
        for (int t = 0; t < 3; ++t) {
            Poly term = random_poly(rng, {f.phi, f.psi}, PolyShape{dim, 2, 2, 2, 0});
            for (int k = 0; k < number; ++k) {
                const auto& s = antifields[static_cast<std::size_t>(uniform(rng, 0, 1))];
                term = term * var(s, random_multi_index(rng, dim, max_order));
            }
            out += term;
        }
        // keep one parity so the boundary is a homogeneous operator
        Parity keep = static_cast<Parity>(uniform(rng, 0, 1));
        Poly homogeneous;
        for (const auto& [m, c] : out.terms()) {
            if (m.parity() == keep) homogeneous.add_term(m, c);
        }
        return homogeneous;
    }

    Lagrangian random_lagrangian(std::mt19937& rng, const Fields& f, int dim)
    {
        Poly density = random_homogeneous_poly(rng, {f.phi, f.psi}, PolyShape{dim, 1, 3, 3, 2}, 0);
        return Lagrangian{density, Chart{dim, 6}, {f.phi, f.psi}};
    }
}

TEST_CASE("Koszul-Tate differential", "[koszul_tate]")
{
    Fields f;
    Chart chart{1, 6};
    Lagrangian L{rational(1, 2) * pow(var(f.phi, mi({0})), 2), chart, {f.phi}};
    auto E = euler_lagrange(L);
    REQUIRE(koszul_tate(var(make_antifield(f.phi)), E, chart) == -var(f.phi, mi({0, 0})));

    Maxwell2 m;
    auto Em = euler_lagrange(m.lagrangian());
    Poly divergence_of_antifields = var(make_antifield(m.A0), mi({0})) + var(make_antifield(m.A1), mi({1}));
    REQUIRE(koszul_tate(divergence_of_antifields, Em, m.chart).is_zero());

    REQUIRE_THROWS_AS(koszul_tate(var(make_antifield(f.chi)), E, chart), DeclarationError);
}

TEST_CASE("Koszul-Tate differential is nilpotent", "[koszul_tate][property]")
{
    Fields f;
    std::mt19937 rng(12);
    for (int trial = 0; trial < 110; ++trial) {
        int dim = uniform(rng, 1, 2);
        auto L = random_lagrangian(rng, f, dim);
        auto E = euler_lagrange(L);
        int number = uniform(rng, 0, 2);
        Poly phi = random_antifield_density(rng, f, dim, number);
        CAPTURE(trial, phi.to_string());
        Poly once = koszul_tate(phi, E, L.chart);
        if (!once.is_zero()) REQUIRE(antifield_number(once) == std::optional<int>(number - 1));
        REQUIRE(koszul_tate(once, E, L.chart).is_zero());
    }
}

TEST_CASE("Noether identities", "[noether_identity]")
{
    Maxwell2 m;
    REQUIRE(check_noether_identity(m.identity(), euler_lagrange(m.lagrangian()), m.chart));
    REQUIRE(m.identity().parity() == 1);

    Fields f;
    Chart chart{1, 6};
    Lagrangian L{rational(1, 2) * pow(var(f.phi, mi({0})), 2), chart, {f.phi}};
    NoetherOperator shift;
    shift.coefficients[jet(f.phi)] = Poly(1);
    REQUIRE_FALSE(check_noether_identity(shift, euler_lagrange(L), chart));

    // boundaries of antifield-number-two densities are identities
    std::mt19937 rng(3);
    for (int trial = 0; trial < 30; ++trial) {
        int dim = uniform(rng, 1, 2);
        auto Lr = random_lagrangian(rng, f, dim);
        auto E = euler_lagrange(Lr);
        Poly boundary = koszul_tate(random_antifield_density(rng, f, dim, 2), E, Lr.chart);
        auto delta = noether_operator_from_density(boundary, {f.phi, f.psi});
        REQUIRE(delta.density() == boundary);
        REQUIRE(check_noether_identity(delta, E, Lr.chart));
    }
}

TEST_CASE("adjoint operator", "[adjoint]")
{
    Fields f;
    Chart chart{1, 6};
    Symbol A = f.chi;

    NoetherOperator scalar;
    scalar.coefficients[jet(A)] = var(f.phi);
    auto g0 = adjoint(scalar, f.c, chart);
    REQUIRE(g0.u.vertical_component(A) == var(f.phi) * var(f.c));

    NoetherOperator first;
    first.coefficients[jet(A, mi({0}))] = Poly(1);
    REQUIRE(adjoint(first, f.c, chart).u.vertical_component(A) == -var(f.c, mi({0})));

    NoetherOperator second;
    second.coefficients[jet(A, mi({0, 0}))] = var(f.phi);
    auto g2 = adjoint(second, f.c, chart);
    REQUIRE(g2.u.vertical_component(A) == var(f.phi, mi({0, 0})) * var(f.c) +
                                              Poly(2) * var(f.phi, mi({0})) * var(f.c, mi({0})) +
                                              var(f.phi) * var(f.c, mi({0, 0})));
    REQUIRE(g2.eta.at(jet(A)) == var(f.phi, mi({0, 0})));
    REQUIRE(g2.eta.at(jet(A, mi({0}))) == Poly(2) * var(f.phi, mi({0})));
    REQUIRE(g2.eta.at(jet(A, mi({0, 0}))) == var(f.phi));

    Symbol even_ghost = make_ghost("e", 0);
    REQUIRE_THROWS_AS(adjoint(first, even_ghost, chart), DeclarationError);
}

TEST_CASE("adjoint is an involution", "[adjoint][property]")
{
    Fields f;
    std::mt19937 rng(77);
    for (int trial = 0; trial < 110; ++trial) {
        int dim = uniform(rng, 1, 3);
        Chart chart{dim, 6};
        Parity parity = static_cast<Parity>(uniform(rng, 0, 1));
        NoetherOperator delta;
        for (const auto& A : {f.phi, f.chi, f.psi}) {
            int terms = uniform(rng, 0, 2);
            for (int t = 0; t < terms; ++t) {
                // [Delta^{A,Lambda}] = parity + [A] + 1
                Poly coeff = random_homogeneous_poly(rng, {f.phi, f.psi}, PolyShape{dim, 2, 2, 2, 0},
                                                     parity_sum(parity_sum(parity, A->parity), 1));
                delta.coefficients[jet(A, random_multi_index(rng, dim, 2))] += coeff;
            }
        }
        Symbol ghost = make_ghost("c", parity);
        auto g = adjoint(delta, ghost, chart);
        CAPTURE(trial, delta.density().to_string());
        // eta reassembles u
        for (const auto& [field, u] : g.u.vertical()) {
            Poly rebuilt;
            for (const auto& [key, eta] : g.eta) {
                if (same_symbol(key.symbol, field.symbol)) rebuilt += var(ghost, key.index) * eta;
            }
            REQUIRE(rebuilt == u);
        }
        REQUIRE(recover_identity(g.u, ghost, chart) == delta);
        if (!delta.is_zero()) REQUIRE(prolong(g.u, chart).parity() == 1);
    }
}

TEST_CASE("identity recovery", "[adjoint]")
{
    Maxwell2 m;
    GeneralizedVectorField u;
    u.set_vertical(m.A0, -var(m.c, mi({0})));
    u.set_vertical(m.A1, -var(m.c, mi({1})));
    REQUIRE(recover_identity(u, m.c, m.chart) == m.identity());
    REQUIRE(recover_identity(GeneralizedVectorField{}, m.c, m.chart).is_zero());

    GeneralizedVectorField quadratic;
    quadratic.set_vertical(m.A0, var(m.c) * var(m.c, mi({0})));
    REQUIRE_THROWS_AS(recover_identity(quadratic, m.c, m.chart), UnsupportedError);
}

TEST_CASE("gauge symmetries from Noether identities", "[gauge_symmetry]")
{
    Maxwell2 m;
    auto L = m.lagrangian();
    auto gs = gauge_symmetry(m.identity(), m.c, L);
    REQUIRE(gs.generator.u.vertical_component(m.A0) == -var(m.c, mi({0})));
    REQUIRE(gs.generator.u.vertical_component(m.A1) == -var(m.c, mi({1})));
    auto E = euler_lagrange(L);
    Poly pairing;
    for (int nu = 0; nu < 2; ++nu) pairing += -var(m.c, mi({nu})) * E.at(jet(m.A(nu)));
    REQUIRE(divergence(gs.sigma, m.chart) == pairing);
    // the textbook witness -c_nu F_{mu nu} differs from the solver's by a closed current
    std::vector<Poly> textbook(2);
    for (int mu = 0; mu < 2; ++mu) {
        for (int nu = 0; nu < 2; ++nu) textbook[static_cast<std::size_t>(mu)] += -var(m.c, mi({nu})) * m.F(mu, nu);
    }
    REQUIRE(divergence(textbook, m.chart) == pairing);

    Fields f;
    Chart chart{1, 6};
    Lagrangian constant{Poly(1), chart, {f.phi}};
    auto trivial = gauge_symmetry(NoetherOperator{}, make_ghost("e", 0), constant);
    REQUIRE(trivial.generator.u.vertical().empty());
    REQUIRE(trivial.sigma == std::vector<Poly>{Poly()});

    Poly diff = var(f.phi, mi({0})) - var(f.chi, mi({0}));
    Lagrangian two{rational(1, 2) * diff * diff, chart, {f.phi, f.chi}};
    NoetherOperator both;
    both.coefficients[jet(f.phi)] = Poly(1);
    both.coefficients[jet(f.chi)] = Poly(1);
    auto shift = gauge_symmetry(both, f.c, two);
    REQUIRE(shift.generator.u.vertical_component(f.phi) == var(f.c));
    REQUIRE(shift.generator.u.vertical_component(f.chi) == var(f.c));
    REQUIRE(divergence(shift.sigma, chart) ==
            var(f.c) * (euler_lagrange(two).at(jet(f.phi)) + euler_lagrange(two).at(jet(f.chi))));

    NoetherOperator wrong;
    wrong.coefficients[jet(f.phi)] = Poly(1);
    REQUIRE_THROWS_AS(gauge_symmetry(wrong, f.c, two), ConsistencyError);
}

TEST_CASE("second Noether theorem round trip", "[gauge_symmetry][property]")
{
    Fields f;
    std::mt19937 rng(4040);
    int checked = 0;
    for (int trial = 0; trial < 120; ++trial) {
        int dim = uniform(rng, 1, 2);
        auto L = random_lagrangian(rng, f, dim);
        L.chart = Chart{dim, 10};
        auto E = euler_lagrange(L);
        Poly boundary = koszul_tate(random_antifield_density(rng, f, dim, 2, 1), E, L.chart);
        auto delta = noether_operator_from_density(boundary, {f.phi, f.psi});
        if (delta.is_zero()) continue;
        Symbol ghost = make_ghost("c", delta.parity());
        CAPTURE(trial, L.density.to_string(), boundary.to_string());
        auto gs = gauge_symmetry(delta, ghost, L);
        // a variation is a divergence iff all its Euler-Lagrange expressions vanish
        Poly variation = prolong(gs.generator.u, L.chart).apply(L.density);
        REQUIRE_FALSE(exactness_obstruction(variation, L.chart).has_value());
        ++checked;
    }
    Maxwell2 m;
    REQUIRE(is_variational_symmetry(gauge_symmetry(m.identity(), m.c, m.lagrangian()).generator.u, m.lagrangian()).is_symmetry);
    REQUIRE(checked >= 30);
}

TEST_CASE("extended Lagrangian", "[extended_lagrangian]")
{
    Maxwell2 m;
    auto L = m.lagrangian();
    auto E = euler_lagrange(L);
    Poly Le = extended_lagrangian(L, {{m.identity(), m.c}});
    Poly expected = L.density + var(m.c) * (var(make_antifield(m.A0), mi({0})) + var(make_antifield(m.A1), mi({1})));
    REQUIRE(Le == expected);
    REQUIRE(koszul_tate(Le, E, m.chart).is_zero());

    REQUIRE(extended_lagrangian(L, {}) == L.density);

    NoetherOperator wrong;
    wrong.coefficients[jet(m.A0, mi({1}))] = Poly(1);
    REQUIRE_FALSE(koszul_tate(extended_lagrangian(L, {{wrong, m.c}}), E, m.chart).is_zero());
}
