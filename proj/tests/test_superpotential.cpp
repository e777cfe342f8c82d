#include <random>

#include <catch_amalgamated.hpp>

#include "support.hpp"
#include "vnoether/superpotential.hpp"

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

    struct Maxwell
    {
        int dim;
        Rational sign;
        std::vector<Symbol> A;
        Symbol c = make_ghost("c", 1);
        Chart chart;

        explicit Maxwell(int n, Rational s = rational(-1, 4))
            : dim(n), sign(s), chart{n, 6}
        {
            for (int i = 0; i < n; ++i) A.push_back(make_field("A" + std::to_string(i), 0));
        }

        Poly F(int mu, int nu) const { return var(A[static_cast<std::size_t>(nu)], mi({mu})) - var(A[static_cast<std::size_t>(mu)], mi({nu})); }

        Lagrangian lagrangian() const
        {
            Poly density;
            for (int mu = 0; mu < dim; ++mu) {
                for (int nu = 0; nu < dim; ++nu) density += sign * F(mu, nu) * F(mu, nu);
            }
            return Lagrangian{density, chart, A};
        }

        GeneralizedVectorField gauge() const
        {
            GeneralizedVectorField u;
            for (int mu = 0; mu < dim; ++mu) u.set_vertical(A[static_cast<std::size_t>(mu)], var(c, mi({mu})));
            return u;
        }

        // J^mu = c_nu F_{nu mu}
        std::vector<Poly> current() const
        {
            std::vector<Poly> J(static_cast<std::size_t>(dim));
            for (int mu = 0; mu < dim; ++mu) {
                for (int nu = 0; nu < dim; ++nu) J[static_cast<std::size_t>(mu)] += var(c, mi({nu})) * F(nu, mu);
            }
            return J;
        }
    };

    struct Fields
    {
        Symbol phi = make_field("phi", 0);
        Symbol psi = make_field("psi", 1);
    };

    Poly random_antifield_density(std::mt19937& rng, const Fields& f, int dim)
    {
        std::vector<Symbol> antifields{make_antifield(f.phi), make_antifield(f.psi)};
        Poly out;
        for (int t = 0; t < 3; ++t) {
            Poly term = random_poly(rng, {f.phi, f.psi}, PolyShape{dim, 2, 2, 2, 0});
            for (int k = 0; k < 2; ++k) {
                const auto& s = antifields[static_cast<std::size_t>(uniform(rng, 0, 1))];
                term = term * var(s, random_multi_index(rng, dim, 1));
            }
            out += term;
        }
        Parity keep = static_cast<Parity>(uniform(rng, 0, 1));
        Poly homogeneous;
        for (const auto& [m, c] : out.terms()) {
            if (m.parity() == keep) homogeneous.add_term(m, c);
        }
        return homogeneous;
    }

    void require_split(const std::vector<Poly>& J, const SuperpotentialSplit& split, const Lagrangian& L)
    {
        auto report = verify_split(J, split, euler_lagrange(L), L.chart);
        REQUIRE(report.antisymmetric);
        REQUIRE(report.reconstructs);
        REQUIRE(report.W_on_shell);
        REQUIRE(divergence(divergence(split.U, L.chart), L.chart) == Poly());
        REQUIRE(divergence(J, L.chart) == divergence(split.W, L.chart));
    }
}

TEST_CASE("ghost expansion of a current", "[expand_current]")
{
    Maxwell m(2);
    auto e = expand_current(m.current());
    REQUIRE(e.order() == 1);
    REQUIRE(e.coefficients.size() == 1);
    const auto& byc = e.coefficients.at("c");
    REQUIRE(byc.size() == 2);
    for (int nu = 0; nu < 2; ++nu) {
        for (int mu = 0; mu < 2; ++mu) REQUIRE(byc.at(mi({nu}))[static_cast<std::size_t>(mu)] == m.F(nu, mu));
    }
    REQUIRE(e.remainder == std::vector<Poly>(2));
    REQUIRE(e.reconstruct() == m.current());

    auto zero = expand_current(std::vector<Poly>(2));
    REQUIRE(zero.coefficients.empty());
    REQUIRE(zero.order() == -1);

    Symbol phi = make_field("phi", 0);
    Symbol c = make_ghost("c", 1);
    std::vector<Poly> g{var(phi), var(phi, mi({1}))};
    std::vector<Poly> h{var(phi) * var(phi), var(phi, mi({0}))};
    std::vector<Poly> J{var(c) * g[0] + var(c, mi({0, 1})) * h[0], var(c) * g[1] + var(c, mi({0, 1})) * h[1] + var(phi)};
    auto ex = expand_current(J);
    REQUIRE(ex.coefficients.at("c").at(MultiIndex()) == g);
    REQUIRE(ex.coefficients.at("c").at(mi({0, 1})) == h);
    REQUIRE(ex.remainder == std::vector<Poly>{Poly(), var(phi)});
    REQUIRE(ex.reconstruct() == J);

    REQUIRE_THROWS_AS(expand_current({var(c) * var(c, mi({0})), Poly()}), UnsupportedError);
}

TEST_CASE("ghost expansion reconstructs random currents", "[expand_current][property]")
{
    std::mt19937 rng(5150);
    Symbol phi = make_field("phi", 0);
    Symbol psi = make_field("psi", 1);
    Symbol c = make_ghost("c", 1);
    Symbol k = make_ghost("k", 0);
    for (int trial = 0; trial < 100; ++trial) {
        int dim = uniform(rng, 1, 3);
        std::vector<Poly> J(static_cast<std::size_t>(dim));
        for (auto& comp : J) {
            comp = random_poly(rng, {phi, psi}, PolyShape{dim, 2, 2, 3, 0});
            comp += var(c, random_multi_index(rng, dim, 3)) * random_poly(rng, {phi, psi}, PolyShape{dim, 2, 2, 3, 0});
            comp += var(k, random_multi_index(rng, dim, 3)) * random_poly(rng, {phi, psi}, PolyShape{dim, 2, 2, 3, 0});
        }
        REQUIRE(expand_current(J).reconstruct() == J);
    }
}

TEST_CASE("Maxwell superpotential", "[extract]")
{
    for (int dim : {2, 3}) {
        CAPTURE(dim);
        Maxwell m(dim, rational(1, 4));
        auto L = m.lagrangian();
        auto E = euler_lagrange(L);
        auto J = m.current();
        auto split = extract(J, m.gauge(), L);
        for (int nu = 0; nu < dim; ++nu) {
            for (int mu = 0; mu < dim; ++mu) REQUIRE(split.U[static_cast<std::size_t>(nu)][static_cast<std::size_t>(mu)] == var(m.c) * m.F(nu, mu));
        }
        // J^mu - d_nu(c F_{nu mu}) = -c d_nu F_{nu mu}
        for (int mu = 0; mu < dim; ++mu) {
            Poly expected;
            for (int nu = 0; nu < dim; ++nu) expected -= var(m.c) * total_derivative(m.F(nu, mu), nu, m.chart);
            REQUIRE(split.W[static_cast<std::size_t>(mu)] == expected);
            REQUIRE(split.W[static_cast<std::size_t>(mu)] == var(m.c) * E.at(jet(m.A[static_cast<std::size_t>(mu)])));
        }
        require_split(J, split, L);
    }
}

TEST_CASE("superpotential of the Noether current of a gauge symmetry", "[extract][pipeline]")
{
    for (int dim : {2, 4}) {
        CAPTURE(dim);
        Maxwell m(dim);
        auto L = m.lagrangian();
        NoetherOperator gauss;
        for (int mu = 0; mu < dim; ++mu) gauss.coefficients[jet(m.A[static_cast<std::size_t>(mu)], mi({mu}))] = Poly(1);
        auto gs = gauge_symmetry(gauss, m.c, L);
        auto sym = is_variational_symmetry(gs.generator.u, L);
        REQUIRE(sym.is_symmetry);
        for (int nu = 0; nu < dim; ++nu) REQUIRE(gs.generator.u.vertical_component(m.A[static_cast<std::size_t>(nu)]) == -var(m.c, mi({nu})));
        auto J = noether_current(gs.generator.u, L, sym.sigma);
        auto E = euler_lagrange(L);
        auto split = extract(J, gs.generator.u, L);
        for (int mu = 0; mu < dim; ++mu) {
            Poly expected;
            for (int nu = 0; nu < dim; ++nu) {
                expected += var(m.c, mi({nu})) * m.F(nu, mu);
                REQUIRE(split.U[static_cast<std::size_t>(nu)][static_cast<std::size_t>(mu)] == var(m.c) * m.F(nu, mu));
            }
            REQUIRE(J[static_cast<std::size_t>(mu)] == expected);
            REQUIRE(split.W[static_cast<std::size_t>(mu)] == -var(m.c) * E.at(jet(m.A[static_cast<std::size_t>(mu)])));
        }
        require_split(J, split, L);
    }
}

TEST_CASE("trivial and shift currents", "[extract]")
{
    Maxwell m(2);
    auto L = m.lagrangian();
    auto split = extract(std::vector<Poly>(2), GeneralizedVectorField(), L);
    REQUIRE(split.W == std::vector<Poly>(2));
    REQUIRE(split.U == std::vector<std::vector<Poly>>(2, std::vector<Poly>(2)));

    Symbol phi = make_field("phi", 0);
    Symbol chi = make_field("chi", 0);
    Symbol c = make_ghost("c", 1);
    Chart chart{2, 6};
    Poly density;
    for (int mu = 0; mu < 2; ++mu) {
        Poly d = var(phi, mi({mu})) - var(chi, mi({mu}));
        density += rational(1, 2) * d * d;
    }
    Lagrangian shift{density, chart, {phi, chi}};
    GeneralizedVectorField u;
    u.set_vertical(phi, var(c));
    u.set_vertical(chi, var(c));
    auto sym = is_variational_symmetry(u, shift);
    REQUIRE(sym.is_symmetry);
    auto J = noether_current(u, shift, sym.sigma);
    auto s = extract(J, u, shift);
    require_split(J, s, shift);

    // c phi_y dx - c phi_x dy style current with ghost-free closed part added
    std::vector<Poly> J2 = J;
    J2[0] += var(phi, mi({1}));
    J2[1] -= var(phi, mi({0}));
    auto s2 = extract(J2, u, shift);
    require_split(J2, s2, shift);
    REQUIRE(divergence(s2.exact_remainder_witness, chart) == std::vector<Poly>{var(phi, mi({1})), -var(phi, mi({0}))});
}

TEST_CASE("extract rejects foreign currents", "[extract]")
{
    Maxwell m(2, rational(1, 4));
    auto L = m.lagrangian();
    auto J = m.current();
    J[0] += var(m.c) * var(m.A[0]);
    REQUIRE_THROWS_AS(extract(J, m.gauge(), L), ConsistencyError);
    REQUIRE_THROWS_AS(extract({Poly(), Poly(), Poly()}, m.gauge(), L), ConsistencyError);
    std::vector<Poly> quadratic{var(m.c) * var(m.c, mi({0})), Poly()};
    REQUIRE_THROWS(extract(quadratic, m.gauge(), L));
}

TEST_CASE("verify_split detects mutations", "[verify_split]")
{
    Maxwell m(2, rational(1, 4));
    auto L = m.lagrangian();
    auto E = euler_lagrange(L);
    auto J = m.current();
    auto split = extract(J, m.gauge(), L);
    REQUIRE(verify_split(J, split, E, m.chart).ok());

    auto symmetric = split;
    symmetric.U[0][1] += var(m.c) * var(m.A[0]);
    symmetric.U[1][0] += var(m.c) * var(m.A[0]);
    auto r1 = verify_split(J, symmetric, E, m.chart);
    REQUIRE_FALSE(r1.antisymmetric);
    REQUIRE_FALSE(r1.ok());

    auto foreign = split;
    foreign.W[0] += var(m.c) * var(m.A[1], mi({0}));
    auto r2 = verify_split(J, foreign, E, m.chart);
    REQUIRE_FALSE(r2.W_on_shell);
    REQUIRE_FALSE(r2.ok());

    auto broken = split;
    broken.U[0][1] += var(m.c) * var(m.A[0]);
    broken.U[1][0] -= var(m.c) * var(m.A[0]);
    auto r3 = verify_split(J, broken, E, m.chart);
    REQUIRE(r3.antisymmetric);
    REQUIRE_FALSE(r3.reconstructs);
}

TEST_CASE("superpotential of random gauge currents", "[extract][property]")
{
    Fields f;
    std::mt19937 rng(6161);
    int checked = 0;
    for (int trial = 0; trial < 60; ++trial) {
        int dim = uniform(rng, 1, 2);
        Poly density = random_homogeneous_poly(rng, {f.phi, f.psi}, PolyShape{dim, 1, 3, 3, 2}, 0);
        Lagrangian L{density, Chart{dim, 10}, {f.phi, f.psi}};
        auto E = euler_lagrange(L);
        Poly boundary = koszul_tate(random_antifield_density(rng, f, dim), E, L.chart);
        auto delta = noether_operator_from_density(boundary, {f.phi, f.psi});
        if (delta.is_zero()) continue;
        Symbol ghost = make_ghost("c", delta.parity());
        CAPTURE(trial, density.to_string(), boundary.to_string());
        auto gs = gauge_symmetry(delta, ghost, L);

        // gs.sigma satisfies d_mu sigma^mu = u^A E_A, so it is a current of u
        std::vector<Poly> J = gs.sigma;
        if (dim == 2) {
            // closed ghost-free addition d_nu V^{nu mu}
            Poly v = random_poly(rng, {f.phi}, PolyShape{dim, 1, 2, 2, 1});
            J[0] += total_derivative(v, 1, L.chart);
            J[1] -= total_derivative(v, 0, L.chart);
        }
        auto split = extract(J, gs.generator.u, L);
        require_split(J, split, L);
        ++checked;
    }
    REQUIRE(checked >= 15);
}

TEST_CASE("superpotential of random gauge-invariant theories", "[extract][property]")
{
    std::mt19937 rng(7272);
    Symbol phi = make_field("phi", 0);
    Symbol psi = make_field("psi", 1);
    Symbol c = make_ghost("c", 1);
    int top_order_two = 0;
    for (int trial = 0; trial < 60; ++trial) {
        int dim = uniform(rng, 1, 2);
        Chart chart{dim, 6};
        std::vector<Symbol> A;
        for (int i = 0; i < dim; ++i) A.push_back(make_field("A" + std::to_string(i), 0));

        // invariant blocks under A_mu -> A_mu + c_mu, phi -> phi + c
        std::vector<Poly> blocks;
        for (int mu = 0; mu < dim; ++mu) {
            Poly B = var(phi, mi({mu})) - var(A[static_cast<std::size_t>(mu)]);
            blocks.push_back(B);
            for (int nu = 0; nu < dim; ++nu) blocks.push_back(total_derivative(B, nu, chart));
        }
        if (dim == 2) {
            Poly F = var(A[1], mi({0})) - var(A[0], mi({1}));
            blocks.push_back(F);
            blocks.push_back(total_derivative(F, 0, chart));
            blocks.push_back(total_derivative(F, 1, chart));
        }
        blocks.push_back(var(psi));
        for (int mu = 0; mu < dim; ++mu) blocks.push_back(var(psi, mi({mu})));

        Poly density;
        while (density.is_zero()) {
            int terms = uniform(rng, 1, 3);
            for (int t = 0; t < terms; ++t) {
                Poly term(uniform(rng, 1, 3));
                int factors = uniform(rng, 2, 3);
                for (int k = 0; k < factors; ++k) term = term * blocks[static_cast<std::size_t>(uniform(rng, 0, static_cast<int>(blocks.size()) - 1))];
                if (term.homogeneous_parity() == Parity(0)) density += term;
            }
        }
        std::vector<Symbol> fields = A;
        fields.push_back(phi);
        fields.push_back(psi);
        Lagrangian L{density, chart, fields};
        CAPTURE(trial, density.to_string());

        GeneralizedVectorField u;
        for (int mu = 0; mu < dim; ++mu) u.set_vertical(A[static_cast<std::size_t>(mu)], var(c, mi({mu})));
        u.set_vertical(phi, var(c));
        REQUIRE(prolong(u, chart).apply(density).is_zero());

        auto J = noether_current(u, L, std::vector<Poly>(static_cast<std::size_t>(dim)));
        if (expand_current(J).order() == 2) ++top_order_two;
        auto split = extract(J, u, L);
        require_split(J, split, L);
    }
    REQUIRE(top_order_two >= 10);
}
