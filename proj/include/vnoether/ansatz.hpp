#pragma once

#include <algorithm>
#include <cstddef>
#include <functional>
#include <map>
#include <set>
#include <vector>

#include "vnoether/poly.hpp"

namespace vnoether
{
    // Bounds of the monomial ansatz used by the exactness and witness solvers.
    struct AnsatzOptions
    {
        int degree = 4;
        std::size_t max_unknowns = 40000;
    };

    // Field content of a monomial: the multiset of non-coordinate symbols,
    // each as its order-zero jet. Total derivatives preserve it.
    using Content = std::vector<JetVariable>;

    inline Content field_content(const Monomial& m)
    {
        Content out;
        for (const auto& [v, e] : m.even) {
            if (v.is_coordinate()) continue;
            for (int i = 0; i < e; ++i) out.push_back(jet(v.symbol));
        }
        for (const auto& v : m.odd) out.push_back(jet(v.symbol));
        std::sort(out.begin(), out.end());
        return out;
    }

    // Number of derivative slots per direction, summed over all factors.
    inline std::vector<int> derivative_counts(const Monomial& m, int dim)
    {
        std::vector<int> c(static_cast<std::size_t>(dim), 0);
        auto add = [&](const JetVariable& v, int times) {
            if (v.is_coordinate()) return;
            for (auto l : v.index.entries()) c[l] += times;
        };
        for (const auto& [v, e] : m.even) add(v, e);
        for (const auto& v : m.odd) add(v, 1);
        return c;
    }

    inline std::vector<int> coordinate_exponents(const Monomial& m, int dim)
    {
        std::vector<int> c(static_cast<std::size_t>(dim), 0);
        for (const auto& [v, e] : m.even) {
            if (v.is_coordinate()) c[static_cast<std::size_t>(v.symbol->coordinate)] += e;
        }
        return c;
    }

    inline int coordinate_degree(const Monomial& m)
    {
        int d = 0;
        for (const auto& [v, e] : m.even) {
            if (v.is_coordinate()) d += e;
        }
        return d;
    }

    // Coordinate symbols of the chart, preferring those already used by `polys`.
    inline std::vector<Symbol> coordinates_of(const std::vector<Poly>& polys, int dim)
    {
        auto out = default_coordinates(dim);
        for (const auto& p : polys) {
            for (const auto& v : p.variables()) {
                if (v.is_coordinate() && v.symbol->coordinate < dim) out[static_cast<std::size_t>(v.symbol->coordinate)] = v.symbol;
            }
        }
        return out;
    }

    // Scaling weight: d_lambda raises it by e_lambda.
    inline std::vector<int> scaling_weight(const Monomial& m, int dim)
    {
        auto w = derivative_counts(m, dim);
        auto e = coordinate_exponents(m, dim);
        for (int i = 0; i < dim; ++i) w[static_cast<std::size_t>(i)] -= e[static_cast<std::size_t>(i)];
        return w;
    }

    namespace detail
    {
        inline void for_each_bounded(const std::vector<int>& bound, const std::function<void(const std::vector<int>&)>& fn)
        {
            std::vector<int> cur(bound.size(), 0);
            while (true) {
                fn(cur);
                std::size_t i = 0;
                while (i < cur.size() && cur[i] == bound[i]) cur[i++] = 0;
                if (i == cur.size()) return;
                ++cur[i];
            }
        }
    }

    // All monomials (without coefficient) with the given field content whose
    // derivative counts per direction equal `counts`, with every jet below
    // `max_order`.
    inline std::vector<Monomial> monomials_with_counts(const Content& content, const std::vector<int>& counts, int max_order)
    {
        std::vector<Monomial> out;
        for (int c : counts) {
            if (c < 0) return out;
        }
        std::vector<JetVariable> chosen(content.size());
        std::function<void(std::size_t, const std::vector<int>&)> rec = [&](std::size_t slot, const std::vector<int>& remaining) {
            if (slot == content.size()) {
                for (int r : remaining) {
                    if (r != 0) return;
                }
                Poly p = Poly::product(chosen);
                if (!p.is_zero()) out.push_back(p.terms().begin()->first);
                return;
            }
            const JetVariable& base = content[slot];
            auto try_index = [&](const std::vector<int>& take) {
                MultiIndex idx = MultiIndex::from_counts(take);
                if (idx.order() > max_order) return;
                JetVariable v = base.derived(idx);
                if (slot > 0 && same_symbol(content[slot - 1].symbol, base.symbol)) {
                    auto c = chosen[slot - 1] <=> v;
                    if (c > 0 || (c == 0 && base.parity() == 1)) return;
                }
                chosen[slot] = v;
                std::vector<int> rest = remaining;
                for (std::size_t i = 0; i < rest.size(); ++i) rest[i] -= take[i];
                rec(slot + 1, rest);
            };
            if (slot + 1 == content.size()) {
                try_index(remaining);
            }
            else {
                detail::for_each_bounded(remaining, try_index);
            }
        };
        rec(0, counts);
        return out;
    }

    // Monomials of the given content and scaling weight whose coordinate
    // degree is at most `max_coordinate_degree`.
    inline std::vector<Monomial> monomials_with_weight(const Content& content, const std::vector<int>& weight,
                                                       int max_coordinate_degree, int max_order,
                                                       const std::vector<Symbol>& coordinates)
    {
        std::vector<Monomial> out;
        int dim = static_cast<int>(weight.size());
        std::vector<int> bound(weight.size(), max_coordinate_degree);
        detail::for_each_bounded(bound, [&](const std::vector<int>& exps) {
            int total = 0;
            for (int e : exps) total += e;
            if (total > max_coordinate_degree) return;
            std::vector<int> counts = weight;
            for (int i = 0; i < dim; ++i) counts[static_cast<std::size_t>(i)] += exps[static_cast<std::size_t>(i)];
            if (content.empty()) {
                for (int c : counts) {
                    if (c != 0) return;
                }
            }
            for (auto m : monomials_with_counts(content, counts, max_order)) {
                for (int i = 0; i < dim; ++i) {
                    if (exps[static_cast<std::size_t>(i)] > 0) {
                        insert_even(m.even, jet(coordinates[static_cast<std::size_t>(i)]), exps[static_cast<std::size_t>(i)]);
                    }
                }
                out.push_back(std::move(m));
            }
        });
        return out;
    }
}
