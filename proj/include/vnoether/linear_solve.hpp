#pragma once

#include <map>
#include <optional>
#include <vector>

#include "vnoether/poly.hpp"

namespace vnoether
{
    // Sparse linear system over the rationals, solved by incremental Gaussian
    // elimination. Free unknowns are set to zero so solutions are deterministic.
    class SparseSystem
    {
        public:
            using Row = std::map<int, Rational>;

            explicit SparseSystem(int unknowns = 0) : unknowns_(unknowns) {}

            int unknowns() const noexcept { return unknowns_; }
            void resize(int unknowns) { unknowns_ = unknowns; }

            // Adds the equation sum(row) = rhs. Returns false once the system
            // is known to be inconsistent.
            bool add_equation(Row row, Rational rhs)
            {
                if (inconsistent_) return false;
                prune(row);
                auto it = row.begin();
                while (it != row.end()) {
                    auto pivot = pivots_.find(it->first);
                    if (pivot == pivots_.end()) {
                        ++it;
                        continue;
                    }
                    int col = it->first;
                    Rational factor = it->second;
                    const auto& [prow, prhs] = pivot->second;
                    for (const auto& [c, v] : prow) {
                        Rational& slot = row[c];
                        slot -= factor * v;
                    }
                    rhs -= factor * prhs;
                    prune(row);
                    it = row.upper_bound(col);
                }
                if (row.empty()) {
                    if (rhs != 0) inconsistent_ = true;
                    return !inconsistent_;
                }
                int col = row.begin()->first;
                Rational lead = row.begin()->second;
                for (auto& [c, v] : row) v /= lead;
                rhs /= lead;
                pivots_.emplace(col, std::make_pair(std::move(row), std::move(rhs)));
                return true;
            }

            bool consistent() const noexcept { return !inconsistent_; }
            std::size_t rank() const noexcept { return pivots_.size(); }

            // One solution with all free unknowns at zero, or nothing if the
            // system is inconsistent.
            std::optional<std::vector<Rational>> solve() const
            {
                if (inconsistent_) return std::nullopt;
                std::vector<Rational> x(static_cast<std::size_t>(unknowns_), Rational(0));
                for (auto it = pivots_.rbegin(); it != pivots_.rend(); ++it) {
                    const auto& [row, rhs] = it->second;
                    Rational value = rhs;
                    for (const auto& [c, v] : row) {
                        if (c != it->first) value -= v * x[static_cast<std::size_t>(c)];
                    }
                    x[static_cast<std::size_t>(it->first)] = value;
                }
                return x;
            }

        private:
            static void prune(Row& row)
            {
                for (auto it = row.begin(); it != row.end();) {
                    it = (it->second == 0) ? row.erase(it) : std::next(it);
                }
            }

            int unknowns_;
            bool inconsistent_ = false;
            std::map<int, std::pair<Row, Rational>> pivots_;
    };

    // Finds coefficients x_j with sum_j x_j * columns[j] == target, where the
    // columns and the target are tuples of polynomials compared component by
    // component and monomial by monomial.
    inline std::optional<std::vector<Rational>> solve_polynomial_combination(
        const std::vector<std::vector<Poly>>& columns, const std::vector<Poly>& target)
    {
        std::map<std::pair<std::size_t, Monomial>, SparseSystem::Row> rows;
        for (int j = 0; j < static_cast<int>(columns.size()); ++j) {
            const auto& column = columns[static_cast<std::size_t>(j)];
            for (std::size_t k = 0; k < column.size(); ++k) {
                for (const auto& [m, c] : column[k].terms()) rows[{k, m}][j] += c;
            }
        }
        for (std::size_t k = 0; k < target.size(); ++k) {
            for (const auto& [m, c] : target[k].terms()) rows[{k, m}];
        }
        SparseSystem system(static_cast<int>(columns.size()));
        for (auto& [key, row] : rows) {
            Rational rhs = key.first < target.size() ? target[key.first].coefficient(key.second) : Rational(0);
            if (!system.add_equation(std::move(row), std::move(rhs))) return std::nullopt;
        }
        return system.solve();
    }

    inline std::optional<std::vector<Rational>> solve_polynomial_combination(const std::vector<Poly>& columns,
                                                                              const Poly& target)
    {
        std::vector<std::vector<Poly>> wrapped;
        wrapped.reserve(columns.size());
        for (const auto& c : columns) wrapped.push_back({c});
        return solve_polynomial_combination(wrapped, std::vector<Poly>{target});
    }
}
