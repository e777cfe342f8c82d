#pragma once

#include <algorithm>
#include <compare>
#include <cstddef>
#include <cstdint>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "vnoether/errors.hpp"

namespace vnoether
{
    // Grassmann parity, 0 = even, 1 = odd.
    using Parity = int;

    constexpr Parity parity_sum(Parity a, Parity b) noexcept { return (a + b) & 1; }

    // Sign (-1)^k as an int.
    constexpr int sign_of(int k) noexcept { return (k & 1) ? -1 : 1; }

    constexpr int kDefaultJetCap = 6;

    // Base chart R^n together with the jet-order truncation that replaces the
    // direct limit over all jet orders.
    struct Chart
    {
        int dim = 1;
        int jet_cap = kDefaultJetCap;

        friend bool operator==(const Chart&, const Chart&) = default;
    };

    // Symmetric multi-index, stored as its sorted list of coordinate indices.
    class MultiIndex
    {
        public:
            MultiIndex() = default;

            explicit MultiIndex(std::vector<std::uint8_t> entries)
                : entries_(std::move(entries))
            {
                std::sort(entries_.begin(), entries_.end());
            }

            MultiIndex(std::initializer_list<int> entries)
            {
                for (auto e : entries) entries_.push_back(static_cast<std::uint8_t>(e));
                std::sort(entries_.begin(), entries_.end());
            }

            static MultiIndex from_counts(const std::vector<int>& counts)
            {
                MultiIndex m;
                for (std::size_t i = 0; i < counts.size(); ++i) {
                    for (int k = 0; k < counts[i]; ++k) m.entries_.push_back(static_cast<std::uint8_t>(i));
                }
                return m;
            }

            int order() const noexcept { return static_cast<int>(entries_.size()); }
            bool empty() const noexcept { return entries_.empty(); }
            const std::vector<std::uint8_t>& entries() const noexcept { return entries_; }

            // Lambda + lambda
            MultiIndex with(int lambda) const
            {
                MultiIndex m = *this;
                m.entries_.insert(std::upper_bound(m.entries_.begin(), m.entries_.end(),
                                                   static_cast<std::uint8_t>(lambda)),
                                  static_cast<std::uint8_t>(lambda));
                return m;
            }

            MultiIndex with(const MultiIndex& other) const
            {
                MultiIndex m = *this;
                m.entries_.insert(m.entries_.end(), other.entries_.begin(), other.entries_.end());
                std::sort(m.entries_.begin(), m.entries_.end());
                return m;
            }

            // Removes one occurrence of lambda; the caller guarantees it is present.
            MultiIndex without(int lambda) const
            {
                MultiIndex m = *this;
                auto it = std::find(m.entries_.begin(), m.entries_.end(), static_cast<std::uint8_t>(lambda));
                if (it != m.entries_.end()) m.entries_.erase(it);
                return m;
            }

            int multiplicity(int lambda) const noexcept
            {
                return static_cast<int>(std::count(entries_.begin(), entries_.end(),
                                                   static_cast<std::uint8_t>(lambda)));
            }

            std::vector<int> counts(int dim) const
            {
                std::vector<int> c(static_cast<std::size_t>(dim), 0);
                for (auto e : entries_) {
                    if (e < dim) ++c[e];
                }
                return c;
            }

            // Number of distinct orderings |Lambda|! / prod(m_i!).
            long long arrangements() const
            {
                long long num = 1;
                int k = 0;
                std::size_t i = 0;
                while (i < entries_.size()) {
                    std::size_t j = i;
                    int run = 0;
                    while (j < entries_.size() && entries_[j] == entries_[i]) {
                        ++j;
                        ++run;
                        ++k;
                        num = num * k / run;
                    }
                    i = j;
                }
                return num;
            }

            int max_entry() const noexcept { return entries_.empty() ? -1 : entries_.back(); }

            std::string digits() const
            {
                std::string s;
                for (auto e : entries_) s += std::to_string(static_cast<int>(e));
                return s;
            }

            friend bool operator==(const MultiIndex&, const MultiIndex&) = default;

            friend std::strong_ordering operator<=>(const MultiIndex& a, const MultiIndex& b)
            {
                if (auto c = a.order() <=> b.order(); c != 0) return c;
                return a.entries_ <=> b.entries_;
            }

        private:
            std::vector<std::uint8_t> entries_;
    };

    // All multi-indices of the given order over dim coordinates, ascending.
    inline std::vector<MultiIndex> multi_indices_of_order(int dim, int order)
    {
        std::vector<MultiIndex> out;
        std::vector<std::uint8_t> current;
        auto rec = [&](auto&& self, int start, int remaining) -> void {
            if (remaining == 0) {
                out.emplace_back(current);
                return;
            }
            for (int i = start; i < dim; ++i) {
                current.push_back(static_cast<std::uint8_t>(i));
                self(self, i, remaining - 1);
                current.pop_back();
            }
        };
        rec(rec, 0, order);
        return out;
    }

    inline std::vector<MultiIndex> multi_indices_up_to(int dim, int max_order)
    {
        std::vector<MultiIndex> out;
        for (int k = 0; k <= max_order; ++k) {
            auto level = multi_indices_of_order(dim, k);
            out.insert(out.end(), level.begin(), level.end());
        }
        return out;
    }

    enum class SymbolKind : std::uint8_t
    {
        field = 0,
        ghost = 1,
        antifield = 2,
        coordinate = 3
    };

    inline const char* to_string(SymbolKind kind)
    {
        switch (kind) {
            case SymbolKind::field: return "field";
            case SymbolKind::ghost: return "ghost";
            case SymbolKind::antifield: return "antifield";
            case SymbolKind::coordinate: return "coordinate";
        }
        return "?";
    }

    // A declared generator of the jet ring: a field s^A, a ghost c^r, an
    // antifield (with its base field), or a base coordinate x^lambda.
    struct FieldSymbol
    {
        std::string name;
        SymbolKind kind = SymbolKind::field;
        Parity parity = 0;
        // Antifields: the field whose Euler-Lagrange expression they stand for.
        std::string base;
        // Coordinates: lambda.
        int coordinate = -1;
    };

    using Symbol = std::shared_ptr<const FieldSymbol>;

    inline Symbol make_field(std::string name, Parity parity)
    {
        return std::make_shared<const FieldSymbol>(FieldSymbol{std::move(name), SymbolKind::field, parity & 1, {}, -1});
    }

    inline Symbol make_ghost(std::string name, Parity parity)
    {
        return std::make_shared<const FieldSymbol>(FieldSymbol{std::move(name), SymbolKind::ghost, parity & 1, {}, -1});
    }

    // Antifield of a field: parity shifted by one.
    inline Symbol make_antifield(const Symbol& base)
    {
        if (!base || base->kind != SymbolKind::field) {
            throw DeclarationError("antifields are attached to fields only");
        }
        return std::make_shared<const FieldSymbol>(
            FieldSymbol{"Ebar[" + base->name + "]", SymbolKind::antifield, parity_sum(base->parity, 1), base->name, -1});
    }

    inline Symbol make_coordinate(std::string name, int lambda)
    {
        return std::make_shared<const FieldSymbol>(FieldSymbol{std::move(name), SymbolKind::coordinate, 0, {}, lambda});
    }

    // Names used for coordinates a model does not name itself.
    inline std::vector<std::string> default_coordinate_names(int dim)
    {
        switch (dim) {
            case 1: return {"x"};
            case 2: return {"x", "y"};
            case 3: return {"x", "y", "z"};
            case 4: return {"t", "x", "y", "z"};
            default: break;
        }
        std::vector<std::string> names;
        for (int i = 0; i < dim; ++i) names.push_back("x" + std::to_string(i));
        return names;
    }

    inline std::vector<Symbol> default_coordinates(int dim)
    {
        std::vector<Symbol> out;
        auto names = default_coordinate_names(dim);
        for (int i = 0; i < dim; ++i) out.push_back(make_coordinate(names[static_cast<std::size_t>(i)], i));
        return out;
    }

    inline std::strong_ordering compare_symbols(const FieldSymbol& a, const FieldSymbol& b)
    {
        if (auto c = a.kind <=> b.kind; c != 0) return c;
        if (a.kind == SymbolKind::coordinate) return a.coordinate <=> b.coordinate;
        return a.name.compare(b.name) <=> 0;
    }

    inline bool same_symbol(const Symbol& a, const Symbol& b)
    {
        return a == b || compare_symbols(*a, *b) == 0;
    }

    // s^A_Lambda. Coordinates always carry the empty multi-index.
    struct JetVariable
    {
        Symbol symbol;
        MultiIndex index;

        Parity parity() const noexcept { return symbol->parity; }
        int order() const noexcept { return index.order(); }
        bool is_coordinate() const noexcept { return symbol->kind == SymbolKind::coordinate; }
        SymbolKind kind() const noexcept { return symbol->kind; }
        const std::string& name() const noexcept { return symbol->name; }

        JetVariable derived(int lambda) const { return JetVariable{symbol, index.with(lambda)}; }
        JetVariable derived(const MultiIndex& lambda) const { return JetVariable{symbol, index.with(lambda)}; }

        std::string to_string() const
        {
            if (index.empty()) return symbol->name;
            return symbol->name + "_{," + index.digits() + "}";
        }

        friend bool operator==(const JetVariable& a, const JetVariable& b)
        {
            return a.index == b.index && same_symbol(a.symbol, b.symbol);
        }

        friend std::strong_ordering operator<=>(const JetVariable& a, const JetVariable& b)
        {
            if (a.symbol != b.symbol) {
                if (auto c = compare_symbols(*a.symbol, *b.symbol); c != 0) return c;
            }
            return a.index <=> b.index;
        }
    };

    inline JetVariable jet(const Symbol& s, MultiIndex index = {}) { return JetVariable{s, std::move(index)}; }
}
