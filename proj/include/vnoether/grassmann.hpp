#pragma once

#include <bit>
#include <cstdint>
#include <map>
#include <string>

#include "vnoether/poly.hpp"

namespace vnoether
{
    // Element of the real Grassmann algebra on at most 32 generators with
    // rational coefficients. Basis blades are bitmasks of generator indices,
    // ordered ascending.
    class GrassmannElement
    {
        public:
            GrassmannElement() = default;
            GrassmannElement(const Rational& scalar)
            {
                if (scalar != 0) blades_[0] = scalar;
            }
            GrassmannElement(int scalar) : GrassmannElement(Rational(scalar)) {}

            static GrassmannElement generator(int i)
            {
                GrassmannElement g;
                g.blades_[std::uint32_t{1} << i] = 1;
                return g;
            }

            const std::map<std::uint32_t, Rational>& blades() const noexcept { return blades_; }
            bool is_zero() const noexcept { return blades_.empty(); }

            Rational coefficient(std::uint32_t blade) const
            {
                auto it = blades_.find(blade);
                return it == blades_.end() ? Rational(0) : it->second;
            }

            GrassmannElement& operator+=(const GrassmannElement& o)
            {
                for (const auto& [b, c] : o.blades_) accumulate(b, c);
                return *this;
            }

            GrassmannElement& operator-=(const GrassmannElement& o)
            {
                for (const auto& [b, c] : o.blades_) accumulate(b, -c);
                return *this;
            }

            friend GrassmannElement operator+(GrassmannElement a, const GrassmannElement& b) { return a += b; }
            friend GrassmannElement operator-(GrassmannElement a, const GrassmannElement& b) { return a -= b; }

            friend GrassmannElement operator*(const GrassmannElement& a, const GrassmannElement& b)
            {
                GrassmannElement out;
                for (const auto& [ba, ca] : a.blades_) {
                    for (const auto& [bb, cb] : b.blades_) {
                        if (ba & bb) continue;
                        out.accumulate(ba | bb, blade_sign(ba, bb) * ca * cb);
                    }
                }
                return out;
            }

            friend bool operator==(const GrassmannElement&, const GrassmannElement&) = default;

            std::string to_string() const
            {
                if (blades_.empty()) return "0";
                std::string s;
                for (const auto& [b, c] : blades_) {
                    if (!s.empty()) s += " + ";
                    s += c.get_str();
                    for (int i = 0; i < 32; ++i) {
                        if (b & (std::uint32_t{1} << i)) s += "*t" + std::to_string(i);
                    }
                }
                return s;
            }

        private:
            // Sign of reordering blade a followed by blade b into ascending order.
            static int blade_sign(std::uint32_t a, std::uint32_t b)
            {
                int swaps = 0;
                while (b) {
                    int low = std::countr_zero(b);
                    b &= b - 1;
                    // generators of a above `low` must move past it
                    swaps += std::popcount(a >> (low + 1));
                }
                return sign_of(swaps);
            }

            void accumulate(std::uint32_t blade, const Rational& c)
            {
                if (c == 0) return;
                auto [it, inserted] = blades_.try_emplace(blade, c);
                if (!inserted) {
                    it->second += c;
                    if (it->second == 0) blades_.erase(it);
                }
            }

            std::map<std::uint32_t, Rational> blades_;
    };

    struct Assignment
    {
        std::map<JetVariable, Rational> even;
        std::map<JetVariable, GrassmannElement> odd;
    };

    // Ring homomorphism from the jet ring into the Grassmann algebra fixed by
    // the assignment.
    inline GrassmannElement evaluate(const Poly& p, const Assignment& at)
    {
        GrassmannElement total;
        for (const auto& [m, c] : p.terms()) {
            Rational scalar = c;
            for (const auto& [v, e] : m.even) {
                auto it = at.even.find(v);
                if (it == at.even.end()) throw EvaluationError("unassigned even variable " + v.to_string());
                for (int k = 0; k < e; ++k) scalar *= it->second;
            }
            GrassmannElement term(scalar);
            for (const auto& v : m.odd) {
                auto it = at.odd.find(v);
                if (it == at.odd.end()) throw EvaluationError("unassigned odd variable " + v.to_string());
                term = term * it->second;
            }
            total += term;
        }
        return total;
    }
}
