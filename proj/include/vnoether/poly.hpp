#pragma once

#include <compare>
#include <cstddef>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <gmpxx.h>

#include "vnoether/errors.hpp"
#include "vnoether/symbol.hpp"

namespace vnoether
{
    using Rational = mpq_class;

    // n/d in canonical form (mpq_class does not canonicalize on construction).
    inline Rational rational(long n, long d = 1)
    {
        Rational q(n, d);
        q.canonicalize();
        return q;
    }

    // Variable content of a graded monomial. The coefficient lives in the
    // owning polynomial. Even variables carry exponents; odd variables appear
    // at most once, ascending, and the monomial denotes the ordered product
    // E * o_1 * ... * o_k.
    struct Monomial
    {
        std::vector<std::pair<JetVariable, int>> even;
        std::vector<JetVariable> odd;

        int degree() const noexcept
        {
            int d = static_cast<int>(odd.size());
            for (const auto& [v, e] : even) d += e;
            return d;
        }

        Parity parity() const noexcept { return static_cast<int>(odd.size()) & 1; }

        bool is_unit() const noexcept { return even.empty() && odd.empty(); }

        friend bool operator==(const Monomial&, const Monomial&) = default;

        // Graded-lexicographic.
        friend std::strong_ordering operator<=>(const Monomial& a, const Monomial& b)
        {
            if (auto c = a.degree() <=> b.degree(); c != 0) return c;
            if (auto c = a.even <=> b.even; c != 0) return c;
            return a.odd <=> b.odd;
        }
    };

    // Sorts odd factors in place. Returns the permutation sign, or 0 when a
    // factor repeats (odd squares vanish).
    inline int canonicalize_odd(std::vector<JetVariable>& odd)
    {
        int sign = 1;
        for (std::size_t i = 1; i < odd.size(); ++i) {
            std::size_t j = i;
            while (j > 0) {
                auto c = odd[j - 1] <=> odd[j];
                if (c == 0) return 0;
                if (c < 0) break;
                std::swap(odd[j - 1], odd[j]);
                sign = -sign;
                --j;
            }
        }
        for (std::size_t i = 1; i < odd.size(); ++i) {
            if (odd[i - 1] == odd[i]) return 0;
        }
        return sign;
    }

    inline void insert_even(std::vector<std::pair<JetVariable, int>>& even, const JetVariable& v, int exponent)
    {
        auto it = std::lower_bound(even.begin(), even.end(), v,
                                   [](const auto& p, const JetVariable& x) { return p.first < x; });
        if (it != even.end() && it->first == v) {
            it->second += exponent;
        }
        else {
            even.insert(it, {v, exponent});
        }
    }

    // Product of two monomials: the sign from reordering odd factors, 0 if it vanishes.
    inline int multiply_monomials(const Monomial& a, const Monomial& b, Monomial& out)
    {
        out.even = a.even;
        for (const auto& [v, e] : b.even) insert_even(out.even, v, e);
        out.odd = a.odd;
        out.odd.insert(out.odd.end(), b.odd.begin(), b.odd.end());
        return canonicalize_odd(out.odd);
    }

    // Element of the graded-commutative polynomial ring over jet variables with
    // rational coefficients, kept in canonical form: a sorted map from
    // monomials to nonzero coefficients.
    class Poly
    {
        public:
            using TermMap = std::map<Monomial, Rational>;

            Poly() = default;

            Poly(const Rational& constant)
            {
                if (constant != 0) terms_.emplace(Monomial{}, constant);
            }

            Poly(long constant) : Poly(Rational(constant)) {}
            Poly(int constant) : Poly(Rational(constant)) {}

            static Poly variable(const JetVariable& v)
            {
                Poly p;
                Monomial m;
                if (v.parity() == 0) {
                    m.even.emplace_back(v, 1);
                }
                else {
                    m.odd.push_back(v);
                }
                p.terms_.emplace(std::move(m), Rational(1));
                return p;
            }

            static Poly monomial(Monomial m, const Rational& coeff = 1)
            {
                Poly p;
                p.add_term(std::move(m), coeff);
                return p;
            }

            // Builds c * factors[0] * factors[1] * ... in the given order.
            static Poly product(const std::vector<JetVariable>& factors, const Rational& coeff = 1)
            {
                Monomial m;
                for (const auto& v : factors) {
                    if (v.parity() == 0) {
                        insert_even(m.even, v, 1);
                    }
                    else {
                        m.odd.push_back(v);
                    }
                }
                int sign = canonicalize_odd(m.odd);
                Poly p;
                if (sign != 0) p.add_term(std::move(m), coeff * sign);
                return p;
            }

            const TermMap& terms() const noexcept { return terms_; }
            bool is_zero() const noexcept { return terms_.empty(); }
            std::size_t size() const noexcept { return terms_.size(); }

            void add_term(const Monomial& m, const Rational& coeff)
            {
                if (coeff == 0) return;
                auto [it, inserted] = terms_.try_emplace(m, coeff);
                if (!inserted) {
                    it->second += coeff;
                    if (it->second == 0) terms_.erase(it);
                }
            }

            void add_term(Monomial&& m, const Rational& coeff)
            {
                if (coeff == 0) return;
                auto it = terms_.find(m);
                if (it == terms_.end()) {
                    terms_.emplace(std::move(m), coeff);
                }
                else {
                    it->second += coeff;
                    if (it->second == 0) terms_.erase(it);
                }
            }

            Rational coefficient(const Monomial& m) const
            {
                auto it = terms_.find(m);
                return it == terms_.end() ? Rational(0) : it->second;
            }

            Rational constant_term() const { return coefficient(Monomial{}); }

            // Parity when every monomial has the same parity; nullopt for zero or mixed.
            std::optional<Parity> homogeneous_parity() const
            {
                std::optional<Parity> p;
                for (const auto& [m, c] : terms_) {
                    if (!p) {
                        p = m.parity();
                    }
                    else if (*p != m.parity()) {
                        return std::nullopt;
                    }
                }
                return p;
            }

            int degree() const noexcept
            {
                int d = 0;
                for (const auto& [m, c] : terms_) d = std::max(d, m.degree());
                return d;
            }

            // Highest jet order among the variables that occur.
            int jet_order() const noexcept
            {
                int k = 0;
                for (const auto& [m, c] : terms_) {
                    for (const auto& [v, e] : m.even) k = std::max(k, v.order());
                    for (const auto& v : m.odd) k = std::max(k, v.order());
                }
                return k;
            }

            std::set<JetVariable> variables() const
            {
                std::set<JetVariable> vs;
                for (const auto& [m, c] : terms_) {
                    for (const auto& [v, e] : m.even) vs.insert(v);
                    for (const auto& v : m.odd) vs.insert(v);
                }
                return vs;
            }

            Poly& operator+=(const Poly& o)
            {
                for (const auto& [m, c] : o.terms_) add_term(m, c);
                return *this;
            }

            Poly& operator-=(const Poly& o)
            {
                for (const auto& [m, c] : o.terms_) add_term(m, -c);
                return *this;
            }

            Poly& operator*=(const Rational& s)
            {
                if (s == 0) {
                    terms_.clear();
                    return *this;
                }
                for (auto& [m, c] : terms_) c *= s;
                return *this;
            }

            friend Poly operator+(Poly a, const Poly& b) { return a += b; }
            friend Poly operator-(Poly a, const Poly& b) { return a -= b; }
            friend Poly operator-(Poly a) { return a *= Rational(-1); }
            friend Poly operator*(Poly a, const Rational& s) { return a *= s; }
            friend Poly operator*(const Rational& s, Poly a) { return a *= s; }

            friend Poly operator*(const Poly& a, const Poly& b)
            {
                Poly out;
                Monomial m;
                for (const auto& [ma, ca] : a.terms_) {
                    for (const auto& [mb, cb] : b.terms_) {
                        int sign = multiply_monomials(ma, mb, m);
                        if (sign == 0) continue;
                        Rational c = ca * cb;
                        if (sign < 0) c = -c;
                        out.add_term(m, c);
                    }
                }
                return out;
            }

            Poly& operator*=(const Poly& o) { return *this = *this * o; }

            friend bool operator==(const Poly&, const Poly&) = default;

            std::string to_string() const;

        private:
            TermMap terms_;
    };

    inline Poly pow(const Poly& p, int exponent)
    {
        Poly r(1);
        for (int i = 0; i < exponent; ++i) r = r * p;
        return r;
    }

    // Monomials with the coefficient folded in, as single-term polynomials.
    inline std::vector<Poly> split_terms(const Poly& p)
    {
        std::vector<Poly> out;
        for (const auto& [m, c] : p.terms()) out.push_back(Poly::monomial(m, c));
        return out;
    }

    inline std::string format_rational(const Rational& q)
    {
        return q.get_str();
    }

    inline std::string monomial_to_string(const Monomial& m)
    {
        std::string s;
        auto append = [&](const std::string& piece) {
            if (!s.empty()) s += "*";
            s += piece;
        };
        for (const auto& [v, e] : m.even) append(e == 1 ? v.to_string() : v.to_string() + "^" + std::to_string(e));
        for (const auto& v : m.odd) append(v.to_string());
        return s;
    }

    inline std::string Poly::to_string() const
    {
        if (terms_.empty()) return "0";
        std::string out;
        bool first = true;
        for (const auto& [m, c] : terms_) {
            Rational mag = abs(c);
            if (first) {
                if (c < 0) out += "-";
            }
            else {
                out += (c < 0) ? " - " : " + ";
            }
            first = false;
            if (m.is_unit()) {
                out += format_rational(mag);
            }
            else if (mag == 1) {
                out += monomial_to_string(m);
            }
            else {
                out += format_rational(mag) + "*" + monomial_to_string(m);
            }
        }
        return out;
    }

    // Left partial derivative: moves the variable to the front before removing it.
    inline Poly partial(const Poly& p, const JetVariable& v)
    {
        Poly out;
        for (const auto& [m, c] : p.terms()) {
            if (v.parity() == 0) {
                for (std::size_t i = 0; i < m.even.size(); ++i) {
                    if (!(m.even[i].first == v)) continue;
                    Monomial r = m;
                    int e = r.even[i].second;
                    if (e == 1) {
                        r.even.erase(r.even.begin() + static_cast<std::ptrdiff_t>(i));
                    }
                    else {
                        r.even[i].second = e - 1;
                    }
                    out.add_term(std::move(r), c * e);
                }
            }
            else {
                for (std::size_t j = 0; j < m.odd.size(); ++j) {
                    if (!(m.odd[j] == v)) continue;
                    Monomial r = m;
                    r.odd.erase(r.odd.begin() + static_cast<std::ptrdiff_t>(j));
                    out.add_term(std::move(r), c * sign_of(static_cast<int>(j)));
                }
            }
        }
        return out;
    }

    // Right partial derivative: moves the variable to the back before removing it.
    inline Poly right_partial(const Poly& p, const JetVariable& v)
    {
        if (v.parity() == 0) return partial(p, v);
        Poly out;
        for (const auto& [m, c] : p.terms()) {
            for (std::size_t j = 0; j < m.odd.size(); ++j) {
                if (!(m.odd[j] == v)) continue;
                Monomial r = m;
                r.odd.erase(r.odd.begin() + static_cast<std::ptrdiff_t>(j));
                int after = static_cast<int>(m.odd.size() - 1 - j);
                out.add_term(std::move(r), c * sign_of(after));
            }
        }
        return out;
    }

    using VariableMap = std::function<Poly(const JetVariable&)>;

    namespace detail
    {
        inline Poly even_prefix(const Monomial& m)
        {
            Monomial e;
            e.even = m.even;
            return Poly::monomial(std::move(e));
        }

        inline Poly odd_range(const Monomial& m, std::size_t begin, std::size_t end)
        {
            Monomial o;
            o.odd.assign(m.odd.begin() + static_cast<std::ptrdiff_t>(begin),
                         m.odd.begin() + static_cast<std::ptrdiff_t>(end));
            return Poly::monomial(std::move(o));
        }
    }

    // Left graded derivation of the given parity determined by its values on
    // generators: D(ab) = D(a) b + (-1)^{[D][a]} a D(b).
    inline Poly apply_left_derivation(const Poly& p, Parity derivation_parity, const VariableMap& on_generator)
    {
        Poly out;
        for (const auto& [m, c] : p.terms()) {
            Poly odd_all = detail::odd_range(m, 0, m.odd.size());
            for (std::size_t i = 0; i < m.even.size(); ++i) {
                Poly image = on_generator(m.even[i].first);
                if (image.is_zero()) continue;
                Monomial rest = m;
                rest.odd.clear();
                int e = rest.even[i].second;
                if (e == 1) {
                    rest.even.erase(rest.even.begin() + static_cast<std::ptrdiff_t>(i));
                }
                else {
                    rest.even[i].second = e - 1;
                }
                out += Poly::monomial(std::move(rest), c * e) * image * odd_all;
            }
            Poly evens = detail::even_prefix(m);
            for (std::size_t j = 0; j < m.odd.size(); ++j) {
                Poly image = on_generator(m.odd[j]);
                if (image.is_zero()) continue;
                Rational coeff = c * sign_of(derivation_parity * static_cast<int>(j));
                out += coeff * (evens * detail::odd_range(m, 0, j) * image * detail::odd_range(m, j + 1, m.odd.size()));
            }
        }
        return out;
    }

    // Right graded derivation: D(ab) = a D(b) + (-1)^{[D][b]} D(a) b.
    inline Poly apply_right_derivation(const Poly& p, Parity derivation_parity, const VariableMap& on_generator)
    {
        Poly out;
        for (const auto& [m, c] : p.terms()) {
            int k = static_cast<int>(m.odd.size());
            Poly odd_all = detail::odd_range(m, 0, m.odd.size());
            for (std::size_t i = 0; i < m.even.size(); ++i) {
                Poly image = on_generator(m.even[i].first);
                if (image.is_zero()) continue;
                Monomial rest = m;
                rest.odd.clear();
                int e = rest.even[i].second;
                if (e == 1) {
                    rest.even.erase(rest.even.begin() + static_cast<std::ptrdiff_t>(i));
                }
                else {
                    rest.even[i].second = e - 1;
                }
                Rational coeff = c * e * sign_of(derivation_parity * k);
                out += Poly::monomial(std::move(rest), coeff) * image * odd_all;
            }
            Poly evens = detail::even_prefix(m);
            for (std::size_t j = 0; j < m.odd.size(); ++j) {
                Poly image = on_generator(m.odd[j]);
                if (image.is_zero()) continue;
                int after = k - 1 - static_cast<int>(j);
                Rational coeff = c * sign_of(derivation_parity * after);
                out += coeff * (evens * detail::odd_range(m, 0, j) * image * detail::odd_range(m, j + 1, m.odd.size()));
            }
        }
        return out;
    }

    inline void check_jet_cap(const JetVariable& v, const Chart& chart)
    {
        if (v.order() > chart.jet_cap) {
            throw TruncationError("jet order " + std::to_string(v.order()) + " of " + v.to_string() +
                                  " exceeds the jet cap " + std::to_string(chart.jet_cap));
        }
    }

    // Total derivative d_lambda = partial_lambda + s^A_{lambda+Lambda} partial^Lambda_A.
    inline Poly total_derivative(const Poly& p, int lambda, const Chart& chart)
    {
        Poly out;
        for (const auto& [m, c] : p.terms()) {
            for (std::size_t i = 0; i < m.even.size(); ++i) {
                const auto& [v, e] = m.even[i];
                Monomial r = m;
                if (e == 1) {
                    r.even.erase(r.even.begin() + static_cast<std::ptrdiff_t>(i));
                }
                else {
                    r.even[i].second = e - 1;
                }
                if (v.is_coordinate()) {
                    if (v.symbol->coordinate == lambda) out.add_term(std::move(r), c * e);
                    continue;
                }
                JetVariable dv = v.derived(lambda);
                check_jet_cap(dv, chart);
                insert_even(r.even, dv, 1);
                out.add_term(std::move(r), c * e);
            }
            for (std::size_t j = 0; j < m.odd.size(); ++j) {
                Monomial r = m;
                r.odd[j] = m.odd[j].derived(lambda);
                check_jet_cap(r.odd[j], chart);
                int sign = canonicalize_odd(r.odd);
                if (sign == 0) continue;
                out.add_term(std::move(r), sign > 0 ? c : Rational(-c));
            }
        }
        return out;
    }

    // d_Lambda = d_{lambda_1} ... d_{lambda_k}
    inline Poly total_derivative(const Poly& p, const MultiIndex& lambda, const Chart& chart)
    {
        Poly r = p;
        for (auto l : lambda.entries()) {
            if (r.is_zero()) break;
            r = total_derivative(r, l, chart);
        }
        return r;
    }
}
