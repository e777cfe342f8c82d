#pragma once

#include <algorithm>
#include <compare>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "vnoether/poly.hpp"

namespace vnoether
{
    // Basis element theta^{A_1}_{Lambda_1} ^ ... ^ theta^{A_k}_{Lambda_k} ^ dx^{i_1} ^ ... ^ dx^{i_r}.
    // Contact labels are ascending; a label may repeat only when it belongs to
    // an odd field (theta ^ theta is symmetric there). Horizontal indices are
    // strictly ascending.
    struct FormBasis
    {
        std::vector<JetVariable> contact;
        std::vector<std::uint8_t> horizontal;

        int contact_degree() const noexcept { return static_cast<int>(contact.size()); }
        int horizontal_degree() const noexcept { return static_cast<int>(horizontal.size()); }

        Parity contact_parity() const noexcept
        {
            int p = 0;
            for (const auto& v : contact) p += v.parity();
            return p & 1;
        }

        friend bool operator==(const FormBasis&, const FormBasis&) = default;
        friend std::strong_ordering operator<=>(const FormBasis& a, const FormBasis& b)
        {
            if (auto c = a.contact.size() <=> b.contact.size(); c != 0) return c;
            if (auto c = a.horizontal <=> b.horizontal; c != 0) return c;
            return a.contact <=> b.contact;
        }
    };

    namespace detail
    {
        // Sign of sorting contact one-forms, 0 if an even label repeats.
        inline int canonicalize_contact(std::vector<JetVariable>& labels)
        {
            int sign = 1;
            for (std::size_t i = 1; i < labels.size(); ++i) {
                std::size_t j = i;
                while (j > 0) {
                    auto c = labels[j - 1] <=> labels[j];
                    if (c == 0) {
                        if (labels[j].parity() == 0) return 0;
                        break;
                    }
                    if (c < 0) break;
                    // theta_a ^ theta_b = (-1)^{1 + [a][b]} theta_b ^ theta_a
                    sign *= sign_of(1 + labels[j - 1].parity() * labels[j].parity());
                    std::swap(labels[j - 1], labels[j]);
                    --j;
                }
            }
            return sign;
        }

        inline int canonicalize_horizontal(std::vector<std::uint8_t>& idx)
        {
            int sign = 1;
            for (std::size_t i = 1; i < idx.size(); ++i) {
                for (std::size_t j = i; j > 0 && idx[j - 1] >= idx[j]; --j) {
                    if (idx[j - 1] == idx[j]) return 0;
                    std::swap(idx[j - 1], idx[j]);
                    sign = -sign;
                }
            }
            return sign;
        }

        inline std::pair<Poly, Poly> split_by_parity(const Poly& p)
        {
            Poly even, odd;
            for (const auto& [m, c] : p.terms()) {
                if (m.parity() == 0) {
                    even.add_term(m, c);
                }
                else {
                    odd.add_term(m, c);
                }
            }
            return {even, odd};
        }
    }

    // Graded differential form on the jet chart: a finite sum of coefficient
    // functions times basis elements, with the coefficient written on the left.
    // Mixed bidegrees are allowed (exterior_d produces them).
    class MixedForm
    {
        public:
            using ComponentMap = std::map<FormBasis, Poly>;

            MixedForm() = default;

            static MixedForm function(const Poly& f)
            {
                MixedForm m;
                m.add(f, {}, {});
                return m;
            }

            static MixedForm contact(const JetVariable& label, const Poly& coeff = Poly(1))
            {
                MixedForm m;
                m.add(coeff, {label}, {});
                return m;
            }

            static MixedForm dx(int lambda)
            {
                MixedForm m;
                m.add(Poly(1), {}, {static_cast<std::uint8_t>(lambda)});
                return m;
            }

            static MixedForm horizontal(const Poly& coeff, std::vector<std::uint8_t> indices)
            {
                MixedForm m;
                m.add(coeff, {}, std::move(indices));
                return m;
            }

            // Adds coeff * theta_{labels} ^ dx^{indices}, bringing the basis into
            // canonical order first.
            void add(const Poly& coeff, std::vector<JetVariable> labels, std::vector<std::uint8_t> indices)
            {
                if (coeff.is_zero()) return;
                int s1 = detail::canonicalize_contact(labels);
                if (s1 == 0) return;
                int s2 = detail::canonicalize_horizontal(indices);
                if (s2 == 0) return;
                FormBasis key{std::move(labels), std::move(indices)};
                auto it = components_.find(key);
                Poly term = (s1 * s2 > 0) ? coeff : -coeff;
                if (it == components_.end()) {
                    components_.emplace(std::move(key), std::move(term));
                }
                else {
                    it->second += term;
                    if (it->second.is_zero()) components_.erase(it);
                }
            }

            const ComponentMap& components() const noexcept { return components_; }
            bool is_zero() const noexcept { return components_.empty(); }

            Poly component(const FormBasis& key) const
            {
                auto it = components_.find(key);
                return it == components_.end() ? Poly() : it->second;
            }

            // The (k, r) bidegrees present.
            std::set<std::pair<int, int>> bidegrees() const
            {
                std::set<std::pair<int, int>> out;
                for (const auto& [k, f] : components_) out.insert({k.contact_degree(), k.horizontal_degree()});
                return out;
            }

            MixedForm& operator+=(const MixedForm& o)
            {
                for (const auto& [k, f] : o.components_) add(f, k.contact, k.horizontal);
                return *this;
            }

            MixedForm& operator-=(const MixedForm& o)
            {
                for (const auto& [k, f] : o.components_) add(-f, k.contact, k.horizontal);
                return *this;
            }

            MixedForm& operator*=(const Rational& s)
            {
                if (s == 0) {
                    components_.clear();
                    return *this;
                }
                for (auto& [k, f] : components_) f *= s;
                return *this;
            }

            friend MixedForm operator+(MixedForm a, const MixedForm& b) { return a += b; }
            friend MixedForm operator-(MixedForm a, const MixedForm& b) { return a -= b; }
            friend MixedForm operator-(MixedForm a) { return a *= Rational(-1); }
            friend MixedForm operator*(const Rational& s, MixedForm a) { return a *= s; }

            // f ^ form, a function multiplied in from the left.
            friend MixedForm operator*(const Poly& f, const MixedForm& form)
            {
                MixedForm out;
                for (const auto& [k, g] : form.components_) out.add(f * g, k.contact, k.horizontal);
                return out;
            }

            friend bool operator==(const MixedForm&, const MixedForm&) = default;

            std::string to_string() const
            {
                if (components_.empty()) return "0";
                std::string s;
                for (const auto& [k, f] : components_) {
                    if (!s.empty()) s += " + ";
                    s += "(" + f.to_string() + ")";
                    for (const auto& v : k.contact) s += " theta[" + v.to_string() + "]";
                    for (auto i : k.horizontal) s += " dx" + std::to_string(static_cast<int>(i));
                }
                return s;
            }

        private:
            ComponentMap components_;
    };

    // (f theta_A dx_I) ^ (g theta_B dx_J) = (-1)^{[g][theta_A] + |I||B|} f g theta_A theta_B dx_I dx_J
    inline MixedForm wedge(const MixedForm& a, const MixedForm& b)
    {
        MixedForm out;
        for (const auto& [ka, fa] : a.components()) {
            for (const auto& [kb, fb] : b.components()) {
                auto [fb_even, fb_odd] = detail::split_by_parity(fb);
                int pass_dx = sign_of(ka.horizontal_degree() * kb.contact_degree());
                std::vector<JetVariable> labels = ka.contact;
                labels.insert(labels.end(), kb.contact.begin(), kb.contact.end());
                std::vector<std::uint8_t> idx = ka.horizontal;
                idx.insert(idx.end(), kb.horizontal.begin(), kb.horizontal.end());
                if (!fb_even.is_zero()) out.add(Rational(pass_dx) * (fa * fb_even), labels, idx);
                if (!fb_odd.is_zero()) {
                    int s = pass_dx * sign_of(ka.contact_parity());
                    out.add(Rational(s) * (fa * fb_odd), labels, idx);
                }
            }
        }
        return out;
    }

    // Total differential d_H = dx^lambda ^ d_lambda, where d_lambda acts on
    // coefficients as the total derivative and on contact labels by
    // theta^A_Lambda -> theta^A_{lambda+Lambda}.
    inline MixedForm d_H(const MixedForm& form, const Chart& chart)
    {
        MixedForm out;
        for (const auto& [k, f] : form.components()) {
            Rational past_contact = sign_of(k.contact_degree());
            for (int lambda = 0; lambda < chart.dim; ++lambda) {
                std::vector<std::uint8_t> idx;
                idx.push_back(static_cast<std::uint8_t>(lambda));
                idx.insert(idx.end(), k.horizontal.begin(), k.horizontal.end());
                Poly df = total_derivative(f, lambda, chart);
                if (!df.is_zero()) out.add(past_contact * df, k.contact, idx);
                for (std::size_t i = 0; i < k.contact.size(); ++i) {
                    std::vector<JetVariable> labels = k.contact;
                    labels[i] = labels[i].derived(lambda);
                    check_jet_cap(labels[i], chart);
                    out.add(past_contact * f, std::move(labels), idx);
                }
            }
        }
        return out;
    }

    // Vertical differential: d_V f = theta_v ^ partial_v f on coefficients,
    // d_V theta = 0, d_V dx = 0.
    inline MixedForm d_V(const MixedForm& form)
    {
        MixedForm out;
        for (const auto& [k, f] : form.components()) {
            for (const auto& v : f.variables()) {
                if (v.is_coordinate()) continue;
                auto [even, odd] = detail::split_by_parity(partial(f, v));
                std::vector<JetVariable> labels{v};
                labels.insert(labels.end(), k.contact.begin(), k.contact.end());
                // theta_v g = (-1)^{[v][g]} g theta_v
                if (!even.is_zero()) out.add(even, labels, k.horizontal);
                if (!odd.is_zero()) out.add(Rational(sign_of(v.parity())) * odd, labels, k.horizontal);
            }
        }
        return out;
    }

    inline MixedForm exterior_d(const MixedForm& form, const Chart& chart)
    {
        return d_H(form, chart) + d_V(form);
    }

    // Horizontal projection: kills every component containing a contact form.
    inline MixedForm h0(const MixedForm& form)
    {
        MixedForm out;
        for (const auto& [k, f] : form.components()) {
            if (k.contact.empty()) out.add(f, {}, k.horizontal);
        }
        return out;
    }

    // Horizontal form of a fixed degree: components indexed by strictly
    // increasing coordinate tuples.
    class HorizontalForm
    {
        public:
            HorizontalForm() = default;
            explicit HorizontalForm(int degree) : degree_(degree) {}

            static HorizontalForm from_mixed(const MixedForm& form, int degree)
            {
                HorizontalForm h(degree);
                for (const auto& [k, f] : form.components()) {
                    if (!k.contact.empty() || k.horizontal_degree() != degree) {
                        throw UnsupportedError("form is not horizontal of degree " + std::to_string(degree));
                    }
                    h.components_[k.horizontal] += f;
                }
                h.prune();
                return h;
            }

            MixedForm to_mixed() const
            {
                MixedForm m;
                for (const auto& [idx, f] : components_) m.add(f, {}, idx);
                return m;
            }

            int degree() const noexcept { return degree_; }
            const std::map<std::vector<std::uint8_t>, Poly>& components() const noexcept { return components_; }
            bool is_zero() const noexcept { return components_.empty(); }

            Poly component(const std::vector<std::uint8_t>& idx) const
            {
                auto it = components_.find(idx);
                return it == components_.end() ? Poly() : it->second;
            }

            void set(std::vector<std::uint8_t> idx, Poly f)
            {
                components_[std::move(idx)] = std::move(f);
                prune();
            }

            friend bool operator==(const HorizontalForm& a, const HorizontalForm& b)
            {
                return a.components_ == b.components_ && (a.degree_ == b.degree_ || a.components_.empty());
            }

        private:
            void prune()
            {
                for (auto it = components_.begin(); it != components_.end();) {
                    it = it->second.is_zero() ? components_.erase(it) : std::next(it);
                }
            }

            int degree_ = 0;
            std::map<std::vector<std::uint8_t>, Poly> components_;
    };

    inline std::vector<std::uint8_t> all_coordinates_except(int dim, std::initializer_list<int> skip)
    {
        std::vector<std::uint8_t> idx;
        for (int i = 0; i < dim; ++i) {
            bool skipped = false;
            for (int s : skip) skipped = skipped || s == i;
            if (!skipped) idx.push_back(static_cast<std::uint8_t>(i));
        }
        return idx;
    }

    // f * omega, omega = dx^0 ^ ... ^ dx^{n-1}
    inline MixedForm density_form(const Poly& f, int dim)
    {
        return MixedForm::horizontal(f, all_coordinates_except(dim, {}));
    }

    inline Poly density_of(const MixedForm& form, int dim)
    {
        return form.component(FormBasis{{}, all_coordinates_except(dim, {})});
    }

    // omega_mu = partial_mu | omega = (-1)^mu dx^{0..n-1 without mu}
    inline MixedForm omega_mu(int mu, int dim)
    {
        return MixedForm::horizontal(Poly(sign_of(mu)), all_coordinates_except(dim, {mu}));
    }

    // J^mu omega_mu
    inline MixedForm current_form(const std::vector<Poly>& components)
    {
        int dim = static_cast<int>(components.size());
        MixedForm out;
        for (int mu = 0; mu < dim; ++mu) out += components[static_cast<std::size_t>(mu)] * omega_mu(mu, dim);
        return out;
    }

    // Inverse of current_form on horizontal (n-1)-forms.
    inline std::vector<Poly> current_components(const MixedForm& form, int dim)
    {
        std::vector<Poly> J(static_cast<std::size_t>(dim));
        for (int mu = 0; mu < dim; ++mu) {
            J[static_cast<std::size_t>(mu)] =
                Rational(sign_of(mu)) * form.component(FormBasis{{}, all_coordinates_except(dim, {mu})});
        }
        return J;
    }

    // (1/2) U^{nu mu} omega_{nu mu} with omega_{nu mu} = partial_nu | omega_mu;
    // for nu < mu this is (-1)^{nu+mu} U^{nu mu} dx^{all but nu, mu}.
    inline MixedForm superpotential_form(const std::vector<std::vector<Poly>>& U)
    {
        int dim = static_cast<int>(U.size());
        MixedForm out;
        for (int nu = 0; nu < dim; ++nu) {
            for (int mu = nu + 1; mu < dim; ++mu) {
                Poly antisym = Rational(1, 2) * (U[static_cast<std::size_t>(nu)][static_cast<std::size_t>(mu)] -
                                                 U[static_cast<std::size_t>(mu)][static_cast<std::size_t>(nu)]);
                out.add(Rational(sign_of(nu + mu)) * antisym, {}, all_coordinates_except(dim, {nu, mu}));
            }
        }
        return out;
    }

    // Antisymmetric U^{nu mu} read back from a horizontal (n-2)-form.
    inline std::vector<std::vector<Poly>> superpotential_components(const MixedForm& form, int dim)
    {
        std::vector<std::vector<Poly>> U(static_cast<std::size_t>(dim), std::vector<Poly>(static_cast<std::size_t>(dim)));
        for (int nu = 0; nu < dim; ++nu) {
            for (int mu = nu + 1; mu < dim; ++mu) {
                Poly u = Rational(sign_of(nu + mu)) * form.component(FormBasis{{}, all_coordinates_except(dim, {nu, mu})});
                U[static_cast<std::size_t>(nu)][static_cast<std::size_t>(mu)] = u;
                U[static_cast<std::size_t>(mu)][static_cast<std::size_t>(nu)] = -u;
            }
        }
        return U;
    }

    // d_mu J^mu
    inline Poly divergence(const std::vector<Poly>& J, const Chart& chart)
    {
        Poly out;
        for (int mu = 0; mu < static_cast<int>(J.size()); ++mu) {
            out += total_derivative(J[static_cast<std::size_t>(mu)], mu, chart);
        }
        return out;
    }

    // d_nu U^{nu mu}, indexed by mu
    inline std::vector<Poly> divergence(const std::vector<std::vector<Poly>>& U, const Chart& chart)
    {
        int dim = static_cast<int>(U.size());
        std::vector<Poly> out(static_cast<std::size_t>(dim));
        for (int mu = 0; mu < dim; ++mu) {
            for (int nu = 0; nu < dim; ++nu) {
                out[static_cast<std::size_t>(mu)] +=
                    total_derivative(U[static_cast<std::size_t>(nu)][static_cast<std::size_t>(mu)], nu, chart);
            }
        }
        return out;
    }
}
