#pragma once

#include <algorithm>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "vnoether/forms.hpp"
#include "vnoether/poly.hpp"

namespace vnoether
{
    // upsilon = upsilon^lambda partial_lambda + upsilon^A partial_A. Vertical
    // components are keyed by the order-zero jet of the field; an entry may be
    // zero, which still registers the field for prolongation.
    class GeneralizedVectorField
    {
        public:
            GeneralizedVectorField() = default;

            void set_vertical(const Symbol& field, Poly component)
            {
                if (field->kind == SymbolKind::coordinate) {
                    throw DeclarationError("coordinate " + field->name + " cannot carry a vertical component");
                }
                vertical_[jet(field)] = std::move(component);
            }

            void set_horizontal(int lambda, Poly component)
            {
                if (lambda < 0) throw DeclarationError("negative coordinate index");
                if (static_cast<int>(horizontal_.size()) <= lambda) horizontal_.resize(static_cast<std::size_t>(lambda) + 1);
                horizontal_[static_cast<std::size_t>(lambda)] = std::move(component);
            }

            const std::map<JetVariable, Poly>& vertical() const noexcept { return vertical_; }
            const std::vector<Poly>& horizontal() const noexcept { return horizontal_; }

            Poly vertical_component(const Symbol& field) const
            {
                auto it = vertical_.find(jet(field));
                return it == vertical_.end() ? Poly() : it->second;
            }

            Poly horizontal_component(int lambda) const
            {
                return lambda < static_cast<int>(horizontal_.size()) ? horizontal_[static_cast<std::size_t>(lambda)] : Poly();
            }

            bool is_vertical() const
            {
                for (const auto& h : horizontal_) {
                    if (!h.is_zero()) return false;
                }
                return true;
            }

            // Horizontal part depends on coordinates only.
            bool is_projectable() const
            {
                for (const auto& h : horizontal_) {
                    for (const auto& v : h.variables()) {
                        if (!v.is_coordinate()) return false;
                    }
                }
                return true;
            }

            // Grassmann parity of the derivation, [upsilon^A] + [A] for every
            // non-zero component.
            Parity parity() const
            {
                std::optional<Parity> found;
                auto merge = [&](const Poly& p, Parity shift, const std::string& where) {
                    if (p.is_zero()) return;
                    auto hp = p.homogeneous_parity();
                    if (!hp) throw ConsistencyError("component " + where + " is not parity-homogeneous");
                    Parity q = parity_sum(*hp, shift);
                    if (found && *found != q) throw ConsistencyError("component " + where + " has inconsistent parity");
                    found = q;
                };
                for (const auto& [v, p] : vertical_) merge(p, v.parity(), v.name());
                for (std::size_t l = 0; l < horizontal_.size(); ++l) merge(horizontal_[l], 0, "x" + std::to_string(l));
                return found.value_or(0);
            }

        private:
            std::map<JetVariable, Poly> vertical_;
            std::vector<Poly> horizontal_;
    };

    // Contact derivation theta = upsilon^lambda d_lambda + d_Lambda(upsilon^A - s^A_mu upsilon^mu) partial^Lambda_A.
    class ContactDerivation
    {
        public:
            ContactDerivation(GeneralizedVectorField source, const Chart& chart, int memo_order = 2)
                : source_(std::move(source)), chart_(chart), parity_(source_.parity())
            {
                int top = std::min(memo_order, chart_.jet_cap);
                for (const auto& [base, component] : source_.vertical()) {
                    for (const auto& idx : multi_indices_up_to(chart_.dim, top)) {
                        JetVariable label = base.derived(idx);
                        memo_.emplace(label, compute(label));
                    }
                }
            }

            const GeneralizedVectorField& source() const noexcept { return source_; }
            const Chart& chart() const noexcept { return chart_; }
            Parity parity() const noexcept { return parity_; }
            bool is_vertical() const { return source_.is_vertical(); }

            // theta | theta^A_Lambda = d_Lambda(upsilon^A - s^A_mu upsilon^mu)
            Poly coefficient(const JetVariable& label) const
            {
                if (label.is_coordinate()) throw UnsupportedError("no contact form for coordinate " + label.to_string());
                auto it = memo_.find(label);
                if (it != memo_.end()) return it->second;
                return compute(label);
            }

            // Value on a jet generator: upsilon^lambda on x^lambda,
            // coefficient(s^A_Lambda) + upsilon^mu s^A_{mu+Lambda} on s^A_Lambda.
            Poly on_variable(const JetVariable& v) const
            {
                if (v.is_coordinate()) return source_.horizontal_component(v.symbol->coordinate);
                Poly out = coefficient(v);
                for (int mu = 0; mu < static_cast<int>(source_.horizontal().size()); ++mu) {
                    const Poly& h = source_.horizontal()[static_cast<std::size_t>(mu)];
                    if (h.is_zero()) continue;
                    JetVariable dv = v.derived(mu);
                    check_jet_cap(dv, chart_);
                    out += h * Poly::variable(dv);
                }
                return out;
            }

            // Action on a function as a left graded derivation.
            Poly apply(const Poly& f) const
            {
                return apply_left_derivation(f, parity_, [this](const JetVariable& v) { return on_variable(v); });
            }

        private:
            Poly compute(const JetVariable& label) const
            {
                Poly base = source_.vertical_component(label.symbol);
                JetVariable root = jet(label.symbol);
                for (int mu = 0; mu < static_cast<int>(source_.horizontal().size()); ++mu) {
                    const Poly& h = source_.horizontal()[static_cast<std::size_t>(mu)];
                    if (h.is_zero()) continue;
                    base -= Poly::variable(root.derived(mu)) * h;
                }
                return total_derivative(base, label.index, chart_);
            }

            GeneralizedVectorField source_;
            Chart chart_;
            Parity parity_;
            std::map<JetVariable, Poly> memo_;
    };

    inline ContactDerivation prolong(const GeneralizedVectorField& upsilon, const Chart& chart, int memo_order = 2)
    {
        return ContactDerivation(upsilon, chart, memo_order);
    }

    // Interior product theta | form, a graded antiderivation of form degree -1:
    // theta|(phi ^ sigma) = (theta|phi) ^ sigma + (-1)^{|phi| + [phi][theta]} phi ^ (theta|sigma).
    inline MixedForm contract(const ContactDerivation& theta, const MixedForm& form)
    {
        const Parity q = theta.parity();
        MixedForm out;
        for (const auto& [key, g] : form.components()) {
            std::vector<MixedForm> factors;
            std::vector<Poly> images;
            std::vector<Parity> parities;
            for (const auto& label : key.contact) {
                factors.push_back(MixedForm::contact(label));
                images.push_back(theta.coefficient(label));
                parities.push_back(label.parity());
            }
            for (auto lambda : key.horizontal) {
                factors.push_back(MixedForm::dx(lambda));
                images.push_back(theta.source().horizontal_component(lambda));
                parities.push_back(0);
            }
            MixedForm sum;
            int prefix = 1;
            for (std::size_t i = 0; i < factors.size(); ++i) {
                if (!images[i].is_zero()) {
                    MixedForm term = MixedForm::function(Poly(prefix));
                    for (std::size_t j = 0; j < factors.size(); ++j) {
                        term = wedge(term, j == i ? MixedForm::function(images[i]) : factors[j]);
                    }
                    sum += term;
                }
                prefix *= sign_of(1 + parities[i] * q);
            }
            if (sum.is_zero()) continue;
            auto [g_even, g_odd] = detail::split_by_parity(g);
            if (!g_even.is_zero()) out += g_even * sum;
            if (!g_odd.is_zero()) out += (sign_of(q) > 0 ? g_odd : -g_odd) * sum;
        }
        return out;
    }

    // L_theta = theta | d + d (theta | .)
    inline MixedForm lie_derivative(const ContactDerivation& theta, const MixedForm& form)
    {
        const Chart& chart = theta.chart();
        return contract(theta, exterior_d(form, chart)) + exterior_d(contract(theta, form), chart);
    }

    // A vertical contact derivation squares to zero iff it is odd and
    // annihilates its own components.
    inline bool is_nilpotent(const ContactDerivation& theta)
    {
        if (!theta.is_vertical()) throw UnsupportedError("nilpotency is decided for vertical derivations only");
        if (theta.parity() != 1) return false;
        for (const auto& [v, component] : theta.source().vertical()) {
            if (!theta.apply(component).is_zero()) return false;
        }
        return true;
    }
}
