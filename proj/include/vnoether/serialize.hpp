#pragma once

#include <string>

#include "json.hpp"

#include "vnoether/poly.hpp"

namespace vnoether
{
    using Json = nlohmann::ordered_json;

    inline std::string coefficient_string(const Rational& q)
    {
        return q.get_num().get_str() + "/" + q.get_den().get_str();
    }

    inline Json multi_index_to_json(const MultiIndex& m)
    {
        Json a = Json::array();
        for (auto e : m.entries()) a.push_back(static_cast<int>(e));
        return a;
    }

    // [{coeff: "p/q", even: [[symbol, multi-index, exponent]...], odd: [[symbol, multi-index]...]}...]
    inline Json to_json(const Poly& p)
    {
        Json out = Json::array();
        for (const auto& [m, c] : p.terms()) {
            Json even = Json::array();
            for (const auto& [v, e] : m.even) even.push_back(Json::array({v.name(), multi_index_to_json(v.index), e}));
            Json odd = Json::array();
            for (const auto& v : m.odd) odd.push_back(Json::array({v.name(), multi_index_to_json(v.index)}));
            Json term;
            term["coeff"] = coefficient_string(c);
            term["even"] = std::move(even);
            term["odd"] = std::move(odd);
            out.push_back(std::move(term));
        }
        return out;
    }
}
