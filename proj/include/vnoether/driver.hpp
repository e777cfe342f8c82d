#pragma once

#include <chrono>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "vnoether/gauge.hpp"
#include "vnoether/model.hpp"
#include "vnoether/serialize.hpp"
#include "vnoether/superpotential.hpp"
#include "vnoether/variational.hpp"

namespace vnoether
{
    enum ExitCode
    {
        exit_pass = 0,
        exit_failure = 1,
        exit_usage = 2,
        exit_resource = 3
    };

    struct DriverOptions
    {
        int jet_cap = 6;
        AnsatzOptions ansatz;
        bool timing = false;
        std::optional<std::string> field;
        // debug: perturb the current before extraction
        bool break_current = false;
    };

    // Jet cap from VNOETHER_JET_CAP, or `fallback` when unset or malformed.
    inline int default_jet_cap(int fallback = 6)
    {
        const char* env = std::getenv("VNOETHER_JET_CAP");
        if (!env || !*env) return fallback;
        try {
            std::size_t used = 0;
            int v = std::stoi(env, &used);
            if (used == std::string(env).size() && v >= 1) return v;
        }
        catch (const std::exception&) {
        }
        return fallback;
    }

    struct StepResult
    {
        std::string name;
        // pass | fail | bound_exhausted
        std::string status = "pass";
        std::vector<std::string> lines;
        Json payload = Json::object();
    };

    struct RunReport
    {
        std::string command;
        std::string model;
        std::vector<StepResult> steps;
        std::string error;
        int exit_code = exit_pass;
        double elapsed_ms = 0;

        void finish()
        {
            if (!error.empty()) return;
            bool failed = false;
            bool exhausted = false;
            for (const auto& s : steps) {
                failed = failed || s.status == "fail";
                exhausted = exhausted || s.status == "bound_exhausted";
            }
            exit_code = failed ? exit_failure : exhausted ? exit_resource : exit_pass;
        }

        std::string status() const
        {
            switch (exit_code) {
                case exit_pass: return "pass";
                case exit_failure: return "fail";
                case exit_resource: return "bound_exhausted";
                default: return "error";
            }
        }

        Json to_json(bool timing) const
        {
            Json out;
            out["command"] = command;
            out["model"] = model;
            out["status"] = status();
            out["exit_code"] = exit_code;
            if (!error.empty()) out["error"] = error;
            Json steps_json = Json::array();
            for (const auto& s : steps) {
                Json j;
                j["name"] = s.name;
                j["status"] = s.status;
                j["result"] = s.payload;
                steps_json.push_back(std::move(j));
            }
            out["steps"] = std::move(steps_json);
            if (timing) out["timing_ms"] = elapsed_ms;
            return out;
        }

        std::string to_text(bool timing) const
        {
            std::ostringstream out;
            out << "command: " << command << "\n";
            out << "model: " << model << "\n";
            for (const auto& s : steps) {
                out << "[" << s.status << "] " << s.name << "\n";
                for (const auto& l : s.lines) out << "    " << l << "\n";
            }
            if (!error.empty()) out << "error: " << error << "\n";
            out << "status: " << status() << "\n";
            if (timing) out << "timing_ms: " << elapsed_ms << "\n";
            return out.str();
        }
    };

    namespace driver
    {
        inline Json poly_json(const Poly& p)
        {
            Json j;
            j["text"] = p.to_string();
            j["terms"] = to_json(p);
            return j;
        }

        inline std::string read_model_file(const std::string& path)
        {
            std::ifstream in(path, std::ios::binary);
            if (!in) throw DeclarationError("cannot read model file '" + path + "'");
            std::stringstream ss;
            ss << in.rdbuf();
            return ss.str();
        }

        inline std::vector<const ModelIdentity*> find_identities(const ElaboratedModel& m, const std::string& name)
        {
            std::vector<const ModelIdentity*> out;
            for (const auto& d : m.identities) {
                if (d.name == name) return {&d};
            }
            for (const auto& d : m.identities) {
                if (d.declaration == name) out.push_back(&d);
            }
            return out;
        }

        inline std::string jet_name(const JetVariable& v) { return v.to_string(); }

        inline void add_vector_field(StepResult& step, const GeneralizedVectorField& u, const std::string& label)
        {
            Json comps = Json::object();
            for (const auto& [field, p] : u.vertical()) {
                step.lines.push_back(label + "[" + field.name() + "] = " + p.to_string());
                comps[field.name()] = poly_json(p);
            }
            if (comps.empty()) step.lines.push_back(label + " = 0");
            step.payload[label] = std::move(comps);
        }

        inline void add_components(StepResult& step, const std::vector<Poly>& v, const std::string& label)
        {
            Json arr = Json::array();
            for (std::size_t mu = 0; mu < v.size(); ++mu) {
                step.lines.push_back(label + "^" + std::to_string(mu) + " = " + v[mu].to_string());
                arr.push_back(poly_json(v[mu]));
            }
            step.payload[label] = std::move(arr);
        }

        inline void add_antisymmetric(StepResult& step, const std::vector<std::vector<Poly>>& U, const std::string& label)
        {
            Json arr = Json::array();
            for (std::size_t nu = 0; nu < U.size(); ++nu) {
                for (std::size_t mu = nu + 1; mu < U.size(); ++mu) {
                    step.lines.push_back(label + "^{" + std::to_string(nu) + std::to_string(mu) + "} = " + U[nu][mu].to_string());
                    Json e;
                    e["nu"] = nu;
                    e["mu"] = mu;
                    e["value"] = poly_json(U[nu][mu]);
                    arr.push_back(std::move(e));
                }
            }
            step.payload[label] = std::move(arr);
        }

        inline void add_el_table(StepResult& step, const std::vector<ELCombination>& W, const std::string& label)
        {
            Json arr = Json::array();
            for (std::size_t mu = 0; mu < W.size(); ++mu) {
                for (const auto& [key, coeff] : W[mu]) {
                    std::string target = "E[" + key.name() + "]";
                    if (!key.index.empty()) target = "d_{" + key.index.digits() + "} " + target;
                    step.lines.push_back(label + "^" + std::to_string(mu) + " += (" + coeff.to_string() + ") " + target);
                    Json e;
                    e["mu"] = mu;
                    e["field"] = key.name();
                    e["index"] = multi_index_to_json(key.index);
                    e["coefficient"] = poly_json(coeff);
                    arr.push_back(std::move(e));
                }
            }
            step.payload[label] = std::move(arr);
        }

        // Runs `body`, turning library failures into step statuses.
        inline void guarded(StepResult& step, const std::function<void()>& body)
        {
            try {
                body();
            }
            catch (const ResourceError& e) {
                step.status = "bound_exhausted";
                step.lines.push_back(std::string("reason: ") + e.what());
                step.payload["reason"] = e.what();
            }
            catch (const TruncationError& e) {
                step.status = "bound_exhausted";
                step.lines.push_back(std::string("reason: ") + e.what());
                step.payload["reason"] = e.what();
            }
            catch (const ConsistencyError& e) {
                step.status = "fail";
                step.lines.push_back(std::string("reason: ") + e.what());
                step.payload["reason"] = e.what();
            }
        }

        struct Split
        {
            GeneralizedVectorField u;
            std::vector<Poly> J;
            SuperpotentialSplit split;
            SplitReport report;
        };

        inline Split superpotential_of(const GeneralizedVectorField& u, const ElaboratedModel& m, const DriverOptions& options)
        {
            Split out;
            out.u = u;
            auto sym = is_variational_symmetry(u, m.lagrangian, options.ansatz);
            if (sym.status == ExactnessStatus::bound_exhausted) throw ResourceError("variational symmetry check: " + sym.reason);
            if (!sym.is_symmetry) throw ConsistencyError("not a variational symmetry: " + sym.reason);
            out.J = noether_current(u, m.lagrangian, sym.sigma);
            if (options.break_current && !out.J.empty()) {
                Symbol ghost;
                for (const auto& [field, p] : u.vertical()) {
                    for (const auto& v : p.variables()) {
                        if (v.kind() == SymbolKind::ghost) ghost = v.symbol;
                    }
                }
                if (ghost && !m.fields.empty()) out.J[0] += Poly::variable(jet(ghost, MultiIndex{0})) * Poly::variable(jet(m.fields[0]));
            }
            out.split = extract(out.J, u, m.lagrangian, options.ansatz);
            out.report = verify_split(out.J, out.split, euler_lagrange(m.lagrangian), m.chart);
            return out;
        }

        inline void report_split(StepResult& step, const Split& s)
        {
            add_components(step, s.J, "J");
            add_el_table(step, s.split.W_coefficients, "W_coefficients");
            add_components(step, s.split.W, "W");
            add_antisymmetric(step, s.split.U, "U");
            add_antisymmetric(step, s.split.exact_remainder_witness, "remainder_U");
            Json verdict;
            verdict["antisymmetric"] = s.report.antisymmetric;
            verdict["reconstructs"] = s.report.reconstructs;
            verdict["W_on_shell"] = s.report.W_on_shell;
            step.payload["verdict"] = std::move(verdict);
            step.lines.push_back(std::string("U antisymmetric: ") + (s.report.antisymmetric ? "yes" : "no"));
            step.lines.push_back(std::string("J = W + d_nu U^{nu mu}: ") + (s.report.reconstructs ? "yes" : "no"));
            step.lines.push_back(std::string("W in Euler-Lagrange ideal: ") + (s.report.W_on_shell ? "yes" : "no"));
            if (!s.report.ok()) step.status = "fail";
        }

        inline const ModelIdentity& single_identity(const ElaboratedModel& m, const std::string& name)
        {
            auto ids = find_identities(m, name);
            if (ids.empty()) throw DeclarationError("undeclared identity '" + name + "'");
            if (ids.size() > 1) throw DeclarationError("'" + name + "' names an identity family; pick one component");
            return *ids.front();
        }

        inline GaugeSymmetry gauge_of(const ModelIdentity& id, const ElaboratedModel& m, const DriverOptions& options)
        {
            if (!id.ghost) throw DeclarationError("identity '" + id.name + "' has no ghost declared");
            return gauge_symmetry(id.delta, id.ghost, m.lagrangian, options.ansatz);
        }

        inline void run_el(RunReport& r, const ElaboratedModel& m, const DriverOptions& options)
        {
            auto E = euler_lagrange(m.lagrangian);
            bool found = !options.field;
            for (const auto& f : m.fields) {
                if (options.field && f->name != *options.field) continue;
                found = true;
                StepResult step;
                step.name = "euler-lagrange " + f->name;
                auto it = E.find(jet(f));
                Poly e = it == E.end() ? Poly() : it->second;
                step.lines.push_back("E[" + f->name + "] = " + e.to_string());
                step.payload["field"] = f->name;
                step.payload["expression"] = poly_json(e);
                r.steps.push_back(std::move(step));
            }
            if (!found) throw DeclarationError("undeclared field '" + *options.field + "'");
        }

        inline void run_check_identity(RunReport& r, const ElaboratedModel& m, const std::string& name)
        {
            auto ids = find_identities(m, name);
            if (ids.empty()) throw DeclarationError("undeclared identity '" + name + "'");
            auto E = euler_lagrange(m.lagrangian);
            for (const auto* id : ids) {
                StepResult step;
                step.name = "identity " + id->name;
                Poly residual = koszul_tate(id->delta.density(), E, m.chart);
                step.status = residual.is_zero() ? "pass" : "fail";
                step.lines.push_back("operator = " + id->delta.density().to_string());
                step.lines.push_back("residual = " + residual.to_string());
                step.payload["operator"] = poly_json(id->delta.density());
                step.payload["residual"] = poly_json(residual);
                r.steps.push_back(std::move(step));
            }
        }

        inline void run_gauge_symmetry(RunReport& r, const ElaboratedModel& m, const std::string& name, const DriverOptions& options)
        {
            const auto& id = single_identity(m, name);
            StepResult step;
            step.name = "gauge symmetry " + id.name;
            guarded(step, [&] {
                auto gs = gauge_of(id, m, options);
                step.payload["ghost"] = gs.generator.ghost ? gs.generator.ghost->name : "";
                add_vector_field(step, gs.generator.u, "u");
                add_components(step, gs.sigma, "sigma");
            });
            r.steps.push_back(std::move(step));
        }

        inline void run_superpotential(RunReport& r, const ElaboratedModel& m, const std::string& name, const DriverOptions& options)
        {
            StepResult step;
            step.name = "superpotential " + name;
            const ModelSymmetry* sym = m.symmetry(name);
            const ModelIdentity* id = sym ? nullptr : &single_identity(m, name);
            guarded(step, [&] {
                GeneralizedVectorField u = sym ? sym->u : gauge_of(*id, m, options).generator.u;
                add_vector_field(step, u, "u");
                report_split(step, superpotential_of(u, m, options));
            });
            r.steps.push_back(std::move(step));
        }

        inline bool has_ghost(const GeneralizedVectorField& u)
        {
            for (const auto& [field, p] : u.vertical()) {
                for (const auto& v : p.variables()) {
                    if (v.kind() == SymbolKind::ghost) return true;
                }
            }
            return false;
        }

        inline void run_verify(RunReport& r, const ElaboratedModel& m, const DriverOptions& options)
        {
            auto E = euler_lagrange(m.lagrangian);
            {
                StepResult step;
                step.name = "lepage equivalent";
                guarded(step, [&] {
                    if (!check_lepage(m.lagrangian)) step.status = "fail";
                });
                r.steps.push_back(std::move(step));
            }
            for (const auto& s : m.symmetries) {
                StepResult residual;
                residual.name = "symmetry " + s.name + ": first variational formula";
                guarded(residual, [&] {
                    auto rest = first_variational_residual(s.u, m.lagrangian);
                    if (!rest.is_zero()) {
                        residual.status = "fail";
                        residual.lines.push_back("residual = " + rest.to_string());
                    }
                });
                r.steps.push_back(std::move(residual));

                StepResult variational;
                variational.name = "symmetry " + s.name + ": variational symmetry";
                guarded(variational, [&] {
                    auto res = is_variational_symmetry(s.u, m.lagrangian, options.ansatz);
                    variational.payload["status"] = to_string(res.status);
                    if (res.status == ExactnessStatus::bound_exhausted) variational.status = "bound_exhausted";
                    else if (!res.is_symmetry) variational.status = "fail";
                    else add_components(variational, res.sigma, "sigma");
                });
                bool symmetric = variational.status == "pass";
                r.steps.push_back(std::move(variational));

                if (has_ghost(s.u) && symmetric) {
                    StepResult split;
                    split.name = "symmetry " + s.name + ": superpotential";
                    guarded(split, [&] { report_split(split, superpotential_of(s.u, m, options)); });
                    r.steps.push_back(std::move(split));
                }
            }
            for (const auto& id : m.identities) {
                StepResult holds;
                holds.name = "identity " + id.name + ": holds";
                Poly residual = koszul_tate(id.delta.density(), E, m.chart);
                if (!residual.is_zero()) {
                    holds.status = "fail";
                    holds.lines.push_back("residual = " + residual.to_string());
                    holds.payload["residual"] = poly_json(residual);
                }
                bool ok = holds.status == "pass";
                r.steps.push_back(std::move(holds));
                if (!ok || !id.ghost) continue;

                StepResult round_trip;
                round_trip.name = "identity " + id.name + ": adjoint round trip";
                guarded(round_trip, [&] {
                    auto g = adjoint(id.delta, id.ghost, m.chart);
                    if (!(recover_identity(g.u, id.ghost, m.chart, id.name) == id.delta)) round_trip.status = "fail";
                });
                r.steps.push_back(std::move(round_trip));

                StepResult gauge;
                gauge.name = "identity " + id.name + ": gauge symmetry";
                std::optional<GaugeSymmetry> gs;
                guarded(gauge, [&] {
                    gs = gauge_of(id, m, options);
                    add_vector_field(gauge, gs->generator.u, "u");
                });
                bool gauge_ok = gauge.status == "pass";
                r.steps.push_back(std::move(gauge));
                if (!gauge_ok) continue;

                StepResult split;
                split.name = "identity " + id.name + ": superpotential";
                guarded(split, [&] { report_split(split, superpotential_of(gs->generator.u, m, options)); });
                r.steps.push_back(std::move(split));
            }
        }
    }

    // Runs one command on a model file. Never throws; errors land in the report.
    inline RunReport run_command(const std::string& command, const std::string& model_path, const std::string& name,
                                 const DriverOptions& options)
    {
        RunReport r;
        r.command = command;
        r.model = model_path;
        auto start = std::chrono::steady_clock::now();
        try {
            ElaboratedModel m = load_model(driver::read_model_file(model_path), options.jet_cap);
            if (command == "el") driver::run_el(r, m, options);
            else if (command == "check-identity") driver::run_check_identity(r, m, name);
            else if (command == "gauge-symmetry") driver::run_gauge_symmetry(r, m, name, options);
            else if (command == "superpotential") driver::run_superpotential(r, m, name, options);
            else if (command == "verify") driver::run_verify(r, m, options);
            else throw DeclarationError("unknown command '" + command + "'");
            r.finish();
        }
        catch (const ResourceError& e) {
            r.error = e.what();
            r.exit_code = exit_resource;
        }
        catch (const TruncationError& e) {
            r.error = e.what();
            r.exit_code = exit_resource;
        }
        catch (const ConsistencyError& e) {
            r.error = e.what();
            r.exit_code = exit_failure;
        }
        catch (const Error& e) {
            r.error = e.what();
            r.exit_code = exit_usage;
        }
        r.elapsed_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
        return r;
    }
}
