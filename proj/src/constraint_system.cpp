#include "packgap/constraint_system.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

namespace packgap {

int ConstraintSystem::add_variable(const std::string& name, VarKind kind,
                                   std::optional<double> lower, std::optional<double> upper) {
    if (index_.count(name)) throw std::logic_error("variable declared twice: " + name);
    const int idx = static_cast<int>(vars_.size());
    vars_.push_back(Variable{name, kind, lower, upper});
    index_[name] = idx;
    return idx;
}

int ConstraintSystem::var_index(const std::string& name) const {
    auto it = index_.find(name);
    if (it == index_.end()) throw std::out_of_range("unknown variable: " + name);
    return it->second;
}

void ConstraintSystem::add_constraint(const std::string& family, const std::string& name,
                                      std::vector<LinTerm> terms, Rel rel, double rhs) {
    for (const auto& t : terms)
        if (t.var < 0 || t.var >= static_cast<int>(vars_.size()))
            throw std::logic_error("constraint " + name + " references undeclared variable");
    rows_.push_back(LinearConstraint{name, family, std::move(terms), rel, rhs});
}

std::map<std::string, int> ConstraintSystem::family_counts() const {
    std::map<std::string, int> counts;
    for (const auto& r : rows_) counts[r.family] += 1;
    return counts;
}

std::vector<ConstraintViolation> ConstraintSystem::check(const std::vector<double>& values,
                                                         double tol) const {
    if (values.size() != vars_.size())
        throw std::invalid_argument("check: substitution does not cover every variable");
    std::vector<ConstraintViolation> out;
    for (std::size_t i = 0; i < vars_.size(); ++i) {
        const Variable& v = vars_[i];
        const double x = values[i];
        if (v.lower && x < *v.lower - tol)
            out.push_back({v.name, "var_bound", *v.lower - x});
        if (v.upper && x > *v.upper + tol)
            out.push_back({v.name, "var_bound", x - *v.upper});
        if (v.kind != VarKind::Real && std::abs(x - std::round(x)) > tol)
            out.push_back({v.name, "var_integrality", std::abs(x - std::round(x))});
        if (v.kind == VarKind::Binary && (x < -tol || x > 1.0 + tol))
            out.push_back({v.name, "var_binary", std::max(-x, x - 1.0)});
    }
    for (const auto& r : rows_) {
        double lhs = 0.0;
        for (const auto& t : r.terms) lhs += t.coef * values[t.var];
        double resid = 0.0;
        switch (r.rel) {
            case Rel::Le: resid = lhs - r.rhs; break;
            case Rel::Ge: resid = r.rhs - lhs; break;
            case Rel::Eq: resid = std::abs(lhs - r.rhs); break;
        }
        if (resid > tol) out.push_back({r.name, r.family, resid});
    }
    return out;
}

static std::string fmt_num(double v) {
    std::ostringstream ss;
    ss.precision(17);
    ss << v;
    return ss.str();
}

std::string ConstraintSystem::to_lp_format(const std::string& title) const {
    std::ostringstream ss;
    ss << "\\ " << title << "\n";
    ss << "\\ feasibility problem, no objective\n";
    ss << "Minimize\n obj: 0\nSubject To\n";
    for (const auto& r : rows_) {
        ss << " " << r.name << ":";
        bool first = true;
        for (const auto& t : r.terms) {
            const double c = t.coef;
            if (c >= 0 && !first)
                ss << " +";
            else if (c < 0)
                ss << " -";
            else
                ss << " ";
            ss << fmt_num(std::abs(c)) << " " << vars_[t.var].name;
            first = false;
        }
        if (first) ss << " 0 __zero";
        switch (r.rel) {
            case Rel::Le: ss << " <= "; break;
            case Rel::Eq: ss << " = "; break;
            case Rel::Ge: ss << " >= "; break;
        }
        ss << fmt_num(r.rhs) << "\n";
    }
    ss << "Bounds\n";
    for (const auto& v : vars_) {
        if (v.kind == VarKind::Binary) continue;
        if (!v.lower && !v.upper) {
            ss << " " << v.name << " free\n";
        } else {
            if (v.lower) ss << " " << fmt_num(*v.lower) << " <= " << v.name;
            else ss << " -inf <= " << v.name;
            if (v.upper) ss << " <= " << fmt_num(*v.upper);
            ss << "\n";
        }
    }
    bool any_bin = false, any_int = false;
    for (const auto& v : vars_) {
        any_bin |= v.kind == VarKind::Binary;
        any_int |= v.kind == VarKind::Integer;
    }
    if (any_bin) {
        ss << "Binary\n";
        for (const auto& v : vars_)
            if (v.kind == VarKind::Binary) ss << " " << v.name << "\n";
    }
    if (any_int) {
        ss << "Generals\n";
        for (const auto& v : vars_)
            if (v.kind == VarKind::Integer) ss << " " << v.name << "\n";
    }
    ss << "End\n";
    return ss.str();
}

}  // namespace packgap
