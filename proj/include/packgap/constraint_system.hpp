#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

namespace packgap {

enum class VarKind { Binary, Integer, Real };
enum class Rel { Le, Eq, Ge };

struct Variable {
    std::string name;
    VarKind kind = VarKind::Real;
    std::optional<double> lower;
    std::optional<double> upper;
};

struct LinTerm {
    double coef = 0.0;
    int var = -1;
};

// sum(coef_i * var_i) REL rhs
struct LinearConstraint {
    std::string name;
    std::string family;
    std::vector<LinTerm> terms;
    Rel rel = Rel::Le;
    double rhs = 0.0;
};

struct ConstraintViolation {
    std::string constraint;
    std::string family;
    double residual = 0.0;  // signed amount by which the row is violated
};

// Neutral linear/indicator constraint IR shared by the MILP-style encoders
// and the substitution-based checkers.
class ConstraintSystem {
public:
    int add_variable(const std::string& name, VarKind kind,
                     std::optional<double> lower = std::nullopt,
                     std::optional<double> upper = std::nullopt);
    int var_index(const std::string& name) const;
    bool has_var(const std::string& name) const { return index_.count(name) > 0; }

    void add_constraint(const std::string& family, const std::string& name,
                        std::vector<LinTerm> terms, Rel rel, double rhs);

    const std::vector<Variable>& variables() const { return vars_; }
    const std::vector<LinearConstraint>& constraints() const { return rows_; }
    std::map<std::string, int> family_counts() const;

    // Substitutes `values` (indexed like variables()) into every row. Rows
    // violated by more than `tol`, and variable bound/integrality breaches,
    // are reported with their residuals.
    std::vector<ConstraintViolation> check(const std::vector<double>& values,
                                           double tol = 1e-9) const;

    // Objective-free feasibility file in LP format.
    std::string to_lp_format(const std::string& title) const;

    double big_m = 0.0;
    double epsilon = 0.0;
    double mu = 0.0;

private:
    std::vector<Variable> vars_;
    std::vector<LinearConstraint> rows_;
    std::map<std::string, int> index_;
};

}  // namespace packgap
