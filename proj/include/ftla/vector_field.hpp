// Evaluatable right-hand side of an autonomous ODE with exact Jacobians.

#pragma once

#include <Eigen/Dense>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "ftla/expr.hpp"

namespace ftla {

using Eigen::MatrixXd;
using Eigen::VectorXd;

// Immutable after construction; safe to share across threads.
class VectorField {
  public:
    VectorField() = default;
    VectorField(int n, std::vector<Expression> components,
                std::map<std::string, double> parameters,
                std::optional<std::vector<Expression>> jacobian = std::nullopt);

    int dimension() const { return n_; }
    const std::map<std::string, double>& parameters() const { return params_; }
    bool has_analytic_jacobian() const { return jacobian_.has_value(); }

    // Component-wise evaluation; throws EvalError on any non-finite component.
    VectorXd operator()(const VectorXd& x) const;

    // Exact partial derivatives: analytic expressions if provided, otherwise
    // forward-mode dual evaluation, one directional pass per coordinate.
    MatrixXd jacobian(const VectorXd& x) const;

    // Copy with one parameter re-bound; the expressions are shared as-is.
    VectorField with_parameter(const std::string& name, double value) const;

    const std::vector<Expression>& components() const { return comps_; }

  private:
    int n_ = 0;
    std::vector<Expression> comps_;
    std::map<std::string, double> params_;
    std::optional<std::vector<Expression>> jacobian_;  // row-major n*n
};

// One expression per component, newline- or semicolon-separated.
VectorField parse_field(const std::string& source, int n,
                        const std::map<std::string, double>& params);

// DSL text file: '#' line comments, optional `params:` block of
// `name = value` lines, then a `field:` block with one expression per line
// (n is the number of field expressions); optionally a `jacobian:` block with
// n*n expressions (row-major) for an analytic Jacobian.
VectorField parse_field_file(const std::string& text);
VectorField load_field_file(const std::string& path);

}  // namespace ftla
