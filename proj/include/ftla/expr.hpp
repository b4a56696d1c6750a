// Expression trees for vector-field components.
//
// Grammar (standard infix):
//   expr   := term (('+'|'-') term)*
//   term   := factor (('*'|'/') factor)*
//   factor := '-' factor | power
//   power  := atom ['^' factor]          (right-associative)
//   atom   := number | func '(' expr ')' | ident | '(' expr ')'
//
// State variables are written x1..xn. Any other identifier is a named
// parameter and must be declared before parsing. Functions: sin, cos, exp,
// ln, sqrt. Juxtaposition is not multiplication; write 2*x1, not 2 x1.

#pragma once

#include <map>
#include <set>
#include <string>
#include <vector>

#include "ftla/error.hpp"

namespace ftla {

enum class UnaryOp { Neg, Sin, Cos, Exp, Ln, Sqrt };
enum class BinaryOp { Add, Sub, Mul, Div, Pow };

class Expression {
  public:
    struct Node {
        enum class Kind { Constant, Variable, Parameter, Unary, Binary } kind;
        double value = 0.0;      // Constant
        int var = 0;             // Variable, 1-based
        std::string param;       // Parameter
        UnaryOp uop{};           // Unary
        BinaryOp bop{};          // Binary
        int a = -1, b = -1;      // child indices
    };

    Expression() = default;

    int root() const { return root_; }
    const std::vector<Node>& nodes() const { return nodes_; }
    bool empty() const { return nodes_.empty(); }

    // Evaluate with the given state (0-based) and parameter bindings.
    // Scalar is double or Dual.
    template <typename Scalar>
    Scalar evaluate(const std::vector<Scalar>& state,
                    const std::map<std::string, double>& params) const;

    // Unambiguous textual form; reparsing yields an identically evaluating tree.
    std::string print() const;

    // Indices of state variables and names of parameters referenced.
    std::set<int> variables() const;
    std::set<std::string> parameters() const;

    static Expression parse(const std::string& text, int dimension,
                            const std::set<std::string>& param_names);

  private:
    friend class Parser;
    std::vector<Node> nodes_;
    int root_ = -1;
};

}  // namespace ftla
