#include "ftla/expr.hpp"

#include <cctype>
#include <cstdlib>
#include <sstream>

#include "ftla/dual.hpp"

namespace ftla {

namespace {

struct Token {
    enum class Type { Number, Ident, Plus, Minus, Star, Slash, Caret, LParen, RParen, End } type;
    std::string text;
    double number = 0.0;
    int line = 1, col = 1;
};

class Lexer {
  public:
    explicit Lexer(const std::string& src) : src_(src) { advance(); }

    const Token& peek() const { return tok_; }
    Token take() {
        Token t = tok_;
        advance();
        return t;
    }

  private:
    void advance() {
        while (pos_ < src_.size()) {
            char c = src_[pos_];
            if (c == '\n') {
                ++line_;
                col_ = 1;
                ++pos_;
            } else if (std::isspace(static_cast<unsigned char>(c))) {
                ++col_;
                ++pos_;
            } else {
                break;
            }
        }
        tok_.line = line_;
        tok_.col = col_;
        if (pos_ >= src_.size()) {
            tok_.type = Token::Type::End;
            tok_.text = "<end of input>";
            return;
        }
        char c = src_[pos_];
        auto single = [&](Token::Type t) {
            tok_.type = t;
            tok_.text = std::string(1, c);
            ++pos_;
            ++col_;
        };
        switch (c) {
            case '+': single(Token::Type::Plus); return;
            case '-': single(Token::Type::Minus); return;
            case '*': single(Token::Type::Star); return;
            case '/': single(Token::Type::Slash); return;
            case '^': single(Token::Type::Caret); return;
            case '(': single(Token::Type::LParen); return;
            case ')': single(Token::Type::RParen); return;
            default: break;
        }
        if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
            const char* start = src_.c_str() + pos_;
            char* end = nullptr;
            double v = std::strtod(start, &end);
            if (end == start) throw ParseError("malformed number", line_, col_);
            std::size_t len = static_cast<std::size_t>(end - start);
            tok_.type = Token::Type::Number;
            tok_.text = src_.substr(pos_, len);
            tok_.number = v;
            pos_ += len;
            col_ += static_cast<int>(len);
            return;
        }
        if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
            std::size_t start = pos_;
            while (pos_ < src_.size() &&
                   (std::isalnum(static_cast<unsigned char>(src_[pos_])) || src_[pos_] == '_')) {
                ++pos_;
                ++col_;
            }
            tok_.type = Token::Type::Ident;
            tok_.text = src_.substr(start, pos_ - start);
            return;
        }
        throw ParseError(std::string("unexpected character '") + c + "'", line_, col_);
    }

    const std::string& src_;
    std::size_t pos_ = 0;
    int line_ = 1, col_ = 1;
    Token tok_;
};

// Returns the 1-based variable index for identifiers of the form x<digits>, else 0.
int variable_index(const std::string& name) {
    if (name.size() < 2 || name[0] != 'x') return 0;
    for (std::size_t i = 1; i < name.size(); ++i)
        if (!std::isdigit(static_cast<unsigned char>(name[i]))) return 0;
    if (name[1] == '0') return 0;  // x0, x01 are not variables
    return std::atoi(name.c_str() + 1);
}

bool unary_function(const std::string& name, UnaryOp* op) {
    if (name == "sin") *op = UnaryOp::Sin;
    else if (name == "cos") *op = UnaryOp::Cos;
    else if (name == "exp") *op = UnaryOp::Exp;
    else if (name == "ln") *op = UnaryOp::Ln;
    else if (name == "sqrt") *op = UnaryOp::Sqrt;
    else return false;
    return true;
}

}  // namespace

class Parser {
  public:
    Parser(const std::string& text, int dimension, const std::set<std::string>& params)
        : lex_(text), dim_(dimension), params_(params) {}

    Expression run() {
        Expression e;
        out_ = &e;
        e.root_ = parse_expr();
        const Token& t = lex_.peek();
        if (t.type != Token::Type::End)
            throw ParseError("unexpected token '" + t.text + "'", t.line, t.col);
        return e;
    }

  private:
    int add(Expression::Node n) {
        out_->nodes_.push_back(std::move(n));
        return static_cast<int>(out_->nodes_.size()) - 1;
    }

    int parse_expr() {
        int lhs = parse_term();
        for (;;) {
            const Token& t = lex_.peek();
            if (t.type == Token::Type::Plus || t.type == Token::Type::Minus) {
                BinaryOp op = t.type == Token::Type::Plus ? BinaryOp::Add : BinaryOp::Sub;
                lex_.take();
                int rhs = parse_term();
                Expression::Node n;
                n.kind = Expression::Node::Kind::Binary;
                n.bop = op;
                n.a = lhs;
                n.b = rhs;
                lhs = add(n);
            } else {
                return lhs;
            }
        }
    }

    int parse_term() {
        int lhs = parse_factor();
        for (;;) {
            const Token& t = lex_.peek();
            if (t.type == Token::Type::Star || t.type == Token::Type::Slash) {
                BinaryOp op = t.type == Token::Type::Star ? BinaryOp::Mul : BinaryOp::Div;
                lex_.take();
                int rhs = parse_factor();
                Expression::Node n;
                n.kind = Expression::Node::Kind::Binary;
                n.bop = op;
                n.a = lhs;
                n.b = rhs;
                lhs = add(n);
            } else {
                return lhs;
            }
        }
    }

    int parse_factor() {
        const Token& t = lex_.peek();
        if (t.type == Token::Type::Minus) {
            lex_.take();
            int child = parse_factor();
            Expression::Node n;
            n.kind = Expression::Node::Kind::Unary;
            n.uop = UnaryOp::Neg;
            n.a = child;
            return add(n);
        }
        return parse_power();
    }

    int parse_power() {
        int base = parse_atom();
        if (lex_.peek().type == Token::Type::Caret) {
            lex_.take();
            int exponent = parse_factor();  // right-associative; allows 2^-3
            Expression::Node n;
            n.kind = Expression::Node::Kind::Binary;
            n.bop = BinaryOp::Pow;
            n.a = base;
            n.b = exponent;
            return add(n);
        }
        return base;
    }

    int parse_atom() {
        Token t = lex_.take();
        switch (t.type) {
            case Token::Type::Number: {
                Expression::Node n;
                n.kind = Expression::Node::Kind::Constant;
                n.value = t.number;
                return add(n);
            }
            case Token::Type::LParen: {
                int inner = parse_expr();
                Token close = lex_.take();
                if (close.type != Token::Type::RParen)
                    throw ParseError("expected ')', got '" + close.text + "'", close.line,
                                     close.col);
                return inner;
            }
            case Token::Type::Ident: {
                UnaryOp op;
                if (unary_function(t.text, &op)) {
                    Token open = lex_.take();
                    if (open.type != Token::Type::LParen)
                        throw ParseError("expected '(' after '" + t.text + "'", open.line,
                                         open.col);
                    int arg = parse_expr();
                    Token close = lex_.take();
                    if (close.type != Token::Type::RParen)
                        throw ParseError("expected ')', got '" + close.text + "'", close.line,
                                         close.col);
                    Expression::Node n;
                    n.kind = Expression::Node::Kind::Unary;
                    n.uop = op;
                    n.a = arg;
                    return add(n);
                }
                if (int idx = variable_index(t.text); idx != 0) {
                    if (idx > dim_)
                        throw ParseError("state variable '" + t.text +
                                             "' exceeds dimension n=" + std::to_string(dim_),
                                         t.line, t.col);
                    Expression::Node n;
                    n.kind = Expression::Node::Kind::Variable;
                    n.var = idx;
                    return add(n);
                }
                if (params_.count(t.text)) {
                    Expression::Node n;
                    n.kind = Expression::Node::Kind::Parameter;
                    n.param = t.text;
                    return add(n);
                }
                throw ParseError("unknown identifier '" + t.text + "'", t.line, t.col);
            }
            default:
                throw ParseError("unexpected token '" + t.text + "'", t.line, t.col);
        }
    }

    Lexer lex_;
    int dim_;
    const std::set<std::string>& params_;
    Expression* out_ = nullptr;
};

Expression Expression::parse(const std::string& text, int dimension,
                             const std::set<std::string>& param_names) {
    return Parser(text, dimension, param_names).run();
}

template <typename Scalar>
Scalar Expression::evaluate(const std::vector<Scalar>& state,
                            const std::map<std::string, double>& params) const {
    using std::cos, std::exp, std::log, std::pow, std::sin, std::sqrt;
    std::vector<Scalar> val(nodes_.size());
    for (std::size_t i = 0; i < nodes_.size(); ++i) {
        const Node& n = nodes_[i];
        switch (n.kind) {
            case Node::Kind::Constant:
                val[i] = Scalar(n.value);
                break;
            case Node::Kind::Variable:
                val[i] = state[static_cast<std::size_t>(n.var - 1)];
                break;
            case Node::Kind::Parameter: {
                auto it = params.find(n.param);
                if (it == params.end())
                    throw EvalError("unbound parameter '" + n.param + "'");
                val[i] = Scalar(it->second);
                break;
            }
            case Node::Kind::Unary: {
                const Scalar& a = val[static_cast<std::size_t>(n.a)];
                switch (n.uop) {
                    case UnaryOp::Neg: val[i] = -a; break;
                    case UnaryOp::Sin: val[i] = sin(a); break;
                    case UnaryOp::Cos: val[i] = cos(a); break;
                    case UnaryOp::Exp: val[i] = exp(a); break;
                    case UnaryOp::Ln: val[i] = log(a); break;
                    case UnaryOp::Sqrt: val[i] = sqrt(a); break;
                }
                break;
            }
            case Node::Kind::Binary: {
                const Scalar& a = val[static_cast<std::size_t>(n.a)];
                const Scalar& b = val[static_cast<std::size_t>(n.b)];
                switch (n.bop) {
                    case BinaryOp::Add: val[i] = a + b; break;
                    case BinaryOp::Sub: val[i] = a - b; break;
                    case BinaryOp::Mul: val[i] = a * b; break;
                    case BinaryOp::Div: val[i] = a / b; break;
                    case BinaryOp::Pow: val[i] = pow(a, b); break;
                }
                break;
            }
        }
    }
    return val[static_cast<std::size_t>(root_)];
}

template double Expression::evaluate<double>(const std::vector<double>&,
                                             const std::map<std::string, double>&) const;
template Dual Expression::evaluate<Dual>(const std::vector<Dual>&,
                                         const std::map<std::string, double>&) const;

namespace {

int precedence(BinaryOp op) {
    switch (op) {
        case BinaryOp::Add:
        case BinaryOp::Sub: return 1;
        case BinaryOp::Mul:
        case BinaryOp::Div: return 2;
        case BinaryOp::Pow: return 4;
    }
    return 0;
}

void print_node(const std::vector<Expression::Node>& nodes, int idx, int parent_prec,
                bool right_side, std::ostringstream& os) {
    const Expression::Node& n = nodes[static_cast<std::size_t>(idx)];
    switch (n.kind) {
        case Expression::Node::Kind::Constant: {
            char buf[40];
            std::snprintf(buf, sizeof(buf), "%.17g", n.value);
            if (n.value < 0) {
                os << '(' << buf << ')';
            } else {
                os << buf;
            }
            break;
        }
        case Expression::Node::Kind::Variable:
            os << 'x' << n.var;
            break;
        case Expression::Node::Kind::Parameter:
            os << n.param;
            break;
        case Expression::Node::Kind::Unary: {
            if (n.uop == UnaryOp::Neg) {
                // unary minus binds between '*' and '^'
                bool need = parent_prec > 3 || (parent_prec == 3 && right_side);
                if (need) os << '(';
                os << '-';
                print_node(nodes, n.a, 3, true, os);
                if (need) os << ')';
            } else {
                const char* name = n.uop == UnaryOp::Sin   ? "sin"
                                   : n.uop == UnaryOp::Cos ? "cos"
                                   : n.uop == UnaryOp::Exp ? "exp"
                                   : n.uop == UnaryOp::Ln  ? "ln"
                                                           : "sqrt";
                os << name << '(';
                print_node(nodes, n.a, 0, false, os);
                os << ')';
            }
            break;
        }
        case Expression::Node::Kind::Binary: {
            int prec = precedence(n.bop);
            bool need = prec < parent_prec || (prec == parent_prec && right_side);
            // Pow is right-associative: parenthesize a left Pow child of Pow.
            if (n.bop == BinaryOp::Pow && parent_prec == 4 && !right_side) need = true;
            if (need) os << '(';
            const char* sym = n.bop == BinaryOp::Add   ? " + "
                              : n.bop == BinaryOp::Sub ? " - "
                              : n.bop == BinaryOp::Mul ? "*"
                              : n.bop == BinaryOp::Div ? "/"
                                                       : "^";
            print_node(nodes, n.a, prec, false, os);
            os << sym;
            // For '-' and '/', the right operand binds one level tighter.
            bool rflag = n.bop == BinaryOp::Sub || n.bop == BinaryOp::Div ||
                         n.bop == BinaryOp::Mul || n.bop == BinaryOp::Add;
            print_node(nodes, n.b, prec, rflag, os);
            if (need) os << ')';
            break;
        }
    }
}

}  // namespace

std::string Expression::print() const {
    std::ostringstream os;
    if (root_ >= 0) print_node(nodes_, root_, 0, false, os);
    return os.str();
}

std::set<int> Expression::variables() const {
    std::set<int> out;
    for (const Node& n : nodes_)
        if (n.kind == Node::Kind::Variable) out.insert(n.var);
    return out;
}

std::set<std::string> Expression::parameters() const {
    std::set<std::string> out;
    for (const Node& n : nodes_)
        if (n.kind == Node::Kind::Parameter) out.insert(n.param);
    return out;
}

}  // namespace ftla
