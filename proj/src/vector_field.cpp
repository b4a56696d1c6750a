#include "ftla/vector_field.hpp"

#include <cctype>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "ftla/dual.hpp"

namespace ftla {

VectorField::VectorField(int n, std::vector<Expression> components,
                         std::map<std::string, double> parameters,
                         std::optional<std::vector<Expression>> jacobian)
    : n_(n),
      comps_(std::move(components)),
      params_(std::move(parameters)),
      jacobian_(std::move(jacobian)) {
    if (n_ < 2) throw Error("dimension mismatch: n must be >= 2, got " + std::to_string(n_));
    if (static_cast<int>(comps_.size()) != n_)
        throw Error("dimension mismatch: " + std::to_string(comps_.size()) +
                    " component expressions for n=" + std::to_string(n_));
    if (jacobian_ && static_cast<int>(jacobian_->size()) != n_ * n_)
        throw Error("analytic Jacobian must have n*n entries");
}

VectorXd VectorField::operator()(const VectorXd& x) const {
    if (x.size() != n_)
        throw EvalError("state has length " + std::to_string(x.size()) + ", expected " +
                        std::to_string(n_));
    std::vector<double> state(x.data(), x.data() + n_);
    VectorXd out(n_);
    for (int i = 0; i < n_; ++i) {
        out[i] = comps_[static_cast<std::size_t>(i)].evaluate(state, params_);
        if (!std::isfinite(out[i]))
            throw EvalError("non-finite value in component " + std::to_string(i + 1));
    }
    return out;
}

MatrixXd VectorField::jacobian(const VectorXd& x) const {
    if (x.size() != n_)
        throw EvalError("state has length " + std::to_string(x.size()) + ", expected " +
                        std::to_string(n_));
    MatrixXd J(n_, n_);
    if (jacobian_) {
        std::vector<double> state(x.data(), x.data() + n_);
        for (int i = 0; i < n_; ++i)
            for (int j = 0; j < n_; ++j) {
                J(i, j) = (*jacobian_)[static_cast<std::size_t>(i * n_ + j)].evaluate(state,
                                                                                      params_);
                if (!std::isfinite(J(i, j)))
                    throw EvalError("non-finite Jacobian entry (" + std::to_string(i + 1) + "," +
                                    std::to_string(j + 1) + ")");
            }
        return J;
    }
    std::vector<Dual> state(static_cast<std::size_t>(n_));
    for (int j = 0; j < n_; ++j) {
        for (int k = 0; k < n_; ++k) state[static_cast<std::size_t>(k)] = {x[k], k == j ? 1.0 : 0.0};
        for (int i = 0; i < n_; ++i) {
            Dual v = comps_[static_cast<std::size_t>(i)].evaluate(state, params_);
            if (!std::isfinite(v.du))
                throw EvalError("non-finite Jacobian entry (" + std::to_string(i + 1) + "," +
                                std::to_string(j + 1) + ")");
            J(i, j) = v.du;
        }
    }
    return J;
}

VectorField VectorField::with_parameter(const std::string& name, double value) const {
    if (!params_.count(name)) throw Error("unknown parameter '" + name + "'");
    VectorField out = *this;
    out.params_[name] = value;
    return out;
}

namespace {

std::set<std::string> key_set(const std::map<std::string, double>& m) {
    std::set<std::string> s;
    for (const auto& [k, v] : m) s.insert(k);
    return s;
}

std::vector<std::string> split_components(const std::string& source) {
    std::vector<std::string> parts;
    std::string cur;
    for (char c : source) {
        if (c == ';' || c == '\n') {
            parts.push_back(cur);
            cur.clear();
        } else {
            cur += c;
        }
    }
    parts.push_back(cur);
    std::vector<std::string> out;
    for (auto& p : parts) {
        bool blank = true;
        for (char c : p)
            if (!std::isspace(static_cast<unsigned char>(c))) blank = false;
        if (!blank) out.push_back(p);
    }
    return out;
}

}  // namespace

VectorField parse_field(const std::string& source, int n,
                        const std::map<std::string, double>& params) {
    if (n < 2) throw Error("dimension mismatch: n must be >= 2, got " + std::to_string(n));
    auto parts = split_components(source);
    if (static_cast<int>(parts.size()) != n)
        throw Error("dimension mismatch: " + std::to_string(parts.size()) +
                    " component expressions for n=" + std::to_string(n));
    std::set<std::string> names = key_set(params);
    std::vector<Expression> comps;
    comps.reserve(parts.size());
    for (const auto& p : parts) comps.push_back(Expression::parse(p, n, names));
    return VectorField(n, std::move(comps), params);
}

VectorField parse_field_file(const std::string& text) {
    std::map<std::string, double> params;
    std::vector<std::string> field_lines, jac_lines;
    enum class Section { None, Params, Field, Jacobian } section = Section::None;
    std::istringstream in(text);
    std::string raw;
    int lineno = 0;
    while (std::getline(in, raw)) {
        ++lineno;
        std::string line = raw;
        if (auto pos = line.find('#'); pos != std::string::npos) line.erase(pos);
        std::size_t b = line.find_first_not_of(" \t\r");
        if (b == std::string::npos) continue;
        std::size_t e = line.find_last_not_of(" \t\r");
        line = line.substr(b, e - b + 1);
        if (line == "params:") {
            section = Section::Params;
            continue;
        }
        if (line == "field:") {
            section = Section::Field;
            continue;
        }
        if (line == "jacobian:") {
            section = Section::Jacobian;
            continue;
        }
        switch (section) {
            case Section::None:
                throw ParseError("expected 'params:' or 'field:' header", lineno, 1);
            case Section::Params: {
                auto eq = line.find('=');
                if (eq == std::string::npos)
                    throw ParseError("expected 'name = value'", lineno, 1);
                std::string name = line.substr(0, eq);
                name.erase(name.find_last_not_of(" \t") + 1);
                char* end = nullptr;
                std::string vs = line.substr(eq + 1);
                double v = std::strtod(vs.c_str(), &end);
                if (end == vs.c_str()) throw ParseError("malformed parameter value", lineno, 1);
                params[name] = v;
                break;
            }
            case Section::Field:
                field_lines.push_back(line);
                break;
            case Section::Jacobian:
                jac_lines.push_back(line);
                break;
        }
    }
    if (field_lines.empty()) throw Error("field file has no 'field:' block");
    int n = static_cast<int>(field_lines.size());
    std::set<std::string> names = key_set(params);
    std::vector<Expression> comps;
    for (const auto& l : field_lines) comps.push_back(Expression::parse(l, n, names));
    std::optional<std::vector<Expression>> jac;
    if (!jac_lines.empty()) {
        std::vector<Expression> j;
        std::vector<std::string> entries;
        for (const auto& l : jac_lines)
            for (const auto& p : split_components(l)) entries.push_back(p);
        if (static_cast<int>(entries.size()) != n * n)
            throw Error("jacobian block must have n*n entries");
        for (const auto& p : entries) j.push_back(Expression::parse(p, n, names));
        jac = std::move(j);
    }
    return VectorField(n, std::move(comps), std::move(params), std::move(jac));
}

VectorField load_field_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open field file '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_field_file(ss.str());
}

}  // namespace ftla
