#include <doctest.h>

#include <cstdio>
#include <fstream>
#include <random>

#include "ftla/bench.hpp"
#include "ftla/vector_field.hpp"

using namespace ftla;

namespace {

VectorXd vec2(double a, double b) {
    VectorXd v(2);
    v << a, b;
    return v;
}

MatrixXd fd_jacobian(const VectorField& vf, const VectorXd& x, double h = 1e-6) {
    const int n = vf.dimension();
    MatrixXd J(n, n);
    for (int j = 0; j < n; ++j) {
        VectorXd xp = x, xm = x;
        xp[j] += h;
        xm[j] -= h;
        J.col(j) = (vf(xp) - vf(xm)) / (2 * h);
    }
    return J;
}

// Random state inside each benchmark's natural operating box.
VectorXd random_state(const BenchmarkSystem& sys, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> u(0, 1);
    const int n = sys.field.dimension();
    VectorXd x(n);
    if (!sys.default_region.explicit_points.empty()) {
        const auto& pts = sys.default_region.explicit_points;
        x = pts[rng() % pts.size()];
        for (int i = 0; i < n; ++i) x[i] += 0.2 * (u(rng) - 0.5) * std::max(1.0, std::abs(x[i]));
        return x;
    }
    for (int i = 0; i < n; ++i) {
        const double lo = sys.default_region.bounds(i, 0), hi = sys.default_region.bounds(i, 1);
        x[i] = lo + (hi - lo) * u(rng);
    }
    return x;
}

}  // namespace

TEST_CASE("parse and evaluate the 2D benchmark field") {
    VectorField vf = parse_field("-x1 ; -g*x2 + ((g-1)*x1 + g*x1^2)/(1+x1)^2", 2, {{"g", 3.0}});
    VectorXd f = vf(vec2(1.0, 0.5));
    CHECK(f[0] == doctest::Approx(-1.0).epsilon(1e-14));
    CHECK(f[1] == doctest::Approx(-0.25).epsilon(1e-14));

    // Equilibrium.
    VectorXd f0 = vf(vec2(0.0, 0.0));
    CHECK(f0.norm() == 0.0);
}

TEST_CASE("3D field hand evaluation") {
    BenchmarkSystem sys = make_system("sys3d");
    VectorXd x(3);
    x << 1.0, -2.0, -2.0;
    VectorXd f = sys.field(x);
    CHECK(f[0] == doctest::Approx(-0.2).epsilon(1e-14));
    CHECK(f[1] == doctest::Approx(0.8).epsilon(1e-13));
    CHECK(f[2] == doctest::Approx(0.8).epsilon(1e-13));
}

TEST_CASE("dimension mismatch and syntax errors") {
    CHECK_THROWS_WITH_AS(parse_field("-x1 ; x2", 1, {}),
                         doctest::Contains("dimension mismatch"), Error);
    CHECK_THROWS_AS(parse_field("-x1 ; x2 ; x1", 2, {}), Error);
    try {
        parse_field("x1 + * x2 ; x1", 2, {});
        FAIL("expected a parse error");
    } catch (const ParseError& e) {
        CHECK(e.line == 1);
        CHECK(e.column == 6);
    }
    CHECK_THROWS_AS(parse_field("x1 ; x3", 2, {}), ParseError);        // exceeds n
    CHECK_THROWS_AS(parse_field("x1 ; zeta*x2", 2, {}), ParseError);   // unknown identifier
    CHECK_THROWS_AS(parse_field("2 x1 ; x2", 2, {}), ParseError);      // juxtaposition
}

TEST_CASE("grammar precedence") {
    VectorField vf = parse_field("1 + 2*3^2 ; 2^3^2 - x1*0 ; -x1^2", 3, {});
    VectorXd x(3);
    x << 2.0, 0.0, 0.0;
    VectorXd f = vf(x);
    CHECK(f[0] == 19.0);
    CHECK(f[1] == 512.0);  // right-associative power
    CHECK(f[2] == -4.0);   // unary minus binds looser than ^
}

TEST_CASE("evaluation errors are reported") {
    VectorField vf = parse_field("1/x1 ; ln(x2)", 2, {});
    CHECK_THROWS_AS(vf(vec2(0.0, 1.0)), EvalError);   // division by zero
    CHECK_THROWS_AS(vf(vec2(1.0, -1.0)), EvalError);  // log of a negative number
    CHECK_NOTHROW(vf(vec2(2.0, 1.0)));
}

TEST_CASE("Jacobian of the 2D system at x1=1") {
    BenchmarkSystem sys = make_system("ds");
    MatrixXd J = sys.field.jacobian(vec2(1.0, 0.5));
    CHECK(J(0, 0) == doctest::Approx(-1.0).epsilon(1e-14));
    CHECK(J(0, 1) == doctest::Approx(0.0).epsilon(1e-14));
    CHECK(J(1, 0) == doctest::Approx(0.75).epsilon(1e-13));
    CHECK(J(1, 1) == doctest::Approx(-3.0).epsilon(1e-14));
}

TEST_CASE("linear field has a constant coefficient Jacobian") {
    VectorField vf = parse_field("a11*x1 + a12*x2 ; a21*x1 + a22*x2", 2,
                                 {{"a11", 2.0}, {"a12", -1.0}, {"a21", 0.5}, {"a22", 4.0}});
    MatrixXd J1 = vf.jacobian(vec2(0.3, -0.7));
    MatrixXd J2 = vf.jacobian(vec2(5.0, 2.0));
    CHECK((J1 - J2).cwiseAbs().maxCoeff() == 0.0);
    CHECK(J1(0, 0) == 2.0);
    CHECK(J1(1, 0) == 0.5);
}

TEST_CASE("AD equals central finite differences on every builtin") {
    std::mt19937_64 rng(42);
    for (const char* name : {"ds", "sys3d", "msd4d", "linear7d"}) {
        BenchmarkSystem sys = make_system(name);
        for (int k = 0; k < 100; ++k) {
            VectorXd x = random_state(sys, rng);
            MatrixXd A = sys.field.jacobian(x);
            MatrixXd F = fd_jacobian(sys.field, x);
            for (int i = 0; i < A.rows(); ++i)
                for (int j = 0; j < A.cols(); ++j) {
                    const double tol = std::max(1e-6, 1e-6 * std::abs(A(i, j)));
                    CHECK(std::abs(A(i, j) - F(i, j)) <= tol);
                }
        }
    }
}

TEST_CASE("parse-print-parse round trip evaluates bitwise identically") {
    std::mt19937_64 rng(99);
    for (const char* name : {"ds", "sys3d", "msd4d", "linear7d"}) {
        BenchmarkSystem sys = make_system(name);
        const int n = sys.field.dimension();
        std::set<std::string> pnames;
        for (const auto& [k, v] : sys.field.parameters()) pnames.insert(k);
        std::vector<Expression> reparsed;
        for (const auto& e : sys.field.components())
            reparsed.push_back(Expression::parse(e.print(), n, pnames));
        for (int k = 0; k < 100; ++k) {
            VectorXd x = random_state(sys, rng);
            std::vector<double> state(x.data(), x.data() + n);
            for (int i = 0; i < n; ++i) {
                const double a = sys.field.components()[static_cast<std::size_t>(i)].evaluate(
                    state, sys.field.parameters());
                const double b = reparsed[static_cast<std::size_t>(i)].evaluate(
                    state, sys.field.parameters());
                CHECK(a == b);  // bitwise
            }
        }
    }
}

TEST_CASE("evaluation is pure") {
    BenchmarkSystem sys = make_system("msd4d");
    VectorXd x = sys.fixtures[0];
    VectorXd f1 = sys.field(x);
    VectorXd f2 = sys.field(x);
    CHECK((f1 - f2).cwiseAbs().maxCoeff() == 0.0);
    MatrixXd J1 = sys.field.jacobian(x);
    MatrixXd J2 = sys.field.jacobian(x);
    CHECK((J1 - J2).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("field file parsing with params and comments") {
    const char* path = "test_field_file.tmp";
    {
        std::ofstream out(path);
        out << "# 2D benchmark with one parameter\n"
               "params:\n"
               "  g = 3.0   # timescale ratio\n"
               "field:\n"
               "  -x1\n"
               "  -g*x2 + ((g-1)*x1 + g*x1^2)/(1+x1)^2\n";
    }
    VectorField vf = load_field_file(path);
    CHECK(vf.dimension() == 2);
    VectorXd f = vf(vec2(1.0, 0.5));
    CHECK(f[1] == doctest::Approx(-0.25).epsilon(1e-14));
    std::remove(path);

    CHECK_THROWS_AS(load_field_file("nonexistent_file.dsl"), Error);
}

TEST_CASE("analytic jacobian block is honored") {
    const char* path = "test_field_jac.tmp";
    {
        std::ofstream out(path);
        out << "params:\n"
               "  g = 3.0\n"
               "field:\n"
               "  -x1\n"
               "  -g*x2 + ((g-1)*x1 + g*x1^2)/(1+x1)^2\n"
               "jacobian:\n"
               "  -1 ; 0\n"
               "  ((g-1) + (g+1)*x1)/(1+x1)^3 ; -g\n";
    }
    VectorField vf = load_field_file(path);
    CHECK(vf.has_analytic_jacobian());
    MatrixXd J = vf.jacobian(vec2(1.0, 0.5));
    CHECK(J(1, 0) == doctest::Approx(0.75).epsilon(1e-14));
    std::remove(path);
}

TEST_CASE("printer round trip on awkward expressions") {
    std::set<std::string> params = {"k"};
    const char* exprs[] = {
        "-x1^2 + (-3)*x2",
        "2^3^x1 - sin(cos(x2))/sqrt(1 + x1^2)",
        "(x1 - x2)/(x1/x2/k) - exp(-k*x1)",
        "ln(1 + x1^2)^2",
    };
    std::map<std::string, double> bind = {{"k", 1.7}};
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(0.1, 2.0);
    for (const char* text : exprs) {
        Expression a = Expression::parse(text, 2, params);
        Expression b = Expression::parse(a.print(), 2, params);
        for (int i = 0; i < 50; ++i) {
            std::vector<double> state = {u(rng), u(rng)};
            CHECK(a.evaluate(state, bind) == b.evaluate(state, bind));
        }
    }
}

TEST_CASE("parameter rebinding is lazy and immutable") {
    BenchmarkSystem sys = make_system("ds");
    VectorField g10 = sys.field.with_parameter("g", 10.0);
    VectorXd f3 = sys.field(vec2(1.0, 0.0));
    VectorXd f10 = g10(vec2(1.0, 0.0));
    CHECK(f3[1] == doctest::Approx((2.0 + 3.0) / 4.0));
    CHECK(f10[1] == doctest::Approx((9.0 + 10.0) / 4.0));
    CHECK_THROWS_AS(sys.field.with_parameter("nope", 1.0), Error);
}
