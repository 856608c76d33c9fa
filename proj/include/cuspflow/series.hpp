#pragma once

#include <vector>

namespace cuspflow {

// Univariate truncated Taylor series: sum_k c[k] u^k, k <= order.
// Arithmetic is exact on polynomials up to the truncation order.
class Series1 {
public:
    Series1() = default;
    explicit Series1(int order, double c0 = 0.0) : c_(order + 1, 0.0) { c_[0] = c0; }
    static Series1 var(int order, double base = 0.0);

    int order() const { return static_cast<int>(c_.size()) - 1; }
    double& operator[](int k) { return c_[k]; }
    double operator[](int k) const { return c_[k]; }
    double coeff(int k) const { return (k >= 0 && k <= order()) ? c_[k] : 0.0; }

    Series1 operator+(const Series1& o) const;
    Series1 operator-(const Series1& o) const;
    Series1 operator*(const Series1& o) const;
    Series1 operator/(const Series1& o) const;
    Series1 operator+(double s) const;
    Series1 operator-(double s) const;
    Series1 operator*(double s) const;
    Series1 operator/(double s) const;
    Series1 operator-() const;

    Series1 derivative() const;
    Series1 antiderivative() const; // integration constant 0, degree grows by 1 then truncates
    double eval(double u) const;
    Series1 truncated(int new_order) const;

private:
    std::vector<double> c_;
};

Series1 operator+(double s, const Series1& a);
Series1 operator-(double s, const Series1& a);
Series1 operator*(double s, const Series1& a);
Series1 operator/(double s, const Series1& a);

// f applied through its Taylor expansion about the constant term.
Series1 sqrt(const Series1& a);
Series1 exp(const Series1& a);
Series1 log(const Series1& a);
Series1 sin(const Series1& a);
Series1 cos(const Series1& a);
Series1 pow(const Series1& a, double p);
// polynomial evaluation of P at the series G (exact for the stored polynomial)
Series1 compose(const Series1& p, const Series1& g);

// Bivariate truncated Taylor series: sum_{i+j<=order} c(i,j) u^i v^j.
class Series2 {
public:
    Series2() = default;
    explicit Series2(int order, double c0 = 0.0);
    static Series2 var_u(int order, double base = 0.0);
    static Series2 var_v(int order, double base = 0.0);
    static int tri_size(int order) { return (order + 1) * (order + 2) / 2; }
    static int tri_index(int i, int j) { int n = i + j; return n * (n + 1) / 2 + j; }

    int order() const { return order_; }
    double& at(int i, int j) { return c_[tri_index(i, j)]; }
    double at(int i, int j) const { return c_[tri_index(i, j)]; }
    double coeff(int i, int j) const {
        return (i >= 0 && j >= 0 && i + j <= order_) ? c_[tri_index(i, j)] : 0.0;
    }

    Series2 operator+(const Series2& o) const;
    Series2 operator-(const Series2& o) const;
    Series2 operator*(const Series2& o) const;
    Series2 operator/(const Series2& o) const;
    Series2 operator+(double s) const;
    Series2 operator-(double s) const;
    Series2 operator*(double s) const;
    Series2 operator/(double s) const;
    Series2 operator-() const;
    Series2& operator+=(const Series2& o) { *this = *this + o; return *this; }
    Series2& operator-=(const Series2& o) { *this = *this - o; return *this; }

    Series2 derivative_u() const;
    Series2 derivative_v() const;
    Series2 antiderivative_v() const;
    double eval(double u, double v) const;
    Series1 restrict_v(int ord) const;          // set u = 0
    Series1 restrict_u(int ord) const;          // set v = 0
    Series2 truncated(int new_order) const;
    double max_abs_at_order(int k) const;

private:
    int order_ = 0;
    std::vector<double> c_;
    friend Series2 mul(const Series2&, const Series2&);
};

Series2 operator+(double s, const Series2& a);
Series2 operator-(double s, const Series2& a);
Series2 operator*(double s, const Series2& a);
Series2 operator/(double s, const Series2& a);

Series2 sqrt(const Series2& a);
Series2 exp(const Series2& a);
Series2 log(const Series2& a);
Series2 sin(const Series2& a);
Series2 cos(const Series2& a);
Series2 pow(const Series2& a, double p);
// polynomial evaluation of P at series arguments (Horner in both variables)
Series2 compose(const Series2& p, const Series2& u, const Series2& v);
// same, with univariate arguments (restriction of P to a parametrized path)
Series1 compose(const Series2& p, const Series1& u, const Series1& v);

} // namespace cuspflow
