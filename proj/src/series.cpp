#include "cuspflow/series.hpp"

#include "cuspflow/errors.hpp"

#include <algorithm>
#include <cmath>

namespace cuspflow {

// ---------------------------------------------------------------- Series1

Series1 Series1::var(int order, double base) {
    Series1 s(order, base);
    if (order >= 1) s[1] = 1.0;
    return s;
}

Series1 Series1::operator+(const Series1& o) const {
    Series1 r(std::max(order(), o.order()));
    for (int k = 0; k <= r.order(); ++k) r[k] = coeff(k) + o.coeff(k);
    return r;
}

Series1 Series1::operator-(const Series1& o) const {
    Series1 r(std::max(order(), o.order()));
    for (int k = 0; k <= r.order(); ++k) r[k] = coeff(k) - o.coeff(k);
    return r;
}

Series1 Series1::operator*(const Series1& o) const {
    const int n = std::max(order(), o.order());
    Series1 r(n);
    for (int i = 0; i <= order(); ++i) {
        const double ci = c_[i];
        if (ci == 0.0) continue;
        const int jmax = std::min(o.order(), n - i);
        for (int j = 0; j <= jmax; ++j) r[i + j] += ci * o[j];
    }
    return r;
}

Series1 Series1::operator/(const Series1& o) const {
    if (o.coeff(0) == 0.0) throw numeric_failure("series division by zero constant term");
    const int n = std::max(order(), o.order());
    Series1 b = o.truncated(n), num = truncated(n);
    Series1 tail = b;
    tail[0] = 0.0;
    Series1 q = num / b[0];
    for (int it = 0; it < n; ++it) q = (num - tail * q) / b[0];
    return q;
}

Series1 Series1::operator+(double s) const { Series1 r = *this; r[0] += s; return r; }
Series1 Series1::operator-(double s) const { Series1 r = *this; r[0] -= s; return r; }
Series1 Series1::operator*(double s) const {
    Series1 r = *this;
    for (int k = 0; k <= r.order(); ++k) r[k] *= s;
    return r;
}
Series1 Series1::operator/(double s) const { return *this * (1.0 / s); }
Series1 Series1::operator-() const { return *this * -1.0; }

Series1 Series1::derivative() const {
    Series1 r(std::max(order() - 1, 0));
    for (int k = 1; k <= order(); ++k) r[k - 1] = k * c_[k];
    return r;
}

Series1 Series1::antiderivative() const {
    Series1 r(order() + 1);
    for (int k = 0; k <= order(); ++k) r[k + 1] = c_[k] / (k + 1);
    return r;
}

double Series1::eval(double u) const {
    double acc = 0.0;
    for (int k = order(); k >= 0; --k) acc = acc * u + c_[k];
    return acc;
}

Series1 Series1::truncated(int new_order) const {
    Series1 r(new_order);
    for (int k = 0; k <= std::min(order(), new_order); ++k) r[k] = c_[k];
    return r;
}

Series1 operator+(double s, const Series1& a) { return a + s; }
Series1 operator-(double s, const Series1& a) { return (-a) + s; }
Series1 operator*(double s, const Series1& a) { return a * s; }
Series1 operator/(double s, const Series1& a) { return Series1(a.order(), s) / a; }

namespace {

// Horner evaluation of sum_k univ[k] * t^k at the zero-constant-term series t.
Series1 horner_tail(const std::vector<double>& univ, const Series1& t) {
    Series1 acc(t.order(), univ.back());
    for (int k = static_cast<int>(univ.size()) - 2; k >= 0; --k) acc = acc * t + univ[k];
    return acc;
}

Series2 horner_tail(const std::vector<double>& univ, const Series2& t) {
    Series2 acc(t.order(), univ.back());
    for (int k = static_cast<int>(univ.size()) - 2; k >= 0; --k) acc = acc * t + univ[k];
    return acc;
}

std::vector<double> taylor_sqrt(double u0, int n) {
    if (u0 <= 0.0) throw numeric_failure("series sqrt of nonpositive constant term");
    std::vector<double> a(n + 1);
    a[0] = std::sqrt(u0);
    // d/du sqrt: a[k] = a[k-1] * (1/2 - (k-1)) / (k * u0)
    for (int k = 1; k <= n; ++k) a[k] = a[k - 1] * (0.5 - (k - 1)) / (k * u0);
    return a;
}

std::vector<double> taylor_exp(double u0, int n) {
    std::vector<double> a(n + 1);
    a[0] = std::exp(u0);
    for (int k = 1; k <= n; ++k) a[k] = a[k - 1] / k;
    return a;
}

std::vector<double> taylor_log(double u0, int n) {
    if (u0 <= 0.0) throw numeric_failure("series log of nonpositive constant term");
    std::vector<double> a(n + 1);
    a[0] = std::log(u0);
    double p = 1.0;
    for (int k = 1; k <= n; ++k) {
        p /= u0;
        a[k] = ((k % 2) ? 1.0 : -1.0) * p / k;
    }
    return a;
}

std::vector<double> taylor_sin(double u0, int n) {
    std::vector<double> a(n + 1);
    double fact = 1.0;
    for (int k = 0; k <= n; ++k) {
        if (k > 0) fact *= k;
        switch (k % 4) {
            case 0: a[k] = std::sin(u0) / fact; break;
            case 1: a[k] = std::cos(u0) / fact; break;
            case 2: a[k] = -std::sin(u0) / fact; break;
            default: a[k] = -std::cos(u0) / fact; break;
        }
    }
    return a;
}

std::vector<double> taylor_cos(double u0, int n) {
    std::vector<double> a(n + 1);
    double fact = 1.0;
    for (int k = 0; k <= n; ++k) {
        if (k > 0) fact *= k;
        switch (k % 4) {
            case 0: a[k] = std::cos(u0) / fact; break;
            case 1: a[k] = -std::sin(u0) / fact; break;
            case 2: a[k] = -std::cos(u0) / fact; break;
            default: a[k] = std::sin(u0) / fact; break;
        }
    }
    return a;
}

std::vector<double> taylor_pow(double u0, double p, int n) {
    if (u0 <= 0.0) throw numeric_failure("series pow with nonpositive base constant term");
    std::vector<double> a(n + 1);
    a[0] = std::pow(u0, p);
    for (int k = 1; k <= n; ++k) a[k] = a[k - 1] * (p - (k - 1)) / (k * u0);
    return a;
}

} // namespace

Series1 sqrt(const Series1& a) {
    Series1 t = a; t[0] = 0.0;
    return horner_tail(taylor_sqrt(a.coeff(0), a.order()), t);
}
Series1 exp(const Series1& a) {
    Series1 t = a; t[0] = 0.0;
    return horner_tail(taylor_exp(a.coeff(0), a.order()), t);
}
Series1 log(const Series1& a) {
    Series1 t = a; t[0] = 0.0;
    return horner_tail(taylor_log(a.coeff(0), a.order()), t);
}
Series1 sin(const Series1& a) {
    Series1 t = a; t[0] = 0.0;
    return horner_tail(taylor_sin(a.coeff(0), a.order()), t);
}
Series1 cos(const Series1& a) {
    Series1 t = a; t[0] = 0.0;
    return horner_tail(taylor_cos(a.coeff(0), a.order()), t);
}
Series1 pow(const Series1& a, double p) {
    double rp = std::round(p);
    if (rp == p && std::abs(p) <= 64.0) {
        // integer exponent: exact repeated multiplication, valid for any base
        int e = static_cast<int>(std::abs(rp));
        Series1 r(a.order(), 1.0), b = a;
        for (; e; e >>= 1) {
            if (e & 1) r = r * b;
            b = b * b;
        }
        if (rp < 0) return Series1(a.order(), 1.0) / r;
        return r;
    }
    Series1 t = a; t[0] = 0.0;
    return horner_tail(taylor_pow(a.coeff(0), p, a.order()), t);
}

Series1 compose(const Series1& p, const Series1& g) {
    Series1 acc(g.order(), p.coeff(p.order()));
    for (int k = p.order() - 1; k >= 0; --k) acc = acc * g + p.coeff(k);
    return acc;
}

// ---------------------------------------------------------------- Series2

Series2::Series2(int order, double c0) : order_(order), c_(tri_size(order), 0.0) { c_[0] = c0; }

Series2 Series2::var_u(int order, double base) {
    Series2 s(order, base);
    if (order >= 1) s.at(1, 0) = 1.0;
    return s;
}

Series2 Series2::var_v(int order, double base) {
    Series2 s(order, base);
    if (order >= 1) s.at(0, 1) = 1.0;
    return s;
}

Series2 Series2::operator+(const Series2& o) const {
    Series2 r(std::max(order_, o.order_));
    for (int n = 0; n <= r.order_; ++n)
        for (int j = 0; j <= n; ++j) r.at(n - j, j) = coeff(n - j, j) + o.coeff(n - j, j);
    return r;
}

Series2 Series2::operator-(const Series2& o) const {
    Series2 r(std::max(order_, o.order_));
    for (int n = 0; n <= r.order_; ++n)
        for (int j = 0; j <= n; ++j) r.at(n - j, j) = coeff(n - j, j) - o.coeff(n - j, j);
    return r;
}

Series2 Series2::operator*(const Series2& o) const {
    const int n = std::max(order_, o.order_);
    Series2 r(n);
    for (int d1 = 0; d1 <= std::min(order_, n); ++d1) {
        for (int j1 = 0; j1 <= d1; ++j1) {
            const double c1 = at(d1 - j1, j1);
            if (c1 == 0.0) continue;
            const int d2max = std::min(o.order_, n - d1);
            for (int d2 = 0; d2 <= d2max; ++d2)
                for (int j2 = 0; j2 <= d2; ++j2)
                    r.at(d1 - j1 + d2 - j2, j1 + j2) += c1 * o.at(d2 - j2, j2);
        }
    }
    return r;
}

Series2 Series2::operator/(const Series2& o) const {
    const double b0 = o.coeff(0, 0);
    if (b0 == 0.0) throw numeric_failure("series division by zero constant term");
    const int n = std::max(order_, o.order_);
    Series2 num = truncated(n), tail = o.truncated(n);
    tail.at(0, 0) = 0.0;
    Series2 q = num / b0;
    for (int it = 0; it < n; ++it) q = (num - tail * q) / b0;
    return q;
}

Series2 Series2::operator+(double s) const { Series2 r = *this; r.c_[0] += s; return r; }
Series2 Series2::operator-(double s) const { Series2 r = *this; r.c_[0] -= s; return r; }
Series2 Series2::operator*(double s) const {
    Series2 r = *this;
    for (double& v : r.c_) v *= s;
    return r;
}
Series2 Series2::operator/(double s) const { return *this * (1.0 / s); }
Series2 Series2::operator-() const { return *this * -1.0; }

Series2 Series2::derivative_u() const {
    Series2 r(std::max(order_ - 1, 0));
    for (int n = 1; n <= order_; ++n)
        for (int j = 0; j < n; ++j) r.at(n - j - 1, j) = (n - j) * at(n - j, j);
    return r;
}

Series2 Series2::derivative_v() const {
    Series2 r(std::max(order_ - 1, 0));
    for (int n = 1; n <= order_; ++n)
        for (int j = 1; j <= n; ++j) r.at(n - j, j - 1) = j * at(n - j, j);
    return r;
}

Series2 Series2::antiderivative_v() const {
    Series2 r(order_ + 1);
    for (int n = 0; n <= order_; ++n)
        for (int j = 0; j <= n; ++j) r.at(n - j, j + 1) = at(n - j, j) / (j + 1);
    return r;
}

double Series2::eval(double u, double v) const {
    // Horner in u, inner Horner in v over the triangular coefficient table
    double acc = 0.0;
    for (int i = order_; i >= 0; --i) {
        double qi = 0.0;
        for (int j = order_ - i; j >= 0; --j) qi = qi * v + at(i, j);
        acc = acc * u + qi;
    }
    return acc;
}

Series1 Series2::restrict_v(int ord) const {
    Series1 r(ord);
    for (int j = 0; j <= std::min(order_, ord); ++j) r[j] = at(0, j);
    return r;
}

Series1 Series2::restrict_u(int ord) const {
    Series1 r(ord);
    for (int i = 0; i <= std::min(order_, ord); ++i) r[i] = at(i, 0);
    return r;
}

Series2 Series2::truncated(int new_order) const {
    Series2 r(new_order);
    for (int n = 0; n <= std::min(order_, new_order); ++n)
        for (int j = 0; j <= n; ++j) r.at(n - j, j) = at(n - j, j);
    return r;
}

double Series2::max_abs_at_order(int k) const {
    double m = 0.0;
    if (k > order_) return 0.0;
    for (int j = 0; j <= k; ++j) m = std::max(m, std::abs(at(k - j, j)));
    return m;
}

Series2 operator+(double s, const Series2& a) { return a + s; }
Series2 operator-(double s, const Series2& a) { return (-a) + s; }
Series2 operator*(double s, const Series2& a) { return a * s; }
Series2 operator/(double s, const Series2& a) { return Series2(a.order(), s) / a; }

Series2 sqrt(const Series2& a) {
    Series2 t = a; t.at(0, 0) = 0.0;
    return horner_tail(taylor_sqrt(a.coeff(0, 0), a.order()), t);
}
Series2 exp(const Series2& a) {
    Series2 t = a; t.at(0, 0) = 0.0;
    return horner_tail(taylor_exp(a.coeff(0, 0), a.order()), t);
}
Series2 log(const Series2& a) {
    Series2 t = a; t.at(0, 0) = 0.0;
    return horner_tail(taylor_log(a.coeff(0, 0), a.order()), t);
}
Series2 sin(const Series2& a) {
    Series2 t = a; t.at(0, 0) = 0.0;
    return horner_tail(taylor_sin(a.coeff(0, 0), a.order()), t);
}
Series2 cos(const Series2& a) {
    Series2 t = a; t.at(0, 0) = 0.0;
    return horner_tail(taylor_cos(a.coeff(0, 0), a.order()), t);
}
Series2 pow(const Series2& a, double p) {
    double rp = std::round(p);
    if (rp == p && std::abs(p) <= 64.0) {
        int e = static_cast<int>(std::abs(rp));
        Series2 r(a.order(), 1.0), b = a;
        for (; e; e >>= 1) {
            if (e & 1) r = r * b;
            b = b * b;
        }
        if (rp < 0) return Series2(a.order(), 1.0) / r;
        return r;
    }
    Series2 t = a; t.at(0, 0) = 0.0;
    return horner_tail(taylor_pow(a.coeff(0, 0), p, a.order()), t);
}

Series2 compose(const Series2& p, const Series2& u, const Series2& v) {
    const int n = p.order();
    const int m = std::max(u.order(), v.order());
    // Horner in u with inner Horner in v: P = sum_i u^i q_i(v)
    Series2 acc(m, 0.0);
    for (int i = n; i >= 0; --i) {
        Series2 qi(m, p.coeff(i, n - i));
        for (int j = n - i - 1; j >= 0; --j) qi = qi * v + p.coeff(i, j);
        acc = acc * u + qi;
    }
    return acc;
}

Series1 compose(const Series2& p, const Series1& u, const Series1& v) {
    const int n = p.order();
    const int m = std::max(u.order(), v.order());
    Series1 acc(m, 0.0);
    for (int i = n; i >= 0; --i) {
        Series1 qi(m, p.coeff(i, n - i));
        for (int j = n - i - 1; j >= 0; --j) qi = qi * v + p.coeff(i, j);
        acc = acc * u + qi;
    }
    return acc;
}

} // namespace cuspflow
