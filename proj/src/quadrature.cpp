#include "reloc/quadrature.hpp"

#include "reloc/errors.hpp"

namespace reloc {

std::vector<double> uniform_grid(double T, int n) {
    std::vector<double> t(static_cast<std::size_t>(n) + 1);
    for (int i = 0; i <= n; ++i) t[i] = T * i / n;
    t[n] = T;
    return t;
}

double simpson(std::span<const double> f, double h) {
    const std::size_t n = f.size() - 1;
    if (f.size() < 3 || n % 2 != 0) throw InvalidArgument("simpson needs an even number of intervals");
    double odd = 0.0, even = 0.0;
    for (std::size_t i = 1; i < n; i += 2) odd += f[i];
    for (std::size_t i = 2; i < n; i += 2) even += f[i];
    return h / 3.0 * (f[0] + f[n] + 4.0 * odd + 2.0 * even);
}

std::vector<double> simpson_weights(int n, double h) {
    if (n < 2 || n % 2 != 0) throw InvalidArgument("simpson needs an even number of intervals");
    std::vector<double> w(static_cast<std::size_t>(n) + 1);
    for (int i = 0; i <= n; ++i) w[i] = (i == 0 || i == n) ? h / 3.0 : (i % 2 ? 4.0 * h / 3.0 : 2.0 * h / 3.0);
    return w;
}

double trapezoid(std::span<const double> f, double h) {
    if (f.size() < 2) return 0.0;
    double s = 0.5 * (f.front() + f.back());
    for (std::size_t i = 1; i + 1 < f.size(); ++i) s += f[i];
    return s * h;
}

std::vector<double> cumulative_integral(std::span<const double> f, double h) {
    const std::size_t m = f.size();
    if (m < 3) throw InvalidArgument("cumulative_integral needs at least 3 samples");
    std::vector<double> F(m, 0.0);
    for (std::size_t i = 2; i < m; i += 2) F[i] = F[i - 2] + h / 3.0 * (f[i - 2] + 4.0 * f[i - 1] + f[i]);
    for (std::size_t i = 1; i < m; i += 2) {
        if (i + 1 < m)  // ∫_{t_{i-1}}^{t_i} from (f_{i-1}, f_i, f_{i+1})
            F[i] = F[i - 1] + h / 12.0 * (5.0 * f[i - 1] + 8.0 * f[i] - f[i + 1]);
        else  // last node: use (f_{i-2}, f_{i-1}, f_i)
            F[i] = F[i - 1] + h / 12.0 * (-f[i - 2] + 8.0 * f[i - 1] + 5.0 * f[i]);
    }
    return F;
}

std::vector<double> segment_weights(int intervals, double h) {
    std::vector<double> w(static_cast<std::size_t>(intervals) + 1, 0.0);
    if (intervals == 0) return w;
    if (intervals == 1) {
        w[0] = w[1] = 0.5 * h;
        return w;
    }
    const int simpson_part = intervals % 2 == 0 ? intervals : intervals - 3;
    for (int i = 0; i + 2 <= simpson_part; i += 2) {
        w[i] += h / 3.0;
        w[i + 1] += 4.0 * h / 3.0;
        w[i + 2] += h / 3.0;
    }
    if (simpson_part != intervals) {
        const int s = simpson_part;
        w[s] += 3.0 * h / 8.0;
        w[s + 1] += 9.0 * h / 8.0;
        w[s + 2] += 9.0 * h / 8.0;
        w[s + 3] += 3.0 * h / 8.0;
    }
    return w;
}

}  // namespace reloc
