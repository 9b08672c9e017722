#include "tipping/numerics.hpp"

namespace tipping::num {

MonotoneCubic::MonotoneCubic(std::vector<double> x, std::vector<double> y, std::vector<double> slopes,
                             bool monotone)
    : x_(std::move(x)), y_(std::move(y)), d_(std::move(slopes)) {
    const std::size_t n = x_.size();
    if (n < 2 || y_.size() != n) throw ParameterError("MonotoneCubic: need at least two nodes");
    for (std::size_t i = 1; i < n; ++i)
        if (!(x_[i] > x_[i - 1])) throw ParameterError("MonotoneCubic: nodes must be strictly increasing");

    std::vector<double> delta(n - 1);
    for (std::size_t i = 0; i + 1 < n; ++i) delta[i] = (y_[i + 1] - y_[i]) / (x_[i + 1] - x_[i]);

    if (d_.empty()) {
        d_.assign(n, 0.0);
        d_[0] = delta[0];
        d_[n - 1] = delta[n - 2];
        for (std::size_t i = 1; i + 1 < n; ++i) {
            const double a = delta[i - 1], b = delta[i];
            if (a * b > 0.0) {
                const double h0 = x_[i] - x_[i - 1], h1 = x_[i + 1] - x_[i];
                const double w1 = 2.0 * h1 + h0, w2 = h1 + 2.0 * h0;
                d_[i] = (w1 + w2) / (w1 / a + w2 / b);
            }
        }
    } else if (d_.size() != n) {
        throw ParameterError("MonotoneCubic: slope count mismatch");
    }

    if (!monotone) return;
    for (std::size_t i = 0; i + 1 < n; ++i) {
        if (delta[i] == 0.0) {
            d_[i] = 0.0;
            d_[i + 1] = 0.0;
            continue;
        }
        if (d_[i] * delta[i] < 0.0) d_[i] = 0.0;
        if (d_[i + 1] * delta[i] < 0.0) d_[i + 1] = 0.0;
        const double a = d_[i] / delta[i], b = d_[i + 1] / delta[i];
        const double s = a * a + b * b;
        if (s > 9.0) {
            const double tau = 3.0 / std::sqrt(s);
            d_[i] = tau * a * delta[i];
            d_[i + 1] = tau * b * delta[i];
        }
    }
}

std::size_t MonotoneCubic::locate(double t) const {
    auto it = std::upper_bound(x_.begin(), x_.end(), t);
    if (it == x_.begin()) return 0;
    std::size_t i = static_cast<std::size_t>(it - x_.begin()) - 1;
    return std::min(i, x_.size() - 2);
}

double MonotoneCubic::operator()(double t) const {
    if (t <= x_.front()) return y_.front() + d_.front() * (t - x_.front());
    if (t >= x_.back()) return y_.back() + d_.back() * (t - x_.back());
    const std::size_t i = locate(t);
    const double h = x_[i + 1] - x_[i];
    const double s = (t - x_[i]) / h;
    const double s2 = s * s, s3 = s2 * s;
    const double h00 = 2 * s3 - 3 * s2 + 1, h10 = s3 - 2 * s2 + s;
    const double h01 = -2 * s3 + 3 * s2, h11 = s3 - s2;
    return h00 * y_[i] + h10 * h * d_[i] + h01 * y_[i + 1] + h11 * h * d_[i + 1];
}

double MonotoneCubic::derivative(double t) const {
    if (t <= x_.front()) return d_.front();
    if (t >= x_.back()) return d_.back();
    const std::size_t i = locate(t);
    const double h = x_[i + 1] - x_[i];
    const double s = (t - x_[i]) / h;
    const double s2 = s * s;
    const double g00 = (6 * s2 - 6 * s) / h, g10 = 3 * s2 - 4 * s + 1;
    const double g01 = (-6 * s2 + 6 * s) / h, g11 = 3 * s2 - 2 * s;
    return g00 * y_[i] + g10 * d_[i] + g01 * y_[i + 1] + g11 * d_[i + 1];
}

}  // namespace tipping::num
