#include "coloralign/kendall.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <vector>

#include "coloralign/error.hpp"

namespace coloralign {

namespace {

// Sorts `v` ascending and returns the number of strict inversions removed.
std::int64_t merge_count(std::vector<double>& v, std::vector<double>& buf, std::size_t lo, std::size_t hi) {
    if (hi - lo < 2) return 0;
    const std::size_t mid = lo + (hi - lo) / 2;
    std::int64_t swaps = merge_count(v, buf, lo, mid) + merge_count(v, buf, mid, hi);
    std::size_t i = lo, j = mid, k = lo;
    while (i < mid && j < hi) {
        if (v[j] < v[i]) {
            swaps += static_cast<std::int64_t>(mid - i);
            buf[k++] = v[j++];
        } else {
            buf[k++] = v[i++];
        }
    }
    while (i < mid) buf[k++] = v[i++];
    while (j < hi) buf[k++] = v[j++];
    std::copy(buf.begin() + static_cast<std::ptrdiff_t>(lo), buf.begin() + static_cast<std::ptrdiff_t>(hi),
              v.begin() + static_cast<std::ptrdiff_t>(lo));
    return swaps;
}

struct TieSums {
    double pairs = 0.0;   // sum t(t-1)
    double cubic = 0.0;   // sum t(t-1)(t-2)
    double weighted = 0.0;  // sum t(t-1)(2t+5)
    std::int64_t tied_pairs = 0;

    void add(std::int64_t t) {
        if (t < 2) return;
        const double d = static_cast<double>(t);
        pairs += d * (d - 1.0);
        cubic += d * (d - 1.0) * (d - 2.0);
        weighted += d * (d - 1.0) * (2.0 * d + 5.0);
        tied_pairs += t * (t - 1) / 2;
    }
};

template <typename Seq>
TieSums tie_sums_sorted(const Seq& sorted) {
    TieSums sums;
    std::size_t run = 1;
    for (std::size_t i = 1; i <= sorted.size(); ++i) {
        if (i < sorted.size() && sorted[i] == sorted[i - 1]) {
            ++run;
        } else {
            sums.add(static_cast<std::int64_t>(run));
            run = 1;
        }
    }
    return sums;
}

}  // namespace

double tau_from_counts(const TauCounts& c) {
    const double denom = static_cast<double>(c.n0 - c.n1) * static_cast<double>(c.n0 - c.n2);
    if (denom <= 0.0) return std::numeric_limits<double>::quiet_NaN();
    return static_cast<double>(c.s) / std::sqrt(denom);
}

TauB kendall_tau_b(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size()) throw InputError("kendall: length mismatch");
    const std::size_t n = x.size();
    TauB out;
    if (n < 2) {
        out.tau = std::numeric_limits<double>::quiet_NaN();
        return out;
    }

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(), [&](std::size_t i, std::size_t j) {
        return x[i] != x[j] ? x[i] < x[j] : y[i] < y[j];
    });

    std::vector<double> xs(n), ys(n);
    for (std::size_t k = 0; k < n; ++k) {
        xs[k] = x[order[k]];
        ys[k] = y[order[k]];
    }

    const TieSums xt = tie_sums_sorted(xs);
    std::int64_t joint = 0;
    {
        std::size_t run = 1;
        for (std::size_t i = 1; i <= n; ++i) {
            if (i < n && xs[i] == xs[i - 1] && ys[i] == ys[i - 1]) {
                ++run;
            } else {
                joint += static_cast<std::int64_t>(run * (run - 1) / 2);
                run = 1;
            }
        }
    }

    std::vector<double> buf(n);
    const std::int64_t swaps = merge_count(ys, buf, 0, n);
    const TieSums yt = tie_sums_sorted(ys);

    auto& c = out.counts;
    c.n0 = static_cast<std::int64_t>(n) * static_cast<std::int64_t>(n - 1) / 2;
    c.n1 = xt.tied_pairs;
    c.n2 = yt.tied_pairs;
    c.s = c.n0 - c.n1 - c.n2 + joint - 2 * swaps;
    out.tau = tau_from_counts(c);

    const double nd = static_cast<double>(n);
    const double m = nd * (nd - 1.0);
    double var = (m * (2.0 * nd + 5.0) - xt.weighted - yt.weighted) / 18.0 + (2.0 * xt.pairs * yt.pairs) / m;
    if (n > 2) var += xt.cubic * yt.cubic / (9.0 * m * (nd - 2.0));
    if (var > 0.0 && std::isfinite(out.tau)) {
        const double z = static_cast<double>(c.s) / std::sqrt(var);
        out.p_normal = std::erfc(std::abs(z) / std::sqrt(2.0));
    }
    return out;
}

}  // namespace coloralign
