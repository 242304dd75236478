#include "bpre/exact_engine.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "bpre/report.hpp"

namespace bpre {

namespace {

// i-fold convolution power of one atom's pmf, advanced one individual at a time.
struct ConvolutionPower {
    std::span<const double> pmf;
    std::vector<double> tail;  // tail[x] = P(X > x)
    std::vector<double> power;
    std::size_t lo = 0;
    std::size_t hi = 0;
    double deficit = 0.0;

    ConvolutionPower(std::span<const double> p, std::size_t truncation)
        : pmf(p), tail(p.size(), 0.0), power(truncation + 1, 0.0) {
        for (std::size_t x = p.size() - 1; x-- > 0;) tail[x] = tail[x + 1] + p[x + 1];
        power[0] = 1.0;
    }

    double tail_above(std::size_t x) const { return x < tail.size() ? tail[x] : 0.0; }

    void advance() {
        const std::size_t truncation = power.size() - 1;
        std::size_t min_b = 0;
        while (pmf[min_b] == 0.0) ++min_b;

        std::vector<double> next(power.size(), 0.0);
        double escaped = 0.0;
        for (std::size_t a = lo; a <= hi; ++a) {
            const double pa = power[a];
            if (pa == 0.0) continue;
            const std::size_t b_end = std::min(pmf.size() - 1, truncation - a);
            for (std::size_t b = min_b; b <= b_end; ++b) next[a + b] += pa * pmf[b];
            escaped += pa * tail_above(truncation - a);
        }
        deficit += escaped;
        power.swap(next);
        lo = std::min(lo + min_b, truncation);
        hi = std::min(hi + pmf.size() - 1, truncation);
    }
};

}  // namespace

double TransitionKernel::operator()(std::size_t i, std::size_t j) const {
    if (i >= rows_.size() || j < first_[i]) return 0.0;
    const std::size_t off = j - first_[i];
    return off < rows_[i].size() ? rows_[i][off] : 0.0;
}

TransitionKernel build_kernel(const EnvironmentModel& env, std::size_t truncation) {
    if (truncation < 1) throw Error(ErrorKind::TruncationTooSmall, "truncation J must be >= 1");

    std::vector<ConvolutionPower> powers;
    powers.reserve(env.size());
    for (const auto& a : env.atoms()) powers.emplace_back(a.law.pmf(), truncation);

    TransitionKernel kernel;
    kernel.first_.resize(truncation + 1);
    kernel.rows_.resize(truncation + 1);
    kernel.deficit_.resize(truncation + 1);

    for (std::size_t i = 0; i <= truncation; ++i) {
        if (i > 0) {
            for (auto& p : powers) p.advance();
        }
        std::size_t lo = truncation;
        std::size_t hi = 0;
        for (const auto& p : powers) {
            lo = std::min(lo, p.lo);
            hi = std::max(hi, p.hi);
        }
        kernel.first_[i] = lo;
        kernel.rows_[i].assign(hi - lo + 1, 0.0);
        double deficit = 0.0;
        auto& row = kernel.rows_[i];
        const std::size_t first = kernel.first_[i];
        for (std::size_t e = 0; e < powers.size(); ++e) {
            const double w = env.atoms()[e].weight;
            const auto& p = powers[e];
            for (std::size_t j = std::max(p.lo, first); j <= p.hi && j - first < row.size(); ++j) {
                row[j - first] += w * p.power[j];
            }
            deficit += w * p.deficit;
        }
        kernel.deficit_[i] = deficit;
    }
    return kernel;
}

DistributionVector initial_distribution(int k, std::size_t truncation) {
    if (k < 0) throw Error(ErrorKind::BadParams, "initial size must be nonnegative");
    if (static_cast<std::size_t>(k) > truncation) {
        throw Error(ErrorKind::TruncationTooSmall,
                    "truncation J = " + std::to_string(truncation) + " below k = " + std::to_string(k));
    }
    DistributionVector d;
    d.k = k;
    d.probs.assign(truncation + 1, 0.0);
    d.probs[static_cast<std::size_t>(k)] = 1.0;
    return d;
}

DistributionVector propagate(const TransitionKernel& kernel, const DistributionVector& dist) {
    if (dist.probs.size() != kernel.truncation() + 1) {
        throw Error(ErrorKind::DimensionMismatch, "distribution and kernel truncations differ");
    }
    DistributionVector next;
    next.n = dist.n + 1;
    next.k = dist.k;
    next.probs.assign(dist.probs.size(), 0.0);
    double escaped = 0.0;
    for (std::size_t i = 0; i < dist.probs.size(); ++i) {
        const double pi = dist.probs[i];
        if (pi == 0.0) continue;
        const auto row = kernel.row(i);
        double* out = next.probs.data() + kernel.first(i);
        for (std::size_t off = 0; off < row.size(); ++off) out[off] += pi * row[off];
        escaped += pi * kernel.row_deficit(i);
    }
    next.deficit = dist.deficit + escaped;
    return next;
}

std::vector<DistributionVector> exact_dist_history(const EnvironmentModel& env, int k, int n,
                                                   std::size_t truncation) {
    if (n < 0) throw Error(ErrorKind::BadParams, "generation count must be nonnegative");
    auto dist = initial_distribution(k, truncation);
    const auto kernel = build_kernel(env, truncation);
    std::vector<DistributionVector> history;
    history.reserve(static_cast<std::size_t>(n) + 1);
    history.push_back(dist);
    for (int g = 0; g < n; ++g) history.push_back(propagate(kernel, history.back()));
    return history;
}

DistributionVector exact_dist(const EnvironmentModel& env, int k, int n, std::size_t truncation) {
    if (n < 0) throw Error(ErrorKind::BadParams, "generation count must be nonnegative");
    auto dist = initial_distribution(k, truncation);
    const auto kernel = build_kernel(env, truncation);
    for (int g = 0; g < n; ++g) dist = propagate(kernel, dist);
    return dist;
}

std::size_t default_truncation(const EnvironmentModel& env, int k, int n) {
    const double growth = std::ceil(env_moment_m(env, 1.0));
    const double guess = static_cast<double>(k) * std::pow(growth, n);
    return static_cast<std::size_t>(std::clamp(guess, 200.0, 5000.0));
}

BoundedValue gen_func(const DistributionVector& dist, double t) {
    if (!(t >= 0.0 && t < 1.0)) {
        throw Error(ErrorKind::DomainError, "generating function needs t in [0, 1), got " +
                                                std::to_string(t));
    }
    double acc = 0.0;
    for (auto it = dist.probs.rbegin(); it != dist.probs.rend(); ++it) acc = acc * t + *it;
    const double tail =
        dist.deficit == 0.0 ? 0.0
                            : dist.deficit * std::pow(t, static_cast<double>(dist.truncation() + 1));
    return {acc, tail};
}

Interval harmonic_moment_Zn(const DistributionVector& dist, double r) {
    if (!(r > 0.0)) throw Error(ErrorKind::DomainError, "harmonic moment order must be positive");
    if (dist.probs[0] > 0.0) {
        throw Error(ErrorKind::ExtinctionMass, "P(Z_n = 0) = " + format_double(dist.probs[0]));
    }
    double lower = 0.0;
    for (std::size_t j = 1; j < dist.probs.size(); ++j) {
        if (dist.probs[j] != 0.0) lower += dist.probs[j] * std::pow(static_cast<double>(j), -r);
    }
    const double upper =
        lower + dist.deficit * std::pow(static_cast<double>(dist.truncation() + 1), -r);
    return {lower, upper};
}

void write_distribution_csv(std::ostream& out, const DistributionVector& dist) {
    out << "n,j,prob\n";
    for (std::size_t j = 0; j < dist.probs.size(); ++j) {
        if (dist.probs[j] == 0.0) continue;
        out << dist.n << ',' << j << ',' << format_double(dist.probs[j]) << '\n';
    }
    out << dist.n << ",deficit," << format_double(dist.deficit) << '\n';
}

}  // namespace bpre
