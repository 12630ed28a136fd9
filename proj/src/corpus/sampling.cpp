#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "skillscan/corpus.hpp"

namespace skillscan {

// Acklam's rational approximation followed by one Halley step against erfc.
double normal_quantile(double probability) {
    if (!(probability > 0.0 && probability < 1.0)) {
        throw ArgumentError("normal_quantile: probability must lie in (0, 1)");
    }
    static constexpr double a[] = {-3.969683028665376e+01, 2.209460984245205e+02, -2.759285104469687e+02,
                                   1.383577518672690e+02,  -3.066479806614716e+01, 2.506628277459239e+00};
    static constexpr double b[] = {-5.447609879822406e+01, 1.615858368580409e+02, -1.556989798598866e+02,
                                   6.680131188771972e+01,  -1.328068155288572e+01};
    static constexpr double c[] = {-7.784894002430293e-03, -3.223964580411365e-01, -2.400758277161838e+00,
                                   -2.549732539343734e+00, 4.374664141464968e+00,  2.938163982698783e+00};
    static constexpr double d[] = {7.784695709041462e-03, 3.224671290700398e-01, 2.445134137142996e+00,
                                   3.754408661907416e+00};
    constexpr double low = 0.02425;
    const double p = probability;

    double x = 0.0;
    if (p < low) {
        const double q = std::sqrt(-2.0 * std::log(p));
        x = (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
            ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
    } else if (p <= 1.0 - low) {
        const double q = p - 0.5;
        const double r = q * q;
        x = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
            (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
    } else {
        const double q = std::sqrt(-2.0 * std::log(1.0 - p));
        x = -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
            ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
    }

    const double e = 0.5 * std::erfc(-x / std::sqrt(2.0)) - p;
    const double u = e * std::sqrt(2.0 * M_PI) * std::exp(x * x / 2.0);
    x = x - u / (1.0 + x * u / 2.0);
    return x;
}

std::size_t required_sample_size(std::size_t population, double confidence, double margin, double p) {
    if (population < 1) throw ArgumentError("population must be at least 1");
    if (!(margin > 0.0 && margin < 1.0)) throw ArgumentError("margin must lie in (0, 1)");
    if (!(confidence >= 0.5 && confidence < 1.0)) throw ArgumentError("confidence must lie in [0.5, 1)");
    if (!(p > 0.0 && p < 1.0)) throw ArgumentError("p must lie in (0, 1)");

    const double z = normal_quantile(0.5 + confidence / 2.0);
    const double n0 = z * z * p * (1.0 - p) / (margin * margin);
    const double N = static_cast<double>(population);
    const double n = n0 / (1.0 + (n0 - 1.0) / N);
    // Absorb floating-point noise so exact integers (e.g. N = 1) do not round up.
    const auto rounded = static_cast<std::size_t>(std::ceil(n - 1e-9));
    return std::clamp<std::size_t>(rounded, 1, population);
}

std::map<std::string, std::size_t> allocate_strata(const std::map<std::string, std::size_t>& stratum_sizes,
                                                   double fraction) {
    if (!(fraction > 0.0 && fraction <= 1.0)) {
        throw ArgumentError("fraction must lie in (0, 1]");
    }
    const std::size_t total =
        std::accumulate(stratum_sizes.begin(), stratum_sizes.end(), std::size_t{0},
                        [](std::size_t acc, const auto& kv) { return acc + kv.second; });
    const auto target = static_cast<std::size_t>(std::llround(fraction * static_cast<double>(total)));

    struct Share {
        std::string name;
        double remainder;
        std::size_t capacity;
    };
    std::map<std::string, std::size_t> allocation;
    std::vector<Share> shares;
    std::size_t assigned = 0;
    for (const auto& [name, size] : stratum_sizes) {
        const double quota = fraction * static_cast<double>(size);
        auto base = static_cast<std::size_t>(std::floor(quota + 1e-9));
        base = std::min(base, size);
        allocation[name] = base;
        assigned += base;
        // Quotas that are integers up to rounding noise carry no remainder.
        const double remainder = std::max(0.0, quota - static_cast<double>(base));
        shares.push_back({name, remainder < 1e-9 ? 0.0 : remainder, size - base});
    }
    // Map iteration gives lexicographic order, so a stable sort breaks remainder ties by name.
    std::stable_sort(shares.begin(), shares.end(),
                     [](const Share& a, const Share& b) { return a.remainder > b.remainder; });
    for (const auto& share : shares) {
        if (assigned >= target) break;
        if (share.capacity == 0) continue;
        ++allocation[share.name];
        ++assigned;
    }
    return allocation;
}

std::vector<SkillBundle> stratified_sample(const CorpusSnapshot& snapshot, double fraction, std::uint64_t seed) {
    if (snapshot.bundles.empty()) {
        throw ArgumentError("cannot sample an empty snapshot");
    }
    std::map<std::string, std::vector<std::size_t>> strata;
    for (std::size_t i = 0; i < snapshot.bundles.size(); ++i) {
        const auto& category = snapshot.bundles[i].category;
        strata[category ? *category : std::string(kUncategorized)].push_back(i);
    }
    std::map<std::string, std::size_t> sizes;
    for (const auto& [name, members] : strata) sizes[name] = members.size();
    const auto allocation = allocate_strata(sizes, fraction);

    // Partial Fisher-Yates on raw mt19937_64 output; the engine's sequence is fixed by the
    // standard, so selections reproduce across standard libraries.
    std::mt19937_64 rng(seed);
    std::vector<std::size_t> chosen;
    for (auto& [name, members] : strata) {
        const std::size_t take = allocation.at(name);
        for (std::size_t i = 0; i < take; ++i) {
            const std::size_t j = i + static_cast<std::size_t>(rng() % (members.size() - i));
            std::swap(members[i], members[j]);
        }
        chosen.insert(chosen.end(), members.begin(), members.begin() + static_cast<std::ptrdiff_t>(take));
    }
    std::sort(chosen.begin(), chosen.end());

    std::vector<SkillBundle> out;
    out.reserve(chosen.size());
    for (auto idx : chosen) out.push_back(snapshot.bundles[idx]);
    return out;
}

}  // namespace skillscan
