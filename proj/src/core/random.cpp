#include "uwsr/random.hpp"

#include <sstream>

#include "uwsr/error.hpp"

namespace uwsr {

double uniform(Rng& rng, double lo, double hi) {
    if (lo == hi) {
        (void)rng();
        return lo;
    }
    return std::uniform_real_distribution<double>(lo, hi)(rng);
}

int uniform_int(Rng& rng, int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); }

bool bernoulli(Rng& rng, double p) { return std::uniform_real_distribution<double>(0.0, 1.0)(rng) < p; }

std::size_t choose_index(Rng& rng, std::span<const double> weights) {
    double total = 0.0;
    for (double w : weights) total += w;
    if (weights.empty() || !(total > 0.0)) fail(ErrorCode::InvalidRange, "choice weights must have positive sum");
    const double r = std::uniform_real_distribution<double>(0.0, total)(rng);
    double acc = 0.0;
    for (std::size_t i = 0; i < weights.size(); ++i) {
        acc += weights[i];
        if (r < acc && weights[i] > 0.0) return i;
    }
    // r landed on the upper edge through rounding; return the last non-zero entry
    for (std::size_t i = weights.size(); i-- > 0;) {
        if (weights[i] > 0.0) return i;
    }
    return weights.size() - 1;
}

std::uint64_t draw_seed(Rng& rng) { return rng(); }

std::string serialize_rng(const Rng& rng) {
    std::ostringstream out;
    out << rng;
    return out.str();
}

Rng deserialize_rng(const std::string& state) {
    Rng rng;
    std::istringstream in(state);
    in >> rng;
    if (!in) fail(ErrorCode::ParseError, "invalid RNG state");
    return rng;
}

}  // namespace uwsr
