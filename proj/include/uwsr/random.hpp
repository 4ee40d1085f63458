#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <string>

namespace uwsr {

using Rng = std::mt19937_64;

// Distribution objects are created per call so the engine state alone
// determines every subsequent draw (and can be checkpointed).
double uniform(Rng& rng, double lo, double hi);
int uniform_int(Rng& rng, int lo, int hi);  // inclusive
bool bernoulli(Rng& rng, double p);
std::size_t choose_index(Rng& rng, std::span<const double> weights);
std::uint64_t draw_seed(Rng& rng);

std::string serialize_rng(const Rng& rng);
Rng deserialize_rng(const std::string& state);

}  // namespace uwsr
