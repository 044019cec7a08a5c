#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <string_view>

namespace esma {

using Engine = std::mt19937_64;

/// Derives an independent seed for a named substream of a master seed.
/// Every random quantity in the workbench (world, init, split, ES noise,
/// batches) comes from its own substream, so results never depend on the
/// order in which components draw numbers.
std::uint64_t derive_seed(std::uint64_t master, std::string_view stream,
                          std::uint64_t a = 0, std::uint64_t b = 0);

/// Fills `out` with i.i.d. standard normal draws from a fresh engine seeded
/// with `seed`.
void fill_standard_normal(std::uint64_t seed, std::span<double> out);

}  // namespace esma
