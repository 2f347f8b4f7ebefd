#pragma once

#include <array>
#include <cstdint>
#include <span>

namespace shelab::rng {

/// Philox4x32-10 counter-based generator (Salmon et al., SC'11). Pure function of
/// (counter, key); no state.
std::array<std::uint32_t, 4> philox4x32(std::array<std::uint32_t, 4> counter,
                                        std::array<std::uint32_t, 2> key) noexcept;

enum class Stream : std::uint32_t {
    analysis = 0,
    pilot = 1,
    spectral = 2,
};

/// Seed lineage of one replicate. Noise for (step, cell) is a fixed function of
/// (base_seed, stream, replicate, step, cell), independent of scheduling.
struct Lineage {
    std::uint64_t base_seed = 0;
    std::uint64_t replicate = 0;
    Stream stream = Stream::analysis;

    bool operator==(const Lineage&) const = default;
};

/// Fills `out` with independent standard normals for time step `step`; out[i] belongs to cell i.
/// Box-Muller on 53-bit uniforms, one Philox block per pair of cells.
void fill_normals(const Lineage& lineage, std::uint64_t step, std::span<double> out);

/// Same, for an arbitrary 32-bit sub-stream tag (used by the spectral sampler's mode draws).
void fill_normals(const Lineage& lineage, std::uint64_t step, std::uint32_t tag,
                  std::span<double> out);

}  // namespace shelab::rng
