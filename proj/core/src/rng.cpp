#include "shelab/rng.hpp"

#include <cmath>
#include <numbers>

namespace shelab::rng {

namespace {

constexpr std::uint32_t kM0 = 0xD2511F53u;
constexpr std::uint32_t kM1 = 0xCD9E8D57u;
constexpr std::uint32_t kW0 = 0x9E3779B9u;
constexpr std::uint32_t kW1 = 0xBB67AE85u;

inline void mulhilo(std::uint32_t a, std::uint32_t b, std::uint32_t& hi, std::uint32_t& lo) {
    const std::uint64_t p = static_cast<std::uint64_t>(a) * b;
    hi = static_cast<std::uint32_t>(p >> 32);
    lo = static_cast<std::uint32_t>(p);
}

inline double to_open_unit(std::uint32_t hi, std::uint32_t lo) {
    const std::uint64_t bits = (static_cast<std::uint64_t>(hi) << 32) | lo;
    return (static_cast<double>(bits >> 11) + 1.0) * 0x1.0p-53;  // (0, 1]
}

inline double to_unit(std::uint32_t hi, std::uint32_t lo) {
    const std::uint64_t bits = (static_cast<std::uint64_t>(hi) << 32) | lo;
    return static_cast<double>(bits >> 11) * 0x1.0p-53;  // [0, 1)
}

void fill_impl(const Lineage& lin, std::uint64_t step, std::uint32_t tag, std::span<double> out) {
    const std::array<std::uint32_t, 2> key = {static_cast<std::uint32_t>(lin.base_seed),
                                              static_cast<std::uint32_t>(lin.base_seed >> 32)};
    const auto rep_lo = static_cast<std::uint32_t>(lin.replicate);
    // Upper replicate bits share the last word with the stream/tag.
    const auto word3 = (tag << 16) ^ static_cast<std::uint32_t>(lin.replicate >> 32);
    const std::size_t n = out.size();
    const double two_pi = 2.0 * std::numbers::pi;
    for (std::size_t j = 0; 2 * j < n; ++j) {
        const std::array<std::uint32_t, 4> ctr = {static_cast<std::uint32_t>(j),
                                                  static_cast<std::uint32_t>(step), rep_lo, word3};
        const auto r = philox4x32(ctr, key);
        const double u1 = to_open_unit(r[0], r[1]);
        const double u2 = to_unit(r[2], r[3]);
        const double rad = std::sqrt(-2.0 * std::log(u1));
        const double ang = two_pi * u2;
        out[2 * j] = rad * std::cos(ang);
        if (2 * j + 1 < n) out[2 * j + 1] = rad * std::sin(ang);
    }
}

}  // namespace

std::array<std::uint32_t, 4> philox4x32(std::array<std::uint32_t, 4> c,
                                        std::array<std::uint32_t, 2> k) noexcept {
    for (int round = 0; round < 10; ++round) {
        if (round > 0) {
            k[0] += kW0;
            k[1] += kW1;
        }
        std::uint32_t hi0, lo0, hi1, lo1;
        mulhilo(kM0, c[0], hi0, lo0);
        mulhilo(kM1, c[2], hi1, lo1);
        c = {hi1 ^ c[1] ^ k[0], lo1, hi0 ^ c[3] ^ k[1], lo0};
    }
    return c;
}

void fill_normals(const Lineage& lineage, std::uint64_t step, std::span<double> out) {
    fill_impl(lineage, step, static_cast<std::uint32_t>(lineage.stream), out);
}

void fill_normals(const Lineage& lineage, std::uint64_t step, std::uint32_t tag,
                  std::span<double> out) {
    fill_impl(lineage, step, (tag << 4) | static_cast<std::uint32_t>(lineage.stream), out);
}

}  // namespace shelab::rng
