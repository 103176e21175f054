#include "phaseless/rng.hpp"

namespace phaseless {

std::uint64_t mix_seed(std::uint64_t value) {
    std::uint64_t z = value + 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

std::uint64_t derive_seed(std::uint64_t master, std::initializer_list<std::uint64_t> path) {
    std::uint64_t state = mix_seed(master);
    for (auto coordinate : path) state = mix_seed(state ^ mix_seed(coordinate + 0x632be59bd9b4e019ULL));
    return state;
}

} // namespace phaseless
