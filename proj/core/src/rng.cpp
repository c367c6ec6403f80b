#include "activeid/rng.hpp"

namespace activeid {
namespace {

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

// FNV-1a over the stream name.
std::uint64_t hash_name(std::string_view name) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (char c : name) {
        h ^= static_cast<unsigned char>(c);
        h *= 0x100000001b3ULL;
    }
    return h;
}

}  // namespace

std::uint64_t RandomStream::derive_key(std::uint64_t seed, std::string_view name, std::uint64_t index) {
    std::uint64_t k = splitmix64(seed);
    k               = splitmix64(k ^ hash_name(name));
    k               = splitmix64(k ^ index);
    return k;
}

RandomStream::RandomStream(std::uint64_t seed, std::string_view name, std::uint64_t index)
    : engine_(derive_key(seed, name, index)) {}

std::uint64_t trial_seed(std::uint64_t seed, std::uint64_t index) {
    return RandomStream::derive_key(seed, streams::kTrial, index);
}

}  // namespace activeid
