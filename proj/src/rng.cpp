#include "ffq/rng.hpp"

namespace ffq {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::uint64_t derive_seed(std::uint64_t master, std::string_view stream, std::uint64_t i,
                          std::uint64_t j) {
  std::uint64_t h = splitmix64(master ^ fnv1a(stream));
  h = splitmix64(h ^ splitmix64(i + 1));
  h = splitmix64(h ^ splitmix64((j + 1) * 0xd1b54a32d192ed03ULL));
  return h;
}

}  // namespace ffq
