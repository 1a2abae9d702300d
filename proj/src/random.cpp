#include "seqdrift/random.hpp"

namespace seqdrift {

std::uint64_t mix64(std::uint64_t x) noexcept {
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

SplitMix64::result_type SplitMix64::operator()() noexcept {
  state_ += 0x9e3779b97f4a7c15ULL;
  return mix64(state_);
}

std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream_id, std::uint64_t index) noexcept {
  std::uint64_t h = mix64(master + 0x9e3779b97f4a7c15ULL);
  h = mix64(h ^ (stream_id + 0x632be59bd9b4e019ULL));
  h = mix64(h ^ (index + 0x8cb92ba72f3d8dd7ULL));
  return h;
}

}  // namespace seqdrift
