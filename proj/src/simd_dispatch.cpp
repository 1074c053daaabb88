#include "pchaos/simd.hpp"

#include <cstdlib>
#include <cstring>

namespace pchaos::simd {

namespace {

const Table kScalar{scalar::mul, scalar::axpy, scalar::scale_complex, scalar::csr_gather, scalar::pair_drift};
#if defined(__x86_64__) || defined(_M_X64)
const Table kAvx2{avx2::mul, avx2::axpy, avx2::scale_complex, avx2::csr_gather, avx2::pair_drift};
#endif

Isa detect() {
    const char* env = std::getenv("PCHAOS_SIMD");
    if (env && std::strcmp(env, "scalar") == 0) return Isa::scalar;
    return cpu_has_avx2() ? Isa::avx2 : Isa::scalar;
}

Isa& current() {
    static Isa isa = detect();
    return isa;
}

}  // namespace

bool cpu_has_avx2() {
#if (defined(__x86_64__) || defined(_M_X64)) && (defined(__GNUC__) || defined(__clang__))
    __builtin_cpu_init();
    return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
    return false;
#endif
}

Isa active_isa() { return current(); }

bool force_isa(Isa isa) {
    if (isa == Isa::avx2 && !cpu_has_avx2()) return false;
    current() = isa;
    return true;
}

const char* isa_name(Isa isa) { return isa == Isa::avx2 ? "avx2" : "scalar"; }

const Table& table_for(Isa isa) {
#if defined(__x86_64__) || defined(_M_X64)
    if (isa == Isa::avx2) return kAvx2;
#endif
    (void)isa;
    return kScalar;
}

const Table& table() { return table_for(current()); }

}  // namespace pchaos::simd
