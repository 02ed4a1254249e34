//! Cache prefetch hints for the random-access SP sweep.

/// Asks the CPU to start loading the cache line holding `x`. A no-op on
/// targets without a prefetch instruction.
#[inline(always)]
pub(crate) fn hint<T>(x: &T) {
    #[cfg(target_arch = "x86_64")]
    #[allow(unsafe_code)]
    // SAFETY: prefetch is a hint that never faults; `x` is a live reference,
    // and SSE is part of the x86_64 baseline.
    unsafe {
        use core::arch::x86_64::{_mm_prefetch, _MM_HINT_T0};
        _mm_prefetch::<_MM_HINT_T0>(x as *const T as *const i8);
    }
    #[cfg(not(target_arch = "x86_64"))]
    let _ = x;
}
