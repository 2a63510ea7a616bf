//! Runtime CPU feature detection without `std`.

#[cfg(target_arch = "x86_64")]
pub fn has_avx2() -> bool {
    use core::sync::atomic::{AtomicU8, Ordering};
    static CACHED: AtomicU8 = AtomicU8::new(0);
    match CACHED.load(Ordering::Relaxed) {
        1 => false,
        2 => true,
        _ => {
            // SAFETY: cpuid exists on every x86_64 CPU.
            let found = unsafe { detect_avx2() };
            CACHED.store(if found { 2 } else { 1 }, Ordering::Relaxed);
            found
        }
    }
}

#[cfg(target_arch = "x86_64")]
unsafe fn detect_avx2() -> bool {
    use core::arch::x86_64::{__cpuid, __cpuid_count};
    if __cpuid(0).eax < 7 {
        return false;
    }
    let ecx = __cpuid(1).ecx;
    let osxsave = ecx & (1 << 27) != 0;
    let avx = ecx & (1 << 28) != 0;
    // the OS must save the YMM state (XCR0 bits 1 and 2)
    osxsave && avx && xcr0() & 0b110 == 0b110 && __cpuid_count(7, 0).ebx & (1 << 5) != 0
}

#[cfg(target_arch = "x86_64")]
#[target_feature(enable = "xsave")]
unsafe fn xcr0() -> u64 {
    core::arch::x86_64::_xgetbv(0)
}
