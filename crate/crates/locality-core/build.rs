fn main() {
    // System OpenBLAS carries the full LAPACK (dsyevd, zheevd, zgeev).
    println!("cargo:rustc-link-lib=dylib=openblas");
    println!("cargo:rustc-link-search=native=/usr/lib/x86_64-linux-gnu");
}
