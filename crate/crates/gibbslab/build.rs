fn main() {
    // BLAS and LAPACK both come from the system OpenBLAS.
    println!("cargo:rustc-link-lib=openblas");
}
