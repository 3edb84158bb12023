use std::path::Path;

// Links LAPACK + BLAS statically from the reference-implementation archives.
// Debian/Ubuntu keep those in dedicated subdirectories; the
// `update-alternatives` default may point at an optimized library whose
// runtime-dispatched kernels are not validated on every host, and static
// linkage also guarantees every dependent binary resolves the same
// implementation. Override with PTLB_LAPACK_DIR / PTLB_BLAS_DIR, or set
// PTLB_DYNAMIC_LAPACK=1 to fall back to plain dynamic -llapack -lblas.
fn main() {
    println!("cargo:rerun-if-env-changed=PTLB_LAPACK_DIR");
    println!("cargo:rerun-if-env-changed=PTLB_BLAS_DIR");
    println!("cargo:rerun-if-env-changed=PTLB_DYNAMIC_LAPACK");

    if std::env::var("PTLB_DYNAMIC_LAPACK").is_ok() {
        println!("cargo:rustc-link-lib=dylib=lapack");
        println!("cargo:rustc-link-lib=dylib=blas");
        return;
    }

    let multiarch = "/usr/lib/x86_64-linux-gnu";
    let lapack_dir = std::env::var("PTLB_LAPACK_DIR")
        .unwrap_or_else(|_| format!("{multiarch}/lapack"));
    let blas_dir = std::env::var("PTLB_BLAS_DIR")
        .unwrap_or_else(|_| format!("{multiarch}/blas"));

    let have_static = Path::new(&lapack_dir).join("liblapack.a").is_file()
        && Path::new(&blas_dir).join("libblas.a").is_file();
    for dir in [&lapack_dir, &blas_dir] {
        if Path::new(dir).is_dir() {
            println!("cargo:rustc-link-search=native={dir}");
        }
    }
    if have_static {
        println!("cargo:rustc-link-lib=static=lapack");
        println!("cargo:rustc-link-lib=static=blas");
        // Fortran runtime for the reference implementation
        println!("cargo:rustc-link-lib=dylib=gfortran");
    } else {
        println!("cargo:rustc-link-lib=dylib=lapack");
        println!("cargo:rustc-link-lib=dylib=blas");
    }
}
