//! Compiles and runs a C program against the generated header and the
//! static library.

use std::path::PathBuf;
use std::process::Command;

const PROGRAM: &str = r#"
#include <stdio.h>
#include <string.h>
#include "xmlbench.h"

int main(void) {
    XbRegistry *reg = NULL;
    if (xb_registry_load("ARI,BWT", &reg) != XB_STATUS_OK) return 1;
    const char *text = "The quick brown fox jumps over a lazy dog.";
    XbBuffer *packed = NULL, *plain = NULL;
    double t = 0;
    if (xb_compress(reg, "BWT", XB_MODE_DEFAULT, (const uint8_t *)text, strlen(text), &packed, &t)) return 2;
    if (xb_decompress(reg, "BWT", XB_MODE_DEFAULT, xb_buffer_data(packed), xb_buffer_len(packed), &plain)) return 3;
    if (xb_buffer_len(plain) != strlen(text) || memcmp(xb_buffer_data(plain), text, strlen(text))) return 4;
    if (xb_compress(reg, "XMI", XB_MODE_DEFAULT, (const uint8_t *)text, 1, &packed, NULL) != XB_STATUS_INVALID_ARGUMENT) return 5;
    printf("%s\n", xb_last_error());
    xb_buffer_free(packed);
    xb_buffer_free(plain);
    xb_registry_free(reg);
    return 0;
}
"#;

#[test]
fn c_program_links_and_runs() {
    let crate_dir = PathBuf::from(env!("CARGO_MANIFEST_DIR"));
    let exe = std::env::current_exe().unwrap();
    let profile_dir = exe.parent().and_then(|d| d.parent()).unwrap();
    let lib = profile_dir.join("libxmlbench_ffi.a");
    let cc = std::env::var("CC").unwrap_or_else(|_| "cc".into());
    if !lib.is_file() || Command::new(&cc).arg("--version").output().is_err() {
        eprintln!("skipping: no C compiler or {} missing", lib.display());
        return;
    }
    let dir = tempfile::tempdir().unwrap();
    let src = dir.path().join("main.c");
    std::fs::write(&src, PROGRAM).unwrap();
    let bin = dir.path().join("main");
    let status = Command::new(&cc)
        .args(["-std=c99", "-Wall", "-Werror", "-I"])
        .arg(crate_dir.join("include"))
        .arg(&src)
        .arg(&lib)
        .args(["-lpthread", "-ldl", "-lm", "-o"])
        .arg(&bin)
        .status()
        .unwrap();
    assert!(status.success(), "C build failed");
    let out = Command::new(&bin).output().unwrap();
    assert_eq!(out.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&out.stdout).contains("XMI"));
}
