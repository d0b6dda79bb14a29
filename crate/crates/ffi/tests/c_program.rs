use std::path::PathBuf;
use std::process::Command;

const PROGRAM: &str = r#"
#include <stdio.h>
#include "brequant.h"

int main(void) {
    BqModel *m = NULL;
    if (bq_model_exponential_new(5.0, 4.0, 3.0, &m) != BQ_STATUS_OK) return 10;
    BqDesignOptions opts = bq_design_options_default();
    opts.multistart = 2;
    BqQuantizer *q = NULL;
    if (bq_design(m, 3, &opts, &q) != BQ_STATUS_OK) return 11;
    double p[3] = {0.2, 0.3, 0.5}, w[3], d;
    size_t cell;
    if (bq_quantize(q, p, 3, &cell, w) != BQ_STATUS_OK) return 12;
    if (bq_quantizer_max_divergence(q, &d) != BQ_STATUS_OK) return 13;
    if (bq_design(NULL, 3, NULL, &q) != BQ_STATUS_NULL_POINTER) return 14;
    printf("%zu %d %s\n", bq_quantizer_len(q), d > 0.0, bq_last_error_message());
    bq_quantizer_free(q);
    bq_model_free(m);
    return 0;
}
"#;

fn target_dir() -> PathBuf {
    let exe = std::env::current_exe().unwrap();
    exe.parent().unwrap().parent().unwrap().to_path_buf()
}

#[test]
fn header_compiles_and_links_from_c() {
    let cc = std::env::var("CC").unwrap_or_else(|_| "cc".into());
    if Command::new(&cc).arg("--version").output().is_err() {
        eprintln!("no C compiler found; skipping");
        return;
    }
    let lib = target_dir().join("libbrequant_ffi.a");
    if !lib.exists() {
        eprintln!("{} not built; skipping", lib.display());
        return;
    }
    let dir = tempfile::tempdir().unwrap();
    let src = dir.path().join("main.c");
    let bin = dir.path().join("main");
    std::fs::write(&src, PROGRAM).unwrap();
    let include = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("include");
    let status = Command::new(&cc)
        .args(["-std=c99", "-Wall", "-Werror", "-o"])
        .arg(&bin)
        .arg(&src)
        .arg("-I")
        .arg(&include)
        .arg(&lib)
        .args(["-lpthread", "-ldl", "-lm"])
        .status()
        .unwrap();
    assert!(status.success());
    let out = Command::new(&bin).output().unwrap();
    assert!(out.status.success(), "exit {:?}", out.status.code());
    assert_eq!(String::from_utf8(out.stdout).unwrap().trim(), "3 1 model is null");
}
