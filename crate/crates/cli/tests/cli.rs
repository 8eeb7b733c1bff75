use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use ocfem::io::{read_mesh, read_p0, read_p1, STUDY_HEADER};

fn ocfem(args: &[&str], envs: &[(&str, &str)]) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_ocfem"));
    cmd.args(args).env_remove("OCFEM_THREADS");
    for (k, v) in envs {
        cmd.env(k, v);
    }
    cmd.output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn summary_value<'a>(text: &'a str, key: &str) -> &'a str {
    text.lines()
        .find_map(|l| l.strip_prefix(key).and_then(|r| r.strip_prefix('=')))
        .unwrap_or_else(|| panic!("missing {key} in summary:\n{text}"))
}

fn column(csv: &str, row_level: u32, name: &str) -> String {
    let header: Vec<&str> = csv.lines().next().unwrap().split(',').collect();
    let idx = header.iter().position(|h| *h == name).unwrap();
    let row = csv.lines().skip(1).find(|l| l.starts_with(&format!("{row_level},"))).unwrap();
    row.split(',').nth(idx).unwrap().to_string()
}

#[test]
fn solve_writes_fields_and_summary() {
    let dir = tempfile::tempdir().unwrap();
    let out = ocfem(&["solve", "--preset", "paper-sec6", "--level", "4", "--out", dir.path().to_str().unwrap()], &[]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let summary = fs::read_to_string(dir.path().join("summary.txt")).unwrap();
    assert_eq!(summary, stdout(&out));
    let kkt: f64 = summary_value(&summary, "kkt_residual").parse().unwrap();
    assert!(kkt <= 1e-9);
    assert_eq!(summary_value(&summary, "converged"), "true");

    let mesh = read_mesh(&fs::read_to_string(dir.path().join("mesh.txt")).unwrap(), 4).unwrap();
    let u = read_p0(&fs::read_to_string(dir.path().join("control.p0")).unwrap()).unwrap();
    let y = read_p1(&fs::read_to_string(dir.path().join("state.p1")).unwrap()).unwrap();
    let phi = read_p1(&fs::read_to_string(dir.path().join("adjoint.p1")).unwrap()).unwrap();
    assert_eq!(u.values.len(), mesh.num_triangles());
    assert_eq!(y.values.len(), mesh.num_vertices());
    assert_eq!(phi.values.len(), mesh.num_vertices());
    assert!(u.values.iter().all(|v| (-1.0..=1.0).contains(v)));
}

#[test]
fn tikhonov_only_control_vanishes() {
    let dir = tempfile::tempdir().unwrap();
    let out = ocfem(&["solve", "--preset", "tikhonov-only", "--level", "3", "--out", dir.path().to_str().unwrap()], &[]);
    assert!(out.status.success());
    let u = read_p0(&fs::read_to_string(dir.path().join("control.p0")).unwrap()).unwrap();
    assert!(u.values.iter().all(|&v| v == 0.0));
}

#[test]
fn emit_fields_off_keeps_only_summary() {
    let dir = tempfile::tempdir().unwrap();
    let out = ocfem(
        &["solve", "--preset", "tikhonov-only", "--level", "2", "--set", "emit_fields=false", "--out", dir.path().to_str().unwrap()],
        &[],
    );
    assert!(out.status.success());
    let names: Vec<_> = fs::read_dir(dir.path()).unwrap().map(|e| e.unwrap().file_name()).collect();
    assert_eq!(names, vec![std::ffi::OsString::from("summary.txt")]);
}

#[test]
fn unknown_preset_exits_2() {
    for sub in [&["solve", "--level", "3"][..], &["study", "--levels", "3..4"], &["check", "--level", "3"]] {
        let mut args = vec![sub[0], "--preset", "no-such-problem"];
        args.extend_from_slice(&sub[1..]);
        let out = ocfem(&args, &[]);
        assert_eq!(out.status.code(), Some(2));
        assert!(String::from_utf8_lossy(&out.stderr).contains("unknown preset"));
    }
}

#[test]
fn bad_config_exits_2() {
    let out = ocfem(&["solve", "--preset", "paper-sec6", "--set", "nu"], &[]);
    assert_eq!(out.status.code(), Some(2));
    let out = ocfem(&["study", "--preset", "paper-sec6", "--levels", "5..5"], &[]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn config_file_overrides_scalars() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    fs::write(&cfg, "# narrower box\nalpha = 0\nbeta = 0.5\nlevel = 3\n").unwrap();
    let out = ocfem(
        &["solve", "--preset", "paper-sec6", "--config", cfg.to_str().unwrap(), "--out", dir.path().to_str().unwrap()],
        &[],
    );
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(summary_value(&stdout(&out), "level"), "3");
    let u = read_p0(&fs::read_to_string(dir.path().join("control.p0")).unwrap()).unwrap();
    assert!(u.values.iter().all(|v| (0.0..=0.5).contains(v)));
    assert!(u.values.contains(&0.5));
}

#[test]
fn study_single_row_has_empty_orders() {
    let out = ocfem(&["study", "--preset", "paper-sec6", "--levels", "3..4"], &[]);
    assert!(out.status.success());
    let csv = stdout(&out);
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines.len(), 2);
    assert_eq!(lines[0], STUDY_HEADER);
    assert!(!csv.contains('\r'));
    let fields: Vec<&str> = lines[1].split(',').collect();
    assert_eq!(fields[0], "3");
    for i in [3, 5, 7, 9] {
        assert_eq!(fields[i], "");
    }
}

#[test]
fn study_is_deterministic_across_thread_counts() {
    let dir = tempfile::tempdir().unwrap();
    let run = |name: &str, threads: &str| {
        let path = dir.path().join(name);
        let out = ocfem(
            &["study", "--preset", "paper-sec6", "--levels", "3..6", "--out", path.to_str().unwrap()],
            &[("OCFEM_THREADS", threads)],
        );
        assert!(out.status.success());
        fs::read(path).unwrap()
    };
    let a = run("a.csv", "1");
    let b = run("b.csv", "1");
    let c = run("c.csv", "4");
    assert_eq!(a, b);
    assert_eq!(a, c);
}

#[test]
fn study_matches_reference_rows() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("nested").join("study.csv");
    let out = ocfem(&["study", "--preset", "paper-sec6", "--levels", "3..8", "--out", path.to_str().unwrap()], &[]);
    assert!(out.status.success());
    let csv = fs::read_to_string(Path::new(&path)).unwrap();
    assert_eq!(csv.lines().count(), 6);
    let e_u3: f64 = column(&csv, 3, "e_u").parse().unwrap();
    let e_y7: f64 = column(&csv, 7, "e_y").parse().unwrap();
    let eoc_y7: f64 = column(&csv, 7, "eoc_y").parse().unwrap();
    assert!((e_u3 / 1.4e-1 - 1.0).abs() <= 0.25, "e_3(u) = {e_u3}");
    assert!((e_y7 / 2.6e-4 - 1.0).abs() <= 0.25, "e_7(y) = {e_y7}");
    assert!((eoc_y7 - 2.0).abs() <= 0.1, "EOC_7(y) = {eoc_y7}");
    let e_u3_text = column(&csv, 3, "e_u");
    assert_eq!(e_u3_text.split('e').next().unwrap().replace('.', "").len(), 7, "six or more significant digits");
}

#[test]
fn check_battery_passes_on_benchmark() {
    let out = ocfem(&["check", "--preset", "paper-sec6", "--level", "4"], &[("OCFEM_THREADS", "2")]);
    let text = stdout(&out);
    assert!(out.status.success(), "{text}");
    assert_eq!(text.lines().filter(|l| l.starts_with("PASS ")).count(), 8, "{text}");
}

#[test]
fn check_rejects_inadmissible_bound() {
    let out = ocfem(&["check", "--preset", "paper-sec6", "--level", "4", "--set", "alpha=-3"], &[]);
    assert_eq!(out.status.code(), Some(1));
    let text = stdout(&out);
    assert!(text.starts_with("FAIL admissibility"), "{text}");
    assert!(!String::from_utf8_lossy(&out.stderr).contains("panicked"));
}

#[test]
fn check_manufactured_preset() {
    let out = ocfem(&["check", "--preset", "manufactured-constant", "--level", "3"], &[]);
    let text = stdout(&out);
    assert!(out.status.success(), "{text}");
    assert!(text.contains("PASS manufactured constant state"));
}
