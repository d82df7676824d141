use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

const CUBE_OBJ: &str = "\
v -1 -1 -1
v 1 -1 -1
v -1 1 -1
v 1 1 -1
v -1 -1 1
v 1 -1 1
v -1 1 1
v 1 1 1
f 1 3 2
f 2 3 4
f 5 6 7
f 6 8 7
f 1 2 5
f 2 6 5
f 3 7 4
f 4 7 8
f 1 5 3
f 3 5 7
f 2 4 6
f 4 8 6
";

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_mesh-saliency"));
    c.env("RUST_LOG", "warn");
    c
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

/// A small session keeps these tests fast; every stage still runs.
fn write_config(dir: &Path, meshes: &str, extra: &str) -> PathBuf {
    let cfg = dir.join("run.toml");
    fs::write(
        &cfg,
        format!(
            "meshes = [{meshes}]\noutput_dir = \"out\"\n{extra}\n[session]\nsubjects = 2\nduration = 2.0\n\n[cone]\nrays_per_sample = 16\n"
        ),
    )
    .unwrap();
    cfg
}

fn file_names(dir: &Path) -> Vec<String> {
    let mut names: Vec<String> = fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().file_name().to_string_lossy().into_owned())
        .collect();
    names.sort();
    names
}

#[test]
fn cube_smoke_writes_six_files() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("cube.obj"), CUBE_OBJ).unwrap();
    let cfg = write_config(dir.path(), "\"cube.obj\"", "");
    let out = run(&["pipeline", cfg.to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let names = file_names(&dir.path().join("out/cube"));
    assert_eq!(
        names,
        ["gaze.jsonl", "hits.csv", "metrics.csv", "normalized.ply", "saliency.csv", "saliency.ply"]
    );
    let metrics = fs::read_to_string(dir.path().join("out/cube/metrics.csv")).unwrap();
    assert!(metrics.starts_with("# config_digest="));
    assert_eq!(metrics.lines().filter(|l| !l.starts_with('#')).count(), 2);
}

#[test]
fn missing_mesh_fails_before_any_output() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "\"missing.obj\"", "");
    let out = run(&["pipeline", cfg.to_str().unwrap()]);
    assert!(!out.status.success());
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("mesh not found"), "{err}");
    assert!(!dir.path().join("out").exists());
}

#[test]
fn ablation_grid_gives_six_rows_and_reports() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("cube.obj"), CUBE_OBJ).unwrap();
    let cfg = write_config(dir.path(), "\"cube.obj\"", "");
    let out = run(&["pipeline", cfg.to_str().unwrap(), "--ablation-grid", "--deterministic", "--seed", "5"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let metrics = fs::read_to_string(dir.path().join("out/cube/metrics.csv")).unwrap();
    let data: Vec<&str> = metrics.lines().filter(|l| !l.starts_with('#')).skip(1).collect();
    assert_eq!(data.len(), 6);
    for acq in ["single_ray", "vcs"] {
        for proc in ["hopcount", "euclidean", "geodesic"] {
            assert!(data.iter().any(|l| l.contains(&format!(",{acq},{proc},"))), "{acq}/{proc}");
        }
    }
    assert!(data.iter().all(|l| l.contains(",5,cube,")));

    let pattern = format!("{}/out/*/metrics.csv", dir.path().display());
    let rep = run(&["report", &pattern]);
    assert!(rep.status.success(), "{}", String::from_utf8_lossy(&rep.stderr));
    let text = String::from_utf8_lossy(&rep.stdout);
    assert_eq!(text.lines().filter(|l| l.starts_with("vcs,") || l.starts_with("single_ray,")).count(), 6);
    assert!(text.contains("<100k,1,"));
}

#[test]
fn failing_mesh_does_not_stop_the_batch() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("cube.obj"), CUBE_OBJ).unwrap();
    fs::write(dir.path().join("quad.obj"), "v 0 0 0\nv 1 0 0\nv 1 1 0\nv 0 1 0\nf 1 2 3 4\n").unwrap();
    let cfg = write_config(dir.path(), "\"quad.obj\", \"cube.obj\"", "");
    let out = run(&["pipeline", cfg.to_str().unwrap()]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("non-triangle face at line 5"));
    assert_eq!(file_names(&dir.path().join("out/cube")).len(), 6);
}

#[test]
fn stage_commands_chain() {
    let dir = tempfile::tempdir().unwrap();
    let p = |n: &str| dir.path().join(n).to_string_lossy().into_owned();
    fs::write(p("cube.obj"), CUBE_OBJ).unwrap();
    let steps: [&[&str]; 5] = [
        &["normalize", &p("cube.obj"), "-o", &p("n.ply")],
        &["synth-gaze", &p("cube.obj"), "-o", &p("g.jsonl"), "--subjects", "1", "--duration", "1"],
        &["sample", &p("cube.obj"), &p("g.jsonl"), "-o", &p("h.csv"), "--rays", "8"],
        &["diffuse", &p("cube.obj"), &p("h.csv"), "-o", &p("s.csv"), "--ply", &p("s.ply")],
        &["metrics", &p("cube.obj"), &p("h.csv"), &p("s.csv")],
    ];
    let mut last = None;
    for args in steps {
        let out = run(args);
        assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
        last = Some(out);
    }
    let text = String::from_utf8(last.unwrap().stdout).unwrap();
    assert!(text.starts_with("sauc,cc,kl,coverage\n"));
    let ply = fs::read_to_string(p("n.ply")).unwrap();
    assert!(ply.contains("element face 12"));
}

#[test]
fn report_refuses_mixed_versions() {
    let dir = tempfile::tempdir().unwrap();
    let header = "schema_version,pipeline_version,config_digest,seed,mesh,face_count,acquisition,processing,ic,sauc,cc,kl,coverage_vcs,coverage_single,improvement,negatives\n";
    fs::write(dir.path().join("a.csv"), format!("{header}1,0.1.0,d,0,a,10,vcs,geodesic,,0.7,0.5,1.0,0.5,0.25,2,uniform\n")).unwrap();
    fs::write(dir.path().join("b.csv"), format!("{header}1,0.2.0,d,0,b,10,vcs,geodesic,,0.7,0.5,1.0,0.5,0.25,2,uniform\n")).unwrap();
    let out = run(&["report", &format!("{}/*.csv", dir.path().display())]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("pipeline version"));
}
