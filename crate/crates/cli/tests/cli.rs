use std::path::Path;
use std::process::{Command, Output};

fn fracprop(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fracprop"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

/// Rows of a CSV text, header dropped.
fn rows(text: &str) -> Vec<Vec<String>> {
    let mut r = csv::Reader::from_reader(text.as_bytes());
    r.records()
        .map(|rec| rec.unwrap().iter().map(str::to_owned).collect())
        .collect()
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let path = dir.join(name);
    std::fs::write(&path, text).unwrap();
    path.to_str().unwrap().to_owned()
}

#[test]
fn ml_eval_examples() {
    let cases = [
        ("1", "-1", 0.3678794412, 1e-10),
        ("2", "-2.4674011002723395", 0.0, 1e-12),
        ("0.5", "-1", 0.4275835762, 1e-10),
    ];
    for (alpha, z, want, tol) in cases {
        let out = fracprop(&["ml-eval", "--alpha", alpha, &format!("--z={z}")]);
        assert!(out.status.success(), "{}", stderr(&out));
        let text = stdout(&out);
        assert!(text.starts_with("z,value,err_estimate,regime\n"));
        let r = rows(&text);
        assert_eq!(r.len(), 1);
        let value: f64 = r[0][1].parse().unwrap();
        assert!((value - want).abs() < tol, "alpha {alpha}: {value}");
        assert!(["series", "asymptotic", "integral"].contains(&r[0][3].as_str()));
    }
}

#[test]
fn ml_eval_lists_and_config() {
    let out = fracprop(&["ml-eval", "--alpha", "0.8", "--delta", "2", "--z=-1,-10,-1000"]);
    assert!(out.status.success());
    let zs: Vec<String> = rows(&stdout(&out)).into_iter().map(|r| r[0].clone()).collect();
    assert_eq!(zs, ["-1.0", "-10.0", "-1000.0"]);

    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "ml.toml", "[ml]\nalpha = 1.0\nz = [0.0, -2.0]\n");
    let out = fracprop(&["ml-eval", "--config", &cfg]);
    let r = rows(&stdout(&out));
    assert_eq!(r[0][1], "1.0");
    assert!((r[1][1].parse::<f64>().unwrap() - (-2f64).exp()).abs() < 1e-15);
}

#[test]
fn rejected_parameters_exit_2() {
    for args in [
        vec!["ml-eval", "--alpha", "3", "--z=-1"],
        vec!["ml-eval", "--alpha", "0.5", "--z=1"],
        vec!["ml-eval", "--alpha", "0.5"],
        vec!["decay", "--model", "torus:1", "--beta", "2.5"],
        vec!["decay", "--model", "torus:1"],
        vec!["spectrum", "--model", "klein:4"],
        vec!["no-such-command"],
    ] {
        let out = fracprop(&args);
        assert_eq!(out.status.code(), Some(2), "{args:?}: {}", stderr(&out));
    }
    let dir = tempfile::tempdir().unwrap();
    for text in [
        "colour = \"red\"\n",
        "[equation]\nbeta = 0.5\ngamma = 2\n",
        "[model]\nkind = \"torus\"\ndim = 1\nradius = 2\n",
        "[data]\nw0 = { kind = \"gaussian\", width = 1 }\n",
    ] {
        let cfg = write(dir.path(), "bad.toml", text);
        let out = fracprop(&["decay", "--config", &cfg, "--beta", "0.5"]);
        assert_eq!(out.status.code(), Some(2), "{text}");
        assert!(stderr(&out).contains("unknown"), "{}", stderr(&out));
    }
}

#[test]
fn spectrum_fits_and_atoms() {
    let out = fracprop(&["spectrum", "--model", "torus:2"]);
    assert!(out.status.success());
    let err = stderr(&out);
    let fit_csv = err.split("# spectrum_fit\n").nth(1).unwrap();
    let fit = rows(fit_csv);
    let lambda: f64 = fit[0][0].parse().unwrap();
    assert!((lambda - 1.0).abs() < 0.05, "{lambda}");

    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().join("cartan");
    let out = fracprop(&["spectrum", "--model", "cartan", "--out", out_dir.to_str().unwrap()]);
    assert!(out.status.success());
    let fit = rows(&std::fs::read_to_string(out_dir.join("spectrum_fit.csv")).unwrap());
    assert_eq!(fit[0][0].parse::<f64>().unwrap(), 4.5);
    assert_eq!(fit[0][5], "4.5");
    assert!(!out_dir.join("spectrum_atoms.csv").exists());

    let out_dir = dir.path().join("z4");
    let out = fracprop(&["spectrum", "--model", "cyclic:4", "--out", out_dir.to_str().unwrap()]);
    assert!(out.status.success());
    let atoms = rows(&std::fs::read_to_string(out_dir.join("spectrum_atoms.csv")).unwrap());
    let atoms: Vec<(f64, f64)> = atoms
        .iter()
        .map(|r| (r[0].parse().unwrap(), r[1].parse().unwrap()))
        .collect();
    assert_eq!(atoms.len(), 3);
    for ((e, w), (want_e, want_w)) in atoms.iter().zip([(0.0, 1.0), (2.0, 2.0), (4.0, 1.0)]) {
        assert!((e - want_e).abs() < 1e-12 && *w == want_w, "{atoms:?}");
    }
}

const DECAY: &str = r#"
seed = 5

[model]
kind = "euclidean"
dim = 1

[grid]
length = 50.0
points = 1024

[equation]
beta = 0.8
p = 2.0
q = 4.0

[data]
w0 = { kind = "power", p = 2.0, sigma = 0.2 }

[t_grid]
start = 0.1
stop = 100.0
points = 13
window = [0.1, 10.0]
"#;

#[test]
fn decay_is_deterministic_and_documented() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "decay.toml", DECAY);
    let mut outputs = Vec::new();
    for run in ["a", "b"] {
        let out_dir = dir.path().join(run);
        let out = fracprop(&["decay", "--config", &cfg, "--out", out_dir.to_str().unwrap()]);
        assert!(out.status.success(), "{}", stderr(&out));
        let rows_csv = std::fs::read(out_dir.join("decay.csv")).unwrap();
        let fit_csv = std::fs::read(out_dir.join("decay_fit.csv")).unwrap();
        outputs.push((rows_csv, fit_csv));
    }
    assert_eq!(outputs[0], outputs[1]);

    let text = String::from_utf8(outputs[0].0.clone()).unwrap();
    assert!(text.starts_with("t,norm_q,normalizer,local_slope\n"));
    assert_eq!(rows(&text).len(), 13);
    let fit_text = String::from_utf8(outputs[0].1.clone()).unwrap();
    assert!(fit_text.starts_with("slope,target,rel_dev,r_squared,"));
    let fit = rows(&fit_text);
    let (slope, target): (f64, f64) = (fit[0][0].parse().unwrap(), fit[0][1].parse().unwrap());
    // λ = 1/2 from the Euclidean model: −0.8·0.5·(1/2 − 1/4)
    assert!((target + 0.1).abs() < 1e-15);
    assert!(slope < 0.0);
    assert_eq!(fit[0][6], "false");
}

#[test]
fn flags_override_the_config() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "decay.toml", DECAY);
    let out = fracprop(&["decay", "--config", &cfg, "--beta", "0.5", "--q", "2"]);
    assert!(out.status.success(), "{}", stderr(&out));
    let err = stderr(&out);
    let fit = rows(err.split("# decay_fit\n").nth(1).unwrap());
    // p = 2 from the file, q = 2 from the flag: no decay predicted
    assert_eq!(fit[0][1].parse::<f64>().unwrap(), 0.0);
}

#[test]
fn wave_decay_uses_velocity_data() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "wave.toml",
        "[t_grid]\nstart = 0.01\nstop = 100.0\npoints = 41\nwindow = [0.01, 100.0]\n",
    );
    let out = fracprop(&[
        "decay", "--config", &cfg, "--model", "torus:1", "--beta", "1.5", "--p", "2", "--q", "2",
    ]);
    assert!(out.status.success(), "{}", stderr(&out));
    let r = rows(&stdout(&out));
    let t: f64 = r[0][0].parse().unwrap();
    let normalizer: f64 = r[0][2].parse().unwrap();
    let later: f64 = r[10][2].parse().unwrap();
    let t_later: f64 = r[10][0].parse().unwrap();
    // normalizer = ‖w0‖ + t‖w1‖ with w0 = 0
    assert!((normalizer / t - later / t_later).abs() < 1e-12 * later / t_later);
}

#[test]
fn verify_passes_and_surfaces_bad_majorants() {
    let out = fracprop(&["verify", "--seed", "3"]);
    assert_eq!(out.status.code(), Some(0), "{}", stdout(&out));
    let report = rows(&stdout(&out));
    assert!(report.len() >= 9);
    assert!(report.iter().all(|r| r[1] == "true"));
    assert!(report.iter().any(|r| r[0] == "semigroup_beta_1"));

    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "verify.toml",
        "[verify]\ncases = 10\n[[verify.bound]]\nphi = \"exp(1)\"\npsi = \"affine(1, 0.5)\"\nr = 2\n",
    );
    let out = fracprop(&["verify", "--config", &cfg]);
    assert_eq!(out.status.code(), Some(1));
    let report = rows(&stdout(&out));
    let bad = report.iter().find(|r| r[0] == "additional_bound[0]").unwrap();
    assert_eq!(bad[1], "false");
    assert!(bad[4].contains("hypothes"), "{bad:?}");

    let cfg = write(dir.path(), "garbled.toml", "[[verify.bound]]\nphi = \"sin(1)\"\npsi = \"exp(1)\"\nr = 2\n");
    assert_eq!(fracprop(&["verify", "--config", &cfg]).status.code(), Some(2));
}
