use std::f64::consts::PI;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;

use qdarwin::experiments::{
    run_sweep, Engine, ExperimentConfig, FragmentPolicy, Normalization, SweepResult,
};
use qdarwin::model::{build_model, ModelKind, ModelOverrides};
use qdarwin_cli::{fmt_g12, heatmap_svg, parse_and_dispatch, sweep_csv, Quantity};
use tempfile::TempDir;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_qdarwin"))
}

fn configs() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn run(args: &[&str]) -> i32 {
    parse_and_dispatch(std::iter::once("qdarwin").chain(args.iter().copied()))
}

fn sweep_config(kind: ModelKind, times: Vec<f64>) -> ExperimentConfig {
    ExperimentConfig {
        model: kind,
        overrides: ModelOverrides::default(),
        n_env: 4,
        time_grid: times,
        fragment_sizes: vec![0, 1, 2, 3, 4],
        realizations: 5,
        master_seed: 2,
        fragment_policy: FragmentPolicy::Prefix,
        normalize: Normalization::BySmax,
        engine: Engine::Auto,
    }
}

fn write_config(dir: &TempDir, name: &str, config: &ExperimentConfig) -> PathBuf {
    let path = dir.path().join(name);
    fs::write(&path, config.to_json().unwrap()).unwrap();
    path
}

#[test]
fn classify_prints_table_row() {
    let out = bin()
        .args(["classify", "--config"])
        .arg(configs().join("cpdi.json"))
        .output()
        .unwrap();
    assert!(out.status.success());
    assert_eq!(
        String::from_utf8(out.stdout).unwrap(),
        "{\"pointer_basis\":true,\"continuous_support\":true,\"no_scrambling\":true,\"darwinism_supported\":true}\n"
    );

    let out = bin()
        .args(["classify", "--seed", "9", "--config"])
        .arg(configs().join("codi.json"))
        .output()
        .unwrap();
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["pointer_basis"], false);
    assert_eq!(v["darwinism_supported"], false);
}

#[test]
fn classify_all_reference_models() {
    let dir = TempDir::new().unwrap();
    let expected = [
        (ModelKind::Cpdi, [true, true, true, true]),
        (ModelKind::Dpdi, [true, false, true, false]),
        (ModelKind::Codi, [false, true, true, false]),
        (ModelKind::CpdiS, [true, true, false, false]),
    ];
    for (kind, want) in expected {
        let path = dir.path().join(format!("{kind}.json"));
        let spec = build_model(kind, 5, &ModelOverrides::default()).unwrap();
        fs::write(&path, spec.to_json().unwrap()).unwrap();
        let out = bin()
            .args(["classify", "--config"])
            .arg(&path)
            .output()
            .unwrap();
        let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
        let got = [
            v["pointer_basis"].as_bool().unwrap(),
            v["continuous_support"].as_bool().unwrap(),
            v["no_scrambling"].as_bool().unwrap(),
            v["darwinism_supported"].as_bool().unwrap(),
        ];
        assert_eq!(got, want, "{kind}");
    }
}

#[test]
fn fig2_writes_51_rows() {
    let dir = TempDir::new().unwrap();
    let path = dir.path().join("fig2.csv");
    assert_eq!(run(&["fig2", "--out", path.to_str().unwrap()]), 0);
    let text = fs::read_to_string(&path).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "n,I_inf,chi_inf");
    assert_eq!(lines.len(), 52);
    assert!(lines[51].starts_with("50,"));
}

#[test]
fn gamma_at_time_zero_is_one() {
    let out = bin()
        .args([
            "gamma",
            "--dist",
            "uniform:1",
            "--alpha2",
            "0.5",
            "--tmax",
            "0",
            "--steps",
            "1",
        ])
        .output()
        .unwrap();
    assert!(out.status.success());
    assert_eq!(
        String::from_utf8(out.stdout).unwrap(),
        "t,avg_gamma_sq\n0,1\n"
    );

    let dir = TempDir::new().unwrap();
    let path = dir.path().join("g.csv");
    let code = run(&[
        "gamma",
        "--dist",
        "discrete:-1,-0.5,0.5,1",
        "--alpha2",
        "0.3",
        "--tmax",
        "6.283185307179586",
        "--steps",
        "3",
        "--out",
        path.to_str().unwrap(),
    ]);
    assert_eq!(code, 0);
    let rows: Vec<f64> = fs::read_to_string(&path)
        .unwrap()
        .lines()
        .skip(1)
        .map(|l| l.split(',').nth(1).unwrap().parse().unwrap())
        .collect();
    // t = 0, π, 2π are all recurrences of the discrete law
    assert!(rows.iter().all(|v| (v - 1.0).abs() < 1e-9), "{rows:?}");
}

#[test]
fn usage_errors_exit_2() {
    assert_eq!(run(&["frobnicate"]), 2);
    assert_eq!(run(&["fig2", "--out", "x.csv", "--bogus"]), 2);
    assert_eq!(run(&["fig2"]), 2);
    assert_eq!(
        run(&[
            "gamma",
            "--dist",
            "gaussian:1",
            "--alpha2",
            "0.5",
            "--tmax",
            "1",
            "--steps",
            "2"
        ]),
        2
    );
    assert_eq!(
        run(&[
            "gamma",
            "--dist",
            "uniform:1",
            "--alpha2",
            "1.5",
            "--tmax",
            "1",
            "--steps",
            "2"
        ]),
        2
    );
    assert_eq!(
        run(&[
            "gamma",
            "--dist",
            "uniform:1",
            "--alpha2",
            "0.5",
            "--tmax",
            "1",
            "--steps",
            "0"
        ]),
        2
    );
    assert_eq!(run(&["fig3", "--model", "XYZ", "--out", "x.csv"]), 2);

    let dir = TempDir::new().unwrap();
    let bad = dir.path().join("bad.json");
    fs::write(&bad, "{\"model\": \"CPDI\", \"n_env\": ").unwrap();
    let out = dir.path().join("o.csv");
    assert_eq!(
        run(&[
            "sweep",
            "--config",
            bad.to_str().unwrap(),
            "--out",
            out.to_str().unwrap()
        ]),
        2
    );
    assert_eq!(run(&["classify", "--config", bad.to_str().unwrap()]), 2);

    // an empty time grid is rejected before anything is written
    let empty = write_config(&dir, "empty.json", &sweep_config(ModelKind::Cpdi, vec![]));
    assert_eq!(
        run(&[
            "sweep",
            "--config",
            empty.to_str().unwrap(),
            "--out",
            out.to_str().unwrap()
        ]),
        2
    );
    assert!(!out.exists());
}

#[test]
fn runtime_errors_exit_1() {
    let dir = TempDir::new().unwrap();
    let missing = dir.path().join("missing.json");
    assert_eq!(run(&["classify", "--config", missing.to_str().unwrap()]), 1);
    let cfg = write_config(&dir, "c.json", &sweep_config(ModelKind::Cpdi, vec![1.0]));
    let unwritable = dir.path().join("no/such/dir/out.csv");
    assert_eq!(
        run(&[
            "sweep",
            "--config",
            cfg.to_str().unwrap(),
            "--out",
            unwritable.to_str().unwrap()
        ]),
        1
    );
}

#[test]
fn help_exits_zero() {
    assert_eq!(run(&["--help"]), 0);
}

#[test]
fn sweep_csv_layout_and_round_trip() {
    let dir = TempDir::new().unwrap();
    let config = sweep_config(ModelKind::Dpdi, vec![2.0, 0.0, PI]);
    let path = write_config(&dir, "dpdi.json", &config);
    let out = dir.path().join("dpdi.csv");
    let json = dir.path().join("dpdi.sidecar.json");
    let code = run(&[
        "sweep",
        "--config",
        path.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
        "--json",
        json.to_str().unwrap(),
    ]);
    assert_eq!(code, 0);

    let text = fs::read_to_string(&out).unwrap();
    let mut lines = text.lines();
    assert_eq!(
        lines.next().unwrap(),
        "model,realizations,time,fragment_size,I_mean,I_stderr,chi_mean,chi_stderr,discord_mean,S_mean,ratio_mean"
    );
    let rows: Vec<Vec<String>> = lines
        .map(|l| l.split(',').map(String::from).collect())
        .collect();
    assert_eq!(rows.len(), 15);
    // ordered by (time, fragment size)
    let keys: Vec<(f64, usize)> = rows
        .iter()
        .map(|r| (r[2].parse().unwrap(), r[3].parse().unwrap()))
        .collect();
    assert!(keys.windows(2).all(|w| w[0] < w[1]));

    let result = run_sweep(&config).unwrap();
    for r in &rows {
        let (t, n): (f64, usize) = (r[2].parse().unwrap(), r[3].parse().unwrap());
        let t = if (t - PI).abs() < 1e-9 { PI } else { t };
        let p = result.point(t, n).unwrap();
        assert_eq!(r[0], "DPDI");
        assert_eq!(r[1], "5");
        assert_eq!(r[4], fmt_g12(p.mutual_info.mean));
        let back: f64 = r[4].parse().unwrap();
        assert!((back - p.mutual_info.mean).abs() <= 5e-12 * p.mutual_info.mean.abs().max(1e-300));
        assert_eq!(r[6], fmt_g12(p.holevo.unwrap().mean));
        if t == PI {
            assert!(back.abs() < 1e-9);
        }
    }

    let sidecar: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(&json).unwrap()).unwrap();
    assert_eq!(sidecar["master_seed"], 2);
    assert_eq!(sidecar["code_version"], env!("CARGO_PKG_VERSION"));
}

#[test]
fn seed_flag_overrides_config() {
    let dir = TempDir::new().unwrap();
    let path = write_config(&dir, "c.json", &sweep_config(ModelKind::Cpdi, vec![1.0]));
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    run(&[
        "sweep",
        "--config",
        path.to_str().unwrap(),
        "--out",
        a.to_str().unwrap(),
    ]);
    run(&[
        "sweep",
        "--config",
        path.to_str().unwrap(),
        "--out",
        b.to_str().unwrap(),
        "--seed",
        "99",
    ]);
    assert_ne!(fs::read(&a).unwrap(), fs::read(&b).unwrap());

    let mut cfg = sweep_config(ModelKind::Cpdi, vec![1.0]);
    cfg.master_seed = 99;
    assert_eq!(
        fs::read_to_string(&b).unwrap(),
        sweep_csv(&run_sweep(&cfg).unwrap())
    );
}

#[test]
fn codi_leaves_holevo_columns_empty() {
    let result = run_sweep(&sweep_config(ModelKind::Codi, vec![0.5])).unwrap();
    for line in sweep_csv(&result).lines().skip(1) {
        let cols: Vec<&str> = line.split(',').collect();
        assert_eq!(cols.len(), 11);
        assert_eq!((cols[6], cols[7], cols[8]), ("", "", ""));
        assert!(!cols[4].is_empty());
    }
    assert!(heatmap_svg(&result, Quantity::Chi).is_none());

    let dir = TempDir::new().unwrap();
    let path = write_config(&dir, "codi.json", &sweep_config(ModelKind::Codi, vec![0.5]));
    let out = dir.path().join("o.csv");
    let svg = dir.path().join("o.svg");
    let code = run(&[
        "sweep",
        "--config",
        path.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
        "--svg",
        svg.to_str().unwrap(),
        "--quantity",
        "chi",
    ]);
    assert_eq!(code, 2);
    assert!(!out.exists() && !svg.exists());
}

fn one_cell() -> SweepResult {
    let mut c = sweep_config(ModelKind::Cpdi, vec![1.0]);
    c.fragment_sizes = vec![2];
    run_sweep(&c).unwrap()
}

#[test]
fn heatmap_single_cell() {
    let svg = heatmap_svg(&one_cell(), Quantity::Ratio).unwrap();
    assert!(svg.starts_with("<svg xmlns=\"http://www.w3.org/2000/svg\""));
    assert!(svg.trim_end().ends_with("</svg>"));
    // one data cell plus the color bar
    assert_eq!(svg.matches("<rect").count(), 2);
    assert!(svg.contains(">time</text>") && svg.contains(">fragment size</text>"));
    assert!(svg.contains("min ") && svg.contains("max "));
}

#[test]
fn heatmap_is_deterministic() {
    let result = run_sweep(&sweep_config(ModelKind::Cpdi, vec![0.0, 0.5, 1.0, 2.0])).unwrap();
    for q in [Quantity::Ratio, Quantity::I, Quantity::Chi] {
        let a = heatmap_svg(&result, q).unwrap();
        let b = heatmap_svg(&result.clone(), q).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.matches("<rect").count(), 4 * 5 + 1);
    }

    let dir = TempDir::new().unwrap();
    let path = write_config(
        &dir,
        "c.json",
        &sweep_config(ModelKind::Cpdi, vec![0.0, 1.0]),
    );
    let mut svgs = Vec::new();
    for k in 0..2 {
        let out = dir.path().join(format!("{k}.csv"));
        let svg = dir.path().join(format!("{k}.svg"));
        run(&[
            "sweep",
            "--config",
            path.to_str().unwrap(),
            "--out",
            out.to_str().unwrap(),
            "--svg",
            svg.to_str().unwrap(),
        ]);
        svgs.push(fs::read(&svg).unwrap());
    }
    assert_eq!(svgs[0], svgs[1]);
}

#[test]
fn thread_env_var() {
    let dir = TempDir::new().unwrap();
    let path = write_config(
        &dir,
        "c.json",
        &sweep_config(ModelKind::CpdiS, vec![0.5, 1.0]),
    );
    let mut outputs = Vec::new();
    for threads in ["0", "1", "3"] {
        let out = dir.path().join(format!("{threads}.csv"));
        let status = bin()
            .env("QDARWIN_THREADS", threads)
            .args(["sweep", "--config"])
            .arg(&path)
            .arg("--out")
            .arg(&out)
            .status()
            .unwrap();
        assert!(status.success());
        outputs.push(fs::read(&out).unwrap());
    }
    assert!(outputs.windows(2).all(|w| w[0] == w[1]));

    let status = bin()
        .env("QDARWIN_THREADS", "many")
        .args(["sweep", "--config"])
        .arg(&path)
        .arg("--out")
        .arg(dir.path().join("x.csv"))
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(2));
}

#[test]
fn fig3_small_run() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("fig3.csv");
    let json = dir.path().join("fig3.json");
    let code = run(&[
        "fig3",
        "--model",
        "cpdi-s",
        "--realizations",
        "2",
        "--scrambling-strength",
        "0.05",
        "--out",
        out.to_str().unwrap(),
        "--json",
        json.to_str().unwrap(),
    ]);
    assert_eq!(code, 0);
    // 231 times x 9 fragment sizes
    assert_eq!(
        fs::read_to_string(&out).unwrap().lines().count(),
        1 + 231 * 9
    );
    let sidecar: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(&json).unwrap()).unwrap();
    assert_eq!(sidecar["engine"], "diagonal");
    assert_eq!(sidecar["config"]["overrides"]["scrambling_strength"], 0.05);
}

#[test]
fn shipped_sweep_configs_parse() {
    for name in ["sweep_cpdi.json", "sweep_cpdi_s_random.json"] {
        let text = fs::read_to_string(configs().join(name)).unwrap();
        ExperimentConfig::from_json(&text).unwrap();
    }
}
