use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use music_scatter::io::config::{ImagingOptions, SceneFile};
use music_scatter::{Polarization, TestFamily};
use music_scatter::io::fresnel::{ingest_fresnel, FresnelColumns};
use music_scatter::io::msr_file::read_msr;
use tempfile::TempDir;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_music-scatter"))
}

fn configs() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("spawn binary")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn stdout_lines(o: &Output) -> Vec<String> {
    String::from_utf8_lossy(&o.stdout).lines().map(str::to_owned).collect()
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

fn write_run_config(dir: &Path, body: &str) -> PathBuf {
    let scene = configs().join("paper_scene_tm.toml");
    let cfg = dir.join("run.toml");
    fs::write(&cfg, format!("scene = {:?}\n{body}", scene.to_str().unwrap())).unwrap();
    cfg
}

#[test]
fn simulate_paper_example_writes_eight_matrices() {
    let tmp = TempDir::new().unwrap();
    let out = tmp.path().join("out");
    let cfg = write_run_config(
        tmp.path(),
        "frequencies = [1e9, 2e9]\n[array]\nn = [12, 36]\nkinds = [\"full\", \"diagonal-free\"]\n[noise]\nsnr_db = 20.0\nseed = 9\n",
    );
    let o = run(&["simulate", "--config", p(&cfg), "--output-dir", p(&out)]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let files = stdout_lines(&o);
    assert_eq!(files.len(), 8);
    for f in ["1GHz", "2GHz"] {
        for n in [12, 36] {
            for kind in ["full", "diagonal-free"] {
                let path = out.join(format!("msr_{f}_n{n}_{kind}.txt"));
                let (m, _) = read_msr(&path).unwrap();
                assert_eq!(m.shape(), (n, n));
                let text = fs::read_to_string(&path).unwrap();
                assert!(text.contains("# seed: 9\n"), "header of {}", path.display());
                assert!(text.contains("# generator: born\n"));
            }
        }
    }

    // Re-running with the same seed reproduces every byte.
    let again = tmp.path().join("again");
    assert_eq!(code(&run(&["simulate", "--config", p(&cfg), "--output-dir", p(&again)])), 0);
    for f in fs::read_dir(&out).unwrap() {
        let f = f.unwrap().path();
        let name = f.file_name().unwrap();
        assert_eq!(fs::read(&f).unwrap(), fs::read(again.join(name)).unwrap());
    }
    // A different seed changes the noisy data.
    let other = tmp.path().join("other");
    assert_eq!(code(&run(&["simulate", "--config", p(&cfg), "--seed", "10", "--output-dir", p(&other)])), 0);
    let name = "msr_2GHz_n36_diagonal-free.txt";
    assert_ne!(fs::read(out.join(name)).unwrap(), fs::read(other.join(name)).unwrap());
}

#[test]
fn exit_codes() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_run_config(tmp.path(), "frequencies = [2e9]\n[array]\nn = [2]\n");
    assert_eq!(code(&run(&["simulate", "--config", p(&cfg), "--output-dir", p(tmp.path())])), 1);

    let cfg = write_run_config(tmp.path(), "frequencies = [-1.0]\n");
    assert_eq!(code(&run(&["simulate", "--config", p(&cfg)])), 1);

    let cfg = write_run_config(tmp.path(), "frequencies = [2e9]\nunknown_key = 1\n");
    assert_eq!(code(&run(&["simulate", "--config", p(&cfg)])), 1);

    let missing = tmp.path().join("nope.toml");
    assert_eq!(code(&run(&["simulate", "--config", p(&missing)])), 2);
    assert_eq!(code(&run(&["image", "--matrix", p(&missing)])), 2);
    assert_eq!(code(&run(&["no-such-command"])), 1);

    let garbage = tmp.path().join("garbage.txt");
    fs::write(&garbage, "not a matrix\n").unwrap();
    assert_eq!(code(&run(&["image", "--matrix", p(&garbage)])), 1);

    let o = run(&["validate-identities", "--n", "64", "--points", "50"]);
    assert_eq!(code(&o), 0);
    let o = run(&["validate-identities", "--n", "4", "--points", "50"]);
    assert_eq!(code(&o), 3, "{}", String::from_utf8_lossy(&o.stdout));
}

#[test]
fn image_and_compare_single_inclusion() {
    let tmp = TempDir::new().unwrap();
    let scene = tmp.path().join("single.toml");
    fs::write(
        &scene,
        "contrast_mode = \"permittivity\"\n[background]\nepsilon_b = 8.854e-12\nmu_b = 1.257e-6\nfrequency = 2e9\n\
         [[inhomogeneities]]\ncenter = [0.02, -0.05]\nradius = 0.01\nepsilon_a = 4.427e-11\nmu_a = 1.257e-6\n",
    )
    .unwrap();
    let cfg = tmp.path().join("run.toml");
    fs::write(&cfg, "scene = \"single.toml\"\nfrequencies = [2e9]\noutput_dir = \"out\"\n[array]\nn = [72]\nkinds = [\"diagonal-free\"]\n").unwrap();
    let o = run(&["simulate", "--config", p(&cfg)]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let out = tmp.path().join("out");
    let matrix = out.join("msr_2GHz_n72_diagonal-free.txt");
    assert!(matrix.exists());

    let o = run(&["image", "--matrix", p(&matrix), "--rank", "1", "--grid-n", "64", "--output-dir", p(&out)]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let map = out.join("msr_2GHz_n72_diagonal-free_map.csv");
    let pgm = fs::read(out.join("msr_2GHz_n72_diagonal-free_map.pgm")).unwrap();
    assert!(pgm.starts_with(b"P5"));
    let spectrum = fs::read_to_string(out.join("msr_2GHz_n72_diagonal-free_spectrum.csv")).unwrap();
    let rows: Vec<&str> = spectrum.lines().filter(|l| !l.starts_with('#')).skip(1).collect();
    assert_eq!(rows.len(), 72);
    for r in &rows {
        let v: f64 = r.split(',').nth(2).unwrap().parse().unwrap();
        assert!((0.0..=1.0).contains(&v));
    }

    let o = run(&["compare", "--map", p(&map), "--center", "0.02,-0.05"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stdout));
    assert!(stdout_lines(&o).contains(&"pass: true".to_string()));

    let o = run(&["compare", "--map", p(&map), "--center=-0.04,0.06"]);
    assert_ne!(code(&o), 0);
    let corr: f64 = stdout_lines(&o)
        .iter()
        .find_map(|l| l.strip_prefix("correlation: ").map(|v| v.parse().unwrap()))
        .unwrap();
    assert!(corr < 0.5);

    let report_dir = tmp.path().join("report");
    let o = run(&["compare", "--map", p(&map), "--against", p(&map), "--output-dir", p(&report_dir)]);
    assert_eq!(code(&o), 0);
    let lines = stdout_lines(&o);
    assert!(lines.contains(&"linf: 0".to_string()) && lines.contains(&"l2_rel: 0".to_string()));
    assert!(report_dir.join("compare_report.txt").exists());

    // Image outputs are deterministic.
    let again = tmp.path().join("again");
    assert_eq!(code(&run(&["image", "--matrix", p(&matrix), "--rank", "1", "--grid-n", "64", "--output-dir", p(&again)])), 0);
    assert_eq!(fs::read(&map).unwrap(), fs::read(again.join("msr_2GHz_n72_diagonal-free_map.csv")).unwrap());
}

#[test]
fn bistatic_export_and_ingest() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_run_config(tmp.path(), "frequencies = [1e9, 4e9]\n[array]\nkinds = [\"bistatic\"]\n");
    let out = tmp.path().join("sim");
    let o = run(&["simulate", "--config", p(&cfg), "--output-dir", p(&out)]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let exp = out.join("fresnel_synthetic.exp");
    assert!(exp.exists());

    let mats = ingest_fresnel(&exp, &FresnelColumns::default()).unwrap();
    assert_eq!(mats.len(), 2);
    for m in &mats {
        assert_eq!(m.shape(), (72, 36));
        assert_eq!(m.mask.count_measured(), 36 * 49);
        assert_eq!(m.mask.count_missing(), 36 * 23);
        for (t, d) in m.incident.iter().enumerate() {
            let deg = (-d.y).atan2(-d.x).to_degrees().rem_euclid(360.0);
            assert!((deg - 10.0 * t as f64).abs() < 1e-9);
        }
    }

    let ing = tmp.path().join("ingested");
    let o = run(&["ingest", "--input", p(&exp), "--output-dir", p(&ing)]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    for f in ["1GHz", "4GHz"] {
        let (a, _) = read_msr(&ing.join(format!("fresnel_synthetic_{f}.txt"))).unwrap();
        let (b, _) = read_msr(&out.join(format!("msr_{f}_bistatic.txt"))).unwrap();
        assert_eq!(a.entries, b.entries);
        assert_eq!(a.mask, b.mask);
    }

    let o = run(&["image", "--matrix", p(&out.join("msr_4GHz_bistatic.txt")), "--grid-n", "32", "--output-dir", p(&ing)]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let csv = fs::read_to_string(ing.join("msr_4GHz_bistatic_map.csv")).unwrap();
    assert!(csv.contains("side") && csv.contains("both"));

    let bad = tmp.path().join("bad.exp");
    fs::write(&bad, "1e9 0 60 1.0 x 0 0\n").unwrap();
    assert_eq!(code(&run(&["ingest", "--input", p(&bad), "--output-dir", p(&ing)])), 1);
}

#[test]
fn shipped_configs_load_and_scene_round_trips() {
    for name in ["paper_tm.toml", "paper_te.toml", "fresnel_synthetic.toml"] {
        music_scatter::io::config::RunConfig::load(&configs().join(name)).unwrap();
    }
    let te = music_scatter::io::config::RunConfig::load(&configs().join("paper_te.toml")).unwrap();
    assert_eq!(te.config.imaging.family(Polarization::Te), TestFamily::TeSweep);
    let default = ImagingOptions::default();
    assert_eq!(default.family(Polarization::Te), TestFamily::te_angle(0.0));
    assert_eq!(default.family(Polarization::Tm), TestFamily::Tm);
    for name in ["paper_scene_tm.toml", "paper_scene_te.toml"] {
        let s = SceneFile::load(&configs().join(name)).unwrap();
        let back = SceneFile::from_toml(&s.to_toml().unwrap()).unwrap();
        assert_eq!(s, back);
    }
}
