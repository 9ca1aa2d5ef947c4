mod common;

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use common::*;
use mrdensity::analytics::{
    cohort_summary, read_cohort_csv, write_cohort_csv, CohortRecord, DatasetTag, DensityCategory,
    StdConvention,
};
use mrdensity::io::{load_dicom_series, load_mask, load_portable_volume, save_mask, save_portable_volume};
use mrdensity::quantify::{dice, hausdorff};
use mrdensity::{BinaryMask3D, Volume3D};

fn mrdensity(args: &[&str]) -> Output {
    mrdensity_env(args, &[])
}

fn mrdensity_env(args: &[&str], env: &[(&str, &str)]) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_mrdensity"));
    cmd.args(args).env_remove("MRDENSITY_THREADS");
    for (k, v) in env {
        cmd.env(k, v);
    }
    cmd.output().expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn assert_ok(out: &Output) {
    assert_eq!(code(out), 0, "stdout: {}\nstderr: {}", stdout(out), stderr(out));
}

#[test]
fn phantom_writes_three_files_and_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    let out = mrdensity(&["phantom", "--out-dir", s(&a)]);
    assert_ok(&out);
    assert!(stdout(&out).contains("dense fraction  analytic"));
    assert_ok(&mrdensity(&["phantom", "--out-dir", s(&b)]));
    for f in ["volume", "breast_truth", "dense_truth"] {
        for ext in ["json", "raw"] {
            let name = format!("{f}.{ext}");
            assert_eq!(fs::read(a.join(&name)).unwrap(), fs::read(b.join(&name)).unwrap(), "{name}");
        }
    }
    let breast = load_mask(&a.join("breast_truth.json")).unwrap();
    let dense = load_mask(&a.join("dense_truth.json")).unwrap();
    assert!(dense.and_not(&breast).unwrap().is_empty());
}

#[test]
fn phantom_rejects_dense_outside_breast() {
    let dir = tempfile::tempdir().unwrap();
    let spec = dir.path().join("spec.toml");
    fs::write(
        &spec,
        r#"
dims = [64, 64, 48]
intensity_fat = 100.0
intensity_dense = 50.0
intensity_background = 0.0
noise_sigma = 5.0
seed = 1
[breast_shape]
center = [31.5, 8.0, 23.5]
semi_axes = [26.0, 48.0, 20.0]
[dense_shape]
center = [31.5, 6.0, 23.5]
semi_axes = [12.0, 14.0, 9.0]
"#,
    )
    .unwrap();
    let out = mrdensity(&["phantom", "--spec", s(&spec), "--out-dir", s(&dir.path().join("p"))]);
    assert_eq!(code(&out), 2, "{}", stderr(&out));
    assert!(stderr(&out).contains("outside"));
}

#[test]
fn ingest_dicom_matches_library_and_portable_is_idempotent() {
    let dir = tempfile::tempdir().unwrap();
    let series = dir.path().join("series");
    fs::create_dir(&series).unwrap();
    write_axial_series(&series, [5, 4, 3], 40.0, -2.0, EXPLICIT_VR_LE, |x, y, k| {
        (7 * x + 3 * y + 50 * k) as u16
    });
    let out_path = dir.path().join("vol.json");
    let out = mrdensity(&["ingest", s(&series), "--out", s(&out_path)]);
    assert_ok(&out);
    assert!(stdout(&out).contains("dims 5x4x3"));
    let (expected, _) = load_dicom_series(&series).unwrap();
    assert_eq!(load_portable_volume(&out_path).unwrap(), expected);

    let again = dir.path().join("again.json");
    assert_ok(&mrdensity(&["ingest", s(&out_path), "--out", s(&again)]));
    assert_eq!(fs::read(dir.path().join("vol.raw")).unwrap(), fs::read(dir.path().join("again.raw")).unwrap());
}

#[test]
fn ingest_missing_path_names_it() {
    let out = mrdensity(&["ingest", "/no/such/series_dir", "--out", "/tmp/x.json"]);
    assert_eq!(code(&out), 2);
    assert!(stderr(&out).contains("/no/such/series_dir"));
}

fn write_phantom(dir: &Path, extra: &[&str]) {
    let mut args = vec!["phantom", "--out-dir", s(dir)];
    args.extend_from_slice(extra);
    assert_ok(&mrdensity(&args));
}

#[test]
fn segment_with_oracle_backends_reproduces_truth_files() {
    let dir = tempfile::tempdir().unwrap();
    let ph = dir.path().join("ph");
    write_phantom(&ph, &[]);
    let seg = dir.path().join("seg");
    let breast = format!("oracle:{}", s(&ph.join("breast_truth.json")));
    let dense = format!("oracle:{}", s(&ph.join("dense_truth.json")));
    let out = mrdensity(&[
        "segment",
        s(&ph.join("volume.json")),
        "--out-dir",
        s(&seg),
        "--patch-size",
        "40",
        "--breast-backend",
        &breast,
        "--dense-backend",
        &dense,
    ]);
    assert_ok(&out);
    assert_eq!(fs::read(seg.join("breast_mask.raw")).unwrap(), fs::read(ph.join("breast_truth.raw")).unwrap());
    assert_eq!(fs::read(seg.join("dense_mask.raw")).unwrap(), fs::read(ph.join("dense_truth.raw")).unwrap());
    let record: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(seg.join("run_record.json")).unwrap()).unwrap();
    assert_eq!(record["breast_backend"]["kind"], "oracle");
    assert_eq!(record["params"]["threshold"], 0.5);
    assert_eq!(record["patch_count"], 8 * 8 * 3);
}

#[test]
fn segment_fcm_on_zero_noise_phantom_is_exact() {
    let dir = tempfile::tempdir().unwrap();
    let ph = dir.path().join("ph");
    let spec = dir.path().join("spec.toml");
    let mut text = toml::to_string(&mrdensity::phantom::PhantomSpec {
        noise_sigma: 0.0,
        ..Default::default()
    })
    .unwrap();
    text.push('\n');
    fs::write(&spec, text).unwrap();
    assert_ok(&mrdensity(&["phantom", "--spec", s(&spec), "--out-dir", s(&ph)]));
    let seg = dir.path().join("seg");
    let out = mrdensity(&[
        "segment",
        s(&ph.join("volume.json")),
        "--out-dir",
        s(&seg),
        "--patch-size",
        "32",
        "--steps",
        "3,3,2",
    ]);
    assert_ok(&out);
    for (pred, truth) in [("breast_mask", "breast_truth"), ("dense_mask", "dense_truth")] {
        let p = load_mask(&seg.join(format!("{pred}.json"))).unwrap();
        let t = load_mask(&ph.join(format!("{truth}.json"))).unwrap();
        assert_eq!(dice(&p, &t).unwrap(), 1.0, "{pred}");
    }
}

#[test]
fn segment_invalid_threshold_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let ph = dir.path().join("ph");
    write_phantom(&ph, &[]);
    let out = mrdensity(&[
        "segment",
        s(&ph.join("volume.json")),
        "--out-dir",
        s(&dir.path().join("seg")),
        "--threshold",
        "1.5",
    ]);
    assert_eq!(code(&out), 2);
    assert!(stderr(&out).contains("invalid config"), "{}", stderr(&out));
    assert!(stderr(&out).contains("threshold"));
}

#[test]
fn segment_reads_toml_config_with_relative_paths() {
    let dir = tempfile::tempdir().unwrap();
    let ph = dir.path().join("ph");
    write_phantom(&ph, &[]);
    let cfg = ph.join("run.toml");
    fs::write(
        &cfg,
        r#"
patch_size = 48
steps = [2, 2, 1]
out_dir = "seg"
[breast_backend]
kind = "oracle"
mask = "breast_truth.json"
[dense_backend]
kind = "oracle"
mask = "dense_truth.json"
"#,
    )
    .unwrap();
    assert_ok(&mrdensity(&["segment", s(&ph.join("volume.json")), "--config", s(&cfg)]));
    assert_eq!(fs::read(ph.join("seg/dense_mask.raw")).unwrap(), fs::read(ph.join("dense_truth.raw")).unwrap());
}

#[test]
fn backend_failures_exit_3() {
    let dir = tempfile::tempdir().unwrap();
    // Constant volume: normalization has nothing to scale.
    let flat = dir.path().join("flat.json");
    save_portable_volume(&Volume3D::filled([8, 8, 8], [1.0; 3], 5.0).unwrap(), &flat).unwrap();
    let out = mrdensity(&["segment", s(&flat), "--out-dir", s(&dir.path().join("a")), "--patch-size", "8"]);
    assert_eq!(code(&out), 3, "{}", stderr(&out));

    // Imported probabilities far outside [0, 1].
    let vol = dir.path().join("vol.json");
    let ramp = Volume3D::new([8, 8, 8], [1.0; 3], (0..512).map(|i| i as f64).collect()).unwrap();
    save_portable_volume(&ramp, &vol).unwrap();
    let probs = dir.path().join("probs.json");
    save_portable_volume(&Volume3D::filled([8, 8, 8], [1.0; 3], 3.0).unwrap(), &probs).unwrap();
    let import = format!("import:{}", s(&probs));
    let out = mrdensity(&[
        "segment", s(&vol), "--out-dir", s(&dir.path().join("b")), "--patch-size", "8",
        "--breast-backend", &import,
    ]);
    assert_eq!(code(&out), 3, "{}", stderr(&out));
}

fn write_13_of_125(dir: &Path) -> (std::path::PathBuf, std::path::PathBuf) {
    let breast = BinaryMask3D::from_fn([5, 5, 5], |_, _, _| true);
    let mut dense = BinaryMask3D::zeros([5, 5, 5]);
    for i in 0..13 {
        dense.set(i % 5, (i / 5) % 5, i / 25, true);
    }
    let b = dir.join("breast.json");
    let d = dir.join("dense.json");
    save_mask(&breast, [1.0; 3], &b).unwrap();
    save_mask(&dense, [1.0; 3], &d).unwrap();
    (b, d)
}

#[test]
fn quantify_writes_six_decimal_density_and_profile() {
    let dir = tempfile::tempdir().unwrap();
    let (b, d) = write_13_of_125(dir.path());
    let csv = dir.path().join("density.csv");
    let prof = dir.path().join("profile.csv");
    let out = mrdensity(&[
        "quantify", "--breast", s(&b), "--dense", s(&d), "--subject-id", "p1", "--out", s(&csv),
        "--profile", s(&prof),
    ]);
    assert_ok(&out);
    assert_eq!(
        fs::read_to_string(&csv).unwrap(),
        "subject_id,side,density,dense_voxels,breast_voxels\np1,whole,0.104000,13,125\n"
    );
    let profile = fs::read_to_string(&prof).unwrap();
    let lines: Vec<&str> = profile.lines().collect();
    assert_eq!(lines.len(), 1 + 5);
    assert_eq!(lines[0], "index,dense_voxels,breast_voxels,density");
    assert_eq!(lines[1], "0,13,25,0.520000");
    assert_eq!(lines[2], "1,0,25,0.000000");
}

#[test]
fn quantify_profile_marks_empty_slices_na() {
    let dir = tempfile::tempdir().unwrap();
    let breast = BinaryMask3D::from_fn([4, 4, 3], |_, _, z| z == 1);
    let dense = BinaryMask3D::from_fn([4, 4, 3], |x, _, z| z == 1 && x == 0);
    save_mask(&breast, [1.0; 3], &dir.path().join("b.json")).unwrap();
    save_mask(&dense, [1.0; 3], &dir.path().join("d.json")).unwrap();
    let prof = dir.path().join("p.csv");
    assert_ok(&mrdensity(&[
        "quantify", "--breast", s(&dir.path().join("b.json")), "--dense", s(&dir.path().join("d.json")),
        "--out", s(&dir.path().join("o.csv")), "--profile", s(&prof),
    ]));
    assert_eq!(
        fs::read_to_string(&prof).unwrap(),
        "index,dense_voxels,breast_voxels,density\n0,0,0,NA\n1,4,16,0.250000\n2,0,0,NA\n"
    );
}

#[test]
fn quantify_laterality() {
    let dir = tempfile::tempdir().unwrap();
    // All breast voxels on the patient's right (x < nx / 2).
    let breast = BinaryMask3D::from_fn([6, 2, 2], |x, _, _| x < 3);
    let dense = BinaryMask3D::from_fn([6, 2, 2], |x, _, _| x == 0);
    let b = dir.path().join("b.json");
    let d = dir.path().join("d.json");
    save_mask(&breast, [1.0; 3], &b).unwrap();
    save_mask(&dense, [1.0; 3], &d).unwrap();
    let csv = dir.path().join("o.csv");

    let out = mrdensity(&["quantify", "--breast", s(&b), "--dense", s(&d), "--laterality", "left", "--out", s(&csv)]);
    assert_eq!(code(&out), 2);
    assert!(stderr(&out).contains("empty breast"));

    assert_ok(&mrdensity(&[
        "quantify", "--breast", s(&b), "--dense", s(&d), "--tumor-side", "left", "--out", s(&csv),
    ]));
    assert!(fs::read_to_string(&csv).unwrap().contains("subject,right,0.333333,4,12"));

    assert_ok(&mrdensity(&[
        "quantify", "--breast", s(&b), "--dense", s(&d), "--laterality", "contralateral:left", "--out", s(&csv),
    ]));
    assert!(fs::read_to_string(&csv).unwrap().contains(",right,"));

    let other = dir.path().join("other.json");
    save_mask(&BinaryMask3D::zeros([5, 2, 2]), [1.0; 3], &other).unwrap();
    let out = mrdensity(&["quantify", "--breast", s(&b), "--dense", s(&other), "--out", s(&csv)]);
    assert_eq!(code(&out), 2);
}

fn synthetic_cohort(n: usize) -> Vec<CohortRecord> {
    let datasets = [DatasetTag::Ispy2, DatasetTag::DbcMri, DatasetTag::Internal];
    (0..n)
        .map(|i| {
            let c = DensityCategory::ALL[i % 4];
            CohortRecord {
                subject_id: format!("s{i:03}"),
                dataset: datasets[i % 3],
                age: 25.0 + (i * 7 % 60) as f64,
                density: 0.02 + 0.1 * (c.rank() - 1) as f64 + 0.0005 * i as f64,
                mammo_category: Some(c),
            }
        })
        .collect()
}

fn write_cohort(path: &Path, records: &[CohortRecord]) {
    write_cohort_csv(records, fs::File::create(path).unwrap()).unwrap();
}

#[test]
fn cohort_summary_matches_library() {
    let dir = tempfile::tempdir().unwrap();
    let records = synthetic_cohort(40);
    let csv = dir.path().join("cohort.csv");
    write_cohort(&csv, &records);
    let out_dir = dir.path().join("out");
    assert_ok(&mrdensity(&["cohort", s(&csv), "--out-dir", s(&out_dir)]));

    let expected = cohort_summary(&read_cohort_csv(&csv).unwrap(), StdConvention::Population).unwrap();
    let mut reader = csv::Reader::from_path(out_dir.join("summary.csv")).unwrap();
    let rows: Vec<csv::StringRecord> = reader.records().map(Result::unwrap).collect();
    assert_eq!(rows.len(), expected.len());
    for (row, g) in rows.iter().zip(&expected) {
        assert_eq!(&row[0], g.dataset.as_str());
        assert_eq!(row[1].parse::<usize>().unwrap(), g.n);
        assert_eq!(&row[2], format!("{:.6}", g.mean));
        assert_eq!(&row[3], format!("{:.6}", g.std));
    }

    let hist = fs::read_to_string(out_dir.join("histogram.csv")).unwrap();
    let total: usize = hist.lines().skip(1).map(|l| l.rsplit(',').next().unwrap().parse::<usize>().unwrap()).sum();
    assert_eq!(total, 40);
    assert_eq!(hist.lines().count(), 1 + 50);
    let ages = fs::read_to_string(out_dir.join("age_bins.csv")).unwrap();
    assert!(ages.starts_with("age_bin,n,mean,std,q1,median,q3\n20-29,"));
}

#[test]
fn cohort_input_errors() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().join("out");
    let empty = dir.path().join("empty.csv");
    fs::write(&empty, "").unwrap();
    assert_eq!(code(&mrdensity(&["cohort", s(&empty), "--out-dir", s(&out_dir)])), 2);

    let header_only = dir.path().join("header.csv");
    fs::write(&header_only, "subject_id,dataset,age,density,mammo_category\n").unwrap();
    assert_eq!(code(&mrdensity(&["cohort", s(&header_only), "--out-dir", s(&out_dir)])), 2);

    let bad = dir.path().join("bad.csv");
    fs::write(
        &bad,
        "subject_id,dataset,age,density,mammo_category\na,ISPY2,40,0.1,\nb,ISPY2,41,1.2,\n",
    )
    .unwrap();
    let out = mrdensity(&["cohort", s(&bad), "--out-dir", s(&out_dir)]);
    assert_eq!(code(&out), 2);
    assert!(stderr(&out).contains("bad.csv:3"), "{}", stderr(&out));
}

#[test]
fn correlate_reports_strong_monotone_relation() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("cohort.csv");
    write_cohort(&csv, &synthetic_cohort(80));
    let out_dir = dir.path().join("out");
    let out = mrdensity(&["correlate", s(&csv), "--out-dir", s(&out_dir), "--classifier", "--seed", "3"]);
    assert_ok(&out);
    let mut reader = csv::Reader::from_path(out_dir.join("correlation.csv")).unwrap();
    let rows: Vec<csv::StringRecord> = reader.records().map(Result::unwrap).collect();
    assert_eq!(&rows[0][0], "spearman");
    assert!(rows[0][1].parse::<f64>().unwrap() > 0.9);
    assert_eq!(&rows[1][0], "kendall");
    let cats = fs::read_to_string(out_dir.join("categories.csv")).unwrap();
    assert_eq!(cats.lines().count(), 1 + 4);
    let auc = fs::read_to_string(out_dir.join("auc.csv")).unwrap();
    assert!(auc.contains("heterogeneously_dense,scattered,1.000000,20,20"), "{auc}");
    let clf = fs::read_to_string(out_dir.join("classifier.csv")).unwrap();
    assert!(clf.lines().nth(1).unwrap().contains(",1.000000,1.000000,64,16"), "{clf}");
}

#[test]
fn correlate_input_errors() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().join("out");
    let two = dir.path().join("two.csv");
    write_cohort(&two, &synthetic_cohort(2));
    assert_eq!(code(&mrdensity(&["correlate", s(&two), "--out-dir", s(&out_dir)])), 2);

    let same = dir.path().join("same.csv");
    let mut records = synthetic_cohort(10);
    records.iter_mut().for_each(|r| r.mammo_category = Some(DensityCategory::ExtremelyDense));
    write_cohort(&same, &records);
    let out = mrdensity(&["correlate", s(&same), "--out-dir", s(&out_dir)]);
    assert_eq!(code(&out), 2);
    assert!(stderr(&out).contains("constant"));
}

#[test]
fn evaluate_prints_table_layout() {
    let dir = tempfile::tempdir().unwrap();
    let ph = dir.path().join("ph");
    write_phantom(&ph, &[]);
    let truth = ph.join("dense_truth.json");
    let out = mrdensity(&["evaluate", s(&truth), s(&truth)]);
    assert_ok(&out);
    assert_eq!(stdout(&out), "DSC 100.00  HD 0.00\n");

    // An FCM prediction matches the library metrics exactly.
    let seg = dir.path().join("seg");
    assert_ok(&mrdensity(&["segment", s(&ph.join("volume.json")), "--out-dir", s(&seg), "--patch-size", "32", "--steps", "3,3,2"]));
    let pred_path = seg.join("breast_mask.json");
    let pred = load_mask(&pred_path).unwrap();
    let t = load_mask(&ph.join("breast_truth.json")).unwrap();
    let out = mrdensity(&["evaluate", s(&pred_path), s(&ph.join("breast_truth.json"))]);
    assert_ok(&out);
    assert_eq!(
        stdout(&out),
        format!("DSC {:.2}  HD {:.2}\n", 100.0 * dice(&pred, &t).unwrap(), hausdorff(&pred, &t).unwrap())
    );

    let empty = dir.path().join("empty.json");
    save_mask(&BinaryMask3D::zeros([64, 64, 48]), [1.0; 3], &empty).unwrap();
    assert_eq!(code(&mrdensity(&["evaluate", s(&truth), s(&empty)])), 2);
}

#[test]
fn parse_reports_routes_exceptions() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = dir.path().join("reports");
    fs::create_dir(&corpus).unwrap();
    let reports = [
        ("r1", "Breast density: EXTREMELY DENSE, which lowers sensitivity."),
        ("r2", "The breasts are heterogeneously\n dense."),
        ("r3", "There are scattered fibroglandular densities."),
        ("r4", "The breasts are almost entirely fatty."),
        ("r5", "No suspicious mass. BI-RADS 1."),
    ];
    for (id, text) in reports {
        fs::write(corpus.join(format!("{id}.txt")), text).unwrap();
    }
    let out_csv = dir.path().join("categories.csv");
    let exc = dir.path().join("exceptions.csv");
    let out = mrdensity(&["parse-reports", s(&corpus), "--out", s(&out_csv), "--exceptions", s(&exc)]);
    assert_ok(&out);
    assert_eq!(
        fs::read_to_string(&out_csv).unwrap(),
        "subject_id,category\nr1,extremely_dense\nr2,heterogeneously_dense\nr3,scattered\nr4,fatty\n"
    );
    let exceptions = fs::read_to_string(&exc).unwrap();
    assert_eq!(exceptions.lines().count(), 2);
    assert!(exceptions.contains("r5,"));

    let out = mrdensity(&["parse-reports", s(&dir.path().join("missing")), "--out", s(&out_csv)]);
    assert_eq!(code(&out), 2);
}

#[test]
fn manifest_batch_produces_cohort_tables() {
    let dir = tempfile::tempdir().unwrap();
    for (i, seed) in [11u64, 12, 13].iter().enumerate() {
        write_phantom(&dir.path().join(format!("ph{i}")), &["--seed", &seed.to_string()]);
    }
    fs::write(dir.path().join("r0.txt"), "heterogeneously dense").unwrap();
    fs::write(dir.path().join("r1.txt"), "no keyword here").unwrap();
    let manifest = dir.path().join("manifest.csv");
    fs::write(
        &manifest,
        "subject_id,input,kind,age,report,dataset\n\
         a,ph0/volume.json,portable,34,r0.txt,synthetic\n\
         b,ph1/volume.json,portable,47,r1.txt,synthetic\n\
         c,ph2/volume.json,portable,61,,\n",
    )
    .unwrap();
    let cfg = dir.path().join("run.toml");
    fs::write(&cfg, "patch_size = 32\nsteps = [3, 3, 2]\n").unwrap();
    let out_dir = dir.path().join("out");
    let out = mrdensity(&["cohort", "--manifest", s(&manifest), "--config", s(&cfg), "--out-dir", s(&out_dir)]);
    assert_ok(&out);
    let records = read_cohort_csv(&out_dir.join("cohort.csv")).unwrap();
    assert_eq!(records.iter().map(|r| r.subject_id.as_str()).collect::<Vec<_>>(), ["a", "b", "c"]);
    assert_eq!(records[0].mammo_category, Some(DensityCategory::HeterogeneouslyDense));
    assert_eq!(records[1].mammo_category, None);
    assert_eq!(records[2].dataset, DatasetTag::Internal);
    for r in &records {
        let dense = load_mask(&out_dir.join(format!("subjects/{}/dense_mask.json", r.subject_id))).unwrap();
        let breast = load_mask(&out_dir.join(format!("subjects/{}/breast_mask.json", r.subject_id))).unwrap();
        assert_eq!(r.density, dense.count() as f64 / breast.count() as f64);
    }
    assert!(out_dir.join("summary.csv").is_file());

    let dup = dir.path().join("dup.csv");
    fs::write(
        &dup,
        "subject_id,input,kind,age,report,dataset\na,ph0/volume.json,portable,34,,\na,ph1/volume.json,portable,35,,\n",
    )
    .unwrap();
    assert_eq!(code(&mrdensity(&["cohort", "--manifest", s(&dup), "--out-dir", s(&out_dir)])), 2);
}

#[test]
fn thread_env_is_validated() {
    let out = mrdensity_env(&["phantom", "--out-dir", "/tmp/unused"], &[("MRDENSITY_THREADS", "zero")]);
    assert_eq!(code(&out), 2);
    assert!(stderr(&out).contains("MRDENSITY_THREADS"));
}

#[test]
fn usage_errors_exit_2() {
    assert_eq!(code(&mrdensity(&["segment"])), 2);
    assert_eq!(code(&mrdensity(&["no-such-command"])), 2);
}
