//! Black-box tests of the `voxfreq` binary: flag handling, config precedence,
//! exit codes, and output artifacts.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use voxfreq::fuse::ProbVolume;
use voxfreq::nifti::{read_labels, read_scalar, write_labels, write_prob, write_scalar};
use voxfreq::{LabelSchema, LabelVolume, ScalarVolume, VoxelGeometry};

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_voxfreq"));
    c.env_remove("VOXFREQ_FILTERS");
    c
}

fn stderr_of(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn write_case(dir: &Path, id: &str, modalities: &[&str], geom: &VoxelGeometry) -> PathBuf {
    let case = dir.join("case");
    std::fs::create_dir_all(&case).unwrap();
    let mut rng = ChaCha12Rng::seed_from_u64(7);
    for m in modalities {
        let data = (0..geom.len()).map(|_| rng.gen_range(0.0..10.0)).collect();
        let vol = ScalarVolume::new(geom.clone(), data).unwrap();
        write_scalar(&case.join(format!("{id}-{m}.nii.gz")), &vol).unwrap();
    }
    case
}

#[test]
fn decompose_missing_modality_exits_2_and_names_it() {
    let dir = tempfile::tempdir().unwrap();
    let geom = VoxelGeometry::isotropic([8, 8, 2]);
    let case = write_case(dir.path(), "k1", &["t1n", "t2w", "t2f"], &geom);
    let out = bin()
        .arg("decompose")
        .arg("--case")
        .arg(&case)
        .arg("--out")
        .arg(dir.path().join("out"))
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2), "{}", stderr_of(&out));
    assert!(stderr_of(&out).contains("t1c"), "{}", stderr_of(&out));
}

#[test]
fn decompose_flag_overrides_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let geom = VoxelGeometry::isotropic([10, 8, 2]);
    let case = write_case(dir.path(), "k2", &["t1n", "t1c", "t2w", "t2f"], &geom);
    let cfg = dir.path().join("run.cfg");
    std::fs::write(&cfg, "# depth\nlevels = 1\n").unwrap();

    let manifest_levels = |out_dir: &Path| {
        let m: serde_json::Value =
            serde_json::from_slice(&std::fs::read(out_dir.join("manifest.json")).unwrap()).unwrap();
        m["config"]["levels"].as_u64().unwrap()
    };

    let out_a = dir.path().join("a");
    let st = bin()
        .arg("decompose")
        .arg("--case")
        .arg(&case)
        .arg("--out")
        .arg(&out_a)
        .arg("--config")
        .arg(&cfg)
        .status()
        .unwrap();
    assert!(st.success());
    assert_eq!(manifest_levels(&out_a), 1);

    let out_b = dir.path().join("b");
    let st = bin()
        .arg("decompose")
        .arg("--case")
        .arg(&case)
        .arg("--out")
        .arg(&out_b)
        .arg("--config")
        .arg(&cfg)
        .args(["--levels", "2"])
        .status()
        .unwrap();
    assert!(st.success());
    assert_eq!(manifest_levels(&out_b), 2);
}

#[test]
fn unknown_config_key_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let geom = VoxelGeometry::isotropic([6, 6, 1]);
    let case = write_case(dir.path(), "k3", &["t1n", "t1c", "t2w", "t2f"], &geom);
    let cfg = dir.path().join("bad.cfg");
    std::fs::write(&cfg, "depth = 3\n").unwrap();
    let out = bin()
        .arg("decompose")
        .arg("--case")
        .arg(&case)
        .arg("--out")
        .arg(dir.path().join("out"))
        .arg("--config")
        .arg(&cfg)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr_of(&out).contains("depth"), "{}", stderr_of(&out));
}

#[test]
fn filters_flag_beats_env_var() {
    let dir = tempfile::tempdir().unwrap();
    let geom = VoxelGeometry::isotropic([8, 8, 1]);
    let case = write_case(dir.path(), "k4", &["t1n", "t1c", "t2w", "t2f"], &geom);
    let good = Path::new(env!("CARGO_MANIFEST_DIR")).join("data/filters-v1.txt");

    let out = bin()
        .arg("decompose")
        .arg("--case")
        .arg(&case)
        .arg("--out")
        .arg(dir.path().join("o1"))
        .env("VOXFREQ_FILTERS", "/nonexistent/filters.txt")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1), "{}", stderr_of(&out));

    let st = bin()
        .arg("decompose")
        .arg("--case")
        .arg(&case)
        .arg("--out")
        .arg(dir.path().join("o2"))
        .env("VOXFREQ_FILTERS", "/nonexistent/filters.txt")
        .arg("--filters")
        .arg(&good)
        .status()
        .unwrap();
    assert!(st.success());
}

fn write_prob_file(path: &Path, geom: &VoxelGeometry, classes: usize, seed: u64) -> Vec<f64> {
    let v = geom.len();
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let mut probs = vec![0.0; classes * v];
    for voxel in 0..v {
        let raw: Vec<f64> = (0..classes).map(|_| rng.gen_range(0.05..1.0)).collect();
        let sum: f64 = raw.iter().sum();
        for (c, r) in raw.iter().enumerate() {
            probs[c * v + voxel] = r / sum;
        }
    }
    let vol = ProbVolume::new(geom.clone(), classes, probs.clone()).unwrap();
    write_prob(path, &vol).unwrap();
    probs
}

#[test]
fn fuse_identical_models_reproduce_their_argmax() {
    let dir = tempfile::tempdir().unwrap();
    let geom = VoxelGeometry::isotropic([6, 6, 6]);
    let classes = 5;
    let probs = write_prob_file(&dir.path().join("m1.nii.gz"), &geom, classes, 21);
    for name in ["m2.nii.gz", "m3.nii.gz"] {
        write_prob_file(&dir.path().join(name), &geom, classes, 21);
    }
    let seg = dir.path().join("seg.nii.gz");
    let st = bin()
        .arg("fuse")
        .arg("--probs")
        .args(["m1.nii.gz", "m2.nii.gz", "m3.nii.gz"].map(|n| dir.path().join(n)))
        .arg("--out")
        .arg(&seg)
        .status()
        .unwrap();
    assert!(st.success());

    let schema = LabelSchema::ped2025();
    let labels = read_labels(&seg, &schema).unwrap();
    let v = geom.len();
    for voxel in 0..v {
        let best = (0..classes)
            .map(|c| probs[c * v + voxel])
            .enumerate()
            .max_by(|a, b| a.1.total_cmp(&b.1).then(b.0.cmp(&a.0)))
            .unwrap()
            .0;
        let want = if best == 0 { 0 } else { schema.raw_regions[best - 1].1 };
        assert_eq!(labels.labels[voxel], want, "voxel {voxel}");
    }
    assert!(dir.path().join("seg.manifest.json").exists());
}

#[test]
fn fuse_weighted_two_models_match_oracle() {
    let dir = tempfile::tempdir().unwrap();
    let geom = VoxelGeometry::isotropic([8, 8, 8]);
    let classes = 5;
    let p1 = write_prob_file(&dir.path().join("a.nii.gz"), &geom, classes, 31);
    let p2 = write_prob_file(&dir.path().join("b.nii.gz"), &geom, classes, 32);
    let seg = dir.path().join("seg.nii.gz");
    let fused_out = dir.path().join("fused.nii.gz");
    let out = bin()
        .arg("fuse")
        .arg("--probs")
        .args([dir.path().join("a.nii.gz"), dir.path().join("b.nii.gz")])
        .args(["--weights", "0.7,0.3"])
        .arg("--out")
        .arg(&seg)
        .arg("--save-prob")
        .arg(&fused_out)
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", stderr_of(&out));

    let schema = LabelSchema::ped2025();
    let labels = read_labels(&seg, &schema).unwrap();
    let fused = voxfreq::nifti::read_prob(&fused_out).unwrap();
    let v = geom.len();
    for voxel in 0..v {
        let mut best = (0usize, f64::NEG_INFINITY);
        for c in 0..classes {
            let want = 0.7 * p1[c * v + voxel] + 0.3 * p2[c * v + voxel];
            assert!(
                (fused.at(c, voxel) - want).abs() <= 1e-6,
                "voxel {voxel} class {c}: stored as float32"
            );
            if want > best.1 {
                best = (c, want);
            }
        }
        let want = if best.0 == 0 { 0 } else { schema.raw_regions[best.0 - 1].1 };
        assert_eq!(labels.labels[voxel], want, "voxel {voxel}");
    }
}

#[test]
fn fuse_bad_weight_sum_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let geom = VoxelGeometry::isotropic([4, 4, 4]);
    for (name, seed) in [("a.nii.gz", 41), ("b.nii.gz", 42), ("c.nii.gz", 43)] {
        write_prob_file(&dir.path().join(name), &geom, 3, seed);
    }
    let out = bin()
        .arg("fuse")
        .arg("--probs")
        .args(["a.nii.gz", "b.nii.gz", "c.nii.gz"].map(|n| dir.path().join(n)))
        .args(["--weights", "0.5,0.5,0.5"])
        .arg("--out")
        .arg(dir.path().join("seg.nii.gz"))
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2), "{}", stderr_of(&out));
}

fn two_lesion_pair(geom: &VoxelGeometry) -> (LabelVolume, LabelVolume) {
    let cube = |labels: &mut [u32], start: [usize; 3], side: usize| {
        for x in start[0]..start[0] + side {
            for y in start[1]..start[1] + side {
                for z in start[2]..start[2] + side {
                    labels[geom.index(x, y, z)] = 1;
                }
            }
        }
    };
    let mut ref_labels = vec![0u32; geom.len()];
    cube(&mut ref_labels, [0, 0, 0], 2);
    cube(&mut ref_labels, [8, 8, 8], 2);
    let mut pred_labels = vec![0u32; geom.len()];
    cube(&mut pred_labels, [0, 0, 0], 2);
    (
        LabelVolume { geometry: geom.clone(), labels: ref_labels },
        LabelVolume { geometry: geom.clone(), labels: pred_labels },
    )
}

#[test]
fn eval_writes_report_with_config_echo() {
    let dir = tempfile::tempdir().unwrap();
    let geom = VoxelGeometry::isotropic([12, 12, 12]);
    let (rf, pred) = two_lesion_pair(&geom);
    let ref_path = dir.path().join("ref.nii.gz");
    let pred_path = dir.path().join("pred.nii.gz");
    write_labels(&ref_path, &rf).unwrap();
    write_labels(&pred_path, &pred).unwrap();

    let report = dir.path().join("report.json");
    let st = bin()
        .arg("eval")
        .arg("--pred")
        .arg(&pred_path)
        .arg("--ref")
        .arg(&ref_path)
        .args(["--tau", "0.75"])
        .arg("--report")
        .arg(&report)
        .status()
        .unwrap();
    assert!(st.success());

    let doc: serde_json::Value = serde_json::from_slice(&std::fs::read(&report).unwrap()).unwrap();
    assert_eq!(doc["config"]["tau_mm"].as_f64().unwrap(), 0.75);
    assert_eq!(doc["config"]["schema"], "ped2025");
    assert_eq!(doc["regions"]["ET"]["lesion_dice"].as_f64().unwrap(), 0.5);
    assert_eq!(doc["regions"]["ET"]["n_ref_lesions"].as_u64().unwrap(), 2);
    assert!(doc["regions"]["ET"].get("region_nsd").is_none());
    for region in ["ET", "NET", "CC", "ED", "TC", "WT"] {
        assert!(doc["regions"].get(region).is_some(), "{region} missing");
    }
    assert!(dir.path().join("report.manifest.json").exists());
}

#[test]
fn eval_perfect_prediction_scores_ones() {
    let dir = tempfile::tempdir().unwrap();
    let geom = VoxelGeometry::isotropic([10, 10, 10]);
    let (rf, _) = two_lesion_pair(&geom);
    let p = dir.path().join("seg.nii.gz");
    write_labels(&p, &rf).unwrap();
    let report = dir.path().join("r.json");
    let st = bin()
        .arg("eval")
        .arg("--pred")
        .arg(&p)
        .arg("--ref")
        .arg(&p)
        .arg("--whole-region-nsd")
        .arg("--report")
        .arg(&report)
        .status()
        .unwrap();
    assert!(st.success());
    let doc: serde_json::Value = serde_json::from_slice(&std::fs::read(&report).unwrap()).unwrap();
    for (name, scores) in doc["regions"].as_object().unwrap() {
        assert_eq!(scores["lesion_dice"].as_f64().unwrap(), 1.0, "{name}");
        assert_eq!(scores["lesion_nsd"].as_f64().unwrap(), 1.0, "{name}");
        assert_eq!(scores["region_nsd"].as_f64().unwrap(), 1.0, "{name}");
    }
}

#[test]
fn eval_geometry_mismatch_exits_2_and_missing_file_exits_1() {
    let dir = tempfile::tempdir().unwrap();
    let (rf, _) = two_lesion_pair(&VoxelGeometry::isotropic([12, 12, 12]));
    let (other, _) = two_lesion_pair(&VoxelGeometry::isotropic([12, 12, 10]));
    let a = dir.path().join("a.nii.gz");
    let b = dir.path().join("b.nii.gz");
    write_labels(&a, &rf).unwrap();
    write_labels(&b, &other).unwrap();

    let out = bin()
        .arg("eval")
        .arg("--pred")
        .arg(&a)
        .arg("--ref")
        .arg(&b)
        .arg("--report")
        .arg(dir.path().join("r.json"))
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2), "{}", stderr_of(&out));

    let out = bin()
        .arg("eval")
        .arg("--pred")
        .arg(dir.path().join("missing.nii.gz"))
        .arg("--ref")
        .arg(&a)
        .arg("--report")
        .arg(dir.path().join("r.json"))
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1), "{}", stderr_of(&out));
}

#[test]
fn znorm_normalizes_and_degenerate_input_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    let geom = VoxelGeometry::isotropic([9, 7, 5]);
    let mut rng = ChaCha12Rng::seed_from_u64(55);
    let data: Vec<f64> = (0..geom.len()).map(|_| rng.gen_range(10.0..60.0)).collect();
    let input = dir.path().join("in.nii.gz");
    write_scalar(&input, &ScalarVolume::new(geom.clone(), data).unwrap()).unwrap();
    let output = dir.path().join("out.nii.gz");
    let st = bin()
        .arg("znorm")
        .arg("--in")
        .arg(&input)
        .arg("--out")
        .arg(&output)
        .args(["--mode", "all-voxels"])
        .status()
        .unwrap();
    assert!(st.success());
    let z = read_scalar(&output).unwrap();
    let n = z.data.len() as f64;
    let mean = z.data.iter().sum::<f64>() / n;
    let std = (z.data.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n).sqrt();
    assert!(mean.abs() <= 1e-5, "mean {mean}");
    assert!((std - 1.0).abs() <= 1e-5, "std {std}");
    assert!(dir.path().join("out.manifest.json").exists());

    let zeros = dir.path().join("z.nii.gz");
    write_scalar(&zeros, &ScalarVolume::filled(geom, 0.0)).unwrap();
    let out = bin()
        .arg("znorm")
        .arg("--in")
        .arg(&zeros)
        .arg("--out")
        .arg(dir.path().join("zz.nii.gz"))
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(3), "{}", stderr_of(&out));
}

#[test]
fn patch_emits_requested_header_dims() {
    let dir = tempfile::tempdir().unwrap();
    let geom = VoxelGeometry::isotropic([240, 240, 155]);
    let input = dir.path().join("in.nii");
    write_scalar(&input, &ScalarVolume::filled(geom, 1.5)).unwrap();
    let output = dir.path().join("patch.nii");
    let st = bin()
        .arg("patch")
        .arg("--in")
        .arg(&input)
        .arg("--out")
        .arg(&output)
        .args(["--size", "96,160,160"])
        .status()
        .unwrap();
    assert!(st.success());
    let p = read_scalar(&output).unwrap();
    assert_eq!(p.geometry.dims, [96, 160, 160]);
    assert!(dir.path().join("patch.manifest.json").exists());
}

#[test]
fn patch_random_mode_requires_seed() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("in.nii");
    write_scalar(&input, &ScalarVolume::filled(VoxelGeometry::isotropic([8, 8, 8]), 1.0)).unwrap();
    let out = bin()
        .arg("patch")
        .arg("--in")
        .arg(&input)
        .arg("--out")
        .arg(dir.path().join("p.nii"))
        .args(["--size", "4,4,4", "--mode", "random"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2), "{}", stderr_of(&out));
    assert!(stderr_of(&out).contains("seed"), "{}", stderr_of(&out));
}

#[test]
fn lr_curve_csv_rows_and_endpoints() {
    let dir = tempfile::tempdir().unwrap();
    let csv_path = dir.path().join("lr.csv");
    let st = bin()
        .arg("lr-curve")
        .args(["--init", "0.01", "--epochs", "1000"])
        .arg("--out")
        .arg(&csv_path)
        .status()
        .unwrap();
    assert!(st.success());
    let text = std::fs::read_to_string(&csv_path).unwrap();
    let rows: Vec<&str> = text.lines().collect();
    assert_eq!(rows.len(), 1001);
    let parse = |row: &str| {
        let (e, lr) = row.split_once(',').unwrap();
        (e.parse::<usize>().unwrap(), lr.parse::<f64>().unwrap())
    };
    assert_eq!(parse(rows[0]), (0, 0.01));
    assert_eq!(parse(rows[1000]), (1000, 0.0));
    let mid = parse(rows[500]).1;
    assert!((mid - 0.01 * 0.5f64.powf(0.9)).abs() <= 1e-12);
    assert!(dir.path().join("lr.manifest.json").exists());
}

#[test]
fn init_sample_reports_target_and_empirical_std() {
    let dir = tempfile::tempdir().unwrap();
    let json_path = dir.path().join("stats.json");
    let st = bin()
        .arg("init-sample")
        .args(["--d", "100", "--gamma", "0.7", "--n", "1000000", "--seed", "1"])
        .arg("--out")
        .arg(&json_path)
        .status()
        .unwrap();
    assert!(st.success());
    let doc: serde_json::Value = serde_json::from_slice(&std::fs::read(&json_path).unwrap()).unwrap();
    assert_eq!(doc["n"].as_u64().unwrap(), 1_000_000);
    let target = doc["target_std"].as_f64().unwrap();
    assert!((target - 100f64.powf(-0.7)).abs() <= 1e-12);
    let std = doc["std"].as_f64().unwrap();
    assert!((std - target).abs() <= 0.01 * target, "std {std} target {target}");
}

#[test]
fn usage_errors_exit_2() {
    let out = bin().arg("decompose").output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    let out = bin().arg("no-such-command").output().unwrap();
    assert_eq!(out.status.code(), Some(2));
}
