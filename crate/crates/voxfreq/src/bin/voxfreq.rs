//! Batch command-line front end: per-case frequency decomposition, ensemble
//! fusion, lesion-wise evaluation, and the supporting utility commands.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use serde_json::json;

use voxfreq::error::{Result, VoxError};
use voxfreq::filters::{FilterBank, FILTERS_ENV_VAR};
use voxfreq::fuse::{argmax_labels, fuse_probs, EnsembleSpec};
use voxfreq::hyper::{init_std, lr_at, sample_init, InitSpec, ScheduleSpec};
use voxfreq::manifest::{sibling_manifest_path, RunManifest};
use voxfreq::metrics::{lesion_wise_scores, Connectivity, MetricConfig};
use voxfreq::nifti;
use voxfreq::prep::{
    decompose_case_parallel, extract_patch, zscore, CaseBundle, NormMode, PatchMode, PatchSpec,
    MODALITIES,
};
use voxfreq::volgrid::LabelSchema;

const LONG_ABOUT: &str = "\
Volumetric frequency decomposition and segmentation evaluation.

Config files (--config FILE) are flat `key = value` lines; `#` starts a \
comment. Keys equal the long flag names without the leading dashes \
(e.g. `levels = 3`, `tau = 0.5`). Precedence: flags > config file > defaults.

Filter coefficients resolve in order: --filters FILE, the VOXFREQ_FILTERS \
environment variable, then the embedded table.

Exit codes: 0 success, 1 I/O failure, 2 usage/validation error, \
3 computation failure.";

#[derive(Parser)]
#[command(name = "voxfreq", version, about = "Volumetric frequency toolkit", long_about = LONG_ABOUT)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Decompose a 4-modality case into 20 frequency channels.
    Decompose(DecomposeArgs),
    /// Fuse model probability maps and write the argmax label map.
    Fuse(FuseArgs),
    /// Score a predicted segmentation against a reference.
    Eval(EvalArgs),
    /// Z-score normalize a scalar volume.
    Znorm(ZnormArgs),
    /// Extract a fixed-size patch from a scalar volume.
    Patch(PatchArgs),
    /// Emit the polynomial learning-rate schedule as CSV (epoch,lr).
    LrCurve(LrCurveArgs),
    /// Sample the scaled Gaussian initializer and report statistics.
    InitSample(InitSampleArgs),
}

#[derive(Args)]
struct DecomposeArgs {
    /// Directory holding the four modality files.
    #[arg(long)]
    case: PathBuf,
    /// Output directory (created if absent).
    #[arg(long)]
    out: PathBuf,
    /// Wavelet decomposition depth [default: 3].
    #[arg(long)]
    levels: Option<usize>,
    /// Filter coefficient file overriding the embedded table.
    #[arg(long)]
    filters: Option<PathBuf>,
    /// Input file-name pattern with {id} and {mod} placeholders
    /// [default: {id}-{mod}.nii.gz].
    #[arg(long)]
    pattern: Option<String>,
    /// Worker threads across modalities [default: 1].
    #[arg(long)]
    jobs: Option<usize>,
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Args)]
struct FuseArgs {
    /// Two or more 4D probability volumes.
    #[arg(long, num_args = 2.., required = true)]
    probs: Vec<PathBuf>,
    /// Comma-separated model weights summing to 1 [default: uniform].
    #[arg(long)]
    weights: Option<String>,
    /// Output label volume.
    #[arg(long)]
    out: PathBuf,
    /// Also write the fused probability volume here.
    #[arg(long)]
    save_prob: Option<PathBuf>,
    /// Label schema name [default: ped2025].
    #[arg(long)]
    schema: Option<String>,
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Args)]
struct EvalArgs {
    /// Predicted label volume.
    #[arg(long)]
    pred: PathBuf,
    /// Reference label volume.
    #[arg(long = "ref")]
    reference: PathBuf,
    /// Label schema name [default: ped2025].
    #[arg(long)]
    schema: Option<String>,
    /// Surface tolerance in mm [default: 0.5].
    #[arg(long)]
    tau: Option<f64>,
    /// Reference-lesion dilation iterations for matching [default: 1].
    #[arg(long)]
    dilation: Option<usize>,
    /// Component connectivity: 6, 18 or 26 [default: 26].
    #[arg(long)]
    connectivity: Option<u8>,
    /// Ignore reference lesions smaller than this many voxels [default: 0].
    #[arg(long)]
    min_lesion_voxels: Option<usize>,
    /// Additionally report whole-region NSD per region.
    #[arg(long)]
    whole_region_nsd: bool,
    /// Output JSON report path.
    #[arg(long)]
    report: PathBuf,
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Args)]
struct ZnormArgs {
    #[arg(long = "in")]
    input: PathBuf,
    #[arg(long)]
    out: PathBuf,
    /// Normalization set: nonzero-mask or all-voxels [default: nonzero-mask].
    #[arg(long)]
    mode: Option<String>,
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Args)]
struct PatchArgs {
    #[arg(long = "in")]
    input: PathBuf,
    #[arg(long)]
    out: PathBuf,
    /// Patch dims as x,y,z (e.g. 96,160,160).
    #[arg(long)]
    size: Option<String>,
    /// Placement: centered or random [default: centered].
    #[arg(long)]
    mode: Option<String>,
    /// RNG seed; required for random mode.
    #[arg(long)]
    seed: Option<u64>,
    /// Fill value for out-of-volume regions [default: 0].
    #[arg(long)]
    pad_value: Option<f64>,
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Args)]
struct LrCurveArgs {
    /// Initial learning rate [default: 0.01].
    #[arg(long)]
    init: Option<f64>,
    /// Final epoch; the curve has epochs+1 rows [default: 1000].
    #[arg(long)]
    epochs: Option<usize>,
    /// CSV output path; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Args)]
struct InitSampleArgs {
    /// Fan-in (number of input neurons).
    #[arg(long)]
    d: usize,
    /// Scale exponent.
    #[arg(long)]
    gamma: f64,
    /// Number of draws [default: 1000000].
    #[arg(long)]
    n: Option<usize>,
    /// RNG seed [default: 0].
    #[arg(long)]
    seed: Option<u64>,
    /// Emit summary statistics (always on; samples are never written).
    #[arg(long)]
    stats: bool,
    /// JSON output path; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    config: Option<PathBuf>,
}

fn main() {
    let cli = Cli::parse();
    let outcome = match cli.cmd {
        Cmd::Decompose(a) => cmd_decompose(a),
        Cmd::Fuse(a) => cmd_fuse(a),
        Cmd::Eval(a) => cmd_eval(a),
        Cmd::Znorm(a) => cmd_znorm(a),
        Cmd::Patch(a) => cmd_patch(a),
        Cmd::LrCurve(a) => cmd_lr_curve(a),
        Cmd::InitSample(a) => cmd_init_sample(a),
    };
    match outcome {
        Ok(()) => {}
        Err(e) => {
            eprintln!("error: {e}");
            std::process::exit(e.exit_code());
        }
    }
}

/// Flat key=value config file; keys are long flag names without dashes.
struct FileConfig {
    map: BTreeMap<String, String>,
}

impl FileConfig {
    fn load(path: Option<&Path>, allowed: &[&str]) -> Result<FileConfig> {
        let mut map = BTreeMap::new();
        if let Some(path) = path {
            let text = std::fs::read_to_string(path)?;
            for (lineno, raw) in text.lines().enumerate() {
                let line = raw.split('#').next().unwrap_or("").trim();
                if line.is_empty() {
                    continue;
                }
                let (key, value) = line.split_once('=').ok_or_else(|| {
                    VoxError::Argument(format!(
                        "{}:{}: expected `key = value`, got `{raw}`",
                        path.display(),
                        lineno + 1
                    ))
                })?;
                let key = key.trim().to_string();
                if !allowed.contains(&key.as_str()) {
                    return Err(VoxError::Argument(format!(
                        "{}: unknown config key `{key}` (allowed: {})",
                        path.display(),
                        allowed.join(", ")
                    )));
                }
                map.insert(key, value.trim().to_string());
            }
        }
        Ok(FileConfig { map })
    }

    fn get<T: FromStr>(&self, key: &str) -> Result<Option<T>>
    where
        T::Err: std::fmt::Display,
    {
        match self.map.get(key) {
            None => Ok(None),
            Some(raw) => raw.parse::<T>().map(Some).map_err(|e| {
                VoxError::Argument(format!("config key `{key}`: cannot parse `{raw}`: {e}"))
            }),
        }
    }
}

fn resolve<T>(flag: Option<T>, file: Option<T>, default: T) -> T {
    flag.or(file).unwrap_or(default)
}

fn load_bank(flag: Option<&Path>) -> Result<(FilterBank, String)> {
    if let Some(p) = flag {
        return Ok((FilterBank::from_path(p)?, p.display().to_string()));
    }
    if let Ok(p) = std::env::var(FILTERS_ENV_VAR) {
        return Ok((FilterBank::from_path(Path::new(&p))?, p));
    }
    Ok((FilterBank::embedded()?, "embedded".to_string()))
}

fn load_schema(name: Option<String>, cfg: &FileConfig) -> Result<(LabelSchema, String)> {
    let name = resolve(name, cfg.get("schema")?, "ped2025".to_string());
    match name.as_str() {
        "ped2025" => Ok((LabelSchema::ped2025(), name)),
        other => Err(VoxError::Argument(format!("unknown schema `{other}` (available: ped2025)"))),
    }
}

/// Resolves the case id and the four modality files under `dir` against a
/// pattern containing `{id}` and `{mod}`.
fn discover_case(dir: &Path, pattern: &str) -> Result<(String, [PathBuf; 4])> {
    if !pattern.contains("{id}") || !pattern.contains("{mod}") {
        return Err(VoxError::Argument(format!(
            "pattern `{pattern}` must contain {{id}} and {{mod}}"
        )));
    }
    let names: Vec<String> = std::fs::read_dir(dir)?
        .filter_map(|e| e.ok())
        .filter(|e| e.path().is_file())
        .map(|e| e.file_name().to_string_lossy().into_owned())
        .collect();
    let mut ids: Vec<String> = Vec::new();
    let mut found: Vec<Option<PathBuf>> = vec![None; 4];
    for (mi, m) in MODALITIES.iter().enumerate() {
        let templ = pattern.replace("{mod}", m);
        let (prefix, suffix) = templ.split_once("{id}").unwrap();
        for name in &names {
            if name.len() > prefix.len() + suffix.len()
                && name.starts_with(prefix)
                && name.ends_with(suffix)
            {
                let id = name[prefix.len()..name.len() - suffix.len()].to_string();
                if !ids.contains(&id) {
                    ids.push(id);
                }
                found[mi] = Some(dir.join(name));
            }
        }
    }
    if ids.len() > 1 {
        ids.sort();
        return Err(VoxError::Argument(format!(
            "ambiguous case ids in {}: {}",
            dir.display(),
            ids.join(", ")
        )));
    }
    for (mi, m) in MODALITIES.iter().enumerate() {
        if found[mi].is_none() {
            return Err(VoxError::Argument(format!(
                "missing modality {m}: no file matching `{}` in {}",
                pattern.replace("{mod}", m),
                dir.display()
            )));
        }
    }
    let id = ids.pop().ok_or_else(|| {
        VoxError::Argument(format!("no modality files matching `{pattern}` in {}", dir.display()))
    })?;
    let files: Vec<PathBuf> = found.into_iter().map(|f| f.unwrap()).collect();
    Ok((id, files.try_into().unwrap()))
}

/// Channel suffixes in output order.
const CHANNEL_SUFFIXES: [&str; 5] = ["lf", "hf1", "hf2", "hf3", "hf4"];

fn cmd_decompose(a: DecomposeArgs) -> Result<()> {
    let t0 = Instant::now();
    let cfg = FileConfig::load(a.config.as_deref(), &["levels", "pattern", "jobs", "filters"])?;
    let levels = resolve(a.levels, cfg.get("levels")?, 3);
    let pattern = resolve(a.pattern, cfg.get("pattern")?, "{id}-{mod}.nii.gz".to_string());
    let jobs = resolve(a.jobs, cfg.get("jobs")?, 1).max(1);
    let filters_flag = match a.filters {
        Some(p) => Some(p),
        None => cfg.get::<PathBuf>("filters")?,
    };
    let (bank, filters_desc) = load_bank(filters_flag.as_deref())?;
    let (case_id, files) = discover_case(&a.case, &pattern)?;
    std::fs::create_dir_all(&a.out)?;

    let mut manifest = RunManifest::new(
        "decompose",
        json!({
            "case": a.case.display().to_string(),
            "out": a.out.display().to_string(),
            "levels": levels,
            "pattern": pattern,
            "jobs": jobs,
            "filters": filters_desc,
        }),
    );
    for f in &files {
        manifest.add_input(f)?;
    }

    let mut vols = Vec::with_capacity(4);
    for (m, f) in MODALITIES.iter().zip(&files) {
        vols.push(nifti::read_scalar(f).map_err(|e| e.with_context(format!("modality {m}")))?);
    }
    let bundle = CaseBundle::new(case_id.clone(), vols.try_into().unwrap())?;
    let channels = decompose_case_parallel(&bundle, levels, &bank, jobs)?;

    for m in MODALITIES {
        for suffix in CHANNEL_SUFFIXES {
            let vol = &channels[&format!("{m}_{suffix}")];
            let path = a.out.join(format!("{case_id}-{m}_{suffix}.nii.gz"));
            nifti::write_scalar(&path, vol)?;
            manifest.add_output(&path);
        }
    }
    manifest.duration_seconds = t0.elapsed().as_secs_f64();
    manifest.write(&a.out.join("manifest.json"))?;
    Ok(())
}

fn cmd_fuse(a: FuseArgs) -> Result<()> {
    let t0 = Instant::now();
    let cfg = FileConfig::load(a.config.as_deref(), &["weights", "schema"])?;
    let (schema, schema_name) = load_schema(a.schema, &cfg)?;
    let weights_raw = resolve(a.weights, cfg.get("weights")?, String::new());
    let weights: Vec<f64> = if weights_raw.is_empty() {
        vec![1.0 / a.probs.len() as f64; a.probs.len()]
    } else {
        weights_raw
            .split(',')
            .map(|w| {
                w.trim()
                    .parse::<f64>()
                    .map_err(|e| VoxError::Argument(format!("weight `{w}`: {e}")))
            })
            .collect::<Result<Vec<f64>>>()?
    };

    let mut manifest = RunManifest::new(
        "fuse",
        json!({
            "probs": a.probs.iter().map(|p| p.display().to_string()).collect::<Vec<_>>(),
            "weights": weights,
            "out": a.out.display().to_string(),
            "save_prob": a.save_prob.as_ref().map(|p| p.display().to_string()),
            "schema": schema_name,
        }),
    );
    let mut models = Vec::with_capacity(a.probs.len());
    for p in &a.probs {
        manifest.add_input(p)?;
        models.push(nifti::read_prob(p).map_err(|e| e.with_context(p.display().to_string()))?);
    }
    let fused = fuse_probs(&models, &EnsembleSpec { weights })?;
    let labels = argmax_labels(&fused, &schema)?;
    if let Some(parent) = a.out.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent)?;
    }
    nifti::write_labels(&a.out, &labels)?;
    manifest.add_output(&a.out);
    if let Some(pp) = &a.save_prob {
        nifti::write_prob(pp, &fused)?;
        manifest.add_output(pp);
    }
    manifest.duration_seconds = t0.elapsed().as_secs_f64();
    manifest.write(&sibling_manifest_path(&a.out))?;
    Ok(())
}

fn cmd_eval(a: EvalArgs) -> Result<()> {
    let t0 = Instant::now();
    let cfg = FileConfig::load(
        a.config.as_deref(),
        &["schema", "tau", "dilation", "connectivity", "min-lesion-voxels", "whole-region-nsd"],
    )?;
    let (schema, schema_name) = load_schema(a.schema, &cfg)?;
    let metric_cfg = MetricConfig {
        connectivity: Connectivity::from_u8(resolve(
            a.connectivity,
            cfg.get("connectivity")?,
            26,
        ))?,
        match_dilation_voxels: resolve(a.dilation, cfg.get("dilation")?, 1),
        tau_mm: resolve(a.tau, cfg.get("tau")?, 0.5),
        min_lesion_voxels: resolve(a.min_lesion_voxels, cfg.get("min-lesion-voxels")?, 0),
        whole_region_nsd: a.whole_region_nsd
            || cfg.get("whole-region-nsd")?.unwrap_or(false),
    };

    let mut manifest = RunManifest::new(
        "eval",
        json!({
            "pred": a.pred.display().to_string(),
            "ref": a.reference.display().to_string(),
            "schema": schema_name,
            "metrics": metric_cfg.to_json(),
        }),
    );
    manifest.add_input(&a.pred)?;
    manifest.add_input(&a.reference)?;

    let pred = nifti::read_labels(&a.pred, &schema)
        .map_err(|e| e.with_context(a.pred.display().to_string()))?;
    let reference = nifti::read_labels(&a.reference, &schema)
        .map_err(|e| e.with_context(a.reference.display().to_string()))?;
    let report = lesion_wise_scores(&reference, &pred, &schema, &metric_cfg)?;

    let mut doc = json!({
        "config": metric_cfg.to_json(),
        "regions": serde_json::to_value(&report)?["regions"],
    });
    doc["config"]["schema"] = json!(schema_name);
    if let Some(parent) = a.report.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent)?;
    }
    std::fs::write(&a.report, serde_json::to_string_pretty(&doc)? + "\n")?;
    manifest.add_output(&a.report);
    manifest.duration_seconds = t0.elapsed().as_secs_f64();
    manifest.write(&sibling_manifest_path(&a.report))?;
    Ok(())
}

fn cmd_znorm(a: ZnormArgs) -> Result<()> {
    let t0 = Instant::now();
    let cfg = FileConfig::load(a.config.as_deref(), &["mode"])?;
    let mode_name = resolve(a.mode, cfg.get("mode")?, "nonzero-mask".to_string());
    let mode = match mode_name.as_str() {
        "nonzero-mask" => NormMode::NonzeroMask,
        "all-voxels" => NormMode::AllVoxels,
        other => {
            return Err(VoxError::Argument(format!(
                "mode must be nonzero-mask or all-voxels, got `{other}`"
            )))
        }
    };
    let mut manifest = RunManifest::new(
        "znorm",
        json!({
            "in": a.input.display().to_string(),
            "out": a.out.display().to_string(),
            "mode": mode_name,
        }),
    );
    manifest.add_input(&a.input)?;
    let vol = nifti::read_scalar(&a.input)?;
    let normed = zscore(&vol, mode)?;
    nifti::write_scalar(&a.out, &normed)?;
    manifest.add_output(&a.out);
    manifest.duration_seconds = t0.elapsed().as_secs_f64();
    manifest.write(&sibling_manifest_path(&a.out))?;
    Ok(())
}

fn parse_size(raw: &str) -> Result<[usize; 3]> {
    let parts: Vec<usize> = raw
        .split(',')
        .map(|p| {
            p.trim()
                .parse::<usize>()
                .map_err(|e| VoxError::Argument(format!("size component `{p}`: {e}")))
        })
        .collect::<Result<Vec<usize>>>()?;
    let arr: [usize; 3] = parts
        .try_into()
        .map_err(|_| VoxError::Argument(format!("size `{raw}` must have exactly 3 components")))?;
    Ok(arr)
}

fn cmd_patch(a: PatchArgs) -> Result<()> {
    let t0 = Instant::now();
    let cfg = FileConfig::load(a.config.as_deref(), &["size", "mode", "seed", "pad-value"])?;
    let size_raw = resolve(a.size, cfg.get("size")?, "96,160,160".to_string());
    let size = parse_size(&size_raw)?;
    let mode_name = resolve(a.mode, cfg.get("mode")?, "centered".to_string());
    let mode = match mode_name.as_str() {
        "centered" => PatchMode::Centered,
        "random" => PatchMode::SeededRandom,
        other => {
            return Err(VoxError::Argument(format!(
                "mode must be centered or random, got `{other}`"
            )))
        }
    };
    let seed = match a.seed {
        Some(s) => Some(s),
        None => cfg.get("seed")?,
    };
    let spec = PatchSpec {
        size,
        mode,
        seed,
        pad_value: resolve(a.pad_value, cfg.get("pad-value")?, 0.0),
    };
    let mut manifest = RunManifest::new(
        "patch",
        json!({
            "in": a.input.display().to_string(),
            "out": a.out.display().to_string(),
            "size": size,
            "mode": mode_name,
            "seed": seed,
            "pad_value": spec.pad_value,
        }),
    );
    manifest.add_input(&a.input)?;
    let vol = nifti::read_scalar(&a.input)?;
    let patch = extract_patch(&vol, &spec)?;
    nifti::write_scalar(&a.out, &patch)?;
    manifest.add_output(&a.out);
    manifest.duration_seconds = t0.elapsed().as_secs_f64();
    manifest.write(&sibling_manifest_path(&a.out))?;
    Ok(())
}

fn cmd_lr_curve(a: LrCurveArgs) -> Result<()> {
    let t0 = Instant::now();
    let cfg = FileConfig::load(a.config.as_deref(), &["init", "epochs"])?;
    let spec = ScheduleSpec {
        lr_init: resolve(a.init, cfg.get("init")?, 1e-2),
        max_epoch: resolve(a.epochs, cfg.get("epochs")?, 1000),
        ..ScheduleSpec::default()
    };
    let mut csv = String::new();
    for epoch in 0..=spec.max_epoch {
        csv.push_str(&format!("{},{}\n", epoch, lr_at(&spec, epoch)?));
    }
    match &a.out {
        None => print!("{csv}"),
        Some(path) => {
            std::fs::write(path, &csv)?;
            let mut manifest = RunManifest::new(
                "lr-curve",
                json!({"init": spec.lr_init, "epochs": spec.max_epoch, "exponent": spec.exponent}),
            );
            manifest.add_output(path);
            manifest.duration_seconds = t0.elapsed().as_secs_f64();
            manifest.write(&sibling_manifest_path(path))?;
        }
    }
    Ok(())
}

fn cmd_init_sample(a: InitSampleArgs) -> Result<()> {
    let t0 = Instant::now();
    let cfg = FileConfig::load(a.config.as_deref(), &["n", "seed"])?;
    let n = resolve(a.n, cfg.get("n")?, 1_000_000);
    let seed = resolve(a.seed, cfg.get("seed")?, 0);
    let spec = InitSpec { d: a.d, gamma: a.gamma };
    let xs = sample_init(&spec, n, seed)?;
    let mean = xs.iter().sum::<f64>() / n as f64;
    let std = (xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n as f64).sqrt();
    let _ = a.stats;
    let doc = json!({
        "n": n,
        "mean": mean,
        "std": std,
        "target_std": init_std(&spec)?,
    });
    let text = serde_json::to_string_pretty(&doc)? + "\n";
    match &a.out {
        None => print!("{text}"),
        Some(path) => {
            std::fs::write(path, &text)?;
            let mut manifest = RunManifest::new(
                "init-sample",
                json!({"d": a.d, "gamma": a.gamma, "n": n, "seed": seed}),
            );
            manifest.add_output(path);
            manifest.duration_seconds = t0.elapsed().as_secs_f64();
            manifest.write(&sibling_manifest_path(path))?;
        }
    }
    Ok(())
}
