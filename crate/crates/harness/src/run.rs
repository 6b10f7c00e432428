//! Experiment pipelines.

use std::collections::HashMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Instant;

use num_complex::Complex64;
use tracing::{info, warn};

use sclab_core::growth::{classify, fit_free, fit_log_exponent, FitMode, FitReport};
use sclab_core::manifolds::{
    enumerate_window, periodic_geodesic, quadrature_grid, GeodesicSpec, Label, ManifoldKind, ManifoldModel,
    QuadratureGrid,
};
use sclab_core::quasimodes::{
    deck_invariance_check, defect, export_quasimode, gaussian_beam, knapp_cover_waves, knapp_flat, knapp_kernel_rn, l1_lower_ratio,
    on_axis_values, quasimode_budget, transverse_gradient_max, tube_mass, zonal, QuasimodeEvaluator, TubeSpec,
};
use sclab_core::spectral::{
    coherent_candidate, diagonal_kernel, lq_norm, opnorm_2_to_inf, opnorm_lower_bound, project, CoefficientVector,
    NormRecord, SpectralWindow, WidthPolicy,
};
use sclab_core::Error as CoreError;

use crate::cache::cache_spectrum;
use crate::config::{Experiment, ExperimentConfig, Exponent, Family, PolicySpec};
use crate::error::{HarnessError, Result};
use crate::manifest::{Checkpoint, Recorder, RunManifest, MANIFEST_FILE};
use crate::output::{num, read_points, Table};

/// Per-invocation settings that are not part of the experiment's identity.
#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    /// Overrides the config's `out_dir`.
    pub out_dir: Option<PathBuf>,
    /// Stop (as if interrupted) after computing this many new rows.
    pub row_limit: Option<usize>,
}

pub const SPECTRUM_FILE: &str = "spectrum.csv";
pub const OPNORM_FILE: &str = "opnorm.csv";
pub const KNAPP_FILE: &str = "knapp_scan.csv";
pub const BEAM_FILE: &str = "beam_scan.csv";
pub const KERNEL_FILE: &str = "kernel_decay.csv";
pub const FIT_FILE: &str = "fit.json";
pub const CLASSIFY_FILE: &str = "classify.json";

pub fn out_dir(config: &ExperimentConfig, opts: &RunOptions) -> PathBuf {
    opts.out_dir
        .clone()
        .or_else(|| config.out_dir.clone())
        .unwrap_or_else(|| PathBuf::from("out"))
}

/// Validates, executes and records one experiment.
///
/// Outputs are written only when every row is done; on failure they are
/// removed. Completed rows of scans are kept in a partial manifest so an
/// interrupted run resumes where it stopped.
pub fn run(config: &ExperimentConfig, opts: &RunOptions) -> Result<RunManifest> {
    config.validate()?;
    let dir = out_dir(config, opts);
    fs::create_dir_all(&dir).map_err(|e| HarnessError::io("creating output directory", &dir, e))?;
    let hash = config.hash();
    let mut rec = Recorder::new(dir.clone());
    let mut scan = Scan {
        dir: dir.clone(),
        checkpoint: Checkpoint::resume(&dir, &hash),
        limit: opts.row_limit,
        fresh: 0,
        resumed: 0,
    };
    info!(experiment = config.experiment.name(), config_hash = %hash, "starting run");
    let result = execute(config, &mut rec, &mut scan);
    rec.resumed_rows = scan.resumed;
    match result {
        Ok(()) => {
            Checkpoint::remove(&dir);
            let manifest = rec.finish(config.experiment.name(), hash, config.seed);
            let bytes = serde_json::to_vec_pretty(&manifest).expect("manifest serializes");
            crate::output::write_atomic(&dir.join(MANIFEST_FILE), &bytes)?;
            Ok(manifest)
        }
        Err(e) => {
            rec.discard();
            if !matches!(e, HarnessError::Interrupted { .. }) {
                Checkpoint::remove(&dir);
            }
            Err(e)
        }
    }
}

struct Scan {
    dir: PathBuf,
    checkpoint: Checkpoint,
    limit: Option<usize>,
    fresh: usize,
    resumed: usize,
}

impl Scan {
    /// Returns a completed row from the partial manifest or computes and records it.
    fn row(&mut self, key: &str, compute: impl FnOnce() -> Result<Vec<String>>) -> Result<Vec<String>> {
        if let Some(r) = self.checkpoint.rows.get(key) {
            self.resumed += 1;
            return Ok(r.clone());
        }
        if self.limit.is_some_and(|l| self.fresh >= l) {
            return Err(HarnessError::Interrupted {
                completed: self.checkpoint.rows.len(),
            });
        }
        let r = compute()?;
        self.checkpoint.rows.insert(key.to_string(), r.clone());
        self.checkpoint.save(&self.dir)?;
        self.fresh += 1;
        Ok(r)
    }
}

fn execute(config: &ExperimentConfig, rec: &mut Recorder, scan: &mut Scan) -> Result<()> {
    match &config.experiment {
        Experiment::Spectrum { lambda_max } => spectrum(config, *lambda_max, rec),
        Experiment::Opnorm { .. } => opnorm(config, rec, scan),
        Experiment::KnappScan { .. } => knapp_scan(config, rec, scan),
        Experiment::BeamScan { .. } => beam_scan(config, rec, scan),
        Experiment::KernelDecay { .. } => kernel_decay(config, rec, scan),
        Experiment::Fit { input, mode } => {
            let points = rec.stage("load", |_| read_points(input))?;
            let fit = rec.stage("fit", |_| {
                match mode {
                    FitMode::Free => fit_free(&points),
                    FitMode::AFixed { a } => fit_log_exponent(&points, *a),
                }
                .map_err(|e| HarnessError::stage("fit", format!("{} points", points.len()), e))
            })?;
            #[derive(serde::Serialize)]
            struct FitOutput<'a> {
                fit: &'a sclab_core::GrowthFit,
                points: &'a [(f64, f64)],
            }
            let bytes = serde_json::to_vec_pretty(&FitOutput { fit: &fit, points: &points }).expect("serializes");
            rec.write(FIT_FILE, &bytes)
        }
        Experiment::Classify { input, q, n } => {
            let raw = rec.stage("load", |_| read_points(input))?;
            // empty windows carry no growth information
            let points: Vec<(f64, f64)> = raw.iter().copied().filter(|p| p.1 > 0.0 && p.1.is_finite()).collect();
            if points.len() < raw.len() {
                warn!(skipped = raw.len() - points.len(), "skipping empty or non-finite samples");
            }
            let verdict = rec.stage("classify", |_| {
                classify(q.0, *n, &points)
                    .map_err(|e| HarnessError::stage("classify", format!("q = {}, n = {n}", q.0), e))
            })?;
            let report = FitReport::new(q.0, *n, &verdict, &points);
            rec.write(CLASSIFY_FILE, &serde_json::to_vec_pretty(&report).expect("serializes"))
        }
    }
}

fn cache_dir(config: &ExperimentConfig, rec: &Recorder) -> PathBuf {
    config.cache_dir.clone().unwrap_or_else(|| rec.out_dir.join("cache"))
}

pub fn label_str(label: &Label) -> String {
    match label {
        Label::Lattice(m) => {
            let parts: Vec<String> = m.iter().map(|x| x.to_string()).collect();
            format!("lattice:{}", parts.join(":"))
        }
        Label::Klein { m1, m2 } => format!("klein:{m1}:{m2}"),
        Label::Harmonic { degree, order } => format!("harmonic:{degree}:{order}"),
    }
}

fn spectrum(config: &ExperimentConfig, lambda_max: f64, rec: &mut Recorder) -> Result<()> {
    let model = config.model()?;
    let dir = cache_dir(config, rec);
    let cache = rec.stage("spectrum", |_| cache_spectrum(&model, lambda_max, &dir))?;
    if cache.hit {
        rec.cache_hit("spectrum", cache.key.clone());
    }
    let mut table = Table::new(["label", "freq"]);
    for e in &cache.indices {
        table.push(vec![label_str(&e.label), num(e.freq)]);
    }
    rec.write(SPECTRUM_FILE, &table.to_bytes())
}

fn policy(p: PolicySpec) -> WidthPolicy {
    match p {
        PolicySpec::Unit => WidthPolicy::Unit,
        PolicySpec::Log => WidthPolicy::Log,
    }
}

/// Point where the window's diagonal kernel is largest.
fn kernel_peak(model: &ManifoldModel, window: &SpectralWindow) -> std::result::Result<Vec<f64>, CoreError> {
    Ok(match model.kind() {
        ManifoldKind::Torus => vec![0.0; model.dim()],
        ManifoldKind::Sphere => {
            let mut p = vec![0.0; model.dim() + 1];
            p[model.dim()] = 1.0;
            p
        }
        ManifoldKind::KleinBottle => {
            let indices = enumerate_window(model, window)?;
            let mut best = (0.0, f64::NEG_INFINITY);
            for j in 0..=2000 {
                let y = j as f64 / 4000.0;
                let k = diagonal_kernel(model, &indices, &[0.0, y])?;
                if k > best.1 {
                    best = (y, k);
                }
            }
            vec![0.0, best.0]
        }
    })
}

fn opnorm(config: &ExperimentConfig, rec: &mut Recorder, scan: &mut Scan) -> Result<()> {
    let Experiment::Opnorm {
        lambdas,
        policy: pol,
        q,
        grid_resolution,
        record_runtime,
    } = &config.experiment
    else {
        unreachable!()
    };
    let model = Arc::new(config.model()?);
    let mut header: Vec<String> = NormRecord::HEADER.split(',').map(String::from).collect();
    header.extend(["count", "empty", "method"].map(String::from));
    let mut table = Table::new(header);
    rec.stage("opnorm", |_| {
        for &lambda in lambdas {
            for e in q {
                let key = format!("{}|{}", num(lambda), e.tag());
                let row = scan.row(&key, || {
                    let ctx = format!("{model}, λ = {lambda}, q = {}", e.0);
                    let wrap = |err| HarnessError::stage("opnorm", ctx.clone(), err);
                    let start = Instant::now();
                    let window = SpectralWindow::new(lambda, policy(*pol)).map_err(wrap)?;
                    let (norm, res, count, empty, method) = window_norm(&model, &window, e.0, *grid_resolution).map_err(wrap)?;
                    let record = NormRecord {
                        manifold: model.to_string(),
                        lambda,
                        delta_policy: window.policy_name().to_string(),
                        q: e.0,
                        norm,
                        grid_resolution: res,
                        runtime_ms: start.elapsed().as_secs_f64() * 1e3,
                    };
                    Ok(vec![
                        record.manifold,
                        num(record.lambda),
                        record.delta_policy,
                        num(record.q),
                        num(record.norm),
                        record.grid_resolution.to_string(),
                        if *record_runtime { num(record.runtime_ms) } else { String::new() },
                        count.to_string(),
                        empty.to_string(),
                        method.to_string(),
                    ])
                })?;
                table.push(row);
            }
        }
        Ok(())
    })?;
    rec.write(OPNORM_FILE, &table.to_bytes())
}

type WindowMeasurement = (f64, usize, usize, bool, &'static str);

fn window_norm(
    model: &Arc<ManifoldModel>,
    window: &SpectralWindow,
    q: f64,
    min_res: Option<usize>,
) -> std::result::Result<WindowMeasurement, CoreError> {
    if q.is_infinite() {
        let n = opnorm_2_to_inf(model, window)?;
        return Ok((n.value, 0, n.count, n.empty, "exact"));
    }
    let indices = enumerate_window(model, window)?;
    if indices.is_empty() {
        return Ok((0.0, 0, 0, true, "lower_bound"));
    }
    let mut candidates: Vec<CoefficientVector> = indices
        .iter()
        .map(|e| {
            let mut v = CoefficientVector::new(model.clone());
            v.insert_indexed(e, Complex64::new(1.0, 0.0)).map(|_| v)
        })
        .collect::<std::result::Result<_, _>>()?;
    candidates.push(coherent_candidate(model, window, &kernel_peak(model, window)?)?);
    let mut res = min_res.unwrap_or(0);
    for c in &candidates {
        let p = project(model, window, c)?;
        res = res.max(QuasimodeEvaluator::from_coefficients(p, window.center()).required_resolution()?);
    }
    let grid = quadrature_grid(model, res)?;
    let value = match opnorm_lower_bound(model, window, q, &candidates, &grid) {
        Ok(v) => v,
        Err(CoreError::EmptyWindow) => 0.0,
        Err(e) => return Err(e),
    };
    Ok((value, res, indices.len(), false, "lower_bound"))
}

fn q_columns(prefix: &str, q: &[Exponent]) -> Vec<String> {
    q.iter().map(|e| format!("{prefix}_q{}", e.tag())).collect()
}

/// Per-row seed derived from the run seed and the row counter.
fn row_seed(seed: u64, counter: u64) -> u64 {
    let mut z = seed ^ counter.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Resolution at which `tube_mass` accepts the tube, starting from `start`.
fn grid_for_tube(
    ev: &QuasimodeEvaluator,
    tube: &TubeSpec,
    start: usize,
) -> std::result::Result<(QuadratureGrid, f64), CoreError> {
    let mut res = start;
    loop {
        let grid = quadrature_grid(ev.model(), res)?;
        match tube_mass(ev, tube, &grid) {
            Ok(m) => return Ok((grid, m)),
            Err(CoreError::Resolution { required, .. }) if required > res => res = required,
            Err(e) => return Err(e),
        }
    }
}

fn knapp_scan(config: &ExperimentConfig, rec: &mut Recorder, scan: &mut Scan) -> Result<()> {
    let Experiment::KnappScan {
        direction,
        k,
        q,
        grid_resolution,
        deck_samples,
        export_coefficients,
        ..
    } = &config.experiment
    else {
        unreachable!()
    };
    let model = Arc::new(config.model()?);
    let geo = periodic_geodesic(&model, direction).map_err(|e| HarnessError::Validation(e.to_string()))?;
    let mut header: Vec<String> = ["k", "lambda", "delta", "l2", "defect", "budget"].map(String::from).to_vec();
    header.extend(q_columns("norm", q));
    header.extend(q_columns("ratio", q));
    header.extend(
        [
            "tube_mass",
            "tube_fraction",
            "l1_ratio",
            "axis_min",
            "gradient_max",
            "deck_error",
            "grid_resolution",
            "coefficients",
        ]
        .map(String::from),
    );
    let mut table = Table::new(header);
    rec.stage("knapp-scan", |_| {
        for &kk in k {
            let params = config.knapp_params(kk)?;
            let row = scan.row(&format!("k{kk}"), || {
                let wrap = |err| HarnessError::stage("knapp-scan", format!("{model}, k = {kk}"), err);
                knapp_row(&model, &geo, &params, q, *grid_resolution, *deck_samples, row_seed(config.seed, kk))
                    .map_err(wrap)
            })?;
            table.push(row);
        }
        Ok(())
    })?;
    if *export_coefficients {
        rec.stage("export", |rec| {
            for &kk in k {
                let params = config.knapp_params(kk)?;
                let wrap = |err| HarnessError::stage("export", format!("{model}, k = {kk}"), err);
                let s = params.scales(geo.length).map_err(wrap)?;
                let coeffs = knapp_flat(&model, &geo, &params).map_err(wrap)?;
                let ev = QuasimodeEvaluator::from_coefficients(coeffs, s.lambda);
                let record = export_quasimode(&ev, serde_json::to_value(&params).expect("params serialize"));
                rec.write(&format!("quasimode_k{kk}.json"), &serde_json::to_vec_pretty(&record).expect("serializes"))?;
            }
            Ok(())
        })?;
    }
    rec.write(KNAPP_FILE, &table.to_bytes())
}

fn knapp_row(
    model: &Arc<ManifoldModel>,
    geo: &GeodesicSpec,
    params: &sclab_core::KnappParams,
    q: &[Exponent],
    min_res: Option<usize>,
    deck_samples: usize,
    seed: u64,
) -> std::result::Result<Vec<String>, CoreError> {
    let s = params.scales(geo.length)?;
    let coeffs = knapp_flat(model, geo, params)?;
    let l2 = coeffs.l2_norm();
    let d = defect(model, s.lambda, &coeffs)?;
    let budget = quasimode_budget(model, s.lambda, &coeffs, s.delta)?;
    let count = coeffs.len();
    let ev = QuasimodeEvaluator::from_coefficients(coeffs, s.lambda);
    let tube = TubeSpec::segment(geo.clone(), params.c_bar, s.lambda)?;
    let start = ev.required_resolution()?.max(min_res.unwrap_or(0));
    let (grid, mass) = grid_for_tube(&ev, &tube, start)?;
    let mut norms = Vec::with_capacity(q.len());
    for e in q {
        norms.push(lq_norm(&ev, e.0, &grid)?);
    }
    let ratio = |x: f64| if l2 > 0.0 { x / l2 } else { f64::NAN };
    let (l1, axis_min, grad) = if l2 > 0.0 {
        let axis = on_axis_values(&ev, geo, params.c_bar, 32)?;
        (
            l1_lower_ratio(&ev, s.lambda, model.dim(), &grid)?,
            axis.into_iter().fold(f64::INFINITY, f64::min),
            transverse_gradient_max(&ev, geo, params.c_bar, s.tube_radius(), (8, 9))?,
        )
    } else {
        (f64::NAN, 0.0, 0.0)
    };
    let deck = match model.kind() {
        ManifoldKind::KleinBottle => deck_invariance_check(model, &knapp_cover_waves(model, geo, params)?, deck_samples, seed)?,
        _ => deck_invariance_check(model, &ev, deck_samples, seed)?,
    };
    let mut row = vec![
        params.k.to_string(),
        num(s.lambda),
        num(s.delta),
        num(l2),
        num(d),
        num(budget),
    ];
    row.extend(norms.iter().map(|&x| num(x)));
    row.extend(norms.iter().map(|&x| num(ratio(x))));
    row.extend([
        num(mass),
        num(ratio(mass)),
        num(l1),
        num(axis_min),
        num(grad),
        num(deck),
        grid.resolution().to_string(),
        count.to_string(),
    ]);
    Ok(row)
}

fn beam_scan(config: &ExperimentConfig, rec: &mut Recorder, scan: &mut Scan) -> Result<()> {
    let Experiment::BeamScan {
        l,
        q,
        families,
        tube_exponent,
        grid_resolution,
    } = &config.experiment
    else {
        unreachable!()
    };
    let mut header: Vec<String> = ["family", "l", "lambda", "l2"].map(String::from).to_vec();
    header.extend(q_columns("norm", q));
    header.extend(q_columns("ratio", q));
    header.extend(["tube_radius", "tube_mass", "l1_ratio", "grid_resolution"].map(String::from));
    let mut table = Table::new(header);
    rec.stage("beam-scan", |_| {
        for fam in families {
            for &deg in l {
                let row = scan.row(&format!("{fam}|{deg}"), || {
                    let wrap = |err| HarnessError::stage("beam-scan", format!("{fam}, l = {deg}"), err);
                    beam_row(*fam, deg, q, *tube_exponent, *grid_resolution).map_err(wrap)
                })?;
                table.push(row);
            }
        }
        Ok(())
    })?;
    rec.write(BEAM_FILE, &table.to_bytes())
}

fn beam_row(
    family: Family,
    degree: u32,
    q: &[Exponent],
    tube_exponent: f64,
    min_res: Option<usize>,
) -> std::result::Result<Vec<String>, CoreError> {
    let ev = match family {
        Family::Beam => gaussian_beam(2, degree)?,
        Family::Zonal => zonal(2, degree, [0.0, 0.0, 1.0])?,
    };
    let lambda = ev.lambda();
    let radius = lambda.powf(-0.5 + tube_exponent);
    let tube = TubeSpec::GreatCircle {
        normal: [0.0, 0.0, 1.0],
        radius,
    };
    // |ψ|⁶ has degree 6l in cos θ; 3l + 1 Gauss nodes integrate it exactly
    let start = ev
        .required_resolution()?
        .max(3 * degree as usize + 2)
        .max(min_res.unwrap_or(0));
    let (grid, mass) = grid_for_tube(&ev, &tube, start)?;
    let l2 = lq_norm(&ev, 2.0, &grid)?;
    let mut norms = Vec::with_capacity(q.len());
    for e in q {
        norms.push(lq_norm(&ev, e.0, &grid)?);
    }
    let l1 = l1_lower_ratio(&ev, lambda, 2, &grid)?;
    let mut row = vec![family.to_string(), degree.to_string(), num(lambda), num(l2)];
    row.extend(norms.iter().map(|&x| num(x)));
    row.extend(norms.iter().map(|&x| num(x / l2)));
    row.extend([num(radius), num(mass), num(l1), grid.resolution().to_string()]);
    Ok(row)
}

fn kernel_decay(config: &ExperimentConfig, rec: &mut Recorder, scan: &mut Scan) -> Result<()> {
    let Experiment::KernelDecay {
        log_lambda,
        z_perp,
        z_parallel,
        c0,
    } = &config.experiment
    else {
        unreachable!()
    };
    let mut params = sclab_core::KnappParams::new(2);
    if let Some(c) = c0 {
        params.c0 = *c;
    }
    let header = [
        "lambda",
        "log_lambda",
        "delta",
        "z_parallel",
        "z_perp",
        "abs_kernel",
        "abs_kernel_origin",
        "ratio",
        "refinement_error",
        "nodes",
    ];
    let mut table = Table::new(header);
    let mut origin: HashMap<u64, f64> = HashMap::new();
    rec.stage("kernel-decay", |_| {
        for &t in log_lambda {
            let lambda = t.exp();
            let delta = 1.0 / t;
            for &zp in z_parallel {
                for &zq in z_perp {
                    let key = format!("{}|{}|{}", num(t), num(zp), num(zq));
                    let row = scan.row(&key, || {
                        let wrap = |err| HarnessError::stage("kernel-decay", format!("λ = e^{t}, z = ({zp}, {zq})"), err);
                        let k0 = match origin.get(&t.to_bits()) {
                            Some(v) => *v,
                            None => {
                                let v = knapp_kernel_rn(&[0.0, 0.0], lambda, delta, &params).map_err(wrap)?.value.norm();
                                origin.insert(t.to_bits(), v);
                                v
                            }
                        };
                        let kz = knapp_kernel_rn(&[zp, zq], lambda, delta, &params).map_err(wrap)?;
                        Ok(vec![
                            num(lambda),
                            num(t),
                            num(delta),
                            num(zp),
                            num(zq),
                            num(kz.value.norm()),
                            num(k0),
                            num(kz.value.norm() / k0),
                            num(kz.refinement_error),
                            kz.nodes.to_string(),
                        ])
                    })?;
                    table.push(row);
                }
            }
        }
        Ok(())
    })?;
    rec.write(KERNEL_FILE, &table.to_bytes())
}

/// Reads a finished run's CSV output.
pub fn read_output(dir: &Path, file: &str) -> Result<Vec<u8>> {
    let path = dir.join(file);
    fs::read(&path).map_err(|e| HarnessError::io("reading output", path, e))
}
