//! Orchestration for the `mxtdr` binary: configuration, forward runs,
//! inversions, convergence studies and basis dumps.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use tdr_core::basis::{stiffness, weighted_gram, TimeGrid};
use tdr_core::data::{add_noise, load_record, project_record, save_record};
use tdr_core::forward::simulate;
use tdr_core::inverse::{invert, Preconditioner};
use tdr_core::phantoms::{benchmark_medium, dice_coefficient, phantom, region_peak_error, regions};
use tdr_core::vtk::write_vtk;
use tdr_core::{
    BasisSet, BoundaryRecord, ForwardConfig, Grid3, NoiseSpec, PhantomId, QRConfig, SolveReport, TraceVariant,
    VectorGrid,
};

pub const RECORD_FILE: &str = "record.mxtdr";
pub const PHANTOM_VTK: &str = "phantom.vtk";
pub const RECONSTRUCTION_VTK: &str = "reconstruction.vtk";
pub const REPORT_JSON: &str = "report.json";
pub const REPORT_CSV: &str = "report.csv";
pub const STUDY_CSV: &str = "study.csv";

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error(transparent)]
    Core(#[from] tdr_core::Error),
    #[error("invalid config key `{key}`: {reason}")]
    Config { key: &'static str, reason: String },
    #[error("config file {path}: {source}")]
    ConfigFile {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl CliError {
    fn io(path: &Path, source: std::io::Error) -> Self {
        CliError::Io { path: path.to_path_buf(), source }
    }

    pub fn category(&self) -> &'static str {
        match self {
            CliError::Core(e) => e.category(),
            CliError::Config { .. } | CliError::ConfigFile { .. } => "config",
            CliError::Io { .. } => "io",
        }
    }

    /// Process exit code for the error's category.
    pub fn exit_code(&self) -> i32 {
        match self.category() {
            "config" => 2,
            "io" => 3,
            "format" => 4,
            "domain" => 5,
            "shape" => 6,
            "medium" => 7,
            "unstable" => 8,
            "region" => 9,
            _ => 1,
        }
    }
}

pub type Result<T> = std::result::Result<T, CliError>;

/// One run's parameters. Missing keys take the benchmark defaults.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub test_id: u8,
    pub grid_n: usize,
    #[serde(rename = "T")]
    pub final_time: f64,
    pub num_samples: usize,
    /// Half-width of the padded simulation cube.
    pub padded_extent: f64,
    pub substeps: usize,
    #[serde(rename = "N")]
    pub order: usize,
    pub epsilon_reg: f64,
    pub delta: f64,
    pub seed: u64,
    pub cg_tol: f64,
    pub cg_max_iter: usize,
    pub preconditioner: Preconditioner,
    pub trace_variant: TraceVariant,
    /// Multiplies every phantom amplitude; 0 gives an all-zero field.
    pub amplitude_scale: f64,
    pub output_dir: PathBuf,
}

impl Default for RunConfig {
    fn default() -> Self {
        let qr = QRConfig::default();
        Self {
            test_id: 1,
            grid_n: 20,
            final_time: 2.5,
            num_samples: 73,
            padded_extent: 2.5,
            substeps: 1,
            order: qr.order,
            epsilon_reg: qr.epsilon_reg,
            delta: 0.10,
            seed: 1,
            cg_tol: qr.cg_tol,
            cg_max_iter: qr.cg_max_iter,
            preconditioner: qr.preconditioner,
            trace_variant: qr.trace_variant,
            amplitude_scale: 1.0,
            output_dir: PathBuf::from("out"),
        }
    }
}

fn bad(key: &'static str, reason: impl Into<String>) -> CliError {
    CliError::Config { key, reason: reason.into() }
}

impl RunConfig {
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        let cfg: RunConfig =
            serde_json::from_str(&text).map_err(|source| CliError::ConfigFile { path: path.to_path_buf(), source })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        PhantomId::new(self.test_id).map_err(|e| bad("test_id", e.to_string()))?;
        if self.grid_n < tdr_core::grid::MIN_NODES {
            return Err(bad("grid_n", format!("needs at least {} nodes", tdr_core::grid::MIN_NODES)));
        }
        if !(self.final_time > 0.0 && self.final_time.is_finite()) {
            return Err(bad("T", "must be positive"));
        }
        if self.num_samples < 2 {
            return Err(bad("num_samples", "needs at least 2 samples"));
        }
        if !(self.padded_extent >= 1.0) {
            return Err(bad("padded_extent", "must be at least the half-width of Omega (1)"));
        }
        if self.substeps == 0 {
            return Err(bad("substeps", "must be positive"));
        }
        if !(self.delta >= 0.0 && self.delta.is_finite()) {
            return Err(bad("delta", "must be non-negative"));
        }
        if !(self.epsilon_reg > 0.0 && self.epsilon_reg.is_finite()) {
            return Err(bad("epsilon_reg", "must be positive"));
        }
        if !(self.cg_tol > 0.0 && self.cg_tol < 1.0) {
            return Err(bad("cg_tol", "must lie in (0, 1)"));
        }
        if !self.amplitude_scale.is_finite() {
            return Err(bad("amplitude_scale", "must be finite"));
        }
        Ok(())
    }

    pub fn phantom_id(&self) -> Result<PhantomId> {
        Ok(PhantomId::new(self.test_id)?)
    }

    pub fn omega(&self) -> Result<Grid3> {
        Ok(Grid3::cube(-1.0, 1.0, self.grid_n)?)
    }

    pub fn time_grid(&self) -> Result<TimeGrid> {
        Ok(TimeGrid::new(self.final_time, self.num_samples)?)
    }

    pub fn forward_config(&self) -> Result<ForwardConfig> {
        Ok(ForwardConfig::new(self.omega()?, self.padded_extent, self.time_grid()?, self.substeps)?
            .with_variant(self.trace_variant))
    }

    pub fn qr_config(&self) -> QRConfig {
        QRConfig {
            order: self.order,
            epsilon_reg: self.epsilon_reg,
            cg_tol: self.cg_tol,
            cg_max_iter: self.cg_max_iter,
            preconditioner: self.preconditioner,
            trace_variant: self.trace_variant,
        }
    }

    /// The ground-truth field on Omega's grid.
    pub fn truth(&self) -> Result<VectorGrid> {
        let mut e0 = phantom(self.phantom_id()?, &self.omega()?);
        e0.scale(self.amplitude_scale);
        Ok(e0)
    }
}

fn ensure_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| CliError::io(path, e))
}

/// Simulates the configured phantom and returns its boundary record.
pub fn forward_record(cfg: &RunConfig) -> Result<BoundaryRecord> {
    cfg.validate()?;
    let fc = cfg.forward_config()?;
    let medium = benchmark_medium(fc.padded_grid());
    Ok(simulate(&cfg.truth()?, &fc, &medium)?)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ForwardOutput {
    pub record: PathBuf,
    pub phantom: PathBuf,
}

pub fn cmd_forward(cfg: &RunConfig) -> Result<ForwardOutput> {
    let record = forward_record(cfg)?;
    ensure_dir(&cfg.output_dir)?;
    let out = ForwardOutput {
        record: cfg.output_dir.join(RECORD_FILE),
        phantom: cfg.output_dir.join(PHANTOM_VTK),
    };
    save_record(&record, &out.record)?;
    write_vtk(&cfg.truth()?, "E0_true", &out.phantom)?;
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegionRow {
    pub label: String,
    pub component: usize,
    pub amplitude: f64,
    pub peak: f64,
    pub relative_error: f64,
    pub reference_error: f64,
    /// Overlap of the half-amplitude level set with the region.
    pub dice: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorReport {
    pub regions: Vec<RegionRow>,
    /// `‖E_comp − E_true‖ / ‖E_true‖` over Omega; 0 when the truth is zero
    /// and the reconstruction is too.
    pub l2_error: f64,
    pub solve: SolveReport,
    pub config: RunConfig,
}

impl ErrorReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes") + "\n"
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("label,component,amplitude,peak,relative_error,reference_error,dice\n");
        for r in &self.regions {
            let _ = writeln!(
                s,
                "{},{},{},{},{},{},{}",
                r.label, r.component, r.amplitude, r.peak, r.relative_error, r.reference_error, r.dice
            );
        }
        let _ = writeln!(s, "omega-l2,,,,{},,", self.l2_error);
        s
    }

    /// Per-region errors next to the reference values.
    pub fn table(&self) -> String {
        let mut s = format!("{:<28} {:>10} {:>10} {:>10}\n", "region", "peak", "error", "reference");
        for r in &self.regions {
            let _ = writeln!(
                s,
                "{:<28} {:>10.4} {:>9.2}% {:>9.2}%",
                r.label,
                r.peak,
                100.0 * r.relative_error,
                100.0 * r.reference_error
            );
        }
        let _ = writeln!(s, "{:<28} {:>10} {:>9.2}%", "Omega L2", "", 100.0 * self.l2_error);
        s
    }
}

pub fn relative_l2(field: &VectorGrid, truth: &VectorGrid) -> f64 {
    let mut d = field.clone();
    d.axpy(-1.0, truth);
    let t = truth.norm_l2();
    if t == 0.0 {
        d.norm_l2()
    } else {
        d.norm_l2() / t
    }
}

pub fn score(field: &VectorGrid, cfg: &RunConfig, solve: SolveReport) -> Result<ErrorReport> {
    let truth = cfg.truth()?;
    let rows = regions(cfg.phantom_id()?)
        .into_iter()
        .map(|spec| {
            let spec = tdr_core::phantoms::RegionSpec { amplitude: spec.amplitude * cfg.amplitude_scale, ..spec };
            let pe = region_peak_error(field, &spec)?;
            Ok(RegionRow {
                dice: dice_coefficient(field, &spec, 0.5 * spec.amplitude),
                label: spec.label,
                component: spec.component,
                amplitude: spec.amplitude,
                peak: pe.peak,
                relative_error: if spec.amplitude == 0.0 { pe.peak.abs() } else { pe.relative_error },
                reference_error: spec.reference_error,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ErrorReport {
        regions: rows,
        l2_error: relative_l2(field, &truth),
        solve,
        config: cfg.clone(),
    })
}

/// Noise, projection, inversion and scoring for an in-memory record.
pub fn invert_record(record: &BoundaryRecord, cfg: &RunConfig) -> Result<(VectorGrid, ErrorReport)> {
    cfg.validate()?;
    let omega = cfg.omega()?;
    if !record.grid().same_shape(&omega) {
        return Err(bad("grid_n", format!("record grid has {:?} nodes", record.grid().dims())));
    }
    if record.variant() != cfg.trace_variant {
        return Err(bad("trace_variant", format!("record carries {:?}", record.variant())));
    }
    let noisy = add_noise(record, &NoiseSpec::new(cfg.delta, cfg.seed)?);
    let basis = BasisSet::new(cfg.order, record.time_grid().final_time())?;
    let modes = project_record(&noisy, &basis)?;
    let medium = benchmark_medium(omega);
    let inv = invert(&modes, &medium, &basis, &cfg.qr_config())?;
    let report = score(&inv.field, cfg, inv.report)?;
    Ok((inv.field, report))
}

pub fn write_report(report: &ErrorReport, field: &VectorGrid, dir: &Path) -> Result<()> {
    ensure_dir(dir)?;
    write_vtk(field, "E_comp", dir.join(RECONSTRUCTION_VTK))?;
    write_text(&dir.join(REPORT_JSON), &report.to_json())?;
    write_text(&dir.join(REPORT_CSV), &report.to_csv())
}

pub fn cmd_invert(record_path: impl AsRef<Path>, cfg: &RunConfig) -> Result<ErrorReport> {
    let record = load_record(record_path)?;
    let (field, report) = invert_record(&record, cfg)?;
    write_report(&report, &field, &cfg.output_dir)?;
    Ok(report)
}

/// Forward run followed by inversion, both inside `cfg.output_dir`.
pub fn cmd_pipeline(cfg: &RunConfig) -> Result<ErrorReport> {
    let fwd = cmd_forward(cfg)?;
    cmd_invert(&fwd.record, cfg)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StudyLevel {
    pub delta: f64,
    pub epsilon_reg: f64,
}

/// Noise levels `δ` with `ε = 1e-5·δ`.
pub fn default_schedule() -> Vec<StudyLevel> {
    [0.10, 0.05, 0.02]
        .into_iter()
        .map(|delta| StudyLevel { delta, epsilon_reg: 1e-5 * delta })
        .collect()
}

/// Parses `δ:ε,δ:ε,...`.
pub fn parse_schedule(s: &str) -> Result<Vec<StudyLevel>> {
    s.split(',')
        .map(|pair| {
            let (d, e) = pair.split_once(':').ok_or_else(|| bad("schedule", format!("`{pair}` is not δ:ε")))?;
            let num = |v: &str| v.trim().parse::<f64>().map_err(|_| bad("schedule", format!("bad number `{v}`")));
            Ok(StudyLevel { delta: num(d)?, epsilon_reg: num(e)? })
        })
        .collect()
}

/// Levels whose `δ²/ε` does not shrink along the schedule.
pub fn schedule_warnings(schedule: &[StudyLevel]) -> Vec<String> {
    schedule
        .windows(2)
        .filter(|w| w[1].delta.powi(2) / w[1].epsilon_reg >= w[0].delta.powi(2) / w[0].epsilon_reg && w[0].delta > 0.0)
        .map(|w| format!("δ²/ε does not decrease from δ={} to δ={}", w[0].delta, w[1].delta))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudyRow {
    pub delta: f64,
    pub epsilon_reg: f64,
    pub seed: u64,
    pub l2_error: f64,
    pub region_errors: Vec<f64>,
}

pub fn study_csv(rows: &[StudyRow]) -> String {
    let width = rows.iter().map(|r| r.region_errors.len()).max().unwrap_or(0);
    let mut s = String::from("delta,epsilon_reg,seed,l2_error");
    for i in 0..width {
        let _ = write!(s, ",region{i}");
    }
    s.push('\n');
    for r in rows {
        let _ = write!(s, "{},{},{},{}", r.delta, r.epsilon_reg, r.seed, r.l2_error);
        for e in &r.region_errors {
            let _ = write!(s, ",{e}");
        }
        s.push('\n');
    }
    s
}

/// Mean L² error per level, in schedule order.
pub fn level_means(schedule: &[StudyLevel], rows: &[StudyRow]) -> Vec<f64> {
    schedule
        .iter()
        .map(|lv| {
            let errs: Vec<f64> = rows
                .iter()
                .filter(|r| r.delta == lv.delta && r.epsilon_reg == lv.epsilon_reg)
                .map(|r| r.l2_error)
                .collect();
            errs.iter().sum::<f64>() / errs.len().max(1) as f64
        })
        .collect()
}

/// One forward run, then one inversion per level and seed. A noiseless
/// level runs once whatever the seeds.
pub fn cmd_study(cfg: &RunConfig, schedule: &[StudyLevel], seeds: &[u64]) -> Result<Vec<StudyRow>> {
    for w in schedule_warnings(schedule) {
        log::warn!("{w}");
    }
    let record = forward_record(cfg)?;
    let mut rows = Vec::new();
    for lv in schedule {
        let level_seeds = if lv.delta == 0.0 { &seeds[..seeds.len().min(1)] } else { seeds };
        for &seed in level_seeds {
            let run = RunConfig { delta: lv.delta, epsilon_reg: lv.epsilon_reg, seed, ..cfg.clone() };
            let (_, report) = invert_record(&record, &run)?;
            log::info!("study δ={} ε={} seed={} L2={}", lv.delta, lv.epsilon_reg, seed, report.l2_error);
            rows.push(StudyRow {
                delta: lv.delta,
                epsilon_reg: lv.epsilon_reg,
                seed,
                l2_error: report.l2_error,
                region_errors: report.regions.iter().map(|r| r.relative_error).collect(),
            });
        }
    }
    ensure_dir(&cfg.output_dir)?;
    write_text(&cfg.output_dir.join(STUDY_CSV), &study_csv(&rows))?;
    Ok(rows)
}

#[derive(Debug, Clone, PartialEq)]
pub struct BasisDump {
    pub psi: String,
    pub gram: String,
    pub stiffness: String,
}

/// CSV tables of `Ψₙ` on the sample grid, the Gram matrix with its
/// deviation from the identity, and the stiffness matrix.
pub fn basis_tables(order: usize, final_time: f64, num_samples: usize) -> Result<BasisDump> {
    let basis = BasisSet::new(order, final_time)?;
    let tg = TimeGrid::new(final_time, num_samples)?;
    let nm = basis.num_modes();
    let mut psi = String::from("t");
    for n in 0..nm {
        let _ = write!(psi, ",psi{n}");
    }
    psi.push('\n');
    for t in tg.times() {
        let _ = write!(psi, "{t}");
        for v in basis.evaluate(t)? {
            let _ = write!(psi, ",{v}");
        }
        psi.push('\n');
    }
    let g = weighted_gram(&basis);
    let s = stiffness(&basis);
    let mut gram = String::from("m,n,gram,residual\n");
    let mut stiff = String::from("m,n,s\n");
    for m in 0..nm {
        for n in 0..nm {
            let ident = if m == n { 1.0 } else { 0.0 };
            let _ = writeln!(gram, "{m},{n},{},{}", g[(m, n)], (g[(m, n)] - ident).abs());
            let _ = writeln!(stiff, "{m},{n},{}", s.get(m, n));
        }
    }
    Ok(BasisDump { psi, gram, stiffness: stiff })
}

pub fn cmd_basis(order: usize, final_time: f64, num_samples: usize, dir: &Path) -> Result<BasisDump> {
    let dump = basis_tables(order, final_time, num_samples)?;
    ensure_dir(dir)?;
    write_text(&dir.join("psi.csv"), &dump.psi)?;
    write_text(&dir.join("gram.csv"), &dump.gram)?;
    write_text(&dir.join("stiffness.csv"), &dump.stiffness)?;
    Ok(dump)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn csv_rows(text: &str) -> Vec<Vec<String>> {
        text.lines().skip(1).map(|l| l.split(',').map(str::to_string).collect()).collect()
    }

    #[test]
    fn defaults_match_the_benchmark_settings() {
        let c = RunConfig::default();
        assert_eq!((c.grid_n, c.num_samples, c.order), (20, 73, 15));
        assert_eq!((c.final_time, c.epsilon_reg, c.delta), (2.5, 1e-6, 0.10));
        let parsed: RunConfig = serde_json::from_str("{}").unwrap();
        assert_eq!(parsed, c);
        let parsed: RunConfig = serde_json::from_str(r#"{"N": 7, "T": 2.0}"#).unwrap();
        assert_eq!((parsed.order, parsed.final_time), (7, 2.0));
    }

    #[test]
    fn validation_names_the_key() {
        for (json, key) in [
            (r#"{"test_id": 4}"#, "test_id"),
            (r#"{"grid_n": 2}"#, "grid_n"),
            (r#"{"epsilon_reg": 0}"#, "epsilon_reg"),
            (r#"{"delta": -0.1}"#, "delta"),
            (r#"{"cg_tol": 1.5}"#, "cg_tol"),
        ] {
            let c: RunConfig = serde_json::from_str(json).unwrap();
            let err = c.validate().unwrap_err();
            assert!(err.to_string().contains(key), "{err}");
            assert_eq!(err.exit_code(), 2);
        }
        assert!(serde_json::from_str::<RunConfig>(r#"{"bogus": 1}"#).is_err());
    }

    #[test]
    fn exit_codes_follow_categories() {
        let fmt: CliError = tdr_core::Error::BadMagic.into();
        assert_eq!(fmt.exit_code(), 4);
        let io = CliError::io(Path::new("x"), std::io::Error::other("boom"));
        assert_eq!(io.exit_code(), 3);
    }

    #[test]
    fn basis_tables_surface_invariants() {
        let d = basis_tables(15, 2.5, 73).unwrap();
        let max_res = csv_rows(&d.gram).iter().map(|r| r[3].parse::<f64>().unwrap()).fold(0.0, f64::max);
        assert!(max_res <= 1e-12, "{max_res}");
        for r in csv_rows(&d.stiffness).iter().filter(|r| r[1] == "0") {
            let expect = if r[0] == "0" { 1.0 } else { 0.0 };
            assert!((r[2].parse::<f64>().unwrap() - expect).abs() <= 1e-12, "{r:?}");
        }
        let first = &csv_rows(&d.psi)[0];
        assert_eq!(first[0], "0");
        assert!((first[1].parse::<f64>().unwrap() - 0.6324555).abs() < 1e-7);
    }

    #[test]
    fn schedule_parsing_and_warnings() {
        let s = parse_schedule("0.1:1e-6, 0.05:5e-7,0.02:2e-7").unwrap();
        assert_eq!(s.len(), 3);
        assert_eq!(s[1], StudyLevel { delta: 0.05, epsilon_reg: 5e-7 });
        assert!(schedule_warnings(&s).is_empty());
        assert!(schedule_warnings(&default_schedule()).is_empty());
        let bad = parse_schedule("0.02:2e-7,0.1:1e-6").unwrap();
        assert_eq!(schedule_warnings(&bad).len(), 1);
        assert!(parse_schedule("0.1").is_err());
    }

    #[test]
    fn study_csv_has_one_row_per_run() {
        let rows: Vec<StudyRow> = (0..3)
            .map(|seed| StudyRow { delta: 0.1, epsilon_reg: 1e-6, seed, l2_error: 0.5, region_errors: vec![0.1, 0.2] })
            .collect();
        let csv = study_csv(&rows);
        assert_eq!(csv.lines().count(), 4);
        assert!(csv.starts_with("delta,epsilon_reg,seed,l2_error,region0,region1\n"));
        assert_eq!(level_means(&[StudyLevel { delta: 0.1, epsilon_reg: 1e-6 }], &rows), vec![0.5]);
    }
}
