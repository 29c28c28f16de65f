//! Dispatch of validated configs to the owning modules.
//!
//! Reports are computed in memory first and written afterwards, so a module
//! error leaves nothing behind; a write error removes what was written.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rand::Rng;
use serde::Serialize;
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use super::config::*;
use super::plot::{emit_plots, PlotKind};
use crate::cohomology::{livsic_solve, CocycleWeight};
use crate::error::{LabError, Result};
use crate::lp_calculus::checks::{default_phi, default_psi, dyadic_h_sample};
use crate::lp_calculus::{norm_equivalence_check, ConeSymbol, CutoffSpec, Grid2Field, LPFilterBank, RadialProfile};
use crate::mls_stretch::{conformal_linearization_experiment, mixed_perturbation_family, mls_compare, roof_id, stability_experiment};
use crate::orbits::ShorteningDisc;
use crate::rng::split;
use crate::source_lab::{make_radial_pair, propagation_sweep, pushforward_cover, smooth_field, source_estimate_sweep, trajectory_cover, FamilyKind, FamilySpec, Section};
use crate::systems::{
    bolza_systole, cat_map_system, fuchsian_bolza, lyapunov_data, perturbed_cat_map, projector_lie_residual, suspension_flow, AnosovFlow, AnosovMap, SystemRef,
    TrigPerturbation,
};
use crate::thresholds::{foliation_threshold, forward_threshold, MetricChoice, RhoGrid};

pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");
pub const MANIFEST_NAME: &str = "manifest.json";
pub const RESOLVED_CONFIG_NAME: &str = "config.resolved.json";

/// Outcome of one configured check.
#[derive(Clone, Debug, Serialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl Check {
    fn new(name: &str, passed: bool, detail: String) -> Self {
        Check { name: name.to_string(), passed, detail }
    }
}

/// Record of a run. Everything except `wall_time_s` is a function of the
/// resolved config and the tool version.
#[derive(Clone, Debug, Serialize)]
pub struct RunManifest {
    pub kind: ExperimentKind,
    pub config_hash: String,
    pub tool_version: String,
    pub seed: u64,
    pub wall_time_s: f64,
    /// Paths relative to the output directory, including the manifest.
    pub files: Vec<String>,
    pub checks: Vec<Check>,
    pub passed: bool,
}

impl RunManifest {
    pub fn exit_code(&self) -> i32 {
        if self.passed {
            0
        } else {
            1
        }
    }
}

/// In-memory results of a run before anything touches the disk.
#[derive(Default)]
struct Outputs {
    files: Vec<(String, Vec<u8>)>,
    checks: Vec<Check>,
    /// Report file and the plot kind it feeds.
    plots: Vec<(String, PlotKind)>,
}

impl Outputs {
    fn text(&mut self, name: String, body: String) {
        self.files.push((name, body.into_bytes()));
    }

    fn json(&mut self, name: String, v: &impl Serialize) {
        let mut s = serde_json::to_string_pretty(v).expect("report serializes");
        s.push('\n');
        self.text(name, s);
    }

    fn check(&mut self, name: &str, passed: bool, detail: String) {
        self.checks.push(Check::new(name, passed, detail));
    }
}

pub fn config_hash(config: &ExperimentConfig) -> String {
    let digest = Sha256::digest(config.canonical_json().as_bytes());
    digest.iter().map(|b| format!("{b:02x}")).collect()
}

/// Runs the experiment and writes its reports and manifest into `out_dir`.
pub fn run_experiment(config: &ExperimentConfig, out_dir: &Path, plots: bool) -> Result<RunManifest> {
    let start = Instant::now();
    let mut out = dispatch(config).map_err(|e| context(config.kind, e))?;
    out.json(RESOLVED_CONFIG_NAME.to_string(), config);

    let mut written: Vec<PathBuf> = Vec::new();
    let created_dir = !out_dir.exists();
    let result = (|| -> Result<Vec<String>> {
        fs::create_dir_all(out_dir)?;
        let mut names = Vec::new();
        for (name, bytes) in &out.files {
            let p = out_dir.join(name);
            fs::write(&p, bytes)?;
            written.push(p);
            names.push(name.clone());
        }
        if plots {
            for (report, kind) in &out.plots {
                for p in emit_plots(&out_dir.join(report), *kind)? {
                    names.push(p.file_name().unwrap().to_string_lossy().into_owned());
                    written.push(p);
                }
            }
        }
        Ok(names)
    })();
    let mut names = match result {
        Ok(n) => n,
        Err(e) => {
            cleanup(&written, out_dir, created_dir);
            return Err(e);
        }
    };
    names.push(MANIFEST_NAME.to_string());
    names.sort();
    let passed = out.checks.iter().all(|c| c.passed);
    let manifest = RunManifest {
        kind: config.kind,
        config_hash: config_hash(config),
        tool_version: TOOL_VERSION.to_string(),
        seed: config.seed,
        wall_time_s: start.elapsed().as_secs_f64(),
        files: names,
        checks: out.checks,
        passed,
    };
    let mut s = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
    s.push('\n');
    if let Err(e) = fs::write(out_dir.join(MANIFEST_NAME), s) {
        cleanup(&written, out_dir, created_dir);
        return Err(e.into());
    }
    Ok(manifest)
}

fn cleanup(written: &[PathBuf], out_dir: &Path, created_dir: bool) {
    for p in written {
        let _ = fs::remove_file(p);
    }
    if created_dir {
        let _ = fs::remove_dir(out_dir);
    }
}

fn context(kind: ExperimentKind, e: LabError) -> LabError {
    match e {
        LabError::Config(m) => LabError::Config(format!("{kind}: {m}")),
        LabError::InvalidInput(m) => LabError::InvalidInput(format!("{kind}: {m}")),
        LabError::Validation(m) => LabError::Validation(format!("{kind}: {m}")),
        other => other,
    }
}

fn dispatch(c: &ExperimentConfig) -> Result<Outputs> {
    match &c.params {
        KindParams::Norms(p) => run_norms(c, p),
        KindParams::Livsic(p) => run_livsic(c, p),
        KindParams::Threshold(p) => run_threshold(c, p),
        KindParams::SourceSweep(p) => run_source_sweep(c, p),
        KindParams::Propagation(p) => run_propagation(c, p),
        KindParams::Foliation(p) => run_foliation(c, p),
        KindParams::Mls(p) => run_mls(c, p),
        KindParams::StretchStability(p) => run_stability(c, p),
        KindParams::Conformal(p) => run_conformal(c, p),
    }
}

enum Built {
    Map(AnosovMap),
    Flow(AnosovFlow),
}

impl Built {
    fn sys(&self) -> SystemRef<'_> {
        match self {
            Built::Map(m) => SystemRef::Map(m),
            Built::Flow(f) => SystemRef::Flow(f),
        }
    }
}

fn build_system(spec: &SystemSpec, n: usize) -> Result<Built> {
    match spec {
        SystemSpec::Cat { matrix } => Ok(Built::Map(cat_map_system(*matrix)?)),
        SystemSpec::PerturbedCat { matrix, epsilon, perturbation } => {
            Ok(Built::Map(perturbed_cat_map(&cat_map_system(*matrix)?, *epsilon, perturbation.clone(), n)?))
        }
        SystemSpec::Suspension { matrix, roof } => {
            Ok(Built::Flow(suspension_flow(&cat_map_system(*matrix)?, &Grid2Field::constant(n, *roof)?)?))
        }
        SystemSpec::Bolza => Err(LabError::InvalidInput("the bolza surface is not a toral system".into())),
    }
}

fn base_matrix(c: &ExperimentConfig) -> Result<crate::mat::Mat2i> {
    c.system.matrix().ok_or_else(|| LabError::InvalidInput("experiment needs a toral system".into()))
}

fn e(v: f64) -> String {
    format!("{v:.17e}")
}

fn run_norms(c: &ExperimentConfig, p: &NormsParams) -> Result<Outputs> {
    let n = c.grid.n_side;
    let bank = LPFilterBank::cached(&[n, n], CutoffSpec::default())?;
    let (phi, psi) = (default_phi(), default_psi());
    let hs = dyadic_h_sample(p.h0, &phi, n);
    let mut csv = String::from("sample,reconstruction_rel_l2,hz_norm,equivalence_ratio\n");
    let mut band_max = vec![0.0f64; bank.j_max() as usize + 1];
    let (mut worst, mut lo, mut hi) = (0.0f64, f64::INFINITY, 0.0f64);
    for i in 0..p.samples {
        let f = smooth_field(n, p.max_mode, p.decay, c.seed, i as u64)?;
        let rel = bank.reconstruct(&f).sub(&f).l2_norm() / f.l2_norm();
        let eq = norm_equivalence_check(&f, p.s, p.h0, &phi, &psi, &hs)?;
        for (j, b) in bank.band_sup_norms(&f).into_iter().enumerate() {
            band_max[j] = band_max[j].max(b);
        }
        worst = worst.max(rel);
        lo = lo.min(eq.ratio);
        hi = hi.max(eq.ratio);
        csv.push_str(&format!("{i},{},{},{}\n", e(rel), e(eq.norm_b), e(eq.ratio)));
    }
    let mut out = Outputs::default();
    out.check("reconstruction", worst <= p.reconstruction_tol, format!("max relative L2 error {worst:.3e} <= {:.1e}", p.reconstruction_tol));
    out.check("equivalence_ratio_finite", lo > 0.0 && hi.is_finite(), format!("ratio interval [{lo:.6}, {hi:.6}]"));
    out.text("norms.csv".into(), csv);
    let bands: Vec<Value> = band_max.iter().enumerate().map(|(j, v)| json!({ "j": j, "sup": v })).collect();
    out.json(
        "norms.json".into(),
        &json!({
            "experiment": "norms",
            "s": p.s,
            "h0": p.h0,
            "samples": p.samples,
            "max_reconstruction_error": worst,
            "ratio_interval": [lo, hi],
            "band_profile": bands,
        }),
    );
    out.plots.push(("norms.json".into(), PlotKind::BandDecay));
    Ok(out)
}

fn run_livsic(c: &ExperimentConfig, p: &LivsicParams) -> Result<Outputs> {
    let n = c.grid.n_side;
    let m = base_matrix(c)?;
    let mut csv = String::from("sample,recovery_error,residual\n");
    let (mut worst, mut worst_res) = (0.0f64, 0.0f64);
    for i in 0..p.samples {
        let u = smooth_field(n, p.max_mode, p.decay, c.seed, i as u64)?;
        let u = u.sub(&Grid2Field::constant(n, u.mean().re)?);
        let f = u.compose_linear(m).sub(&u);
        let sol = livsic_solve(m, &f, n as f64)?;
        let rec = sol.u.sub(&Grid2Field::constant(n, sol.u.mean().re)?);
        let err = rec.sub(&u).max_abs();
        worst = worst.max(err);
        worst_res = worst_res.max(sol.residual);
        csv.push_str(&format!("{i},{},{}\n", e(err), e(sol.residual)));
    }
    let mut out = Outputs::default();
    out.check("recovery", worst <= p.tol, format!("max sup error {worst:.3e} <= {:.1e}", p.tol));
    out.check("residual", worst_res <= p.tol, format!("max residual {worst_res:.3e} <= {:.1e}", p.tol));
    out.text("livsic.csv".into(), csv);
    out.json(
        "livsic.json".into(),
        &json!({ "experiment": "livsic", "samples": p.samples, "max_recovery_error": worst, "max_residual": worst_res }),
    );
    Ok(out)
}

fn run_threshold(c: &ExperimentConfig, p: &ThresholdParams) -> Result<Outputs> {
    let sys = build_system(&c.system, c.grid.n_side)?;
    let w = CocycleWeight::Potential(p.weight.to_field(c.grid.n_side)?);
    let rep = forward_threshold(sys.sys(), &w, p.max_period, RhoGrid { step: p.rho_step, max: p.rho_max }, MetricChoice::Flat)?;
    let mut out = Outputs::default();
    out.check(
        "threshold_finite",
        rep.omega_plus.is_finite() && rep.omega_minus.is_finite(),
        format!("omega_+ = {:.12}, omega_- = {:.12}", rep.omega_plus, rep.omega_minus),
    );
    if let Some(x) = p.expect_omega_plus {
        let d = (rep.omega_plus - x).abs();
        out.check("expected_omega_plus", d <= p.rho_step, format!("|omega_+ - {x}| = {d:.3e} <= {}", p.rho_step));
    }
    let mut csv = String::from("id,period,time,weight_rate,unstable_rate,stable_rate\n");
    for r in &rep.table {
        csv.push_str(&format!("{},{},{},{},{},{}\n", r.id, r.period, e(r.time), e(r.weight_rate), e(r.unstable_rate), e(r.stable_rate)));
    }
    out.text("threshold.csv".into(), csv);
    let mut v = serde_json::to_value(&rep).expect("report serializes");
    v["experiment"] = json!("threshold");
    out.json("threshold.json".into(), &v);
    out.plots.push(("threshold.json".into(), PlotKind::Threshold));
    Ok(out)
}

fn run_source_sweep(c: &ExperimentConfig, p: &SourceSweepParams) -> Result<Outputs> {
    let n = c.grid.n_side;
    let sys = build_system(&c.system, n)?;
    let pair = make_radial_pair(sys.sys(), p.half_angle, p.h0, None)?;
    let weight = p.weight.as_ref().map(|w| w.to_field(n).map(CocycleWeight::Potential)).transpose()?;
    let fam = FamilySpec { n, samples: p.samples, seed: c.seed, kind: FamilyKind::Quasimode };
    let mut out = Outputs::default();
    let mut sweeps = Vec::new();
    for &rho in &p.rho {
        let rep = source_estimate_sweep(sys.sys(), &pair, rho, p.n_neg, &p.h_list, &fam, weight.as_ref())?;
        let spread = rep.max_ratio_spread();
        let slope = rep.median_fit.as_ref().map(|f| f.slope);
        match p.expect {
            Some(Expectation::Bounded) => out.check(
                &format!("bounded_rho_{rho}"),
                spread < p.max_spread,
                format!("max ratio spread {spread:.4} < {}", p.max_spread),
            ),
            Some(Expectation::Divergence) => out.check(
                &format!("divergence_rho_{rho}"),
                slope.is_some_and(|s| s >= p.min_divergent_slope),
                format!("median slope {slope:?} >= {}", p.min_divergent_slope),
            ),
            None => out.check(&format!("finite_rho_{rho}"), spread.is_finite(), format!("max ratio spread {spread:.4}")),
        }
        out.text(format!("source-sweep_rho{rho}.csv"), rep.to_csv());
        sweeps.push(json!({
            "rho": rho,
            "omega": rep.omega,
            "horizon": rep.horizon,
            "regime": rep.regime,
            "predicted_slope": rep.predicted_slope,
            "median_fit": rep.median_fit,
            "max_fit": rep.max_fit,
            "max_ratio_spread": spread,
            "skipped": rep.skipped,
            "per_h": rep.per_h,
        }));
    }
    out.json(
        "source-sweep.json".into(),
        &json!({ "experiment": "source-sweep", "n_neg": p.n_neg, "samples": p.samples, "sweeps": sweeps }),
    );
    out.plots.push(("source-sweep.json".into(), PlotKind::RatioVsH));
    Ok(out)
}

fn run_propagation(c: &ExperimentConfig, p: &PropagationParams) -> Result<Outputs> {
    let n = c.grid.n_side;
    let sys = build_system(&c.system, n)?;
    let sec = Section::of(sys.sys())?;
    let (s, co) = p.axis_from_stable_deg.to_radians().sin_cos();
    let cs = sec.cov_s;
    let axis = [co * cs[0] - s * cs[1], s * cs[0] + co * cs[1]];
    let [r0, r1, r2, r3] = p.radial;
    let a = ConeSymbol::cone(&axis, p.half_angle, 0.25, RadialProfile::annulus(r0, r1, r2, r3)?)?;
    let d = pushforward_cover(sys.sys(), &a, p.time)?;
    let b = trajectory_cover(sys.sys(), &a, p.time)?;
    let fam = FamilySpec { n, samples: p.samples, seed: c.seed, kind: FamilyKind::Smooth { max_mode: p.max_mode, decay: p.decay } };
    let rep = propagation_sweep(sys.sys(), &a, &b, &d, p.s, p.n_neg, p.time, &fam, None)?;
    let mut out = Outputs::default();
    out.check(
        "propagation_bounded",
        rep.max_ratio.is_finite() && rep.max_ratio <= p.max_ratio,
        format!("max ratio {:.6} <= {}", rep.max_ratio, p.max_ratio),
    );
    let mut csv = String::from("sample,a_norm,b_norm,d_norm,negative_norm,ratio\n");
    for r in &rep.rows {
        let ratio = r.ratio.map(e).unwrap_or_default();
        csv.push_str(&format!("{},{},{},{},{},{ratio}\n", r.sample, e(r.a_norm), e(r.b_norm), e(r.d_norm), e(r.negative_norm)));
    }
    out.text("propagation.csv".into(), csv);
    out.json(
        "propagation.json".into(),
        &json!({
            "experiment": "propagation",
            "max_ratio": rep.max_ratio,
            "median_ratio": rep.median_ratio,
            "covectors_checked": rep.covectors_checked,
            "time": rep.time,
            "s": rep.s,
            "n_neg": rep.n_neg,
        }),
    );
    Ok(out)
}

fn run_foliation(c: &ExperimentConfig, p: &FoliationParams) -> Result<Outputs> {
    let sys = build_system(&c.system, c.grid.n_side)?;
    let mut rng = split(c.seed, "foliation", 0);
    let pts: Vec<[f64; 2]> = (0..p.points).map(|_| [rng.gen_range(0.0..1.0), rng.gen_range(0.0..1.0)]).collect();
    let lyap = lyapunov_data(sys.sys(), &pts, p.horizon)?;
    let volume_3d = matches!(sys, Built::Flow(_));
    let bound = foliation_threshold(&lyap, volume_3d)?;
    let linear = !matches!(c.system, SystemSpec::PerturbedCat { .. });
    let mut out = Outputs::default();
    if linear {
        out.check("bound_equals_two", (bound - 2.0).abs() <= 1e-12, format!("bound {bound:.15}"));
    } else {
        out.check("bound_finite", bound.is_finite() && bound > 0.0, format!("bound {bound:.15}"));
    }
    let base = cat_map_system(base_matrix(c)?)?;
    let pert = perturbed_cat_map(&base, p.epsilon, TrigPerturbation::sin_x2(), c.grid.n_side)?;
    let mut csv = String::from("step,linear_residual,perturbed_residual\n");
    let mut lin_max = 0.0f64;
    let mut pert_res = Vec::new();
    for &h in &p.steps {
        let l = projector_lie_residual(&base, &pts, h, 5)?.residual;
        let q = projector_lie_residual(&pert, &pts, h, 40)?.residual;
        lin_max = lin_max.max(l);
        pert_res.push(q);
        csv.push_str(&format!("{},{},{}\n", e(h), e(l), e(q)));
    }
    out.check("linear_lie_residual", lin_max < 1e-12, format!("max residual {lin_max:.3e} < 1e-12"));
    let mut order: Vec<usize> = (0..p.steps.len()).collect();
    order.sort_by(|&i, &j| p.steps[j].total_cmp(&p.steps[i]));
    let decreasing = order.windows(2).all(|w| pert_res[w[1]] < pert_res[w[0]]);
    out.check("perturbed_lie_residual_decreases", decreasing, format!("residuals {pert_res:?} as the step shrinks"));
    out.text("foliation.csv".into(), csv);
    out.json(
        "foliation.json".into(),
        &json!({ "experiment": "foliation", "bound": bound, "volume_preserving_3d": volume_3d, "lyapunov": lyap, "epsilon": p.epsilon }),
    );
    Ok(out)
}

fn run_mls(c: &ExperimentConfig, p: &MlsParams) -> Result<Outputs> {
    let n = c.grid.n_side;
    let base = cat_map_system(base_matrix(c)?)?;
    let r = p.roof_ref.to_field(n)?;
    let rp = p.roof_target.to_field(n)?;
    let cmp = mls_compare(&suspension_flow(&base, &r)?, &suspension_flow(&base, &rp)?, p.max_period)?;
    let mut out = Outputs::default();
    out.check(
        "stretch_reproduces_periods",
        cmp.max_abs_residual <= p.tol,
        format!("max |residual| {:.3e} <= {:.1e} over {} orbits", cmp.max_abs_residual, p.tol, cmp.rows.len()),
    );
    out.text("mls.csv".into(), cmp.to_csv());
    out.json(
        "mls.json".into(),
        &json!({
            "experiment": "mls",
            "reference": roof_id(&r),
            "target": roof_id(&rp),
            "max_period": cmp.max_period,
            "orbits": cmp.rows.len(),
            "max_abs_residual": cmp.max_abs_residual,
        }),
    );
    Ok(out)
}

fn run_stability(c: &ExperimentConfig, p: &StabilityParams) -> Result<Outputs> {
    let n = c.grid.n_side;
    let m = base_matrix(c)?;
    let base = cat_map_system(m)?;
    let r0 = p.roof.to_field(n)?;
    let mut out = Outputs::default();
    let mut reports = Vec::new();
    for &amp in &p.amplitudes {
        let family = mixed_perturbation_family(m, n, p.samples, amp, c.seed)?;
        let rep = stability_experiment(&base, &r0, &family, p.max_period, p.nu)?;
        out.check(
            &format!("ratios_finite_amp_{amp}"),
            rep.flagged == 0 && rep.constant.is_some_and(f64::is_finite),
            format!("constant {:?}, {} flagged, {} coboundaries skipped", rep.constant, rep.flagged, rep.skipped),
        );
        out.text(format!("stretch-stability_amp{amp}.csv"), rep.to_csv());
        reports.push((amp, rep));
    }
    let mut worst = 0.0f64;
    for (_, rep) in &reports[1..] {
        for (a, b) in reports[0].1.rows.iter().zip(&rep.rows) {
            if let (Some(x), Some(y)) = (a.ratio, b.ratio) {
                worst = worst.max((x / y - 1.0).abs());
            }
        }
    }
    if reports.len() > 1 {
        out.check("scale_invariance", worst <= p.homogeneity_tol, format!("max relative ratio change {worst:.3e} <= {}", p.homogeneity_tol));
    }
    let summary: Vec<Value> = reports
        .iter()
        .map(|(amp, r)| json!({ "amplitude": amp, "constant": r.constant, "skipped": r.skipped, "flagged": r.flagged }))
        .collect();
    out.json(
        "stretch-stability.json".into(),
        &json!({ "experiment": "stretch-stability", "nu": p.nu, "max_period": p.max_period, "amplitudes": summary, "max_relative_change": worst }),
    );
    Ok(out)
}

fn run_conformal(_c: &ExperimentConfig, p: &ConformalParams) -> Result<Outputs> {
    let group = fuchsian_bolza()?;
    let disc = ShorteningDisc { n_points: p.n_points, ..Default::default() };
    let res = conformal_linearization_experiment(&group, &p.sigma, &p.eps, &p.words, &disc)?;
    let systole = bolza_systole();
    let mut out = Outputs::default();
    let mut csv = String::from("word,eps,length,remainder,iterations\n");
    for ws in &res {
        let name = ws.word.iter().map(|l| l.to_string()).collect::<Vec<_>>().join("-");
        let slope = ws.fit.as_ref().map(|f| f.slope);
        out.check(
            &format!("slope_{name}"),
            slope.is_some_and(|s| s >= p.slope_range[0] && s <= p.slope_range[1]),
            format!("remainder slope {slope:?} in [{}, {}]", p.slope_range[0], p.slope_range[1]),
        );
        let target = if (ws.l0 - systole).abs() < 1e-9 { systole } else { ws.l0 };
        let d = (ws.l0_minimizer - target).abs();
        out.check(&format!("minimizer_length_{name}"), d <= 1e-6, format!("|L_min - L_0| = {d:.3e} <= 1e-6"));
        for r in &ws.rows {
            csv.push_str(&format!("{name},{},{},{},{}\n", e(r.eps), e(r.length), e(r.remainder), r.iterations));
        }
    }
    out.text("conformal.csv".into(), csv);
    out.json("conformal.json".into(), &json!({ "experiment": "conformal", "systole": systole, "words": res }));
    out.plots.push(("conformal.json".into(), PlotKind::SlopeFit));
    Ok(out)
}
