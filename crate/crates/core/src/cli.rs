//! The `torsion` command: load a scenario, run one suite, write the report.
//!
//! Exit status: 0 when every check passes, 1 when a check fails, 2 when the
//! scenario cannot be read or parsed, 3 when it parses but fails validation.

use std::path::{Path, PathBuf};

use clap::{Parser, ValueEnum};
use rayon::prelude::*;

use crate::complex::TorsionMode;
use crate::cone::{self, Morphism};
use crate::detclass::{self, Family};
use crate::error::{Error, Result};
use crate::morse::{self, HermitianStructure, TransportGraph};
use crate::random;
use crate::report::{num, Check, Report, Table};
use crate::scenario::{AnomalySpec, DetclassSpec, Loaded, Scenario, WittenSpec};
use crate::witten::{self, HeightOperator};

pub const EXIT_OK: i32 = 0;
pub const EXIT_CHECK: i32 = 1;
pub const EXIT_PARSE: i32 = 2;
pub const EXIT_VALIDATION: i32 = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Suite {
    Torsion,
    Cone,
    Milnor,
    Cmm,
    Morse,
    Anomaly,
    Witten,
    Detclass,
    Selftest,
}

impl Suite {
    pub fn name(self) -> &'static str {
        match self {
            Suite::Torsion => "torsion",
            Suite::Cone => "cone",
            Suite::Milnor => "milnor",
            Suite::Cmm => "cmm",
            Suite::Morse => "morse",
            Suite::Anomaly => "anomaly",
            Suite::Witten => "witten",
            Suite::Detclass => "detclass",
            Suite::Selftest => "selftest",
        }
    }
}

#[derive(Debug, Clone, Parser)]
#[command(name = "torsion", version, about = "Relative torsion checks driven by scenario files")]
pub struct Cli {
    /// Which suite to run.
    #[arg(value_enum)]
    pub suite: Suite,
    /// Scenario file (JSON).
    pub scenario: PathBuf,
    /// Seed for the random suites; overrides the scenario's seed.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Multiply every tolerance by this factor.
    #[arg(long, default_value_t = 1.0)]
    pub tolerance_scale: f64,
    /// Worker threads for sweeps and random suites.
    #[arg(long)]
    pub threads: Option<usize>,
    /// Directory for the report and CSV files.
    #[arg(long, default_value = ".")]
    pub out_dir: PathBuf,
    /// Refuse complexes with nonzero reduced cohomology when computing torsion.
    #[arg(long)]
    pub strict: bool,
}

/// Entry point shared by the binary and the tests.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_PARSE } else { EXIT_OK };
        }
    };
    match run(&cli) {
        Ok(report) => {
            print!("{}", report.to_text());
            if let Err(e) = report.emit(&cli.out_dir) {
                eprintln!("error: cannot write report to {}: {e}", cli.out_dir.display());
                return EXIT_CHECK;
            }
            if report.passed() {
                EXIT_OK
            } else {
                EXIT_CHECK
            }
        }
        Err(Failure::Parse(msg)) => {
            eprintln!("parse error: {msg}");
            EXIT_PARSE
        }
        Err(Failure::Validation(msg)) => {
            eprintln!("validation error: {msg}");
            EXIT_VALIDATION
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Failure {
    Parse(String),
    Validation(String),
}

/// Load the scenario and run the suite; the report is not written.
pub fn run(cli: &Cli) -> std::result::Result<Report, Failure> {
    let bytes = std::fs::read(&cli.scenario).map_err(|e| Failure::Parse(format!("{}: {e}", cli.scenario.display())))?;
    let text = std::str::from_utf8(&bytes).map_err(|e| Failure::Parse(format!("{}: {e}", cli.scenario.display())))?;
    let scenario = Scenario::parse(text).map_err(|e| Failure::Parse(format!("{}: {e}", cli.scenario.display())))?;
    if !(cli.tolerance_scale > 0.0) || !cli.tolerance_scale.is_finite() {
        return Err(Failure::Validation(format!("tolerance scale must be positive, got {}", cli.tolerance_scale)));
    }
    let loaded = scenario.load().map_err(|e| Failure::Validation(e.to_string()))?;
    let seed = cli.seed.or(loaded.scenario.seed).unwrap_or(0);
    let label = loaded.scenario.name.clone().unwrap_or_else(|| file_label(&cli.scenario));
    let mut report = Report::new(cli.suite.name(), &label, &bytes, seed);
    let ctx = Ctx { loaded: &loaded, seed, tol_scale: cli.tolerance_scale, strict: cli.strict };
    let pool = {
        let mut b = rayon::ThreadPoolBuilder::new();
        if let Some(n) = cli.threads {
            b = b.num_threads(n.max(1));
        }
        b.build().map_err(|e| Failure::Validation(format!("thread pool: {e}")))?
    };
    pool.install(|| run_suite(cli.suite, &ctx, &mut report));
    Ok(report)
}

fn file_label(p: &Path) -> String {
    p.file_name().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default()
}

pub struct Ctx<'a> {
    pub loaded: &'a Loaded,
    pub seed: u64,
    pub tol_scale: f64,
    pub strict: bool,
}

impl Ctx<'_> {
    fn tol(&self, t: f64) -> f64 {
        t * self.tol_scale
    }
    fn mode(&self) -> TorsionMode {
        if self.strict {
            TorsionMode::Strict
        } else {
            TorsionMode::Lenient
        }
    }
}

pub fn run_suite(suite: Suite, ctx: &Ctx, rep: &mut Report) {
    match suite {
        Suite::Torsion => {
            scenario_complexes(ctx, rep);
            if ctx.loaded.scenario.random.is_some() {
                random_torsion(ctx, rep);
            }
        }
        Suite::Cone => {
            scenario_morphisms(ctx, rep);
            if ctx.loaded.scenario.random.is_some() {
                random_cone(ctx, rep);
            }
        }
        Suite::Milnor => random_milnor(ctx, rep),
        Suite::Cmm => random_cmm(ctx, rep),
        Suite::Morse => scenario_morse(ctx, rep),
        Suite::Anomaly => {
            for (i, a) in ctx.loaded.scenario.anomaly.iter().enumerate() {
                anomaly_run(ctx, a, i, rep);
            }
        }
        Suite::Witten => {
            for (i, w) in ctx.loaded.scenario.witten.iter().enumerate() {
                witten_run(ctx, w, i, rep);
            }
        }
        Suite::Detclass => {
            for (i, d) in ctx.loaded.scenario.detclass.iter().enumerate() {
                detclass_run(ctx, d, &ctx.loaded.families[i], i, rep);
            }
        }
        Suite::Selftest => {
            scenario_complexes(ctx, rep);
            scenario_morphisms(ctx, rep);
            for s in [Suite::Morse, Suite::Anomaly, Suite::Witten, Suite::Detclass] {
                run_suite(s, ctx, rep);
            }
            random_torsion(ctx, rep);
            random_cone(ctx, rep);
            random_milnor(ctx, rep);
            random_cmm(ctx, rep);
        }
    }
}

/// Largest value; NaN wins so that it fails the comparison downstream.
fn max_of(v: impl IntoIterator<Item = f64>) -> f64 {
    v.into_iter().fold(0.0, |a, x| if x.is_nan() || x > a { x } else { a })
}

/// One check from many cases: the largest residual against `tol`, or the
/// first error.
fn aggregate(name: &str, anchor: &str, results: Vec<Result<f64>>, tol: f64) -> Check {
    let n = results.len();
    let mut worst = 0.0f64;
    for (i, r) in results.into_iter().enumerate() {
        match r {
            Ok(x) => worst = max_of([worst, x]),
            Err(e) => return Check::failed(name, anchor, format!("case {i}: {e}")),
        }
    }
    let mut c = Check::small(name, anchor, "max_residual", worst, tol);
    c.values.push(("cases".into(), n as f64));
    c
}

// ---------- complexes and morphisms from the scenario ----------

fn scenario_complexes(ctx: &Ctx, rep: &mut Report) {
    for (name, cx) in &ctx.loaded.complexes {
        let r = cx.torsion_report();
        let mut c = Check::small(
            format!("torsion formulas agree: {name}"),
            "weighted Laplacian sum, coimage and image determinants give one value",
            "spread",
            r.spread(),
            ctx.tol(1e-9),
        );
        c.values.extend([("weighted".into(), r.weighted), ("via_minus".into(), r.via_minus), ("via_plus".into(), r.via_plus)]);
        rep.checks.push(c);
        match cx.torsion(ctx.mode()) {
            Ok(t) => {
                rep.results.push((format!("torsion {name}"), num(t)));
                if let Some(e) = ctx.loaded.scenario.complexes[name].expect_torsion {
                    rep.checks.push(Check::close(
                        format!("torsion matches expected: {name}"),
                        "value supplied with the scenario",
                        t,
                        e,
                        ctx.tol(1e-10),
                    ));
                }
            }
            Err(e) => rep.checks.push(Check::failed(format!("torsion: {name}"), "torsion of the complex", e)),
        }
    }
}

fn scenario_morphisms(ctx: &Ctx, rep: &mut Report) {
    for (name, f) in &ctx.loaded.morphisms {
        match cone::cone_torsion(f) {
            Ok(t) => {
                rep.results.push((format!("cone torsion {name}"), num(t)));
                if let Some(e) = ctx.loaded.scenario.morphisms[name].expect_cone_torsion {
                    rep.checks.push(Check::close(
                        format!("cone torsion matches expected: {name}"),
                        "value supplied with the scenario",
                        t,
                        e,
                        ctx.tol(1e-10),
                    ));
                }
                if let Ok(s) = cone::morphism_log_vol_sum(f) {
                    rep.checks.push(Check::close(
                        format!("cone torsion of an isomorphism: {name}"),
                        "cone torsion equals the alternating sum of log volumes of the components",
                        t,
                        s,
                        ctx.tol(1e-8),
                    ));
                }
            }
            Err(e) => rep.checks.push(Check::failed(format!("cone torsion: {name}"), "torsion of the mapping cone", e)),
        }
        let lap: Vec<Result<f64>> = (0..=f.len()).map(|i| cone::cone_laplacian_check(f, i)).collect();
        rep.checks.push(aggregate(
            &format!("cone Laplacian block formula: {name}"),
            "cone Laplacian assembled from the Laplacians and components",
            lap,
            ctx.tol(1e-10),
        ));
    }
}

// ---------- seeded random suites ----------

fn cases<T: Send>(ctx: &Ctx, salt: u64, f: impl Fn(&mut random::TestRng) -> Result<T> + Sync) -> Vec<Result<T>> {
    let n = ctx.loaded.random().count as u64;
    (0..n)
        .into_par_iter()
        .map(|i| {
            let mut rng = random::rng(ctx.seed.wrapping_mul(1_000_003).wrapping_add(salt * 65_536 + i));
            f(&mut rng)
        })
        .collect()
}

fn split3(v: Vec<Result<(f64, f64, f64)>>) -> (Vec<Result<f64>>, Vec<Result<f64>>, Vec<Result<f64>>) {
    let mut a = Vec::new();
    let mut b = Vec::new();
    let mut c = Vec::new();
    for r in v {
        match r {
            Ok((x, y, z)) => {
                a.push(Ok(x));
                b.push(Ok(y));
                c.push(Ok(z));
            }
            Err(e) => {
                a.push(Err(e.clone()));
                b.push(Err(e.clone()));
                c.push(Err(e));
            }
        }
    }
    (a, b, c)
}

fn random_torsion(ctx: &Ctx, rep: &mut Report) {
    let spec = ctx.loaded.random();
    let b = &ctx.loaded.backend;
    let res = cases(ctx, 1, |rng| {
        let cx = random::acyclic_complex(rng, b, spec.length, spec.max_rank)?.complex;
        let r = cx.torsion_report();
        let t = cx.torsion(TorsionMode::Strict)?;
        let dual = (cx.dual()?.torsion(TorsionMode::Strict)? - t).abs();
        let susp = (cx.suspension()?.torsion(TorsionMode::Strict)? + t).abs();
        Ok((r.spread(), dual, susp))
    });
    let (spread, dual, susp) = split3(res);
    rep.checks.push(aggregate(
        "random complexes: torsion formulas agree",
        "weighted Laplacian sum, coimage and image determinants give one value",
        spread,
        ctx.tol(1e-9),
    ));
    rep.checks.push(aggregate("random complexes: duality", "the dual complex has the same torsion", dual, ctx.tol(1e-9)));
    rep.checks.push(aggregate("random complexes: suspension", "suspension negates torsion", susp, ctx.tol(1e-9)));
    let shift = cases(ctx, 2, |rng| {
        let cx = random::acyclic_complex(rng, b, spec.length, spec.max_rank)?.complex;
        let (plain, powered) = cx.unit_shift_identity(-0.5)?;
        Ok(plain.abs().max(powered.abs()))
    });
    rep.checks.push(aggregate(
        "random complexes: unit-shift alternating sum",
        "alternating log-determinants of shifted Laplacians vanish",
        shift,
        ctx.tol(1e-9),
    ));
}

fn random_cone(ctx: &Ctx, rep: &mut Report) {
    let spec = ctx.loaded.random();
    let b = &ctx.loaded.backend;
    let res = cases(ctx, 3, |rng| {
        let cx = random::acyclic_complex(rng, b, spec.length, spec.max_rank)?.complex;
        let f = random::isomorphism(rng, &cx)?;
        let iso = (cone::cone_torsion(&f)? - cone::morphism_log_vol_sum(&f)?).abs();
        let id = cone::cone_torsion(&Morphism::identity(&cx)?)?.abs();
        let lap = (0..=f.len()).map(|i| cone::cone_laplacian_check(&f, i)).collect::<Result<Vec<_>>>()?;
        Ok((iso, id, max_of(lap)))
    });
    let (iso, id, lap) = split3(res);
    rep.checks.push(aggregate(
        "random isomorphisms: cone torsion",
        "cone torsion equals the alternating sum of log volumes of the components",
        iso,
        ctx.tol(1e-8),
    ));
    rep.checks.push(aggregate("random complexes: identity cone", "the cone of the identity has zero torsion", id, ctx.tol(1e-10)));
    rep.checks.push(aggregate(
        "random isomorphisms: cone Laplacian",
        "cone Laplacian assembled from the Laplacians and components",
        lap,
        ctx.tol(1e-10),
    ));
    let res = cases(ctx, 4, |rng| {
        let cx = random::acyclic_complex(rng, b, spec.length, spec.max_rank)?.complex;
        let f1 = random::isomorphism(rng, &cx)?;
        let f2 = random::isomorphism(rng, &f1.target)?;
        let (l, r) = cone::composition_rule(&f1, &f2)?;
        let w = random::isometry(rng, &f1.target)?;
        let (a, bb) = cone::isometry_absorption(&f1, &w)?;
        Ok(((l - r).abs(), (a - bb).abs(), 0.0))
    });
    let (comp, absorb, _) = split3(res);
    rep.checks.push(aggregate(
        "random isomorphisms: composition",
        "cone torsion is additive under composition",
        comp,
        ctx.tol(1e-8),
    ));
    rep.checks.push(aggregate(
        "random isomorphisms: isometry absorption",
        "composing with an isometric isomorphism leaves cone torsion unchanged",
        absorb,
        ctx.tol(1e-10),
    ));
}

fn random_milnor(ctx: &Ctx, rep: &mut Report) {
    let spec = ctx.loaded.random();
    let b = &ctx.loaded.backend;
    let res = cases(ctx, 5, |rng| {
        let ses = random::acyclic_ses(rng, b, spec.length, spec.max_rank)?;
        Ok(cone::milnor_identity(&ses)?.residual())
    });
    rep.checks.push(aggregate(
        "random acyclic short exact sequences: torsion identity",
        "middle torsion from sub, quotient, cohomology sequence and rows",
        res,
        ctx.tol(1e-8),
    ));
    let res = cases(ctx, 6, |rng| {
        let n = spec.length;
        let sub: Vec<usize> = (0..n).map(|i| usize::from(i % 2 == 0)).collect();
        let quot: Vec<usize> = (0..n).map(|i| usize::from(i % 2 == 1)).collect();
        let ses = random::ses_with_cohomology(rng, b, &sub, &quot, true)?;
        Ok(cone::milnor_identity(&ses)?.residual())
    });
    rep.checks.push(aggregate(
        "random short exact sequences with cohomology: torsion identity",
        "middle torsion from sub, quotient, cohomology sequence and rows",
        res,
        ctx.tol(1e-8),
    ));
}

fn random_cmm(ctx: &Ctx, rep: &mut Report) {
    let spec = ctx.loaded.random();
    let b = &ctx.loaded.backend;
    let grid = [0.0, 0.25, 0.5, 0.75, 1.0];
    let res = cases(ctx, 7, |rng| {
        let ses = random::acyclic_ses(rng, b, spec.length, spec.max_rank)?;
        let (l, r) = cone::cmm_additivity(&ses)?;
        let probe = cone::cmm_deformation_probe(&ses, &grid)?;
        let deriv = max_of(probe.iter().map(|p| p.derivative.abs()));
        let blocks = max_of(probe.iter().map(|p| p.a41.max(p.epsilon)));
        Ok(((l - r).abs(), deriv, blocks))
    });
    let (add, deriv, blocks) = split3(res);
    rep.checks.push(aggregate(
        "random upper-triangular complexes: additivity",
        "torsion of an upper-triangular acyclic complex is the sum over the diagonal",
        add,
        ctx.tol(1e-8),
    ));
    rep.checks.push(aggregate(
        "deformation probe: derivative",
        "torsion is constant along the scaled coupling",
        deriv,
        ctx.tol(1e-6),
    ));
    rep.checks.push(aggregate(
        "deformation probe: vanishing blocks",
        "the off-diagonal blocks that must vanish along the deformation",
        blocks,
        ctx.tol(1e-10),
    ));
}

// ---------- Morse complexes ----------

fn scenario_morse(ctx: &Ctx, rep: &mut Report) {
    for (name, m) in &ctx.loaded.morse {
        let spec = &ctx.loaded.scenario.morse[name];
        let rho = &ctx.loaded.representations[&spec.representation];
        let mu = ctx.loaded.structure(spec.hermitian.as_ref());
        let cx = match morse::build_complex(m, rho, &mu) {
            Ok(cx) => cx,
            Err(e) => {
                rep.checks.push(Check::failed(format!("morse complex: {name}"), "combinatorial complex from incidences", e));
                continue;
            }
        };
        let betti = cx.betti();
        rep.results.push((format!("betti {name}"), betti.iter().map(|b| num(*b)).collect::<Vec<_>>().join(" ")));
        let t = match cx.torsion(ctx.mode()) {
            Ok(t) => t,
            Err(e) => {
                rep.checks.push(Check::failed(format!("morse torsion: {name}"), "torsion of the combinatorial complex", e));
                continue;
            }
        };
        rep.results.push((format!("torsion {name}"), num(t)));
        if let Some(e) = spec.expect_torsion {
            rep.checks.push(Check::close(
                format!("morse torsion matches expected: {name}"),
                "value supplied with the scenario",
                t,
                e,
                ctx.tol(1e-10),
            ));
        }
        let flips: Vec<Result<f64>> = m
            .all_cells()
            .map(|(_, x)| {
                let f = m.flip_orientation(x)?;
                Ok((morse::build_complex(&f, rho, &mu)?.torsion(ctx.mode())? - t).abs())
            })
            .collect();
        rep.checks.push(aggregate(
            &format!("orientation independence: {name}"),
            "reversing the orientation of a cell leaves torsion unchanged",
            flips,
            ctx.tol(1e-10),
        ));
    }
}

// ---------- anomaly ----------

fn anomaly_run(ctx: &Ctx, a: &AnomalySpec, idx: usize, rep: &mut Report) {
    let l = &ctx.loaded;
    let label = a.name.clone().unwrap_or_else(|| idx.to_string());
    let s = &l.subdivisions[&a.subdivision];
    let rho = &l.representations[&a.representation];
    let mu = l.structure(a.hermitian.as_ref());
    let names: Vec<String> =
        if a.triangulations.is_empty() { s.triangulations.keys().cloned().collect() } else { a.triangulations.clone() };
    let torsions: Vec<Result<f64>> = names.par_iter().map(|t| morse::triangulation_torsion(s, t, rho, &mu)).collect();
    let omega = |t1: &str, t2: &str, t0: &str| morse::subdivision_weight(s, t1, t2, t0, rho, &mu);
    // every common subdivision, coarsest first
    let bases = |ts: &[&str]| -> Result<Vec<String>> {
        let mut b = morse::common_subdivisions(s, ts)?;
        if b.is_empty() {
            return Err(Error::Lookup(format!("no common subdivision of {}", ts.join(", "))));
        }
        b.sort_by_key(|n| (s.triangulations[n].morse.all_cells().count(), n.clone()));
        Ok(b)
    };
    for (n, t) in names.iter().zip(&torsions) {
        if let Ok(v) = t {
            rep.results.push((format!("{label} relative torsion {n}"), num(*v)));
        }
    }
    for i in 0..names.len() {
        for j in i + 1..names.len() {
            let (t1, t2) = (names[i].as_str(), names[j].as_str());
            let pair = format!("{label} {t1} -> {t2}");
            let diff = match (&torsions[i], &torsions[j]) {
                (Ok(a), Ok(b)) => Ok(b - a),
                (Err(e), _) | (_, Err(e)) => Err(e.clone()),
            };
            let weights = bases(&[t1, t2]).and_then(|b| b.iter().map(|t0| omega(t1, t2, t0)).collect::<Result<Vec<f64>>>());
            match (&diff, &weights) {
                (Ok(d), Ok(w)) => {
                    let d = *d;
                    rep.checks.push(Check::close(
                        format!("subdivision anomaly, stated sign: {pair}"),
                        "difference of relative torsions equals minus the transport weight",
                        d,
                        -w[0],
                        ctx.tol(1e-9),
                    ));
                    rep.checks.push(Check::close(
                        format!("subdivision anomaly, cone form: {pair}"),
                        "difference of relative torsions equals the transport weight, as the cone of the subdivision map gives",
                        d,
                        w[0],
                        ctx.tol(1e-9),
                    ));
                }
                (Err(e), _) | (_, Err(e)) => {
                    rep.checks.push(Check::failed(format!("subdivision anomaly: {pair}"), "relative torsion and transport weight", e))
                }
            }
            let indep = weights.clone().map(|v| {
                let lo = v.iter().copied().fold(f64::INFINITY, f64::min);
                let hi = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                hi - lo
            });
            let mut c = aggregate(
                &format!("transport weight independent of base: {pair}"),
                "the weight computed over any common subdivision agrees",
                vec![indep],
                ctx.tol(1e-10),
            );
            if let Ok(w) = &weights {
                c.values.push(("bases".into(), w.len() as f64));
            }
            rep.checks.push(c);
            for t3 in names[j + 1..].iter().map(String::as_str) {
                let r = (|| {
                    let t0 = &bases(&[t1, t2, t3])?[0];
                    Ok((omega(t1, t2, t0)? + omega(t2, t3, t0)? - omega(t1, t3, t0)?).abs())
                })();
                rep.checks.push(aggregate(
                    &format!("transport weight cocycle: {label} {t1}, {t2}, {t3}"),
                    "weights add along a chain of triangulations",
                    vec![r],
                    ctx.tol(1e-10),
                ));
            }
        }
    }
    // relative torsion with a parallel structure
    let g = TransportGraph::from_subdivision(s);
    match morse::unimodular_normalize(&g, rho, &mu) {
        Ok(par) => {
            let r: Vec<Result<f64>> =
                names.par_iter().map(|t| morse::triangulation_torsion(s, t, rho, &par).map(f64::abs)).collect();
            rep.checks.push(aggregate(
                &format!("{label}: parallel structure has trivial relative torsion"),
                "cone torsion of the subdivision map vanishes when every transport is volume preserving",
                r,
                ctx.tol(1e-9),
            ));
        }
        Err(Error::NonUnimodular(msg)) => rep.results.push((format!("{label} parallel check"), format!("skipped: {msg}"))),
        Err(e) => rep.checks.push(Check::failed(format!("{label}: parallel structure"), "unimodular normalization", e)),
    }
    if let Some(h2) = &a.hermitian2 {
        hermitian_checks(ctx, &label, s, &names, rho, &mu, &l.hermitian[h2], rep);
    }
}

#[allow(clippy::too_many_arguments)]
fn hermitian_checks(
    ctx: &Ctx,
    label: &str,
    s: &morse::SubdivisionData,
    names: &[String],
    rho: &morse::Representation,
    mu1: &HermitianStructure,
    mu2: &HermitianStructure,
    rep: &mut Report,
) {
    let fiber = rho.module();
    let g = TransportGraph::from_subdivision(s);
    let std = HermitianStructure::standard();
    let r = (|| -> Result<(f64, f64, f64)> {
        let v12 = morse::v_function(&g.points, &fiber, mu1, mu2)?;
        let v21 = morse::v_function(&g.points, &fiber, mu2, mu1)?;
        let v13 = morse::v_function(&g.points, &fiber, mu1, &std)?;
        let v23 = morse::v_function(&g.points, &fiber, mu2, &std)?;
        let anti = max_of(g.points.iter().map(|x| (v12[x] + v21[x]).abs()));
        let chain = max_of(g.points.iter().map(|x| (v13[x] - v12[x] - v23[x]).abs()));
        let th1 = morse::theta_cochain(&g, rho, mu1)?;
        let th2 = morse::theta_cochain(&g, rho, mu2)?;
        let dv = g.coboundary(&v21)?;
        let cob = max_of(th1.iter().zip(&th2).zip(&dv).map(|((a, b), d)| (a - b - d).abs()));
        Ok((anti, chain, cob))
    })();
    let (anti, chain, cob) = split3(vec![r]);
    rep.checks.push(aggregate(&format!("{label}: V antisymmetry"), "swapping the structures negates V", anti, ctx.tol(1e-12)));
    rep.checks.push(aggregate(&format!("{label}: V chain rule"), "V is additive along three structures", chain, ctx.tol(1e-12)));
    rep.checks.push(aggregate(
        &format!("{label}: theta coboundary"),
        "the change of theta on every edge is the coboundary of V",
        cob,
        ctx.tol(1e-10),
    ));
    for t in names {
        let r = morse::hermitian_anomaly(s, t, rho, mu1, mu2, ctx.mode()).map(|a| a.residual());
        rep.checks.push(aggregate(
            &format!("{label}: hermitian anomaly {t}"),
            "change of relative torsion equals the alternating V sums over coarse and fine cells",
            vec![r],
            ctx.tol(1e-9),
        ));
    }
}

// ---------- Witten deformation ----------

fn witten_run(ctx: &Ctx, w: &WittenSpec, idx: usize, rep: &mut Report) {
    let l = &ctx.loaded;
    let label = w.name.clone().unwrap_or_else(|| idx.to_string());
    let s = &l.subdivisions[&w.subdivision];
    let rho = &l.representations[&w.representation];
    let mu = l.structure(w.hermitian.as_ref());
    let setup = (|| -> Result<(Morphism, HeightOperator)> {
        let int = morse::subdivision_map(s, &w.triangulation, rho, &mu)?;
        let h = HeightOperator::self_indexing(&s.fine, int.source.modules(), rho.rank(), |x| {
            w.offsets.get(x).copied().unwrap_or(0.0)
        })?;
        Ok((int, h))
    })();
    let (int, h) = match setup {
        Ok(v) => v,
        Err(e) => {
            rep.checks.push(Check::failed(format!("witten {label}: setup"), "subdivision map and heights", e));
            return;
        }
    };
    let split_ts = w.split.clone().unwrap_or_else(|| w.grid.clone());
    let mut ts: Vec<f64> = w.grid.iter().chain(&split_ts).copied().collect();
    ts.sort_by(f64::total_cmp);
    ts.dedup();
    let totals: Vec<Result<f64>> = ts.par_iter().map(|&t| witten::deformed_relative_torsion(&int, &h, t)).collect();
    let splits: Vec<Result<witten::SplitReport>> =
        split_ts.par_iter().map(|&t| witten::split_additivity(&int, &h, t)).collect();
    let expected = h.alternating_trace();
    let at = |t: f64| ts.iter().position(|&x| x == t).and_then(|i| totals[i].clone().ok());
    match (&expected, w.grid.iter().map(|&t| at(t).ok_or(t)).collect::<std::result::Result<Vec<f64>, f64>>()) {
        (Ok(slope), Ok(values)) => {
            let dd = max_of(witten::second_differences(&w.grid, &values));
            rep.checks.push(Check::small(
                format!("witten {label}: affine in t"),
                "deformed relative torsion is affine in the deformation parameter",
                "max_second_difference",
                dd,
                ctx.tol(1e-8),
            ));
            let res = max_of(w.grid.iter().zip(&values).map(|(t, v)| (v - values[0] - slope * (t - w.grid[0])).abs()));
            let (ls, _) = witten::least_squares(&w.grid, &values);
            let mut c = Check::small(
                format!("witten {label}: slope"),
                "slope equals the alternating von Neumann trace of the heights",
                "max_residual",
                res,
                ctx.tol(1e-8),
            );
            c.values.extend([("fitted_slope".into(), ls), ("expected_slope".into(), *slope)]);
            rep.checks.push(c);
        }
        (Err(e), _) => rep.checks.push(Check::failed(format!("witten {label}: slope"), "trace of the heights", e)),
        (_, Err(t)) => {
            let e = ts.iter().zip(&totals).find(|(x, _)| **x == t).and_then(|(_, r)| r.clone().err());
            rep.checks.push(Check::failed(
                format!("witten {label}: affine in t"),
                "deformed relative torsion",
                e.map(|e| e.to_string()).unwrap_or_default(),
            ));
        }
    }
    let split_res: Vec<Result<f64>> = splits.iter().map(|r| r.as_ref().map(|s| s.residual()).map_err(Clone::clone)).collect();
    rep.checks.push(aggregate(
        &format!("witten {label}: small/large split"),
        "relative torsion is the small-part cone torsion plus the large-part torsion",
        split_res,
        ctx.tol(1e-8),
    ));
    for r in splits.iter().flatten() {
        if r.split.relocated {
            rep.results.push((format!("witten {label} split threshold at t={}", num(r.t)), num(r.split.threshold)));
        }
    }
    let rows = ts
        .iter()
        .zip(&totals)
        .map(|(&t, tot)| {
            let sp = split_ts.iter().position(|&x| x == t).and_then(|i| splits[i].as_ref().ok());
            let total = tot.as_ref().ok().copied();
            let slope_res = match (total, &expected, at(w.grid[0])) {
                (Some(v), Ok(sl), Some(v0)) => Some(v - v0 - sl * (t - w.grid[0])),
                _ => None,
            };
            vec![Some(t), total, sp.map(|s| s.sm), sp.map(|s| s.la), slope_res]
        })
        .collect();
    rep.tables.push(Table {
        file: format!("witten-{label}.csv"),
        header: ["t", "total", "sm", "la", "slope_residual"].iter().map(|s| s.to_string()).collect(),
        rows,
    });
    if let Some(sc) = &w.scaling {
        scaling_checks(ctx, &label, s, &w.triangulation, rho, &mu, sc, rep);
    }
}

#[allow(clippy::too_many_arguments)]
fn scaling_checks(
    ctx: &Ctx,
    label: &str,
    s: &morse::SubdivisionData,
    tri: &str,
    rho: &morse::Representation,
    mu: &HermitianStructure,
    sc: &crate::scenario::ScalingSpec,
    rep: &mut Report,
) {
    let r = (|| -> Result<Vec<(f64, f64, bool, f64)>> {
        let m = &s.triangulation(tri)?.morse;
        let cx = morse::build_complex(m, rho, mu)?;
        let counts = m.counts();
        sc.t.iter()
            .map(|&t| {
                let closed = witten::scaling_torsion(&counts, rho.rank(), sc.n, t)?;
                let cone = cone::cone_torsion(&witten::scaling_morphism(&cx, sc.n, t)?)?;
                Ok((cone, closed.cone_sum, closed.coefficients_match(), closed.expansion))
            })
            .collect()
    })();
    match r {
        Ok(v) => {
            for (t, (cone, sum, matched, expansion)) in sc.t.iter().zip(v) {
                rep.checks.push(Check::close(
                    format!("witten {label}: scaling cone torsion at t={}", num(*t)),
                    "cone torsion of the scaling morphism equals its closed form",
                    cone,
                    sum,
                    ctx.tol(1e-9) * sum.abs().max(1.0),
                ));
                rep.checks.push(Check::holds(
                    format!("witten {label}: scaling coefficients at t={}", num(*t)),
                    "t and log(pi/t) coefficients of the expansion match the cone torsion term by term",
                    matched,
                    vec![("expansion".into(), expansion), ("cone_sum".into(), sum)],
                ));
            }
        }
        Err(e) => rep.checks.push(Check::failed(format!("witten {label}: scaling"), "scaling morphism", e)),
    }
}

// ---------- determinant class ----------

fn detclass_run(ctx: &Ctx, d: &DetclassSpec, family: &Family, idx: usize, rep: &mut Report) {
    let label = d.name.clone().unwrap_or_else(|| idx.to_string());
    let probe = match detclass::divergence_probe(family, &d.grids) {
        Ok(p) => p,
        Err(e) => {
            rep.checks.push(Check::failed(format!("detclass {label}"), "divergence probe", e));
            return;
        }
    };
    rep.results.push((format!("detclass {label} family"), family.name()));
    rep.results.push((format!("detclass {label} verdict"), probe.verdict.to_string()));
    let mass: Vec<Result<f64>> = d
        .grids
        .par_iter()
        .map(|&n| {
            let f = family.grid(n)?;
            Ok((detclass::mult_spectrum(&f).ambient_dim() - 1.0).abs())
        })
        .collect();
    rep.checks.push(aggregate(
        &format!("detclass {label}: spectral mass"),
        "the empirical spectral measure has total mass one",
        mass,
        ctx.tol(1e-12),
    ));
    let n0 = d.grids[0];
    if n0 <= 1024 {
        let r = (|| -> Result<Option<f64>> {
            let f = family.grid(n0)?;
            if f.samples.iter().any(|z| z.norm() == 0.0) {
                return Ok(None);
            }
            let direct = detclass::circle_complex(&f)?.torsion(false)?;
            Ok(Some((direct - detclass::circle_torsion(&f, TorsionMode::Lenient)?).abs()))
        })();
        match r {
            Ok(Some(x)) => rep.checks.push(Check::small(
                format!("detclass {label}: circle complex at n={n0}"),
                "torsion of the two-term complex equals the mean log modulus",
                "residual",
                x,
                ctx.tol(1e-10),
            )),
            Ok(None) => rep.results.push((format!("detclass {label} circle complex"), "skipped: samples underflow".into())),
            Err(e) => rep.checks.push(Check::failed(format!("detclass {label}: circle complex"), "two-term complex", e)),
        }
    }
    let rows =
        probe.grids.iter().zip(&probe.partial).zip(&probe.torsion).map(|((n, p), t)| vec![Some(*n as f64), Some(*p), *t]).collect();
    rep.tables.push(Table {
        file: format!("detclass-{label}.csv"),
        header: ["n", "partial_logdet", "circle_torsion"].iter().map(|s| s.to_string()).collect(),
        rows,
    });
}
