//! Command-line front end.
//!
//! Exit codes: 0 success, 2 configuration error, 3 numerical failure.
//! Numerical failures still write whatever was computed.

pub mod config;
pub mod format;

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::classical::turning_points;
use crate::ebk::{ebk_spectrum, QuantumNumbers};
use crate::error::{Error, Result};
use crate::oracle::{oracle_eigenvalue, OracleConfig};
use crate::potentials::{PotentialModel, SolverConfig};
use crate::qmf::{build_contour, quantum_action, transport_with_retry};
use crate::quantize::{qhj_level, spectrum, Methods, SpectrumRow};
use crate::wkb::{residue_identity_check, wkb_energy};

use config::{build_model, build_system, parse_coordinate, parse_list, parse_params, PotentialSpec, RunConfig};
use format::{fmt_g, opt, opt_int, write_csv};

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_NUMERIC: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "qhj", version, about = "Bound-state quantization via the quantum momentum function")]
struct Cli {
    /// JSON run configuration; flags override its values.
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,
    #[arg(long, global = true, value_name = "X")]
    hbar: Option<f64>,
    /// Write output here instead of stdout.
    #[arg(long, global = true, value_name = "PATH")]
    out: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,
    /// Accepted for compatibility; nothing in this tool is random.
    #[arg(long, global = true)]
    seedless: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Debug, Args)]
struct PotentialArgs {
    /// harmonic, morse, quartic or polynomial.
    #[arg(long)]
    potential: Option<String>,
    /// Comma-separated name=value pairs, e.g. `D=8,a=1` or `c2=0.5,c4=1`.
    #[arg(long)]
    params: Option<String>,
    #[arg(long)]
    mass: Option<f64>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Energy table for levels 0..=N.
    Spectrum {
        #[command(flatten)]
        pot: PotentialArgs,
        #[arg(long, value_name = "N")]
        levels: Option<usize>,
        /// Subset of qhj,wkb,oracle,closed.
        #[arg(long)]
        methods: Option<String>,
    },
    /// Contour action report for one level, with a margin and resolution sweep.
    Verify {
        #[command(flatten)]
        pot: PotentialArgs,
        #[arg(long)]
        level: Option<usize>,
        #[arg(long)]
        margins: Option<String>,
    },
    /// Turning-point residue check at the given energies.
    WkbCheck {
        #[command(flatten)]
        pot: PotentialArgs,
        #[arg(long)]
        energies: Option<String>,
    },
    /// Separable multi-coordinate quantization.
    Ebk {
        /// KIND[:name=value,...], once per coordinate.
        #[arg(long = "coord", value_name = "SPEC")]
        coords: Vec<String>,
        /// Quantum numbers, one per coordinate, e.g. `2,1`.
        #[arg(long, allow_hyphen_values = true)]
        qn: Option<String>,
    },
    /// WKB against the oracle while halving hbar.
    HbarScan {
        #[command(flatten)]
        pot: PotentialArgs,
        #[arg(long)]
        level: Option<usize>,
        #[arg(long)]
        halvings: Option<usize>,
    },
}

/// Outcome of a command that got past validation.
struct Output {
    text: String,
    failures: Vec<String>,
}

pub fn run() -> i32 {
    run_from(std::env::args_os())
}

pub fn run_from<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    match execute(&cli) {
        Ok(out) => {
            if let Err(e) = emit(cli.out.as_ref(), &out.text) {
                eprintln!("error: {e}");
                return EXIT_CONFIG;
            }
            for f in &out.failures {
                eprintln!("error: {f}");
            }
            if out.failures.is_empty() {
                EXIT_OK
            } else {
                EXIT_NUMERIC
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            if e.is_config_error() {
                EXIT_CONFIG
            } else {
                EXIT_NUMERIC
            }
        }
    }
}

fn emit(path: Option<&PathBuf>, text: &str) -> Result<()> {
    let fail = |e: std::io::Error| Error::InvalidConfig(format!("cannot write output: {e}"));
    match path {
        Some(p) => std::fs::write(p, text).map_err(fail),
        None => std::io::stdout().write_all(text.as_bytes()).map_err(fail),
    }
}

fn config_err(msg: impl Into<String>) -> Error {
    Error::InvalidConfig(msg.into())
}

fn execute(cli: &Cli) -> Result<Output> {
    let rc = match &cli.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    let mut cfg = rc.solver;
    if let Some(h) = cli.hbar {
        cfg.hbar = h;
    }
    cfg.validate()?;
    rc.oracle.validate()?;
    let table_format = cli.format.unwrap_or(Format::Csv);
    let report_only = |name: &str| -> Result<()> {
        if cli.format == Some(Format::Csv) {
            return Err(config_err(format!("{name} writes a JSON report; --format csv is not available")));
        }
        Ok(())
    };

    match &cli.command {
        Command::Spectrum { pot, levels, methods } => {
            let model = resolve_model(pot, &rc)?;
            let n_max = levels
                .or(rc.levels)
                .ok_or_else(|| config_err("spectrum needs --levels"))?;
            let methods = match methods.as_deref().or(rc.methods.as_deref()) {
                Some(list) => Methods::parse(list)?,
                None => Methods::ALL,
            };
            Ok(cmd_spectrum(&model, n_max, methods, &cfg, &rc.oracle, table_format))
        }
        Command::Verify { pot, level, margins } => {
            report_only("verify")?;
            let model = resolve_model(pot, &rc)?;
            let margins = match margins {
                Some(list) => parse_list::<f64>(list, "margin")?,
                None => rc.margins.clone().unwrap_or_else(|| vec![cfg.contour_margin]),
            };
            if margins.is_empty() {
                return Err(config_err("--margins is empty"));
            }
            let sweep: Vec<SolverConfig> = margins
                .iter()
                .flat_map(|&m| {
                    [cfg.contour_nodes, 2 * cfg.contour_nodes].map(|nodes| SolverConfig {
                        contour_margin: m,
                        contour_nodes: nodes,
                        ..cfg
                    })
                })
                .collect();
            for c in &sweep {
                c.validate()?;
            }
            cmd_verify(&model, level.or(rc.level).unwrap_or(0), &cfg, &sweep)
        }
        Command::WkbCheck { pot, energies } => {
            report_only("wkb-check")?;
            let model = resolve_model(pot, &rc)?;
            let energies = match energies {
                Some(list) => Some(parse_list::<f64>(list, "energy")?),
                None => rc.energies.clone(),
            };
            if let Some(bad) = energies.iter().flatten().find(|e| !e.is_finite()) {
                return Err(config_err(format!("energy {bad} is not finite")));
            }
            cmd_wkb_check(&model, energies, &cfg)
        }
        Command::Ebk { coords, qn } => {
            let specs = if coords.is_empty() {
                rc.system.clone().ok_or_else(|| config_err("ebk needs --coord for each coordinate"))?
            } else {
                coords.iter().map(|c| parse_coordinate(c)).collect::<Result<Vec<_>>>()?
            };
            let system = build_system(&specs)?;
            let qn = match qn {
                Some(list) => parse_list::<i64>(list, "quantum number")?,
                None => rc.qn.clone().ok_or_else(|| config_err("ebk needs --qn"))?,
            };
            let qn = QuantumNumbers::new(&qn)?;
            if qn.n.len() != system.dimension() {
                return Err(config_err(format!(
                    "{} quantum numbers given for {} coordinates",
                    qn.n.len(),
                    system.dimension()
                )));
            }
            cmd_ebk(&system, &qn, &cfg, table_format)
        }
        Command::HbarScan { pot, level, halvings } => {
            let model = resolve_model(pot, &rc)?;
            let halvings = halvings.or(rc.halvings).unwrap_or(3);
            if halvings > 30 {
                return Err(config_err(format!("--halvings {halvings} is too many (at most 30)")));
            }
            Ok(cmd_hbar_scan(
                &model,
                level.or(rc.level).unwrap_or(0),
                halvings,
                &cfg,
                &rc.oracle,
                table_format,
            ))
        }
    }
}

/// Flags win over the config file field by field.
fn resolve_model(args: &PotentialArgs, rc: &RunConfig) -> Result<PotentialModel> {
    let mut spec = match (&args.potential, &rc.potential) {
        (Some(kind), Some(file)) if *kind == file.kind => file.clone(),
        (Some(kind), _) => PotentialSpec {
            kind: kind.clone(),
            params: Default::default(),
            mass: None,
        },
        (None, Some(file)) => file.clone(),
        (None, None) => return Err(config_err("no potential given (use --potential or a config file)")),
    };
    if let Some(p) = &args.params {
        spec.params = parse_params(p)?;
    }
    if args.mass.is_some() {
        spec.mass = args.mass;
    }
    build_model(&spec.kind, &spec.params, spec.mass)
}

fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("report serializes");
    s.push('\n');
    s
}

fn csv_text(header: &[&str], rows: &[Vec<String>]) -> String {
    let mut buf = Vec::new();
    write_csv(&mut buf, header, rows).expect("in-memory write");
    String::from_utf8(buf).expect("utf-8 table")
}

pub const SPECTRUM_COLUMNS: [&str; 10] = [
    "n",
    "E_qhj",
    "E_wkb",
    "E_oracle",
    "E_closed_form",
    "J_over_hbar",
    "node_count",
    "residual_quantization",
    "residual_im",
    "residual_closure",
];

/// CSV rendering of spectrum rows; the `error` column appears only when needed.
pub fn spectrum_csv(rows: &[SpectrumRow]) -> String {
    let with_error = rows.iter().any(|r| r.error.is_some());
    let mut header = SPECTRUM_COLUMNS.to_vec();
    if with_error {
        header.push("error");
    }
    let body: Vec<Vec<String>> = rows
        .iter()
        .map(|r| {
            let mut v = vec![
                r.n.to_string(),
                opt(r.e_qhj),
                opt(r.e_wkb),
                opt(r.e_oracle),
                opt(r.e_closed_form),
                opt(r.j_over_hbar),
                opt_int(r.node_count),
                opt(r.residual_quantization),
                opt(r.residual_im),
                opt(r.residual_closure),
            ];
            if with_error {
                v.push(r.error.clone().unwrap_or_default());
            }
            v
        })
        .collect();
    csv_text(&header, &body)
}

fn cmd_spectrum(
    model: &PotentialModel,
    n_max: usize,
    methods: Methods,
    cfg: &SolverConfig,
    ocfg: &OracleConfig,
    fmt: Format,
) -> Output {
    let outcomes = spectrum(model, n_max, methods, cfg, ocfg);
    let failures = outcomes.iter().filter_map(|o| o.row.error.clone()).collect();
    let rows: Vec<SpectrumRow> = outcomes.into_iter().map(|o| o.row).collect();
    let text = match fmt {
        Format::Csv => spectrum_csv(&rows),
        Format::Json => to_json(&rows),
    };
    Output { text, failures }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepEntry {
    pub margin: f64,
    pub nodes: usize,
    #[serde(rename = "J_over_hbar")]
    pub j_over_hbar: Option<f64>,
    #[serde(rename = "J_im_over_hbar")]
    pub j_im_over_hbar: Option<f64>,
    pub residual_closure: Option<f64>,
    pub schwarz_deviation: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerifyReport {
    pub potential: String,
    pub hbar: f64,
    pub level: usize,
    pub energy: Option<f64>,
    #[serde(rename = "J_over_hbar")]
    pub j_over_hbar: Option<f64>,
    #[serde(rename = "J_im_over_hbar")]
    pub j_im_over_hbar: Option<f64>,
    pub n_est: Option<i64>,
    pub residual_quantization: Option<f64>,
    pub residual_im: Option<f64>,
    pub residual_closure: Option<f64>,
    pub schwarz_deviation: Option<f64>,
    pub sweep: Vec<SweepEntry>,
    /// Largest `|J - J_ref|/ℏ` over the sweep.
    pub max_sweep_deviation: Option<f64>,
    pub passed: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

fn cmd_verify(model: &PotentialModel, n: usize, cfg: &SolverConfig, sweep: &[SolverConfig]) -> Result<Output> {
    let mut report = VerifyReport {
        potential: model.name().to_string(),
        hbar: cfg.hbar,
        level: n,
        energy: None,
        j_over_hbar: None,
        j_im_over_hbar: None,
        n_est: None,
        residual_quantization: None,
        residual_im: None,
        residual_closure: None,
        schwarz_deviation: None,
        sweep: Vec::new(),
        max_sweep_deviation: None,
        passed: false,
        error: None,
    };
    let level = match qhj_level(model, n, cfg) {
        Ok(l) => l,
        Err(e) if e.is_config_error() => return Err(e),
        Err(e) => {
            report.error = Some(format!("level {n}: {e}"));
            let failures = vec![report.error.clone().unwrap_or_default()];
            return Ok(Output {
                text: to_json(&report),
                failures,
            });
        }
    };
    let a = level.action;
    report.energy = Some(level.energy);
    report.j_over_hbar = Some(a.j_over_hbar());
    report.j_im_over_hbar = Some(a.j.im / a.hbar);
    report.n_est = Some(a.n_est);
    report.residual_quantization = Some(a.quantization_residual);
    report.residual_im = Some(a.im_residual);
    report.residual_closure = Some(a.closure_residual);
    report.schwarz_deviation = Some(level.trace.schwarz_deviation());

    let entries: Vec<SweepEntry> = sweep
        .par_iter()
        .map(|c| {
            let mut entry = SweepEntry {
                margin: c.contour_margin,
                nodes: c.contour_nodes,
                j_over_hbar: None,
                j_im_over_hbar: None,
                residual_closure: None,
                schwarz_deviation: None,
                error: None,
            };
            let mut run = || -> Result<()> {
                let tp = turning_points(model, level.energy)?;
                let contour = build_contour(model, &tp, c)?;
                let (trace, contour) = transport_with_retry(model, level.energy, &contour, c)?;
                let act = quantum_action(&trace, &contour, c)?;
                entry.j_over_hbar = Some(act.j_over_hbar());
                entry.j_im_over_hbar = Some(act.j.im / act.hbar);
                entry.residual_closure = Some(act.closure_residual);
                entry.schwarz_deviation = Some(trace.schwarz_deviation());
                Ok(())
            };
            if let Err(e) = run() {
                entry.error = Some(e.to_string());
            }
            entry
        })
        .collect();
    let mut failures = Vec::new();
    let mut max_dev: f64 = 0.0;
    for e in &entries {
        match (e.j_over_hbar, &e.error) {
            (Some(j), None) => max_dev = max_dev.max((j - a.j_over_hbar()).abs()),
            (_, err) => failures.push(format!(
                "sweep margin {} nodes {}: {}",
                e.margin,
                e.nodes,
                err.clone().unwrap_or_default()
            )),
        }
    }
    report.sweep = entries;
    report.max_sweep_deviation = Some(max_dev);
    if failures.is_empty() && max_dev > 1e-6 {
        failures.push(format!("contour sweep deviation {max_dev:e} exceeds 1e-6 hbar"));
    }
    report.passed = failures.is_empty();
    Ok(Output {
        text: to_json(&report),
        failures,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResidueEntry {
    pub energy: f64,
    pub value_re: Option<f64>,
    pub value_im: Option<f64>,
    pub target: f64,
    pub deviation: Option<f64>,
    pub passed: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

fn cmd_wkb_check(model: &PotentialModel, energies: Option<Vec<f64>>, cfg: &SolverConfig) -> Result<Output> {
    let energies = match energies {
        Some(e) => e,
        None => vec![wkb_energy(model, 0, cfg)?],
    };
    let target = -0.5 * cfg.h();
    let entries: Vec<ResidueEntry> = energies
        .iter()
        .map(|&energy| {
            let check = turning_points(model, energy)
                .and_then(|tp| build_contour(model, &tp, cfg))
                .and_then(|c| residue_identity_check(model, energy, &c, cfg));
            match check {
                Ok(r) => ResidueEntry {
                    energy,
                    value_re: Some(r.value.re),
                    value_im: Some(r.value.im),
                    target: r.target,
                    deviation: Some(r.deviation),
                    passed: r.passed,
                    error: None,
                },
                Err(e) => ResidueEntry {
                    energy,
                    value_re: None,
                    value_im: None,
                    target,
                    deviation: None,
                    passed: false,
                    error: Some(e.to_string()),
                },
            }
        })
        .collect();
    let failures = entries
        .iter()
        .filter(|e| !e.passed)
        .map(|e| match &e.error {
            Some(msg) => format!("E = {}: {msg}", e.energy),
            None => format!("E = {}: residue deviation {:e} exceeds 1e-8 h", e.energy, e.deviation.unwrap_or(f64::NAN)),
        })
        .collect();
    Ok(Output {
        text: to_json(&entries),
        failures,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EbkCoordinateRow {
    pub coordinate: usize,
    pub label: String,
    pub n: usize,
    #[serde(rename = "E")]
    pub energy: f64,
    #[serde(rename = "J_over_hbar")]
    pub j_over_hbar: f64,
    #[serde(rename = "S_over_h")]
    pub s_over_h: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EbkReport {
    pub energy: f64,
    pub coordinates: Vec<EbkCoordinateRow>,
}

fn cmd_ebk(
    system: &crate::ebk::SeparableSystem,
    qn: &QuantumNumbers,
    cfg: &SolverConfig,
    fmt: Format,
) -> Result<Output> {
    let res = ebk_spectrum(system, qn, cfg)?;
    let h = cfg.h();
    let report = EbkReport {
        energy: res.energy,
        coordinates: (0..system.dimension())
            .map(|i| EbkCoordinateRow {
                coordinate: i,
                label: system.label(i),
                n: qn.n[i],
                energy: res.coordinate_energies[i],
                j_over_hbar: res.loop_actions[i].j_over_hbar(),
                s_over_h: res.semiclassical_actions[i] / h,
            })
            .collect(),
    };
    let text = match fmt {
        Format::Json => to_json(&report),
        Format::Csv => {
            let rows: Vec<Vec<String>> = report
                .coordinates
                .iter()
                .map(|c| {
                    vec![
                        c.coordinate.to_string(),
                        c.label.clone(),
                        c.n.to_string(),
                        fmt_g(c.energy),
                        fmt_g(c.j_over_hbar),
                        fmt_g(c.s_over_h),
                        fmt_g(report.energy),
                    ]
                })
                .collect();
            csv_text(&["coordinate", "label", "n", "E", "J_over_hbar", "S_over_h", "E_total"], &rows)
        }
    };
    Ok(Output {
        text,
        failures: Vec::new(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanRow {
    pub hbar: f64,
    #[serde(rename = "E_wkb")]
    pub e_wkb: Option<f64>,
    #[serde(rename = "E_oracle")]
    pub e_oracle: Option<f64>,
    pub abs_delta: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

fn cmd_hbar_scan(
    model: &PotentialModel,
    n: usize,
    halvings: usize,
    cfg: &SolverConfig,
    ocfg: &OracleConfig,
    fmt: Format,
) -> Output {
    let rows: Vec<ScanRow> = (0..=halvings)
        .into_par_iter()
        .map(|k| {
            let hbar = cfg.hbar / f64::powi(2.0, k as i32);
            let c = SolverConfig { hbar, ..*cfg };
            let wkb = wkb_energy(model, n, &c);
            let oracle = oracle_eigenvalue(model, n, hbar, ocfg);
            let errors: Vec<String> = [wkb.as_ref().err(), oracle.as_ref().err()]
                .into_iter()
                .flatten()
                .map(|e| e.to_string())
                .collect();
            let (e_wkb, e_oracle) = (wkb.ok(), oracle.ok());
            ScanRow {
                hbar,
                e_wkb,
                e_oracle,
                abs_delta: e_wkb.zip(e_oracle).map(|(a, b)| (a - b).abs()),
                error: (!errors.is_empty()).then(|| format!("hbar {hbar}: {}", errors.join("; "))),
            }
        })
        .collect();
    let failures = rows.iter().filter_map(|r| r.error.clone()).collect();
    let text = match fmt {
        Format::Json => to_json(&rows),
        Format::Csv => {
            let with_error = rows.iter().any(|r| r.error.is_some());
            let mut header = vec!["hbar", "E_wkb", "E_oracle", "abs_delta"];
            if with_error {
                header.push("error");
            }
            let body: Vec<Vec<String>> = rows
                .iter()
                .map(|r| {
                    let mut v = vec![fmt_g(r.hbar), opt(r.e_wkb), opt(r.e_oracle), opt(r.abs_delta)];
                    if with_error {
                        v.push(r.error.clone().unwrap_or_default());
                    }
                    v
                })
                .collect();
            csv_text(&header, &body)
        }
    };
    Output { text, failures }
}
