//! Batch front end behind the `decoherence` binary.

use std::fmt::Write as _;
use std::path::PathBuf;

use clap::{Parser, Subcommand, ValueEnum};
use serde::Deserialize;
use serde_json::{json, Value};

use crate::channels::{
    classify_decoherence, interpolate, is_completely_positive, tetrahedron_contains, to_bloch,
    BlochVector, DecoherenceBasis, DecoherenceChannel, DecoherenceParams, DensityMatrix,
    TransferMatrix,
};
use crate::collisions::{design_collision_in, simulate_collisions, x_operator, CollisionSpec};
use crate::entanglement::{analytic_tangles, ckw_check, evolve_network, EntanglementReport};
use crate::lindblad::{
    evolve, generator_from_params, generator_to_lindblad, to_double_commutator,
    validate_decoherence_generator,
};
use crate::smallmat::{c, ComplexMatrix, C64};
use crate::Error;

#[derive(Debug, Parser)]
#[command(name = "decoherence", version, about = "Qubit decoherence channels, collision models, master equations and entanglement")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,

    /// Input file, or inline JSON when the value starts with '{'.
    #[arg(long, global = true)]
    pub input: Option<String>,

    /// Output file (default: standard output).
    #[arg(long, global = true)]
    pub output: Option<PathBuf>,

    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,

    /// Time unit of the master equation.
    #[arg(long, global = true, default_value_t = 1.0)]
    pub tau: f64,

    /// Numerical tolerance for validation and classification.
    #[arg(long, global = true, default_value_t = 1e-9)]
    pub tol: f64,

    /// Number of collisions (collide, entangle).
    #[arg(long, global = true)]
    pub nmax: Option<usize>,

    /// Time grid "t0:t1:steps" (steps intervals, both ends included).
    #[arg(long, global = true, value_parser = parse_tgrid)]
    pub tgrid: Option<TimeGridArg>,

    /// |⟨ψ0|ψ1⟩|² for the closed-form entanglement curves.
    #[arg(long, global = true, default_value_t = 0.75)]
    pub overlap2: f64,

    /// |α|² of the system qubit; β = √(1 - |α|²).
    #[arg(long, global = true, default_value_t = 0.5)]
    pub alpha2: f64,

    /// evolve: emit the images of a Bloch-sphere mesh with this spacing in
    /// degrees instead of a single trajectory.
    #[arg(long, global = true)]
    pub mesh: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// Classify a channel as a decoherence channel.
    Classify,
    /// Build a collision model realizing a decoherence channel.
    Design,
    /// Simulate repeated collisions on the system qubit.
    Collide,
    /// Integrate the master equation of a decoherence channel.
    Evolve,
    /// Tangles and CKW residuals after n = 1..nmax collisions.
    Entangle,
    /// Complete-positivity test of a channel.
    Checkcp,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeGridArg {
    pub t0: f64,
    pub t1: f64,
    pub steps: usize,
}

fn parse_tgrid(s: &str) -> std::result::Result<TimeGridArg, String> {
    let parts: Vec<&str> = s.split(':').collect();
    if parts.len() != 3 {
        return Err(format!("expected t0:t1:steps, got {s:?}"));
    }
    let num = |p: &str| p.trim().parse::<f64>().map_err(|e| format!("{p:?}: {e}"));
    let steps = parts[2]
        .trim()
        .parse::<usize>()
        .map_err(|e| format!("{:?}: {e}", parts[2]))?;
    Ok(TimeGridArg {
        t0: num(parts[0])?,
        t1: num(parts[1])?,
        steps,
    })
}

/// A failure reported as `{"error": code, "message": ...}`.
#[derive(Debug, Clone, PartialEq)]
pub struct CliError {
    pub code: String,
    pub message: String,
}

impl CliError {
    pub fn new(code: &str, message: impl Into<String>) -> Self {
        Self {
            code: code.to_string(),
            message: message.into(),
        }
    }

    pub fn to_json(&self) -> String {
        json!({"error": self.code, "message": self.message}).to_string()
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        Self::new(e.code(), e.to_string())
    }
}

type CliResult<T> = std::result::Result<T, CliError>;

/// Formats with 12 significant digits, `%g` style.
pub fn fmt_num(x: f64) -> String {
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if x == 0.0 {
        return "0".into();
    }
    let sci = format!("{x:.11e}");
    let (mantissa, exp) = sci.split_once('e').expect("scientific format");
    let exp: i32 = exp.parse().expect("exponent");
    if (-5..12).contains(&exp) {
        let decimals = (11 - exp) as usize;
        trim_zeros(&format!("{x:.decimals$}"))
    } else {
        format!("{}e{}{:02}", trim_zeros(mantissa), if exp < 0 { '-' } else { '+' }, exp.abs())
    }
}

fn trim_zeros(s: &str) -> String {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s.to_string()
    }
}

fn num(x: f64) -> Value {
    if !x.is_finite() {
        return Value::Null;
    }
    let rounded: f64 = fmt_num(x).parse().expect("formatted number parses");
    json!(if rounded == 0.0 { 0.0 } else { rounded })
}

fn cnum(z: C64) -> Value {
    json!([num(z.re), num(z.im)])
}

fn cmat(m: &ComplexMatrix) -> Value {
    Value::Array(
        (0..m.rows())
            .map(|i| Value::Array((0..m.cols()).map(|j| cnum(m[(i, j)])).collect()))
            .collect(),
    )
}

fn rmat<const N: usize>(m: &[[f64; N]; N]) -> Value {
    Value::Array(
        m.iter()
            .map(|row| Value::Array(row.iter().map(|&v| num(v)).collect()))
            .collect(),
    )
}

fn rvec(v: &[f64]) -> Value {
    Value::Array(v.iter().map(|&x| num(x)).collect())
}

type ComplexJson = Vec<Vec<[f64; 2]>>;

#[derive(Debug, Deserialize)]
struct DecoherenceJson {
    lambda: f64,
    phi: f64,
    basis: Option<ComplexJson>,
}

#[derive(Debug, Deserialize)]
struct ChannelJson {
    transfer: Option<[[f64; 4]; 4]>,
    decoherence: Option<DecoherenceJson>,
    rho0: Option<ComplexJson>,
}

#[derive(Debug, Deserialize)]
struct SpecJson {
    #[serde(rename = "V0")]
    v0: ComplexJson,
    #[serde(rename = "V1")]
    v1: ComplexJson,
    xi: ComplexJson,
    basis: Option<ComplexJson>,
    rho0: Option<ComplexJson>,
}

enum ChannelInput {
    Transfer(TransferMatrix),
    Decoherence(DecoherenceChannel),
}

impl ChannelInput {
    fn pauli_transfer(&self) -> TransferMatrix {
        match self {
            Self::Transfer(t) => *t,
            Self::Decoherence(d) => d.pauli_transfer(),
        }
    }

    fn to_decoherence(&self, tol: f64) -> CliResult<DecoherenceChannel> {
        match self {
            Self::Decoherence(d) => Ok(d.clone()),
            Self::Transfer(t) => {
                check_cp(t, tol)?;
                classify_decoherence(t, tol).ok_or_else(|| {
                    CliError::new("not_decoherence", "channel is not a decoherence channel")
                })
            }
        }
    }
}

fn to_matrix(rows: &ComplexJson, what: &str) -> CliResult<ComplexMatrix> {
    let data: Vec<Vec<C64>> = rows
        .iter()
        .map(|r| r.iter().map(|&[re, im]| c(re, im)).collect())
        .collect();
    let m = ComplexMatrix::from_rows(data)
        .map_err(|e| CliError::new("schema_violation", format!("{what}: {e}")))?;
    if m.rows() != 2 || m.cols() != 2 {
        return Err(CliError::new(
            "schema_violation",
            format!("{what} must be a 2x2 complex array"),
        ));
    }
    Ok(m)
}

fn to_basis(rows: Option<&ComplexJson>, tol: f64) -> CliResult<DecoherenceBasis> {
    match rows {
        None => Ok(DecoherenceBasis::computational()),
        Some(r) => Ok(DecoherenceBasis::new(to_matrix(r, "basis")?, tol)?),
    }
}

/// ρ0 from the input, or (|e0⟩ + |e1⟩)/√2 of the basis.
fn to_rho0(rows: Option<&ComplexJson>, basis: &DecoherenceBasis, tol: f64) -> CliResult<DensityMatrix> {
    match rows {
        Some(r) => Ok(DensityMatrix::new(to_matrix(r, "rho0")?, tol)?),
        None => Ok(DensityMatrix::from_bloch(BlochVector::new(1.0, 0.0, 0.0), basis)?),
    }
}

fn read_input(cli: &Cli) -> CliResult<Value> {
    let raw = cli
        .input
        .as_deref()
        .ok_or_else(|| CliError::new("invalid_arguments", "--input is required for this command"))?;
    let text = if raw.trim_start().starts_with('{') {
        raw.to_string()
    } else {
        std::fs::read_to_string(raw)
            .map_err(|e| CliError::new("io_error", format!("{raw}: {e}")))?
    };
    serde_json::from_str(&text).map_err(|e| CliError::new("malformed_json", e.to_string()))
}

fn from_value<T: for<'de> Deserialize<'de>>(v: Value) -> CliResult<T> {
    serde_json::from_value(v).map_err(|e| CliError::new("schema_violation", e.to_string()))
}

fn parse_channel(v: Value, tol: f64) -> CliResult<(ChannelInput, Option<ComplexJson>)> {
    let ch: ChannelJson = from_value(v)?;
    let input = match (ch.transfer, ch.decoherence) {
        (Some(t), None) => ChannelInput::Transfer(TransferMatrix::new(t)),
        (None, Some(d)) => {
            let basis = to_basis(d.basis.as_ref(), tol)?;
            let params = DecoherenceParams::new(d.lambda, d.phi)?;
            ChannelInput::Decoherence(DecoherenceChannel { basis, params })
        }
        _ => {
            return Err(CliError::new(
                "schema_violation",
                "channel needs exactly one of \"transfer\" or \"decoherence\"",
            ))
        }
    };
    Ok((input, ch.rho0))
}

fn parse_spec(v: Value, tol: f64) -> CliResult<(CollisionSpec, Option<ComplexJson>)> {
    let s: SpecJson = from_value(v)?;
    let basis = to_basis(s.basis.as_ref(), tol)?;
    let xi = DensityMatrix::new(to_matrix(&s.xi, "xi")?, tol)?;
    let spec = CollisionSpec::new(
        to_matrix(&s.v0, "V0")?,
        to_matrix(&s.v1, "V1")?,
        xi,
        basis,
        tol,
    )?;
    Ok((spec, s.rho0))
}

fn check_cp(t: &TransferMatrix, tol: f64) -> CliResult<()> {
    let verdict = is_completely_positive(t, &DecoherenceBasis::computational(), tol)?;
    if !verdict.completely_positive {
        return Err(Error::NotCompletelyPositive {
            min_eigenvalue: verdict.min_eigenvalue,
        }
        .into());
    }
    Ok(())
}

fn channel_json(ch: &DecoherenceChannel) -> Value {
    json!({
        "lambda": num(ch.params.lambda()),
        "phi": num(ch.params.phi()),
        "axis": rvec(&ch.basis.axis()),
        "basis": cmat(ch.basis.w()),
    })
}

fn json_text(v: &Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("json values serialize");
    s.push('\n');
    s
}

fn csv_text(header: &[&str], rows: &[Vec<f64>]) -> String {
    let mut s = header.join(",");
    s.push('\n');
    for row in rows {
        let cells: Vec<String> = row.iter().map(|&x| fmt_num(x)).collect();
        let _ = writeln!(s, "{}", cells.join(","));
    }
    s
}

fn format_for(cli: &Cli, default: Format, csv_ok: bool) -> CliResult<Format> {
    let f = cli.format.unwrap_or(default);
    if f == Format::Csv && !csv_ok {
        return Err(CliError::new(
            "unsupported_format",
            format!("{:?} has JSON output only", cli.command).to_lowercase(),
        ));
    }
    Ok(f)
}

fn positive(name: &str, v: f64) -> CliResult<f64> {
    if v > 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(CliError::new("invalid_arguments", format!("--{name} must be > 0")))
    }
}

/// Runs one command and returns the text to emit.
pub fn run(cli: &Cli) -> CliResult<String> {
    positive("tol", cli.tol)?;
    positive("tau", cli.tau)?;
    match cli.command {
        Command::Classify => classify(cli),
        Command::Design => design(cli),
        Command::Collide => collide(cli),
        Command::Evolve => evolve_cmd(cli),
        Command::Entangle => entangle(cli),
        Command::Checkcp => checkcp(cli),
    }
}

fn classify(cli: &Cli) -> CliResult<String> {
    format_for(cli, Format::Json, false)?;
    let (input, _) = parse_channel(read_input(cli)?, cli.tol)?;
    let t = input.pauli_transfer();
    check_cp(&t, cli.tol)?;
    let out = match classify_decoherence(&t, cli.tol) {
        Some(ch) => {
            let mut v = channel_json(&ch);
            v["decoherence"] = json!(true);
            v
        }
        None => json!({
            "decoherence": false,
            "unital": t.is_unital(cli.tol),
        }),
    };
    Ok(json_text(&out))
}

fn design(cli: &Cli) -> CliResult<String> {
    format_for(cli, Format::Json, false)?;
    let (input, _) = parse_channel(read_input(cli)?, cli.tol)?;
    let ch = input.to_decoherence(cli.tol)?;
    let spec = design_collision_in(&ch.params, ch.basis.clone());
    let x = x_operator(&spec);
    let out = json!({
        "V0": cmat(spec.v0()),
        "V1": cmat(spec.v1()),
        "xi": cmat(spec.xi().matrix()),
        "basis": cmat(spec.basis().w()),
        "mean_x": cnum(x.mean),
        "lambda": num(x.lambda()),
        "phi": num(x.phi()),
    });
    Ok(json_text(&out))
}

fn collide(cli: &Cli) -> CliResult<String> {
    let format = format_for(cli, Format::Csv, true)?;
    let (spec, rho0) = parse_spec(read_input(cli)?, cli.tol)?;
    let rho0 = to_rho0(rho0.as_ref(), spec.basis(), cli.tol)?;
    let n = cli.nmax.unwrap_or(10);
    let states = simulate_collisions(&spec, &rho0, n);
    let rows: Vec<Vec<f64>> = states
        .iter()
        .enumerate()
        .map(|(k, rho)| {
            let r = to_bloch(rho, spec.basis()).0;
            vec![k as f64, r[0], r[1], r[2], rho.purity()]
        })
        .collect();
    match format {
        Format::Csv => Ok(csv_text(&["n", "r_x", "r_y", "r_z", "purity"], &rows)),
        Format::Json => {
            let x = x_operator(&spec);
            let traj: Vec<Value> = rows
                .iter()
                .map(|r| json!({"n": r[0] as usize, "r": rvec(&r[1..4]), "purity": num(r[4])}))
                .collect();
            Ok(json_text(&json!({
                "lambda": num(x.lambda()),
                "phi": num(x.phi()),
                "mean_x": cnum(x.mean),
                "trajectory": traj,
            })))
        }
    }
}

fn time_grid_of(cli: &Cli) -> CliResult<Vec<f64>> {
    let g = cli.tgrid.unwrap_or(TimeGridArg {
        t0: 0.0,
        t1: 10.0,
        steps: 100,
    });
    Ok(crate::lindblad::time_grid(g.t0, g.t1, g.steps)?)
}

fn evolve_cmd(cli: &Cli) -> CliResult<String> {
    let format = format_for(cli, Format::Csv, true)?;
    let (input, rho0) = parse_channel(read_input(cli)?, cli.tol)?;
    let ch = input.to_decoherence(cli.tol)?;
    let g = generator_from_params(&ch.params, cli.tau)?;
    let grid = time_grid_of(cli)?;
    if let Some(deg) = cli.mesh {
        return mesh_images(cli, &ch, &grid, positive("mesh", deg)?, format);
    }
    let rho0 = to_rho0(rho0.as_ref(), &ch.basis, cli.tol)?;
    let traj = evolve(&g, &rho0, &grid, &ch.basis)?;
    let rows: Vec<Vec<f64>> = grid
        .iter()
        .zip(&traj)
        .map(|(&t, rho)| {
            let r = to_bloch(rho, &ch.basis).0;
            vec![t, r[0], r[1], r[2], rho.purity()]
        })
        .collect();
    match format {
        Format::Csv => Ok(csv_text(&["t", "r_x", "r_y", "r_z", "purity"], &rows)),
        Format::Json => {
            let spec = generator_to_lindblad(&g);
            let verdict = validate_decoherence_generator(&g, cli.tol);
            let gamma = to_double_commutator(&g, cli.tol)
                .map(|f| num(f.gamma))
                .unwrap_or(Value::Null);
            let traj: Vec<Value> = rows
                .iter()
                .map(|r| json!({"t": num(r[0]), "r": rvec(&r[1..4]), "purity": num(r[4])}))
                .collect();
            let mut out = channel_json(&ch);
            out["tau"] = num(cli.tau);
            out["generator"] = rmat(g.entries());
            out["valid_generator"] = json!(verdict.valid);
            out["h"] = rvec(&spec.h);
            out["d"] = rmat(&spec.d());
            out["e"] = rmat(&spec.e());
            out["gamma"] = gamma;
            out["trajectory"] = Value::Array(traj);
            Ok(json_text(&out))
        }
    }
}

/// Mesh points (polar θ, azimuth ϕ in degrees) of the Bloch sphere, poles
/// taken once.
fn bloch_mesh(step: f64) -> Vec<(f64, f64)> {
    let polar = (180.0 / step).round().max(1.0) as usize;
    let azimuth = (360.0 / step).round().max(1.0) as usize;
    let mut pts = vec![(0.0, 0.0)];
    for i in 1..polar {
        let theta = 180.0 * i as f64 / polar as f64;
        for j in 0..azimuth {
            pts.push((theta, 360.0 * j as f64 / azimuth as f64));
        }
    }
    pts.push((180.0, 0.0));
    pts
}

fn mesh_images(
    cli: &Cli,
    ch: &DecoherenceChannel,
    grid: &[f64],
    step: f64,
    format: Format,
) -> CliResult<String> {
    let mesh = bloch_mesh(step);
    let mut rows = Vec::with_capacity(mesh.len() * grid.len());
    for &t in grid {
        let e = interpolate(&ch.params, t, cli.tau)?;
        for &(theta, az) in &mesh {
            let (th, ph) = (theta.to_radians(), az.to_radians());
            let r0 = BlochVector::new(th.sin() * ph.cos(), th.sin() * ph.sin(), th.cos());
            let r = e.apply_bloch(&r0).0;
            rows.push(vec![t, theta, az, r[0], r[1], r[2]]);
        }
    }
    let header = ["t", "theta", "azimuth", "r_x", "r_y", "r_z"];
    match format {
        Format::Csv => Ok(csv_text(&header, &rows)),
        Format::Json => {
            let pts: Vec<Value> = rows
                .iter()
                .map(|r| {
                    json!({"t": num(r[0]), "theta": num(r[1]), "azimuth": num(r[2]), "r": rvec(&r[3..6])})
                })
                .collect();
            Ok(json_text(&json!({"mesh_step": num(step), "images": pts})))
        }
    }
}

fn system_amplitudes(alpha2: f64) -> CliResult<(C64, C64)> {
    if !(0.0..=1.0).contains(&alpha2) {
        return Err(CliError::new("invalid_arguments", "--alpha2 must lie in [0, 1]"));
    }
    Ok((c(alpha2.sqrt(), 0.0), c((1.0 - alpha2).sqrt(), 0.0)))
}

fn entangle(cli: &Cli) -> CliResult<String> {
    let format = format_for(cli, Format::Csv, true)?;
    let (alpha, beta) = system_amplitudes(cli.alpha2)?;
    let mut reports: Vec<EntanglementReport> = Vec::new();
    let qubits;
    let source;
    if cli.input.is_some() {
        let (spec, _) = parse_spec(read_input(cli)?, cli.tol)?;
        let total = cli.nmax.unwrap_or(8);
        qubits = total + 1;
        for n in 1..=total {
            let state = evolve_network(&spec, alpha, beta, total, n)?;
            let mut r = ckw_check(&state)?;
            r.collisions = Some(n);
            reports.push(r);
        }
        source = "statevector";
    } else {
        if !(0.0..=1.0).contains(&cli.overlap2) {
            return Err(CliError::new("invalid_arguments", "--overlap2 must lie in [0, 1]"));
        }
        let total = cli.nmax.unwrap_or(30);
        qubits = total + 1;
        for n in 1..=total {
            reports.push(analytic_tangles(cli.overlap2.sqrt(), alpha, beta, n)?);
        }
        source = "closed_form";
    }
    let rows: Vec<Vec<f64>> = reports
        .iter()
        .map(|r| {
            vec![
                r.collisions.unwrap_or(0) as f64,
                r.tau0,
                r.tauk,
                r.tau0k.first().copied().unwrap_or(0.0),
                r.sum_tau0k(),
                r.delta_j.iter().sum::<f64>() / qubits as f64,
            ]
        })
        .collect();
    match format {
        Format::Csv => Ok(csv_text(
            &["n", "tau0", "tauk", "tau0k", "sum_tau0k", "delta"],
            &rows,
        )),
        Format::Json => {
            let entries: Vec<Value> = rows
                .iter()
                .zip(&reports)
                .map(|(row, r)| {
                    json!({
                        "n": row[0] as usize,
                        "tau0": num(row[1]),
                        "tauk": num(row[2]),
                        "tau0k": num(row[3]),
                        "sum_tau0k": num(row[4]),
                        "delta": num(row[5]),
                        "delta_j": rvec(&r.delta_j),
                    })
                })
                .collect();
            Ok(json_text(&json!({
                "source": source,
                "qubits": qubits,
                "report": entries,
            })))
        }
    }
}

fn checkcp(cli: &Cli) -> CliResult<String> {
    format_for(cli, Format::Json, false)?;
    let (input, _) = parse_channel(read_input(cli)?, cli.tol)?;
    let t = input.pauli_transfer();
    let verdict = is_completely_positive(&t, &DecoherenceBasis::computational(), cli.tol)?;
    let mut out = json!({
        "completely_positive": verdict.completely_positive,
        "min_choi_eigenvalue": num(verdict.min_eigenvalue),
        "unital": t.is_unital(cli.tol),
    });
    let e = t.entries();
    let diagonal = (0..4).all(|i| (0..4).all(|j| i == j || e[i][j].abs() <= cli.tol));
    out["tetrahedron"] = if diagonal {
        json!(tetrahedron_contains([e[1][1], e[2][2], e[3][3]], cli.tol))
    } else {
        Value::Null
    };
    Ok(json_text(&out))
}

/// Parses arguments, runs and writes the result; returns the exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                print!("{e}");
                return 0;
            }
            let msg = e.to_string();
            let first = msg.lines().next().unwrap_or("").trim_start_matches("error: ");
            eprintln!("{}", CliError::new("invalid_arguments", first).to_json());
            return 2;
        }
    };
    let result = run(&cli).and_then(|text| match &cli.output {
        Some(path) => std::fs::write(path, text)
            .map_err(|e| CliError::new("io_error", format!("{}: {e}", path.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    });
    match result {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("{}", e.to_json());
            2
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run_args(args: &[&str]) -> CliResult<String> {
        let mut full = vec!["decoherence"];
        full.extend_from_slice(args);
        run(&Cli::try_parse_from(full).unwrap())
    }

    #[test]
    fn number_format() {
        assert_eq!(fmt_num(0.5), "0.5");
        assert_eq!(fmt_num(1.0), "1");
        assert_eq!(fmt_num(-0.0), "0");
        assert_eq!(fmt_num(std::f64::consts::PI), "3.14159265359");
        assert_eq!(fmt_num(1.0 / 3.0), "0.333333333333");
        assert_eq!(fmt_num(1e-7), "1e-07");
        assert_eq!(fmt_num(-2.5e-12), "-2.5e-12");
        assert_eq!(fmt_num(123456.0), "123456");
        assert_eq!(fmt_num(1e12), "1e+12");
        assert_eq!(fmt_num(0.0001), "0.0001");
        assert_eq!(fmt_num(0.75f64.powi(3)), "0.421875");
    }

    #[test]
    fn tgrid_parsing() {
        assert_eq!(
            parse_tgrid("0:10:4").unwrap(),
            TimeGridArg { t0: 0.0, t1: 10.0, steps: 4 }
        );
        assert!(parse_tgrid("0:10").is_err());
        assert!(parse_tgrid("0:x:3").is_err());
        assert!(parse_tgrid("0:1:-3").is_err());
    }

    #[test]
    fn classify_round_trip() {
        let out = run_args(&[
            "classify",
            "--input",
            r#"{"decoherence": {"lambda": 0.5, "phi": 0.3}}"#,
        ])
        .unwrap();
        let v: Value = serde_json::from_str(&out).unwrap();
        assert_eq!(v["decoherence"], json!(true));
        assert_eq!(v["lambda"], json!(0.5));
        assert_eq!(v["phi"], json!(0.3));
        assert_eq!(v["axis"], json!([0.0, 0.0, 1.0]));
    }

    #[test]
    fn classify_rejects_non_cp() {
        let e = run_args(&[
            "classify",
            "--input",
            r#"{"transfer": [[1,0,0,0],[0,1,0,0],[0,0,1,0],[0,0,0,-1]]}"#,
        ])
        .unwrap_err();
        assert_eq!(e.code, "not_completely_positive");
    }

    #[test]
    fn entangle_closed_form_column() {
        let out = run_args(&["entangle", "--overlap2", "0.75", "--nmax", "30"]).unwrap();
        let mut lines = out.lines();
        assert_eq!(lines.next().unwrap(), "n,tau0,tauk,tau0k,sum_tau0k,delta");
        for (i, line) in lines.enumerate() {
            let n = i as i32 + 1;
            let tau0: f64 = line.split(',').nth(1).unwrap().parse().unwrap();
            assert!((tau0 - (1.0 - 0.75f64.powi(n))).abs() < 1e-11);
        }
    }

    #[test]
    fn evolve_unitary_limit_keeps_purity() {
        let out = run_args(&[
            "evolve",
            "--input",
            r#"{"decoherence": {"lambda": 1.0, "phi": 0.4}}"#,
            "--tgrid",
            "0:5:10",
        ])
        .unwrap();
        let purities: Vec<&str> = out.lines().skip(1).map(|l| l.rsplit(',').next().unwrap()).collect();
        assert_eq!(purities.len(), 11);
        assert!(purities.iter().all(|p| *p == "1"));
    }

    #[test]
    fn error_codes() {
        let e = run_args(&["classify", "--input", "{not json"]).unwrap_err();
        assert_eq!(e.code, "malformed_json");
        let e = run_args(&["classify", "--input", r#"{"transfer": [1, 2]}"#]).unwrap_err();
        assert_eq!(e.code, "schema_violation");
        let e = run_args(&["classify", "--input", "{}"]).unwrap_err();
        assert_eq!(e.code, "schema_violation");
        let e = run_args(&[
            "collide",
            "--input",
            r#"{"V0": [[[1,0],[0,0]],[[0,0],[2,0]]], "V1": [[[1,0],[0,0]],[[0,0],[1,0]]], "xi": [[[1,0],[0,0]],[[0,0],[0,0]]]}"#,
        ])
        .unwrap_err();
        assert_eq!(e.code, "non_unitary");
        let e = run_args(&[
            "evolve",
            "--input",
            r#"{"decoherence": {"lambda": 0.0, "phi": 0.0}}"#,
        ])
        .unwrap_err();
        assert_eq!(e.code, "no_finite_generator");
        let e = run_args(&["checkcp", "--format", "csv", "--input", "{}"]).unwrap_err();
        assert_eq!(e.code, "unsupported_format");
        let e = run_args(&["classify"]).unwrap_err();
        assert_eq!(e.code, "invalid_arguments");
    }

    #[test]
    fn checkcp_reports_tetrahedron() {
        let out = run_args(&[
            "checkcp",
            "--input",
            r#"{"transfer": [[1,0,0,0],[0,1,0,0],[0,0,1,0],[0,0,0,-1]]}"#,
        ])
        .unwrap();
        let v: Value = serde_json::from_str(&out).unwrap();
        assert_eq!(v["completely_positive"], json!(false));
        assert_eq!(v["tetrahedron"], json!(false));
        assert_eq!(v["min_choi_eigenvalue"], json!(-1.0));
    }

    #[test]
    fn mesh_has_poles_once() {
        let m = bloch_mesh(90.0);
        assert_eq!(m.len(), 1 + 4 + 1);
        assert_eq!(bloch_mesh(1.0).len(), 179 * 360 + 2);
    }
}
