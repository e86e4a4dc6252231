use std::fs;
use std::path::Path;

use serde::Serialize;
use shifts::approx::{entropy_chain, low_entropy_approx};
use shifts::entropy::{entropy_estimate, snapped_ceil, tiling_entropy_bound, FORMULA_VERSION};
use shifts::io::{parse_sft, parse_tileset, tiling_to_json};
use shifts::pattern::{check_gluing, count_patterns, Alphabet};
use shifts::scalar::ln_big;
use shifts::spectrum::spectrum;
use shifts::tiling::{error_density, greedy_maximal, render_svg, TileSet};
use shifts::{Error, FiniteRegion, GroupContext, GroupPoint, ShiftSpec};

use crate::window::WindowArg;
use crate::{suite, CliError, Command, Format, Opts, Output};

type CmdResult = Result<Output, CliError>;

fn input<E: std::fmt::Display>(e: E) -> CliError {
    CliError::Input(e.to_string())
}

fn missing(flag: &str) -> CliError {
    CliError::Input(format!("--{flag} is required for this command"))
}

fn read(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
}

fn load_spec(path: &Path) -> Result<ShiftSpec, CliError> {
    parse_sft(&read(path)?).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
}

fn load_tileset(path: &Path, ctx: Option<&GroupContext>) -> Result<TileSet, CliError> {
    parse_tileset(&read(path)?, ctx).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
}

fn window_arg(s: Option<&String>, flag: &str) -> Result<WindowArg, CliError> {
    let s = s.ok_or_else(|| missing(flag))?;
    WindowArg::parse(s).map_err(|e| CliError::Input(format!("--{flag}: {e}")))
}

fn need<T: Copy>(v: Option<T>, flag: &str) -> Result<T, CliError> {
    v.ok_or_else(|| missing(flag))
}

fn eps_in_range(eps: f64) -> Result<f64, CliError> {
    if eps > 0.0 && eps <= 1.0 {
        Ok(eps)
    } else {
        Err(CliError::Input(format!("--eps: {eps} outside (0, 1]")))
    }
}

fn positive(v: usize, flag: &str) -> Result<usize, CliError> {
    if v == 0 {
        return Err(CliError::Input(format!("--{flag}: must be positive")));
    }
    Ok(v)
}

fn format_or(opts: &Opts, default: Format, allowed: &[Format]) -> Result<Format, CliError> {
    let f = opts.format.unwrap_or(default);
    if !allowed.contains(&f) {
        return Err(CliError::Input(format!("--format: {f:?} is not available for this command").to_lowercase()));
    }
    Ok(f)
}

#[derive(Serialize)]
struct Echo<'a> {
    command: Command,
    #[serde(flatten)]
    opts: &'a Opts,
    tool_version: &'static str,
    formula_version: &'static str,
}

#[derive(Serialize)]
struct Envelope<'a, R: Serialize> {
    config: Echo<'a>,
    report: R,
    pass: bool,
}

fn json<R: Serialize>(command: Command, opts: &Opts, report: R, pass: bool) -> Result<String, CliError> {
    let env = Envelope {
        config: Echo { command, opts, tool_version: env!("CARGO_PKG_VERSION"), formula_version: FORMULA_VERSION },
        report,
        pass,
    };
    let mut s = serde_json::to_string_pretty(&env).map_err(input)?;
    s.push('\n');
    Ok(s)
}

fn verdict(pass: bool) -> &'static str {
    if pass {
        "pass"
    } else {
        "FAIL"
    }
}

/// Failures that mean "no certificate", as opposed to bad input.
fn certificate_failure(command: Command, opts: &Opts, e: Error) -> CliError {
    match e {
        Error::NoCertifiedTileSet { .. } | Error::NoChainLevel { .. } => {
            #[derive(Serialize)]
            struct Failure {
                error: String,
            }
            let summary = format!("{}: FAIL ({e})", format!("{command:?}").to_lowercase());
            match json(command, opts, Failure { error: e.to_string() }, false) {
                Ok(body) => CliError::Certificate(Output { body, pass: false, summary }),
                Err(err) => err,
            }
        }
        other => input(other),
    }
}

pub fn run(command: Command, opts: &Opts) -> CmdResult {
    match command {
        Command::Entropy => entropy(opts),
        Command::Tile => tile(opts),
        Command::Glue => glue(opts),
        Command::Approx => approx(opts),
        Command::Chain => chain(opts),
        Command::Spectrum => spectrum_cmd(opts),
        Command::Verify => verify(opts),
    }
}

#[derive(Serialize)]
struct EntropyRow {
    window_id: usize,
    size: usize,
    count: String,
    estimate: f64,
    bound: Option<f64>,
    dominated: Option<bool>,
}

fn entropy(opts: &Opts) -> CmdResult {
    let spec = load_spec(opts.spec.as_deref().ok_or_else(|| missing("spec"))?)?;
    let windows = window_arg(opts.window.as_ref(), "window")?.regions(spec.ctx()).map_err(input)?;
    let tiles = opts.tileset.as_deref().map(|p| load_tileset(p, Some(spec.ctx()))).transpose()?;
    let format = format_or(opts, Format::Csv, &[Format::Csv, Format::Json])?;

    // smallest p with |X_T| ≤ p^|T| on every tile
    let p = match &tiles {
        Some(ts) => {
            let mut lnp = f64::NEG_INFINITY;
            for t in ts.tiles() {
                lnp = lnp.max(ln_big(&count_patterns(&spec, t).map_err(input)?) / t.len() as f64);
            }
            Some(lnp.exp())
        }
        None => None,
    };
    let mut rows = Vec::with_capacity(windows.len());
    for (id, w) in windows.iter().enumerate() {
        let est = entropy_estimate::<f64>(&spec, w).map_err(input)?;
        let (bound, dominated) = match (&tiles, p) {
            (Some(ts), Some(p)) => {
                let t = greedy_maximal(ts, w).map_err(input)?;
                let rep = tiling_entropy_bound(&spec, ts, &t, w, p).map_err(input)?;
                (Some(rep.certificate.bound), Some(est.value <= rep.certificate.bound + 1e-9))
            }
            _ => (None, None),
        };
        rows.push(EntropyRow { window_id: id, size: w.len(), count: est.count.to_string(), estimate: est.value, bound, dominated });
    }
    let pass = rows.iter().all(|r| r.dominated != Some(false));
    let last = rows.last().map_or(f64::NAN, |r| r.estimate);
    let body = match format {
        Format::Csv => {
            let mut s = String::from("window_id,size,count,estimate,bound\n");
            for r in &rows {
                let b = r.bound.map(|b| format!("{b:.10}")).unwrap_or_default();
                s.push_str(&format!("{},{},{},{:.10},{}\n", r.window_id, r.size, r.count, r.estimate, b));
            }
            s
        }
        _ => json(Command::Entropy, opts, &rows, pass)?,
    };
    Ok(Output { body, pass, summary: format!("entropy: {} windows, last estimate {last:.6}", rows.len()) })
}

fn context_for(opts: &Opts, dim: usize) -> Result<Option<GroupContext>, CliError> {
    match opts.spec.as_deref() {
        Some(p) => Ok(Some(load_spec(p)?.ctx().clone())),
        None => GroupContext::standard(dim).map(Some).map_err(input),
    }
}

fn tile(opts: &Opts) -> CmdResult {
    let w = window_arg(opts.window.as_ref(), "window")?;
    let ctx = context_for(opts, w.dimension())?;
    let ts = load_tileset(opts.tileset.as_deref().ok_or_else(|| missing("tileset"))?, ctx.as_ref())?;
    let window = w.single(ts.ctx()).map_err(|e| CliError::Input(format!("--window: {e}")))?;
    let format = format_or(opts, Format::Json, &[Format::Json, Format::Svg])?;
    let t = greedy_maximal(&ts, &window).map_err(input)?;
    let density = error_density::<f64>(&t, &window).map_err(input)?;
    let maximal = t.is_maximal();
    let summary = format!("tile: {} placements, {} uncovered, maximal {}", t.placements().len(), density.errors, maximal);
    let body = match format {
        Format::Svg => render_svg(&t).map_err(|e| match e {
            Error::UnsupportedDimension(d) => CliError::Input(format!("SVG requires dimension 1 or 2, got {d}")),
            other => input(other),
        })?,
        _ => {
            #[derive(Serialize)]
            struct TileReport<'a> {
                tiling: shifts::io::TilingJson,
                errors: usize,
                density: &'a shifts::tiling::ErrorDensity<f64>,
                maximal: bool,
            }
            json(Command::Tile, opts, TileReport { tiling: tiling_to_json(&t), errors: density.errors, density: &density, maximal }, maximal)?
        }
    };
    Ok(Output { body, pass: maximal, summary })
}

fn glue(opts: &Opts) -> CmdResult {
    let spec = load_spec(opts.spec.as_deref().ok_or_else(|| missing("spec"))?)?;
    let r = need(opts.r, "r")?;
    let k = window_arg(opts.window.as_ref(), "window")?.single(spec.ctx()).map_err(|e| CliError::Input(format!("--window: {e}")))?;
    format_or(opts, Format::Json, &[Format::Json])?;
    if !spec.is_finite_type() {
        return Err(input(Error::NotFiniteType));
    }
    let margin = opts.margin.unwrap_or_else(|| spec.default_margin().max(2 * r));
    let (lo, hi) = k.bounds().ok_or_else(|| input(Error::EmptyRegion))?;
    let d = spec.ctx().dimension();
    let h = k.translate(GroupPoint::axis(d, 0, hi[0] - lo[0] + 1 + r as i32));
    let v = check_gluing(&spec, r, &k, &h, margin).map_err(input)?;
    let pass = v.passed();
    #[derive(Serialize)]
    struct GlueReport<'a> {
        r: usize,
        margin: usize,
        k: &'a FiniteRegion,
        h: &'a FiniteRegion,
        verdict: &'a shifts::pattern::GluingVerdict,
    }
    let body = json(Command::Glue, opts, GlueReport { r, margin, k: &k, h: &h, verdict: &v }, pass)?;
    Ok(Output { body, pass, summary: format!("glue: {}", verdict(pass)) })
}

fn approx(opts: &Opts) -> CmdResult {
    let spec = load_spec(opts.spec.as_deref().ok_or_else(|| missing("spec"))?)?;
    let r = positive(need(opts.r, "r")?, "r")?;
    let eps = eps_in_range(need(opts.eps, "eps")?)?;
    let w = window_arg(opts.window.as_ref(), "window")?.single(spec.ctx()).map_err(|e| CliError::Input(format!("--window: {e}")))?;
    format_or(opts, Format::Json, &[Format::Json])?;
    let (_, report) = low_entropy_approx(&spec, r, eps, &w).map_err(|e| certificate_failure(Command::Approx, opts, e))?;
    let pass = report.pass;
    let summary = format!(
        "approx: estimate [{:.6}, {:.6}], B_{r} patterns {}/{}, {}",
        report.estimate.lo,
        report.estimate.hi,
        report.ball.y_count,
        report.ball.x_count,
        verdict(pass)
    );
    let body = json(Command::Approx, opts, &report, pass)?;
    Ok(Output { body, pass, summary })
}

fn chain(opts: &Opts) -> CmdResult {
    let spec = load_spec(opts.spec.as_deref().ok_or_else(|| missing("spec"))?)?;
    let r = positive(need(opts.r, "r")?, "r")?;
    let eps = eps_in_range(need(opts.eps, "eps")?)?;
    let c = need(opts.c, "c")?;
    if c.is_nan() || c < 0.0 {
        return Err(CliError::Input(format!("--c: {c} must be nonnegative")));
    }
    let w = window_arg(opts.window.as_ref(), "window")?.single(spec.ctx()).map_err(|e| CliError::Input(format!("--window: {e}")))?;
    format_or(opts, Format::Json, &[Format::Json])?;
    let report = entropy_chain(&spec, r, eps, c, &w).map_err(|e| certificate_failure(Command::Chain, opts, e))?;
    let pass = report.pass;
    let summary = format!(
        "chain: j* = {}, estimate [{:.6}, {:.6}], {}",
        report.selected,
        report.selected_estimate.lo,
        report.selected_estimate.hi,
        verdict(pass)
    );
    let body = json(Command::Chain, opts, &report, pass)?;
    Ok(Output { body, pass, summary })
}

fn spectrum_cmd(opts: &Opts) -> CmdResult {
    let spec = opts.spec.as_deref().map(load_spec).transpose()?;
    let alphabet = match (&spec, opts.alphabet) {
        (Some(s), None) => s.alphabet().clone(),
        (Some(_), Some(_)) => return Err(CliError::Input("give --spec or --alphabet, not both".into())),
        (None, n) => Alphabet::range(n.unwrap_or(2)).map_err(|e| CliError::Input(format!("--alphabet: {e}")))?,
    };
    let eps = eps_in_range(need(opts.eps, "eps")?)?;
    let r_set = load_tileset(opts.tileset.as_deref().ok_or_else(|| missing("tileset"))?, spec.as_ref().map(|s| s.ctx()))?;
    let ctx = r_set.ctx().clone();
    let window = window_arg(opts.window.as_ref(), "window")?.single(&ctx).map_err(|e| CliError::Input(format!("--window: {e}")))?;
    let check = match opts.check_window.as_ref() {
        Some(_) => window_arg(opts.check_window.as_ref(), "check-window")?
            .single(&ctx)
            .map_err(|e| CliError::Input(format!("--check-window: {e}")))?,
        None if ctx.dimension() == 1 => FiniteRegion::interval(0, 15),
        None => return Err(missing("check-window")),
    };
    let t = match opts.marker_tileset.as_deref() {
        Some(p) => load_tileset(p, Some(&ctx))?,
        None => TileSet::cube(ctx.clone(), snapped_ceil(1.0 / eps).max(1)).map_err(input)?,
    };
    let format = format_or(opts, Format::Json, &[Format::Csv, Format::Json])?;
    let report = spectrum(&alphabet, &r_set, &t, eps, &window, &check).map_err(input)?;
    let pass = report.pass;
    let summary = format!(
        "spectrum: {} levels, max gap {:.6} vs δ(ε) {:.6}, {}",
        report.levels.len(),
        report.max_gap,
        report.delta.bound,
        verdict(pass)
    );
    let body = match format {
        Format::Csv => report.to_csv(),
        _ => json(Command::Spectrum, opts, &report, pass)?,
    };
    Ok(Output { body, pass, summary })
}

fn verify(opts: &Opts) -> CmdResult {
    format_or(opts, Format::Json, &[Format::Json])?;
    let report = suite::run(opts.seed).map_err(input)?;
    let pass = report.pass;
    let summary = format!("verify: {} checks, {} failures, {}", report.checks, report.failures.len(), verdict(pass));
    let body = json(Command::Verify, opts, &report, pass)?;
    Ok(Output { body, pass, summary })
}
