//! Builds core objects from a parsed configuration and runs one experiment.
//!
//! Building resolves references and checks every constraint the core
//! constructors enforce; its failures are validation errors. Failures after
//! that point are runtime errors.

use std::path::PathBuf;
use std::sync::Arc;

use nilcorr_core::averaging::{
    approximation_error, average, sweep_starts, window_sweep, AveragingScheme, PrimeSieve, DEFAULT_SIEVE_BUDGET,
};
use nilcorr_core::correlate::{CorrelationSpec, Iterate, PointOf, Sequence};
use nilcorr_core::equidist::{density_limit_scan, Enumeration};
use nilcorr_core::nilseq::{example_alpha, example_nil_approx, example_observable, example_spec, mollify, Nilsequence, Orbit};
use nilcorr_core::observables::{Coordinates, Integration, Obs, QuadratureRule, TrigObservable};
use nilcorr_core::poly::{BracketKind, BracketMap, VectorPolynomial};
use nilcorr_core::reduce::try_par_count;
use nilcorr_core::suspension::{exceptional, suspension_rows};
use nilcorr_core::systems::{HeisenbergAction, HeisenbergElement, LatticeAction, NilPoint, TorusAction, TorusPoint};
use nilcorr_core::{HeisenbergAction64, C64};
use num_complex::Complex;
use rayon::prelude::*;

use crate::config::{
    Config, ConfigError, CorrelationBlock, Epsilon, ExampleBlock, IndexRange, IntegrationKind, Name, NilseqBlock,
    ObsBlock, Positive, Scheme, SpaceKind, SweepBlock, SystemBlock,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Command {
    Correlate,
    Average,
    Equidist,
    Suspend,
    ApproxError,
    Example,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Correlate => "correlate",
            Command::Average => "average",
            Command::Equidist => "equidist",
            Command::Suspend => "suspend",
            Command::ApproxError => "approx-error",
            Command::Example => "example",
        }
    }
}

/// Command-line values that replace the matching config entries.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Overrides {
    pub cesaro: Option<(i128, i128)>,
    pub primes: Option<u64>,
    pub ap: Option<(i128, i128)>,
    pub poly: Option<String>,
    pub deltas: Vec<f64>,
    pub range: Option<(i128, i128)>,
}

#[derive(Debug)]
pub enum Failure {
    /// Exit code 1.
    Validation(Vec<ConfigError>),
    /// Exit code 2.
    Runtime(String),
}

impl Failure {
    pub fn exit_code(&self) -> i32 {
        match self {
            Failure::Validation(_) => 1,
            Failure::Runtime(_) => 2,
        }
    }

    fn invalid(message: impl Into<String>) -> Self {
        Failure::Validation(vec![ConfigError::new(message)])
    }
}

impl From<ConfigError> for Failure {
    fn from(e: ConfigError) -> Self {
        Failure::Validation(vec![e])
    }
}

fn runtime(e: nilcorr_core::Error) -> Failure {
    Failure::Runtime(e.to_string())
}

/// Where the sieve cache lives.
#[derive(Clone, Debug)]
pub struct Environment {
    pub sieve_cache: PathBuf,
}

/// A finished experiment: one CSV table and the summary lines.
#[derive(Clone, Debug, PartialEq)]
pub struct Report {
    pub csv_name: String,
    pub csv: String,
    pub summary: Vec<String>,
}

/// Full-precision scientific notation, 17 significant digits.
pub fn num(x: f64) -> String {
    format!("{x:.16e}")
}

struct Table {
    csv: String,
}

impl Table {
    fn new(header: &str) -> Self {
        Table {
            csv: format!("{header}\n"),
        }
    }

    fn row(&mut self, cells: &[String]) {
        self.csv.push_str(&cells.join(","));
        self.csv.push('\n');
    }
}

/// Resolves names against the source text for line numbers.
struct Ctx<'a> {
    config: &'a Config,
    source: &'a str,
}

impl Ctx<'_> {
    fn at(&self, name: &Name, message: impl Into<String>) -> ConfigError {
        ConfigError::at(self.source, name.span().start, message)
    }

    fn correlation(&self) -> Result<&CorrelationBlock, Failure> {
        self.config
            .correlation
            .as_ref()
            .ok_or_else(|| Failure::invalid("missing [correlation] block"))
    }

    fn system(&self) -> Result<&SystemBlock, Failure> {
        self.config
            .system
            .as_ref()
            .ok_or_else(|| Failure::invalid("missing [system] block"))
    }

    fn trig(&self, block: &ObsBlock, dim: usize) -> nilcorr_core::Result<TrigObservable<f64>> {
        match block {
            ObsBlock::Char { freq, amp } => TrigObservable::character(freq.clone(), Complex::new(amp[0], amp[1])),
            ObsBlock::Const { c } => Ok(TrigObservable::constant(dim, Complex::new(c[0], c[1]))),
            ObsBlock::Trig { terms } => TrigObservable::new(
                dim,
                terms.iter().map(|t| (t.freq.clone(), Complex::new(t.amp[0], t.amp[1]))),
            ),
        }
    }

    /// `a` or an inline product `a*b*…` of observable blocks on `dim`
    /// coordinates.
    fn observable(&self, expr: &Name, dim: usize) -> Result<TrigObservable<f64>, ConfigError> {
        let mut acc = TrigObservable::constant(dim, Complex::new(1.0, 0.0));
        for part in expr.get_ref().split('*') {
            let name = part.trim();
            let block = self
                .config
                .obs
                .get(name)
                .ok_or_else(|| self.at(expr, format!("unresolved reference to observable `{name}`")))?;
            let f = self.trig(block, dim).map_err(|e| self.at(expr, format!("observable `{name}`: {e}")))?;
            if f.dim() != dim {
                return Err(self.at(
                    expr,
                    format!("observable `{name}` has {} coordinates, the space has {dim}", f.dim()),
                ));
            }
            acc = acc.product(&f).map_err(|e| self.at(expr, e.to_string()))?;
        }
        Ok(acc)
    }

    fn poly(&self, name: &Name) -> Result<VectorPolynomial, ConfigError> {
        self.config
            .poly
            .get(name.get_ref())
            .map(|p| p.coords.value.clone())
            .ok_or_else(|| self.at(name, format!("unresolved reference to polynomial `{}`", name.get_ref())))
    }
}

enum System {
    Torus(TorusAction),
    Heisenberg(HeisenbergAction64),
}

fn build_system(ctx: &Ctx) -> Result<System, Failure> {
    match ctx.system()? {
        SystemBlock::Torus(t) => {
            if t.angles.len() != t.rank.0 as usize {
                return Err(Failure::invalid(format!(
                    "system.torus: angles has {} rows but rank = {}",
                    t.angles.len(),
                    t.rank.0
                )));
            }
            if let Some(row) = t.angles.iter().find(|r| r.len() != t.dim.0 as usize) {
                return Err(Failure::invalid(format!(
                    "system.torus: angle row of length {} but dim = {}",
                    row.len(),
                    t.dim.0
                )));
            }
            let rows = t
                .angles
                .iter()
                .map(|r| r.iter().map(|c| c.value.clone()).collect())
                .collect();
            TorusAction::new(rows)
                .map(System::Torus)
                .map_err(|e| Failure::invalid(format!("system.torus: {e}")))
        }
        SystemBlock::Heisenberg(h) => {
            let gens = h
                .g
                .iter()
                .map(|g| [g[0].value.clone(), g[1].value.clone(), g[2].value.clone()])
                .collect();
            HeisenbergAction::from_coefficients(gens)
                .map(System::Heisenberg)
                .map_err(|e| Failure::invalid(format!("system.heisenberg: {e}")))
        }
    }
}

fn build_spec<A>(ctx: &Ctx, action: A, dim: usize) -> Result<CorrelationSpec<A, f64>, Failure>
where
    A: LatticeAction<f64>,
    PointOf<A, f64>: Coordinates<f64> + 'static,
{
    let block = ctx.correlation()?;
    let m = block.polys.len();
    if block.functions.len() != m + 1 {
        return Err(Failure::invalid(format!(
            "correlation: {} functions for {m} polynomials; expected f0 plus one per polynomial",
            block.functions.len()
        )));
    }
    let brackets: Vec<BracketKind> = match &block.brackets {
        None => vec![BracketKind::Floor; m],
        Some(b) if b.len() == m => b.iter().map(|b| b.0).collect(),
        Some(b) => {
            return Err(Failure::invalid(format!(
                "correlation: {} brackets for {m} polynomials",
                b.len()
            )))
        }
    };
    let mut errors = Vec::new();
    let mut obs = Vec::new();
    for f in &block.functions {
        match ctx.observable(f, dim) {
            Ok(t) => obs.push(Arc::new(t) as Obs<PointOf<A, f64>, f64>),
            Err(e) => errors.push(e),
        }
    }
    let mut polys = Vec::new();
    for q in &block.polys {
        match ctx.poly(q) {
            Ok(p) => polys.push(p),
            Err(e) => errors.push(e),
        }
    }
    if !errors.is_empty() {
        return Err(Failure::Validation(errors));
    }
    let rule = QuadratureRule::new(block.quadrature_points.0).map_err(|e| Failure::invalid(e.to_string()))?;
    let integration = match block.integration {
        IntegrationKind::Auto => Integration::Auto(rule),
        IntegrationKind::Exact => Integration::Exact,
        IntegrationKind::Quadrature => Integration::Quadrature(rule),
    };
    let mut obs = obs.into_iter();
    let f0 = obs.next().expect("m + 1 functions");
    let iterates = obs
        .zip(polys)
        .zip(brackets)
        .map(|((f, q), kind)| {
            let ell = q.ell();
            Iterate {
                observable: f,
                poly: q,
                brackets: BracketMap::uniform(kind, ell),
            }
        })
        .collect();
    let spec = CorrelationSpec::new(action, f0, iterates, integration)
        .map_err(|e| Failure::invalid(format!("correlation: {e}")))?;
    if block.integration == IntegrationKind::Exact && !spec.is_exact() {
        return Err(Failure::invalid(
            "correlation: exact integration needs a torus system with trigonometric observables",
        ));
    }
    Ok(spec)
}

fn range_of(r: Option<crate::config::IndexRange>, what: &str) -> Result<(i128, i128), Failure> {
    r.map(|r| (i128::from(r.start), i128::from(r.end)))
        .ok_or_else(|| Failure::invalid(format!("{what}: missing range")))
}

fn load_sieve(schemes: &[AveragingScheme], env: &Environment) -> Result<Option<PrimeSieve>, Failure> {
    let Some(limit) = schemes.iter().filter_map(|s| s.sieve_limit()).max() else {
        return Ok(None);
    };
    PrimeSieve::load_or_build(&env.sieve_cache, limit, DEFAULT_SIEVE_BUDGET)
        .map(Some)
        .map_err(|e| Failure::Runtime(format!("sieve cache {}: {e}", env.sieve_cache.display())))
}

fn schemes_from(list: Option<&[Scheme]>, overrides: &Overrides, what: &str) -> Result<Vec<AveragingScheme>, Failure> {
    let mut out = Vec::new();
    if let Some((start, end)) = overrides.cesaro {
        out.push(AveragingScheme::Cesaro { start, end });
    }
    if let Some(n) = overrides.primes {
        let (r, s) = overrides.ap.unwrap_or((1, 0));
        out.push(AveragingScheme::Primes { n, r, s });
    }
    if out.is_empty() {
        out = list
            .ok_or_else(|| Failure::invalid(format!("missing [{what}] block")))?
            .iter()
            .map(|s| s.0)
            .collect();
    }
    if out.is_empty() {
        return Err(Failure::invalid(format!("{what}: no averaging schemes")));
    }
    for s in &out {
        s.validate().map_err(|e| Failure::invalid(e.to_string()))?;
    }
    Ok(out)
}

fn sweep_schemes(sweep: &SweepBlock) -> Vec<(i128, u64)> {
    sweep_starts(sweep.windows.0 as usize, i128::from(sweep.max_start))
        .into_iter()
        .map(|m| (m, u64::from(sweep.length.0)))
        .collect()
}

/// Rows `scheme,error` for the schemes and an optional window sweep.
fn error_rows<A, B>(
    alpha: &A,
    psi: &B,
    schemes: &[AveragingScheme],
    sweep: Option<&SweepBlock>,
    env: &Environment,
) -> Result<(Table, Vec<(String, f64)>), Failure>
where
    A: Sequence<f64>,
    B: Sequence<f64>,
{
    let sieve = load_sieve(schemes, env)?;
    let mut table = Table::new("scheme,error");
    let mut values = Vec::new();
    for s in schemes {
        let err: f64 = approximation_error(alpha, psi, s, sieve.as_ref()).map_err(runtime)?;
        table.row(&[s.to_string(), num(err)]);
        values.push((s.to_string(), err));
    }
    if let Some(sweep) = sweep {
        let mut worst = 0.0f64;
        for (start, length) in sweep_schemes(sweep) {
            let w = window_sweep(alpha, psi, length, &[start]).map_err(runtime)?[0];
            let scheme = AveragingScheme::Cesaro { start: w.start, end: w.end };
            table.row(&[scheme.to_string(), num(w.error)]);
            worst = worst.max(w.error);
        }
        values.push((format!("sweep max over {} windows of length {}", sweep.windows.0, sweep.length.0), worst));
    }
    Ok((table, values))
}

/// Runs `command` on a validated configuration.
pub fn run(
    command: Command,
    config: &Config,
    source: &str,
    overrides: &Overrides,
    env: &Environment,
) -> Result<Report, Failure> {
    let ctx = Ctx { config, source };
    match command {
        Command::Correlate => correlate(&ctx, &*build(&ctx)?),
        Command::Average => {
            let schemes = schemes_from(config.average.as_ref().map(|a| &a.schemes[..]), overrides, "average")?;
            average_report(&*build(&ctx)?, &schemes, env)
        }
        Command::Equidist => equidist(&ctx, overrides, env),
        Command::Suspend => suspend(&ctx, &*build(&ctx)?),
        Command::ApproxError => approx(&ctx, overrides, env),
        Command::Example => example(&ctx, env),
    }
}

/// The spec of the configured system.
fn build(ctx: &Ctx) -> Result<Box<dyn DynSpec>, Failure> {
    Ok(match build_system(ctx)? {
        System::Torus(t) => {
            let dim = t.dim();
            Box::new(build_spec(ctx, t, dim)?)
        }
        System::Heisenberg(h) => Box::new(build_spec(ctx, h, 3)?),
    })
}

/// The operations the runners need, object safe.
trait DynSpec: Sync {
    fn correlation(&self, n: i128) -> nilcorr_core::Result<C64>;
    fn exact(&self) -> bool;
    fn suspend_rows(&self, delta: f64, start: i128, end: i128) -> nilcorr_core::Result<Vec<SuspensionLine>>;
    fn polys(&self) -> Vec<VectorPolynomial>;
    fn floors_only(&self) -> bool;
}

struct SuspensionLine {
    n: i128,
    exceptional: bool,
    alpha: f64,
    scaled: f64,
    abs_diff: f64,
}

impl<A: LatticeAction<f64>> DynSpec for CorrelationSpec<A, f64> {
    fn correlation(&self, n: i128) -> nilcorr_core::Result<C64> {
        self.multicorrelation(n)
    }

    fn exact(&self) -> bool {
        self.is_exact()
    }

    fn suspend_rows(&self, delta: f64, start: i128, end: i128) -> nilcorr_core::Result<Vec<SuspensionLine>> {
        Ok(suspension_rows(self, delta, start, end)?
            .into_iter()
            .map(|r| SuspensionLine {
                n: r.n,
                exceptional: r.exceptional,
                alpha: r.alpha.re,
                scaled: r.alpha_tilde_scaled.re,
                abs_diff: r.abs_diff,
            })
            .collect())
    }

    fn polys(&self) -> Vec<VectorPolynomial> {
        self.iterates().iter().map(|it| it.poly.clone()).collect()
    }

    fn floors_only(&self) -> bool {
        self.iterates()
            .iter()
            .all(|it| it.brackets.kinds().iter().all(|k| *k == BracketKind::Floor))
    }
}

fn correlate(ctx: &Ctx, spec: &dyn DynSpec) -> Result<Report, Failure> {
    let (start, end) = range_of(ctx.correlation()?.range, "correlation")?;
    let values = (start..end)
        .into_par_iter()
        .map(|n| spec.correlation(n))
        .collect::<nilcorr_core::Result<Vec<_>>>()
        .map_err(runtime)?;
    let mut table = Table::new("n,re(alpha),im(alpha)");
    for (n, v) in (start..end).zip(&values) {
        table.row(&[n.to_string(), num(v.re), num(v.im)]);
    }
    let max = values.iter().map(|v| v.norm()).fold(0.0, f64::max);
    Ok(Report {
        csv_name: "correlate.csv".into(),
        csv: table.csv,
        summary: vec![
            format!("range: n in [{start}, {end})"),
            format!(
                "integration: {}",
                if spec.exact() { "exact (characters)" } else { "quadrature" }
            ),
            format!("max |alpha(n)|: {}", num(max)),
        ],
    })
}

fn average_report(spec: &dyn DynSpec, schemes: &[AveragingScheme], env: &Environment) -> Result<Report, Failure> {
    let sieve = load_sieve(schemes, env)?;
    let mut table = Table::new("scheme,value_re,value_im");
    let mut summary = Vec::new();
    for s in schemes {
        let v = average(&|n: i128| spec.correlation(n), s, sieve.as_ref()).map_err(runtime)?;
        table.row(&[s.to_string(), num(v.re), num(v.im)]);
        summary.push(format!("{s}: average = {} {:+}i", num(v.re), num(v.im)));
    }
    Ok(Report {
        csv_name: "average.csv".into(),
        csv: table.csv,
        summary,
    })
}

fn equidist(ctx: &Ctx, overrides: &Overrides, env: &Environment) -> Result<Report, Failure> {
    let block = ctx.config.equidist.as_ref();
    let q = match (&overrides.poly, block) {
        (Some(text), _) => VectorPolynomial::parse(&[text.as_str()])
            .map_err(|e| Failure::invalid(format!("--poly: {e}")))?,
        (None, Some(b)) => ctx.poly(&b.poly)?,
        (None, None) => return Err(Failure::invalid("missing [equidist] block or --poly")),
    };
    if q.ell() != 1 {
        return Err(Failure::invalid(format!("equidist needs a scalar polynomial, got {} coordinates", q.ell())));
    }
    let deltas: Vec<f64> = if overrides.deltas.is_empty() {
        block
            .map(|b| b.deltas.iter().map(|d| d.0).collect())
            .ok_or_else(|| Failure::invalid("equidist: no deltas"))?
    } else {
        overrides.deltas.clone()
    };
    if deltas.is_empty() {
        return Err(Failure::invalid("equidist: no deltas"));
    }
    if let Some(d) = deltas.iter().find(|d| !(**d > 0.0 && **d < 1.0)) {
        return Err(Failure::invalid(format!("delta {d} outside (0,1)")));
    }
    if deltas.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Failure::invalid("equidist: deltas must be strictly descending"));
    }
    let range = overrides
        .range
        .or_else(|| block.and_then(|b| b.range).map(|r| (i128::from(r.start), i128::from(r.end))));
    let primes = overrides.primes.or_else(|| block.and_then(|b| b.primes).map(|p| p.0));
    let ap = overrides
        .ap
        .or_else(|| block.and_then(|b| b.ap).map(|p| (i128::from(p.r), i128::from(p.s))));
    let enumeration = match (range, primes) {
        (Some((start, end)), None) => {
            if ap.is_some() {
                return Err(Failure::invalid("equidist: a progression applies to prime ranges only"));
            }
            if start >= end {
                return Err(Failure::invalid(format!("empty range [{start}, {end})")));
            }
            Enumeration::Window { start, end }
        }
        (None, Some(n)) => {
            let (r, s) = ap.unwrap_or((1, 0));
            if r < 1 || n < 2 {
                return Err(Failure::invalid("equidist: prime ranges need N ≥ 2 and r ≥ 1"));
            }
            Enumeration::Primes { n, r, s }
        }
        _ => return Err(Failure::invalid("equidist: give exactly one of range or primes")),
    };
    let sieve = match enumeration {
        Enumeration::Primes { n, .. } => load_sieve(&[AveragingScheme::Primes { n, r: 1, s: 0 }], env)?,
        Enumeration::Window { .. } => None,
    };
    let reports = density_limit_scan(&q, &deltas, enumeration, sieve.as_ref()).map_err(runtime)?;
    let mut table = Table::new("delta,hits,total,density,verdict");
    for r in &reports {
        table.row(&[
            num(r.delta),
            r.hits.to_string(),
            r.total.to_string(),
            num(r.density),
            r.verdict.to_string(),
        ]);
    }
    let mut summary = vec![
        format!("polynomial: {}", q.literal(0)),
        format!("index set: {enumeration}"),
        format!("rationality of q - q(0): {:?}", q.classify_rational(0)),
    ];
    for r in &reports {
        summary.push(format!(
            "delta {}: {} / {} hits, density {} ({})",
            num(r.delta),
            r.hits,
            r.total,
            num(r.density),
            r.verdict
        ));
    }
    summary.push(
        "note: finite-scale report; the limiting densities are double limits (delta -> 0 after N - M -> infinity)"
            .into(),
    );
    Ok(Report {
        csv_name: "equidist.csv".into(),
        csv: table.csv,
        summary,
    })
}

fn suspend(ctx: &Ctx, spec: &dyn DynSpec) -> Result<Report, Failure> {
    let block = ctx
        .config
        .suspend
        .as_ref()
        .ok_or_else(|| Failure::invalid("missing [suspend] block"))?;
    if !spec.floors_only() {
        return Err(Failure::invalid("suspend: the suspension construction needs floor brackets"));
    }
    let delta = block.delta.0;
    let (start, end) = (i128::from(block.range.start), i128::from(block.range.end));
    let rows = spec.suspend_rows(delta, start, end).map_err(runtime)?;
    let mut table = Table::new("n,exceptional,re(alpha),re(alpha_tilde_scaled),abs_diff");
    let mut worst_regular = 0.0f64;
    let mut worst = 0.0f64;
    for r in &rows {
        table.row(&[r.n.to_string(), r.exceptional.to_string(), num(r.alpha), num(r.scaled), num(r.abs_diff)]);
        worst = worst.max(r.abs_diff);
        if !r.exceptional {
            worst_regular = worst_regular.max(r.abs_diff);
        }
    }
    let ex = block.exceptional_range.unwrap_or(block.range);
    let polys = spec.polys();
    let len = (ex.end - ex.start) as u64;
    let hits = try_par_count(len, |k| exceptional(&polys, delta, i128::from(ex.start) + i128::from(k)))
        .map_err(runtime)?;
    Ok(Report {
        csv_name: "suspend.csv".into(),
        csv: table.csv,
        summary: vec![
            format!("delta: {}", num(delta)),
            format!("rows: n in [{start}, {end})"),
            format!("max abs_diff on non-exceptional rows: {}", num(worst_regular)),
            format!("max abs_diff on all rows: {}", num(worst)),
            format!(
                "exceptional fraction over {ex}: {} ({hits} of {len})",
                num(hits as f64 / len as f64)
            ),
        ],
    })
}

/// The nilsequence of a `[nilseq]` block and whether it is a constructive
/// approximant (a rotation with a continuous function).
fn build_nilseq(ctx: &Ctx, block: &NilseqBlock) -> Result<(Nilsequence<f64>, bool), Failure> {
    let is_example = block.f.get_ref() == "example";
    match block.space {
        SpaceKind::Torus => {
            let dim = block.x.len();
            if block.g.len() != dim || dim == 0 {
                return Err(Failure::invalid(format!(
                    "nilseq: g has {} coordinates, x has {dim}",
                    block.g.len()
                )));
            }
            let g = TorusAction::new(vec![block.g.iter().map(|c| c.value.clone()).collect()])
                .map_err(|e| Failure::invalid(format!("nilseq: {e}")))?;
            let (f, continuous): (Obs<TorusPoint<f64>, f64>, bool) = if is_example {
                if dim != 1 {
                    return Err(Failure::invalid("nilseq: the example function lives on the circle"));
                }
                (example_observable().map_err(runtime)?, false)
            } else {
                (Arc::new(ctx.observable(&block.f, dim)?), true)
            };
            let (f, continuous) = match block.mollify {
                None => (f, continuous),
                Some(w) => {
                    if dim != 1 {
                        return Err(Failure::invalid("nilseq: mollification is defined on the circle"));
                    }
                    let jumps = match (&block.discontinuities, is_example) {
                        (Some(d), _) => d.clone(),
                        (None, true) => vec![0.0],
                        (None, false) => Vec::new(),
                    };
                    let m = mollify(f, &jumps, w.0).map_err(|e| Failure::invalid(format!("nilseq: {e}")))?;
                    (Arc::new(m) as Obs<TorusPoint<f64>, f64>, true)
                }
            };
            let x = TorusPoint::new(block.x.clone());
            let psi = Nilsequence::new(Orbit::Torus { g, x, f }, block.step.0)
                .map_err(|e| Failure::invalid(format!("nilseq: {e}")))?;
            Ok((psi, continuous))
        }
        SpaceKind::Heisenberg => {
            if block.g.len() != 3 || block.x.len() != 3 {
                return Err(Failure::invalid("nilseq: Heisenberg g and x need three coordinates"));
            }
            if block.mollify.is_some() || is_example {
                return Err(Failure::invalid("nilseq: mollified and example functions live on the circle"));
            }
            let v = |k: usize| block.g[k].value.value();
            let g = HeisenbergElement::new(v(0), v(1), v(2));
            let x = NilPoint::new(HeisenbergElement::new(block.x[0], block.x[1], block.x[2]));
            let f: Obs<NilPoint<f64>, f64> = Arc::new(ctx.observable(&block.f, 3)?);
            let action = HeisenbergAction::translation(g).map_err(|e| Failure::invalid(format!("nilseq: {e}")))?;
            let psi = Nilsequence::new(Orbit::Heisenberg { g: action, x, f }, block.step.0)
                .map_err(|e| Failure::invalid(format!("nilseq: {e}")))?;
            Ok((psi, false))
        }
    }
}

fn approx(ctx: &Ctx, overrides: &Overrides, env: &Environment) -> Result<Report, Failure> {
    let block = ctx.config.approx.as_ref();
    let schemes = schemes_from(block.map(|b| &b.schemes[..]), overrides, "approx")?;
    let nil = ctx
        .config
        .nilseq
        .as_ref()
        .ok_or_else(|| Failure::invalid("missing [nilseq] block"))?;
    let (psi, constructive) = build_nilseq(ctx, nil)?;
    let sweep = block.and_then(|b| b.sweep.as_ref());
    let spec = build(ctx)?;
    {
        let alpha = |n: i128| spec.correlation(n);
        let (table, values) = error_rows(&alpha, &psi, &schemes, sweep, env)?;
        let mut summary = vec![format!(
            "candidate: step-{} nilsequence on the {} ({})",
            psi.step(),
            match nil.space {
                SpaceKind::Torus => "torus",
                SpaceKind::Heisenberg => "Heisenberg nilmanifold",
            },
            if constructive {
                "constructive: rotation with a continuous function"
            } else {
                "candidate verification only"
            }
        )];
        summary.extend(values.iter().map(|(s, e)| format!("{s}: error = {}", num(*e))));
        Ok(Report {
            csv_name: "approx_error.csv".into(),
            csv: table.csv,
            summary,
        })
    }
}

fn example(ctx: &Ctx, env: &Environment) -> Result<Report, Failure> {
    let defaults = default_example();
    let block = ctx.config.example.as_ref().unwrap_or(&defaults);
    let eps = block.epsilon.0;
    let spec = example_spec::<f64>().map_err(runtime)?;
    let (start, end) = (i128::from(block.identity_range.start), i128::from(block.identity_range.end));
    let identity = (start..end)
        .into_par_iter()
        .map(|n| Ok((spec.multicorrelation(n)? - example_alpha::<f64>(n)?).norm()))
        .collect::<nilcorr_core::Result<Vec<f64>>>()
        .map_err(runtime)?
        .into_iter()
        .fold(0.0, f64::max);
    let psi = example_nil_approx::<f64>(eps).map_err(runtime)?;
    let schemes: Vec<AveragingScheme> = block.schemes.iter().map(|s| s.0).collect();
    let alpha = |n: i128| example_alpha::<f64>(n);
    let (table, values) = error_rows(&alpha, &psi, &schemes, block.sweep.as_ref(), env)?;
    let mut summary = vec![
        "alpha(n) = e({sqrt(2) n}/sqrt(2)): rotation by 1/sqrt(2), f0 = e(x), f1 = e(-x), q(n) = sqrt(2) n".to_string(),
        format!(
            "identity: max |alpha(n) - closed form| over [{start}, {end}) = {}",
            num(identity)
        ),
        format!(
            "candidate: psi(n) = F_w({{sqrt(2) n}}) with w = epsilon/4 = {}, a 1-step nilsequence",
            num(eps / 4.0)
        ),
    ];
    for (s, e) in &values {
        let verdict = if *e <= eps { "<=" } else { ">" };
        summary.push(format!("{s}: error = {} ({verdict} epsilon = {})", num(*e), num(eps)));
    }
    Ok(Report {
        csv_name: "example.csv".into(),
        csv: table.csv,
        summary,
    })
}

/// The example run when no `[example]` block is given.
pub fn default_example() -> ExampleBlock {
    ExampleBlock {
        epsilon: Epsilon(0.1),
        identity_range: IndexRange { start: 0, end: 10_001 },
        schemes: vec![
            Scheme(AveragingScheme::Cesaro { start: 1, end: 1_000_001 }),
            Scheme(AveragingScheme::Primes { n: 1_000_000, r: 1, s: 0 }),
        ],
        sweep: Some(SweepBlock {
            length: Positive(100_000),
            windows: Positive(10),
            max_start: 1_000_000_000,
        }),
    }
}
