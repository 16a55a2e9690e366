//! Command functions behind the `wreath` binary.
//!
//! Every command yields an [`Outcome`]: the text to print and the exit code
//! (0 success, 1 usage or I/O, 2 validation or verification failure).

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};
use wreath_core::arith::{self, gamma_table};
use wreath_core::exact_seq::{build_3x3, verify_mul_oracle, verify_theta_twisted, verify_theta_wreath, Report, ThetaOptions};
use wreath_core::pi1::pi1_nonorientable;
use wreath_core::poly::{jacobian_certificate, milnor_number_at, parse_poly, Variable};
use wreath_core::surface::ValidationReport;
use wreath_core::{
    bieberbach_diagram, invariant_fingerprint, ker_s_act_probe, lefschetz_check, parse_expr, parse_gamma, pi1_mobius,
    read_input, Carrier, ConcreteGroup, CwAutomorphism, Element, Error, GroupExpr, InputFile, Pi1Result, Style,
    DEFAULT_CAP,
};

pub const DEFAULT_SEED: u64 = 0x5eed;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Text,
    Json,
    Latex,
}

#[derive(Debug, Parser)]
#[command(name = "wreath", version, about = "Orbit fundamental groups, wreath-type groups and their verification")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    #[arg(long, global = true, value_enum, default_value_t = Format::Text)]
    pub format: Format,
    /// Seed for every randomized check.
    #[arg(long, global = true, default_value_t = DEFAULT_SEED)]
    pub seed: u64,
    /// Number of quotient multipliers `N = 1..=depth` to check or fingerprint.
    #[arg(long, global = true, default_value_t = 1, value_parser = clap::value_parser!(u64).range(1..))]
    pub depth: u64,
    /// Largest finite group order built as a table.
    #[arg(long, global = true, default_value_t = DEFAULT_CAP as u64, value_parser = clap::value_parser!(u64).range(1..))]
    pub cap: u64,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Fundamental group of the orbit for a band or surface decomposition file.
    Pi1 {
        file: PathBuf,
        /// Also emit the Bieberbach 3x3 diagram (band files with Delta data).
        #[arg(long)]
        diagram: bool,
    },
    /// Validates a decomposition file, or runs the Lefschetz and kernel checks on a cellular file.
    Validate { file: PathBuf },
    /// Checks exact sequences and product laws on concrete instances.
    #[command(subcommand)]
    Verify(VerifyTarget),
    /// Binary forms: squarefreeness, Jacobian certificates, Milnor numbers.
    #[command(subcommand)]
    Poly(PolyAction),
    /// Arithmetic in a group given by an expression.
    #[command(subcommand)]
    Group(GroupAction),
}

#[derive(Debug, Subcommand)]
pub enum VerifyTarget {
    /// `theta` for `G wr_m Z` on the quotients `Z_(m N)`.
    Wreath {
        #[arg(long)]
        g: String,
        #[arg(long)]
        m: usize,
    },
    /// `theta` for `(G, H) wr_(gamma, m) Z` on the quotients `Z_(2m N)`.
    Twisted {
        #[arg(long)]
        g: String,
        #[arg(long)]
        h: String,
        #[arg(long, default_value = "id")]
        gamma: String,
        #[arg(long)]
        m: usize,
    },
    /// 3x3 diagram of two normal subgroups `A, L` of a finite `B`.
    #[command(name = "3x3")]
    ThreeByThree(ThreeByThreeArgs),
    /// Closed-form products against the stepwise semidirect oracle.
    MulOracle {
        #[arg(long, default_value_t = 1000)]
        samples: usize,
    },
}

#[derive(Debug, Args)]
pub struct ThreeByThreeArgs {
    #[arg(long)]
    pub b: String,
    /// `kZn` for the subgroup generated by `k` in `B = Z<n>`, or a JSON list of element generators.
    #[arg(long)]
    pub a: String,
    #[arg(long)]
    pub l: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Var {
    X,
    Y,
}

#[derive(Debug, Subcommand)]
pub enum PolyAction {
    /// Whether the form has no repeated linear factor.
    Squarefree { poly: String },
    /// Jacobian certificate `g_x P + g_y Q = v^m`, re-verified by expansion.
    Certificate {
        #[arg(value_enum)]
        variable: Var,
        poly: String,
    },
    /// Milnor number, computed at two cutoffs.
    Milnor { poly: String },
}

#[derive(Debug, Subcommand)]
pub enum GroupAction {
    /// Product of two elements given as JSON.
    Mul { expr: String, u: String, v: String },
    /// Inverse of an element given as JSON.
    Inv { expr: String, u: String },
    /// Order of the group, or of an element when one is given.
    Order { expr: String, u: Option<String> },
    /// Orders and abelian invariants of the quotients `N = 1..=depth`.
    Quotient { expr: String },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Outcome {
    pub code: i32,
    pub stdout: String,
    pub stderr: String,
}

impl Outcome {
    fn ok(stdout: String) -> Self {
        Outcome { code: 0, stdout, stderr: String::new() }
    }

    fn failed(stdout: String, why: impl Into<String>) -> Self {
        Outcome { code: 2, stdout, stderr: why.into() }
    }
}

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Io(PathBuf, std::io::Error),
    Core(Error),
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Core(e)
    }
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) | CliError::Io(..) => 1,
            CliError::Core(
                Error::Parse { .. } | Error::Schema(_) | Error::Shape(_) | Error::CapExceeded { .. } | Error::InfiniteLeaf(_),
            ) => 1,
            CliError::Core(_) => 2,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(s) => f.write_str(s),
            CliError::Io(p, e) => write!(f, "{}: {e}", p.display()),
            CliError::Core(e) => write!(f, "{e}"),
        }
    }
}

type CliResult<T> = std::result::Result<T, CliError>;

/// Parses `args` (program name first) and runs the command.
pub fn run<I, T>(args: I) -> Outcome
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    match Cli::try_parse_from(args) {
        Ok(cli) => execute(&cli),
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let text = e.render().to_string();
            if code == 0 {
                Outcome::ok(text)
            } else {
                Outcome { code, stdout: String::new(), stderr: text }
            }
        }
    }
}

pub fn execute(cli: &Cli) -> Outcome {
    let result = match &cli.command {
        Command::Pi1 { file, diagram } => cmd_pi1(cli, file, *diagram),
        Command::Validate { file } => cmd_validate(cli, file),
        Command::Verify(t) => cmd_verify(cli, t),
        Command::Poly(a) => cmd_poly(cli, a),
        Command::Group(a) => cmd_group(cli, a),
    };
    result.unwrap_or_else(|e| Outcome { code: e.exit_code(), stdout: String::new(), stderr: format!("error: {e}") })
}

fn cap(cli: &Cli) -> usize {
    usize::try_from(cli.cap).unwrap_or(usize::MAX)
}

fn render(cli: &Cli, value: Value, text: impl FnOnce() -> String) -> String {
    match cli.format {
        Format::Json => serde_json::to_string_pretty(&value).expect("JSON values print") + "\n",
        Format::Text | Format::Latex => {
            let mut s = text();
            if !s.ends_with('\n') {
                s.push('\n');
            }
            s
        }
    }
}

fn read_file(path: &Path) -> CliResult<InputFile> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Io(path.to_path_buf(), e))?;
    Ok(read_input(&text)?)
}

fn report_json(r: &ValidationReport) -> Value {
    json!({ "valid": r.is_valid(), "violations": r.violations, "counts": r.counts })
}

fn pi1_text(cli: &Cli, r: &Pi1Result) -> String {
    if cli.format == Format::Latex {
        return r.latex();
    }
    let mut s = format!("{}\ncase: {}\nin class G: {}", r.expression, r.case.as_str(), r.in_class_g);
    if let Some(c) = &r.counts {
        let _ = write!(s, "\ncounts: n = {}, b = {}, d = {}, e = {}", c.n, c.b, c.d, c.e);
        if let Some(m) = c.m {
            let _ = write!(s, ", m = {m}");
        }
    }
    if let Some(a) = &r.a_factor {
        let _ = write!(s, "\nA: {a}");
    }
    s
}

pub fn cmd_pi1(cli: &Cli, file: &Path, diagram: bool) -> CliResult<Outcome> {
    let input = read_file(file)?;
    let reports: Vec<ValidationReport> = match &input {
        InputFile::Band(d) => vec![d.validate()],
        InputFile::Surface(s) => s.mobius_pieces.iter().map(|d| d.validate()).collect(),
        InputFile::Cellular(_) => return Err(CliError::Usage("pi1 needs a band or surface decomposition".into())),
    };
    if let Some(bad) = reports.iter().position(|r| !r.is_valid()) {
        let single = matches!(input, InputFile::Band(_));
        let out = render(cli, json!({ "piece": bad + 1, "report": report_json(&reports[bad]) }), || {
            if single {
                reports[bad].to_string()
            } else {
                format!("piece {}: {}", bad + 1, reports[bad])
            }
        });
        return Ok(Outcome::failed(out, "validation failed"));
    }
    let (result, band) = match &input {
        InputFile::Band(d) => (pi1_mobius(d)?, Some(d)),
        InputFile::Surface(s) => (pi1_nonorientable(s)?, None),
        InputFile::Cellular(_) => unreachable!(),
    };
    let mut value = result.to_json();
    let mut text = pi1_text(cli, &result);
    let mut code = 0;
    if diagram {
        let d = band.ok_or_else(|| CliError::Usage("--diagram needs a band file".into()))?;
        let dg = bieberbach_diagram(d, cap(cli))?;
        let passed = dg.concrete.as_ref().is_none_or(Report::passed);
        if !passed {
            code = 2;
        }
        value["diagram"] = json!({
            "nodes": dg.nodes.iter().map(|(k, v)| json!([k, v])).collect::<Vec<_>>(),
            "concrete": dg.concrete,
            "note": dg.note,
        });
        text.push_str("\ndiagram:");
        for row in dg.nodes.chunks(3) {
            let cells: Vec<String> = row.iter().map(|(k, v)| format!("{k} = {v}")).collect();
            let _ = write!(text, "\n  {}", cells.join("  ->  "));
        }
        match (&dg.concrete, &dg.note) {
            (Some(r), _) => text.push_str(&report_text(r)),
            (None, Some(n)) => {
                let _ = write!(text, "\n  {n}");
            }
            (None, None) => {}
        }
    }
    let out = render(cli, value, || text);
    Ok(if code == 0 { Outcome::ok(out) } else { Outcome::failed(out, "diagram check failed") })
}

fn cellular_checks(cli: &Cli, w: &CwAutomorphism) -> CliResult<Outcome> {
    w.complex.check()?;
    let lefschetz = lefschetz_check(w);
    let probe = ker_s_act_probe(w);
    let (lefschetz_json, lefschetz_text, holds) = match &lefschetz {
        Ok(r) => (json!(r), format!("Lefschetz number {} against Euler characteristic {}", r.lefschetz, r.euler), r.holds),
        Err(e) => (json!({ "error": e.to_string() }), format!("Lefschetz check not applicable: {e}"), false),
    };
    let value = json!({ "lefschetz": lefschetz_json, "kernel_probe": probe, "passed": holds && probe.agree });
    let out = render(cli, value, || {
        let conds: Vec<String> = probe.conditions.iter().map(|(c, b)| format!("({c}) {b}")).collect();
        format!(
            "{lefschetz_text}: {}\nkernel conditions: {}\nconditions agree: {}",
            if holds { "holds" } else { "fails" },
            conds.join(", "),
            probe.agree
        )
    });
    Ok(if holds && probe.agree { Outcome::ok(out) } else { Outcome::failed(out, "cellular checks failed") })
}

pub fn cmd_validate(cli: &Cli, file: &Path) -> CliResult<Outcome> {
    let reports = match read_file(file)? {
        InputFile::Band(d) => vec![d.validate()],
        InputFile::Surface(s) => {
            if s.mobius_pieces.len() as u64 > s.genus {
                return Err(Error::Invalid(format!("{} bands on a surface of genus {}", s.mobius_pieces.len(), s.genus)).into());
            }
            s.mobius_pieces.iter().map(|d| d.validate()).collect()
        }
        InputFile::Cellular(w) => return cellular_checks(cli, &w),
    };
    let valid = reports.iter().all(ValidationReport::is_valid);
    let value = if reports.len() == 1 {
        report_json(&reports[0])
    } else {
        json!({ "valid": valid, "pieces": reports.iter().map(report_json).collect::<Vec<_>>() })
    };
    let out = render(cli, value, || {
        if reports.len() == 1 {
            return reports[0].to_string();
        }
        let lines: Vec<String> = reports.iter().enumerate().map(|(i, r)| format!("piece {}: {r}", i + 1)).collect();
        lines.join("\n")
    });
    Ok(if valid { Outcome::ok(out) } else { Outcome::failed(out, "validation failed") })
}

fn report_text(r: &Report) -> String {
    let n = r.order as u64;
    let scope = if n > 0 && r.pairs_checked == n * n {
        format!("{n} elements exhausted, {} pairs", r.pairs_checked)
    } else if r.pairs_checked > 0 {
        format!("{} sampled pairs", r.pairs_checked)
    } else {
        format!("order {n}")
    };
    let mut s = format!("\n  {}: {} ({scope})", r.target, if r.passed() { "pass" } else { "FAIL" });
    for c in &r.checks {
        let _ = write!(s, "\n    {} {}", if c.passed { "ok  " } else { "FAIL" }, c.name);
        if let Some(w) = &c.witness {
            let _ = write!(s, ": {w}");
        }
    }
    s
}

fn reports_outcome(cli: &Cli, title: &str, reports: Vec<Report>) -> Outcome {
    let passed = reports.iter().all(Report::passed);
    let value = json!({ "target": title, "passed": passed, "reports": reports });
    let out = render(cli, value, || {
        let mut s = format!("{title}: {}", if passed { "pass" } else { "FAIL" });
        for r in &reports {
            s.push_str(&report_text(r));
        }
        s
    });
    if passed {
        Outcome::ok(out)
    } else {
        Outcome::failed(out, "verification failed")
    }
}

/// Instances of the sampled oracle check: twisted carriers over leaves in
/// `{1, Z, Z2, Z3}` with `m <= 4`, plus plain wreaths.
pub fn oracle_instances() -> Vec<GroupExpr> {
    let leaves = ["1", "Z", "Z2", "Z3"];
    let mut out = Vec::new();
    for m in 1..=4 {
        for g in leaves {
            for h in leaves {
                let gamma = if h == "Z3" { "inv" } else { "id" };
                out.push(format!("TwWr({g}, {h}, {gamma}, {m})"));
                out.push(format!("TwWrM({g}, {h}, id, {m})"));
            }
            out.push(format!("Wr({g}, {m})"));
            out.push(format!("WrM({g}, {m})"));
        }
    }
    out.iter().map(|s| parse_expr(s).expect("instance grammar")).collect()
}

fn parse_subgroup(b_expr: &GroupExpr, b: &ConcreteGroup, text: &str) -> CliResult<Vec<bool>> {
    let gens: Vec<Element> = if let Some((k, n)) = text.split_once('Z').filter(|_| !text.trim_start().starts_with('[')) {
        let bad = || CliError::Usage(format!("subgroup `{text}`: expected kZn or a JSON list"));
        let k: u64 = if k.is_empty() { 1 } else { k.parse().map_err(|_| bad())? };
        let n: u64 = n.parse().map_err(|_| bad())?;
        if *b_expr != GroupExpr::Cyclic(n) {
            return Err(CliError::Usage(format!("`{text}` needs B = Z{n}")));
        }
        vec![Element::Res(k % n)]
    } else {
        let v: Value = serde_json::from_str(text).map_err(|e| CliError::Usage(format!("subgroup `{text}`: {e}")))?;
        let list = v.as_array().ok_or_else(|| CliError::Usage(format!("subgroup `{text}` is not a list")))?;
        let carrier = Carrier::quotient(b_expr, 1, false)?;
        list.iter().map(|x| carrier.element_from_json(x)).collect::<wreath_core::Result<_>>()?
    };
    let idx = gens
        .iter()
        .map(|x| {
            b.labels().iter().position(|y| y == x).ok_or_else(|| CliError::Usage(format!("{x} is not an element of B")))
        })
        .collect::<CliResult<Vec<_>>>()?;
    Ok(b.closure(&idx))
}

pub fn cmd_verify(cli: &Cli, target: &VerifyTarget) -> CliResult<Outcome> {
    let options = |n: u64| ThetaOptions { multiplier: n, cap: cap(cli), ..ThetaOptions::default() };
    match target {
        VerifyTarget::Wreath { g, m } => {
            let g = ConcreteGroup::from_expr(&parse_expr(g)?, 1, cap(cli))?;
            let reports = (1..=cli.depth).map(|n| verify_theta_wreath(&g, *m, &options(n))).collect::<Result<_, _>>()?;
            Ok(reports_outcome(cli, "wreath", reports))
        }
        VerifyTarget::Twisted { g, h, gamma, m } => {
            let h_expr = parse_expr(h)?;
            let g = ConcreteGroup::from_expr(&parse_expr(g)?, 1, cap(cli))?;
            let hg = ConcreteGroup::from_expr(&h_expr, 1, cap(cli))?;
            let gamma = parse_gamma(gamma, &h_expr)?;
            arith::validate_gamma(&h_expr, &gamma)?;
            let table = gamma_table(&gamma, &Carrier::quotient(&h_expr, 1, false)?, hg.order());
            let reports = (1..=cli.depth)
                .map(|n| verify_theta_twisted(&g, &hg, &table, *m, &options(n)))
                .collect::<Result<_, _>>()?;
            Ok(reports_outcome(cli, "twisted", reports))
        }
        VerifyTarget::ThreeByThree(args) => {
            let b_expr = parse_expr(&args.b)?;
            let b = ConcreteGroup::from_expr(&b_expr, 1, cap(cli))?;
            let a = parse_subgroup(&b_expr, &b, &args.a)?;
            let l = parse_subgroup(&b_expr, &b, &args.l)?;
            let d = build_3x3(&b, &a, &l)?;
            let mut outcome = reports_outcome(cli, "3x3", vec![d.report.clone()]);
            if cli.format != Format::Json {
                let nodes: Vec<String> = d.nodes.iter().map(|n| format!("{} ({})", n.name, n.group.order())).collect();
                for row in nodes.chunks(3) {
                    let _ = writeln!(outcome.stdout, "  {}", row.join("  ->  "));
                }
            }
            Ok(outcome)
        }
        VerifyTarget::MulOracle { samples } => {
            let mut reports = Vec::new();
            let exhaustive = Carrier::quotient(&parse_expr("TwWr(Z2, Z3, id, 1)")?, 1, false)?;
            reports.push(verify_mul_oracle(&exhaustive, None, cli.seed, 8)?);
            for (i, e) in oracle_instances().iter().enumerate() {
                let c = Carrier::from_expr(e);
                let mut r = verify_mul_oracle(&c, Some(*samples), cli.seed.wrapping_add(i as u64), 8)?;
                r.target = e.to_string();
                reports.push(r);
            }
            Ok(reports_outcome(cli, "mul-oracle", reports))
        }
    }
}

pub fn cmd_poly(cli: &Cli, action: &PolyAction) -> CliResult<Outcome> {
    match action {
        PolyAction::Squarefree { poly } => {
            let g = parse_poly(poly)?;
            let sf = g.is_squarefree()?;
            Ok(Outcome::ok(render(cli, json!({ "polynomial": g.to_string(), "squarefree": sf }), || sf.to_string())))
        }
        PolyAction::Certificate { variable, poly } => {
            let g = parse_poly(poly)?;
            let v = match variable {
                Var::X => Variable::X,
                Var::Y => Variable::Y,
            };
            let c = jacobian_certificate(&g, v)?;
            let verified = c.verify(&g);
            let name = if v == Variable::X { "x" } else { "y" };
            let value = json!({
                "polynomial": g.to_string(),
                "variable": name,
                "m": c.m,
                "P": c.p.to_string(),
                "Q": c.q.to_string(),
                "verified": verified,
            });
            let out = render(cli, value, || {
                format!("P = {}\nQ = {}\nm = {}\ng_x P + g_y Q = {name}^{}: {}", c.p, c.q, c.m, c.m, if verified { "verified" } else { "FAILED" })
            });
            Ok(if verified { Outcome::ok(out) } else { Outcome::failed(out, "certificate identity failed") })
        }
        PolyAction::Milnor { poly } => {
            let g = parse_poly(poly)?;
            let cx = jacobian_certificate(&g, Variable::X)?;
            let cy = jacobian_certificate(&g, Variable::Y)?;
            let cutoff = 2 * cx.m.max(cy.m);
            let mu = milnor_number_at(&g, cutoff)?;
            let mu2 = milnor_number_at(&g, 2 * cutoff)?;
            let value = json!({ "polynomial": g.to_string(), "milnor": mu, "cutoffs": [[cutoff, mu], [2 * cutoff, mu2]], "stable": mu == mu2 });
            let out = render(cli, value, || {
                if mu == mu2 {
                    mu.to_string()
                } else {
                    format!("{mu} (unstable: {mu2} at cutoff {})", 2 * cutoff)
                }
            });
            Ok(if mu == mu2 { Outcome::ok(out) } else { Outcome::failed(out, "Milnor number unstable in the cutoff") })
        }
    }
}

fn element(carrier: &Carrier, text: &str) -> CliResult<Element> {
    let v: Value = serde_json::from_str(text).map_err(|e| CliError::Usage(format!("element `{text}`: {e}")))?;
    let x = carrier.element_from_json(&v)?;
    carrier.check(&x)?;
    Ok(x)
}

pub fn cmd_group(cli: &Cli, action: &GroupAction) -> CliResult<Outcome> {
    let elem_out = |x: Element| Outcome::ok(render(cli, x.to_json(), || x.to_json().to_string()));
    match action {
        GroupAction::Mul { expr, u, v } => {
            let c = Carrier::from_expr(&parse_expr(expr)?);
            Ok(elem_out(c.mul(&element(&c, u)?, &element(&c, v)?)?))
        }
        GroupAction::Inv { expr, u } => {
            let c = Carrier::from_expr(&parse_expr(expr)?);
            Ok(elem_out(c.inverse(&element(&c, u)?)?))
        }
        GroupAction::Order { expr, u } => {
            let e = parse_expr(expr)?;
            let c = Carrier::from_expr(&e);
            let order = match u {
                None => c.order(),
                Some(u) => c.element_order(&element(&c, u)?, cli.cap)?.map(u128::from),
            };
            let text = order.map_or("infinite".to_string(), |n| n.to_string());
            Ok(Outcome::ok(render(cli, json!({ "order": order.map(|n| n.to_string()) }), || text)))
        }
        GroupAction::Quotient { expr } => {
            let e = parse_expr(expr)?;
            let f = invariant_fingerprint(&e, cli.depth, cap(cli))?;
            let out = render(cli, json!({ "expression": e.format(Style::Plain), "levels": f.levels }), || {
                let lines: Vec<String> = f
                    .levels
                    .iter()
                    .map(|l| format!("N = {}: order {}, abelianization {:?}", l.multiplier, l.order, l.abelian_invariants))
                    .collect();
                lines.join("\n")
            });
            Ok(Outcome::ok(out))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exit_codes() {
        assert_eq!(CliError::Usage(String::new()).exit_code(), 1);
        assert_eq!(CliError::Core(Error::Schema(String::new())).exit_code(), 1);
        assert_eq!(CliError::Core(Error::CapExceeded { order: 10, cap: 5 }).exit_code(), 1);
        assert_eq!(CliError::Core(Error::InfiniteLeaf("Z".into())).exit_code(), 1);
        assert_eq!(CliError::Core(Error::Precondition(String::new())).exit_code(), 2);
    }

    #[test]
    fn oracle_instances_parse_and_check() {
        let all = oracle_instances();
        assert_eq!(all.len(), 4 * 4 * (2 * 4 + 2));
        for e in all.iter().take(12) {
            assert!(verify_mul_oracle(&Carrier::from_expr(e), Some(16), 1, 4).unwrap().passed(), "{e}");
        }
    }

    #[test]
    fn subgroup_syntax() {
        let b_expr = GroupExpr::Cyclic(6);
        let b = ConcreteGroup::cyclic(6);
        let count = |t: &str| parse_subgroup(&b_expr, &b, t).map(|s| s.iter().filter(|&&x| x).count());
        assert_eq!(count("2Z6").unwrap(), 3);
        assert_eq!(count("Z6").unwrap(), 6);
        assert_eq!(count("[3]").unwrap(), 2);
        assert!(matches!(count("2Z4"), Err(CliError::Usage(_))));
        assert!(count("xZ6").is_err());
    }

    #[test]
    fn help_exits_zero() {
        let out = run(["wreath", "--help"]);
        assert_eq!(out.code, 0);
        assert!(out.stdout.contains("pi1"));
        assert_eq!(run(["wreath", "bogus"]).code, 1);
    }
}
