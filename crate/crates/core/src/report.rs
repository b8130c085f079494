//! Pipeline report schema, the 17-significant-digit JSON writer and the
//! human-readable summary.

use std::io;

use serde::{Deserialize, Serialize};
use serde_json::ser::{Formatter, PrettyFormatter};
use serde_json::Value;

use crate::error::Result;

pub const SCHEMA: &str = "shockfront.report/1";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StageStatus {
    Pass,
    Fail,
    Inconclusive,
    Skipped,
}

impl StageStatus {
    pub fn label(self) -> &'static str {
        match self {
            StageStatus::Pass => "PASS",
            StageStatus::Fail => "FAIL",
            StageStatus::Inconclusive => "INCONCLUSIVE",
            StageStatus::Skipped => "SKIPPED",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StageReport {
    pub name: String,
    pub status: StageStatus,
    /// False for stages listed as optional; their status does not affect the exit code.
    pub required: bool,
    pub reason: Option<String>,
    pub details: Value,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Provenance {
    pub version: String,
    pub config_hash: String,
    pub seed: u64,
    pub model: String,
}

/// Wall times are kept out of the report (see `timings.json`) so that
/// reports are bit-identical across runs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PipelineReport {
    pub schema: String,
    pub provenance: Provenance,
    pub stages: Vec<StageReport>,
    pub artifacts: Vec<String>,
}

impl PipelineReport {
    pub fn stage(&self, name: &str) -> Option<&StageReport> {
        self.stages.iter().find(|s| s.name == name)
    }

    /// True iff every required stage passed.
    pub fn success(&self) -> bool {
        self.stages.iter().filter(|s| s.required).all(|s| s.status == StageStatus::Pass)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let report: PipelineReport = serde_json::from_str(text)?;
        if report.schema != SCHEMA {
            return Err(crate::Error::InvalidInput(format!("unknown report schema `{}`", report.schema)));
        }
        Ok(report)
    }
}

/// Pretty printer writing every float as `{:.16e}` (17 significant digits).
struct Digits17<'a>(PrettyFormatter<'a>);

impl Formatter for Digits17<'_> {
    fn write_f64<W: ?Sized + io::Write>(&mut self, w: &mut W, value: f64) -> io::Result<()> {
        write!(w, "{value:.16e}")
    }
    fn begin_array<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_array(w)
    }
    fn end_array<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_array(w)
    }
    fn begin_array_value<W: ?Sized + io::Write>(&mut self, w: &mut W, first: bool) -> io::Result<()> {
        self.0.begin_array_value(w, first)
    }
    fn end_array_value<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_array_value(w)
    }
    fn begin_object<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_object(w)
    }
    fn end_object<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_object(w)
    }
    fn begin_object_key<W: ?Sized + io::Write>(&mut self, w: &mut W, first: bool) -> io::Result<()> {
        self.0.begin_object_key(w, first)
    }
    fn begin_object_value<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_object_value(w)
    }
    fn end_object_value<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_object_value(w)
    }
}

/// JSON with 17 significant digits per float; non-finite values become `null`.
pub fn to_json<T: Serialize>(value: &T) -> Result<String> {
    let mut buf = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut buf, Digits17(PrettyFormatter::new()));
    value.serialize(&mut ser)?;
    buf.push(b'\n');
    Ok(String::from_utf8(buf).expect("serde_json writes UTF-8"))
}

/// Float formatting used in CSV outputs.
pub fn fmt17(x: f64) -> String {
    format!("{x:.16e}")
}

fn num(v: &Value, path: &str) -> Option<f64> {
    v.pointer(path).and_then(Value::as_f64)
}

fn g(x: Option<f64>) -> String {
    match x {
        Some(x) => format!("{x:.4e}"),
        None => "n/a".into(),
    }
}

fn short(x: Option<f64>) -> String {
    match x {
        Some(x) => format!("{x:.4}"),
        None => "n/a".into(),
    }
}

fn matrix(v: Option<&Value>) -> String {
    match v {
        Some(v) => serde_json::to_string(&round_floats(v)).unwrap_or_default(),
        None => "n/a".into(),
    }
}

fn round_floats(v: &Value) -> Value {
    match v {
        Value::Number(n) => n
            .as_f64()
            .and_then(|x| serde_json::Number::from_f64((x * 1e6).round() / 1e6))
            .map(Value::Number)
            .unwrap_or(v.clone()),
        Value::Array(a) => Value::Array(a.iter().map(round_floats).collect()),
        other => other.clone(),
    }
}

fn verdict(ok: bool) -> &'static str {
    if ok {
        "PASS"
    } else {
        "FAIL"
    }
}

fn skipped_line(label: &str, s: &StageReport) -> String {
    format!("{label}: {} ({})", s.status.label(), s.reason.as_deref().unwrap_or("no reason recorded"))
}

/// One-line verdicts per stage, with the condition each stage corresponds to.
pub fn explain(report: &PipelineReport) -> Vec<String> {
    let mut out = vec![format!(
        "shockfront {} | model {} | config {} | seed {}",
        report.provenance.version,
        report.provenance.model,
        &report.provenance.config_hash[..report.provenance.config_hash.len().min(12)],
        report.provenance.seed
    )];
    for s in &report.stages {
        let d = &s.details;
        let done = matches!(s.status, StageStatus::Pass | StageStatus::Fail | StageStatus::Inconclusive) && !d.is_null();
        match s.name.as_str() {
            "hypotheses" if done => {
                let kaw = num(d, "/report/kawashima_theta");
                out.push(format!(
                    "H1–H4: real semisimple symbols, s-separation {}, θ(H3) = {}, genuine coupling {}, Kawashima θ = {} — {}",
                    g(num(d, "/report/h1_s_separation")),
                    g(num(d, "/report/h3_theta")),
                    d.pointer("/report/genuine_coupling").and_then(Value::as_bool).map_or("n/a", |b| if b { "yes" } else { "no" }),
                    g(kaw),
                    s.status.label()
                ));
            }
            "hypotheses" => out.push(skipped_line("H1–H4", s)),
            "profile" if done => out.push(format!(
                "Profile: s = {}, residual {} (tolerance {}) — {}",
                short(num(d, "/s")),
                g(num(d, "/residual/residual")),
                g(num(d, "/tolerance")),
                s.status.label()
            )),
            "profile" => out.push(skipped_line("Profile", s)),
            "enskog" if done => {
                out.push(format!(
                    "Chapman–Enskog at u = {}: a* = {}, B* = {}, fit residual {}, B* positive definite {} — {}",
                    short(num(d, "/evaluation_point")),
                    matrix(d.get("a_fit")),
                    matrix(d.get("b_fit")),
                    g(num(d, "/residual")),
                    d.pointer("/definiteness/is_positive_definite").and_then(Value::as_bool).unwrap_or(false),
                    s.status.label()
                ));
                if d.get("discrepancy_flag").and_then(Value::as_bool) == Some(true) {
                    out.push(format!(
                        "  discrepancy: closed-form b* = {}, dispersion-fit b* = {}; the dispersion fit is the oracle and is used downstream",
                        matrix(d.get("b_star_formula")),
                        matrix(d.get("b_fit"))
                    ));
                }
            }
            "enskog" => out.push(skipped_line("Chapman–Enskog", s)),
            "evans" if done => {
                let windings: Vec<String> = d
                    .get("windings")
                    .and_then(Value::as_array)
                    .map(|a| {
                        a.iter()
                            .map(|w| {
                                let xi = w.get("xi").and_then(Value::as_array).and_then(|x| x.first()).and_then(Value::as_f64);
                                let n = w.get("winding").and_then(Value::as_i64).map_or("?".to_string(), |n| n.to_string());
                                match xi {
                                    Some(xi) => format!("{n} at ξ̃ = {xi}"),
                                    None => n,
                                }
                            })
                            .collect()
                    })
                    .unwrap_or_default();
                let check = |k: &str| d.pointer(&format!("/checks/{k}")).and_then(Value::as_bool).unwrap_or(false);
                out.push(format!(
                    "D1: winding {} on {{Re λ ≥ 0}}\\{{0}}, |D(0,0)| relative {} — {}",
                    windings.join(", "),
                    g(num(d, "/d_origin_relative")),
                    verdict(check("d1"))
                ));
                out.push(format!(
                    "D2: small-circle winding {}, |dD/dλ(0,0)| relative {}, radius sensitivity {} — {}",
                    d.pointer("/small_circle/winding").and_then(Value::as_i64).map_or("?".into(), |n| n.to_string()),
                    g(num(d, "/derivative/relative")),
                    g(num(d, "/derivative/sensitivity")),
                    verdict(check("d2"))
                ));
                if d.get("lambda_star").map_or(false, |v| !v.is_null()) {
                    out.push(format!(
                        "D3: α̃ = {}, β̃ = {}, θ = {}, residual ratio under halving {} — {}",
                        matrix(d.pointer("/lambda_star/alpha_tilde")),
                        matrix(d.pointer("/lambda_star/beta_tilde")),
                        g(num(d, "/lambda_star/theta")),
                        short(num(d, "/lambda_star/residual_ratio")),
                        verdict(check("d3"))
                    ));
                } else {
                    out.push("D3: not evaluated (no transverse directions or disabled)".into());
                }
                if d.get("resolvent").map_or(false, |v| !v.is_null()) {
                    out.push(format!(
                        "Resolvent: max jump residual {}, max M dependence {}, min decay rate {} — {}",
                        g(num(d, "/resolvent_summary/max_jump")),
                        g(num(d, "/resolvent_summary/max_m")),
                        g(num(d, "/resolvent_summary/min_rate")),
                        verdict(check("resolvent"))
                    ));
                }
            }
            "evans" => out.push(skipped_line("D1–D3", s)),
            "front" if done => out.push(format!(
                "Front model (δ_t + α̃·∇δ = ∇·β̃∇δ, coefficients from {}): exponents {} (α=0), {} (|α|=1), mollification gap {}, ε ratio {} — {}",
                d.get("source").and_then(Value::as_str).unwrap_or("?"),
                short(num(d, "/exponent_value")),
                short(num(d, "/exponent_gradient")),
                short(num(d, "/exponent_gap")),
                short(num(d, "/epsilon_ratio")),
                s.status.label()
            )),
            "front" => out.push(skipped_line("Front model", s)),
            "simulate" if done => out.push(format!(
                "Nonlinear decay: residual exponent {} (δ ≡ 0: {}, gap {}), drift {} vs α̃ = {} — {}",
                short(num(d, "/experiment/tracked/exponent")),
                short(num(d, "/experiment/untracked/exponent")),
                short(num(d, "/experiment/exponent_gap")),
                short(num(d, "/experiment/drift_speed")),
                short(num(d, "/experiment/alpha_tilde")),
                s.status.label()
            )),
            "simulate" => out.push(skipped_line("Nonlinear decay", s)),
            other => out.push(format!("{other}: {}", s.status.label())),
        }
        if !s.required {
            if let Some(last) = out.last_mut() {
                last.push_str(" (optional)");
            }
        }
        if s.status == StageStatus::Fail {
            if let Some(r) = &s.reason {
                out.push(format!("  reason: {r}"));
            }
        }
    }
    out.push(format!("overall: {}", if report.success() { "PASS" } else { "FAIL" }));
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn floats_round_trip_with_seventeen_digits() {
        let x: [f64; 5] = [0.1 + 0.2, 1.0 / 3.0, -2.5e-300, 6.02214076e23, 0.0];
        let text = to_json(&x).unwrap();
        let back: Vec<f64> = serde_json::from_str(&text).unwrap();
        for (a, b) in x.iter().zip(&back) {
            assert_eq!(a.to_bits(), b.to_bits());
        }
        assert!(text.contains("3.0000000000000004e-1"), "{text}");
        assert_eq!(to_json(&f64::NAN).unwrap().trim(), "null");
    }

    fn stage(name: &str, status: StageStatus, details: Value) -> StageReport {
        StageReport { name: name.into(), status, required: true, reason: Some("profile failed".into()), details }
    }

    fn report(stages: Vec<StageReport>) -> PipelineReport {
        PipelineReport {
            schema: SCHEMA.into(),
            provenance: Provenance { version: "0".into(), config_hash: "abc".into(), seed: 0, model: "m".into() },
            stages,
            artifacts: vec![],
        }
    }

    #[test]
    fn skipped_evans_stage_is_summarized_on_one_line() {
        let r = report(vec![stage("evans", StageStatus::Skipped, Value::Null)]);
        let lines = explain(&r);
        assert!(lines.contains(&"D1–D3: SKIPPED (profile failed)".to_string()), "{lines:?}");
        assert!(!r.success());
    }

    #[test]
    fn passing_evans_stage_reports_the_winding() {
        let d = serde_json::json!({
            "windings": [{"xi": [0.0], "winding": 0}],
            "d_origin_relative": 1e-14,
            "small_circle": {"winding": 1},
            "derivative": {"relative": 10.0, "sensitivity": 1e-12},
            "checks": {"d1": true, "d2": true, "d3": true, "resolvent": true},
            "lambda_star": null,
            "resolvent": null
        });
        let lines = explain(&report(vec![stage("evans", StageStatus::Pass, d)]));
        assert!(lines[1].starts_with("D1: winding 0 at ξ̃ = 0 on {Re λ ≥ 0}\\{0}"), "{}", lines[1]);
        assert!(lines[1].ends_with("— PASS"));
    }

    #[test]
    fn discrepancy_flag_surfaces_both_values() {
        let d = serde_json::json!({
            "evaluation_point": 0.5, "a_fit": [0.5], "b_fit": [[0.75]], "b_star_formula": [[1.25]],
            "residual": 1e-7, "discrepancy_flag": true, "definiteness": {"is_positive_definite": true}
        });
        let lines = explain(&report(vec![stage("enskog", StageStatus::Pass, d)]));
        let joined = lines.join("\n");
        assert!(joined.contains("[[1.25]]") && joined.contains("[[0.75]]") && joined.contains("oracle"), "{joined}");
    }
}
