use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use gabor_amalgam::amalgam::{amalgam_norm, sequence_norm, Exponent};
use gabor_amalgam::frames::{
    commutation_defects, continuity_diagnostic, dual_atoms, frame_bounds, full_range, invert_frame_operator,
    multi_frame_operator, reconstruct as expand, DualContinuityTable, ErrorNorms, SummationMode,
};
use gabor_amalgam::gabor::analysis;
use gabor_amalgam::io::{load_operator, load_signal, save_dual_atoms, save_operator, write_operator_json, Format};
use gabor_amalgam::shift::{
    coefficient_decay_profile, neumann_inverse, quadratic_form_bounds, DecayRow, ShiftOperator,
};
use gabor_amalgam::GaborError;
use serde::Serialize;
use serde_json::json;

use crate::config::{parse_usize_list, Settings};
use crate::{Action, CliError};

/// `A ≤ SINGULAR_GATE·B` is treated as singular by `algebra invert`.
const SINGULAR_GATE: f64 = 1e-10;

fn num(x: f64) -> String {
    format!("{x:.16e}")
}

fn to_json(value: &impl Serialize) -> Result<String, CliError> {
    let mut text = serde_json::to_string_pretty(value).map_err(GaborError::from)?;
    text.push('\n');
    Ok(text)
}

/// Writes to `path`, or to stdout when there is none.
fn emit(path: Option<&Path>, text: &str) -> Result<(), CliError> {
    match path {
        Some(p) => fs::write(p, text).map_err(|e| CliError::Library(e.into())),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

pub fn bounds(settings: &Settings) -> Result<(), CliError> {
    let sys = settings.system()?;
    let b = frame_bounds(&multi_frame_operator(&sys)?)?;
    let text = match settings.format {
        Format::Json => to_json(&b)?,
        Format::Csv => format!(
            "A,B,condition_number\n{},{},{}\n",
            num(b.lower),
            num(b.upper),
            num(b.condition_number)
        ),
    };
    emit(settings.out.as_deref(), &text)
}

fn decay_csv(rows: &[DecayRow]) -> String {
    let mut out = String::from("radius,tail,ratio\n");
    for r in rows {
        let _ = writeln!(out, "{},{},{}", num(r.radius), num(r.tail), num(r.ratio));
    }
    out
}

fn continuity_csv(table: &DualContinuityTable) -> String {
    let mut out = String::from("window,s,step,modulus,ratio\n");
    for row in &table.rows {
        for (level, (&s, &step)) in table.samples_per_unit.iter().zip(&table.step_sizes).enumerate() {
            let ratio = level.checked_sub(1).map(|i| num(row.ratios[i])).unwrap_or_default();
            let _ = writeln!(
                out,
                "{},{s},{},{},{ratio}",
                row.window,
                num(step),
                num(row.moduli[level])
            );
        }
    }
    out
}

pub fn dual(settings: &Settings) -> Result<(), CliError> {
    let sys = settings.system()?;
    let dir = settings.out.clone().unwrap_or_else(|| PathBuf::from("duals"));
    let inv = invert_frame_operator(&multi_frame_operator(&sys)?, &settings.neumann)?;
    let duals = dual_atoms(&sys, &inv.inverse)?;
    save_dual_atoms(&duals, &dir)?;

    let radii: Vec<f64> = (0..=settings.grid.period() / 2).map(|k| k as f64).collect();
    let decay = coefficient_decay_profile(&inv.inverse, &settings.w, &radii)?;
    let (name, text) = match settings.format {
        Format::Json => ("decay.json", to_json(&decay)?),
        Format::Csv => ("decay.csv", decay_csv(&decay)),
    };
    emit(Some(&dir.join(name)), &text)?;

    if !settings.refine.is_empty() {
        let windows = settings.analytic_windows()?;
        let table = continuity_diagnostic(
            settings.grid.period(),
            &windows,
            &settings.lattices,
            &settings.refine,
            &settings.neumann,
        )?;
        let (name, text) = match settings.format {
            Format::Json => ("continuity.json", to_json(&table)?),
            Format::Csv => ("continuity.csv", continuity_csv(&table)),
        };
        emit(Some(&dir.join(name)), &text)?;
    }

    let report = json!({
        "bounds": inv.bounds,
        "neumann": inv.report,
        "atoms": duals.len(),
        "commutation_defects": commutation_defects(&sys, &duals)?,
        "weight": settings.w.to_string(),
    });
    let text = to_json(&report)?;
    emit(Some(&dir.join("report.json")), &text)?;
    emit(None, &text)
}

#[derive(Serialize)]
struct ErrorRow {
    #[serde(rename = "N")]
    n: usize,
    #[serde(rename = "M")]
    m: usize,
    err_l2: f64,
    err_linf: f64,
    err_amalgam: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    fejer_err_l2: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    fejer_err_linf: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    fejer_err_amalgam: Option<f64>,
}

/// Worst case over the two expansion orders.
fn worst(a: &ErrorNorms, b: &ErrorNorms) -> (f64, f64, f64) {
    (a.l2.max(b.l2), a.linf.max(b.linf), a.amalgam.max(b.amalgam))
}

pub fn reconstruct(settings: &Settings, signal: &Path, n: Option<&str>, m: Option<&str>) -> Result<(), CliError> {
    let sys = settings.system()?;
    let f = load_signal(signal, Some(settings.grid))?;
    let inv = invert_frame_operator(&multi_frame_operator(&sys)?, &settings.neumann)?;
    let duals = dual_atoms(&sys, &inv.inverse)?;
    let (n_full, m_full) = full_range(&sys);
    let ns = n
        .map(|s| parse_usize_list(s, "n"))
        .transpose()?
        .unwrap_or_else(|| vec![n_full]);
    let ms = m
        .map(|s| parse_usize_list(s, "m"))
        .transpose()?
        .unwrap_or_else(|| vec![m_full]);
    let params = settings.amalgam(settings.p[0], settings.q[0]);

    let mut rows = Vec::with_capacity(ns.len() * ms.len());
    for &nn in &ns {
        for &mm in &ms {
            let raw = expand(&sys, &duals, &f, nn, mm, SummationMode::Raw, &params)?;
            let (err_l2, err_linf, err_amalgam) = worst(&raw.primal_error, &raw.mirrored_error);
            let fejer = if settings.fejer {
                let r = expand(&sys, &duals, &f, nn, mm, SummationMode::Fejer, &params)?;
                Some(worst(&r.primal_error, &r.mirrored_error))
            } else {
                None
            };
            rows.push(ErrorRow {
                n: nn,
                m: mm,
                err_l2,
                err_linf,
                err_amalgam,
                fejer_err_l2: fejer.map(|e| e.0),
                fejer_err_linf: fejer.map(|e| e.1),
                fejer_err_amalgam: fejer.map(|e| e.2),
            });
        }
    }

    let text = match settings.format {
        Format::Json => to_json(&rows)?,
        Format::Csv => {
            let mut out = String::from("N,M,err_l2,err_linf,err_amalgam");
            if settings.fejer {
                out.push_str(",fejer_err_l2,fejer_err_linf,fejer_err_amalgam");
            }
            out.push('\n');
            for r in &rows {
                let _ = write!(
                    out,
                    "{},{},{},{},{}",
                    r.n,
                    r.m,
                    num(r.err_l2),
                    num(r.err_linf),
                    num(r.err_amalgam)
                );
                if let (Some(a), Some(b), Some(c)) = (r.fejer_err_l2, r.fejer_err_linf, r.fejer_err_amalgam) {
                    let _ = write!(out, ",{},{},{}", num(a), num(b), num(c));
                }
                out.push('\n');
            }
            out
        }
    };
    emit(settings.out.as_deref(), &text)
}

#[derive(Serialize)]
struct NormRow {
    #[serde(skip_serializing_if = "Option::is_none")]
    system: Option<usize>,
    p: Exponent,
    q: Exponent,
    v: String,
    norm: f64,
}

pub fn norms(settings: &Settings, signal: &Path) -> Result<(), CliError> {
    let f = load_signal(signal, Some(settings.grid))?;
    let v = settings.v.to_string();
    let mut amalgam = Vec::new();
    let mut sequence = Vec::new();
    let coefficients = if settings.windows.is_empty() {
        Vec::new()
    } else {
        settings
            .system()?
            .systems()
            .iter()
            .map(|s| analysis(s, &f))
            .collect::<Result<Vec<_>, _>>()?
    };
    for &p in &settings.p {
        for &q in &settings.q {
            let params = settings.amalgam(p, q);
            amalgam.push(NormRow {
                system: None,
                p,
                q,
                v: v.clone(),
                norm: amalgam_norm(&f, &params)?,
            });
            for (i, c) in coefficients.iter().enumerate() {
                sequence.push(NormRow {
                    system: Some(i),
                    p,
                    q,
                    v: v.clone(),
                    norm: sequence_norm(c, &params)?,
                });
            }
        }
    }

    let text = match settings.format {
        Format::Json => to_json(&json!({ "amalgam_norm": amalgam, "sequence_norm": sequence }))?,
        Format::Csv => {
            let mut out = String::from("kind,system,p,q,v,norm\n");
            for (kind, rows) in [("amalgam", &amalgam), ("sequence", &sequence)] {
                for r in rows {
                    let system = r.system.map(|s| s.to_string()).unwrap_or_default();
                    let _ = writeln!(out, "{kind},{system},{},{},{},{}", r.p, r.q, r.v, num(r.norm));
                }
            }
            out
        }
    };
    emit(settings.out.as_deref(), &text)
}

fn operator_value(op: &ShiftOperator) -> Result<serde_json::Value, CliError> {
    let mut buf = Vec::new();
    write_operator_json(op, &mut buf)?;
    Ok(serde_json::from_slice(&buf).map_err(GaborError::from)?)
}

pub fn algebra(settings: &Settings, path: &Path, action: Action, other: Option<&Path>) -> Result<(), CliError> {
    let op = load_operator(path)?;
    let (result, report) = match action {
        Action::Compose => {
            let other = other.ok_or_else(|| CliError::Config("compose needs --other PATH".into()))?;
            let result = op.compose(&load_operator(other)?)?;
            let report = json!({ "action": "compose", "terms": result.len() });
            (Some(result), report)
        }
        Action::Adjoint => {
            let result = op.adjoint();
            let report = json!({ "action": "adjoint", "terms": result.len() });
            (Some(result), report)
        }
        Action::Invert => {
            let (lower, upper) = quadratic_form_bounds(&op)?;
            if !(lower > SINGULAR_GATE * upper) {
                return Err(GaborError::SingularOperator { lower, upper }.into());
            }
            let inv = neumann_inverse(&op, lower, upper, &settings.neumann)?;
            let report = json!({
                "action": "invert",
                "A": lower,
                "B": upper,
                "neumann": inv.report,
                "residual": inv.report.residual(),
            });
            (Some(inv.inverse), report)
        }
        Action::Norm => {
            let report = json!({
                "action": "norm",
                "weight": settings.w.to_string(),
                "aw_norm": op.aw_norm(&settings.w)?,
            });
            (None, report)
        }
    };
    match (result, settings.out.as_deref()) {
        (Some(result), Some(out)) => {
            save_operator(&result, out)?;
            emit(None, &to_json(&report)?)
        }
        (Some(result), None) => emit(
            None,
            &to_json(&json!({ "operator": operator_value(&result)?, "report": report }))?,
        ),
        (None, out) => emit(out, &to_json(&report)?),
    }
}
