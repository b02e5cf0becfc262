//! Sectioned text format for trained and untrained models.
//!
//! ```text
//! [dims]
//! k_in = 1
//! n_res = 100
//! l_out = 1
//! member = 0
//! [config]
//! rho = 1.25
//! ...
//! [w_in]
//! <one matrix row per line, space separated>
//! [w]
//! [w_back]      (only with feedback)
//! [w_out]       (only when trained)
//! [last_state]
//! [last_input]
//! ```

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use crate::datasets::fmt_f64;
use crate::error::{Error, Result};
use crate::linalg::Matrix;

use super::config::EsnConfig;
use super::model::EsnModel;

fn write_matrix(out: &mut String, name: &str, m: &Matrix) {
    let _ = writeln!(out, "[{name}]");
    for i in 0..m.rows() {
        let row: Vec<String> = m.row(i).iter().map(|v| fmt_f64(*v)).collect();
        out.push_str(&row.join(" "));
        out.push('\n');
    }
}

/// Render a model in the text format.
pub fn model_to_string(model: &EsnModel) -> String {
    let c = &model.config;
    let mut out = String::new();
    let _ = writeln!(out, "[dims]");
    let _ = writeln!(out, "k_in = {}", c.k_in);
    let _ = writeln!(out, "n_res = {}", c.n_res);
    let _ = writeln!(out, "l_out = {}", c.l_out);
    let _ = writeln!(out, "member = {}", model.member);
    let _ = writeln!(out, "[config]");
    for (k, v) in c.to_pairs() {
        if !matches!(k, "k_in" | "n_res" | "l_out") {
            let _ = writeln!(out, "{k} = {v}");
        }
    }
    write_matrix(&mut out, "w_in", &model.w_in);
    write_matrix(&mut out, "w", &model.w);
    if let Some(wb) = &model.w_back {
        write_matrix(&mut out, "w_back", wb);
    }
    if let Some(wo) = &model.w_out {
        write_matrix(&mut out, "w_out", wo);
    }
    let state: Vec<String> = model.last_state.iter().map(|v| fmt_f64(*v)).collect();
    let _ = writeln!(out, "[last_state]\n{}", state.join(" "));
    let _ = writeln!(out, "[last_input]\n{}", fmt_f64(model.last_input));
    out
}

pub fn save_model(path: impl AsRef<Path>, model: &EsnModel) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, model_to_string(model)).map_err(|e| Error::io(path, e))
}

pub fn load_model(path: impl AsRef<Path>) -> Result<EsnModel> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_model(&text, path)
}

struct Section<'a> {
    header_line: usize,
    lines: Vec<(usize, &'a str)>,
}

/// Parse the text format; `origin` only labels error messages.
pub fn parse_model(text: &str, origin: &Path) -> Result<EsnModel> {
    let err = |line: usize, msg: String| Error::Parse {
        path: PathBuf::from(origin),
        line,
        msg,
    };

    let mut sections: BTreeMap<&str, Section> = BTreeMap::new();
    let mut current: Option<&str> = None;
    for (i, raw) in text.lines().enumerate() {
        let line_no = i + 1;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        if let Some(name) = line.strip_prefix('[').and_then(|l| l.strip_suffix(']')) {
            let name = name.trim();
            if !matches!(
                name,
                "dims" | "config" | "w_in" | "w" | "w_back" | "w_out" | "last_state" | "last_input"
            ) {
                return Err(err(line_no, format!("unknown section [{name}]")));
            }
            if sections.contains_key(name) {
                return Err(err(line_no, format!("duplicate section [{name}]")));
            }
            sections.insert(
                name,
                Section {
                    header_line: line_no,
                    lines: Vec::new(),
                },
            );
            current = Some(name);
            continue;
        }
        match current {
            Some(name) => sections.get_mut(name).unwrap().lines.push((line_no, line)),
            None => return Err(err(line_no, "content before the first section".into())),
        }
    }

    let section = |name: &str| {
        sections
            .get(name)
            .ok_or_else(|| err(0, format!("missing section [{name}]")))
    };

    let mut config = EsnConfig::default();
    let mut member = 0u64;
    for name in ["dims", "config"] {
        for &(line_no, line) in &section(name)?.lines {
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| err(line_no, format!("expected `key = value`, got `{line}`")))?;
            let key = key.trim();
            if name == "dims" && key == "member" {
                member = value
                    .trim()
                    .parse()
                    .map_err(|_| err(line_no, format!("bad member id `{}`", value.trim())))?;
            } else {
                config.set(key, value).map_err(|e| err(line_no, e.to_string()))?;
            }
        }
    }
    let config_line = section("config")?.header_line;
    config.validate().map_err(|e| err(config_line, e.to_string()))?;
    let (n, k, l) = (config.n_res, config.k_in, config.l_out);

    let matrix = |name: &str, rows: usize, cols: usize| -> Result<Matrix> {
        let sec = section(name)?;
        if sec.lines.len() != rows {
            return Err(err(
                sec.header_line,
                format!("[{name}] needs {rows} rows, found {}", sec.lines.len()),
            ));
        }
        let mut data = Vec::with_capacity(rows * cols);
        for &(line_no, line) in &sec.lines {
            let before = data.len();
            for tok in line.split_whitespace() {
                let v: f64 = tok
                    .parse()
                    .map_err(|_| err(line_no, format!("cannot parse `{tok}` as a number")))?;
                if !v.is_finite() {
                    return Err(err(line_no, format!("non-finite value `{tok}`")));
                }
                data.push(v);
            }
            if data.len() - before != cols {
                return Err(err(
                    line_no,
                    format!("[{name}] rows need {cols} values, found {}", data.len() - before),
                ));
            }
        }
        Matrix::from_vec(rows, cols, data)
    };

    let w_in = matrix("w_in", n, 1 + k)?;
    let w = matrix("w", n, n)?;
    let w_back = match (config.feedback, sections.contains_key("w_back")) {
        (true, _) => Some(matrix("w_back", n, l)?),
        (false, false) => None,
        (false, true) => {
            return Err(err(
                sections["w_back"].header_line,
                "[w_back] present but feedback is off".into(),
            ))
        }
    };
    let w_out = if sections.contains_key("w_out") {
        Some(matrix("w_out", l, 1 + k + n)?)
    } else {
        None
    };
    let last_state = matrix("last_state", 1, n)?.row(0).to_vec();
    let last_input = matrix("last_input", 1, 1)?.get(0, 0);

    Ok(EsnModel {
        config,
        member,
        w_in,
        w,
        w_back,
        w_out,
        last_state,
        last_input,
    })
}
