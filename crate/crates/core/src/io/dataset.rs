//! CSV ingestion of permission matrices, request logs and attribute tables.

use crate::languages::abac::Attributes;
use crate::languages::starbac::Instant;
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet};
use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum DataError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("line {line}: {message}")]
    Parse { line: u64, message: String },
    #[error("{0}")]
    Invalid(String),
}

fn parse_err(line: u64, message: impl Into<String>) -> DataError {
    DataError::Parse {
        line,
        message: message.into(),
    }
}

/// Time and positions attached to a logged request.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Context {
    pub instant: Instant,
    pub user_pos: (f64, f64),
    pub perm_pos: (f64, f64),
}

/// A labelled access request.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Request {
    pub user: String,
    pub permission: String,
    pub allowed: bool,
    pub context: Option<Context>,
}

impl Request {
    fn key(&self) -> String {
        format!("{}\u{1f}{}\u{1f}{:?}", self.user, self.permission, self.context)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DatasetKind {
    Matrix,
    Log,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    pub kind: DatasetKind,
    pub users: Vec<String>,
    pub perms: Vec<String>,
    pub matrix: BTreeSet<(String, String)>,
    pub log: Vec<Request>,
    pub user_attributes: Attributes,
    pub perm_attributes: Attributes,
}

impl Dataset {
    pub fn from_matrix(
        matrix: BTreeSet<(String, String)>,
        user_attributes: Attributes,
        perm_attributes: Attributes,
    ) -> Dataset {
        let users = matrix
            .iter()
            .map(|(u, _)| u.clone())
            .chain(user_attributes.keys().cloned())
            .collect::<BTreeSet<_>>();
        let perms = matrix
            .iter()
            .map(|(_, p)| p.clone())
            .chain(perm_attributes.keys().cloned())
            .collect::<BTreeSet<_>>();
        Dataset {
            kind: DatasetKind::Matrix,
            users: users.into_iter().collect(),
            perms: perms.into_iter().collect(),
            matrix,
            log: Vec::new(),
            user_attributes,
            perm_attributes,
        }
    }

    /// Deduplicates repeated entries; the same request with both decisions
    /// is an error.
    pub fn from_log(
        entries: Vec<Request>,
        user_attributes: Attributes,
        perm_attributes: Attributes,
    ) -> Result<Dataset, DataError> {
        let mut seen: BTreeMap<String, bool> = BTreeMap::new();
        let mut log = Vec::with_capacity(entries.len());
        let mut duplicates = 0;
        for e in entries {
            match seen.insert(e.key(), e.allowed) {
                Some(prev) if prev != e.allowed => {
                    return Err(DataError::Invalid(format!(
                        "request ({}, {}) is both allowed and denied",
                        e.user, e.permission
                    )))
                }
                Some(_) => duplicates += 1,
                None => log.push(e),
            }
        }
        if duplicates > 0 {
            log::warn!("dropped {duplicates} duplicate log entries");
        }
        if log.iter().any(|e| e.context.is_some()) && log.iter().any(|e| e.context.is_none()) {
            return Err(DataError::Invalid(
                "either every log entry carries time and positions or none does".into(),
            ));
        }
        let users: BTreeSet<String> = log
            .iter()
            .map(|e| e.user.clone())
            .chain(user_attributes.keys().cloned())
            .collect();
        let perms: BTreeSet<String> = log
            .iter()
            .map(|e| e.permission.clone())
            .chain(perm_attributes.keys().cloned())
            .collect();
        Ok(Dataset {
            kind: DatasetKind::Log,
            users: users.into_iter().collect(),
            perms: perms.into_iter().collect(),
            matrix: BTreeSet::new(),
            log,
            user_attributes,
            perm_attributes,
        })
    }

    /// Every request with a known decision: all of `U × P` for a matrix,
    /// the entries of a log.
    pub fn requests(&self) -> Vec<Request> {
        match self.kind {
            DatasetKind::Log => self.log.clone(),
            DatasetKind::Matrix => self
                .users
                .iter()
                .flat_map(|u| {
                    self.perms.iter().map(move |p| Request {
                        user: u.clone(),
                        permission: p.clone(),
                        allowed: self.matrix.contains(&(u.clone(), p.clone())),
                        context: None,
                    })
                })
                .collect(),
        }
    }

    /// User-permission pairs that no log entry mentions. Empty for matrices
    /// and for logs with context, whose request space is not a finite grid.
    pub fn undecided(&self) -> Vec<(String, String)> {
        if self.kind == DatasetKind::Matrix || self.log.iter().any(|e| e.context.is_some()) {
            return Vec::new();
        }
        let logged: BTreeSet<(&str, &str)> = self
            .log
            .iter()
            .map(|e| (e.user.as_str(), e.permission.as_str()))
            .collect();
        self.users
            .iter()
            .flat_map(|u| self.perms.iter().map(move |p| (u, p)))
            .filter(|(u, p)| !logged.contains(&(u.as_str(), p.as_str())))
            .map(|(u, p)| (u.clone(), p.clone()))
            .collect()
    }

    /// All attribute values mentioned by either table, sorted.
    pub fn attribute_values(&self) -> Vec<String> {
        self.user_attributes
            .values()
            .chain(self.perm_attributes.values())
            .flatten()
            .cloned()
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect()
    }
}

fn reader<R: Read>(r: R) -> csv::Reader<R> {
    csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .from_reader(r)
}

/// Rows of a CSV stream with their line numbers. A first row whose leading
/// field is `header` is skipped.
fn rows<R: Read>(r: R, header: &str) -> Result<Vec<(u64, Vec<String>)>, DataError> {
    let mut out = Vec::new();
    for (i, rec) in reader(r).records().enumerate() {
        let rec = rec.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line());
            parse_err(line, e.to_string())
        })?;
        let line = rec.position().map_or(i as u64 + 1, |p| p.line());
        if rec.iter().all(str::is_empty) {
            continue;
        }
        if out.is_empty() && i == 0 && rec.get(0) == Some(header) {
            continue;
        }
        out.push((line, rec.iter().map(str::to_owned).collect()));
    }
    Ok(out)
}

fn open(path: &Path) -> Result<File, DataError> {
    File::open(path).map_err(|source| DataError::Io {
        path: path.display().to_string(),
        source,
    })
}

fn nonempty(line: u64, what: &str, s: &str) -> Result<String, DataError> {
    if s.is_empty() {
        Err(parse_err(line, format!("empty {what}")))
    } else {
        Ok(s.to_owned())
    }
}

/// Rows `user,permission`.
pub fn parse_matrix<R: Read>(r: R) -> Result<BTreeSet<(String, String)>, DataError> {
    let mut out = BTreeSet::new();
    let mut duplicates = 0;
    for (line, row) in rows(r, "user")? {
        if row.len() != 2 {
            return Err(parse_err(line, format!("expected 2 fields, found {}", row.len())));
        }
        let pair = (nonempty(line, "user", &row[0])?, nonempty(line, "permission", &row[1])?);
        if !out.insert(pair) {
            duplicates += 1;
        }
    }
    if duplicates > 0 {
        log::warn!("dropped {duplicates} duplicate matrix rows");
    }
    Ok(out)
}

fn number<T: std::str::FromStr>(line: u64, what: &str, s: &str) -> Result<T, DataError> {
    s.parse()
        .map_err(|_| parse_err(line, format!("invalid {what} `{s}`")))
}

/// Rows `user,permission,decision[,month,day,hour,ux,uy,px,py]` with
/// decision `allow` or `deny`.
pub fn parse_log<R: Read>(r: R) -> Result<Vec<Request>, DataError> {
    let mut out = Vec::new();
    for (line, row) in rows(r, "user")? {
        if row.len() != 3 && row.len() != 10 {
            return Err(parse_err(line, format!("expected 3 or 10 fields, found {}", row.len())));
        }
        let allowed = match row[2].to_ascii_lowercase().as_str() {
            "allow" => true,
            "deny" => false,
            other => return Err(parse_err(line, format!("decision must be allow or deny, got `{other}`"))),
        };
        let context = if row.len() == 10 {
            let instant = Instant::new(
                number(line, "month", &row[3])?,
                number(line, "day", &row[4])?,
                number(line, "hour", &row[5])?,
            );
            if !instant.is_valid() {
                return Err(parse_err(line, format!("instant {} is outside the calendar", instant.name())));
            }
            let mut coords = [0.0; 4];
            for (k, c) in coords.iter_mut().enumerate() {
                *c = number::<f64>(line, "coordinate", &row[6 + k])?;
                if !c.is_finite() {
                    return Err(parse_err(line, "coordinates must be finite"));
                }
            }
            Some(Context {
                instant,
                user_pos: (coords[0], coords[1]),
                perm_pos: (coords[2], coords[3]),
            })
        } else {
            None
        };
        out.push(Request {
            user: nonempty(line, "user", &row[0])?,
            permission: nonempty(line, "permission", &row[1])?,
            allowed,
            context,
        });
    }
    Ok(out)
}

/// Rows `entity,attribute`.
pub fn parse_attributes<R: Read>(r: R) -> Result<Attributes, DataError> {
    let mut out = Attributes::new();
    for (line, row) in rows(r, "entity")? {
        if row.len() != 2 {
            return Err(parse_err(line, format!("expected 2 fields, found {}", row.len())));
        }
        out.entry(nonempty(line, "entity", &row[0])?)
            .or_default()
            .insert(nonempty(line, "attribute", &row[1])?);
    }
    Ok(out)
}

fn with_path<T>(path: &Path, r: Result<T, DataError>) -> Result<T, DataError> {
    r.map_err(|e| match e {
        DataError::Parse { line, message } => DataError::Parse {
            line,
            message: format!("{}: {message}", path.display()),
        },
        other => other,
    })
}

pub fn load_matrix(path: &Path) -> Result<BTreeSet<(String, String)>, DataError> {
    with_path(path, parse_matrix(open(path)?))
}

pub fn load_log(path: &Path) -> Result<Vec<Request>, DataError> {
    with_path(path, parse_log(open(path)?))
}

pub fn load_attributes(path: &Path) -> Result<Attributes, DataError> {
    with_path(path, parse_attributes(open(path)?))
}

pub fn write_log<W: Write>(w: W, entries: &[Request]) -> Result<(), csv::Error> {
    let mut out = csv::WriterBuilder::new().flexible(true).from_writer(w);
    let with_context = entries.iter().any(|e| e.context.is_some());
    if with_context {
        out.write_record([
            "user", "permission", "decision", "month", "day", "hour", "ux", "uy", "px", "py",
        ])?;
    } else {
        out.write_record(["user", "permission", "decision"])?;
    }
    for e in entries {
        let mut row = vec![
            e.user.clone(),
            e.permission.clone(),
            if e.allowed { "allow" } else { "deny" }.to_owned(),
        ];
        if let Some(c) = &e.context {
            row.extend([
                c.instant.month.to_string(),
                c.instant.day.to_string(),
                c.instant.hour.to_string(),
                c.user_pos.0.to_string(),
                c.user_pos.1.to_string(),
                c.perm_pos.0.to_string(),
                c.perm_pos.1.to_string(),
            ]);
        }
        out.write_record(&row)?;
    }
    out.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn matrix_rows_and_header() {
        let m = parse_matrix("user,permission\nalice,read\nbob,read\nalice,write\n".as_bytes()).unwrap();
        assert_eq!(m.len(), 3);
    }

    #[test]
    fn duplicate_matrix_rows_collapse() {
        let m = parse_matrix("a,p\na,p\n".as_bytes()).unwrap();
        assert_eq!(m.len(), 1);
    }

    #[test]
    fn bad_decision_reports_line() {
        match parse_log("a,p,allow\nb,p,maybe\n".as_bytes()) {
            Err(DataError::Parse { line, .. }) => assert_eq!(line, 2),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn conflicting_decisions_rejected() {
        let log = parse_log("a,p,allow\na,p,deny\n".as_bytes()).unwrap();
        assert!(Dataset::from_log(log, Attributes::new(), Attributes::new()).is_err());
    }

    #[test]
    fn context_columns() {
        let log = parse_log("u,o,allow,4,1,2,1.5,2,3,4\n".as_bytes()).unwrap();
        let c = log[0].context.unwrap();
        assert_eq!(c.instant, Instant::new(4, 1, 2));
        assert_eq!(c.user_pos, (1.5, 2.0));
        assert!(parse_log("u,o,allow,13,1,2,1,2,3,4\n".as_bytes()).is_err());
    }

    #[test]
    fn log_round_trips() {
        let log = parse_log("u,o,allow,4,1,2,1.5,2,3,4\nv,o,deny,5,2,3,0,0,1,1\n".as_bytes()).unwrap();
        let mut buf = Vec::new();
        write_log(&mut buf, &log).unwrap();
        assert_eq!(parse_log(buf.as_slice()).unwrap(), log);
    }
}
