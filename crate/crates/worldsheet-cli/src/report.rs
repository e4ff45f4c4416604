//! Identity reports and their serialized forms.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::config::Format;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IdentityReport {
    pub id: String,
    pub geometry: String,
    pub max_residual: f64,
    pub tolerance: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub convergence_order: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub required_order: Option<f64>,
    /// The residual sits at roundoff on every level, so no order is asked for.
    #[serde(default)]
    pub below_floor: bool,
    pub pass: bool,
    pub resolutions: Vec<[usize; 2]>,
    pub residuals: Vec<f64>,
    #[serde(default, skip_serializing_if = "String::is_empty")]
    pub note: String,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub command: String,
    pub geometry: String,
    pub background: String,
    pub seed: u64,
    pub identities: Vec<IdentityReport>,
    /// Extra tables for the `euler` and `symplectic` commands.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub tables: Vec<Table>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Table {
    pub name: String,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl Report {
    pub fn all_pass(&self) -> bool {
        self.identities.iter().all(|r| r.pass)
    }

    pub fn failures(&self) -> impl Iterator<Item = &IdentityReport> {
        self.identities.iter().filter(|r| !r.pass)
    }

    pub fn render(&self, format: Format) -> String {
        match format {
            Format::Structured => {
                let mut s = serde_json::to_string_pretty(self).expect("report serializes");
                s.push('\n');
                s
            }
            Format::Csv => self.to_csv(),
        }
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from(
            "id,geometry,max_residual,tolerance,convergence_order,required_order,below_floor,pass,resolutions,residuals\n",
        );
        let opt = |v: Option<f64>| v.map(|x| format!("{x:e}")).unwrap_or_default();
        for r in &self.identities {
            let res: Vec<String> = r.resolutions.iter().map(|[a, b]| format!("{a}x{b}")).collect();
            let vals: Vec<String> = r.residuals.iter().map(|v| format!("{v:e}")).collect();
            writeln!(
                s,
                "{},{},{:e},{:e},{},{},{},{},{},{}",
                r.id,
                r.geometry,
                r.max_residual,
                r.tolerance,
                opt(r.convergence_order),
                opt(r.required_order),
                r.below_floor,
                r.pass,
                res.join(";"),
                vals.join(";")
            )
            .unwrap();
        }
        for t in &self.tables {
            writeln!(s, "\n# {}\n{}", t.name, t.columns.join(",")).unwrap();
            for row in &t.rows {
                let cells: Vec<String> = row.iter().map(|v| format!("{v:e}")).collect();
                writeln!(s, "{}", cells.join(",")).unwrap();
            }
        }
        s
    }

    /// Human-readable summary for the `report` subcommand.
    pub fn pretty(&self) -> String {
        let mut s = String::new();
        writeln!(s, "{} on {} in {} (seed {})", self.command, self.geometry, self.background, self.seed).unwrap();
        let width = self.identities.iter().map(|r| r.id.len()).max().unwrap_or(0);
        for r in &self.identities {
            let order = match (r.convergence_order, r.below_floor) {
                (_, true) => "at floor".to_string(),
                (Some(p), _) => format!("order {p:.2}"),
                (None, _) => String::new(),
            };
            writeln!(
                s,
                "  {} {:width$}  {:.3e} / {:.3e}  {}{}{}",
                if r.pass { "ok  " } else { "FAIL" },
                r.id,
                r.max_residual,
                r.tolerance,
                order,
                if r.note.is_empty() { "" } else { "  " },
                r.note
            )
            .unwrap();
        }
        for t in &self.tables {
            writeln!(s, "  {}:", t.name).unwrap();
            writeln!(s, "    {}", t.columns.join("  ")).unwrap();
            for row in &t.rows {
                let cells: Vec<String> = row.iter().map(|v| format!("{v:.6e}")).collect();
                writeln!(s, "    {}", cells.join("  ")).unwrap();
            }
        }
        let failed = self.failures().count();
        writeln!(s, "{} identities, {} failed", self.identities.len(), failed).unwrap();
        s
    }
}
