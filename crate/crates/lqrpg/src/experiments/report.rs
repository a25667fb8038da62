use std::path::{Path, PathBuf};

use super::exploration::ExplorationCost;
use super::fidelity::GradientFidelity;
use super::fit::ScalingFit;
use super::regret::RegretScaling;
use super::zoo::GdSuite;
use crate::export::{num, write_table};
use crate::plot::{Plot, Style};

/// An experiment result that can be written as a CSV table and, optionally, an SVG plot.
pub trait Report {
    fn header(&self) -> Vec<&'static str>;
    fn rows(&self) -> Vec<Vec<String>>;
    fn plot(&self) -> Option<Plot>;
}

fn fit_note(label: &str, fit: &ScalingFit) -> String {
    format!("{label}: slope {:.3} ± {:.3} (R² {:.3})", fit.slope, fit.slope_se, fit.r_squared)
}

fn fit_line(fit: &ScalingFit) -> Vec<(f64, f64)> {
    fit.points.iter().map(|p| (p.x, 10f64.powf(fit.intercept) * p.x.powf(fit.slope))).collect()
}

impl Report for RegretScaling {
    fn header(&self) -> Vec<&'static str> {
        vec!["policy", "T", "seed", "regret", "final_gap", "epochs", "diverged"]
    }

    fn rows(&self) -> Vec<Vec<String>> {
        let tagged = self.runs.iter().map(|r| ("learner", r)).chain(self.baseline_runs.iter().map(|r| ("fixed", r)));
        tagged
            .map(|(policy, r)| {
                vec![
                    policy.to_string(),
                    r.horizon.to_string(),
                    r.seed_index.to_string(),
                    num(Some(r.regret)),
                    num(Some(r.final_gap)),
                    r.epochs.to_string(),
                    r.diverged.to_string(),
                ]
            })
            .collect()
    }

    fn plot(&self) -> Option<Plot> {
        let mut plot = Plot::new("Regret scaling", "horizon T", "mean regret").log_log();
        for (label, fit) in [("learner", &self.fit), ("fixed K", &self.baseline_fit)] {
            if let Some(fit) = fit {
                let pts = fit.points.iter().map(|p| (p.x, p.mean)).collect();
                plot = plot
                    .with_series(label, pts, Style::Markers)
                    .with_series(&format!("{label} fit"), fit_line(fit), Style::Line)
                    .with_note(fit_note(label, fit));
            }
        }
        Some(plot)
    }
}

/// Regret curves `(t, R_t)` of seed 0 at every horizon.
pub fn regret_curves_plot(result: &RegretScaling) -> Plot {
    let mut plot = Plot::new("Regret curves (seed 0)", "t", "regret");
    for r in result.runs.iter().filter(|r| !r.curve.is_empty()) {
        plot = plot.with_series(&format!("T = {}", r.horizon), r.curve.clone(), Style::Line);
    }
    plot
}

impl Report for ExplorationCost {
    fn header(&self) -> Vec<&'static str> {
        vec!["r", "direct_mean", "direct_se", "indirect_mean", "indirect_se", "samples", "excluded"]
    }

    fn rows(&self) -> Vec<Vec<String>> {
        self.rows
            .iter()
            .map(|row| {
                vec![
                    num(Some(row.radius)),
                    num(Some(row.direct.mean)),
                    num(Some(row.direct.std_err)),
                    num(row.indirect.as_ref().map(|p| p.mean)),
                    num(row.indirect.as_ref().map(|p| p.std_err)),
                    row.direct.samples.to_string(),
                    row.excluded.to_string(),
                ]
            })
            .collect()
    }

    fn plot(&self) -> Option<Plot> {
        let pts = self.direct_fit.points.iter().map(|p| (p.x, p.mean)).collect();
        Some(
            Plot::new("Direct exploration cost", "radius r", "E[J(K+rU)] − J(K)")
                .log_log()
                .with_series("measured", pts, Style::Markers)
                .with_series("fit", fit_line(&self.direct_fit), Style::Line)
                .with_note(fit_note("direct", &self.direct_fit)),
        )
    }
}

impl Report for GradientFidelity {
    fn header(&self) -> Vec<&'static str> {
        vec!["m", "error_mean", "error_se", "angle_deg", "bias_floor"]
    }

    fn rows(&self) -> Vec<Vec<String>> {
        self.rows
            .iter()
            .map(|r| {
                vec![
                    r.m.to_string(),
                    num(Some(r.error.mean)),
                    num(Some(r.error.std_err)),
                    num(Some(r.angle_deg)),
                    num(Some(self.bias_floor)),
                ]
            })
            .collect()
    }

    fn plot(&self) -> Option<Plot> {
        let pts = self.decay.points.iter().map(|p| (p.x, p.mean)).collect();
        Some(
            Plot::new("One-point gradient error", "samples m", "‖g − ∇J‖")
                .log_log()
                .with_series("measured", pts, Style::Markers)
                .with_series("fit", fit_line(&self.decay), Style::Line)
                .with_note(fit_note("decay", &self.decay)),
        )
    }
}

impl Report for GdSuite {
    fn header(&self) -> Vec<&'static str> {
        vec!["objective", "pattern", "steps", "eta", "in_contract", "violations", "worst_ratio", "final_gap", "escaped_at"]
    }

    fn rows(&self) -> Vec<Vec<String>> {
        self.cases
            .iter()
            .map(|c| {
                vec![
                    c.objective.to_string(),
                    c.pattern.name().to_string(),
                    c.steps.to_string(),
                    num(Some(c.eta)),
                    c.in_contract.to_string(),
                    c.violations.len().to_string(),
                    num(Some(c.worst_ratio)),
                    num(Some(c.final_gap)),
                    c.escaped_at.map_or(String::new(), |s| s.to_string()),
                ]
            })
            .collect()
    }

    fn plot(&self) -> Option<Plot> {
        None
    }
}

/// Writes `<stem>.csv` and, when the result has one, `<stem>.svg` for every entry.
pub fn emit_report(results: &[(&str, &dyn Report)], out_dir: &Path) -> std::io::Result<Vec<PathBuf>> {
    std::fs::create_dir_all(out_dir)?;
    let mut written = Vec::new();
    for (stem, result) in results {
        let mut csv = Vec::new();
        write_table(&result.header(), &result.rows(), &mut csv).map_err(std::io::Error::other)?;
        let path = out_dir.join(format!("{stem}.csv"));
        std::fs::write(&path, csv)?;
        written.push(path);
        if let Some(plot) = result.plot() {
            let path = out_dir.join(format!("{stem}.svg"));
            std::fs::write(&path, plot.render())?;
            written.push(path);
        }
    }
    Ok(written)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_sweep_writes_a_header_only_csv() {
        let empty = RegretScaling { runs: vec![], baseline_runs: vec![], fit: None, baseline_fit: None };
        let dir = tempfile::tempdir().unwrap();
        let files = emit_report(&[("regret_scaling", &empty)], dir.path()).unwrap();
        assert_eq!(files.len(), 2);
        let csv = std::fs::read_to_string(dir.path().join("regret_scaling.csv")).unwrap();
        assert_eq!(csv, "policy,T,seed,regret,final_gap,epochs,diverged\n");
    }
}
