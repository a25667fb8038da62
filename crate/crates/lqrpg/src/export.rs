//! CSV layouts for traces, epoch summaries, rollouts and key/value summaries.

use std::io::Write;

use lqrpg_core::online::RegretTrace;
use lqrpg_core::simulator::Rollout;

pub type CsvResult<T = ()> = Result<T, csv::Error>;

/// Plain `Display` for present values (with −0 written as 0), empty for missing ones.
pub fn num(v: Option<f64>) -> String {
    match v {
        Some(v) => format!("{}", v + 0.0),
        None => String::new(),
    }
}

/// `t,cost,epoch,subepoch,regret_partial` with `t` starting at 1.
pub fn write_trace<W: Write>(trace: &RegretTrace, out: W) -> CsvResult {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["t", "cost", "epoch", "subepoch", "regret_partial"])?;
    for t in 0..trace.costs.len() {
        w.write_record([
            (t + 1).to_string(),
            num(Some(trace.costs[t])),
            trace.epochs[t].to_string(),
            trace.subepochs[t].to_string(),
            num(Some(trace.regret_curve[t])),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// One row per epoch.
pub fn write_epochs<W: Write>(trace: &RegretTrace, out: W) -> CsvResult {
    let mut w = csv::Writer::from_writer(out);
    w.write_record([
        "j",
        "r_j",
        "m_j",
        "completed",
        "steps",
        "J_Kj",
        "grad_est_norm",
        "grad_true_norm",
        "grad_angle_deg",
    ])?;
    for e in &trace.epoch_records {
        w.write_record([
            e.j.to_string(),
            num(Some(e.radius)),
            e.planned_subepochs.to_string(),
            e.completed_subepochs().to_string(),
            e.steps.to_string(),
            num(Some(e.cost)),
            num(e.gradient.as_ref().map(|g| g.norm())),
            num(e.true_gradient.as_ref().map(|g| g.norm())),
            num(e.gradient_angle_deg()),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// `t,x0..,u0..,cost`; the final state gets a row without input or cost.
pub fn write_rollout<W: Write>(rollout: &Rollout, out: W) -> CsvResult {
    let dx = rollout.states.first().map_or(0, |x| x.len());
    let du = rollout.inputs.first().map_or(0, |u| u.len());
    let mut header = vec!["t".to_string()];
    header.extend((0..dx).map(|i| format!("x{i}")));
    header.extend((0..du).map(|i| format!("u{i}")));
    header.push("cost".into());
    let mut w = csv::Writer::from_writer(out);
    w.write_record(&header)?;
    for (t, x) in rollout.states.iter().enumerate() {
        let mut row = vec![t.to_string()];
        row.extend(x.iter().map(|v| num(Some(*v))));
        match (rollout.inputs.get(t), rollout.costs.get(t)) {
            (Some(u), Some(c)) => {
                row.extend(u.iter().map(|v| num(Some(*v))));
                row.push(num(Some(*c)));
            }
            _ => row.extend(std::iter::repeat_n(String::new(), du + 1)),
        }
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

/// `key,value` rows in the given order.
pub fn write_key_values<W: Write>(rows: &[(String, String)], out: W) -> CsvResult {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["key", "value"])?;
    for (k, v) in rows {
        w.write_record([k, v])?;
    }
    w.flush()?;
    Ok(())
}

/// Header plus rows, all cells already formatted.
pub fn write_table<W: Write>(header: &[&str], rows: &[Vec<String>], out: W) -> CsvResult {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(header)?;
    for r in rows {
        w.write_record(r)?;
    }
    w.flush()?;
    Ok(())
}
