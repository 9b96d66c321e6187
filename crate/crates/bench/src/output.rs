use std::path::Path;

use anyhow::Result;
use hyperreduce::fe::Mesh;
use nalgebra::DVector;

/// Transverse DOFs at the quarter, middle and three-quarter nodes.
pub fn monitor_dofs(mesh: &Mesh) -> Vec<(String, usize)> {
    let last = mesh.n_nodes() - 1;
    [last / 4, last / 2, 3 * last / 4]
        .into_iter()
        .filter_map(|node| mesh.dof(node, 1).map(|d| (format!("w{node}"), d)))
        .collect()
}

/// CSV with a `t` column followed by the named columns of every state.
pub fn write_trajectory_csv(
    path: impl AsRef<Path>,
    times: &[f64],
    states: &[DVector<f64>],
    columns: &[(String, usize)],
) -> Result<()> {
    if let Some(parent) = path.as_ref().parent() {
        std::fs::create_dir_all(parent)?;
    }
    let mut w = csv::Writer::from_path(path)?;
    let mut header = vec!["t".to_string()];
    header.extend(columns.iter().map(|c| c.0.clone()));
    w.write_record(&header)?;
    for (t, x) in times.iter().zip(states) {
        let mut record = vec![format!("{t:.9e}")];
        record.extend(columns.iter().map(|&(_, i)| format!("{:.9e}", x[i])));
        w.write_record(&record)?;
    }
    w.flush()?;
    Ok(())
}

/// Column names `q0, q1, ...` for reduced coordinates.
pub fn coordinate_columns(m: usize) -> Vec<(String, usize)> {
    (0..m).map(|i| (format!("q{i}"), i)).collect()
}
