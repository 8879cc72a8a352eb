//! CSV tables with a header row, fixed column order and 17 significant
//! digits per float.

use std::fs::File;
use std::path::Path;

use crate::error::Result;

pub const LYAPUNOV_COLUMNS: [&str; 5] = ["n", "lambda1", "lambda2", "lambda3", "residual"];
pub const PVE_COLUMNS: [&str; 6] = ["sample_id", "theta", "x1", "x2", "c_point", "worst_angle"];
pub const PVE_SCAN_COLUMNS: [&str; 3] = ["n", "c_hat", "c_hat_per_iterate"];
pub const CONES_COLUMNS: [&str; 11] = [
    "sample_id",
    "theta",
    "x1",
    "x2",
    "disjoint",
    "invariance_u",
    "invariance_cs",
    "robust_u",
    "robust_cs",
    "expansion",
    "violation",
];
pub const CENSUS_COLUMNS: [&str; 6] = ["grid_id", "theta0", "x10", "x20", "cluster_id", "sig_distance"];
pub const USTATE_COLUMNS: [&str; 7] = ["seed_id", "component", "freq", "trig", "q", "r", "value"];
pub const THM3_COLUMNS: [&str; 3] = ["sample_id", "n", "avg_logdet"];
pub const BC_COLUMNS: [&str; 5] = ["n", "r", "fraction", "ci_radius", "bound"];

/// Round-trip exact float text.
pub fn float(x: f64) -> String {
    format!("{x:.16e}")
}

pub struct Table {
    writer: csv::Writer<File>,
    width: usize,
}

impl Table {
    pub fn create(path: &Path, columns: &[&str]) -> Result<Self> {
        let mut writer = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_path(path)?;
        writer.write_record(columns)?;
        Ok(Self { writer, width: columns.len() })
    }

    pub fn row<I, S>(&mut self, fields: I) -> Result<()>
    where
        I: IntoIterator<Item = S>,
        S: AsRef<[u8]>,
    {
        let rec = csv::ByteRecord::from_iter(fields);
        debug_assert_eq!(rec.len(), self.width);
        self.writer.write_byte_record(&rec)?;
        Ok(())
    }

    pub fn finish(mut self) -> Result<()> {
        self.writer.flush()?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn floats_round_trip() {
        for x in [0.1, -0.9162907318741551, 1.0986122886681098, 6.02e23, 5e-324] {
            assert_eq!(float(x).parse::<f64>().unwrap(), x);
        }
        assert_eq!(float(1.0), "1.0000000000000000e0");
    }
}
